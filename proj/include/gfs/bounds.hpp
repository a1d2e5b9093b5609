#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gfs {

struct BoundParams {
    std::optional<double> c;     // convergence constant, > 0
    double zeta = 1.0;           // ζ
    std::optional<double> kappa, c1, c2;  // carried, never evaluated
    std::optional<double> gamma;          // interior ball radius, when known
    std::optional<double> L0;    // ‖f(X, Θ₀) − Y‖², unhalved
    std::optional<std::size_t> m, d, N, k, t;
    std::optional<double> loss_u1;   // measured ℓ(u_1)
    std::optional<double> diameter;  // measured D

    // Names of conditions that fail: "m > d", "N*d > m^2". Not enforced.
    std::vector<std::string> regime_warnings() const;
};

// −ln k / ln(1 − c·d/m²). Errc::rate_out_of_range unless 0 < c·d/m² < 1.
double sgd_threshold(std::size_t k, std::size_t m, std::size_t d, double c);
// −ln k / ln(1 − c·d/m). Errc::rate_out_of_range unless 0 < c·d/m < 1.
double gd_threshold(std::size_t k, std::size_t m, std::size_t d, double c);

// ℓ(u₁)/k + D²/(2k) + ((k−1)ζ/(2mk)) (1 − c·d/m²)^t L₀.
// Errc::missing_field names the first absent field.
double theorem2_bound(const BoundParams& p);

// ℓ(u₁)/k + D²/(2k) + ((k−1)/k) L_N.
double lemma1_bound(std::size_t k, double loss_u1, double diameter, double dense_loss);

struct BoundRow {
    std::size_t k = 0;
    double lemma1 = 0.0;
    double theorem2 = 0.0;  // NaN when the theorem's inputs are unavailable
    double observed = 0.0;
};

// CSV "k,lemma1_bound,theorem2_bound,observed_loss".
void write_bound_csv(std::ostream& out, std::span<const BoundRow> rows);

}  // namespace gfs
