#pragma once

#include "gfs/common.hpp"
#include "gfs/data.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gfs {

enum class ActivationKind : std::uint8_t { sigmoid = 0, tanh = 1, relu = 2 };
enum class OutputHead : std::uint8_t { linear = 0, sigmoid = 1 };
enum class Criterion { l2, bce };

// Hidden activation σ₊ plus the bound δ on |σ₊'| and |σ₊''|.
// sigmoid: δ = 1 (actual maxima 1/4 and ~0.0962); tanh: δ = 2 (1 and ~0.770);
// relu has no bounded second derivative and is rejected in theory mode.
struct ActivationSpec {
    ActivationKind kind = ActivationKind::sigmoid;

    double derivative_bound() const;
    bool smooth() const noexcept { return kind != ActivationKind::relu; }

    double value(double h) const;
    double derivative(double h) const;  // relu: subgradient 0 at 0
};

double sigmoid(double v);

ActivationKind parse_activation(std::string_view name);
OutputHead parse_head(std::string_view name);
Criterion parse_criterion(std::string_view name);
std::string_view to_string(ActivationKind kind);
std::string_view to_string(OutputHead head);
std::string_view to_string(Criterion c);

// ---------------------------------------------------------------------------
// f(x) = head( (1/N) Σ_i b_i σ₊(a_i · x) )
// outer holds the b_i, row i of inner holds a_i.
// ---------------------------------------------------------------------------
struct TwoLayerNet {
    std::vector<double> outer;
    Matrix inner;
    ActivationSpec activation;
    OutputHead head = OutputHead::linear;

    std::size_t width() const noexcept { return outer.size(); }
    std::size_t input_dim() const noexcept { return inner.cols(); }

    // Throws if shapes disagree or any weight is non-finite.
    void validate() const;

    friend bool operator==(const TwoLayerNet& a, const TwoLayerNet& b) {
        return a.outer == b.outer && a.inner == b.inner && a.activation.kind == b.activation.kind &&
               a.head == b.head;
    }
};

// Neuron multiset S as a multiplicity vector over [0, N).
using Multiset = std::vector<std::size_t>;

double neuron_activation(const TwoLayerNet& net, std::size_t i, std::span<const double> x);

// Mean of neuron activations before the output head.
double pre_head(const TwoLayerNet& net, std::span<const double> x);
double apply_head(OutputHead head, double v);

double forward(const TwoLayerNet& net, std::span<const double> x);

// Multiplicity-weighted mean over S, then the head. |S| is the total count.
double forward_pruned_pre_head(const TwoLayerNet& net, const Multiset& counts, std::span<const double> x);
double forward_pruned(const TwoLayerNet& net, const Multiset& counts, std::span<const double> x);

// Φ_i = [b_i σ₊(a_i·x⁽¹⁾), …, b_i σ₊(a_i·x⁽ᵐ⁾)] / √m  and  y = labels / √m.
// The output head is never applied here.
struct ActivationMatrix {
    Matrix phi;             // N × m
    std::vector<double> y;  // m

    std::size_t neurons() const noexcept { return phi.rows(); }
    std::size_t examples() const noexcept { return phi.cols(); }
};

ActivationMatrix activation_matrix(const TwoLayerNet& net, const Dataset& ds);

// ½‖z − y‖²
double l2_loss(std::span<const double> z, std::span<const double> y);

// Mean loss over the dataset: (1/2m) Σ (f(x) − y)² for l2, mean binary
// cross entropy for bce.
double dataset_loss(const TwoLayerNet& net, const Dataset& ds, Criterion criterion);

// Same shape as the weights.
struct Gradient {
    std::vector<double> outer;
    Matrix inner;
};

// Exact gradient of the mean loss over the given rows of ds.
Gradient gradient(const TwoLayerNet& net, const Dataset& ds, std::span<const std::size_t> batch,
                  Criterion criterion);
Gradient gradient(const TwoLayerNet& net, const Dataset& ds, Criterion criterion);

// Mean loss over the given rows; shares the evaluation path of `gradient`.
double batch_loss(const TwoLayerNet& net, const Dataset& ds, std::span<const std::size_t> batch,
                  Criterion criterion);

// Fraction of rows classified correctly against {0, 1} labels. The output is
// thresholded at 0.5 for either head. With `subnet` set, the pruned forward pass is used.
double accuracy(const TwoLayerNet& net, const Dataset& ds, const Multiset* subnet = nullptr);

// ‖f(X, Θ) − Y‖² (unhalved, unnormalized), the L₀ convention of the bounds.
double residual_sq_norm(const TwoLayerNet& net, const Dataset& ds);

// --- checkpoint -----------------------------------------------------------
//
//   bytes 0..3  magic "P2LN"
//   u32 version (1), u64 N, u64 d
//   u8 activation kind, u8 head
//   f64 outer[N], then f64 inner[N*d] row-major; all little-endian
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const TwoLayerNet& net);
TwoLayerNet load_checkpoint(const std::filesystem::path& path);

}  // namespace gfs
