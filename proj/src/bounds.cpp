#include "gfs/bounds.hpp"

#include "gfs/common.hpp"

#include <cmath>
#include <ostream>

namespace gfs {

std::vector<std::string> BoundParams::regime_warnings() const {
    std::vector<std::string> out;
    if (m && d && !(*m > *d)) out.emplace_back("m > d");
    if (m && d && N && !(static_cast<double>(*N) * static_cast<double>(*d) > static_cast<double>(*m) * static_cast<double>(*m)))
        out.emplace_back("N*d > m^2");
    return out;
}

namespace {

double threshold(std::size_t k, double factor) {
    require(k >= 1, "threshold needs k >= 1");
    if (!(factor > 0.0 && factor < 1.0)) {
        fail(Errc::rate_out_of_range, "rate factor out of range: c*d/m^p = " + format_real(factor));
    }
    return -std::log(static_cast<double>(k)) / std::log1p(-factor);
}

template <class T>
T need(const std::optional<T>& v, const char* name) {
    if (!v) fail(Errc::missing_field, std::string("bound parameter '") + name + "' is missing");
    return *v;
}

}  // namespace

double sgd_threshold(std::size_t k, std::size_t m, std::size_t d, double c) {
    require(m >= 1 && d >= 1, "threshold needs m, d >= 1");
    const double md = static_cast<double>(m);
    return threshold(k, c * static_cast<double>(d) / (md * md));
}

double gd_threshold(std::size_t k, std::size_t m, std::size_t d, double c) {
    require(m >= 1 && d >= 1, "threshold needs m, d >= 1");
    return threshold(k, c * static_cast<double>(d) / static_cast<double>(m));
}

double theorem2_bound(const BoundParams& p) {
    const double loss_u1 = need(p.loss_u1, "loss_u1");
    const double diam = need(p.diameter, "diameter");
    const double c = need(p.c, "c");
    const double l0 = need(p.L0, "L0");
    const std::size_t m = need(p.m, "m");
    const std::size_t d = need(p.d, "d");
    const std::size_t k = need(p.k, "k");
    const std::size_t t = need(p.t, "t");
    require(k >= 1, "theorem2_bound needs k >= 1");
    require(c > 0.0, "c must be positive");
    require(p.zeta > 0.0, "zeta must be positive");

    const double kd = static_cast<double>(k);
    const double md = static_cast<double>(m);
    const double factor = 1.0 - c * static_cast<double>(d) / (md * md);
    const double decay = std::pow(factor, static_cast<double>(t));
    return loss_u1 / kd + diam * diam / (2.0 * kd) + (kd - 1.0) * p.zeta / (2.0 * md * kd) * decay * l0;
}

double lemma1_bound(std::size_t k, double loss_u1, double diameter, double dense_loss) {
    require(k >= 1, "lemma1_bound needs k >= 1");
    const double kd = static_cast<double>(k);
    return loss_u1 / kd + diameter * diameter / (2.0 * kd) + (kd - 1.0) / kd * dense_loss;
}

void write_bound_csv(std::ostream& out, std::span<const BoundRow> rows) {
    out << "k,lemma1_bound,theorem2_bound,observed_loss\n";
    for (const auto& r : rows) {
        out << r.k << ',' << format_real(r.lemma1) << ',' << format_real(r.theorem2) << ','
            << format_real(r.observed) << '\n';
    }
}

}  // namespace gfs
