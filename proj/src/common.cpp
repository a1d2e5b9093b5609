#include "gfs/common.hpp"

#include <charconv>

#include <cmath>
#include <cstdio>

namespace gfs {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::invalid_argument: return "invalid argument";
        case Errc::config: return "config error";
        case Errc::io: return "io error";
        case Errc::bad_magic: return "bad magic";
        case Errc::truncated: return "truncated payload";
        case Errc::count_mismatch: return "count mismatch";
        case Errc::zero_row: return "zero row";
        case Errc::missing_class_ids: return "missing class ids";
        case Errc::non_binary_labels: return "non-binary labels";
        case Errc::insufficient_population: return "insufficient class population";
        case Errc::divergence: return "divergence";
        case Errc::rate_out_of_range: return "rate factor out of range";
        case Errc::missing_field: return "missing field";
        case Errc::iteration_cap: return "iteration cap exceeded";
        case Errc::numerical: return "numerical failure";
        case Errc::invariant_violation: return "invariant violation";
    }
    return "unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, "matrix data size does not match shape");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {
std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = splitmix(base);
    for (auto p : parts) h = splitmix(h ^ splitmix(p));
    return h;
}

}  // namespace gfs
