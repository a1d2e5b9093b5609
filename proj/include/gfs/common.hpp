#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfs {

// ---------------------------------------------------------------------------
// Errors. Every failure surfaces as gfs::Error; the code tells callers (and
// the CLI exit-code mapping) which family it belongs to.
// ---------------------------------------------------------------------------
enum class Errc {
    invalid_argument,   // precondition violated by the caller
    config,             // malformed or inconsistent configuration
    io,                 // file cannot be opened / written
    bad_magic,
    truncated,
    count_mismatch,
    zero_row,
    missing_class_ids,
    non_binary_labels,
    insufficient_population,
    divergence,         // non-finite or exploding loss during training
    rate_out_of_range,
    missing_field,
    iteration_cap,      // simplex exceeded its pivot budget
    numerical,
    invariant_violation // a proved inequality or identity failed
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(Errc::invalid_argument, what);
}

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles. Deliberately minimal: the library only
// needs row access, element access and a few shape queries.
// ---------------------------------------------------------------------------
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

// Round-trippable decimal form used by every CSV writer (17 significant digits).
std::string format_real(double v);

// Deterministic 64-bit seed mixing (splitmix64 finalizer over a running hash).
std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

}  // namespace gfs
