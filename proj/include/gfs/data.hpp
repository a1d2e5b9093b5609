#pragma once

#include "gfs/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace gfs {

// ---------------------------------------------------------------------------
// Dataset: m examples of dimension d with one real label each. Immutable
// after construction; every transform returns a new Dataset.
//
// class_ids carries the original multiclass labels (e.g. MNIST digits) so the
// same data can feed both the binarized task and the per-class sampler.
// ---------------------------------------------------------------------------
class Dataset {
public:
    Dataset(Matrix features, std::vector<double> labels,
            std::optional<std::vector<int>> class_ids = std::nullopt,
            bool normalized = false);

    std::size_t size() const noexcept { return features_.rows(); }
    std::size_t dim() const noexcept { return features_.cols(); }

    const Matrix& features() const noexcept { return features_; }
    std::span<const double> x(std::size_t i) const { return features_.row(i); }
    const std::vector<double>& labels() const noexcept { return labels_; }
    double y(std::size_t i) const { return labels_[i]; }
    const std::optional<std::vector<int>>& class_ids() const noexcept { return class_ids_; }
    bool normalized() const noexcept { return normalized_; }

    // True when every label is exactly 0.0 or 1.0.
    bool has_binary_labels() const;

    // Rows in the given order (duplicates allowed).
    Dataset select(std::span<const std::size_t> rows) const;

private:
    Matrix features_;
    std::vector<double> labels_;
    std::optional<std::vector<int>> class_ids_;
    bool normalized_ = false;
};

struct SamplingSpec {
    std::size_t target_size = 0;
    std::uint64_t seed = 0;
    bool per_class_uniform = true;
};

enum class SyntheticTask { regression, binary };

// --- IDX (MNIST) ----------------------------------------------------------

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxImages {
    std::uint32_t count = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

// Pixels are divided by 255; class_ids hold the raw label bytes and labels
// start out equal to them.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

// Inverse of the pixel scaling in load_idx (round(x * 255)).
std::vector<std::uint8_t> to_pixel_bytes(const Dataset& ds);

// --- transforms -------------------------------------------------------------

// label = 0 for class ids 0..4, 1 for 5..9.
Dataset binarize_labels(const Dataset& ds);

Dataset subsample_uniform(const Dataset& ds, const SamplingSpec& spec);

Dataset normalize_rows(const Dataset& ds);

// Standard-normal features, row-normalized. Binary labels come from the sign
// of a random linear functional; regression labels are a random linear map
// plus uniform noise in [-0.1, 0.1].
Dataset make_synthetic(std::size_t m, std::size_t d, std::uint64_t seed, SyntheticTask task);

// Seeded uniform split; the first part holds round(fraction * m) rows.
std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed);

// --- flat binary cache ------------------------------------------------------
//
//   bytes 0..7   magic "GFSDSET1"
//   u64 m, u64 d (little-endian)
//   f64 features, row-major, little-endian
//   f64 labels, little-endian
inline constexpr char kCacheMagic[8] = {'G', 'F', 'S', 'D', 'S', 'E', 'T', '1'};

void save_cache(const std::filesystem::path& path, const Dataset& ds);
Dataset load_cache(const std::filesystem::path& path);

}  // namespace gfs
