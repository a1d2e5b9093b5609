#include "gfs/data.hpp"

#include "binio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <random>

namespace gfs {

Dataset::Dataset(Matrix features, std::vector<double> labels,
                 std::optional<std::vector<int>> class_ids, bool normalized)
    : features_(std::move(features)), labels_(std::move(labels)),
      class_ids_(std::move(class_ids)), normalized_(normalized) {
    require(features_.rows() >= 1 && features_.cols() >= 1, "dataset needs m >= 1 and d >= 1");
    require(labels_.size() == features_.rows(), "feature row count must equal label count");
    if (class_ids_) require(class_ids_->size() == labels_.size(), "class id count must equal label count");
    if (normalized_) {
        for (std::size_t i = 0; i < size(); ++i) {
            require(std::abs(std::sqrt(squared_norm(x(i))) - 1.0) <= 1e-9,
                    "row " + std::to_string(i) + " is flagged normalized but is not unit norm");
        }
    }
}

bool Dataset::has_binary_labels() const {
    return std::all_of(labels_.begin(), labels_.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
    require(!rows.empty(), "selection must be nonempty");
    Matrix f(rows.size(), dim());
    std::vector<double> y(rows.size());
    std::optional<std::vector<int>> ids;
    if (class_ids_) ids.emplace(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        require(rows[r] < size(), "row index out of range");
        std::ranges::copy(x(rows[r]), f.row(r).begin());
        y[r] = labels_[rows[r]];
        if (ids) (*ids)[r] = (*class_ids_)[rows[r]];
    }
    return Dataset(std::move(f), std::move(y), std::move(ids), normalized_);
}

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

IdxImages read_idx_images(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    const std::string name = path.string();
    if (bytes.size() < 16) fail(Errc::truncated, "truncated header in " + name);
    if (detail::load_be32(bytes.data()) != kIdxImagesMagic) fail(Errc::bad_magic, "bad magic in " + name);

    IdxImages img;
    img.count = detail::load_be32(bytes.data() + 4);
    img.rows = detail::load_be32(bytes.data() + 8);
    img.cols = detail::load_be32(bytes.data() + 12);
    const std::size_t payload = std::size_t{img.count} * img.rows * img.cols;
    if (bytes.size() - 16 < payload) fail(Errc::truncated, "truncated payload in " + name);
    img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
    return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    const std::string name = path.string();
    if (bytes.size() < 8) fail(Errc::truncated, "truncated header in " + name);
    if (detail::load_be32(bytes.data()) != kIdxLabelsMagic) fail(Errc::bad_magic, "bad magic in " + name);
    const std::size_t n = detail::load_be32(bytes.data() + 4);
    if (bytes.size() - 8 < n) fail(Errc::truncated, "truncated payload in " + name);
    return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
    require(images.pixels.size() == std::size_t{images.count} * images.rows * images.cols,
            "pixel buffer does not match the IDX header");
    std::vector<std::uint8_t> out;
    out.reserve(16 + images.pixels.size());
    detail::store_be32(out, kIdxImagesMagic);
    detail::store_be32(out, images.count);
    detail::store_be32(out, images.rows);
    detail::store_be32(out, images.cols);
    out.insert(out.end(), images.pixels.begin(), images.pixels.end());
    detail::write_file(path, out);
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    detail::store_be32(out, kIdxLabelsMagic);
    detail::store_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    detail::write_file(path, out);
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const IdxImages img = read_idx_images(images_path);
    const auto raw_labels = read_idx_labels(labels_path);
    if (raw_labels.size() != img.count) {
        fail(Errc::count_mismatch, "count mismatch: " + images_path.string() + " holds " +
                                       std::to_string(img.count) + " images but " +
                                       labels_path.string() + " holds " +
                                       std::to_string(raw_labels.size()) + " labels");
    }
    const std::size_t d = std::size_t{img.rows} * img.cols;
    Matrix f(img.count, d);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) f.data()[i] = img.pixels[i] / 255.0;
    std::vector<double> y(raw_labels.begin(), raw_labels.end());
    std::vector<int> ids(raw_labels.begin(), raw_labels.end());
    return Dataset(std::move(f), std::move(y), std::move(ids));
}

std::vector<std::uint8_t> to_pixel_bytes(const Dataset& ds) {
    std::vector<std::uint8_t> out(ds.features().data().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = std::clamp(std::round(ds.features().data()[i] * 255.0), 0.0, 255.0);
        out[i] = static_cast<std::uint8_t>(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

Dataset binarize_labels(const Dataset& ds) {
    if (!ds.class_ids()) fail(Errc::missing_class_ids, "binarize_labels needs class ids");
    std::vector<double> y(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int c = (*ds.class_ids())[i];
        require(c >= 0 && c <= 9, "class id outside [0, 9] at row " + std::to_string(i));
        y[i] = c < 5 ? 0.0 : 1.0;
    }
    return Dataset(ds.features(), std::move(y), ds.class_ids(), ds.normalized());
}

Dataset subsample_uniform(const Dataset& ds, const SamplingSpec& spec) {
    require(spec.target_size >= 1, "target_size must be positive");
    require(spec.target_size <= ds.size(), "target_size exceeds the source dataset");
    std::mt19937_64 rng(spec.seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(spec.target_size);

    if (spec.per_class_uniform) {
        if (!ds.class_ids()) fail(Errc::missing_class_ids, "per-class sampling needs class ids");
        std::map<int, std::vector<std::size_t>> members;
        for (std::size_t i = 0; i < ds.size(); ++i) members[(*ds.class_ids())[i]].push_back(i);
        const std::size_t classes = members.size();
        if (spec.target_size % classes != 0) {
            fail(Errc::invalid_argument, "target_size " + std::to_string(spec.target_size) +
                                             " is not divisible by " + std::to_string(classes) + " classes");
        }
        const std::size_t per_class = spec.target_size / classes;
        for (auto& [cls, rows] : members) {
            if (rows.size() < per_class) {
                fail(Errc::insufficient_population,
                     "class " + std::to_string(cls) + " has " + std::to_string(rows.size()) +
                         " examples, need " + std::to_string(per_class));
            }
            std::shuffle(rows.begin(), rows.end(), rng);
            chosen.insert(chosen.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(per_class));
        }
    } else {
        std::vector<std::size_t> all(ds.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::shuffle(all.begin(), all.end(), rng);
        chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.target_size));
    }
    std::ranges::sort(chosen);
    return ds.select(chosen);
}

Dataset normalize_rows(const Dataset& ds) {
    Matrix f = ds.features();
    for (std::size_t i = 0; i < f.rows(); ++i) {
        auto row = f.row(i);
        const double norm = std::sqrt(squared_norm(row));
        if (norm == 0.0) fail(Errc::zero_row, "zero row at index " + std::to_string(i));
        for (double& v : row) v /= norm;
    }
    return Dataset(std::move(f), ds.labels(), ds.class_ids(), true);
}

Dataset make_synthetic(std::size_t m, std::size_t d, std::uint64_t seed, SyntheticTask task) {
    require(m >= 1 && d >= 1, "make_synthetic needs m >= 1 and d >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix f(m, d);
    for (double& v : f.data()) v = gauss(rng);
    std::vector<double> w(d);
    for (double& v : w) v = gauss(rng);

    // Regenerate any (vanishingly unlikely) all-zero row so normalization is defined.
    for (std::size_t i = 0; i < m; ++i) {
        while (squared_norm(f.row(i)) == 0.0) {
            for (double& v : f.row(i)) v = gauss(rng);
        }
    }
    Dataset raw(std::move(f), std::vector<double>(m, 0.0));
    Dataset unit = normalize_rows(raw);

    std::vector<double> y(m);
    std::optional<std::vector<int>> ids;
    if (task == SyntheticTask::binary) {
        ids.emplace(m);
        for (std::size_t i = 0; i < m; ++i) {
            y[i] = dot(w, unit.x(i)) > 0.0 ? 1.0 : 0.0;
            (*ids)[i] = static_cast<int>(y[i]);
        }
    } else {
        std::uniform_real_distribution<double> noise(-0.1, 0.1);
        for (std::size_t i = 0; i < m; ++i) y[i] = dot(w, unit.x(i)) + noise(rng);
    }
    return Dataset(unit.features(), std::move(y), std::move(ids), true);
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed) {
    require(fraction > 0.0 && fraction < 1.0, "split fraction must lie in (0, 1)");
    const auto first = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size())));
    require(first >= 1 && first < ds.size(), "split leaves an empty part");
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> a(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(first));
    std::vector<std::size_t> b(idx.begin() + static_cast<std::ptrdiff_t>(first), idx.end());
    std::ranges::sort(a);
    std::ranges::sort(b);
    return {ds.select(a), ds.select(b)};
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

void save_cache(const std::filesystem::path& path, const Dataset& ds) {
    std::vector<std::uint8_t> out(std::begin(kCacheMagic), std::end(kCacheMagic));
    detail::store_le(out, ds.size(), 8);
    detail::store_le(out, ds.dim(), 8);
    for (double v : ds.features().data()) detail::store_le_f64(out, v);
    for (double v : ds.labels()) detail::store_le_f64(out, v);
    detail::write_file(path, out);
}

Dataset load_cache(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::LeReader in(bytes, path.string());
    if (std::memcmp(in.raw(8), kCacheMagic, 8) != 0) fail(Errc::bad_magic, "bad magic in " + path.string());
    const std::uint64_t m = in.read(8);
    const std::uint64_t d = in.read(8);
    if (m == 0 || d == 0 || m > in.remaining() / 8 || d > in.remaining() / 8 / m) {
        fail(Errc::truncated, "truncated payload in " + path.string());
    }
    in.need((m * d + m) * 8);
    Matrix f(m, d);
    for (double& v : f.data()) v = in.read_f64();
    std::vector<double> y(m);
    for (double& v : y) v = in.read_f64();
    return Dataset(std::move(f), std::move(y));
}

}  // namespace gfs
