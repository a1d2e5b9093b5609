#include "gfs/model.hpp"

#include "binio.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace gfs {

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

double sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

double ActivationSpec::derivative_bound() const {
    switch (kind) {
        case ActivationKind::sigmoid: return 1.0;
        case ActivationKind::tanh: return 2.0;
        case ActivationKind::relu: return std::numeric_limits<double>::infinity();
    }
    return std::numeric_limits<double>::infinity();
}

double ActivationSpec::value(double h) const {
    switch (kind) {
        case ActivationKind::sigmoid: return sigmoid(h);
        case ActivationKind::tanh: return std::tanh(h);
        case ActivationKind::relu: return h > 0.0 ? h : 0.0;
    }
    return 0.0;
}

double ActivationSpec::derivative(double h) const {
    switch (kind) {
        case ActivationKind::sigmoid: {
            const double s = sigmoid(h);
            return s * (1.0 - s);
        }
        case ActivationKind::tanh: {
            const double t = std::tanh(h);
            return 1.0 - t * t;
        }
        case ActivationKind::relu: return h > 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

ActivationKind parse_activation(std::string_view name) {
    if (name == "sigmoid") return ActivationKind::sigmoid;
    if (name == "tanh") return ActivationKind::tanh;
    if (name == "relu") return ActivationKind::relu;
    fail(Errc::config, "unknown activation '" + std::string(name) + "'");
}

OutputHead parse_head(std::string_view name) {
    if (name == "linear") return OutputHead::linear;
    if (name == "sigmoid") return OutputHead::sigmoid;
    fail(Errc::config, "unknown output head '" + std::string(name) + "'");
}

Criterion parse_criterion(std::string_view name) {
    if (name == "l2") return Criterion::l2;
    if (name == "bce") return Criterion::bce;
    fail(Errc::config, "unknown criterion '" + std::string(name) + "'");
}

std::string_view to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::sigmoid: return "sigmoid";
        case ActivationKind::tanh: return "tanh";
        case ActivationKind::relu: return "relu";
    }
    return "?";
}

std::string_view to_string(OutputHead head) { return head == OutputHead::linear ? "linear" : "sigmoid"; }
std::string_view to_string(Criterion c) { return c == Criterion::l2 ? "l2" : "bce"; }

// ---------------------------------------------------------------------------
// Network evaluation
// ---------------------------------------------------------------------------

void TwoLayerNet::validate() const {
    require(width() >= 1, "network width must be at least 1");
    require(inner.rows() == width(), "inner row count must equal width");
    require(inner.cols() >= 1, "input dimension must be at least 1");
    for (double v : outer) require(std::isfinite(v), "non-finite outer weight");
    for (double v : inner.data()) require(std::isfinite(v), "non-finite inner weight");
}

double neuron_activation(const TwoLayerNet& net, std::size_t i, std::span<const double> x) {
    require(i < net.width(), "neuron index " + std::to_string(i) + " out of range");
    require(x.size() == net.input_dim(), "input length does not match the network");
    return net.outer[i] * net.activation.value(dot(net.inner.row(i), x));
}

double apply_head(OutputHead head, double v) { return head == OutputHead::sigmoid ? sigmoid(v) : v; }

double pre_head(const TwoLayerNet& net, std::span<const double> x) {
    require(x.size() == net.input_dim(), "input length does not match the network");
    double s = 0.0;
    for (std::size_t i = 0; i < net.width(); ++i) s += net.outer[i] * net.activation.value(dot(net.inner.row(i), x));
    return s / static_cast<double>(net.width());
}

double forward(const TwoLayerNet& net, std::span<const double> x) { return apply_head(net.head, pre_head(net, x)); }

double forward_pruned_pre_head(const TwoLayerNet& net, const Multiset& counts, std::span<const double> x) {
    require(counts.size() == net.width(), "multiset must have one count per neuron");
    require(x.size() == net.input_dim(), "input length does not match the network");
    std::size_t total = 0;
    double s = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        total += counts[i];
        s += static_cast<double>(counts[i]) * net.outer[i] * net.activation.value(dot(net.inner.row(i), x));
    }
    require(total > 0, "pruned forward pass needs a nonempty multiset");
    return s / static_cast<double>(total);
}

double forward_pruned(const TwoLayerNet& net, const Multiset& counts, std::span<const double> x) {
    return apply_head(net.head, forward_pruned_pre_head(net, counts, x));
}

ActivationMatrix activation_matrix(const TwoLayerNet& net, const Dataset& ds) {
    require(net.input_dim() == ds.dim(), "network input dimension does not match the dataset");
    const std::size_t n = net.width();
    const std::size_t m = ds.size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    ActivationMatrix am{Matrix(n, m), std::vector<double>(m)};
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = net.inner.row(i);
        const double b = net.outer[i];
        auto out = am.phi.row(i);
        for (std::size_t j = 0; j < m; ++j) out[j] = b * net.activation.value(dot(a, ds.x(j))) * scale;
    }
    for (std::size_t j = 0; j < m; ++j) am.y[j] = ds.y(j) * scale;
    return am;
}

double l2_loss(std::span<const double> z, std::span<const double> y) {
    require(z.size() == y.size(), "l2_loss length mismatch");
    return 0.5 * squared_distance(z, y);
}

// ---------------------------------------------------------------------------
// Losses and gradients
// ---------------------------------------------------------------------------

namespace {

void check_criterion(const TwoLayerNet& net, const Dataset& ds, Criterion criterion) {
    require(net.input_dim() == ds.dim(), "network input dimension does not match the dataset");
    if (criterion == Criterion::bce) {
        require(net.head == OutputHead::sigmoid, "bce requires the sigmoid output head");
        if (!ds.has_binary_labels()) fail(Errc::non_binary_labels, "bce requires labels in {0, 1}");
    }
}

// log(1 + e^v) without overflow.
double softplus(double v) { return (v > 0.0 ? v : 0.0) + std::log1p(std::exp(-std::abs(v))); }

double example_loss(OutputHead head, Criterion criterion, double pre, double y) {
    if (criterion == Criterion::bce) return softplus(pre) - y * pre;
    const double r = apply_head(head, pre) - y;
    return 0.5 * r * r;
}

// ∂(example loss)/∂(pre-head output)
double example_dloss(OutputHead head, Criterion criterion, double pre, double y) {
    if (criterion == Criterion::bce) return sigmoid(pre) - y;
    if (head == OutputHead::sigmoid) {
        const double p = sigmoid(pre);
        return (p - y) * p * (1.0 - p);
    }
    return pre - y;
}

std::vector<std::size_t> all_rows(std::size_t m) {
    std::vector<std::size_t> rows(m);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

}  // namespace

double dataset_loss(const TwoLayerNet& net, const Dataset& ds, Criterion criterion) {
    check_criterion(net, ds, criterion);
    double total = 0.0;
    for (std::size_t j = 0; j < ds.size(); ++j) total += example_loss(net.head, criterion, pre_head(net, ds.x(j)), ds.y(j));
    return total / static_cast<double>(ds.size());
}

double batch_loss(const TwoLayerNet& net, const Dataset& ds, std::span<const std::size_t> batch,
                  Criterion criterion) {
    check_criterion(net, ds, criterion);
    require(!batch.empty(), "batch must be nonempty");
    double total = 0.0;
    for (std::size_t j : batch) total += example_loss(net.head, criterion, pre_head(net, ds.x(j)), ds.y(j));
    return total / static_cast<double>(batch.size());
}

Gradient gradient(const TwoLayerNet& net, const Dataset& ds, std::span<const std::size_t> batch,
                  Criterion criterion) {
    check_criterion(net, ds, criterion);
    require(!batch.empty(), "batch must be nonempty");
    const std::size_t n = net.width();
    const std::size_t d = net.input_dim();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    Gradient g{std::vector<double>(n, 0.0), Matrix(n, d)};
    std::vector<double> h(n);
    std::vector<double> s(n);
    for (std::size_t j : batch) {
        const auto x = ds.x(j);
        double pre = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            h[i] = dot(net.inner.row(i), x);
            s[i] = net.activation.value(h[i]);
            pre += net.outer[i] * s[i];
        }
        pre *= inv_n;
        const double delta = example_dloss(net.head, criterion, pre, ds.y(j)) * inv_b * inv_n;
        if (delta == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            g.outer[i] += delta * s[i];
            const double coef = delta * net.outer[i] * net.activation.derivative(h[i]);
            if (coef == 0.0) continue;
            auto row = g.inner.row(i);
            for (std::size_t c = 0; c < d; ++c) row[c] += coef * x[c];
        }
    }
    return g;
}

Gradient gradient(const TwoLayerNet& net, const Dataset& ds, Criterion criterion) {
    const auto rows = all_rows(ds.size());
    return gradient(net, ds, rows, criterion);
}

double accuracy(const TwoLayerNet& net, const Dataset& ds, const Multiset* subnet) {
    require(net.input_dim() == ds.dim(), "network input dimension does not match the dataset");
    if (!ds.has_binary_labels()) fail(Errc::non_binary_labels, "accuracy requires labels in {0, 1}");
    // sigmoid(pre) > 0.5 exactly when pre > 0.
    const double threshold = net.head == OutputHead::sigmoid ? 0.0 : 0.5;
    std::size_t correct = 0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        const double pre = subnet ? forward_pruned_pre_head(net, *subnet, ds.x(j)) : pre_head(net, ds.x(j));
        const bool positive = pre > threshold;
        if (positive == (ds.y(j) == 1.0)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

double residual_sq_norm(const TwoLayerNet& net, const Dataset& ds) {
    require(net.input_dim() == ds.dim(), "network input dimension does not match the dataset");
    double s = 0.0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        const double r = forward(net, ds.x(j)) - ds.y(j);
        s += r * r;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const TwoLayerNet& net) {
    net.validate();
    std::vector<std::uint8_t> out{'P', '2', 'L', 'N'};
    detail::store_le(out, kCheckpointVersion, 4);
    detail::store_le(out, net.width(), 8);
    detail::store_le(out, net.input_dim(), 8);
    out.push_back(static_cast<std::uint8_t>(net.activation.kind));
    out.push_back(static_cast<std::uint8_t>(net.head));
    for (double v : net.outer) detail::store_le_f64(out, v);
    for (double v : net.inner.data()) detail::store_le_f64(out, v);
    detail::write_file(path, out);
}

TwoLayerNet load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    const std::string name = path.string();
    detail::LeReader in(bytes, name);
    if (std::memcmp(in.raw(4), "P2LN", 4) != 0) fail(Errc::bad_magic, "bad magic in " + name);
    const auto version = in.read(4);
    if (version != kCheckpointVersion) fail(Errc::bad_magic, "unsupported checkpoint version in " + name);
    const std::uint64_t n = in.read(8);
    const std::uint64_t d = in.read(8);
    const auto kind = in.read(1);
    const auto head = in.read(1);
    if (kind > 2 || head > 1) fail(Errc::bad_magic, "unknown activation or head byte in " + name);
    if (n == 0 || d == 0 || n > in.remaining() / 8 || d > in.remaining() / 8 / n) {
        fail(Errc::truncated, "truncated payload in " + name);
    }
    in.need((n + n * d) * 8);

    TwoLayerNet net;
    net.activation.kind = static_cast<ActivationKind>(kind);
    net.head = static_cast<OutputHead>(head);
    net.outer.resize(n);
    for (double& v : net.outer) v = in.read_f64();
    net.inner = Matrix(n, d);
    for (double& v : net.inner.data()) v = in.read_f64();
    net.validate();
    return net;
}

}  // namespace gfs
