#include "gfs/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace gfs {

void TrainConfig::validate(std::size_t m) const {
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, "learning_rate must be finite and nonnegative");
    require(batch_size >= 1 && batch_size <= m, "batch_size must lie in [1, m]");
    require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
    require(weight_decay >= 0.0, "weight_decay must be nonnegative");
    require(record_every >= 1, "record_every must be at least 1");
}

TrainConfig theory_train_config() {
    TrainConfig cfg;
    cfg.batch_size = 1;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    cfg.criterion = Criterion::l2;
    return cfg;
}

TrainConfig empirical_train_config() {
    TrainConfig cfg;
    cfg.batch_size = 128;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0;
    cfg.criterion = Criterion::bce;
    return cfg;
}

TwoLayerNet init_weights(std::size_t n, std::size_t d, std::uint64_t seed, ActivationSpec activation,
                         OutputHead head) {
    require(n >= 1 && d >= 1, "init_weights needs N >= 1 and d >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    TwoLayerNet net;
    net.outer.resize(n);
    net.inner = Matrix(n, d);
    for (double& v : net.outer) v = gauss(rng);
    for (double& v : net.inner.data()) v = gauss(rng);
    net.activation = activation;
    net.head = head;
    return net;
}

namespace {

constexpr double kDivergenceLimit = 1e12;

void check_finite_loss(double loss, std::size_t iteration) {
    if (!std::isfinite(loss) || std::abs(loss) > kDivergenceLimit) {
        fail(Errc::divergence, "loss diverged at iteration " + std::to_string(iteration) +
                                   " (value " + format_real(loss) + "); lower the learning rate");
    }
}

// Hands out batches either as consecutive chunks of per-epoch permutations or
// as i.i.d. draws.
class BatchSampler {
public:
    BatchSampler(std::size_t m, std::size_t batch, std::uint64_t seed, bool with_replacement)
        : m_(m), batch_(batch), with_replacement_(with_replacement), rng_(seed), order_(m) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        cursor_ = m_;
    }

    const std::vector<std::size_t>& next() {
        current_.clear();
        if (with_replacement_) {
            std::uniform_int_distribution<std::size_t> pick(0, m_ - 1);
            for (std::size_t b = 0; b < batch_; ++b) current_.push_back(pick(rng_));
            return current_;
        }
        if (cursor_ >= m_) {
            std::shuffle(order_.begin(), order_.end(), rng_);
            cursor_ = 0;
        }
        const std::size_t end = std::min(m_, cursor_ + batch_);
        current_.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                        order_.begin() + static_cast<std::ptrdiff_t>(end));
        cursor_ = end;
        return current_;
    }

private:
    std::size_t m_;
    std::size_t batch_;
    bool with_replacement_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> current_;
    std::size_t cursor_;
};

TracePoint measure(const TwoLayerNet& net, const Dataset& ds, Criterion criterion, std::size_t iteration,
                   bool binary) {
    TracePoint p;
    p.iteration = iteration;
    p.loss = dataset_loss(net, ds, criterion);
    p.accuracy = binary ? accuracy(net, ds) : std::numeric_limits<double>::quiet_NaN();
    check_finite_loss(p.loss, iteration);
    return p;
}

}  // namespace

TrainTrace train(TwoLayerNet net, const Dataset& ds, const TrainConfig& cfg, const CheckpointHook& hook) {
    net.validate();
    require(net.input_dim() == ds.dim(), "network input dimension does not match the dataset");
    cfg.validate(ds.size());
    const bool binary = ds.has_binary_labels();

    TrainTrace trace;
    trace.checkpoints.push_back(measure(net, ds, cfg.criterion, 0, binary));
    trace.initial_loss = trace.checkpoints.front().loss;
    if (hook) hook(0, net);

    const std::size_t n = net.width();
    std::vector<double> vel_outer(n, 0.0);
    std::vector<double> vel_inner(net.inner.data().size(), 0.0);
    BatchSampler sampler(ds.size(), cfg.batch_size, cfg.seed, cfg.with_replacement);

    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        const auto& batch = sampler.next();
        const Gradient g = gradient(net, ds, batch, cfg.criterion);

        for (std::size_t i = 0; i < n; ++i) {
            vel_outer[i] = cfg.momentum * vel_outer[i] + g.outer[i] + cfg.weight_decay * net.outer[i];
            net.outer[i] -= cfg.learning_rate * vel_outer[i];
        }
        auto& w = net.inner.data();
        const auto& gw = g.inner.data();
        for (std::size_t k = 0; k < w.size(); ++k) {
            vel_inner[k] = cfg.momentum * vel_inner[k] + gw[k] + cfg.weight_decay * w[k];
            w[k] -= cfg.learning_rate * vel_inner[k];
        }
        if (!std::isfinite(net.outer[0]) || !std::isfinite(w[0])) {
            fail(Errc::divergence, "weights became non-finite at iteration " + std::to_string(it) +
                                       "; lower the learning rate");
        }

        if (it % cfg.record_every == 0 || it == cfg.iterations) {
            trace.checkpoints.push_back(measure(net, ds, cfg.criterion, it, binary));
            if (hook) hook(it, net);
        }
    }
    trace.final_net = std::move(net);
    return trace;
}

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
    out << "iteration,loss,accuracy\n";
    for (const auto& p : trace.checkpoints) {
        out << p.iteration << ',' << format_real(p.loss) << ',' << format_real(p.accuracy) << '\n';
    }
}

DecayFit fit_decay(std::span<const double> iterations, std::span<const double> losses) {
    require(iterations.size() == losses.size(), "fit_decay needs one loss per iteration");
    require(losses.size() >= 3, "fit_decay needs at least 3 checkpoints");
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (!(losses[i] > 0.0)) {
            fail(Errc::invalid_argument, "nonpositive loss at checkpoint " + std::to_string(i));
        }
    }
    const double n = static_cast<double>(losses.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        mx += iterations[i];
        my += std::log(losses[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        const double dx = iterations[i] - mx;
        const double dy = std::log(losses[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    require(sxx > 0.0, "fit_decay needs distinct iterations");

    DecayFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.rho = std::clamp(std::exp(fit.slope), std::numeric_limits<double>::min(), 1.0);
    return fit;
}

DecayFit fit_decay(const TrainTrace& trace) {
    std::vector<double> its, losses;
    for (const auto& p : trace.checkpoints) {
        its.push_back(static_cast<double>(p.iteration));
        losses.push_back(p.loss);
    }
    return fit_decay(its, losses);
}

double fit_decay_rate(const TrainTrace& trace) { return fit_decay(trace).rho; }

double estimate_c(double rho, std::size_t m, std::size_t d, RateMode mode) {
    if (!(rho > 0.0 && rho < 1.0)) {
        fail(Errc::rate_out_of_range, "decay rate " + format_real(rho) + " lies outside (0, 1)");
    }
    require(m >= 1 && d >= 1, "estimate_c needs m, d >= 1");
    const double md = static_cast<double>(m);
    const double scale = mode == RateMode::sgd ? md * md : md;
    return (1.0 - rho) * scale / static_cast<double>(d);
}

}  // namespace gfs
