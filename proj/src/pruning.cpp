#include "gfs/pruning.hpp"

#include "gfs/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace gfs {

void PruneConfig::validate(std::size_t m) const {
    require(iterations >= 1, "prune iterations must be at least 1");
    if (selection == SelectionMode::minibatch) {
        require(batch_size >= 1 && batch_size <= m, "prune batch_size must lie in [1, m]");
    }
    if (incremental) {
        require(target == SelectionTarget::polytope && selection == SelectionMode::full,
                "incremental scoring supports the polytope target with full selection only");
    }
}

GreedyState GreedyState::empty(std::size_t neurons, std::size_t examples) {
    GreedyState s;
    s.z.assign(examples, 0.0);
    s.u.assign(examples, 0.0);
    s.counts.assign(neurons, 0);
    return s;
}

std::size_t GreedyState::distinct() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

std::vector<std::size_t> selection_columns(const PruneConfig& cfg, std::size_t m, std::size_t k) {
    if (cfg.selection == SelectionMode::full || cfg.batch_size >= m) return {};
    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(cfg.batch_seed, {k}));
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, m - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    all.resize(cfg.batch_size);
    std::sort(all.begin(), all.end());
    return all;
}

std::vector<double> candidate_losses(const ActivationMatrix& am, const GreedyState& state, const PruneConfig& cfg,
                                     std::span<const std::size_t> columns) {
    const std::size_t n = am.neurons();
    const std::size_t m = am.examples();
    const double inv = 1.0 / static_cast<double>(state.k + 1);
    const double root_m = std::sqrt(static_cast<double>(m));
    const bool head = cfg.target == SelectionTarget::head && cfg.head != OutputHead::linear;
    const std::size_t len = columns.empty() ? m : columns.size();

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto phi = am.phi.row(i);
        double s = 0.0;
        for (std::size_t c = 0; c < len; ++c) {
            const std::size_t j = columns.empty() ? c : columns[c];
            double v = (state.z[j] + phi[j]) * inv;
            if (head) v = apply_head(cfg.head, root_m * v) / root_m;
            const double r = v - am.y[j];
            s += r * r;
        }
        out[i] = 0.5 * s;
    }
    return out;
}

std::vector<double> candidate_losses_incremental(const ActivationMatrix& am, GreedyState& state) {
    const std::size_t n = am.neurons();
    if (state.phi_sq.size() != n) {
        state.phi_sq.resize(n);
        state.phi_y.resize(n);
        state.phi_z.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            state.phi_sq[i] = squared_norm(am.phi.row(i));
            state.phi_y[i] = dot(am.phi.row(i), am.y);
            state.phi_z[i] = dot(am.phi.row(i), state.z);
        }
    }
    const double inv = 1.0 / static_cast<double>(state.k + 1);
    const double zz = squared_norm(state.z);
    const double zy = dot(state.z, am.y);
    const double yy = squared_norm(am.y);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        // ‖(z + Φ)/(k+1) − y‖² expanded in the cached inner products.
        const double vv = (zz + 2.0 * state.phi_z[i] + state.phi_sq[i]) * inv * inv;
        const double vy = (zy + state.phi_y[i]) * inv;
        out[i] = 0.5 * std::max(0.0, vv - 2.0 * vy + yy);
    }
    return out;
}

std::size_t greedy_step(const ActivationMatrix& am, GreedyState& state, const PruneConfig& cfg) {
    const std::size_t m = am.examples();
    require(state.z.size() == m && state.u.size() == m && state.counts.size() == am.neurons(),
            "greedy state does not match the activation matrix");

    std::vector<double> losses;
    if (cfg.incremental) {
        losses = candidate_losses_incremental(am, state);
    } else {
        const auto cols = selection_columns(cfg, m, state.k + 1);
        losses = candidate_losses(am, state, cfg, cols);
    }
    std::size_t q = 0;
    for (std::size_t i = 1; i < losses.size(); ++i)
        if (losses[i] < losses[q]) q = i;

    const auto phi = am.phi.row(q);
    ++state.k;
    ++state.counts[q];
    const double inv = 1.0 / static_cast<double>(state.k);
    for (std::size_t j = 0; j < m; ++j) {
        state.z[j] += phi[j];
        state.u[j] = state.z[j] * inv;
    }
    if (!state.phi_z.empty()) {
        for (std::size_t i = 0; i < am.neurons(); ++i) state.phi_z[i] += dot(am.phi.row(i), phi);
    }
    state.chosen.push_back(q);
    state.loss_history.push_back(l2_loss(state.u, am.y));
    if (cfg.record_iterates) state.iterates.push_back(state.u);
    return q;
}

GreedyState greedy_run(const ActivationMatrix& am, const PruneConfig& cfg) {
    cfg.validate(am.examples());
    GreedyState state = GreedyState::empty(am.neurons(), am.examples());
    for (std::size_t p = 0; p < cfg.iterations; ++p) greedy_step(am, state, cfg);
    return state;
}

PruneResult greedy_forward_selection(const TwoLayerNet& net, const Dataset& ds, const PruneConfig& cfg) {
    const ActivationMatrix am = activation_matrix(net, ds);
    PruneConfig local = cfg;
    if (local.target == SelectionTarget::head) local.head = net.head;
    PruneResult r;
    r.state = greedy_run(am, local);
    r.subnet = r.state.counts;
    return r;
}

TwoLayerNet materialize_subnet(const TwoLayerNet& net, const Multiset& counts) {
    require(counts.size() == net.width(), "multiset must have one count per neuron");
    std::vector<std::size_t> keep;
    std::size_t total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        keep.push_back(i);
        total += counts[i];
    }
    require(total > 0, "cannot materialize an empty multiset");
    TwoLayerNet sub;
    sub.activation = net.activation;
    sub.head = net.head;
    sub.inner = Matrix(keep.size(), net.input_dim());
    const double scale = static_cast<double>(keep.size()) / static_cast<double>(total);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        sub.outer.push_back(net.outer[keep[r]] * static_cast<double>(counts[keep[r]]) * scale);
        std::ranges::copy(net.inner.row(keep[r]), sub.inner.row(r).begin());
    }
    return sub;
}

double pruned_consistency(const TwoLayerNet& net, const Dataset& ds, const GreedyState& state) {
    require(state.k >= 1, "consistency check needs at least one greedy step");
    const double root_m = std::sqrt(static_cast<double>(ds.size()));
    double worst = 0.0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        const double pruned = forward_pruned_pre_head(net, state.counts, ds.x(j));
        worst = std::max(worst, std::abs(pruned - root_m * state.u[j]));
    }
    return worst;
}

double iterate_difference_check(const ActivationMatrix& am, const GreedyState& state) {
    require(state.iterates.size() == state.chosen.size() && !state.iterates.empty(),
            "iterate check needs recorded iterates (record_iterates = true)");
    const std::size_t m = am.examples();
    std::vector<double> prev(m, 0.0);
    double worst = 0.0;
    for (std::size_t k = 1; k <= state.iterates.size(); ++k) {
        const auto& cur = state.iterates[k - 1];
        const auto phi = am.phi.row(state.chosen[k - 1]);
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double r = (cur[j] - prev[j]) - (phi[j] - prev[j]) / static_cast<double>(k);
            s += r * r;
        }
        worst = std::max(worst, std::sqrt(s));
        prev = cur;
    }
    return worst;
}

bool convex_weights_valid(const ActivationMatrix& am, const GreedyState& state, double tol) {
    if (state.counts.size() != am.neurons()) return false;
    const std::size_t total = std::accumulate(state.counts.begin(), state.counts.end(), std::size_t{0});
    if (total != state.k || state.k == 0) return false;
    const double kd = static_cast<double>(state.k);
    for (std::size_t j = 0; j < am.examples(); ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i < am.neurons(); ++i)
            if (state.counts[i]) v += static_cast<double>(state.counts[i]) / kd * am.phi(i, j);
        if (std::abs(v - state.u[j]) > tol * std::max(1.0, std::abs(v))) return false;
    }
    return true;
}

std::vector<bool> lemma1_check(const GreedyState& state, double diameter, double dense_loss) {
    std::vector<bool> ok;
    if (state.loss_history.empty()) return ok;
    const double l1 = state.loss_history.front();
    for (std::size_t k = 1; k <= state.loss_history.size(); ++k) {
        ok.push_back(state.loss_history[k - 1] <= lemma1_bound(k, l1, diameter, dense_loss) + 1e-9);
    }
    return ok;
}

std::vector<double> w_vector(const ActivationMatrix& am, const GreedyState& state) {
    std::vector<double> w(am.examples());
    const double kd = static_cast<double>(state.k);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = kd * (am.y[j] - state.u[j]);
    return w;
}

RateFit rate_fit(std::span<const double> loss_history, std::size_t k_min, std::size_t k_max) {
    require(k_min >= 1, "rate_fit needs k_min >= 1");
    const std::size_t last = k_max == 0 ? loss_history.size() : std::min(k_max, loss_history.size());
    require(last >= k_min + 1, "rate_fit needs at least two points in range");
    RateFit fit;
    std::vector<double> xs, ys;
    for (std::size_t k = k_min; k <= last; ++k) {
        const double l = loss_history[k - 1];
        if (!(l > 0.0)) {
            fit.exponent = -std::numeric_limits<double>::infinity();
            fit.exact_fit = true;
            fit.r_squared = 1.0;
            return fit;
        }
        xs.push_back(std::log(static_cast<double>(k)));
        ys.push_back(std::log(l));
    }
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    fit.exponent = sxy / sxx;
    fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return fit;
}

void write_prune_csv(std::ostream& out, const GreedyState& state) {
    out << "k,chosen_index,loss,distinct_count\n";
    std::vector<bool> seen(state.counts.size(), false);
    std::size_t distinct = 0;
    for (std::size_t k = 1; k <= state.chosen.size(); ++k) {
        const std::size_t q = state.chosen[k - 1];
        if (!seen[q]) {
            seen[q] = true;
            ++distinct;
        }
        out << k << ',' << q << ',' << format_real(state.loss_history[k - 1]) << ',' << distinct << '\n';
    }
}

void write_multiset_csv(std::ostream& out, const Multiset& counts) {
    out << "index,count\n";
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i]) out << i << ',' << counts[i] << '\n';
}

Multiset read_multiset_csv(std::istream& in, std::size_t neurons) {
    Multiset counts(neurons, 0);
    std::string line;
    if (!std::getline(in, line) || line != "index,count") fail(Errc::config, "multiset CSV must start with 'index,count'");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t idx = 0, cnt = 0;
        char comma = 0;
        if (!(ls >> idx >> comma >> cnt) || comma != ',' || idx >= neurons) {
            fail(Errc::config, "bad multiset CSV line " + std::to_string(line_no));
        }
        counts[idx] += cnt;
    }
    return counts;
}

}  // namespace gfs
