// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "gfs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace gfs;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kGradRelTol = 1e-5;
constexpr double kGradStep = 1e-6;
constexpr double kLemmaSlack = 1e-9;
constexpr double kIdentityTol = 1e-10;
constexpr double kLpTol = 1e-9;
constexpr double kRateInterior = -1.0;
constexpr double kRateDeep = -1.5;
constexpr double kDecayR2 = 0.9;
constexpr double kThresholdRef = 229.105;
constexpr double kThresholdRefTol = 1e-3;
constexpr double kDoublingUlps = 0.0;

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void run(int id, const std::string& name, double budget_s, const std::function<Verdict()>& body) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (secs > budget_s) {
        v.pass = false;
        v.detail += " [over budget]";
    }
    if (!v.pass) ++failures;
    char head[160];
    std::snprintf(head, sizeof head, "%s %2d %-34s (%.1fs / %.0fs) ", v.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
                  budget_s);
    std::cout << head << v.detail << std::endl;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Oracles written directly from the model definition.

long double oracle_loss(const TwoLayerNet& net, const Dataset& ds, const std::vector<std::size_t>& batch,
                        Criterion c) {
    long double total = 0.0L;
    for (std::size_t j : batch) {
        long double pre = 0.0L;
        for (std::size_t i = 0; i < net.width(); ++i) {
            long double h = 0.0L;
            for (std::size_t k = 0; k < net.input_dim(); ++k) h += (long double)net.inner(i, k) * ds.x(j)[k];
            const long double s =
                net.activation.kind == ActivationKind::tanh ? std::tanh(h) : 1.0L / (1.0L + std::exp(-h));
            pre += (long double)net.outer[i] * s;
        }
        pre /= (long double)net.width();
        const long double y = ds.y(j);
        const long double p = 1.0L / (1.0L + std::exp(-pre));
        if (c == Criterion::bce) {
            total += -(y * std::log(p) + (1.0L - y) * std::log(1.0L - p));
        } else {
            const long double out = net.head == OutputHead::sigmoid ? p : pre;
            total += 0.5L * (out - y) * (out - y);
        }
    }
    return total / (long double)batch.size();
}

double half_sq(const std::vector<double>& u, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += (u[j] - y[j]) * (u[j] - y[j]);
    return 0.5 * s;
}

// ½‖(z + Φ_i)/k − y‖² for every candidate i.
std::vector<double> scan_candidates(const ActivationMatrix& am, const std::vector<double>& z, std::size_t k) {
    std::vector<double> out(am.neurons());
    std::vector<double> u(am.examples());
    for (std::size_t i = 0; i < am.neurons(); ++i) {
        for (std::size_t j = 0; j < u.size(); ++j) u[j] = (z[j] + am.phi(i, j)) / double(k);
        out[i] = half_sq(u, am.y);
    }
    return out;
}

std::size_t first_argmin(const std::vector<double>& v) {
    std::size_t a = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[a]) a = i;
    return a;
}

double brute_diameter(const Matrix& phi) {
    double best = 0.0;
    for (std::size_t a = 0; a < phi.rows(); ++a)
        for (std::size_t b = a + 1; b < phi.rows(); ++b) {
            double s = 0.0;
            for (std::size_t j = 0; j < phi.cols(); ++j) s += (phi(a, j) - phi(b, j)) * (phi(a, j) - phi(b, j));
            best = std::max(best, s);
        }
    return std::sqrt(best);
}

std::vector<double> row_mean(const Matrix& phi) {
    std::vector<double> mean(phi.cols(), 0.0);
    for (std::size_t i = 0; i < phi.rows(); ++i)
        for (std::size_t j = 0; j < phi.cols(); ++j) mean[j] += phi(i, j) / double(phi.rows());
    return mean;
}

struct LineFit {
    double slope = 0.0, r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
    return f;
}

// Theory-mode run shared by criteria 2 and 3.
struct TheoryRun {
    ActivationMatrix am;
    GreedyState state;
};

std::vector<TheoryRun> theory_runs;

// ---------------------------------------------------------------------------

Verdict criterion_gradient() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    std::size_t coords = 0;
    for (int c = 0; c < 20; ++c) {
        const auto act = c % 2 == 0 ? ActivationKind::sigmoid : ActivationKind::tanh;
        const Criterion crit = (c / 2) % 2 == 0 ? Criterion::l2 : Criterion::bce;
        const OutputHead head = crit == Criterion::bce || c % 3 == 0 ? OutputHead::sigmoid : OutputHead::linear;
        const std::size_t m = 4 + rng() % 12, d = 2 + rng() % 6, n = 3 + rng() % 10;
        const Dataset ds = make_synthetic(m, d, rng(), SyntheticTask::binary);
        TwoLayerNet net = init_weights(n, d, rng(), ActivationSpec{act}, head);
        std::vector<std::size_t> batch(1 + rng() % m);
        for (auto& b : batch) b = rng() % m;
        const Gradient g = gradient(net, ds, batch, crit);
        auto probe = [&](double& w, double analytic) {
            const double saved = w;
            w = saved + kGradStep;
            const long double up = oracle_loss(net, ds, batch, crit);
            w = saved - kGradStep;
            const long double down = oracle_loss(net, ds, batch, crit);
            w = saved;
            const double numeric = double((up - down) / (2.0L * kGradStep));
            const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
            worst = std::max(worst, std::abs(analytic - numeric) / scale);
            ++coords;
        };
        for (std::size_t i = 0; i < n; ++i) probe(net.outer[i], g.outer[i]);
        for (std::size_t k = 0; k < net.inner.data().size(); ++k) probe(net.inner.data()[k], g.inner.data()[k]);
    }
    return {worst < kGradRelTol, std::to_string(coords) + " coordinates, max rel err " + fmt(worst) + " < " +
                                     fmt(kGradRelTol)};
}

Verdict criterion_lemma1() {
    std::mt19937_64 rng(7);
    std::size_t violations = 0, checked = 0;
    double tightest = -1e300;
    for (int inst = 0; inst < 10; ++inst) {
        const std::size_t m = 8 + rng() % 57, d = 2 + rng() % 15, n = 8 + rng() % 249;
        const std::size_t t = inst % 2 == 0 ? 0 : 500;
        const Dataset ds = make_synthetic(m, d, rng(), SyntheticTask::regression);
        TwoLayerNet net = init_weights(n, d, rng(), ActivationSpec{ActivationKind::sigmoid}, OutputHead::linear);
        if (t > 0) {
            TrainConfig cfg = theory_train_config();
            cfg.iterations = t;
            cfg.learning_rate = 0.5 * double(n);
            cfg.record_every = t;
            cfg.seed = rng();
            net = train(net, ds, cfg).final_net;
        }
        ActivationMatrix am = activation_matrix(net, ds);
        PruneConfig pc;
        pc.iterations = 100;
        pc.record_iterates = true;
        GreedyState s = greedy_run(am, pc);

        const double D = brute_diameter(am.phi);
        const double LN = half_sq(row_mean(am.phi), am.y);
        const double l1 = s.loss_history.front();
        for (std::size_t k = 1; k <= s.loss_history.size(); ++k) {
            const double kk = double(k);
            const double bound = l1 / kk + D * D / (2 * kk) + (kk - 1) / kk * LN;
            const double gap = s.loss_history[k - 1] - bound;
            tightest = std::max(tightest, gap);
            if (gap > kLemmaSlack) ++violations;
            ++checked;
        }
        theory_runs.push_back({std::move(am), std::move(s)});
    }
    return {violations == 0, std::to_string(checked) + " (instance, k) pairs, " + std::to_string(violations) +
                                 " violations, max loss - bound " + fmt(tightest)};
}

Verdict criterion_identities() {
    if (theory_runs.empty()) return {false, "no recorded runs (criterion 2 did not run)"};
    double worst = 0.0, worst_lib = 0.0;
    bool counts_ok = true, weights_ok = true;
    for (const auto& r : theory_runs) {
        const auto& s = r.state;
        std::vector<double> prev(r.am.examples(), 0.0);
        for (std::size_t k = 1; k <= s.k; ++k) {
            const auto& cur = s.iterates[k - 1];
            for (std::size_t j = 0; j < prev.size(); ++j) {
                const double predicted = prev[j] + (r.am.phi(s.chosen[k - 1], j) - prev[j]) / double(k);
                worst = std::max(worst, std::abs(cur[j] - predicted));
            }
            prev = cur;
        }
        worst_lib = std::max(worst_lib, iterate_difference_check(r.am, s));
        std::size_t total = 0;
        for (auto c : s.counts) total += c;
        counts_ok = counts_ok && total == s.k;
        weights_ok = weights_ok && convex_weights_valid(r.am, s);
        // u_k equals Σ (count_i / k) Φ_i
        for (std::size_t j = 0; j < r.am.examples(); ++j) {
            double v = 0.0;
            for (std::size_t i = 0; i < r.am.neurons(); ++i) v += double(s.counts[i]) / double(s.k) * r.am.phi(i, j);
            weights_ok = weights_ok && std::abs(v - s.u[j]) <= kIdentityTol;
        }
    }
    const bool pass = worst <= kIdentityTol && worst_lib <= kIdentityTol && counts_ok && weights_ok;
    return {pass, std::to_string(theory_runs.size()) + " runs, max residual " + fmt(worst) + " (library " +
                      fmt(worst_lib) + "), counts " + (counts_ok ? "ok" : "BAD") + ", weights " +
                      (weights_ok ? "ok" : "BAD")};
}

Verdict criterion_bruteforce() {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    std::size_t mismatches = 0, steps = 0;
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t n = 1 + rng() % 8, m = 1 + rng() % 5, p = 1 + rng() % 4;
        ActivationMatrix am{Matrix(n, m), std::vector<double>(m)};
        for (double& v : am.phi.data()) v = g(rng);
        for (double& v : am.y) v = g(rng);
        PruneConfig pc;
        pc.iterations = p;
        const GreedyState s = greedy_run(am, pc);

        // exhaustive first step over all N^P sequences: the best first element
        // of a length-1 sequence
        std::vector<std::size_t> seq(1, 0);
        std::size_t best_first = 0;
        double best_first_loss = 1e300;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> u(m);
            for (std::size_t j = 0; j < m; ++j) u[j] = am.phi(i, j);
            const double l = half_sq(u, am.y);
            if (l < best_first_loss) {
                best_first_loss = l;
                best_first = i;
            }
        }
        if (s.chosen.front() != best_first) ++mismatches;

        std::vector<double> z(m, 0.0);
        for (std::size_t k = 1; k <= p; ++k) {
            const std::size_t expect = first_argmin(scan_candidates(am, z, k));
            if (s.chosen[k - 1] != expect) ++mismatches;
            for (std::size_t j = 0; j < m; ++j) z[j] += am.phi(s.chosen[k - 1], j);
            ++steps;
        }
    }
    return {mismatches == 0, "50 instances, " + std::to_string(steps) + " steps, " + std::to_string(mismatches) +
                                 " mismatches"};
}

Verdict criterion_faster_rate() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::gamma_distribution<double> gam(1.0, 1.0);
    double worst_interior = -1e300, worst_deep = -1e300;
    std::string exps;
    for (int inst = 0; inst < 5; ++inst) {
        const std::size_t n = 40, m = 10;
        ActivationMatrix base{Matrix(n, m), std::vector<double>(m)};
        for (double& v : base.phi.data()) v = g(rng);

        // strictly inside: a random convex combination with every weight positive
        std::vector<double> alpha(n);
        double total = 0.0;
        for (double& a : alpha) total += (a = 0.05 + gam(rng));
        ActivationMatrix interior = base;
        for (std::size_t j = 0; j < m; ++j) {
            interior.y[j] = 0.0;
            for (std::size_t i = 0; i < n; ++i) interior.y[j] += alpha[i] / total * base.phi(i, j);
        }
        // generous margin: the vertex centroid
        ActivationMatrix deep = base;
        deep.y = row_mean(base.phi);

        PruneConfig pc;
        pc.iterations = 200;
        const double ei = rate_fit(greedy_run(interior, pc).loss_history, 10, 200).exponent;
        const double ed = rate_fit(greedy_run(deep, pc).loss_history, 10, 200).exponent;
        worst_interior = std::max(worst_interior, ei);
        worst_deep = std::max(worst_deep, ed);
        exps += " (" + fmt(ei) + ", " + fmt(ed) + ")";
    }
    const bool pass = worst_interior <= kRateInterior && worst_deep <= kRateDeep;
    return {pass, "exponents (interior, centroid):" + exps + "; limits " + fmt(kRateInterior) + " / " +
                      fmt(kRateDeep)};
}

Verdict criterion_lp() {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t wrong = 0;
    double worst_violation = 0.0;
    for (int c = 0; c < 100; ++c) {
        const std::size_t n = 1 + rng() % 20, m = 1 + rng() % 10;
        Matrix v(n, m);
        for (double& x : v.data()) x = g(rng);
        std::vector<double> alpha(n);
        double total = 0.0;
        for (double& a : alpha) total += (a = unit(rng));
        std::vector<double> y(m, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) y[j] += alpha[i] / total * v(i, j);

        // escape along a random direction past the farthest vertex
        std::vector<double> dir(m);
        for (double& x : dir) x = g(rng);
        double reach = -1e300;
        for (std::size_t i = 0; i < n; ++i) reach = std::max(reach, dot(dir, v.row(i)));
        const double shift = (reach - dot(dir, y) + 0.5) / squared_norm(dir);
        std::vector<double> out = y;
        for (std::size_t j = 0; j < m; ++j) out[j] += shift * dir[j];

        const Polytope p(v);
        const MembershipResult in = hull_membership(p, y);
        if (in.verdict != Membership::inside) {
            ++wrong;
        } else {
            // re-substitute α into Σα_i Φ_i = y, Σα = 1, α ≥ 0
            const auto& a = *in.alpha;
            double sum = 0.0;
            for (double x : a) {
                sum += x;
                worst_violation = std::max(worst_violation, -x);
            }
            worst_violation = std::max(worst_violation, std::abs(sum - 1.0));
            for (std::size_t j = 0; j < m; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += a[i] * v(i, j);
                worst_violation = std::max(worst_violation, std::abs(s - y[j]));
            }
        }
        if (hull_membership(p, out).verdict != Membership::outside) ++wrong;
    }
    const bool pass = wrong == 0 && worst_violation <= kLpTol;
    return {pass, "200 verdicts, " + std::to_string(wrong) + " wrong, max re-substitution violation " +
                      fmt(worst_violation)};
}

Verdict criterion_decay() {
    struct Setup {
        std::size_t m, n, iterations;
    };
    const std::size_t d = 16;
    const Setup setups[] = {{64, 300, 20000}, {256, 4200, 60000}};
    std::vector<double> rhos;
    std::string detail;
    bool pass = true;
    for (const auto& s : setups) {
        if (s.n * d <= s.m * s.m) return {false, "width schedule does not satisfy N*d > m^2"};
        const Dataset ds = make_synthetic(s.m, d, 100 + s.m, SyntheticTask::regression);
        const TwoLayerNet net =
            init_weights(s.n, d, 200 + s.m, ActivationSpec{ActivationKind::sigmoid}, OutputHead::linear);
        TrainConfig cfg = theory_train_config();
        cfg.iterations = s.iterations;
        // The 1/N output scaling shrinks per-step function change by N; the
        // step size compensates.
        cfg.learning_rate = 2.0 * double(s.n);
        cfg.record_every = s.iterations / 20;
        cfg.seed = 300 + s.m;
        const TrainTrace trace = train(net, ds, cfg);
        const double rho = fit_decay_rate(trace);

        std::vector<double> xs, ys;
        for (const auto& p : trace.checkpoints) {
            xs.push_back(double(p.iteration));
            ys.push_back(std::log(p.loss));
        }
        const LineFit f = least_squares(xs, ys);
        const double oracle_rho = std::exp(f.slope);
        const bool ok = rho > 0.0 && rho < 1.0 && f.r2 >= kDecayR2 && std::abs(oracle_rho - rho) <= 1e-9;
        pass = pass && ok;
        rhos.push_back(rho);
        detail += "m=" + std::to_string(s.m) + " rho=" + fmt(rho) + " R2=" + fmt(f.r2) + "; ";
    }
    pass = pass && rhos[1] >= rhos[0];
    return {pass, detail + "rho(256) >= rho(64): " + (rhos[1] >= rhos[0] ? "yes" : "no")};
}

Verdict criterion_sweep() {
    SweepConfig cfg;
    cfg.data.source = "synthetic";
    cfg.data.task = SyntheticTask::binary;
    cfg.data.d = 20;
    cfg.sub_sizes = {256, 1024, 4096};
    cfg.widths = {512};
    cfg.trials = 3;
    cfg.total_iterations = 2000;
    cfg.checkpoint_every = 250;
    cfg.train.learning_rate = 2.0;
    cfg.prune.iterations = 200;
    cfg.prune.target = SelectionTarget::head;
    cfg.base_seed = 1;
    const SweepGrid grid = run_sweep(cfg);

    // trial-averaged accuracy per (m, t), recomputed here
    std::map<std::size_t, std::map<std::size_t, double>> avg;
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> first_last;  // (m, trial)
    for (const auto& c : grid.cells) {
        avg[c.m][c.t] += c.accuracy / double(cfg.trials);
        auto& fl = first_last[{c.m, c.trial}];
        if (c.t == 0) fl.first = c.accuracy;
        if (c.t == cfg.total_iterations) fl.second = c.accuracy;
    }
    std::vector<std::optional<std::size_t>> expected;
    for (const auto& [m, series] : avg) {
        const double target = 0.95 * series.rbegin()->second;
        std::optional<std::size_t> hit;
        for (const auto& [t, a] : series)
            if (a >= target - 1e-12) {
                hit = t;
                break;
            }
        expected.push_back(hit);
    }
    const auto rows = threshold_trace(grid, {TargetRule::fraction_of_final, 0.95});
    std::vector<std::optional<std::size_t>> got;
    for (const auto& r : rows) got.push_back(r.threshold);
    std::size_t inversions = 0;
    for (std::size_t i = 1; i < got.size(); ++i) {
        const double a = got[i - 1] ? double(*got[i - 1]) : INFINITY;
        const double b = got[i] ? double(*got[i]) : INFINITY;
        if (b < a) ++inversions;
    }
    std::size_t init_hits = 0;
    for (const auto& [key, fl] : first_last)
        if (fl.first >= fl.second) ++init_hits;

    std::string th;
    for (std::size_t i = 0; i < rows.size(); ++i)
        th += std::to_string(rows[i].m) + ":" + (got[i] ? std::to_string(*got[i]) : std::string("never")) + " ";
    const bool pass = got == expected && inversions <= 1 && init_hits == 0;
    return {pass, "thresholds " + th + "inversions " + std::to_string(inversions) +
                      ", runs at final accuracy from t=0: " + std::to_string(init_hits) +
                      (got == expected ? "" : ", trace disagrees with the oracle")};
}

Verdict criterion_thresholds() {
    bool pass = true;
    double worst_ulps = 0.0;
    std::size_t bitwise = 0, pairs = 0;
    for (std::size_t m : {20, 50, 100, 400})
        for (std::size_t d : {1, 5, 10})
            for (std::size_t k : {2, 3, 5, 10, 31, 100, 1000}) {
                const double c = 0.5 * double(m) * double(m) / double(d) * 0.3;
                const double a = sgd_threshold(k * k, m, d, c);
                const double b = 2.0 * sgd_threshold(k, m, d, c);
                const double ulps = std::abs(a - b) / (std::numeric_limits<double>::epsilon() * b);
                worst_ulps = std::max(worst_ulps, ulps);
                bitwise += a == b ? 1 : 0;
                ++pairs;
            }
    pass = pass && worst_ulps <= kDoublingUlps;
    const bool gd_zero = gd_threshold(1, 100, 50, 1.0) == 0.0 && gd_threshold(1, 7, 3, 2.0) == 0.0;
    bool increasing = true;
    double prev = -1.0;
    for (std::size_t m = 10; m <= 1000; m += 10) {
        const double t = sgd_threshold(10, m, 5, 1.0);
        increasing = increasing && t > prev;
        prev = t;
    }
    const long double ref = -std::log(10.0L) / std::log1p(-0.01L);
    const double v = sgd_threshold(10, 100, 100, 1.0);
    const bool value_ok = std::abs(v - kThresholdRef) < kThresholdRefTol && std::abs(v - double(ref)) < 1e-9;
    pass = pass && gd_zero && increasing && value_ok;
    return {pass, "k^2 doubling " + std::to_string(bitwise) + "/" + std::to_string(pairs) +
                      " bit-identical, max " + fmt(worst_ulps) + " ulp; gd(1)=0 " + (gd_zero ? "yes" : "no") +
                      "; increasing in m " + (increasing ? "yes" : "no") + "; t*(10,100,100,1)=" + fmt(v)};
}

Verdict criterion_membership() {
    MembershipConfig cfg;
    cfg.data.source = "mnist";
    cfg.data.mnist_dir = GFS_TEST_MNIST_DIR;
    cfg.sizes = {500, 1000};
    cfg.seeds = 3;
    cfg.max_epochs = 5;
    const MembershipReport rep = run_membership_experiment(cfg);

    std::map<std::size_t, double> mean_first;
    bool schedule_ok = true;
    std::size_t epoch0_inside = 0;
    std::string per_run;
    for (const auto& r : rep.runs) {
        schedule_ok = schedule_ok && r.N * 784 > r.m * r.m;
        const double e = r.first_epoch ? double(*r.first_epoch) : double(cfg.max_epochs + 1);
        mean_first[r.m] += e / double(cfg.seeds);
        per_run += std::to_string(r.m) + "/" + std::to_string(r.N) + ":" +
                   (r.first_epoch ? std::to_string(*r.first_epoch) : std::string("never")) + " ";
    }
    for (const auto& e : rep.epochs)
        if (e.epoch == 0 && e.inside) ++epoch0_inside;
    const bool trend = mean_first[1000] >= mean_first[500];
    const bool pass = schedule_ok && trend && epoch0_inside == 0;
    return {pass, "first epochs " + per_run + "; mean 500=" + fmt(mean_first[500]) + " 1000=" +
                      fmt(mean_first[1000]) + "; trend " + (trend ? "ok" : "BAD") + "; inside at epoch 0: " +
                      std::to_string(epoch0_inside) + " of " + std::to_string(rep.runs.size())};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int sh(const std::string& cmd) {
    return std::system((cmd + " >/dev/null 2>&1").c_str());
}

Verdict criterion_determinism() {
    const fs::path work = fs::temp_directory_path() / "gfs_acceptance_determinism";
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string cli = GFS_CLI_PATH;
    const std::string mnist = std::string("mnist_dir=") + GFS_TEST_MNIST_DIR;
    const std::string sweep = " -s source=synthetic -s dim=6 -s sizes=32,64 -s widths=24,48 -s trials=2"
                              " -s iterations=40 -s checkpoint_every=20 -s batch_size=8 -s learning_rate=2"
                              " -s prune_iterations=10 -s seed=5";

    struct Cmd {
        std::string name, args;
        std::vector<std::string> outputs;
    };
    auto w = [&](const std::string& f) { return (work / f).string(); };
    std::vector<std::pair<std::string, std::string>> pairs;  // files that must match byte for byte
    bool all_ok = true;
    std::string failed;

    auto twice = [&](const std::string& name, const std::function<std::string(const std::string&)>& args,
                     const std::vector<std::string>& files) {
        for (const char* tag : {"a", "b"}) {
            if (sh(cli + " " + args(tag)) != 0) {
                all_ok = false;
                failed += name + "(exit) ";
                return;
            }
        }
        for (const auto& f : files) pairs.push_back({w(f + "_a"), w(f + "_b")});
    };

    twice("sweep", [&](const std::string& t) {
        return "sweep" + sweep + " -o " + w("grid_" + t) + " --thresholds " + w("thr_" + t);
    }, {"grid", "thr"});
    // serial against parallel
    if (sh(cli + " sweep" + sweep + " -s threads=3 -o " + w("grid_par")) != 0) {
        all_ok = false;
        failed += "sweep-parallel(exit) ";
    } else {
        pairs.push_back({w("grid_a"), w("grid_par")});
    }
    twice("trace", [&](const std::string& t) {
        return "trace --grid " + w("grid_a") + " --rule absolute --target 0.6 -o " + w("trace_" + t);
    }, {"trace"});
    twice("membership", [&](const std::string& t) {
        return "membership -s source=mnist -s " + mnist + " -s sizes=40 -s widths=12 -s seeds=2 -s max_epochs=2 -o " +
               w("mem_" + t) + " --runs " + w("runs_" + t);
    }, {"mem", "runs"});
    twice("bounds", [&](const std::string& t) {
        return "bounds -s m=16 -s N=48 -s t=100 -s prune_iterations=20 -o " + w("bounds_" + t);
    }, {"bounds"});
    twice("train", [&](const std::string& t) {
        return "train -s source=synthetic -s dim=5 -s m=32 -s N=40 -s iterations=200 -s learning_rate=20"
               " -s record_every=20 -o " + w("train_" + t) + " --checkpoint " + w("ckpt_" + t);
    }, {"train", "ckpt"});
    twice("prune", [&](const std::string& t) {
        return "prune -s source=synthetic -s dim=5 -s m=32 -s prune_iterations=25 --checkpoint " + w("ckpt_a") +
               " -o " + w("prune_" + t) + " --multiset " + w("ms_" + t);
    }, {"prune", "ms"});
    twice("gradcheck", [&](const std::string& t) {
        return "gradcheck --cases 6 --seed 3 -o " + w("grad_" + t);
    }, {"grad"});

    std::size_t compared = 0;
    for (const auto& [a, b] : pairs) {
        const std::string x = slurp(a), y = slurp(b);
        if (x.empty() || x != y) {
            all_ok = false;
            failed += fs::path(a).filename().string() + " ";
        }
        ++compared;
    }
    return {all_ok, std::to_string(compared) + " output pairs compared" +
                        (failed.empty() ? std::string(", all byte-identical") : ", differing: " + failed)};
}

}  // namespace

int main(int argc, char** argv) {
    // Optional: run a subset, e.g. "acceptance 1 4 9".
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto want = [&](int id) { return only.empty() || only.count(id) > 0 || (id == 2 && only.count(3) > 0); };

    if (want(1)) run(1, "gradient correctness", 10, criterion_gradient);
    if (want(2)) run(2, "lemma 1 on theory-mode runs", 60, criterion_lemma1);
    if (want(3)) run(3, "proof identities", 10, criterion_identities);
    if (want(4)) run(4, "greedy vs exhaustive", 10, criterion_bruteforce);
    if (want(5)) run(5, "faster rate inside the hull", 30, criterion_faster_rate);
    if (want(6)) run(6, "LP membership oracle", 10, criterion_lp);
    if (want(7)) run(7, "SGD linear decay", 120, criterion_decay);
    if (want(8)) run(8, "pruning threshold trend", 600, criterion_sweep);
    if (want(9)) run(9, "threshold formulas", 5, criterion_thresholds);
    if (want(10)) run(10, "membership epoch trend", 600, criterion_membership);
    if (want(11)) run(11, "CLI determinism", 300, criterion_determinism);

    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
