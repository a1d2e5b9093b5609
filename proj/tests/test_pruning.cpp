#include "gfs/pruning.hpp"

#include "gfs/bounds.hpp"
#include "gfs/polytope.hpp"
#include "gfs/training.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

using namespace gfs;

namespace {

ActivationMatrix make_am(std::size_t n, std::size_t m, const std::vector<double>& phi, const std::vector<double>& y) {
    return ActivationMatrix{Matrix(n, m, phi), y};
}

ActivationMatrix random_am(std::size_t n, std::size_t m, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    ActivationMatrix am{Matrix(n, m), std::vector<double>(m)};
    for (double& v : am.phi.data()) v = g(rng);
    for (double& v : am.y) v = g(rng);
    return am;
}

// ½‖(Σ_{q ∈ seq} Φ_q)/|seq| − y‖², computed from scratch.
double sequence_loss(const ActivationMatrix& am, const std::vector<std::size_t>& seq) {
    double s = 0.0;
    for (std::size_t j = 0; j < am.examples(); ++j) {
        double v = 0.0;
        for (std::size_t q : seq) v += am.phi(q, j);
        v /= static_cast<double>(seq.size());
        s += (v - am.y[j]) * (v - am.y[j]);
    }
    return 0.5 * s;
}

// Best loss over all N^P selection sequences.
double exhaustive_best(const ActivationMatrix& am, std::size_t p) {
    std::vector<std::size_t> seq(p, 0);
    double best = 1e300;
    for (;;) {
        best = std::min(best, sequence_loss(am, seq));
        std::size_t pos = 0;
        while (pos < p && ++seq[pos] == am.neurons()) seq[pos++] = 0;
        if (pos == p) break;
    }
    return best;
}

}  // namespace

TEST_CASE("first step on two orthogonal vertices") {
    const auto am = make_am(2, 2, {1, 0, 0, 1}, {1, 0});
    GreedyState s = GreedyState::empty(2, 2);
    PruneConfig cfg;
    CHECK(greedy_step(am, s, cfg) == 0);
    CHECK(s.k == 1);
    CHECK(s.loss_history.back() == 0.0);
    CHECK(s.u == std::vector<double>{1.0, 0.0});
}

TEST_CASE("five steps stay on the optimal vertex") {
    const auto am = make_am(2, 2, {1, 0, 0, 1}, {1, 0});
    PruneConfig cfg;
    cfg.iterations = 5;
    const GreedyState s = greedy_run(am, cfg);
    CHECK(s.counts == Multiset{5, 0});
    CHECK(s.u == std::vector<double>{1.0, 0.0});
    for (double l : s.loss_history) CHECK(l == 0.0);
    CHECK(exhaustive_best(am, 5) == 0.0);
}

TEST_CASE("a single candidate is always chosen") {
    const auto am = make_am(1, 3, {0.2, -0.4, 0.9}, {1, 1, 1});
    PruneConfig cfg;
    cfg.iterations = 4;
    const GreedyState s = greedy_run(am, cfg);
    CHECK(s.counts == Multiset{4});
    for (std::size_t j = 0; j < 3; ++j) CHECK(s.u[j] == doctest::Approx(am.phi(0, j)));
}

TEST_CASE("ties go to the lowest index") {
    const auto am = make_am(3, 2, {0, 1, 1, 0, 1, 0}, {0.5, 0.5});
    GreedyState s = GreedyState::empty(3, 2);
    CHECK(greedy_step(am, s, PruneConfig{}) == 0);
}

TEST_CASE("greedy matches exhaustive search on tiny instances") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + trial % 6, m = 1 + trial % 5, p = 1 + trial % 4;
        const auto am = random_am(n, m, rng);
        PruneConfig cfg;
        cfg.iterations = p;
        const GreedyState s = greedy_run(am, cfg);

        std::size_t first = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (sequence_loss(am, {i}) < sequence_loss(am, {first})) first = i;
        CHECK(s.chosen.front() == first);
        CHECK(s.loss_history.back() >= exhaustive_best(am, p) - 1e-12);
        CHECK(s.loss_history.back() == doctest::Approx(sequence_loss(am, s.chosen)).epsilon(1e-12));
    }
}

TEST_CASE("every step attains the candidate minimum") {
    std::mt19937_64 rng(8);
    const auto am = random_am(20, 6, rng);
    GreedyState s = GreedyState::empty(20, 6);
    for (int k = 1; k <= 30; ++k) {
        const GreedyState before = s;
        greedy_step(am, s, PruneConfig{});
        for (std::size_t i = 0; i < 20; ++i) {
            std::vector<std::size_t> seq = before.chosen;
            seq.push_back(i);
            CHECK(s.loss_history.back() <= sequence_loss(am, seq) + 1e-12);
        }
    }
}

TEST_CASE("incremental scoring agrees with direct scoring") {
    std::mt19937_64 rng(12);
    const auto am = random_am(40, 25, rng);
    PruneConfig direct;
    direct.iterations = 60;
    PruneConfig inc = direct;
    inc.incremental = true;
    GreedyState a = GreedyState::empty(40, 25), b = GreedyState::empty(40, 25);
    for (int k = 0; k < 60; ++k) {
        const auto la = candidate_losses(am, a, direct);
        const auto lb = candidate_losses_incremental(am, b);
        for (std::size_t i = 0; i < la.size(); ++i) CHECK(std::abs(la[i] - lb[i]) <= 1e-9);
        greedy_step(am, a, direct);
        greedy_step(am, b, inc);
        REQUIRE(a.chosen == b.chosen);
    }
    PruneConfig bad = inc;
    bad.selection = SelectionMode::minibatch;
    bad.batch_size = 5;
    CHECK_THROWS_AS(bad.validate(25), Error);
}

TEST_CASE("minibatch selection with the whole dataset equals full selection") {
    std::mt19937_64 rng(13);
    const auto am = random_am(30, 12, rng);
    PruneConfig full;
    full.iterations = 25;
    PruneConfig mb = full;
    mb.selection = SelectionMode::minibatch;
    mb.batch_size = 12;
    mb.batch_seed = 99;
    const GreedyState a = greedy_run(am, full), b = greedy_run(am, mb);
    CHECK(a.chosen == b.chosen);
    CHECK(a.loss_history == b.loss_history);

    mb.batch_size = 4;
    const GreedyState c = greedy_run(am, mb);
    CHECK(c.loss_history.size() == 25);
    CHECK(c.chosen == greedy_run(am, mb).chosen);
    const auto cols = selection_columns(mb, 12, 3);
    CHECK(cols.size() == 4);
    CHECK(std::is_sorted(cols.begin(), cols.end()));
}

TEST_CASE("head target reduces to the polytope target for a linear head") {
    std::mt19937_64 rng(14);
    const auto am = random_am(15, 9, rng);
    PruneConfig a;
    a.iterations = 20;
    PruneConfig b = a;
    b.target = SelectionTarget::head;
    b.head = OutputHead::linear;
    CHECK(greedy_run(am, a).chosen == greedy_run(am, b).chosen);
}

TEST_CASE("pruned forward pass reproduces the greedy iterate") {
    const Dataset ds = make_synthetic(24, 5, 3, SyntheticTask::regression);
    const TwoLayerNet net = init_weights(32, 5, 4, ActivationSpec{ActivationKind::sigmoid});
    PruneConfig cfg;
    cfg.iterations = 40;
    const PruneResult r = greedy_forward_selection(net, ds, cfg);
    CHECK(pruned_consistency(net, ds, r.state) <= 1e-10);
    std::size_t total = 0;
    for (auto c : r.subnet) total += c;
    CHECK(total == 40);

    const TwoLayerNet sub = materialize_subnet(net, r.subnet);
    CHECK(sub.width() == r.state.distinct());
    for (std::size_t j = 0; j < ds.size(); ++j)
        CHECK(forward(sub, ds.x(j)) == doctest::Approx(forward_pruned(net, r.subnet, ds.x(j))).epsilon(1e-12));
}

TEST_CASE("iterate difference identity") {
    // z₂ = (2, 0), q = (0, 1) → u₃ = (2/3, 1/3)
    const auto am = make_am(2, 2, {1, 0, 0, 1}, {0.6, 0.4});
    GreedyState s = GreedyState::empty(2, 2);
    s.k = 2;
    s.z = {2.0, 0.0};
    s.u = {1.0, 0.0};
    s.counts = {2, 0};
    s.chosen = {0, 0};
    s.iterates = {{1.0, 0.0}, {1.0, 0.0}};
    s.loss_history = {0.0, 0.0};
    PruneConfig cfg;
    cfg.record_iterates = true;
    greedy_step(am, s, cfg);
    CHECK(s.chosen.back() == 1);
    CHECK(s.u[0] == doctest::Approx(2.0 / 3.0));
    CHECK(iterate_difference_check(am, s) <= 1e-15);

    std::mt19937_64 rng(15);
    const auto big = random_am(25, 10, rng);
    cfg.iterations = 50;
    GreedyState run = greedy_run(big, cfg);
    CHECK(iterate_difference_check(big, run) <= 1e-10);
    CHECK(convex_weights_valid(big, run));
    run.iterates[20][3] += 1e-6;
    CHECK(iterate_difference_check(big, run) > 1e-10);
    run.u[0] += 1e-3;
    CHECK_FALSE(convex_weights_valid(big, run));
}

TEST_CASE("lemma 1 check") {
    GreedyState s;
    s.loss_history = {0.5};
    CHECK(lemma1_check(s, 1.0, 123.0) == std::vector<bool>{true});
    CHECK(lemma1_bound(1, 0.5, 1.0, 123.0) == 1.0);
    s.loss_history = {0.5, 5.0};
    CHECK(lemma1_check(s, 1.0, 0.1) == std::vector<bool>{true, false});

    std::mt19937_64 rng(16);
    const auto am = random_am(30, 8, rng);
    PruneConfig cfg;
    cfg.iterations = 80;
    const GreedyState run = greedy_run(am, cfg);
    std::vector<double> mean(8, 0.0);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 8; ++j) mean[j] += am.phi(i, j) / 30.0;
    const auto ok = lemma1_check(run, diameter(Polytope(am.phi)).value, l2_loss(mean, am.y));
    for (bool b : ok) CHECK(b);
}

TEST_CASE("rate fit on exact power laws") {
    std::vector<double> a, b;
    for (int k = 1; k <= 200; ++k) {
        a.push_back(3.0 / k);
        b.push_back(3.0 / (double(k) * k));
    }
    CHECK(rate_fit(a, 10).exponent == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(rate_fit(b, 10, 200).exponent == doctest::Approx(-2.0).epsilon(1e-9));
    b[50] = 0.0;
    const RateFit z = rate_fit(b, 10);
    CHECK(z.exact_fit);
    CHECK(std::isinf(z.exponent));
    CHECK(z.exponent < 0);
}

TEST_CASE("w vector") {
    const auto am = make_am(2, 2, {1, 0, 0, 1}, {0.5, 0.5});
    PruneConfig cfg;
    cfg.iterations = 2;
    const GreedyState s = greedy_run(am, cfg);
    const auto w = w_vector(am, s);
    CHECK(w[0] == doctest::Approx(0.0));
    CHECK(w[1] == doctest::Approx(0.0));
}

TEST_CASE("csv exports") {
    const auto am = make_am(3, 2, {1, 0, 0, 1, 0.5, 0.5}, {0.6, 0.4});
    PruneConfig cfg;
    cfg.iterations = 3;
    const GreedyState s = greedy_run(am, cfg);
    std::ostringstream out;
    write_prune_csv(out, s);
    CHECK(out.str().rfind("k,chosen_index,loss,distinct_count\n1,2,", 0) == 0);

    std::stringstream ms;
    write_multiset_csv(ms, s.counts);
    CHECK(read_multiset_csv(ms, 3) == s.counts);
    std::stringstream bad("index,count\n7,1\n");
    CHECK_THROWS_AS(read_multiset_csv(bad, 3), Error);
}
