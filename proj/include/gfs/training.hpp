#pragma once

#include "gfs/data.hpp"
#include "gfs/model.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace gfs {

struct TrainConfig {
    std::size_t iterations = 0;
    double learning_rate = 0.01;  // 0 is accepted and leaves the weights untouched
    std::size_t batch_size = 1;
    double momentum = 0.0;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    Criterion criterion = Criterion::l2;
    std::size_t record_every = 1;
    // false: each epoch walks a fresh seeded permutation in batch_size chunks.
    // true: every batch is drawn i.i.d. with replacement.
    bool with_replacement = false;

    void validate(std::size_t m) const;
};

// Appendix-style defaults: pure SGD on the l2 loss, no momentum or decay.
TrainConfig theory_train_config();
// Empirical defaults: batch 128, momentum 0.9, bce (pair with a sigmoid head).
TrainConfig empirical_train_config();

struct TracePoint {
    std::size_t iteration = 0;
    double loss = 0.0;
    double accuracy = 0.0;  // NaN when labels are not binary
};

struct TrainTrace {
    std::vector<TracePoint> checkpoints;
    double initial_loss = 0.0;
    TwoLayerNet final_net;
};

// Standard-normal b_i and a_i from a seeded generator.
TwoLayerNet init_weights(std::size_t n, std::size_t d, std::uint64_t seed,
                         ActivationSpec activation = {}, OutputHead head = OutputHead::linear);

// Called at every recorded checkpoint with the live weights; copy them to keep them.
using CheckpointHook = std::function<void(std::size_t iteration, const TwoLayerNet&)>;

// Runs cfg.iterations steps of mini-batch SGD with momentum (v ← μv + g + λθ,
// θ ← θ − ηv). Records the full-dataset loss at iteration 0, every
// record_every steps, and at the final step. Throws Errc::divergence naming
// the iteration if a loss becomes non-finite or exceeds 1e12 in magnitude.
TrainTrace train(TwoLayerNet net, const Dataset& ds, const TrainConfig& cfg,
                 const CheckpointHook& hook = {});

// CSV "iteration,loss,accuracy" with 17 significant digits.
void write_trace_csv(std::ostream& out, const TrainTrace& trace);

// Least-squares fit of log(loss) against iteration.
struct DecayFit {
    double rho = 1.0;        // exp(slope), clipped to (0, 1]
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;  // 1 for a constant series
};

DecayFit fit_decay(std::span<const double> iterations, std::span<const double> losses);
DecayFit fit_decay(const TrainTrace& trace);
double fit_decay_rate(const TrainTrace& trace);

enum class RateMode { sgd, gd };

// Inverts ρ = 1 − c·d/m² (sgd) or ρ = 1 − c·d/m (gd).
double estimate_c(double rho, std::size_t m, std::size_t d, RateMode mode);

}  // namespace gfs
