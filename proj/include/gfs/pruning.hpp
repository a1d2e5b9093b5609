#pragma once

#include "gfs/data.hpp"
#include "gfs/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace gfs {

enum class SelectionMode { full, minibatch };

// What the candidate scan minimizes.
//   polytope: ½‖(z + Φ_i)/(k+1) − y‖² on the scaled activation vectors.
//   head:     the same squared error after the network's output head,
//             ½ Σ_j (head(√m·v_j)/√m − y_j)² with v = (z + Φ_i)/(k+1).
// The two coincide for a linear head.
enum class SelectionTarget { polytope, head };

struct PruneConfig {
    std::size_t iterations = 1;  // P, greedy steps (repeats allowed)
    SelectionMode selection = SelectionMode::full;
    std::size_t batch_size = 0;  // examples per step in minibatch mode
    std::uint64_t batch_seed = 0;
    SelectionTarget target = SelectionTarget::polytope;
    OutputHead head = OutputHead::linear;  // used when target == head
    // Score candidates from cached inner products instead of recomputing the
    // residual. Polytope target with full selection only.
    bool incremental = false;
    bool record_iterates = false;  // keep u_1 … u_P for the identity check

    void validate(std::size_t m) const;
};

struct GreedyState {
    std::size_t k = 0;
    std::vector<double> z;              // Σ of chosen Φ rows
    std::vector<double> u;              // z / k (zero before the first step)
    Multiset counts;                    // multiplicity per neuron, Σ = k
    std::vector<double> loss_history;   // full-dataset ℓ(u_k) for k = 1 … K
    std::vector<std::size_t> chosen;    // q_1 … q_K
    std::vector<std::vector<double>> iterates;  // u_1 … u_K when recorded

    // Incremental caches: ‖Φ_i‖², ⟨Φ_i, y⟩, ⟨Φ_i, z⟩.
    std::vector<double> phi_sq, phi_y, phi_z;

    static GreedyState empty(std::size_t neurons, std::size_t examples);
    std::size_t distinct() const;
};

// Selection loss of every candidate at the current state, restricted to the
// example columns in `columns` (all columns when empty).
std::vector<double> candidate_losses(const ActivationMatrix& am, const GreedyState& state,
                                     const PruneConfig& cfg, std::span<const std::size_t> columns = {});

// Same quantity for the polytope target from the cached inner products.
std::vector<double> candidate_losses_incremental(const ActivationMatrix& am, GreedyState& state);

// Example columns scored at step k (1-based) under cfg; empty means all.
std::vector<std::size_t> selection_columns(const PruneConfig& cfg, std::size_t m, std::size_t k);

// One step: scan, take the lowest-index minimizer, update k, z, u, counts and
// append ℓ(u) over the full dataset. Returns the chosen index.
std::size_t greedy_step(const ActivationMatrix& am, GreedyState& state, const PruneConfig& cfg);

// Runs `iterations` steps from the empty state.
GreedyState greedy_run(const ActivationMatrix& am, const PruneConfig& cfg);

struct PruneResult {
    GreedyState state;
    Multiset subnet;
};

PruneResult greedy_forward_selection(const TwoLayerNet& net, const Dataset& ds, const PruneConfig& cfg);

// Dense network over the distinct neurons of S with outer weights rescaled so
// that its forward pass equals forward_pruned on S.
TwoLayerNet materialize_subnet(const TwoLayerNet& net, const Multiset& counts);

// Largest entrywise gap between √m·u and the pruned pre-head outputs.
double pruned_consistency(const TwoLayerNet& net, const Dataset& ds, const GreedyState& state);

// max_k ‖(u_k − u_{k−1}) − (Φ_{q_k} − u_{k−1})/k‖ with u_0 = 0. Needs recorded iterates.
double iterate_difference_check(const ActivationMatrix& am, const GreedyState& state);

// Σ counts = k ≥ 1 and u equals Σ (counts_i / k) Φ_i within tol.
bool convex_weights_valid(const ActivationMatrix& am, const GreedyState& state, double tol = 1e-10);

// ℓ(u_k) ≤ lemma1_bound(k) + 1e-9 for each recorded k.
std::vector<bool> lemma1_check(const GreedyState& state, double diameter, double dense_loss);

// w_k = k (y − u_k).
std::vector<double> w_vector(const ActivationMatrix& am, const GreedyState& state);

struct RateFit {
    double exponent = 0.0;  // −∞ when an exact fit (zero loss) was hit
    bool exact_fit = false;
    double r_squared = 0.0;
};

// Least-squares slope of log ℓ(u_k) against log k over k_min ≤ k ≤ k_max
// (k_max = 0: through the end of the history).
RateFit rate_fit(std::span<const double> loss_history, std::size_t k_min, std::size_t k_max = 0);

// CSV "k,chosen_index,loss,distinct_count".
void write_prune_csv(std::ostream& out, const GreedyState& state);
// CSV "index,count", one line per neuron with a nonzero count.
void write_multiset_csv(std::ostream& out, const Multiset& counts);
Multiset read_multiset_csv(std::istream& in, std::size_t neurons);

}  // namespace gfs
