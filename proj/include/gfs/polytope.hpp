#pragma once

#include "gfs/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gfs {

// ---------------------------------------------------------------------------
// Marginal polytope: the convex hull of the rows of an N × m vertex matrix.
// Non-owning; the matrix must outlive the Polytope.
// ---------------------------------------------------------------------------
class Polytope {
public:
    explicit Polytope(const Matrix& vertices);

    std::size_t vertex_count() const noexcept { return vertices_->rows(); }
    std::size_t dim() const noexcept { return vertices_->cols(); }
    std::span<const double> vertex(std::size_t i) const { return vertices_->row(i); }
    const Matrix& vertices() const noexcept { return *vertices_; }

private:
    const Matrix* vertices_;
};

struct DiameterOptions {
    // When set and N exceeds `sample_above`, estimate from `samples` random
    // pairs instead of the exhaustive scan. The result is then a lower bound.
    bool allow_sampling = false;
    std::size_t sample_above = 5000;
    std::size_t samples = 1'000'000;
    std::uint64_t seed = 0;
};

struct DiameterResult {
    double value = 0.0;
    bool lower_bound = false;
    std::size_t first = 0;   // a pair attaining `value`
    std::size_t second = 0;
};

// Maximum vertex-to-vertex distance (the diameter of the hull).
DiameterResult diameter(const Polytope& p, const DiameterOptions& opts = {});

// argmin_i ⟨direction, Φ_i⟩, lowest index on ties.
std::size_t lmo(const Polytope& p, std::span<const double> direction);

// ---------------------------------------------------------------------------
// Linear programs
//
//   minimize    objectiveᵀ x
//   subject to  eq · x = eq_rhs
//               ineq · x ≤ ineq_rhs
//               x_j ≥ 0 where nonneg[j]  (empty nonneg: all variables ≥ 0)
// ---------------------------------------------------------------------------
struct LpProblem {
    std::vector<double> objective;
    Matrix eq;
    std::vector<double> eq_rhs;
    Matrix ineq;
    std::vector<double> ineq_rhs;
    std::vector<bool> nonneg;

    std::size_t variables() const noexcept { return objective.size(); }
    void validate() const;
};

enum class LpStatus { feasible, infeasible, unbounded };

enum class PivotRule {
    bland,             // lowest-index entering and leaving variables
    dantzig_then_bland // most negative reduced cost, falling back to Bland after a degenerate stall
};

struct LpOptions {
    PivotRule rule = PivotRule::bland;
    double feasibility_tol = 1e-9;  // phase-1 objective threshold
    double pivot_tol = 1e-11;
    double cost_tol = 1e-12;
};

struct LpOutcome {
    LpStatus status = LpStatus::infeasible;
    std::optional<std::vector<double>> solution;  // present when feasible
    double objective = 0.0;
    double phase1_objective = 0.0;                // sum of artificials at the end of phase 1
    double max_violation = 0.0;                   // re-substitution residual of `solution`
    std::vector<std::size_t> basis;               // standard-form basic column per row
    std::size_t pivots = 0;
};

// Two-phase primal simplex on a dense tableau. Every feasible return has been
// re-substituted into the original constraints and satisfies them within
// feasibility_tol; otherwise Errc::numerical is thrown. The pivot budget is
// 50 · (rows + cols) of the standard form (Errc::iteration_cap).
LpOutcome lp_solve(const LpProblem& prob, const LpOptions& opts = {});

// Largest violation of prob's constraints by x.
double constraint_violation(const LpProblem& prob, std::span<const double> x);

// Plain-text form, one constraint per line:
//   vars <n>
//   min c_1 … c_n
//   eq a_1 … a_n = b
//   le a_1 … a_n <= b
//   free j
void write_lp(std::ostream& out, const LpProblem& prob);
LpProblem read_lp(std::istream& in);
void write_lp_outcome(std::ostream& out, const LpOutcome& outcome);

// ---------------------------------------------------------------------------
// Hull membership
// ---------------------------------------------------------------------------
enum class Membership { inside, outside };

struct MembershipResult {
    Membership verdict = Membership::outside;
    double phase1_objective = 0.0;
    std::optional<std::vector<double>> alpha;
};

// Feasibility of  Σ α_i Φ_i = y,  Σ α_i = 1,  α ≥ 0.
MembershipResult hull_membership(const Polytope& p, std::span<const double> y,
                                 const LpOptions& opts = {});

// Feasibility of  class0 · α ≤ −τ,  class1 · α ≥ τ,  Σ α = 1,  α ≥ 0.
// Rows of class0/class1 are examples, columns are neurons.
MembershipResult classification_membership(const Matrix& class0, const Matrix& class1, double margin = 1e-6,
                                           const LpOptions& opts = {});

// "INSIDE <phase1>" / "OUTSIDE <phase1>"
std::string format_verdict(const MembershipResult& r);

}  // namespace gfs
