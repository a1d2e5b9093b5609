#include "gfs/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace gfs {

Polytope::Polytope(const Matrix& vertices) : vertices_(&vertices) {
    require(vertices.rows() >= 1, "polytope needs at least one vertex");
    for (double v : vertices.data()) require(std::isfinite(v), "polytope vertices must be finite");
}

DiameterResult diameter(const Polytope& p, const DiameterOptions& opts) {
    const std::size_t n = p.vertex_count();
    DiameterResult best;
    auto consider = [&](std::size_t i, std::size_t j) {
        const double d2 = squared_distance(p.vertex(i), p.vertex(j));
        if (d2 > best.value) {
            best.value = d2;
            best.first = i;
            best.second = j;
        }
    };
    if (opts.allow_sampling && n > opts.sample_above) {
        std::mt19937_64 rng(opts.seed);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t s = 0; s < opts.samples; ++s) consider(pick(rng), pick(rng));
        best.lower_bound = true;
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) consider(i, j);
    }
    best.value = std::sqrt(best.value);
    return best;
}

std::size_t lmo(const Polytope& p, std::span<const double> direction) {
    require(direction.size() == p.dim(), "lmo direction length must equal the vertex dimension");
    std::size_t arg = 0;
    double best = dot(direction, p.vertex(0));
    for (std::size_t i = 1; i < p.vertex_count(); ++i) {
        const double v = dot(direction, p.vertex(i));
        if (v < best) {
            best = v;
            arg = i;
        }
    }
    return arg;
}

// ---------------------------------------------------------------------------
// LP problem plumbing
// ---------------------------------------------------------------------------

void LpProblem::validate() const {
    const std::size_t n = variables();
    require(n >= 1, "LP needs at least one variable");
    require(eq.rows() == eq_rhs.size(), "equality matrix and rhs disagree");
    require(ineq.rows() == ineq_rhs.size(), "inequality matrix and rhs disagree");
    require(eq.rows() == 0 || eq.cols() == n, "equality matrix width must equal the variable count");
    require(ineq.rows() == 0 || ineq.cols() == n, "inequality matrix width must equal the variable count");
    require(nonneg.empty() || nonneg.size() == n, "nonneg flags must cover every variable");
    require(eq.rows() + ineq.rows() >= 1, "LP needs at least one constraint");
}

double constraint_violation(const LpProblem& prob, std::span<const double> x) {
    double worst = 0.0;
    for (std::size_t r = 0; r < prob.eq.rows(); ++r)
        worst = std::max(worst, std::abs(dot(prob.eq.row(r), x) - prob.eq_rhs[r]));
    for (std::size_t r = 0; r < prob.ineq.rows(); ++r)
        worst = std::max(worst, dot(prob.ineq.row(r), x) - prob.ineq_rhs[r]);
    for (std::size_t j = 0; j < x.size(); ++j)
        if (prob.nonneg.empty() || prob.nonneg[j]) worst = std::max(worst, -x[j]);
    return worst;
}

namespace {

// Dense simplex tableau over the standard form  A x = b, x ≥ 0, b ≥ 0.
// Artificial columns are implicit: artificial k is basic in row k until it
// leaves, after which it never re-enters.
class Simplex {
public:
    Simplex(const LpProblem& prob, const LpOptions& opts) : prob_(prob), opts_(opts) { build(); }

    LpOutcome run() {
        LpOutcome out;
        pivot_cap_ = 50 * (rows_ + cols_ + rows_);
        reinvert_every_ = std::max<std::size_t>(rows_, 100);

        // Phase 1: minimize the sum of artificials.
        phase1_ = true;
        refresh_objectives();
        iterate(out.pivots);
        out.phase1_objective = std::max(0.0, -w_[cols_]);

        if (out.phase1_objective > opts_.feasibility_tol) {
            out.status = LpStatus::infeasible;
            out.basis = basis_;
            return out;
        }
        phase1_ = false;
        drive_out_artificials(out.pivots);

        // Phase 2 on the original objective.
        const bool bounded = iterate(out.pivots);
        out.basis = basis_;
        if (!bounded) {
            out.status = LpStatus::unbounded;
            return out;
        }

        std::vector<double> x = to_original(basic_solution());
        double viol = constraint_violation(prob_, x);
        if (viol > opts_.feasibility_tol) {
            reinvert();
            x = to_original(basic_solution());
            viol = constraint_violation(prob_, x);
            if (viol > opts_.feasibility_tol) {
                fail(Errc::numerical, "simplex solution violates constraints by " + format_real(viol));
            }
        }
        out.status = LpStatus::feasible;
        out.max_violation = viol;
        out.objective = dot(prob_.objective, x);
        out.solution = std::move(x);
        return out;
    }

private:
    const LpProblem& prob_;
    const LpOptions& opts_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;  // structural + slack columns
    std::vector<std::size_t> plus_col_;
    std::vector<std::ptrdiff_t> minus_col_;  // -1 for nonnegative variables
    std::vector<double> cost_;               // standard-form objective
    std::vector<double> tab_;                // rows_ × (cols_ + 1), last column is the rhs
    Matrix a_std_;                           // original standard-form matrix (for reinversion)
    std::vector<double> b_std_;
    std::vector<std::size_t> basis_;
    std::vector<double> w_;  // phase-1 reduced costs
    std::vector<double> c_;  // phase-2 reduced costs
    bool phase1_ = true;
    std::size_t pivot_cap_ = 0;
    std::size_t reinvert_every_ = 0;
    std::size_t since_reinvert_ = 0;

    double& at(std::size_t r, std::size_t j) { return tab_[r * (cols_ + 1) + j]; }
    double at(std::size_t r, std::size_t j) const { return tab_[r * (cols_ + 1) + j]; }
    bool is_artificial(std::size_t col) const { return col >= cols_; }

    void build() {
        const std::size_t n = prob_.variables();
        std::size_t next = 0;
        plus_col_.resize(n);
        minus_col_.assign(n, -1);
        for (std::size_t j = 0; j < n; ++j) {
            plus_col_[j] = next++;
            if (!prob_.nonneg.empty() && !prob_.nonneg[j]) minus_col_[j] = static_cast<std::ptrdiff_t>(next++);
        }
        const std::size_t structural = next;
        const std::size_t n_eq = prob_.eq.rows();
        const std::size_t n_ineq = prob_.ineq.rows();
        rows_ = n_eq + n_ineq;
        cols_ = structural + n_ineq;

        cost_.assign(cols_, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            cost_[plus_col_[j]] = prob_.objective[j];
            if (minus_col_[j] >= 0) cost_[static_cast<std::size_t>(minus_col_[j])] = -prob_.objective[j];
        }

        a_std_ = Matrix(rows_, cols_);
        b_std_.assign(rows_, 0.0);
        basis_.resize(rows_);
        for (std::size_t r = 0; r < rows_; ++r) {
            const bool is_eq = r < n_eq;
            const auto src = is_eq ? prob_.eq.row(r) : prob_.ineq.row(r - n_eq);
            const double rhs = is_eq ? prob_.eq_rhs[r] : prob_.ineq_rhs[r - n_eq];
            const double sign = rhs < 0.0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < n; ++j) {
                a_std_(r, plus_col_[j]) = sign * src[j];
                if (minus_col_[j] >= 0) a_std_(r, static_cast<std::size_t>(minus_col_[j])) = -sign * src[j];
            }
            if (!is_eq) a_std_(r, structural + (r - n_eq)) = sign;
            b_std_[r] = sign * rhs;
            basis_[r] = (!is_eq && sign > 0.0) ? structural + (r - n_eq) : cols_ + r;
        }

        tab_.assign(rows_ * (cols_ + 1), 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            std::copy(a_std_.row(r).begin(), a_std_.row(r).end(), tab_.begin() + static_cast<std::ptrdiff_t>(r * (cols_ + 1)));
            at(r, cols_) = b_std_[r];
        }
    }

    // Reduced-cost rows recomputed from the current tableau.
    void refresh_objectives() {
        c_.assign(cols_ + 1, 0.0);
        std::copy(cost_.begin(), cost_.end(), c_.begin());
        for (std::size_t r = 0; r < rows_; ++r) {
            if (is_artificial(basis_[r])) continue;
            const double cb = cost_[basis_[r]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= cols_; ++j) c_[j] -= cb * at(r, j);
        }
        if (!phase1_) return;
        w_.assign(cols_ + 1, 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            if (!is_artificial(basis_[r])) continue;
            for (std::size_t j = 0; j <= cols_; ++j) w_[j] -= at(r, j);
        }
    }

    // Rebuilds B⁻¹[A | b] from the original data by Gauss-Jordan elimination
    // with partial pivoting, discarding the drift accumulated by pivoting.
    void reinvert() {
        const std::size_t width = rows_ + cols_ + 1;
        std::vector<double> g(rows_ * width, 0.0);
        auto G = [&](std::size_t r, std::size_t c) -> double& { return g[r * width + c]; };
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t k = 0; k < rows_; ++k) {
                const std::size_t col = basis_[k];
                G(r, k) = is_artificial(col) ? (col - cols_ == r ? 1.0 : 0.0) : a_std_(r, col);
            }
            for (std::size_t j = 0; j < cols_; ++j) G(r, rows_ + j) = a_std_(r, j);
            G(r, width - 1) = b_std_[r];
        }
        for (std::size_t k = 0; k < rows_; ++k) {
            std::size_t piv = k;
            for (std::size_t r = k + 1; r < rows_; ++r)
                if (std::abs(G(r, k)) > std::abs(G(piv, k))) piv = r;
            if (std::abs(G(piv, k)) < 1e-300) fail(Errc::numerical, "singular basis during reinversion");
            if (piv != k) std::swap_ranges(&G(k, 0), &G(k, 0) + width, &G(piv, 0));
            const double inv = 1.0 / G(k, k);
            for (std::size_t c = k; c < width; ++c) G(k, c) *= inv;
            for (std::size_t r = 0; r < rows_; ++r) {
                if (r == k) continue;
                const double f = G(r, k);
                if (f == 0.0) continue;
                for (std::size_t c = k; c < width; ++c) G(r, c) -= f * G(k, c);
            }
        }
        for (std::size_t r = 0; r < rows_; ++r) {
            std::copy(&G(r, rows_), &G(r, rows_) + cols_ + 1, tab_.begin() + static_cast<std::ptrdiff_t>(r * (cols_ + 1)));
            for (std::size_t j = 0; j < cols_; ++j)
                if (!is_artificial(basis_[r]) && basis_[r] == j) at(r, j) = 1.0;
        }
        refresh_objectives();
        since_reinvert_ = 0;
    }

    void pivot(std::size_t pr, std::size_t pc) {
        const std::size_t width = cols_ + 1;
        double* prow = &tab_[pr * width];
        const double inv = 1.0 / prow[pc];
        for (std::size_t j = 0; j < width; ++j) prow[j] *= inv;
        prow[pc] = 1.0;
        auto eliminate = [&](double* row) {
            const double f = row[pc];
            if (f == 0.0) return;
            for (std::size_t j = 0; j < width; ++j) row[j] -= f * prow[j];
            row[pc] = 0.0;
        };
        for (std::size_t r = 0; r < rows_; ++r)
            if (r != pr) eliminate(&tab_[r * width]);
        eliminate(c_.data());
        if (phase1_) eliminate(w_.data());
        basis_[pr] = pc;
        if (++since_reinvert_ >= reinvert_every_) reinvert();
    }

    // Returns false when the objective is unbounded below.
    bool iterate(std::size_t& pivots) {
        bool use_bland = opts_.rule == PivotRule::bland;
        std::size_t degenerate_run = 0;
        constexpr std::size_t kStallLimit = 50;
        constexpr double kDegenerateStep = 1e-12;
        for (;;) {
            const std::vector<double>& obj = phase1_ ? w_ : c_;
            std::size_t enter = cols_;
            if (use_bland) {
                for (std::size_t j = 0; j < cols_; ++j) {
                    if (obj[j] < -opts_.cost_tol) {
                        enter = j;
                        break;
                    }
                }
            } else {
                double most = -opts_.cost_tol;
                for (std::size_t j = 0; j < cols_; ++j) {
                    if (obj[j] < most) {
                        most = obj[j];
                        enter = j;
                    }
                }
            }
            if (enter == cols_) return true;

            std::size_t leave = rows_;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < rows_; ++r) {
                const double a = at(r, enter);
                if (a <= opts_.pivot_tol) continue;
                const double ratio = std::max(0.0, at(r, cols_)) / a;
                if (leave == rows_) {
                    best = ratio;
                    leave = r;
                    continue;
                }
                const double tie = 1e-12 * std::max(1.0, best);
                if (ratio < best - tie) {
                    best = ratio;
                    leave = r;
                } else if (ratio <= best + tie && basis_[r] < basis_[leave]) {
                    leave = r;
                }
            }
            if (leave == rows_) return false;

            if (++pivots > pivot_cap_) {
                fail(Errc::iteration_cap, "simplex exceeded " + std::to_string(pivot_cap_) + " pivots");
            }
            pivot(leave, enter);

            if (opts_.rule == PivotRule::dantzig_then_bland) {
                if (best <= kDegenerateStep) {
                    if (++degenerate_run >= kStallLimit) use_bland = true;
                } else {
                    degenerate_run = 0;
                    use_bland = false;
                }
            }
        }
    }

    void drive_out_artificials(std::size_t& pivots) {
        for (std::size_t r = 0; r < rows_; ++r) {
            if (!is_artificial(basis_[r])) continue;
            std::size_t col = cols_;
            double mag = opts_.pivot_tol;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (std::abs(at(r, j)) > mag) {
                    mag = std::abs(at(r, j));
                    col = j;
                }
            }
            if (col == cols_) continue;  // redundant row; its artificial stays basic at zero
            ++pivots;
            pivot(r, col);
        }
    }

    std::vector<double> basic_solution() const {
        std::vector<double> xs(cols_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            if (!is_artificial(basis_[r])) xs[basis_[r]] = at(r, cols_);
        return xs;
    }

    std::vector<double> to_original(const std::vector<double>& xs) const {
        std::vector<double> x(prob_.variables());
        for (std::size_t j = 0; j < x.size(); ++j) {
            x[j] = xs[plus_col_[j]];
            if (minus_col_[j] >= 0) x[j] -= xs[static_cast<std::size_t>(minus_col_[j])];
        }
        return x;
    }
};

}  // namespace

LpOutcome lp_solve(const LpProblem& prob, const LpOptions& opts) {
    prob.validate();
    Simplex simplex(prob, opts);
    return simplex.run();
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

void write_lp(std::ostream& out, const LpProblem& prob) {
    prob.validate();
    out << "vars " << prob.variables() << '\n';
    out << "min";
    for (double c : prob.objective) out << ' ' << format_real(c);
    out << '\n';
    for (std::size_t r = 0; r < prob.eq.rows(); ++r) {
        out << "eq";
        for (double a : prob.eq.row(r)) out << ' ' << format_real(a);
        out << " = " << format_real(prob.eq_rhs[r]) << '\n';
    }
    for (std::size_t r = 0; r < prob.ineq.rows(); ++r) {
        out << "le";
        for (double a : prob.ineq.row(r)) out << ' ' << format_real(a);
        out << " <= " << format_real(prob.ineq_rhs[r]) << '\n';
    }
    for (std::size_t j = 0; j < prob.nonneg.size(); ++j)
        if (!prob.nonneg[j]) out << "free " << j << '\n';
}

LpProblem read_lp(std::istream& in) {
    LpProblem prob;
    std::size_t n = 0;
    std::vector<double> eq_data, ineq_data;
    std::vector<std::size_t> free_vars;
    std::string line;
    std::size_t line_no = 0;
    auto bad = [&](const std::string& why) {
        fail(Errc::config, "LP text line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "vars") {
            if (!(ls >> n) || n == 0) bad("bad variable count");
        } else if (tag == "min") {
            prob.objective.resize(n);
            for (double& c : prob.objective)
                if (!(ls >> c)) bad("objective too short");
        } else if (tag == "eq" || tag == "le") {
            if (n == 0) bad("constraint before 'vars'");
            auto& dst = tag == "eq" ? eq_data : ineq_data;
            for (std::size_t j = 0; j < n; ++j) {
                double a;
                if (!(ls >> a)) bad("constraint row too short");
                dst.push_back(a);
            }
            std::string rel;
            double rhs;
            if (!(ls >> rel >> rhs) || rel != (tag == "eq" ? "=" : "<=")) bad("missing relation or rhs");
            (tag == "eq" ? prob.eq_rhs : prob.ineq_rhs).push_back(rhs);
        } else if (tag == "free") {
            std::size_t j;
            if (!(ls >> j) || j >= n) bad("bad free variable index");
            free_vars.push_back(j);
        } else {
            bad("unknown tag '" + tag + "'");
        }
    }
    if (prob.objective.empty()) prob.objective.assign(n, 0.0);
    prob.eq = Matrix(prob.eq_rhs.size(), prob.eq_rhs.empty() ? 0 : n, std::move(eq_data));
    prob.ineq = Matrix(prob.ineq_rhs.size(), prob.ineq_rhs.empty() ? 0 : n, std::move(ineq_data));
    if (!free_vars.empty()) {
        prob.nonneg.assign(n, true);
        for (std::size_t j : free_vars) prob.nonneg[j] = false;
    }
    prob.validate();
    return prob;
}

void write_lp_outcome(std::ostream& out, const LpOutcome& outcome) {
    static constexpr const char* names[] = {"feasible", "infeasible", "unbounded"};
    out << "status " << names[static_cast<int>(outcome.status)] << '\n';
    out << "phase1 " << format_real(outcome.phase1_objective) << '\n';
    out << "pivots " << outcome.pivots << '\n';
    if (outcome.solution) {
        out << "objective " << format_real(outcome.objective) << '\n';
        out << "violation " << format_real(outcome.max_violation) << '\n';
        out << "x";
        for (double v : *outcome.solution) out << ' ' << format_real(v);
        out << '\n';
    }
    out << "basis";
    for (auto b : outcome.basis) out << ' ' << b;
    out << '\n';
}

// ---------------------------------------------------------------------------
// Membership tests
// ---------------------------------------------------------------------------

namespace {

MembershipResult to_membership(LpOutcome outcome) {
    MembershipResult r;
    r.phase1_objective = outcome.phase1_objective;
    if (outcome.status == LpStatus::feasible) {
        r.verdict = Membership::inside;
        r.alpha = std::move(outcome.solution);
    }
    return r;
}

}  // namespace

MembershipResult hull_membership(const Polytope& p, std::span<const double> y, const LpOptions& opts) {
    require(y.size() == p.dim(), "target length must equal the vertex dimension");
    const std::size_t n = p.vertex_count();
    const std::size_t m = p.dim();
    LpProblem prob;
    prob.objective.assign(n, 0.0);
    prob.eq = Matrix(m + 1, n);
    prob.eq_rhs.assign(y.begin(), y.end());
    prob.eq_rhs.push_back(1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = p.vertex(i);
        for (std::size_t j = 0; j < m; ++j) prob.eq(j, i) = v[j];
        prob.eq(m, i) = 1.0;
    }
    return to_membership(lp_solve(prob, opts));
}

MembershipResult classification_membership(const Matrix& class0, const Matrix& class1, double margin,
                                           const LpOptions& opts) {
    require(margin > 0.0, "margin must be positive");
    require(class0.rows() + class1.rows() >= 1, "need at least one example");
    const std::size_t n = class0.rows() > 0 ? class0.cols() : class1.cols();
    require(class0.rows() == 0 || class0.cols() == n, "class matrices must share the neuron count");
    require(class1.rows() == 0 || class1.cols() == n, "class matrices must share the neuron count");

    LpProblem prob;
    prob.objective.assign(n, 0.0);
    prob.eq = Matrix(1, n, std::vector<double>(n, 1.0));
    prob.eq_rhs = {1.0};
    prob.ineq = Matrix(class0.rows() + class1.rows(), n);
    prob.ineq_rhs.assign(prob.ineq.rows(), -margin);
    for (std::size_t r = 0; r < class0.rows(); ++r) std::ranges::copy(class0.row(r), prob.ineq.row(r).begin());
    for (std::size_t r = 0; r < class1.rows(); ++r) {
        auto dst = prob.ineq.row(class0.rows() + r);
        const auto src = class1.row(r);
        for (std::size_t i = 0; i < n; ++i) dst[i] = -src[i];
    }
    return to_membership(lp_solve(prob, opts));
}

std::string format_verdict(const MembershipResult& r) {
    return std::string(r.verdict == Membership::inside ? "INSIDE " : "OUTSIDE ") + format_real(r.phase1_objective);
}

}  // namespace gfs
