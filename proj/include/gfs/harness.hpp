#pragma once

#include "gfs/bounds.hpp"
#include "gfs/data.hpp"
#include "gfs/model.hpp"
#include "gfs/polytope.hpp"
#include "gfs/pruning.hpp"
#include "gfs/training.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gfs {

// ---------------------------------------------------------------------------
// Flat key = value configuration. '#' starts a comment; blank lines are
// ignored; later assignments override earlier ones. Lists are comma
// separated. Every parse problem raises Errc::config.
// ---------------------------------------------------------------------------
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in, const std::string& origin = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    // "key=value"
    void set(const std::string& assignment);
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const;

    // Errc::config naming the first key outside `known`.
    void reject_unknown(const std::set<std::string>& known) const;

    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Data sources
// ---------------------------------------------------------------------------
struct DataSpec {
    std::string source = "synthetic";  // synthetic | mnist | cache
    SyntheticTask task = SyntheticTask::binary;
    std::size_t d = 20;                // synthetic only
    std::filesystem::path mnist_dir;   // holds images-idx3-ubyte and labels-idx1-ubyte
    std::filesystem::path cache_path;
    bool binarize = true;              // mnist: digits < 5 → 0, otherwise 1
    bool normalize = false;            // mnist: rescale rows to unit norm
};

// Keys: source, task, dim, mnist_dir, cache, binarize, normalize.
DataSpec data_spec_from(const KeyValueConfig& cfg);
extern const std::set<std::string> kDataKeys;

// m examples drawn deterministically from `seed`.
Dataset load_dataset(const DataSpec& spec, std::size_t m, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------
struct SweepConfig {
    DataSpec data;
    std::vector<std::size_t> sub_sizes{256, 1024, 4096};
    std::size_t checkpoint_every = 250;
    std::size_t total_iterations = 2000;
    std::vector<std::size_t> widths{512};
    std::size_t trials = 3;
    std::uint64_t base_seed = 0;
    ActivationSpec activation{ActivationKind::sigmoid};
    OutputHead head = OutputHead::sigmoid;
    TrainConfig train = empirical_train_config();
    PruneConfig prune;
    std::size_t threads = 1;

    void validate() const;
    std::vector<std::size_t> checkpoints() const;  // 0, every, 2·every, …, total
};

SweepConfig sweep_config_from(const KeyValueConfig& cfg);

struct SweepCell {
    std::size_t m = 0, t = 0, N = 0, trial = 0;
    double accuracy = 0.0;    // pruned network on the full sub-dataset
    double loss = 0.0;        // pruned network, training criterion
    double dense_loss = 0.0;  // dense network at the same checkpoint
    std::size_t distinct = 0;
};

struct SweepGrid {
    std::vector<SweepCell> cells;  // sorted by (m, t, N, trial)
};

// Seeds. Each is a pure function of its coordinates.
std::uint64_t data_seed(std::uint64_t base, std::size_t m, std::size_t trial);
std::uint64_t init_seed(std::uint64_t base, std::size_t m, std::size_t n, std::size_t trial);
std::uint64_t cell_seed(std::uint64_t base, std::size_t m, std::size_t n, std::size_t trial, std::size_t t);

SweepGrid run_sweep(const SweepConfig& cfg);

// Long-form CSV "m,t,N,trial,accuracy,loss".
void write_grid_csv(std::ostream& out, const SweepGrid& grid);
SweepGrid read_grid_csv(std::istream& in);

enum class TargetRule { fraction_of_final, absolute };

struct ThresholdRule {
    TargetRule kind = TargetRule::fraction_of_final;
    double value = 0.95;  // fraction of the final accuracy, or the accuracy itself
};

struct ThresholdRow {
    std::size_t m = 0, N = 0;
    double target = 0.0;
    std::optional<std::size_t> threshold;  // nullopt: never
};

// Per (m, N): the first checkpoint whose trial-averaged accuracy reaches the target.
std::vector<ThresholdRow> threshold_trace(const SweepGrid& grid, const ThresholdRule& rule);

// CSV "m,N,target,threshold" with "never" for unmet targets.
void write_threshold_csv(std::ostream& out, std::span<const ThresholdRow> rows);

// Number of adjacent decreases in the sequence (the "inversions" tolerated by
// the monotone-trend checks). "never" counts as +∞.
std::size_t count_inversions(std::span<const std::optional<std::size_t>> values);

// ---------------------------------------------------------------------------
// Membership epochs
// ---------------------------------------------------------------------------
struct MembershipConfig {
    DataSpec data = [] {
        DataSpec s;
        s.source = "mnist";
        return s;
    }();
    std::vector<std::size_t> sizes{500, 1000};
    std::vector<std::size_t> widths;  // empty: N = floor(width_factor · m² / d) + 1
    double width_factor = 1.0;
    std::size_t max_epochs = 5;
    std::size_t seeds = 3;
    std::uint64_t base_seed = 0;
    double learning_rate = 0.01;
    double margin = 1e-6;
    PivotRule pivot_rule = PivotRule::dantzig_then_bland;

    void validate() const;
    std::size_t width_for(std::size_t m, std::size_t d, std::size_t index) const;
};

MembershipConfig membership_config_from(const KeyValueConfig& cfg);

struct MembershipEpoch {
    std::size_t m = 0, N = 0, seed = 0, epoch = 0;
    bool inside = false;
    double phase1 = 0.0;
};

struct MembershipRun {
    std::size_t m = 0, N = 0, seed = 0;
    std::optional<std::size_t> first_epoch;  // nullopt: never within budget
};

struct MembershipReport {
    std::vector<MembershipEpoch> epochs;
    std::vector<MembershipRun> runs;
};

// Classification LP on the given network: class-0 rows need Σα_i Φ_ij ≤ −τ,
// class-1 rows ≥ τ.
MembershipResult network_membership(const TwoLayerNet& net, const Dataset& ds, double margin,
                                    const LpOptions& opts = {});

// Trains one (m, N, seed) run with sigmoid hidden units, sigmoid head, bce
// and batch 1, testing membership before training and after every epoch;
// stops at the first satisfied epoch.
MembershipRun membership_run(const Dataset& ds, std::size_t n, std::uint64_t seed, const MembershipConfig& cfg,
                             std::vector<MembershipEpoch>* log = nullptr, std::size_t seed_index = 0);

MembershipReport run_membership_experiment(const MembershipConfig& cfg);

// CSV "m,N,seed,epoch,inside,phase1_objective".
void write_membership_epochs_csv(std::ostream& out, const MembershipReport& report);
// CSV "m,N,seed,first_epoch".
void write_membership_runs_csv(std::ostream& out, const MembershipReport& report);

// ---------------------------------------------------------------------------
// Bound verification
// ---------------------------------------------------------------------------
struct BoundReportConfig {
    DataSpec data = [] {
        DataSpec s;
        s.task = SyntheticTask::regression;
        s.d = 8;
        return s;
    }();
    std::size_t m = 32;
    std::size_t N = 256;
    std::size_t t = 500;          // pre-training iterations
    std::size_t prune_iterations = 100;
    double learning_rate = 0.05;
    std::size_t record_every = 10;
    ActivationSpec activation{ActivationKind::sigmoid};
    double zeta = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

BoundReportConfig bound_report_config_from(const KeyValueConfig& cfg);

struct BoundReport {
    std::vector<BoundRow> rows;
    double diameter = 0.0;
    double dense_loss = 0.0;  // L_N
    double L0 = 0.0;
    std::optional<double> rho;
    std::optional<double> c;
    std::vector<std::string> warnings;
};

// Errc::invariant_violation naming k if ℓ(u_k) exceeds the Lemma 1 bound by more than 1e-9.
BoundReport run_bound_report(const BoundReportConfig& cfg);

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------
struct GradcheckRow {
    std::size_t index = 0;
    ActivationKind activation = ActivationKind::sigmoid;
    Criterion criterion = Criterion::l2;
    std::size_t coordinates = 0;
    double max_rel_error = 0.0;
};

// Random small (net, batch) pairs cycling through {sigmoid, tanh} × {l2, bce};
// every weight is compared with a central difference of step h.
std::vector<GradcheckRow> run_gradcheck(std::size_t cases, std::uint64_t seed, double h = 1e-6);

// CSV "case,activation,criterion,coordinates,max_rel_error".
void write_gradcheck_csv(std::ostream& out, std::span<const GradcheckRow> rows);

}  // namespace gfs
