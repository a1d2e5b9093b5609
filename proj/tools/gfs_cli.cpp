// Command-line front end: sweep, trace, membership, bounds, train, prune, gradcheck.
//
// Exit codes: 0 ok, 1 configuration error, 2 invariant violation or failed
// numerical check, 3 I/O or file-format error.

#include "gfs/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>

namespace {

using namespace gfs;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitIo = 3;

int exit_code_for(Errc code) {
    switch (code) {
        case Errc::config:
        case Errc::invalid_argument:
        case Errc::missing_field:
        case Errc::rate_out_of_range:
        case Errc::non_binary_labels:
        case Errc::missing_class_ids:
        case Errc::insufficient_population:
            return kExitConfig;
        case Errc::io:
        case Errc::bad_magic:
        case Errc::truncated:
        case Errc::count_mismatch:
        case Errc::zero_row:
            return kExitIo;
        case Errc::divergence:
        case Errc::iteration_cap:
        case Errc::numerical:
        case Errc::invariant_violation:
            return kExitInvariant;
    }
    return kExitInvariant;
}

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_path;
};

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
    if (with_config) {
        cmd->add_option("-c,--config", c.config_path, "key = value configuration file");
        cmd->add_option("-s,--set", c.overrides, "override a configuration key (key=value), repeatable");
    }
    cmd->add_option("-o,--out", c.out_path, "output CSV (default: stdout)");
}

KeyValueConfig load_config(const Common& c) {
    KeyValueConfig cfg = c.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(c.config_path);
    for (const auto& o : c.overrides) cfg.set(o);
    return cfg;
}

void with_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
    if (path.empty() || path == "-") {
        body(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "cannot open " + path + " for writing");
    body(out);
    out.flush();
    if (!out) fail(Errc::io, "write failed for " + path);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "cannot open " + path);
    return in;
}

// Keys shared by train and prune to rebuild the same dataset.
const std::set<std::string> kModelRunKeys = {"m", "data_seed"};

Dataset dataset_from(const KeyValueConfig& cfg) {
    const DataSpec spec = data_spec_from(cfg);
    return load_dataset(spec, cfg.get_size("m", 256), cfg.get_u64("data_seed", 0));
}

int cmd_sweep(const Common& c, const std::string& thresholds_path) {
    const SweepConfig cfg = sweep_config_from(load_config(c));
    const SweepGrid grid = run_sweep(cfg);
    with_output(c.out_path, [&](std::ostream& o) { write_grid_csv(o, grid); });
    if (!thresholds_path.empty()) {
        const auto rows = threshold_trace(grid, {});
        with_output(thresholds_path, [&](std::ostream& o) { write_threshold_csv(o, rows); });
    }
    return kExitOk;
}

int cmd_trace(const Common& c, const std::string& grid_path, const std::string& rule, double target) {
    ThresholdRule r;
    if (rule == "fraction") {
        r.kind = TargetRule::fraction_of_final;
    } else if (rule == "absolute") {
        r.kind = TargetRule::absolute;
    } else {
        fail(Errc::config, "rule must be fraction or absolute");
    }
    r.value = target;
    auto in = open_input(grid_path);
    const SweepGrid grid = read_grid_csv(in);
    const auto rows = threshold_trace(grid, r);
    with_output(c.out_path, [&](std::ostream& o) { write_threshold_csv(o, rows); });
    return kExitOk;
}

int cmd_membership(const Common& c, const std::string& runs_path) {
    const MembershipConfig cfg = membership_config_from(load_config(c));
    const MembershipReport report = run_membership_experiment(cfg);
    with_output(c.out_path, [&](std::ostream& o) { write_membership_epochs_csv(o, report); });
    if (!runs_path.empty()) with_output(runs_path, [&](std::ostream& o) { write_membership_runs_csv(o, report); });
    return kExitOk;
}

int cmd_bounds(const Common& c) {
    const BoundReportConfig cfg = bound_report_config_from(load_config(c));
    const BoundReport report = run_bound_report(cfg);
    for (const auto& w : report.warnings) std::cerr << "warning: regime condition " << w << " does not hold\n";
    if (!report.c) std::cerr << "warning: no decay rate in (0, 1); theorem2_bound column is nan\n";
    with_output(c.out_path, [&](std::ostream& o) { write_bound_csv(o, report.rows); });
    return kExitOk;
}

int cmd_train(const Common& c, const std::string& checkpoint_path) {
    KeyValueConfig kv = load_config(c);
    std::set<std::string> known = kDataKeys;
    known.insert(kModelRunKeys.begin(), kModelRunKeys.end());
    known.insert({"N", "iterations", "learning_rate", "batch_size", "momentum", "weight_decay", "criterion",
                  "activation", "head", "seed", "record_every", "with_replacement"});
    kv.reject_unknown(known);

    const Dataset ds = dataset_from(kv);
    TrainConfig cfg;
    cfg.iterations = kv.get_size("iterations", 1000);
    cfg.learning_rate = kv.get_double("learning_rate", cfg.learning_rate);
    cfg.batch_size = kv.get_size("batch_size", cfg.batch_size);
    cfg.momentum = kv.get_double("momentum", cfg.momentum);
    cfg.weight_decay = kv.get_double("weight_decay", cfg.weight_decay);
    cfg.criterion = parse_criterion(kv.get_string("criterion", "l2"));
    cfg.seed = kv.get_u64("seed", 0);
    cfg.record_every = kv.get_size("record_every", 100);
    cfg.with_replacement = kv.get_bool("with_replacement", false);
    const ActivationSpec act{parse_activation(kv.get_string("activation", "sigmoid"))};
    const OutputHead head = parse_head(kv.get_string("head", "linear"));
    try {
        cfg.validate(ds.size());
    } catch (const Error& e) {
        fail(Errc::config, e.what());
    }

    const TwoLayerNet net = init_weights(kv.get_size("N", 512), ds.dim(), mix_seed(cfg.seed, {0x6e6574}), act, head);
    const TrainTrace trace = train(net, ds, cfg);
    with_output(c.out_path, [&](std::ostream& o) { write_trace_csv(o, trace); });
    if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, trace.final_net);
    return kExitOk;
}

int cmd_prune(const Common& c, const std::string& checkpoint_path, const std::string& multiset_path) {
    KeyValueConfig kv = load_config(c);
    std::set<std::string> known = kDataKeys;
    known.insert(kModelRunKeys.begin(), kModelRunKeys.end());
    known.insert({"prune_iterations", "prune_selection", "prune_batch", "prune_target", "prune_incremental",
                  "prune_seed"});
    kv.reject_unknown(known);

    const TwoLayerNet net = load_checkpoint(checkpoint_path);
    const Dataset ds = dataset_from(kv);
    PruneConfig cfg;
    cfg.iterations = kv.get_size("prune_iterations", 200);
    const std::string sel = kv.get_string("prune_selection", "full");
    if (sel != "full" && sel != "minibatch") fail(Errc::config, "prune_selection must be full or minibatch");
    cfg.selection = sel == "full" ? SelectionMode::full : SelectionMode::minibatch;
    cfg.batch_size = kv.get_size("prune_batch", 0);
    const std::string target = kv.get_string("prune_target", "polytope");
    if (target != "polytope" && target != "head") fail(Errc::config, "prune_target must be polytope or head");
    cfg.target = target == "head" ? SelectionTarget::head : SelectionTarget::polytope;
    cfg.incremental = kv.get_bool("prune_incremental", false);
    cfg.batch_seed = kv.get_u64("prune_seed", 0);
    try {
        cfg.validate(ds.size());
    } catch (const Error& e) {
        fail(Errc::config, e.what());
    }

    const PruneResult r = greedy_forward_selection(net, ds, cfg);
    const double gap = pruned_consistency(net, ds, r.state);
    if (gap > 1e-10 * std::max(1.0, std::sqrt(static_cast<double>(ds.size())))) {
        fail(Errc::invariant_violation, "pruned forward pass disagrees with the greedy iterate by " + format_real(gap));
    }
    with_output(c.out_path, [&](std::ostream& o) { write_prune_csv(o, r.state); });
    if (!multiset_path.empty()) with_output(multiset_path, [&](std::ostream& o) { write_multiset_csv(o, r.subnet); });
    return kExitOk;
}

int cmd_gradcheck(const Common& c, std::size_t cases, std::uint64_t seed, double tolerance) {
    const auto rows = run_gradcheck(cases, seed);
    with_output(c.out_path, [&](std::ostream& o) { write_gradcheck_csv(o, rows); });
    for (const auto& r : rows) {
        if (r.max_rel_error >= tolerance) {
            fail(Errc::invariant_violation, "gradient case " + std::to_string(r.index) + " has relative error " +
                                                format_real(r.max_rel_error));
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Greedy forward selection experiments for two-layer networks"};
    app.require_subcommand(1);

    Common sweep_c, trace_c, mem_c, bounds_c, train_c, prune_c, grad_c;
    std::string thresholds_path, grid_path, rule = "fraction", runs_path, checkpoint_out, checkpoint_in,
                                             multiset_path;
    double target = 0.95, tolerance = 1e-5;
    std::size_t cases = 20;
    std::uint64_t grad_seed = 0;

    auto* sweep = app.add_subcommand("sweep", "pre-train, prune at checkpoints, emit m,t,N,trial,accuracy,loss");
    add_common(sweep, sweep_c);
    sweep->add_option("--thresholds", thresholds_path, "also write the 95%-of-final threshold table");

    auto* trace = app.add_subcommand("trace", "first checkpoint reaching the target per sub-dataset size");
    add_common(trace, trace_c, false);
    trace->add_option("--grid", grid_path, "grid CSV from 'sweep'")->required();
    trace->add_option("--rule", rule, "fraction (of final accuracy) or absolute");
    trace->add_option("--target", target, "fraction or absolute accuracy target");

    auto* membership = app.add_subcommand("membership", "first epoch with the labels inside the marginal polytope");
    add_common(membership, mem_c);
    membership->add_option("--runs", runs_path, "also write m,N,seed,first_epoch");

    auto* bounds = app.add_subcommand("bounds", "observed pruned loss against the closed-form bounds");
    add_common(bounds, bounds_c);

    auto* trn = app.add_subcommand("train", "train a dense network and emit iteration,loss,accuracy");
    add_common(trn, train_c);
    trn->add_option("--checkpoint", checkpoint_out, "write final weights");

    auto* prune = app.add_subcommand("prune", "greedy forward selection from saved weights");
    add_common(prune, prune_c);
    prune->add_option("--checkpoint", checkpoint_in, "weights from 'train'")->required();
    prune->add_option("--multiset", multiset_path, "also write index,count");

    auto* grad = app.add_subcommand("gradcheck", "compare gradients with central differences");
    add_common(grad, grad_c, false);
    grad->add_option("--cases", cases, "number of random (net, batch) pairs");
    grad->add_option("--seed", grad_seed, "base seed");
    grad->add_option("--tolerance", tolerance, "maximum relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*sweep) return cmd_sweep(sweep_c, thresholds_path);
        if (*trace) return cmd_trace(trace_c, grid_path, rule, target);
        if (*membership) return cmd_membership(mem_c, runs_path);
        if (*bounds) return cmd_bounds(bounds_c);
        if (*trn) return cmd_train(train_c, checkpoint_out);
        if (*prune) return cmd_prune(prune_c, checkpoint_in, multiset_path);
        if (*grad) return cmd_gradcheck(grad_c, cases, grad_seed, tolerance);
    } catch (const Error& e) {
        std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitConfig;
}
