#include "gfs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#ifndef GFS_DEFAULT_MNIST_DIR
#define GFS_DEFAULT_MNIST_DIR "data/mnist5k"
#endif

namespace gfs {

// ---------------------------------------------------------------------------
// KeyValueConfig
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    fail(Errc::config, "config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

template <class T>
T parse_unsigned(const std::string& key, const std::string& text) {
    T v{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) bad_value(key, text, "a nonnegative integer");
    return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& origin) {
    KeyValueConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            fail(Errc::config, origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) fail(Errc::config, origin + ":" + std::to_string(line_no) + ": empty key");
        cfg.values_[key] = trim(std::string_view(body).substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io, "cannot open config file " + path.string());
    return parse(in, path.string());
}

void KeyValueConfig::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) fail(Errc::config, "override '" + assignment + "' is not key=value");
    set(trim(std::string_view(assignment).substr(0, eq)), trim(std::string_view(assignment).substr(eq + 1)));
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    if (key.empty()) fail(Errc::config, "empty config key");
    values_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_unsigned<std::size_t>(key, it->second);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_unsigned<std::uint64_t>(key, it->second);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::istringstream ss(it->second);
    double v = 0.0;
    std::string rest;
    if (!(ss >> v) || (ss >> rest) || !std::isfinite(v)) bad_value(key, it->second, "a finite real number");
    return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "true or false");
}

std::vector<std::size_t> KeyValueConfig::get_sizes(const std::string& key,
                                                   const std::vector<std::size_t>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::size_t> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_unsigned<std::size_t>(key, trim(item)));
    if (out.empty()) bad_value(key, it->second, "a comma-separated list of integers");
    return out;
}

void KeyValueConfig::reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_) {
        if (!known.count(key)) fail(Errc::config, "unknown config key '" + key + "'");
    }
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

const std::set<std::string> kDataKeys = {"source", "task", "dim", "mnist_dir", "cache", "binarize", "normalize"};

DataSpec data_spec_from(const KeyValueConfig& cfg) {
    DataSpec s;
    s.source = cfg.get_string("source", s.source);
    if (s.source != "synthetic" && s.source != "mnist" && s.source != "cache") {
        fail(Errc::config, "source must be synthetic, mnist or cache, got '" + s.source + "'");
    }
    const std::string task = cfg.get_string("task", "binary");
    if (task == "binary") {
        s.task = SyntheticTask::binary;
    } else if (task == "regression") {
        s.task = SyntheticTask::regression;
    } else {
        fail(Errc::config, "task must be binary or regression, got '" + task + "'");
    }
    s.d = cfg.get_size("dim", s.d);
    s.mnist_dir = cfg.get_string("mnist_dir", GFS_DEFAULT_MNIST_DIR);
    s.cache_path = cfg.get_string("cache", "");
    s.binarize = cfg.get_bool("binarize", s.binarize);
    s.normalize = cfg.get_bool("normalize", s.normalize);
    if (s.d == 0) fail(Errc::config, "dim must be positive");
    if (s.source == "cache" && s.cache_path.empty()) fail(Errc::config, "source=cache needs 'cache'");
    return s;
}

Dataset load_dataset(const DataSpec& spec, std::size_t m, std::uint64_t seed) {
    require(m >= 1, "dataset size must be positive");
    if (spec.source == "synthetic") return make_synthetic(m, spec.d, seed, spec.task);

    Dataset full = spec.source == "mnist"
                       ? load_idx(spec.mnist_dir / "images-idx3-ubyte", spec.mnist_dir / "labels-idx1-ubyte")
                       : load_cache(spec.cache_path);
    Dataset ds = [&] {
        if (m == full.size() || !full.class_ids()) {
            if (m > full.size()) {
                fail(Errc::insufficient_population, "requested " + std::to_string(m) + " rows from a dataset of " +
                                                        std::to_string(full.size()));
            }
            std::vector<std::size_t> rows(m);
            std::iota(rows.begin(), rows.end(), std::size_t{0});
            return full.select(rows);
        }
        return subsample_uniform(full, SamplingSpec{m, seed, true});
    }();
    if (spec.source == "mnist" && spec.binarize) ds = binarize_labels(ds);
    if (spec.normalize) ds = normalize_rows(ds);
    return ds;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

void SweepConfig::validate() const {
    require(!sub_sizes.empty(), "sweep needs at least one sub-dataset size");
    require(std::is_sorted(sub_sizes.begin(), sub_sizes.end()), "sub_sizes must be sorted ascending");
    require(!widths.empty(), "sweep needs at least one width");
    require(trials >= 1, "trials must be at least 1");
    require(checkpoint_every >= 1, "checkpoint_every must be at least 1");
    require(threads >= 1, "threads must be at least 1");
    require(prune.iterations >= 1, "prune iterations must be at least 1");
    train.validate(sub_sizes.front());
    prune.validate(sub_sizes.front());
}

std::vector<std::size_t> SweepConfig::checkpoints() const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < total_iterations; t += checkpoint_every) out.push_back(t);
    out.push_back(total_iterations);
    return out;
}

namespace {

const std::set<std::string> kTrainKeys = {"learning_rate", "batch_size", "momentum", "weight_decay", "criterion",
                                          "activation", "head", "seed"};

void read_train_keys(const KeyValueConfig& cfg, TrainConfig& train, ActivationSpec& act, OutputHead& head) {
    train.learning_rate = cfg.get_double("learning_rate", train.learning_rate);
    train.batch_size = cfg.get_size("batch_size", train.batch_size);
    train.momentum = cfg.get_double("momentum", train.momentum);
    train.weight_decay = cfg.get_double("weight_decay", train.weight_decay);
    if (cfg.has("criterion")) train.criterion = parse_criterion(cfg.get_string("criterion", ""));
    if (cfg.has("activation")) act.kind = parse_activation(cfg.get_string("activation", ""));
    if (cfg.has("head")) head = parse_head(cfg.get_string("head", ""));
}

void read_prune_keys(const KeyValueConfig& cfg, PruneConfig& prune) {
    prune.iterations = cfg.get_size("prune_iterations", prune.iterations);
    const std::string sel = cfg.get_string("prune_selection", "full");
    if (sel == "full") {
        prune.selection = SelectionMode::full;
    } else if (sel == "minibatch") {
        prune.selection = SelectionMode::minibatch;
    } else {
        fail(Errc::config, "prune_selection must be full or minibatch, got '" + sel + "'");
    }
    prune.batch_size = cfg.get_size("prune_batch", prune.batch_size);
    const std::string target = cfg.get_string("prune_target", prune.target == SelectionTarget::head ? "head" : "polytope");
    if (target == "head") {
        prune.target = SelectionTarget::head;
    } else if (target == "polytope") {
        prune.target = SelectionTarget::polytope;
    } else {
        fail(Errc::config, "prune_target must be head or polytope, got '" + target + "'");
    }
    prune.incremental = cfg.get_bool("prune_incremental", prune.incremental);
}

const std::set<std::string> kPruneKeys = {"prune_iterations", "prune_selection", "prune_batch", "prune_target",
                                          "prune_incremental"};

std::set<std::string> merged(std::initializer_list<const std::set<std::string>*> sets,
                             std::initializer_list<const char*> extra) {
    std::set<std::string> out;
    for (const auto* s : sets) out.insert(s->begin(), s->end());
    out.insert(extra.begin(), extra.end());
    return out;
}

void config_check(const std::function<void()>& body) {
    try {
        body();
    } catch (const Error& e) {
        if (e.code() == Errc::invalid_argument) fail(Errc::config, e.what());
        throw;
    }
}

}  // namespace

SweepConfig sweep_config_from(const KeyValueConfig& cfg) {
    cfg.reject_unknown(merged({&kDataKeys, &kTrainKeys, &kPruneKeys},
                              {"sizes", "widths", "trials", "iterations", "checkpoint_every", "threads"}));
    SweepConfig s;
    s.prune.iterations = 200;
    s.prune.target = SelectionTarget::head;
    config_check([&] {
        s.data = data_spec_from(cfg);
        s.sub_sizes = cfg.get_sizes("sizes", s.sub_sizes);
        s.widths = cfg.get_sizes("widths", s.widths);
        s.trials = cfg.get_size("trials", s.trials);
        s.total_iterations = cfg.get_size("iterations", s.total_iterations);
        s.checkpoint_every = cfg.get_size("checkpoint_every", s.checkpoint_every);
        s.threads = cfg.get_size("threads", s.threads);
        s.base_seed = cfg.get_u64("seed", s.base_seed);
        read_train_keys(cfg, s.train, s.activation, s.head);
        read_prune_keys(cfg, s.prune);
        s.validate();
    });
    return s;
}

std::uint64_t data_seed(std::uint64_t base, std::size_t m, std::size_t trial) {
    return mix_seed(base, {0x64617461, m, trial});
}

std::uint64_t init_seed(std::uint64_t base, std::size_t m, std::size_t n, std::size_t trial) {
    return mix_seed(base, {0x696e6974, m, n, trial});
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t m, std::size_t n, std::size_t trial, std::size_t t) {
    return mix_seed(base, {0x63656c6c, m, n, trial, t});
}

namespace {

struct SweepJob {
    std::size_t m, n, trial;
};

double pruned_loss(const TwoLayerNet& net, const Multiset& counts, const Dataset& ds, Criterion criterion) {
    return dataset_loss(materialize_subnet(net, counts), ds, criterion);
}

std::vector<SweepCell> run_sweep_job(const SweepConfig& cfg, const SweepJob& job) {
    const Dataset ds = load_dataset(cfg.data, job.m, data_seed(cfg.base_seed, job.m, job.trial));
    const std::uint64_t iseed = init_seed(cfg.base_seed, job.m, job.n, job.trial);
    TwoLayerNet net = init_weights(job.n, ds.dim(), iseed, cfg.activation, cfg.head);

    TrainConfig train = cfg.train;
    train.iterations = cfg.total_iterations;
    train.record_every = cfg.checkpoint_every;
    train.seed = mix_seed(iseed, {1});
    train.batch_size = std::min(train.batch_size, ds.size());

    std::vector<SweepCell> cells;
    auto prune_at = [&](std::size_t t, const TwoLayerNet& live) {
        // The hook sees the live weights; pruning only reads them.
        PruneConfig prune = cfg.prune;
        prune.batch_seed = cell_seed(cfg.base_seed, job.m, job.n, job.trial, t);
        if (prune.selection == SelectionMode::minibatch) prune.batch_size = std::min(prune.batch_size, ds.size());
        const PruneResult r = greedy_forward_selection(live, ds, prune);
        SweepCell cell;
        cell.m = job.m;
        cell.t = t;
        cell.N = job.n;
        cell.trial = job.trial;
        cell.accuracy = accuracy(live, ds, &r.subnet);
        cell.loss = pruned_loss(live, r.subnet, ds, train.criterion);
        cell.dense_loss = dataset_loss(live, ds, train.criterion);
        cell.distinct = r.state.distinct();
        cells.push_back(cell);
    };
    gfs::train(std::move(net), ds, train, prune_at);
    return cells;
}

}  // namespace

SweepGrid run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    std::vector<SweepJob> jobs;
    for (std::size_t m : cfg.sub_sizes)
        for (std::size_t n : cfg.widths)
            for (std::size_t trial = 0; trial < cfg.trials; ++trial) jobs.push_back({m, n, trial});

    std::vector<std::vector<SweepCell>> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            try {
                results[j] = run_sweep_job(cfg, jobs[j]);
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::min(cfg.threads, jobs.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (!errors[j]) continue;
        const std::string where = "sweep cell (m=" + std::to_string(jobs[j].m) + ", N=" + std::to_string(jobs[j].n) +
                                  ", trial=" + std::to_string(jobs[j].trial) + "): ";
        try {
            std::rethrow_exception(errors[j]);
        } catch (const Error& e) {
            fail(e.code(), where + e.what());
        }
    }

    SweepGrid grid;
    for (auto& r : results) grid.cells.insert(grid.cells.end(), r.begin(), r.end());
    std::sort(grid.cells.begin(), grid.cells.end(), [](const SweepCell& a, const SweepCell& b) {
        return std::tie(a.m, a.t, a.N, a.trial) < std::tie(b.m, b.t, b.N, b.trial);
    });
    return grid;
}

void write_grid_csv(std::ostream& out, const SweepGrid& grid) {
    out << "m,t,N,trial,accuracy,loss\n";
    for (const auto& c : grid.cells) {
        out << c.m << ',' << c.t << ',' << c.N << ',' << c.trial << ',' << format_real(c.accuracy) << ','
            << format_real(c.loss) << '\n';
    }
}

SweepGrid read_grid_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "m,t,N,trial,accuracy,loss") {
        fail(Errc::config, "grid CSV must start with 'm,t,N,trial,accuracy,loss'");
    }
    SweepGrid grid;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::stringstream ss(line);
        std::string f[6];
        for (auto& s : f)
            if (!std::getline(ss, s, ',')) fail(Errc::config, "grid CSV line " + std::to_string(line_no) + " is short");
        SweepCell c;
        try {
            c.m = std::stoull(f[0]);
            c.t = std::stoull(f[1]);
            c.N = std::stoull(f[2]);
            c.trial = std::stoull(f[3]);
            c.accuracy = std::stod(f[4]);
            c.loss = std::stod(f[5]);
        } catch (const std::exception&) {
            fail(Errc::config, "grid CSV line " + std::to_string(line_no) + " does not parse");
        }
        grid.cells.push_back(c);
    }
    return grid;
}

std::vector<ThresholdRow> threshold_trace(const SweepGrid& grid, const ThresholdRule& rule) {
    require(!grid.cells.empty(), "threshold_trace needs a nonempty grid");
    // (m, N) → t → (sum, count)
    std::map<std::pair<std::size_t, std::size_t>, std::map<std::size_t, std::pair<double, std::size_t>>> acc;
    for (const auto& c : grid.cells) {
        auto& slot = acc[{c.m, c.N}][c.t];
        slot.first += c.accuracy;
        ++slot.second;
    }
    std::vector<ThresholdRow> rows;
    for (const auto& [key, series] : acc) {
        const auto& last = series.rbegin()->second;
        const double final_acc = last.first / static_cast<double>(last.second);
        ThresholdRow row;
        row.m = key.first;
        row.N = key.second;
        row.target = rule.kind == TargetRule::fraction_of_final ? rule.value * final_acc : rule.value;
        for (const auto& [t, sum] : series) {
            if (sum.first / static_cast<double>(sum.second) >= row.target) {
                row.threshold = t;
                break;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

void write_threshold_csv(std::ostream& out, std::span<const ThresholdRow> rows) {
    out << "m,N,target,threshold\n";
    for (const auto& r : rows) {
        out << r.m << ',' << r.N << ',' << format_real(r.target) << ','
            << (r.threshold ? std::to_string(*r.threshold) : std::string("never")) << '\n';
    }
}

std::size_t count_inversions(std::span<const std::optional<std::size_t>> values) {
    auto key = [](const std::optional<std::size_t>& v) {
        return v ? static_cast<double>(*v) : std::numeric_limits<double>::infinity();
    };
    std::size_t n = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (key(values[i]) < key(values[i - 1])) ++n;
    return n;
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

void MembershipConfig::validate() const {
    require(!sizes.empty(), "membership needs at least one size");
    require(widths.empty() || widths.size() == sizes.size(), "widths must be empty or match sizes one-to-one");
    require(width_factor > 0.0, "width_factor must be positive");
    require(seeds >= 1, "seeds must be at least 1");
    require(margin > 0.0, "margin must be positive");
    require(learning_rate >= 0.0, "learning_rate must be nonnegative");
}

std::size_t MembershipConfig::width_for(std::size_t m, std::size_t d, std::size_t index) const {
    if (!widths.empty()) return widths[index];
    const double md = static_cast<double>(m);
    return static_cast<std::size_t>(std::floor(width_factor * md * md / static_cast<double>(d))) + 1;
}

MembershipConfig membership_config_from(const KeyValueConfig& cfg) {
    cfg.reject_unknown(merged({&kDataKeys}, {"sizes", "widths", "width_factor", "max_epochs", "seeds", "seed",
                                            "learning_rate", "margin", "pivot_rule"}));
    MembershipConfig s;
    config_check([&] {
        KeyValueConfig data = cfg;
        if (!data.has("source")) data.set("source", "mnist");
        s.data = data_spec_from(data);
        s.sizes = cfg.get_sizes("sizes", s.sizes);
        s.widths = cfg.get_sizes("widths", s.widths);
        s.width_factor = cfg.get_double("width_factor", s.width_factor);
        s.max_epochs = cfg.get_size("max_epochs", s.max_epochs);
        s.seeds = cfg.get_size("seeds", s.seeds);
        s.base_seed = cfg.get_u64("seed", s.base_seed);
        s.learning_rate = cfg.get_double("learning_rate", s.learning_rate);
        s.margin = cfg.get_double("margin", s.margin);
        const std::string rule = cfg.get_string("pivot_rule", "dantzig_then_bland");
        if (rule == "bland") {
            s.pivot_rule = PivotRule::bland;
        } else if (rule != "dantzig_then_bland") {
            fail(Errc::config, "pivot_rule must be bland or dantzig_then_bland");
        }
        s.validate();
    });
    return s;
}

MembershipResult network_membership(const TwoLayerNet& net, const Dataset& ds, double margin,
                                    const LpOptions& opts) {
    if (!ds.has_binary_labels()) fail(Errc::non_binary_labels, "membership needs labels in {0, 1}");
    const ActivationMatrix am = activation_matrix(net, ds);
    const std::size_t n = net.width();
    std::size_t n1 = 0;
    for (double y : ds.labels()) n1 += y == 1.0 ? 1 : 0;
    Matrix class0(ds.size() - n1, n), class1(n1, n);
    std::size_t r0 = 0, r1 = 0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        auto dst = ds.y(j) == 1.0 ? class1.row(r1++) : class0.row(r0++);
        for (std::size_t i = 0; i < n; ++i) dst[i] = am.phi(i, j);
    }
    return classification_membership(class0, class1, margin, opts);
}

MembershipRun membership_run(const Dataset& ds, std::size_t n, std::uint64_t seed, const MembershipConfig& cfg,
                             std::vector<MembershipEpoch>* log, std::size_t seed_index) {
    MembershipRun run{ds.size(), n, seed_index, std::nullopt};
    TwoLayerNet net = init_weights(n, ds.dim(), seed, ActivationSpec{ActivationKind::sigmoid}, OutputHead::sigmoid);
    TrainConfig train = theory_train_config();
    train.criterion = Criterion::bce;
    train.learning_rate = cfg.learning_rate;
    train.iterations = ds.size();
    train.record_every = ds.size();

    for (std::size_t epoch = 0; epoch <= cfg.max_epochs; ++epoch) {
        if (epoch > 0) {
            train.seed = mix_seed(seed, {epoch});
            net = gfs::train(std::move(net), ds, train).final_net;
        }
        LpOptions opts;
        opts.rule = cfg.pivot_rule;
        const MembershipResult r = network_membership(net, ds, cfg.margin, opts);
        if (log) log->push_back({ds.size(), n, seed_index, epoch, r.verdict == Membership::inside, r.phase1_objective});
        if (r.verdict == Membership::inside) {
            run.first_epoch = epoch;
            break;
        }
    }
    return run;
}

MembershipReport run_membership_experiment(const MembershipConfig& cfg) {
    cfg.validate();
    MembershipReport report;
    for (std::size_t si = 0; si < cfg.sizes.size(); ++si) {
        const std::size_t m = cfg.sizes[si];
        for (std::size_t s = 0; s < cfg.seeds; ++s) {
            const Dataset ds = load_dataset(cfg.data, m, data_seed(cfg.base_seed, m, s));
            const std::size_t n = cfg.width_for(m, ds.dim(), si);
            report.runs.push_back(membership_run(ds, n, init_seed(cfg.base_seed, m, n, s), cfg, &report.epochs, s));
        }
    }
    return report;
}

void write_membership_epochs_csv(std::ostream& out, const MembershipReport& report) {
    out << "m,N,seed,epoch,inside,phase1_objective\n";
    for (const auto& e : report.epochs) {
        out << e.m << ',' << e.N << ',' << e.seed << ',' << e.epoch << ',' << (e.inside ? 1 : 0) << ','
            << format_real(e.phase1) << '\n';
    }
}

void write_membership_runs_csv(std::ostream& out, const MembershipReport& report) {
    out << "m,N,seed,first_epoch\n";
    for (const auto& r : report.runs) {
        out << r.m << ',' << r.N << ',' << r.seed << ','
            << (r.first_epoch ? std::to_string(*r.first_epoch) : std::string("never")) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Bound report
// ---------------------------------------------------------------------------

void BoundReportConfig::validate() const {
    require(m >= 1 && N >= 1, "bound report needs m, N >= 1");
    require(prune_iterations >= 1, "prune_iterations must be at least 1");
    require(record_every >= 1, "record_every must be at least 1");
    require(activation.smooth(), "theory mode needs a bounded-derivative activation (sigmoid or tanh)");
    require(zeta > 0.0, "zeta must be positive");
}

BoundReportConfig bound_report_config_from(const KeyValueConfig& cfg) {
    cfg.reject_unknown(merged({&kDataKeys}, {"m", "N", "t", "prune_iterations", "learning_rate", "record_every",
                                            "activation", "zeta", "seed"}));
    BoundReportConfig s;
    config_check([&] {
        KeyValueConfig data = cfg;
        if (!data.has("task")) data.set("task", "regression");
        if (!data.has("dim")) data.set("dim", std::to_string(s.data.d));
        s.data = data_spec_from(data);
        s.m = cfg.get_size("m", s.m);
        s.N = cfg.get_size("N", s.N);
        s.t = cfg.get_size("t", s.t);
        s.prune_iterations = cfg.get_size("prune_iterations", s.prune_iterations);
        s.learning_rate = cfg.get_double("learning_rate", s.learning_rate);
        s.record_every = cfg.get_size("record_every", s.record_every);
        if (cfg.has("activation")) s.activation.kind = parse_activation(cfg.get_string("activation", ""));
        s.zeta = cfg.get_double("zeta", s.zeta);
        s.seed = cfg.get_u64("seed", s.seed);
        s.validate();
    });
    return s;
}

BoundReport run_bound_report(const BoundReportConfig& cfg) {
    cfg.validate();
    const Dataset ds = load_dataset(cfg.data, cfg.m, mix_seed(cfg.seed, {0}));
    TwoLayerNet net = init_weights(cfg.N, ds.dim(), mix_seed(cfg.seed, {1}), cfg.activation, OutputHead::linear);

    BoundReport report;
    report.L0 = residual_sq_norm(net, ds);
    if (cfg.t > 0) {
        TrainConfig train = theory_train_config();
        train.iterations = cfg.t;
        train.learning_rate = cfg.learning_rate;
        train.record_every = cfg.record_every;
        train.seed = mix_seed(cfg.seed, {2});
        TrainTrace trace = gfs::train(std::move(net), ds, train);
        net = std::move(trace.final_net);
        if (trace.checkpoints.size() >= 3) {
            const double rho = fit_decay(trace).rho;
            report.rho = rho;
            if (rho > 0.0 && rho < 1.0) report.c = estimate_c(rho, cfg.m, ds.dim(), RateMode::sgd);
        }
    }

    const ActivationMatrix am = activation_matrix(net, ds);
    PruneConfig prune;
    prune.iterations = cfg.prune_iterations;
    const GreedyState state = greedy_run(am, prune);
    report.diameter = diameter(Polytope(am.phi)).value;
    std::vector<double> mean(am.examples(), 0.0);
    for (std::size_t i = 0; i < am.neurons(); ++i)
        for (std::size_t j = 0; j < am.examples(); ++j) mean[j] += am.phi(i, j);
    for (double& v : mean) v /= static_cast<double>(am.neurons());
    report.dense_loss = l2_loss(mean, am.y);

    BoundParams params;
    params.c = report.c;
    params.zeta = cfg.zeta;
    params.L0 = report.L0;
    params.m = cfg.m;
    params.d = ds.dim();
    params.N = cfg.N;
    params.t = cfg.t;
    params.loss_u1 = state.loss_history.front();
    params.diameter = report.diameter;
    report.warnings = params.regime_warnings();

    for (std::size_t k = 1; k <= state.loss_history.size(); ++k) {
        BoundRow row;
        row.k = k;
        row.observed = state.loss_history[k - 1];
        row.lemma1 = lemma1_bound(k, *params.loss_u1, report.diameter, report.dense_loss);
        params.k = k;
        row.theorem2 = params.c ? theorem2_bound(params) : std::numeric_limits<double>::quiet_NaN();
        if (row.observed > row.lemma1 + 1e-9) {
            fail(Errc::invariant_violation, "Lemma 1 bound violated at k=" + std::to_string(k) + ": observed " +
                                                format_real(row.observed) + " > bound " + format_real(row.lemma1));
        }
        report.rows.push_back(row);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

namespace {

// Batch mean loss in extended precision, so the difference quotient is not
// swamped by cancellation on small coordinates.
long double extended_batch_loss(const TwoLayerNet& net, const Dataset& ds, std::span<const std::size_t> batch,
                                Criterion criterion) {
    long double total = 0.0L;
    for (std::size_t j : batch) {
        long double pre = 0.0L;
        for (std::size_t i = 0; i < net.width(); ++i) {
            long double h = 0.0L;
            for (std::size_t k = 0; k < net.input_dim(); ++k)
                h += static_cast<long double>(net.inner(i, k)) * ds.x(j)[k];
            const long double s = net.activation.kind == ActivationKind::tanh ? std::tanh(h)
                                  : net.activation.kind == ActivationKind::relu ? std::max(0.0L, h)
                                                                                : 1.0L / (1.0L + std::exp(-h));
            pre += static_cast<long double>(net.outer[i]) * s;
        }
        pre /= static_cast<long double>(net.width());
        const long double y = ds.y(j);
        if (criterion == Criterion::bce) {
            // log(1 + e^{-z}) written stably
            const long double sp = pre > 0 ? std::log1p(std::exp(-pre)) : -pre + std::log1p(std::exp(pre));
            total += y * sp + (1.0L - y) * (sp + pre);
        } else {
            const long double out = net.head == OutputHead::sigmoid ? 1.0L / (1.0L + std::exp(-pre)) : pre;
            total += 0.5L * (out - y) * (out - y);
        }
    }
    return total / static_cast<long double>(batch.size());
}

}  // namespace

std::vector<GradcheckRow> run_gradcheck(std::size_t cases, std::uint64_t seed, double h) {
    require(h > 0.0, "finite-difference step must be positive");
    std::vector<GradcheckRow> rows;
    for (std::size_t c = 0; c < cases; ++c) {
        std::mt19937_64 rng(mix_seed(seed, {c}));
        auto uniform = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
        GradcheckRow row;
        row.index = c;
        row.activation = c % 2 == 0 ? ActivationKind::sigmoid : ActivationKind::tanh;
        row.criterion = (c / 2) % 2 == 0 ? Criterion::l2 : Criterion::bce;
        const OutputHead head = row.criterion == Criterion::bce || uniform(0, 1) ? OutputHead::sigmoid : OutputHead::linear;

        const std::size_t m = uniform(4, 12), d = uniform(2, 6), n = uniform(3, 10);
        const Dataset ds = make_synthetic(m, d, rng(), SyntheticTask::binary);
        TwoLayerNet net = init_weights(n, d, rng(), ActivationSpec{row.activation}, head);
        std::vector<std::size_t> batch(uniform(1, m));
        for (auto& b : batch) b = uniform(0, m - 1);

        const Gradient g = gradient(net, ds, batch, row.criterion);
        auto probe = [&](double& w, double analytic) {
            const double saved = w;
            w = saved + h;
            const long double up = extended_batch_loss(net, ds, batch, row.criterion);
            w = saved - h;
            const long double down = extended_batch_loss(net, ds, batch, row.criterion);
            w = saved;
            const double numeric = static_cast<double>((up - down) / (2.0L * h));
            const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
            row.max_rel_error = std::max(row.max_rel_error, std::abs(analytic - numeric) / scale);
            ++row.coordinates;
        };
        for (std::size_t i = 0; i < n; ++i) probe(net.outer[i], g.outer[i]);
        for (std::size_t k = 0; k < net.inner.data().size(); ++k) probe(net.inner.data()[k], g.inner.data()[k]);
        rows.push_back(row);
    }
    return rows;
}

void write_gradcheck_csv(std::ostream& out, std::span<const GradcheckRow> rows) {
    out << "case,activation,criterion,coordinates,max_rel_error\n";
    for (const auto& r : rows) {
        out << r.index << ',' << to_string(r.activation) << ',' << to_string(r.criterion) << ',' << r.coordinates
            << ',' << format_real(r.max_rel_error) << '\n';
    }
}

}  // namespace gfs
