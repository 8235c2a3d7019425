#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "aepl/clustering.hpp"
#include "aepl/data.hpp"
#include "aepl/engine.hpp"
#include "aepl/error.hpp"
#include "aepl/report.hpp"

namespace {

using namespace aepl;

enum Exit : int { kOk = 0, kUsage = 2, kDataFormat = 3, kRuntime = 4 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    bool quiet = false;

    SyntheticSpec synth;
    std::string out;

    std::string dataset;
    std::string config;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> rounds;
    std::optional<std::size_t> budget;
    std::optional<double> tau;
    std::optional<std::string> method;
    std::string snapshots;

    std::string summary;
    std::size_t jobs = 1;

    std::string partition;
};

void emit(const Options& o, const nlohmann::ordered_json& summary, const std::string& human) {
    if (o.quiet)
        std::cout << summary.dump() << '\n';
    else
        std::cout << human;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path + " is not valid JSON: " + e.what());
    }
}

template <class F>
auto as_usage(F&& f) {
    try {
        return f();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

int cmd_synth(const Options& o) {
    as_usage([&] {
        o.synth.validate();
        return 0;
    });
    const auto ds = generate_synthetic(o.synth);
    save_dataset(ds, o.out);
    nlohmann::ordered_json j{{"command", "synth"}, {"out", o.out}, {"n", ds.size()}, {"d", ds.dim()},
                             {"c", ds.num_classes()}};
    emit(o, j,
         "wrote " + o.out + ": n=" + std::to_string(ds.size()) + " d=" + std::to_string(ds.dim()) +
             " c=" + std::to_string(ds.num_classes()) + "\n");
    return kOk;
}

ExperimentConfig load_config(const Options& o) {
    auto cfg = as_usage([&] { return experiment_config_from_json(read_json(o.config)); });
    if (o.method) {
        cfg.method = as_usage([&] { return parse_method(*o.method); });
        cfg.selective_querying = cfg.method == Method::CB_SQ;
    }
    if (o.rounds) cfg.rounds = *o.rounds;
    if (o.budget) cfg.budget = *o.budget;
    if (o.tau) cfg.tau = *o.tau;
    if (o.seed) cfg.seeds = {*o.seed};
    if (cfg.seeds.empty()) throw UsageError("config has no seed");
    return cfg;
}

int cmd_run(const Options& o) {
    const auto format = as_usage([&] { return parse_report_format(o.format); });
    const auto ds = load_dataset(o.dataset);
    const auto cfg = load_config(o);
    as_usage([&] { return cfg.validate(ds); });
    const std::uint64_t seed = cfg.seeds.front();

    const auto result = run_experiment(ds, cfg, seed);
    ReportTable table;
    for (const auto& r : result.reports) table.rows.push_back({cfg.method, cfg.guidance, cfg.kschedule, cfg.metric, seed, r});
    table.aggregates = aggregate(table.rows);
    emit_report(table, o.out, format);
    if (!o.snapshots.empty()) write_snapshots(result.snapshots, o.snapshots);

    const auto& last = result.reports.back();
    nlohmann::ordered_json j{{"command", "run"},
                             {"out", o.out},
                             {"method", to_string(cfg.method)},
                             {"seed", seed},
                             {"rounds", result.reports.size()},
                             {"final_accuracy", last.accuracy},
                             {"cum_consumed", last.cum_consumed},
                             {"cum_budget_ratio", last.cum_budget_ratio}};
    std::ostringstream human;
    human << "round  accuracy  consumed  pseudo  ari\n";
    for (const auto& r : result.reports)
        human << r.round << "  " << fixed4(r.accuracy) << "  " << r.consumed << "  " << r.pseudo_count << "  "
              << fixed4(r.ari) << "\n";
    human << "report written to " << o.out << "\n";
    emit(o, j, human.str());
    return kOk;
}

int cmd_suite(const Options& o) {
    const auto format = as_usage([&] { return parse_report_format(o.format); });
    const auto ds = load_dataset(o.dataset);
    auto [configs, seeds] = as_usage([&] { return expand_matrix(read_json(o.config)); });
    if (o.seed) seeds = {*o.seed};
    for (auto& c : configs) {
        if (o.rounds) c.rounds = *o.rounds;
        if (o.budget) c.budget = *o.budget;
        if (o.tau) c.tau = *o.tau;
        as_usage([&] { return c.validate(ds); });
    }
    const auto table = run_suite(ds, configs, seeds, o.jobs);
    emit_report(table, o.out, format);
    if (!o.summary.empty()) {
        std::ofstream s(o.summary, std::ios::binary | std::ios::trunc);
        s << format_summary_csv(table);
        if (!s) throw IoError("cannot write " + o.summary);
    }
    nlohmann::ordered_json j{{"command", "suite"},   {"out", o.out},           {"configs", configs.size()},
                             {"seeds", seeds.size()}, {"runs", configs.size() * seeds.size()},
                             {"rows", table.rows.size()}};
    emit(o, j,
         "ran " + std::to_string(configs.size() * seeds.size()) + " experiments, " +
             std::to_string(table.rows.size()) + " rows written to " + o.out + "\n");
    return kOk;
}

std::vector<std::size_t> read_partition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open partition file " + path);
    std::vector<std::size_t> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t v = 0;
        auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (res.ec != std::errc() || res.ptr != line.data() + line.size())
            throw FormatError(FormatError::Kind::InvalidContent, lineno,
                              "partition line " + std::to_string(lineno) + " is not a non-negative integer");
        out.push_back(v);
    }
    return out;
}

int cmd_ari(const Options& o) {
    const auto ds = load_dataset(o.dataset);
    const auto assignments = read_partition(o.partition);
    const auto train = ds.indices(Split::Train);
    if (assignments.size() != train.size())
        throw FormatError(FormatError::Kind::InvalidContent, 0,
                          "partition has " + std::to_string(assignments.size()) + " entries, train split has " +
                              std::to_string(train.size()));
    std::vector<std::size_t> truth;
    for (Index i : train) truth.push_back(ds.ground_truth()[i]);
    const double ari = adjusted_rand_index(assignments, truth);
    nlohmann::ordered_json j{{"command", "ari"}, {"ari", ari}, {"n", train.size()}};
    emit(o, j, fixed4(ari) + "\n");
    return kOk;
}

int cmd_inspect(const Options& o) {
    const auto ds = load_dataset(o.dataset);
    const auto train = ds.indices(Split::Train);
    std::vector<std::size_t> per_class(ds.num_classes(), 0);
    for (Index i : train) ++per_class[ds.ground_truth()[i]];
    nlohmann::ordered_json j{{"command", "inspect"},
                             {"n", ds.size()},
                             {"d", ds.dim()},
                             {"c", ds.num_classes()},
                             {"train", train.size()},
                             {"test", ds.size() - train.size()},
                             {"class_names", ds.class_names()},
                             {"train_per_class", per_class}};
    std::ostringstream human;
    human << "n=" << ds.size() << " d=" << ds.dim() << " c=" << ds.num_classes() << "\n";
    human << "train=" << train.size() << " test=" << ds.size() - train.size() << "\n";
    for (std::size_t k = 0; k < ds.num_classes(); ++k)
        human << "  " << k << " " << ds.class_names()[k] << ": " << per_class[k] << " train\n";
    emit(o, j, human.str());
    return kOk;
}

void add_overrides(CLI::App* cmd, Options& o) {
    cmd->add_option("--seed", o.seed, "Seed override");
    cmd->add_option("--rounds", o.rounds, "Rounds override")->check(CLI::PositiveNumber);
    cmd->add_option("--budget", o.budget, "Per-round budget override (0 = number of classes)");
    cmd->add_option("--tau", o.tau, "Temperature override")->check(CLI::PositiveNumber);
    cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active prompt learning experiments on embedding datasets"};
    app.require_subcommand(1);
    Options o;
    app.add_flag("-q,--quiet", o.quiet, "Print a single JSON summary line");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic embedding dataset");
    synth->add_option("--classes", o.synth.classes)->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
    synth->add_option("--dim", o.synth.dim)->check(CLI::PositiveNumber);
    synth->add_option("--per-class", o.synth.per_class)->check(CLI::PositiveNumber);
    synth->add_option("--spread", o.synth.spread)->check(CLI::NonNegativeNumber);
    synth->add_option("--text-noise", o.synth.text_noise)->check(CLI::NonNegativeNumber);
    synth->add_option("--seed", o.synth.seed);
    synth->add_option("-o,--out", o.out)->required();

    auto* run = app.add_subcommand("run", "Run one experiment");
    run->add_option("dataset", o.dataset)->required();
    run->add_option("-c,--config", o.config, "Experiment config (JSON)")->required();
    run->add_option("-o,--out", o.out)->required();
    run->add_option("--method", o.method, "Method override");
    run->add_option("--snapshots", o.snapshots, "Directory for per-round snapshots");
    add_overrides(run, o);

    auto* suite = app.add_subcommand("suite", "Run a config matrix over seeds");
    suite->add_option("dataset", o.dataset)->required();
    suite->add_option("-c,--config,--matrix", o.config, "Config matrix (JSON)")->required();
    suite->add_option("-o,--out", o.out)->required();
    suite->add_option("--summary", o.summary, "Write per-round mean/std CSV here");
    suite->add_option("-j,--jobs", o.jobs)->check(CLI::PositiveNumber);
    add_overrides(suite, o);

    auto* ari = app.add_subcommand("ari", "Adjusted Rand index of a train-split partition");
    ari->add_option("dataset", o.dataset)->required();
    ari->add_option("partition", o.partition, "One cluster id per line")->required();

    auto* inspect = app.add_subcommand("inspect", "Summarize a dataset file");
    inspect->add_option("dataset", o.dataset)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*synth) return cmd_synth(o);
        if (*run) return cmd_run(o);
        if (*suite) return cmd_suite(o);
        if (*ari) return cmd_ari(o);
        if (*inspect) return cmd_inspect(o);
    } catch (const UsageError& e) {
        std::cerr << "aepl: " << e.what() << "\n";
        return kUsage;
    } catch (const FormatError& e) {
        std::cerr << "aepl: " << e.what() << "\n";
        return kDataFormat;
    } catch (const std::exception& e) {
        std::cerr << "aepl: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}
