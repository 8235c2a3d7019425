#include "aepl/engine.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "aepl/error.hpp"
#include "aepl/random.hpp"
#include "aepl/report.hpp"

namespace aepl {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::CB_SQ: return "cb_sq";
        case Method::CB: return "cb";
        case Method::Random: return "random";
        case Method::Entropy: return "entropy";
        case Method::CoreSet: return "coreset";
        case Method::BADGE: return "badge";
        case Method::PCB: return "pcb";
    }
    return "?";
}

Method parse_method(std::string_view s) {
    for (auto m : {Method::CB_SQ, Method::CB, Method::Random, Method::Entropy, Method::CoreSet, Method::BADGE,
                   Method::PCB})
        if (s == to_string(m)) return m;
    throw DomainError("unknown method '" + std::string(s) + "'");
}

std::size_t ExperimentConfig::validate(const EmbeddingDataset& ds) const {
    if (rounds < 1) throw DomainError("rounds must be >= 1");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    train.validate();
    if (guidance == GuidanceMode::ClassGuidedLabel && !allow_ground_truth)
        throw DomainError("ground-truth guidance requires allow_ground_truth");
    if (method == Method::CB_SQ && !selective_querying)
        throw DomainError("cb_sq requires selective querying");
    const std::size_t b = budget == 0 ? ds.num_classes() : budget;
    const std::size_t pool = ds.indices(Split::Train).size();
    if (b * rounds > pool)
        throw DomainError("train pool of " + std::to_string(pool) + " cannot supply " + std::to_string(b * rounds) +
                          " labels");
    return b;
}

namespace {

bool uses_cluster_selection(Method m) { return m == Method::CB_SQ || m == Method::CB; }

std::vector<std::size_t> train_ground_truth(const EmbeddingDataset& ds, const std::vector<Index>& train) {
    std::vector<std::size_t> out;
    out.reserve(train.size());
    for (Index i : train) out.push_back(ds.ground_truth()[i]);
    return out;
}

RunResult run_rounds(const EmbeddingDataset& ds, const ExperimentConfig& cfg, std::uint64_t seed) {
    using Clock = std::chrono::steady_clock;
    const std::size_t b = cfg.validate(ds);
    const auto train_idx = ds.indices(Split::Train);
    const auto truth = train_ground_truth(ds, train_idx);
    const Oracle oracle(ds);
    const Matrix text = ds.text_matrix();

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = derive_seed(seed, stream::kHeadInit, 0);

    RunResult out;
    PromptHead previous = zeroshot_head(ds, cfg.tau);
    LabeledPool pool;
    BudgetLedger ledger(b);
    for (std::size_t r = 1; r <= cfg.rounds; ++r) {
        try {
            const auto started = Clock::now();
            RoundContext ctx{r, b, pool.indices(), train_idx};
            const std::optional<std::span<const ClassId>> gt =
                cfg.allow_ground_truth ? std::optional<std::span<const ClassId>>(ds.ground_truth()) : std::nullopt;
            const Matrix features = class_guided_features(ds, previous, cfg.guidance, gt);
            const std::uint64_t cluster_seed = derive_seed(seed, stream::kKMeans, r);
            const std::uint64_t select_seed = derive_seed(seed, stream::kRandom, r);

            std::vector<Index> candidates;
            Clustering clustering;
            if (uses_cluster_selection(cfg.method)) {
                auto sel = select_cb_detailed(features, ctx, cfg.kschedule, cfg.metric, cluster_seed, cfg.kmeans);
                candidates = std::move(sel.candidates);
                clustering = std::move(sel.clustering);
            } else {
                switch (cfg.method) {
                    case Method::Random: candidates = select_random(ctx, select_seed); break;
                    case Method::Entropy: candidates = select_entropy(previous, ds, ctx); break;
                    case Method::CoreSet: candidates = select_coreset(features, ctx); break;
                    case Method::BADGE: candidates = select_badge(previous, ds, ctx, select_seed); break;
                    case Method::PCB: candidates = select_pcb(previous, ds, ctx, select_seed); break;
                    default: break;
                }
                // Diagnostic clustering so every method reports an ARI on the same footing.
                clustering = kmeans(features, k_for_round(ctx, cfg.kschedule), cfg.metric, cluster_seed, cfg.kmeans);
            }

            std::optional<Thresholds> thresholds;
            std::vector<QueryDecision> decisions;
            if (cfg.uses_selective_querying() && r >= 2) {
                thresholds = class_thresholds(previous, ds, pool, cfg.thresholds_include_pseudo);
                decisions = decide(candidates, previous, ds, *thresholds, oracle);
            } else {
                decisions = query_all(candidates, previous, ds, oracle);
            }
            std::tie(pool, ledger) = build_round_pool(pool, decisions, ledger);

            PromptHead trained = train(init_head(text, train_cfg, r, cfg.tau), ds, pool, train_cfg);

            RoundReport rep;
            rep.round = r;
            rep.accuracy = evaluate(trained, ds, Split::Test);
            rep.consumed = ledger.per_round().back().queried;
            rep.pseudo_count = ledger.per_round().back().pseudo;
            rep.cum_consumed = ledger.consumed();
            rep.cum_budget_ratio = static_cast<double>(rep.cum_consumed) / static_cast<double>(b * cfg.rounds);
            rep.pseudo_correct = pseudo_label_correctness(pool, ds);
            rep.label_correct = label_correctness(pool, ds);
            rep.ari = adjusted_rand_index(clustering.assignments, truth);
            rep.wall_time_s = std::chrono::duration<double>(Clock::now() - started).count();
            out.reports.push_back(rep);

            out.snapshots.push_back(RoundSnapshot{r, previous, trained, candidates, thresholds, decisions, pool,
                                                  ledger, clustering.assignments});
            previous = std::move(trained);
        } catch (const RoundError&) {
            throw;
        } catch (const std::exception& e) {
            throw RoundError(r, e.what());
        }
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population standard deviation; 0 for a single run.
double std_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

RunResult run_experiment(const EmbeddingDataset& ds, const ExperimentConfig& cfg, std::uint64_t seed) {
    return run_rounds(ds, cfg, seed);
}

std::vector<AggregateRow> aggregate(const std::vector<ReportRow>& rows) {
    using Key = std::tuple<Method, GuidanceMode, KSchedule, Metric, std::size_t>;
    std::vector<Key> order;
    std::map<Key, std::vector<const RoundReport*>> cells;
    for (const auto& row : rows) {
        Key key{row.method, row.guidance, row.kschedule, row.metric, row.report.round};
        auto [it, inserted] = cells.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(&row.report);
    }
    std::vector<AggregateRow> out;
    for (const auto& key : order) {
        const auto& reps = cells[key];
        std::vector<double> acc, ratio, pseudo, ari;
        for (const auto* r : reps) {
            acc.push_back(r->accuracy);
            ratio.push_back(r->cum_budget_ratio);
            pseudo.push_back(r->pseudo_correct);
            ari.push_back(r->ari);
        }
        const auto& [method, guidance, kschedule, metric, round] = key;
        out.push_back({method, guidance, kschedule, metric, round, reps.size(), mean_of(acc), std_of(acc),
                       mean_of(ratio), std_of(ratio), mean_of(pseudo), mean_of(ari)});
    }
    return out;
}

ReportTable run_suite(const EmbeddingDataset& ds, const std::vector<ExperimentConfig>& configs,
                      const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
    if (configs.empty()) throw DomainError("suite has no configurations");
    if (seeds.empty()) throw DomainError("suite has no seeds");
    for (const auto& cfg : configs) cfg.validate(ds);

    const std::size_t cells = configs.size() * seeds.size();
    std::vector<std::vector<RoundReport>> results(cells);
    std::vector<std::exception_ptr> errors(cells);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t cell = next++; cell < cells; cell = next++) {
            try {
                results[cell] = run_experiment(ds, configs[cell / seeds.size()], seeds[cell % seeds.size()]).reports;
            } catch (...) {
                errors[cell] = std::current_exception();
            }
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, cells));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    ReportTable table;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const auto& cfg = configs[cell / seeds.size()];
        for (const auto& rep : results[cell])
            table.rows.push_back({cfg.method, cfg.guidance, cfg.kschedule, cfg.metric, seeds[cell % seeds.size()], rep});
    }
    table.aggregates = aggregate(table.rows);
    return table;
}

void write_snapshots(const std::vector<RoundSnapshot>& snapshots, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    for (const auto& s : snapshots) {
        const auto path = dir / ("round_" + std::to_string(s.round) + ".json");
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + path.string());
        out << to_json(s).dump(1) << '\n';
        if (!out) throw IoError("write failed for " + path.string());
    }
}

}  // namespace aepl
