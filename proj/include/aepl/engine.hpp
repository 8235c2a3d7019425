#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aepl/acquisition.hpp"
#include "aepl/clustering.hpp"
#include "aepl/data.hpp"
#include "aepl/guidance.hpp"
#include "aepl/promptmodel.hpp"
#include "aepl/querying.hpp"

namespace aepl {

enum class Method { CB_SQ, CB, Random, Entropy, CoreSet, BADGE, PCB };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct ExperimentConfig {
    Method method = Method::CB_SQ;
    GuidanceMode guidance = GuidanceMode::ClassGuidedSoft;
    KSchedule kschedule = KSchedule::LinearBr;
    Metric metric = Metric::Cosine;
    std::size_t rounds = 8;
    std::size_t budget = 0;  // 0 = number of classes
    double tau = 0.01;
    TrainConfig train;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    /// Only CB_SQ pseudo-labels; forced on for it and off for every other method.
    bool selective_querying = true;
    bool thresholds_include_pseudo = true;
    /// Permits ClassGuidedLabel guidance, which reads ground-truth labels.
    bool allow_ground_truth = false;
    KMeansOptions kmeans;

    /// Checks the invariants against `ds` and returns the effective budget.
    std::size_t validate(const EmbeddingDataset& ds) const;
    bool uses_selective_querying() const noexcept { return method == Method::CB_SQ; }
};

struct RoundReport {
    std::size_t round = 0;
    double accuracy = 0.0;              // test split
    std::size_t consumed = 0;           // oracle queries this round
    std::size_t cum_consumed = 0;
    double cum_budget_ratio = 0.0;      // cumulative consumed / (b * R)
    std::size_t pseudo_count = 0;       // pseudo-labels this round
    double pseudo_correct = 1.0;        // over all pseudo records in D_r
    double label_correct = 1.0;         // over all records in D_r
    double ari = 0.0;                   // round clustering vs ground-truth classes (train split)
    double wall_time_s = 0.0;
};

/// Everything needed to re-check a round after the fact.
struct RoundSnapshot {
    std::size_t round = 0;
    PromptHead previous_head;  // t_{r-1}; scores thresholds and decisions
    PromptHead trained_head;   // t_r
    std::vector<Index> candidates;
    std::optional<Thresholds> thresholds;
    std::vector<QueryDecision> decisions;
    LabeledPool pool;  // D_r
    BudgetLedger ledger;
    std::vector<std::size_t> cluster_assignments;
};

struct RunResult {
    std::vector<RoundReport> reports;
    std::vector<RoundSnapshot> snapshots;
};

/// Runs every round of one experiment. Deterministic for fixed (ds, cfg, seed).
RunResult run_experiment(const EmbeddingDataset& ds, const ExperimentConfig& cfg, std::uint64_t seed);

struct ReportRow {
    Method method;
    GuidanceMode guidance;
    KSchedule kschedule;
    Metric metric;
    std::uint64_t seed;
    RoundReport report;
};

struct AggregateRow {
    Method method;
    GuidanceMode guidance;
    KSchedule kschedule;
    Metric metric;
    std::size_t round;
    std::size_t runs;
    double accuracy_mean, accuracy_std;
    double cum_budget_ratio_mean, cum_budget_ratio_std;
    double pseudo_correct_mean;
    double ari_mean;
};

struct ReportTable {
    std::vector<ReportRow> rows;
    std::vector<AggregateRow> aggregates;
};

/// Every config crossed with every seed; one aggregate row per (config, round).
/// Cells run on up to `jobs` threads, results are ordered by (config, seed) regardless.
ReportTable run_suite(const EmbeddingDataset& ds, const std::vector<ExperimentConfig>& configs,
                      const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

std::vector<AggregateRow> aggregate(const std::vector<ReportRow>& rows);

/// Writes every archived snapshot as round_<r>.json under `dir`.
void write_snapshots(const std::vector<RoundSnapshot>& snapshots, const std::filesystem::path& dir);

}  // namespace aepl
