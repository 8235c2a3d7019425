#pragma once

#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "aepl/data.hpp"
#include "aepl/promptmodel.hpp"

namespace aepl {

/// Per-class confidence thresholds. A class without labeled support carries +inf,
/// so its candidates are always sent to the annotator.
struct Thresholds {
    static constexpr double kAlwaysQuery = std::numeric_limits<double>::infinity();
    std::vector<double> eps;

    bool always_query(ClassId c) const { return eps.at(c) == kAlwaysQuery; }
};

/// eps_c = mean p_c(x) over the records of `prev_pool` labeled c, scored by the
/// previous round's trained head. Pseudo-labeled records count unless `include_pseudo` is false.
Thresholds class_thresholds(const PromptHead& head, const EmbeddingDataset& ds, const LabeledPool& prev_pool,
                            bool include_pseudo = true);

enum class QueryAction { Query, PseudoLabel };

struct QueryDecision {
    Index index;
    QueryAction action;
    ClassId assigned_label;
    double confidence;  // probability of the pseudo-label under the previous head

    friend bool operator==(const QueryDecision&, const QueryDecision&) = default;
};

/// Pseudo-labels a candidate when its confidence reaches the threshold of its predicted
/// class (conf >= eps), otherwise asks the oracle.
std::vector<QueryDecision> decide(std::span<const Index> candidates, const PromptHead& head, const EmbeddingDataset& ds,
                                  const Thresholds& thresholds, const Oracle& oracle);

/// Every candidate sent to the oracle (first round, and every round of the baselines).
std::vector<QueryDecision> query_all(std::span<const Index> candidates, const PromptHead& head,
                                     const EmbeddingDataset& ds, const Oracle& oracle);

struct RoundBudget {
    std::size_t queried = 0;
    std::size_t pseudo = 0;

    friend bool operator==(const RoundBudget&, const RoundBudget&) = default;
};

/// Oracle queries versus free pseudo-labels, round by round.
class BudgetLedger {
public:
    explicit BudgetLedger(std::size_t budget_per_round = 0) : budget_(budget_per_round) {}

    void record(RoundBudget r);

    std::size_t budget_per_round() const noexcept { return budget_; }
    std::size_t rounds() const noexcept { return rounds_.size(); }
    const std::vector<RoundBudget>& per_round() const noexcept { return rounds_; }
    std::size_t consumed() const noexcept;
    std::size_t nominal() const noexcept { return budget_ * rounds_.size(); }

    friend bool operator==(const BudgetLedger&, const BudgetLedger&) = default;

private:
    std::size_t budget_;
    std::vector<RoundBudget> rounds_;
};

/// D_r = D_{r-1} plus this round's decisions; the ledger gains one row.
std::pair<LabeledPool, BudgetLedger> build_round_pool(const LabeledPool& prev, std::span<const QueryDecision> decisions,
                                                      const BudgetLedger& ledger);

/// Share of pseudo-labeled records that match the ground truth; 1.0 when there are none.
double pseudo_label_correctness(const LabeledPool& pool, const EmbeddingDataset& ds);
/// Share of all records that match the ground truth; 1.0 for an empty pool.
double label_correctness(const LabeledPool& pool, const EmbeddingDataset& ds);

}  // namespace aepl
