#include "aepl/querying.hpp"

#include <string>

#include "aepl/error.hpp"

namespace aepl {

Thresholds class_thresholds(const PromptHead& head, const EmbeddingDataset& ds, const LabeledPool& prev_pool,
                            bool include_pseudo) {
    if (prev_pool.empty()) throw DomainError("thresholds need a non-empty previous pool");
    const HeadScorer scorer(head);
    const std::size_t c = head.num_classes();
    std::vector<double> sum(c, 0.0);
    std::vector<std::size_t> count(c, 0);
    for (const auto& r : prev_pool.records()) {
        if (r.is_pseudo && !include_pseudo) continue;
        sum[r.label] += scorer.probs(ds.image(r.index))[r.label];
        ++count[r.label];
    }
    Thresholds t;
    t.eps.resize(c);
    for (std::size_t k = 0; k < c; ++k)
        t.eps[k] = count[k] == 0 ? Thresholds::kAlwaysQuery : sum[k] / static_cast<double>(count[k]);
    return t;
}

std::vector<QueryDecision> decide(std::span<const Index> candidates, const PromptHead& head, const EmbeddingDataset& ds,
                                  const Thresholds& thresholds, const Oracle& oracle) {
    if (thresholds.eps.size() != head.num_classes()) throw DomainError("threshold count differs from class count");
    const HeadScorer scorer(head);
    std::vector<QueryDecision> out;
    out.reserve(candidates.size());
    for (Index i : candidates) {
        const auto pred = argmax_prediction(scorer.probs(ds.image(i)));
        if (!thresholds.always_query(pred.label) && pred.confidence >= thresholds.eps[pred.label])
            out.push_back({i, QueryAction::PseudoLabel, pred.label, pred.confidence});
        else
            out.push_back({i, QueryAction::Query, oracle.label(i), pred.confidence});
    }
    return out;
}

std::vector<QueryDecision> query_all(std::span<const Index> candidates, const PromptHead& head,
                                     const EmbeddingDataset& ds, const Oracle& oracle) {
    const HeadScorer scorer(head);
    std::vector<QueryDecision> out;
    out.reserve(candidates.size());
    for (Index i : candidates)
        out.push_back({i, QueryAction::Query, oracle.label(i), argmax_prediction(scorer.probs(ds.image(i))).confidence});
    return out;
}

void BudgetLedger::record(RoundBudget r) {
    if (r.queried + r.pseudo != budget_)
        throw ConsistencyError("round allocates " + std::to_string(r.queried + r.pseudo) + " labels, budget is " +
                               std::to_string(budget_));
    if (rounds_.empty() && r.pseudo != 0) throw ConsistencyError("the first round cannot pseudo-label");
    rounds_.push_back(r);
}

std::size_t BudgetLedger::consumed() const noexcept {
    std::size_t total = 0;
    for (const auto& r : rounds_) total += r.queried;
    return total;
}

std::pair<LabeledPool, BudgetLedger> build_round_pool(const LabeledPool& prev, std::span<const QueryDecision> decisions,
                                                      const BudgetLedger& ledger) {
    if (decisions.size() != ledger.budget_per_round())
        throw ConsistencyError("expected " + std::to_string(ledger.budget_per_round()) + " decisions, got " +
                               std::to_string(decisions.size()));
    LabeledPool pool = prev;
    RoundBudget row;
    for (const auto& d : decisions) {
        const bool pseudo = d.action == QueryAction::PseudoLabel;
        pool.add({d.index, d.assigned_label, pseudo});
        ++(pseudo ? row.pseudo : row.queried);
    }
    BudgetLedger next = ledger;
    next.record(row);
    return {std::move(pool), std::move(next)};
}

double pseudo_label_correctness(const LabeledPool& pool, const EmbeddingDataset& ds) {
    std::size_t total = 0, correct = 0;
    for (const auto& r : pool.records()) {
        if (!r.is_pseudo) continue;
        ++total;
        if (ds.ground_truth().at(r.index) == r.label) ++correct;
    }
    return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double label_correctness(const LabeledPool& pool, const EmbeddingDataset& ds) {
    if (pool.empty()) return 1.0;
    std::size_t correct = 0;
    for (const auto& r : pool.records())
        if (ds.ground_truth().at(r.index) == r.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pool.size());
}

}  // namespace aepl
