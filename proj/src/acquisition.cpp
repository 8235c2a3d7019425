#include "aepl/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "aepl/error.hpp"
#include "aepl/random.hpp"

namespace aepl {

std::string_view to_string(KSchedule s) {
    switch (s) {
        case KSchedule::FixedB: return "fixed_b";
        case KSchedule::Fixed8B: return "fixed_8b";
        case KSchedule::LinearBr: return "linear_br";
    }
    return "?";
}

KSchedule parse_kschedule(std::string_view s) {
    for (auto k : {KSchedule::FixedB, KSchedule::Fixed8B, KSchedule::LinearBr})
        if (s == to_string(k)) return k;
    throw DomainError("unknown k-schedule '" + std::string(s) + "'");
}

void RoundContext::validate() const {
    if (round < 1) throw DomainError("rounds are numbered from 1");
    if (budget < 1) throw DomainError("budget must be >= 1");
    if (!std::is_sorted(pool.begin(), pool.end()) || !std::is_sorted(labeled.begin(), labeled.end()))
        throw DomainError("pool and labeled sets must be sorted");
    if (!std::includes(pool.begin(), pool.end(), labeled.begin(), labeled.end()))
        throw DomainError("labeled set is not a subset of the pool");
    if (pool.size() - labeled.size() < budget)
        throw DomainError("pool exhausted: " + std::to_string(pool.size() - labeled.size()) +
                          " unlabeled points for a budget of " + std::to_string(budget));
}

std::vector<Index> RoundContext::unlabeled() const {
    std::vector<Index> out;
    std::set_difference(pool.begin(), pool.end(), labeled.begin(), labeled.end(), std::back_inserter(out));
    return out;
}

std::size_t k_for_round(const RoundContext& ctx, KSchedule sched) {
    std::size_t k = ctx.budget;
    if (sched == KSchedule::Fixed8B) k = 8 * ctx.budget;
    if (sched == KSchedule::LinearBr) k = ctx.budget * ctx.round;
    return std::min(k, ctx.pool.size());
}

namespace {

void check_features(const Matrix& features, const RoundContext& ctx) {
    if (features.rows() != ctx.pool.size()) throw DomainError("feature rows do not match the pool");
}

// Rows of `ctx.pool` that are labeled, ascending.
std::vector<Index> labeled_rows(const RoundContext& ctx) {
    std::vector<Index> rows;
    for (Index r = 0; r < ctx.pool.size(); ++r)
        if (std::binary_search(ctx.labeled.begin(), ctx.labeled.end(), ctx.pool[r])) rows.push_back(r);
    return rows;
}

std::vector<Index> to_dataset_indices(const RoundContext& ctx, const std::vector<Index>& rows) {
    std::vector<Index> out;
    out.reserve(rows.size());
    for (Index r : rows) out.push_back(ctx.pool[r]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

CbSelection select_cb_detailed(const Matrix& features, const RoundContext& ctx, KSchedule sched, Metric metric,
                               std::uint64_t seed, const KMeansOptions& opts) {
    ctx.validate();
    check_features(features, ctx);
    CbSelection out;
    out.clustering = kmeans(features, k_for_round(ctx, sched), metric, seed, opts);
    const auto& cl = out.clustering;
    const auto members = cl.members();
    const auto sizes = cl.cluster_sizes();

    std::vector<Index> excluded = labeled_rows(ctx);
    std::vector<bool> has_label(cl.k, false);
    for (Index r : excluded) has_label[cl.assignments[r]] = true;

    // Largest first, lower cluster id on ties.
    std::vector<std::size_t> by_size(cl.k);
    std::iota(by_size.begin(), by_size.end(), 0);
    std::stable_sort(by_size.begin(), by_size.end(), [&](auto a, auto b) { return sizes[a] > sizes[b]; });

    std::vector<Index> chosen;
    auto take_from = [&](std::size_t cluster) {
        auto pick = closest_to_centroid(features, members[cluster], cl.centroids.row(cluster), metric, excluded);
        if (!pick) return false;
        chosen.push_back(*pick);
        excluded.insert(std::upper_bound(excluded.begin(), excluded.end(), *pick), *pick);
        return true;
    };

    for (std::size_t cluster : by_size) {
        if (chosen.size() == ctx.budget) break;
        if (!has_label[cluster]) take_from(cluster);
    }
    // Deficit: cycle through all clusters by size taking the next-nearest free point.
    while (chosen.size() < ctx.budget) {
        bool progressed = false;
        for (std::size_t cluster : by_size) {
            if (chosen.size() == ctx.budget) break;
            progressed |= take_from(cluster);
        }
        if (!progressed) throw DomainError("pool exhausted during cluster-balanced selection");
    }
    out.candidates = to_dataset_indices(ctx, chosen);
    return out;
}

std::vector<Index> select_cb(const Matrix& features, const RoundContext& ctx, KSchedule sched, Metric metric,
                             std::uint64_t seed, const KMeansOptions& opts) {
    return select_cb_detailed(features, ctx, sched, metric, seed, opts).candidates;
}

std::vector<Index> select_random(const RoundContext& ctx, std::uint64_t seed) {
    ctx.validate();
    auto free = ctx.unlabeled();
    auto rng = make_rng(seed, {stream::kRandom, ctx.round});
    std::vector<Index> out;
    std::sample(free.begin(), free.end(), std::back_inserter(out), ctx.budget, rng);
    std::sort(out.begin(), out.end());
    return out;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

std::vector<Index> select_entropy(const PromptHead& head, const EmbeddingDataset& ds, const RoundContext& ctx) {
    ctx.validate();
    const HeadScorer scorer(head);
    auto free = ctx.unlabeled();
    std::vector<std::pair<double, Index>> scored;
    scored.reserve(free.size());
    for (Index i : free) scored.emplace_back(entropy(scorer.probs(ds.image(i))), i);
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(ctx.budget), scored.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    std::vector<Index> out;
    for (std::size_t i = 0; i < ctx.budget; ++i) out.push_back(scored[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Index> select_coreset(const Matrix& features, const RoundContext& ctx) {
    ctx.validate();
    check_features(features, ctx);
    const std::size_t m = features.rows();
    std::vector<bool> taken(m, false);
    std::vector<double> min_dist(m, std::numeric_limits<double>::infinity());
    auto absorb = [&](Index center) {
        taken[center] = true;
        for (Index r = 0; r < m; ++r)
            min_dist[r] = std::min(min_dist[r], squared_distance(features.row(r), features.row(center)));
    };
    for (Index r : labeled_rows(ctx)) absorb(r);

    std::vector<Index> chosen;
    while (chosen.size() < ctx.budget) {
        Index best = m;
        for (Index r = 0; r < m; ++r) {
            if (taken[r]) continue;
            // With nothing labeled yet every distance is infinite and the lowest row wins.
            if (best == m || min_dist[r] > min_dist[best]) best = r;
        }
        chosen.push_back(best);
        absorb(best);
    }
    return to_dataset_indices(ctx, chosen);
}

std::vector<double> badge_embedding(const HeadScorer& scorer, std::span<const double> x) {
    auto p = scorer.probs(x);
    p[argmax_prediction(p).label] -= 1.0;
    std::vector<double> g(p.size() * x.size());
    for (std::size_t k = 0; k < p.size(); ++k)
        for (std::size_t j = 0; j < x.size(); ++j) g[k * x.size() + j] = p[k] * x[j];
    return g;
}

std::vector<Index> badge_ranked(const PromptHead& head, const EmbeddingDataset& ds, const RoundContext& ctx,
                                std::size_t count, std::uint64_t seed) {
    ctx.validate();
    const HeadScorer scorer(head);
    const auto free = ctx.unlabeled();
    count = std::min(count, free.size());
    std::vector<std::vector<double>> emb;
    emb.reserve(free.size());
    for (Index i : free) emb.push_back(badge_embedding(scorer, ds.image_f64(i)));

    auto rng = make_rng(seed, {stream::kBadge, ctx.round});
    std::vector<bool> chosen(free.size(), false);
    std::vector<double> dist(free.size(), std::numeric_limits<double>::infinity());
    std::vector<Index> picks;
    std::uniform_int_distribution<std::size_t> first(0, free.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t pick = first(rng);
    while (true) {
        chosen[pick] = true;
        picks.push_back(pick);
        if (picks.size() == count) break;
        double total = 0.0;
        for (std::size_t i = 0; i < free.size(); ++i) {
            dist[i] = chosen[i] ? 0.0 : std::min(dist[i], squared_distance(emb[i], emb[pick]));
            total += dist[i];
        }
        pick = free.size();
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < free.size(); ++i) {
                if (dist[i] <= 0.0) continue;
                acc += dist[i];
                pick = i;
                if (acc > target) break;
            }
        } else {
            // Every remaining embedding coincides with a pick; take the lowest index.
            for (std::size_t i = 0; i < free.size() && pick == free.size(); ++i)
                if (!chosen[i]) pick = i;
        }
    }
    std::vector<Index> out;
    for (auto p : picks) out.push_back(free[p]);
    return out;
}

std::vector<Index> select_badge(const PromptHead& head, const EmbeddingDataset& ds, const RoundContext& ctx,
                                std::uint64_t seed) {
    auto out = badge_ranked(head, ds, ctx, ctx.budget, seed);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Index> balance_by_pseudo_class(std::span<const Index> ranked, std::span<const ClassId> pseudo_classes,
                                           std::size_t b) {
    if (ranked.size() != pseudo_classes.size()) throw DomainError("one pseudo class per ranked candidate required");
    if (ranked.size() < b) throw DomainError("fewer ranked candidates than the budget");
    std::vector<std::size_t> kept_per_class(
        pseudo_classes.empty() ? 0 : *std::max_element(pseudo_classes.begin(), pseudo_classes.end()) + 1, 0);
    std::vector<bool> used(ranked.size(), false);
    std::vector<Index> out;
    while (out.size() < b) {
        std::size_t best = ranked.size();
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            if (used[i]) continue;
            if (best == ranked.size() || kept_per_class[pseudo_classes[i]] < kept_per_class[pseudo_classes[best]])
                best = i;
        }
        used[best] = true;
        ++kept_per_class[pseudo_classes[best]];
        out.push_back(ranked[best]);
    }
    return out;
}

std::vector<Index> select_pcb(const PromptHead& head, const EmbeddingDataset& ds, const RoundContext& ctx,
                              std::uint64_t seed) {
    const auto ranked = badge_ranked(head, ds, ctx, kPcbOversample * ctx.budget, seed);
    const HeadScorer scorer(head);
    std::vector<ClassId> classes;
    for (Index i : ranked) classes.push_back(argmax_prediction(scorer.probs(ds.image(i))).label);
    auto out = balance_by_pseudo_class(ranked, classes, ctx.budget);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace aepl
