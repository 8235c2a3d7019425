#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "aepl/clustering.hpp"
#include "aepl/data.hpp"
#include "aepl/matrix.hpp"
#include "aepl/promptmodel.hpp"

namespace aepl {

/// Number of clusters used by cluster-balanced acquisition in a given round.
enum class KSchedule {
    FixedB,    // K = b
    Fixed8B,   // K = 8b
    LinearBr,  // K = b * r
};

std::string_view to_string(KSchedule s);
KSchedule parse_kschedule(std::string_view s);

/// State visible to a selector in round `round`.
///
/// `pool` holds the train indices in ascending order; feature matrices handed to the
/// selectors have one row per entry of `pool`, in the same order. `labeled` is sorted.
struct RoundContext {
    std::size_t round = 1;
    std::size_t budget = 0;
    std::vector<Index> labeled;
    std::vector<Index> pool;

    void validate() const;
    /// Pool entries that are not labeled, ascending.
    std::vector<Index> unlabeled() const;
};

std::size_t k_for_round(const RoundContext& ctx, KSchedule sched);

struct CbSelection {
    std::vector<Index> candidates;  // sorted dataset indices
    Clustering clustering;          // over the rows of the feature matrix
};

/// Cluster-balanced acquisition: one representative per unlabeled cluster, largest first,
/// with a round-robin fill from the largest clusters when too few clusters are unlabeled.
CbSelection select_cb_detailed(const Matrix& features, const RoundContext& ctx, KSchedule sched, Metric metric,
                               std::uint64_t seed, const KMeansOptions& opts = {});
std::vector<Index> select_cb(const Matrix& features, const RoundContext& ctx, KSchedule sched, Metric metric,
                             std::uint64_t seed, const KMeansOptions& opts = {});

std::vector<Index> select_random(const RoundContext& ctx, std::uint64_t seed);

double entropy(std::span<const double> probs);
/// Top-b unlabeled points by predictive entropy (natural log), lower index first on ties.
std::vector<Index> select_entropy(const PromptHead& head, const EmbeddingDataset& ds, const RoundContext& ctx);

/// Greedy k-center over Euclidean distance in the supplied feature space.
std::vector<Index> select_coreset(const Matrix& features, const RoundContext& ctx);

/// Last-layer cross-entropy gradient with the pseudo-label as target: (p - onehot(argmax p)) (x) x,
/// flattened class-major (c*d entries).
std::vector<double> badge_embedding(const HeadScorer& scorer, std::span<const double> x);

/// k-means++ picks in gradient-embedding space, in pick order (not sorted).
std::vector<Index> badge_ranked(const PromptHead& head, const EmbeddingDataset& ds, const RoundContext& ctx,
                                std::size_t count, std::uint64_t seed);
std::vector<Index> select_badge(const PromptHead& head, const EmbeddingDataset& ds, const RoundContext& ctx,
                                std::uint64_t seed);

inline constexpr std::size_t kPcbOversample = 3;

/// Keeps `b` of the ranked candidates so that pseudo-class counts stay as level as possible;
/// at each step the candidate whose class has the fewest kept members wins, earlier rank on ties.
std::vector<Index> balance_by_pseudo_class(std::span<const Index> ranked, std::span<const ClassId> pseudo_classes,
                                           std::size_t b);
std::vector<Index> select_pcb(const PromptHead& head, const EmbeddingDataset& ds, const RoundContext& ctx,
                              std::uint64_t seed);

}  // namespace aepl
