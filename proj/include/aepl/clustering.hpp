#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "aepl/matrix.hpp"

namespace aepl {

enum class Metric { Euclidean, Cosine };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

struct KMeansOptions {
    std::size_t max_iter = 100;
    double tol = 1e-6;
};

struct Clustering {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;  // one per feature row
    Matrix centroids;                      // k x d, unit rows under Cosine
    double inertia = 0.0;
    Metric metric = Metric::Cosine;
    /// Objective after each Lloyd iteration; non-increasing.
    std::vector<double> inertia_history;

    std::vector<std::size_t> cluster_sizes() const;
    std::vector<std::vector<Index>> members() const;
};

/// Point-to-centroid cost: squared Euclidean distance, or 1 - cos for the cosine metric.
double metric_cost(Metric metric, std::span<const double> x, std::span<const double> centroid);

/// Lloyd's algorithm from a single k-means++ seeding. Ties in assignment go to the lowest
/// cluster id; a cluster left empty takes the point farthest from its own centroid.
Clustering kmeans(const Matrix& features, std::size_t k, Metric metric, std::uint64_t seed,
                  const KMeansOptions& opts = {});

/// Mean of the member rows, renormalized under the cosine metric.
std::vector<double> cluster_centroid(const Matrix& features, std::span<const Index> members, Metric metric);

/// Non-excluded member nearest to `centroid` (lowest row index on ties), or nullopt when
/// every member is excluded. `excluded` must be sorted.
std::optional<Index> closest_to_centroid(const Matrix& features, std::span<const Index> members,
                                         std::span<const double> centroid, Metric metric,
                                         std::span<const Index> excluded = {});

/// Adjusted Rand Index between two flat partitions of the same items.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

}  // namespace aepl
