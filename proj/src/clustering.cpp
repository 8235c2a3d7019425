#include "aepl/clustering.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <string>

#include "aepl/error.hpp"
#include "aepl/random.hpp"

namespace aepl {

std::string_view to_string(Metric m) { return m == Metric::Euclidean ? "euclidean" : "cosine"; }

Metric parse_metric(std::string_view s) {
    if (s == "euclidean") return Metric::Euclidean;
    if (s == "cosine") return Metric::Cosine;
    throw DomainError("unknown metric '" + std::string(s) + "'");
}

std::vector<std::size_t> Clustering::cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) ++sizes[a];
    return sizes;
}

std::vector<std::vector<Index>> Clustering::members() const {
    std::vector<std::vector<Index>> out(k);
    for (Index i = 0; i < assignments.size(); ++i) out[assignments[i]].push_back(i);
    return out;
}

double metric_cost(Metric metric, std::span<const double> x, std::span<const double> centroid) {
    if (metric == Metric::Euclidean) return squared_distance(x, centroid);
    const double nx = norm(x), nc = norm(centroid);
    if (nx == 0.0 || nc == 0.0) return 1.0;
    return 1.0 - dot(x, centroid) / (nx * nc);
}

namespace {

// Cost between working points and centroids. Under Cosine both sides are already unit
// (or zero) rows, so the norms drop out.
double unit_cost(Metric metric, std::span<const double> x, std::span<const double> centroid) {
    return metric == Metric::Euclidean ? squared_distance(x, centroid) : std::max(0.0, 1.0 - dot(x, centroid));
}

// Rows used for cosine work are unit-normalized copies of the input.
Matrix working_points(const Matrix& features, Metric metric) {
    Matrix pts = features;
    if (metric == Metric::Cosine)
        for (std::size_t i = 0; i < pts.rows(); ++i) normalize_in_place(pts.row(i));
    return pts;
}

// k-means++ seeding. Once every remaining point coincides with a chosen center the
// D^2 weights are all zero; the lowest-index unchosen point is taken instead.
std::vector<Index> kmeanspp_seeds(const Matrix& pts, std::size_t k, Metric metric, Rng& rng) {
    const std::size_t m = pts.rows();
    std::vector<Index> seeds;
    std::vector<bool> chosen(m, false);
    std::uniform_int_distribution<Index> first(0, m - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    seeds.push_back(first(rng));
    chosen[seeds.back()] = true;
    std::vector<double> dist(m, std::numeric_limits<double>::infinity());
    while (seeds.size() < k) {
        const auto last = pts.row(seeds.back());
        double total = 0.0;
        for (Index i = 0; i < m; ++i) {
            dist[i] = chosen[i] ? 0.0 : std::min(dist[i], unit_cost(metric, pts.row(i), last));
            total += dist[i];
        }
        Index pick = m;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            for (Index i = 0; i < m; ++i) {
                if (dist[i] <= 0.0) continue;
                acc += dist[i];
                pick = i;
                if (acc > target) break;
            }
        } else {
            for (Index i = 0; i < m && pick == m; ++i)
                if (!chosen[i]) pick = i;
        }
        chosen[pick] = true;
        seeds.push_back(pick);
    }
    return seeds;
}

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x, Metric metric, double& cost) {
    std::size_t best = 0;
    cost = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
        const double c = unit_cost(metric, x, centroids.row(j));
        if (c < cost) {
            cost = c;
            best = j;
        }
    }
    return best;
}

void update_centroids(const Matrix& pts, const std::vector<std::size_t>& assign, Metric metric, Matrix& centroids) {
    const std::size_t d = pts.cols();
    std::vector<std::size_t> counts(centroids.rows(), 0);
    Matrix sums(centroids.rows(), d);
    for (Index i = 0; i < pts.rows(); ++i) {
        auto s = sums.row(assign[i]);
        auto x = pts.row(i);
        for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
        ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        if (counts[c] == 0) continue;
        std::vector<double> mean(d);
        auto s = sums.row(c);
        for (std::size_t j = 0; j < d; ++j) mean[j] = s[j] / static_cast<double>(counts[c]);
        // A mean of unit vectors vanishes only for antipodal members; the previous
        // direction is kept in that case.
        if (metric == Metric::Cosine) {
            if (norm(mean) == 0.0) continue;
            normalize_in_place(mean);
        }
        std::copy(mean.begin(), mean.end(), centroids.row(c).begin());
    }
}

double objective(const Matrix& pts, const std::vector<std::size_t>& assign, const Matrix& centroids, Metric metric) {
    double total = 0.0;
    for (Index i = 0; i < pts.rows(); ++i) total += unit_cost(metric, pts.row(i), centroids.row(assign[i]));
    return total;
}

}  // namespace

Clustering kmeans(const Matrix& features, std::size_t k, Metric metric, std::uint64_t seed, const KMeansOptions& opts) {
    const std::size_t m = features.rows();
    if (k < 1) throw DomainError("k must be >= 1");
    if (k > m) throw DomainError("k = " + std::to_string(k) + " exceeds the number of points " + std::to_string(m));
    if (opts.max_iter < 1) throw DomainError("max_iter must be >= 1");
    if (!(opts.tol >= 0.0)) throw DomainError("tol must be >= 0");

    const Matrix pts = working_points(features, metric);
    auto rng = make_rng(seed, {stream::kKMeans});
    Clustering out;
    out.k = k;
    out.metric = metric;
    out.centroids = Matrix(k, features.cols());
    const auto seeds = kmeanspp_seeds(pts, k, metric, rng);
    for (std::size_t c = 0; c < k; ++c) {
        auto src = pts.row(seeds[c]);
        std::copy(src.begin(), src.end(), out.centroids.row(c).begin());
    }

    out.assignments.assign(m, 0);
    std::vector<double> cost(m);
    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
        for (Index i = 0; i < m; ++i) out.assignments[i] = nearest_centroid(out.centroids, pts.row(i), metric, cost[i]);

        // Empty-cluster repair: move the point farthest from its centroid (among clusters
        // that can spare one) into the empty cluster and centre it there.
        auto sizes = out.cluster_sizes();
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            Index donor = m;
            for (Index i = 0; i < m; ++i)
                if (sizes[out.assignments[i]] > 1 && (donor == m || cost[i] > cost[donor])) donor = i;
            --sizes[out.assignments[donor]];
            ++sizes[c];
            out.assignments[donor] = c;
            cost[donor] = 0.0;
            auto src = pts.row(donor);
            std::copy(src.begin(), src.end(), out.centroids.row(c).begin());
        }

        const Matrix previous = out.centroids;
        update_centroids(pts, out.assignments, metric, out.centroids);
        out.inertia = objective(pts, out.assignments, out.centroids, metric);
        out.inertia_history.push_back(out.inertia);

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            shift = std::max(shift, std::sqrt(squared_distance(previous.row(c), out.centroids.row(c))));
        if (shift < opts.tol) break;
    }
    return out;
}

std::vector<double> cluster_centroid(const Matrix& features, std::span<const Index> members, Metric metric) {
    if (members.empty()) throw DomainError("centroid of an empty member set");
    std::vector<double> c(features.cols(), 0.0);
    for (Index i : members) {
        auto x = features.row(i);
        for (std::size_t j = 0; j < c.size(); ++j) c[j] += x[j];
    }
    for (double& v : c) v /= static_cast<double>(members.size());
    if (metric == Metric::Cosine) normalize_in_place(c);
    return c;
}

std::optional<Index> closest_to_centroid(const Matrix& features, std::span<const Index> members,
                                         std::span<const double> centroid, Metric metric,
                                         std::span<const Index> excluded) {
    std::optional<Index> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (Index i : members) {
        if (std::binary_search(excluded.begin(), excluded.end(), i)) continue;
        const double c = metric_cost(metric, features.row(i), centroid);
        if (c < best_cost || (c == best_cost && best && i < *best)) {
            best_cost = c;
            best = i;
        }
    }
    return best;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) throw DomainError("partitions have different lengths");
    const std::size_t n = a.size();
    auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> table;
    std::map<std::size_t, std::size_t> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        ++table[{a[i], b[i]}];
        ++rows[a[i]];
        ++cols[b[i]];
    }
    double index = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [key, count] : table) index += pairs(static_cast<double>(count));
    for (const auto& [key, count] : rows) sum_a += pairs(static_cast<double>(count));
    for (const auto& [key, count] : cols) sum_b += pairs(static_cast<double>(count));
    const double total = pairs(static_cast<double>(n));
    const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
    const double max_index = (sum_a + sum_b) / 2.0;
    // Both partitions trivial (all singletons or one block, identical structure): perfect agreement.
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

}  // namespace aepl
