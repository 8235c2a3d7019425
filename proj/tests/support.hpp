#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "aepl/data.hpp"
#include "aepl/matrix.hpp"
#include "aepl/promptmodel.hpp"

namespace aepl::testing {

/// Builds a dataset from double rows (normalized here). Every row is a train image unless
/// listed in `test_rows`; text embeddings default to the identity-like basis e_0, e_1, ...
inline EmbeddingDataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<ClassId>& labels,
                                     std::size_t classes, std::vector<std::vector<double>> text = {},
                                     const std::vector<Index>& test_rows = {}) {
    const std::size_t d = rows.front().size();
    if (text.empty())
        for (std::size_t k = 0; k < classes; ++k) {
            std::vector<double> e(d, 0.0);
            e[k % d] = 1.0;
            text.push_back(e);
        }
    auto pack = [d](const std::vector<std::vector<double>>& m) {
        std::vector<float> out;
        for (auto r : m) {
            normalize_in_place(r);
            for (std::size_t j = 0; j < d; ++j) out.push_back(static_cast<float>(r[j]));
        }
        return out;
    };
    std::vector<Split> split(rows.size(), Split::Train);
    for (Index i : test_rows) split[i] = Split::Test;
    std::vector<std::string> names;
    for (std::size_t k = 0; k < classes; ++k) names.push_back("c" + std::to_string(k));
    return EmbeddingDataset(rows.size(), d, names, pack(rows), labels, pack(text), split);
}

inline std::vector<double> random_unit(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> g;
    std::vector<double> v(d);
    for (double& x : v) x = g(rng);
    normalize_in_place(v);
    return v;
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(rows, cols);
    for (double& x : m.data()) x = g(rng);
    return m;
}

inline std::vector<double> widen(std::span<const float> x) { return {x.begin(), x.end()}; }

}  // namespace aepl::testing
