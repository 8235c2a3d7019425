#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "aepl/data.hpp"
#include "aepl/matrix.hpp"

namespace aepl {

/// Learnable per-class text features scored by temperature-scaled cosine similarity.
/// Rows are unconstrained; scoring normalizes each row on the fly.
struct PromptHead {
    Matrix weights;  // c x d
    double tau = 0.01;

    std::size_t num_classes() const noexcept { return weights.rows(); }
    std::size_t dim() const noexcept { return weights.cols(); }

    friend bool operator==(const PromptHead&, const PromptHead&) = default;
};

struct TrainConfig {
    std::size_t epochs = 200;
    double lr0 = 0.002;
    double init_std = 0.02;
    std::uint64_t seed = 0;
    std::size_t batch = 0;  // 0 = full batch

    void validate() const;
};

struct LabeledRecord {
    Index index;
    ClassId label;
    bool is_pseudo;

    friend bool operator==(const LabeledRecord&, const LabeledRecord&) = default;
};

/// The accumulated training set. Indices are unique; insertion order is preserved.
class LabeledPool {
public:
    LabeledPool() = default;
    explicit LabeledPool(std::vector<LabeledRecord> records);

    void add(LabeledRecord r);
    bool contains(Index i) const;

    const std::vector<LabeledRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    std::size_t pseudo_count() const noexcept;
    /// Sorted indices of every record.
    std::vector<Index> indices() const;

    /// Throws unless every index is a train image and every label is a valid class.
    void validate_against(const EmbeddingDataset& ds) const;

    friend bool operator==(const LabeledPool&, const LabeledPool&) = default;

private:
    std::vector<LabeledRecord> records_;
};

/// Precomputed per-row norms so batches of images can be scored without renormalizing
/// the head each time. Throws DegenerateModelError on a zero-norm row.
class HeadScorer {
public:
    explicit HeadScorer(const PromptHead& head);

    /// Softmax over cos(x, w_k) / tau with max-logit subtraction. `x` need not be exactly unit norm.
    std::vector<double> probs(std::span<const double> x) const;
    std::vector<double> probs(std::span<const float> x) const;

    const PromptHead& head() const noexcept { return *head_; }
    /// Unit-normalized weight row k.
    std::span<const double> unit_row(ClassId k) const noexcept { return unit_.row(k); }
    double row_norm(ClassId k) const noexcept { return norms_[k]; }

private:
    const PromptHead* head_;
    Matrix unit_;
    std::vector<double> norms_;
};

std::vector<double> class_probs(const PromptHead& head, std::span<const double> x);

struct Prediction {
    ClassId label;
    double confidence;
};

/// Argmax of `probs`, lowest class index on ties.
Prediction argmax_prediction(std::span<const double> probs);
Prediction pseudo_label(const PromptHead& head, std::span<const double> x);

/// Zero-shot text embeddings plus `cfg.init_std` Gaussian noise drawn from (cfg.seed, round).
PromptHead init_head(const Matrix& zeroshot_text_embeds, const TrainConfig& cfg, std::size_t round, double tau);
/// The un-perturbed zero-shot classifier.
PromptHead zeroshot_head(const EmbeddingDataset& ds, double tau);

struct LossGrad {
    double loss;
    Matrix grad;  // c x d
};

/// Mean cross-entropy over the pool and its exact gradient with respect to the weights.
LossGrad loss_and_grad(const PromptHead& head, const EmbeddingDataset& ds, const LabeledPool& pool);

/// Same, restricted to `records` (used for mini-batches).
LossGrad loss_and_grad(const PromptHead& head, const EmbeddingDataset& ds, std::span<const LabeledRecord> records);

/// SGD with a cosine-annealed learning rate, deterministic for fixed inputs.
PromptHead train(PromptHead head, const EmbeddingDataset& ds, const LabeledPool& pool, const TrainConfig& cfg);

/// Fraction of `split` images whose pseudo-label equals the ground truth.
double evaluate(const PromptHead& head, const EmbeddingDataset& ds, Split split);

}  // namespace aepl
