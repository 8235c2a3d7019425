#include "aepl/promptmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <unordered_set>

#include "aepl/error.hpp"
#include "aepl/random.hpp"

namespace aepl {

void TrainConfig::validate() const {
    if (epochs < 1) throw DomainError("epochs must be >= 1");
    if (!(lr0 > 0.0)) throw DomainError("lr0 must be positive");
    if (!(init_std >= 0.0)) throw DomainError("init_std must be >= 0");
}

LabeledPool::LabeledPool(std::vector<LabeledRecord> records) {
    for (const auto& r : records) add(r);
}

void LabeledPool::add(LabeledRecord r) {
    if (contains(r.index)) throw ConsistencyError("duplicate pool index " + std::to_string(r.index));
    records_.push_back(r);
}

bool LabeledPool::contains(Index i) const {
    return std::any_of(records_.begin(), records_.end(), [i](const LabeledRecord& r) { return r.index == i; });
}

std::size_t LabeledPool::pseudo_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(records_.begin(), records_.end(), [](const LabeledRecord& r) { return r.is_pseudo; }));
}

std::vector<Index> LabeledPool::indices() const {
    std::vector<Index> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.index);
    std::sort(out.begin(), out.end());
    return out;
}

void LabeledPool::validate_against(const EmbeddingDataset& ds) const {
    for (const auto& r : records_) {
        if (r.index >= ds.size() || ds.split_of(r.index) != Split::Train)
            throw DomainError("pool index " + std::to_string(r.index) + " is not a train image");
        if (r.label >= ds.num_classes()) throw DomainError("pool label out of range");
    }
}

HeadScorer::HeadScorer(const PromptHead& head) : head_(&head), unit_(head.weights), norms_(head.num_classes()) {
    if (!(head.tau > 0.0)) throw DegenerateModelError("temperature must be positive");
    for (std::size_t k = 0; k < head.num_classes(); ++k) {
        norms_[k] = norm(head.weights.row(k));
        if (!(norms_[k] > 0.0) || !std::isfinite(norms_[k]))
            throw DegenerateModelError("weight row " + std::to_string(k) + " has zero or non-finite norm");
        for (double& v : unit_.row(k)) v /= norms_[k];
    }
}

std::vector<double> HeadScorer::probs(std::span<const double> x) const {
    const std::size_t c = unit_.rows();
    std::vector<double> p(c);
    const double nx = norm(x);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) {
        p[k] = dot(x, unit_.row(k)) / nx / head_->tau;
        max_logit = std::max(max_logit, p[k]);
    }
    double total = 0.0;
    for (double& v : p) {
        v = std::exp(v - max_logit);
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

std::vector<double> HeadScorer::probs(std::span<const float> x) const {
    std::vector<double> wide(x.begin(), x.end());
    return probs(wide);
}

std::vector<double> class_probs(const PromptHead& head, std::span<const double> x) {
    if (x.size() != head.dim()) throw DomainError("input dimension differs from head dimension");
    if (std::abs(norm(x) - 1.0) > kUnitNormTolerance) throw DomainError("class_probs input is not unit norm");
    return HeadScorer(head).probs(x);
}

Prediction argmax_prediction(std::span<const double> probs) {
    Prediction best{0, probs[0]};
    for (std::size_t k = 1; k < probs.size(); ++k)
        if (probs[k] > best.confidence) best = {static_cast<ClassId>(k), probs[k]};
    return best;
}

Prediction pseudo_label(const PromptHead& head, std::span<const double> x) {
    return argmax_prediction(class_probs(head, x));
}

PromptHead init_head(const Matrix& zeroshot_text_embeds, const TrainConfig& cfg, std::size_t round, double tau) {
    if (round < 1) throw DomainError("rounds are numbered from 1");
    PromptHead head{zeroshot_text_embeds, tau};
    if (cfg.init_std > 0.0) {
        auto rng = make_rng(cfg.seed, {stream::kHeadInit, round});
        std::normal_distribution<double> gauss(0.0, cfg.init_std);
        for (double& v : head.weights.data()) v += gauss(rng);
    }
    return head;
}

PromptHead zeroshot_head(const EmbeddingDataset& ds, double tau) { return PromptHead{ds.text_matrix(), tau}; }

LossGrad loss_and_grad(const PromptHead& head, const EmbeddingDataset& ds, std::span<const LabeledRecord> records) {
    if (records.empty()) throw DomainError("loss over an empty pool");
    const HeadScorer scorer(head);
    const std::size_t c = head.num_classes(), d = head.dim();
    LossGrad out{0.0, Matrix(c, d)};
    const double inv_m = 1.0 / static_cast<double>(records.size());
    std::vector<double> x(d);
    for (const auto& r : records) {
        auto img = ds.image(r.index);
        std::copy(img.begin(), img.end(), x.begin());
        normalize_in_place(x);
        const auto p = scorer.probs(x);
        out.loss -= std::log(p[r.label]) * inv_m;
        // dL/dlogit_k = p_k - [k == y]; dlogit_k/dw_k = (x_hat - cos_k * w_hat_k) / (|w_k| * tau).
        for (std::size_t k = 0; k < c; ++k) {
            const double g_logit = (p[k] - (k == r.label ? 1.0 : 0.0)) * inv_m;
            if (g_logit == 0.0) continue;
            const auto w_hat = scorer.unit_row(static_cast<ClassId>(k));
            const double cos_k = dot(x, w_hat);
            const double scale = g_logit / (scorer.row_norm(static_cast<ClassId>(k)) * head.tau);
            auto g = out.grad.row(k);
            for (std::size_t j = 0; j < d; ++j) g[j] += scale * (x[j] - cos_k * w_hat[j]);
        }
    }
    return out;
}

LossGrad loss_and_grad(const PromptHead& head, const EmbeddingDataset& ds, const LabeledPool& pool) {
    return loss_and_grad(head, ds, std::span<const LabeledRecord>(pool.records()));
}

PromptHead train(PromptHead head, const EmbeddingDataset& ds, const LabeledPool& pool, const TrainConfig& cfg) {
    cfg.validate();
    if (pool.empty()) throw DomainError("cannot train on an empty pool");
    std::vector<LabeledRecord> order = pool.records();
    const std::size_t m = order.size();
    const std::size_t batch = (cfg.batch == 0 || cfg.batch > m) ? m : cfg.batch;
    const std::size_t steps_per_epoch = (m + batch - 1) / batch;
    const std::size_t total_steps = cfg.epochs * steps_per_epoch;
    auto rng = make_rng(cfg.seed, {stream::kShuffle});

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (batch < m) std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < m; start += batch, ++step) {
            const std::size_t len = std::min(batch, m - start);
            LossGrad lg;
            try {
                lg = loss_and_grad(head, ds, std::span<const LabeledRecord>(order.data() + start, len));
            } catch (const DegenerateModelError& e) {
                throw TrainingDivergedError(step, e.what());
            }
            if (!std::isfinite(lg.loss)) throw TrainingDivergedError(step, "non-finite loss");
            const double lr = cfg.lr0 * 0.5 *
                              (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                              static_cast<double>(total_steps)));
            auto& w = head.weights.data();
            const auto& g = lg.grad.data();
            for (std::size_t i = 0; i < w.size(); ++i) {
                w[i] -= lr * g[i];
                if (!std::isfinite(w[i])) throw TrainingDivergedError(step, "non-finite weights");
            }
        }
    }
    return head;
}

double evaluate(const PromptHead& head, const EmbeddingDataset& ds, Split split) {
    const auto idx = ds.indices(split);
    if (idx.empty()) throw DomainError("cannot evaluate on an empty split");
    const HeadScorer scorer(head);
    std::size_t correct = 0;
    for (Index i : idx)
        if (argmax_prediction(scorer.probs(ds.image(i))).label == ds.ground_truth()[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

}  // namespace aepl
