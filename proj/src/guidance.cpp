#include "aepl/guidance.hpp"

#include "aepl/error.hpp"

namespace aepl {

std::string_view to_string(GuidanceMode m) {
    switch (m) {
        case GuidanceMode::ImageOnly: return "image";
        case GuidanceMode::TextOnly: return "text";
        case GuidanceMode::ClassGuidedSoft: return "class_soft";
        case GuidanceMode::ClassGuidedHard: return "class_hard";
        case GuidanceMode::ClassGuidedLabel: return "class_label";
    }
    return "?";
}

GuidanceMode parse_guidance_mode(std::string_view s) {
    for (auto m : {GuidanceMode::ImageOnly, GuidanceMode::TextOnly, GuidanceMode::ClassGuidedSoft,
                   GuidanceMode::ClassGuidedHard, GuidanceMode::ClassGuidedLabel})
        if (s == to_string(m)) return m;
    throw DomainError("unknown guidance mode '" + std::string(s) + "'");
}

namespace {

void mix_into(const HeadScorer& scorer, std::span<const double> x, GuidanceMode mode, std::optional<ClassId> true_label,
              std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    auto copy_row = [&](ClassId k) {
        auto w = scorer.unit_row(k);
        std::copy(w.begin(), w.end(), out.begin());
    };
    switch (mode) {
        case GuidanceMode::ClassGuidedLabel:
            if (!true_label) throw DomainError("ground-truth guidance requires the true label");
            if (*true_label >= scorer.head().num_classes()) throw DomainError("true label out of range");
            copy_row(*true_label);
            return;
        case GuidanceMode::ClassGuidedHard:
            copy_row(argmax_prediction(scorer.probs(x)).label);
            return;
        case GuidanceMode::ImageOnly:
        case GuidanceMode::TextOnly:
        case GuidanceMode::ClassGuidedSoft: {
            const auto p = scorer.probs(x);
            for (std::size_t k = 0; k < p.size(); ++k) {
                auto w = scorer.unit_row(static_cast<ClassId>(k));
                for (std::size_t j = 0; j < out.size(); ++j) out[j] += p[k] * w[j];
            }
            return;
        }
    }
}

}  // namespace

std::vector<double> weighted_text_features(const PromptHead& head, std::span<const double> x, GuidanceMode mode,
                                           std::optional<ClassId> true_label) {
    if (true_label && mode != GuidanceMode::ClassGuidedLabel)
        throw DomainError("a true label is only accepted in ground-truth guidance mode");
    if (x.size() != head.dim()) throw DomainError("input dimension differs from head dimension");
    const HeadScorer scorer(head);
    std::vector<double> out(head.dim());
    mix_into(scorer, x, mode, true_label, out);
    return out;
}

Matrix class_guided_features(const EmbeddingDataset& ds, const PromptHead& head, GuidanceMode mode,
                             std::optional<std::span<const ClassId>> ground_truth) {
    if (mode == GuidanceMode::ClassGuidedLabel && !ground_truth)
        throw DomainError("ground-truth guidance is not enabled");
    if (head.dim() != ds.dim()) throw DomainError("head dimension differs from dataset dimension");
    const auto train = ds.indices(Split::Train);
    const std::size_t d = ds.dim();
    Matrix out(train.size(), d);
    if (mode == GuidanceMode::ImageOnly) {
        for (std::size_t r = 0; r < train.size(); ++r) {
            auto img = ds.image(train[r]);
            std::copy(img.begin(), img.end(), out.row(r).begin());
        }
        return out;
    }
    const HeadScorer scorer(head);
    std::vector<double> x(d);
    for (std::size_t r = 0; r < train.size(); ++r) {
        auto img = ds.image(train[r]);
        std::copy(img.begin(), img.end(), x.begin());
        std::optional<ClassId> label;
        if (mode == GuidanceMode::ClassGuidedLabel) label = (*ground_truth)[train[r]];
        auto row = out.row(r);
        mix_into(scorer, x, mode, label, row);
        if (mode != GuidanceMode::TextOnly)
            for (std::size_t j = 0; j < d; ++j) row[j] = (x[j] + row[j]) / 2.0;
    }
    return out;
}

}  // namespace aepl
