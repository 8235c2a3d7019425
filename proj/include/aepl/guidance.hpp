#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "aepl/data.hpp"
#include "aepl/matrix.hpp"
#include "aepl/promptmodel.hpp"

namespace aepl {

/// Feature space handed to clustering.
enum class GuidanceMode {
    ImageOnly,
    TextOnly,
    ClassGuidedSoft,   // image averaged with the probability-weighted mixture of class text features
    ClassGuidedHard,   // image averaged with the argmax class text feature
    ClassGuidedLabel,  // image averaged with the ground-truth class text feature (needs label access)
};

std::string_view to_string(GuidanceMode m);
GuidanceMode parse_guidance_mode(std::string_view s);

/// Mixture of unit-normalized weight rows for image `x`. The result is not renormalized.
/// `true_label` must be present exactly when `mode` is ClassGuidedLabel.
std::vector<double> weighted_text_features(const PromptHead& head, std::span<const double> x, GuidanceMode mode,
                                           std::optional<ClassId> true_label = std::nullopt);

/// One row per train image (in ascending train-index order).
///
/// ClassGuided* rows are (image + text mixture) / 2, ImageOnly rows are the image embedding
/// and TextOnly rows the text mixture (soft weights). `ground_truth` is only consulted in
/// ClassGuidedLabel mode, where it must be supplied.
Matrix class_guided_features(const EmbeddingDataset& ds, const PromptHead& head, GuidanceMode mode,
                             std::optional<std::span<const ClassId>> ground_truth = std::nullopt);

}  // namespace aepl
