#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aepl/matrix.hpp"

namespace aepl {

enum class Split : std::uint8_t { Train = 0, Test = 1 };

/// Frozen image and zero-shot text embeddings plus labels and split tags.
///
/// Embeddings are stored at 32-bit precision exactly as they appear on disk;
/// consumers widen to double before doing arithmetic. Ground-truth labels are
/// reachable only through `ground_truth()`, which is meant for the simulated
/// annotator, evaluation, the ground-truth guidance ablation and dataset-quality
/// metrics.
class EmbeddingDataset {
public:
    EmbeddingDataset() = default;
    EmbeddingDataset(std::size_t n, std::size_t d, std::vector<std::string> class_names,
                     std::vector<float> image_embeds, std::vector<ClassId> labels, std::vector<float> text_embeds,
                     std::vector<Split> split);

    std::size_t size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return d_; }
    std::size_t num_classes() const noexcept { return class_names_.size(); }

    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    const std::vector<Split>& split() const noexcept { return split_; }
    Split split_of(Index i) const { return split_.at(i); }

    std::span<const float> image(Index i) const noexcept { return {image_embeds_.data() + i * d_, d_}; }
    std::span<const float> text(ClassId c) const noexcept { return {text_embeds_.data() + c * d_, d_}; }
    const std::vector<float>& image_embeds() const noexcept { return image_embeds_; }
    const std::vector<float>& text_embeds() const noexcept { return text_embeds_; }

    /// Image embedding `i` widened to double.
    std::vector<double> image_f64(Index i) const;
    /// Zero-shot text embeddings as a c x d double matrix.
    Matrix text_matrix() const;

    const std::vector<ClassId>& ground_truth() const noexcept { return labels_; }

    /// Indices tagged with `s`, ascending.
    std::vector<Index> indices(Split s) const;

    /// Throws DomainError describing the first violated invariant.
    void validate() const;

    friend bool operator==(const EmbeddingDataset&, const EmbeddingDataset&) = default;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<std::string> class_names_;
    std::vector<float> image_embeds_;
    std::vector<ClassId> labels_;
    std::vector<float> text_embeds_;
    std::vector<Split> split_;
};

inline constexpr double kUnitNormTolerance = 1e-5;

EmbeddingDataset load_dataset(const std::filesystem::path& path);
/// Decodes the binary format from memory; `load_dataset` reads the file and calls this.
EmbeddingDataset decode_dataset(std::span<const std::uint8_t> bytes);

void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_dataset(const EmbeddingDataset& ds);

struct SyntheticSpec {
    std::size_t classes = 10;
    std::size_t dim = 16;
    std::size_t per_class = 100;
    double spread = 0.05;
    double text_noise = 0.05;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Gaussian blobs around random unit anchors, with text embeddings as perturbed anchors.
/// Every fifth image of a class (positions 4, 9, ...) goes to the test split.
EmbeddingDataset generate_synthetic(const SyntheticSpec& spec);

/// Simulated annotator: answers with the ground-truth label of a train-split image.
class Oracle {
public:
    explicit Oracle(const EmbeddingDataset& ds) : ds_(&ds) {}
    ClassId label(Index i) const;

private:
    const EmbeddingDataset* ds_;
};

inline ClassId oracle_label(const EmbeddingDataset& ds, Index i) { return Oracle(ds).label(i); }

}  // namespace aepl
