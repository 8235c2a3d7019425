#include "aepl/data.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include <json.hpp>

#include "aepl/error.hpp"
#include "aepl/random.hpp"

namespace aepl {

namespace {

constexpr char kMagic[4] = {'A', 'E', 'P', 'L'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kPreambleBytes = 12;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    static_assert(sizeof(T) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &value, 4);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <class T>
T get_le(const std::uint8_t* p) {
    static_assert(sizeof(T) == 4);
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    T value;
    std::memcpy(&value, &bits, 4);
    return value;
}

double row_norm(std::span<const float> row) {
    double s = 0.0;
    for (float v : row) s += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(s);
}

}  // namespace

EmbeddingDataset::EmbeddingDataset(std::size_t n, std::size_t d, std::vector<std::string> class_names,
                                   std::vector<float> image_embeds, std::vector<ClassId> labels,
                                   std::vector<float> text_embeds, std::vector<Split> split)
    : n_(n),
      d_(d),
      class_names_(std::move(class_names)),
      image_embeds_(std::move(image_embeds)),
      labels_(std::move(labels)),
      text_embeds_(std::move(text_embeds)),
      split_(std::move(split)) {
    validate();
}

std::vector<double> EmbeddingDataset::image_f64(Index i) const {
    auto row = image(i);
    return {row.begin(), row.end()};
}

Matrix EmbeddingDataset::text_matrix() const {
    Matrix m(num_classes(), d_);
    std::copy(text_embeds_.begin(), text_embeds_.end(), m.data().begin());
    return m;
}

std::vector<Index> EmbeddingDataset::indices(Split s) const {
    std::vector<Index> out;
    for (Index i = 0; i < n_; ++i)
        if (split_[i] == s) out.push_back(i);
    return out;
}

void EmbeddingDataset::validate() const {
    const std::size_t c = class_names_.size();
    if (d_ == 0) throw DomainError("dataset dimension must be positive");
    if (c == 0) throw DomainError("dataset must have at least one class");
    if (image_embeds_.size() != n_ * d_) throw DomainError("image embedding matrix is not n x d");
    if (text_embeds_.size() != c * d_) throw DomainError("text embedding matrix is not c x d");
    if (labels_.size() != n_) throw DomainError("label count differs from n");
    if (split_.size() != n_) throw DomainError("split count differs from n");
    for (Index i = 0; i < n_; ++i) {
        if (labels_[i] >= c) throw DomainError("label of image " + std::to_string(i) + " is out of range");
        if (split_[i] != Split::Train && split_[i] != Split::Test)
            throw DomainError("split tag of image " + std::to_string(i) + " is invalid");
    }
    for (float v : image_embeds_)
        if (!std::isfinite(v)) throw DomainError("non-finite image embedding value");
    for (float v : text_embeds_)
        if (!std::isfinite(v)) throw DomainError("non-finite text embedding value");
    for (Index i = 0; i < n_; ++i)
        if (std::abs(row_norm(image(i)) - 1.0) > kUnitNormTolerance)
            throw DomainError("image embedding " + std::to_string(i) + " is not unit norm");
    for (ClassId k = 0; k < c; ++k)
        if (std::abs(row_norm(text(k)) - 1.0) > kUnitNormTolerance)
            throw DomainError("text embedding " + std::to_string(k) + " is not unit norm");
}

std::vector<std::uint8_t> encode_dataset(const EmbeddingDataset& ds) {
    nlohmann::ordered_json header;
    header["n"] = ds.size();
    header["d"] = ds.dim();
    header["c"] = ds.num_classes();
    header["class_names"] = ds.class_names();
    auto split = nlohmann::ordered_json::array();
    for (Split s : ds.split()) split.push_back(static_cast<int>(s));
    header["split"] = std::move(split);
    const std::string text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(kPreambleBytes + text.size() + 4 * (ds.image_embeds().size() + ds.size() + ds.text_embeds().size()));
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_le(out, kVersion);
    put_le(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (float v : ds.image_embeds()) put_le(out, v);
    for (ClassId y : ds.ground_truth()) put_le(out, y);
    for (float v : ds.text_embeds()) put_le(out, v);
    return out;
}

EmbeddingDataset decode_dataset(std::span<const std::uint8_t> bytes) {
    using Kind = FormatError::Kind;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(Kind::BadMagic, 0, "missing \"AEPL\" magic");
    if (bytes.size() < kPreambleBytes) throw FormatError(Kind::Truncated, bytes.size(), "file ends inside the preamble");
    const auto version = get_le<std::uint32_t>(bytes.data() + 4);
    if (version != kVersion)
        throw FormatError(Kind::VersionMismatch, 4, "unsupported version " + std::to_string(version));
    const auto header_len = get_le<std::uint32_t>(bytes.data() + 8);
    if (bytes.size() - kPreambleBytes < header_len)
        throw FormatError(Kind::Truncated, bytes.size(), "file ends inside the JSON header");

    std::size_t n = 0, d = 0, c = 0;
    std::vector<std::string> class_names;
    std::vector<Split> split;
    try {
        const auto header = nlohmann::json::parse(bytes.begin() + kPreambleBytes,
                                                  bytes.begin() + kPreambleBytes + header_len);
        n = header.at("n").get<std::size_t>();
        d = header.at("d").get<std::size_t>();
        c = header.at("c").get<std::size_t>();
        class_names = header.at("class_names").get<std::vector<std::string>>();
        for (int tag : header.at("split").get<std::vector<int>>()) {
            if (tag != 0 && tag != 1) throw FormatError(Kind::BadHeader, 12, "split tags must be 0 or 1");
            split.push_back(static_cast<Split>(tag));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(Kind::BadHeader, kPreambleBytes, std::string("invalid JSON header: ") + e.what());
    }
    if (class_names.size() != c) throw FormatError(Kind::BadHeader, kPreambleBytes, "class_names length differs from c");
    if (split.size() != n) throw FormatError(Kind::BadHeader, kPreambleBytes, "split length differs from n");
    if (d == 0 || c == 0) throw FormatError(Kind::BadHeader, kPreambleBytes, "d and c must be positive");

    const std::uint64_t images_at = kPreambleBytes + header_len;
    const std::uint64_t labels_at = images_at + 4ull * n * d;
    const std::uint64_t text_at = labels_at + 4ull * n;
    const std::uint64_t end_at = text_at + 4ull * c * d;
    if (bytes.size() < end_at)
        throw FormatError(Kind::Truncated, bytes.size(),
                          "payload truncated: expected " + std::to_string(end_at) + " bytes, got " +
                              std::to_string(bytes.size()));
    if (bytes.size() > end_at)
        throw FormatError(Kind::TrailingBytes, end_at, "unexpected bytes after the text embeddings");

    auto read_floats = [&](std::uint64_t at, std::size_t count) {
        std::vector<float> out(count);
        for (std::size_t i = 0; i < count; ++i) {
            out[i] = get_le<float>(bytes.data() + at + 4 * i);
            if (!std::isfinite(out[i])) throw FormatError(Kind::NonFinite, at + 4 * i, "non-finite embedding value");
        }
        return out;
    };
    auto images = read_floats(images_at, n * d);
    std::vector<ClassId> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = get_le<std::uint32_t>(bytes.data() + labels_at + 4 * i);
        if (labels[i] >= c) throw FormatError(Kind::InvalidContent, labels_at + 4 * i, "label out of range");
    }
    auto text = read_floats(text_at, c * d);

    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(row_norm({images.data() + i * d, d}) - 1.0) > kUnitNormTolerance)
            throw FormatError(Kind::InvalidContent, images_at + 4 * i * d, "image embedding is not unit norm");
    for (std::size_t k = 0; k < c; ++k)
        if (std::abs(row_norm({text.data() + k * d, d}) - 1.0) > kUnitNormTolerance)
            throw FormatError(Kind::InvalidContent, text_at + 4 * k * d, "text embedding is not unit norm");

    return EmbeddingDataset(n, d, std::move(class_names), std::move(images), std::move(labels), std::move(text),
                            std::move(split));
}

EmbeddingDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return decode_dataset(bytes);
}

void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path) {
    const auto bytes = encode_dataset(ds);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

void SyntheticSpec::validate() const {
    if (classes < 2) throw DomainError("synthetic spec needs at least 2 classes");
    if (dim < 2) throw DomainError("synthetic spec needs dimension >= 2");
    if (per_class < 1) throw DomainError("synthetic spec needs at least one image per class");
    if (!(spread >= 0.0)) throw DomainError("synthetic spread must be >= 0");
    if (!(text_noise >= 0.0)) throw DomainError("synthetic text_noise must be >= 0");
}

EmbeddingDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t c = spec.classes, d = spec.dim, n = c * spec.per_class;
    auto rng = make_rng(spec.seed, {stream::kSynthetic});
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto to_unit_f32 = [d](std::vector<double> v, float* dst) {
        normalize_in_place(v);
        for (std::size_t j = 0; j < d; ++j) dst[j] = static_cast<float>(v[j]);
    };

    Matrix anchors(c, d);
    for (std::size_t k = 0; k < c; ++k) {
        for (double& v : anchors.row(k)) v = gauss(rng);
        normalize_in_place(anchors.row(k));
    }

    std::vector<float> text(c * d);
    for (std::size_t k = 0; k < c; ++k) {
        std::vector<double> v(anchors.row(k).begin(), anchors.row(k).end());
        for (double& x : v) x += spec.text_noise * gauss(rng);
        to_unit_f32(std::move(v), text.data() + k * d);
    }

    // Images are interleaved by class: image j*c + k is the j-th image of class k.
    std::vector<float> images(n * d);
    std::vector<ClassId> labels(n);
    std::vector<Split> split(n);
    for (std::size_t j = 0; j < spec.per_class; ++j) {
        for (std::size_t k = 0; k < c; ++k) {
            const std::size_t i = j * c + k;
            std::vector<double> v(anchors.row(k).begin(), anchors.row(k).end());
            for (double& x : v) x += spec.spread * gauss(rng);
            to_unit_f32(std::move(v), images.data() + i * d);
            labels[i] = static_cast<ClassId>(k);
            split[i] = (j % 5 == 4) ? Split::Test : Split::Train;
        }
    }

    std::vector<std::string> names;
    for (std::size_t k = 0; k < c; ++k) names.push_back("class_" + std::to_string(k));
    return EmbeddingDataset(n, d, std::move(names), std::move(images), std::move(labels), std::move(text),
                            std::move(split));
}

ClassId Oracle::label(Index i) const {
    if (i >= ds_->size()) throw DomainError("oracle query for index " + std::to_string(i) + " out of range");
    if (ds_->split_of(i) != Split::Train)
        throw DomainError("oracle query for test-split image " + std::to_string(i));
    return ds_->ground_truth()[i];
}

}  // namespace aepl
