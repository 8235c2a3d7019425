#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "aepl/data.hpp"
#include "aepl/error.hpp"
#include "support.hpp"

using namespace aepl;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("aepl_test_" + name); }

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Independent zero-shot classifier: argmax of raw dot products with the text rows.
double zeroshot_accuracy(const EmbeddingDataset& ds, Split split) {
    std::size_t total = 0, correct = 0;
    for (Index i : ds.indices(split)) {
        ClassId best = 0;
        double best_score = -1e300;
        for (ClassId k = 0; k < ds.num_classes(); ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < ds.dim(); ++j) s += double(ds.image(i)[j]) * double(ds.text(k)[j]);
            if (s > best_score) best_score = s, best = k;
        }
        ++total;
        correct += best == ds.ground_truth()[i];
    }
    return double(correct) / double(total);
}

FormatError::Kind decode_error_kind(const std::vector<std::uint8_t>& bytes, std::uint64_t* offset = nullptr) {
    try {
        decode_dataset(bytes);
    } catch (const FormatError& e) {
        if (offset) *offset = e.offset();
        return e.kind();
    }
    FAIL("expected a format error");
    return FormatError::Kind::InvalidContent;
}

}  // namespace

TEST_CASE("save then load is the identity, bit for bit") {
    const auto ds = generate_synthetic({3, 5, 7, 0.2, 0.1, 11});
    const auto path = temp_path("roundtrip.aepl");
    save_dataset(ds, path);
    const auto back = load_dataset(path);
    CHECK(back == ds);
    CHECK(std::memcmp(back.image_embeds().data(), ds.image_embeds().data(), 4 * ds.image_embeds().size()) == 0);
    fs::remove(path);
}

TEST_CASE("writing the same dataset twice gives identical bytes") {
    const auto ds = generate_synthetic({4, 6, 5, 0.1, 0.1, 3});
    const auto a = temp_path("det_a.aepl"), b = temp_path("det_b.aepl");
    save_dataset(ds, a);
    save_dataset(ds, b);
    CHECK(read_bytes(a) == read_bytes(b));
    fs::remove(a);
    fs::remove(b);
}

TEST_CASE("binary layout") {
    const auto ds = generate_synthetic({2, 3, 5, 0.1, 0.1, 1});
    const auto bytes = encode_dataset(ds);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "AEPL");
    CHECK(bytes[4] == 1);
    const std::uint32_t h = bytes[8] | bytes[9] << 8 | bytes[10] << 16 | bytes[11] << 24;
    const std::string header(bytes.begin() + 12, bytes.begin() + 12 + h);
    CHECK(header.rfind("{\"n\":10,\"d\":3,\"c\":2,\"class_names\":", 0) == 0);
    CHECK(bytes.size() == 12 + h + 4 * (10 * 3 + 10 + 2 * 3));
}

TEST_CASE("format errors") {
    const auto ds = generate_synthetic({2, 3, 5, 0.1, 0.1, 1});
    const auto good = encode_dataset(ds);
    std::uint64_t offset = 99;

    SUBCASE("bad magic") {
        auto bytes = good;
        std::memcpy(bytes.data(), "XXXX", 4);
        CHECK(decode_error_kind(bytes, &offset) == FormatError::Kind::BadMagic);
        CHECK(offset == 0);
    }
    SUBCASE("version mismatch") {
        auto bytes = good;
        bytes[4] = 2;
        CHECK(decode_error_kind(bytes, &offset) == FormatError::Kind::VersionMismatch);
        CHECK(offset == 4);
    }
    SUBCASE("n declared 3 with only 2 rows") {
        const auto small = testing::make_dataset({{1, 0}, {0, 1}, {1, 1}}, {0, 1, 0}, 2);
        auto bytes = encode_dataset(small);
        // Drop the last image row: the payload is now 8 bytes short.
        const std::uint32_t h = bytes[8] | bytes[9] << 8;
        bytes.erase(bytes.begin() + 12 + h + 2 * 8, bytes.begin() + 12 + h + 3 * 8);
        CHECK(decode_error_kind(bytes, &offset) == FormatError::Kind::Truncated);
        CHECK(offset == bytes.size());
    }
    SUBCASE("trailing bytes") {
        auto bytes = good;
        bytes.push_back(0);
        CHECK(decode_error_kind(bytes, &offset) == FormatError::Kind::TrailingBytes);
        CHECK(offset == good.size());
    }
    SUBCASE("NaN embedding") {
        auto bytes = good;
        const std::uint32_t h = bytes[8] | bytes[9] << 8;
        const float nan = std::numeric_limits<float>::quiet_NaN();
        std::memcpy(bytes.data() + 12 + h + 4, &nan, 4);
        CHECK(decode_error_kind(bytes, &offset) == FormatError::Kind::NonFinite);
        CHECK(offset == 12 + h + 4);
    }
    SUBCASE("broken JSON header") {
        auto bytes = good;
        bytes[12] = '[';
        CHECK(decode_error_kind(bytes, &offset) == FormatError::Kind::BadHeader);
        CHECK(offset == 12);
    }
    SUBCASE("label out of range") {
        auto bytes = good;
        const std::uint32_t h = bytes[8] | bytes[9] << 8;
        bytes[12 + h + 4 * 30] = 7;
        CHECK(decode_error_kind(bytes, &offset) == FormatError::Kind::InvalidContent);
    }
}

TEST_CASE("I/O errors") {
    const auto ds = generate_synthetic({2, 3, 5, 0.1, 0.1, 1});
    CHECK_THROWS_AS(save_dataset(ds, "/nonexistent-dir-aepl/x.aepl"), IoError);
    CHECK_THROWS_AS(load_dataset("/nonexistent-dir-aepl/x.aepl"), IoError);
}

TEST_CASE("zero-noise synthetic collapses onto the class anchors") {
    const auto ds = generate_synthetic({2, 4, 10, 0.0, 0.0, 7});
    for (Index i = 0; i < ds.size(); ++i) {
        const auto img = ds.image(i);
        const auto txt = ds.text(ds.ground_truth()[i]);
        CHECK(std::equal(img.begin(), img.end(), txt.begin()));
    }
    CHECK(zeroshot_accuracy(ds, Split::Test) == 1.0);
    CHECK(zeroshot_accuracy(ds, Split::Train) == 1.0);
}

TEST_CASE("synthetic generation is a pure function of the spec") {
    const SyntheticSpec spec{5, 8, 20, 0.1, 0.05, 42};
    CHECK(generate_synthetic(spec) == generate_synthetic(spec));
    auto other = spec;
    other.seed = 43;
    CHECK_FALSE(generate_synthetic(other) == generate_synthetic(spec));
}

TEST_CASE("moderate-noise synthetic is easy for zero-shot inference") {
    const auto ds = generate_synthetic({10, 16, 100, 0.05, 0.05, 1});
    CHECK(zeroshot_accuracy(ds, Split::Test) > 0.95);
}

TEST_CASE("synthetic split is 80/20 per class and rows are unit norm") {
    const auto ds = generate_synthetic({3, 6, 10, 0.3, 0.3, 5});
    std::vector<int> test_per_class(3, 0);
    for (Index i : ds.indices(Split::Test)) ++test_per_class[ds.ground_truth()[i]];
    CHECK(test_per_class == std::vector<int>{2, 2, 2});
    for (Index i = 0; i < ds.size(); ++i) CHECK(std::abs(norm(testing::widen(ds.image(i))) - 1.0) < 1e-5);
}

TEST_CASE("synthetic spec validation") {
    CHECK_THROWS_AS(generate_synthetic({1, 4, 10, 0.1, 0.1, 1}), DomainError);
    CHECK_THROWS_AS(generate_synthetic({2, 1, 10, 0.1, 0.1, 1}), DomainError);
    CHECK_THROWS_AS(generate_synthetic({2, 4, 0, 0.1, 0.1, 1}), DomainError);
    CHECK_THROWS_AS(generate_synthetic({2, 4, 10, -0.1, 0.1, 1}), DomainError);
}

TEST_CASE("oracle answers train queries only") {
    const auto ds = generate_synthetic({3, 4, 5, 0.1, 0.1, 2});
    const Oracle oracle(ds);
    for (Index i : ds.indices(Split::Train)) {
        CHECK(oracle.label(i) == ds.ground_truth()[i]);
        CHECK(oracle.label(i) == oracle.label(i));
    }
    for (Index i : ds.indices(Split::Test)) CHECK_THROWS_AS(oracle.label(i), DomainError);
    CHECK_THROWS_AS(oracle.label(ds.size()), DomainError);
}

TEST_CASE("dataset constructor enforces invariants") {
    CHECK_THROWS_AS(EmbeddingDataset(1, 2, {"a"}, {2.0f, 0.0f}, {0}, {1.0f, 0.0f}, {Split::Train}), DomainError);
    CHECK_THROWS_AS(EmbeddingDataset(1, 2, {"a"}, {1.0f, 0.0f}, {1}, {1.0f, 0.0f}, {Split::Train}), DomainError);
    CHECK_THROWS_AS(EmbeddingDataset(1, 2, {"a", "b"}, {1.0f, 0.0f}, {0}, {1.0f, 0.0f}, {Split::Train}), DomainError);
}
