#include <doctest.h>

#include <cmath>
#include <random>

#include "aepl/error.hpp"
#include "aepl/promptmodel.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace aepl;
using testing::random_unit;

namespace {

PromptHead two_class_head(double tau) {
    Matrix w(2, 2);
    w(0, 0) = 1.0;
    w(1, 1) = 1.0;
    return {w, tau};
}

}  // namespace

TEST_CASE("two-logit softmax") {
    const auto head = two_class_head(1.0);
    const std::vector<double> x{1.0, 0.0};
    const auto p = class_probs(head, x);
    CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(0.731059).epsilon(1e-6));

    const auto pred = pseudo_label(head, x);
    CHECK(pred.label == 0);
    CHECK(pred.confidence == doctest::Approx(0.731059).epsilon(1e-6));
}

TEST_CASE("saturation at tau = 0.01") {
    const auto p = class_probs(two_class_head(0.01), std::vector<double>{1.0, 0.0});
    CHECK(p[0] >= 1.0 - 1e-30);
    CHECK(p[1] == doctest::Approx(std::exp(-100.0)).epsilon(1e-9));
}

TEST_CASE("identical rows give the uniform distribution and tie to class 0") {
    std::mt19937_64 rng(3);
    for (double tau : {0.01, 1.0, 7.0}) {
        Matrix w(4, 3);
        const auto row = random_unit(rng, 3);
        for (std::size_t k = 0; k < 4; ++k) std::copy(row.begin(), row.end(), w.row(k).begin());
        const PromptHead head{w, tau};
        const auto x = random_unit(rng, 3);
        for (double p : class_probs(head, x)) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
        const auto pred = pseudo_label(head, x);
        CHECK(pred.label == 0);
        CHECK(pred.confidence == doctest::Approx(0.25));
    }
}

TEST_CASE("aligned input picks its class") {
    Matrix w(2, 3);
    w(0, 0) = 1.0;
    w(1, 1) = 3.0;
    const auto pred = pseudo_label({w, 0.5}, std::vector<double>{0.0, 1.0, 0.0});
    CHECK(pred.label == 1);
}

TEST_CASE("degenerate inputs") {
    Matrix w(2, 2);
    w(0, 0) = 1.0;
    CHECK_THROWS_AS(class_probs({w, 1.0}, std::vector<double>{1.0, 0.0}), DegenerateModelError);
    CHECK_THROWS_AS(class_probs(two_class_head(1.0), std::vector<double>{2.0, 0.0}), DomainError);
}

TEST_CASE("probabilities are a distribution and invariant to per-row rescaling") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t c = 2 + trial % 7, d = 2 + trial % 5;
        PromptHead head{testing::random_matrix(rng, c, d), trial % 2 ? 0.01 : 0.7};
        const auto x = random_unit(rng, d);
        const auto p = class_probs(head, x);
        double s = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            s += v;
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);

        auto scaled = head;
        const std::size_t k = trial % c;
        const double factor = scale(rng);
        for (double& v : scaled.weights.row(k)) v *= factor;
        CHECK(pseudo_label(scaled, x).label == pseudo_label(head, x).label);
    }
}

TEST_CASE("head initialization") {
    std::mt19937_64 rng(5);
    const Matrix text = testing::random_matrix(rng, 3, 4);
    TrainConfig cfg;
    cfg.seed = 9;

    SUBCASE("init_std = 0 copies the zero-shot embeddings") {
        cfg.init_std = 0.0;
        CHECK(init_head(text, cfg, 1, 0.01).weights == text);
    }
    SUBCASE("deterministic per (seed, round)") {
        CHECK(init_head(text, cfg, 2, 0.01) == init_head(text, cfg, 2, 0.01));
        CHECK_FALSE(init_head(text, cfg, 2, 0.01) == init_head(text, cfg, 3, 0.01));
    }
    SUBCASE("perturbation norm matches init_std * sqrt(d)") {
        const Matrix zeros(100, 512);
        const auto head = init_head(zeros, cfg, 1, 0.01);
        double mean_norm = 0.0;
        for (std::size_t k = 0; k < 100; ++k) mean_norm += norm(head.weights.row(k)) / 100.0;
        const double expected = 0.02 * std::sqrt(512.0);  // ~0.4525
        CHECK(std::abs(mean_norm - expected) <= 0.1 * expected);
    }
    SUBCASE("round 0 is rejected") { CHECK_THROWS_AS(init_head(text, cfg, 0, 0.01), DomainError); }
}

TEST_CASE("loss of a uniform prediction is ln c") {
    const auto ds = testing::make_dataset({{1, 0, 0}, {0, 1, 0}}, {0, 1}, 3);
    Matrix w(3, 3, 0.0);
    for (std::size_t k = 0; k < 3; ++k) w(k, 2) = 1.0;  // every row orthogonal to both images
    const LabeledPool pool({{0, 2, false}});
    const auto lg = loss_and_grad({w, 0.3}, ds, pool);
    CHECK(lg.loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> tau_dist(0.1, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t c = 2 + trial % 4, d = 3 + trial % 3, m = 6;
        std::vector<std::vector<double>> rows;
        std::vector<ClassId> labels;
        for (std::size_t i = 0; i < m; ++i) {
            rows.push_back(random_unit(rng, d));
            labels.push_back(ClassId(i % c));
        }
        const auto ds = testing::make_dataset(rows, labels, c);
        LabeledPool pool;
        for (std::size_t i = 0; i < m; ++i) pool.add({i, labels[(i + trial) % m], i % 2 == 0});
        PromptHead head{testing::random_matrix(rng, c, d), tau_dist(rng)};

        const auto analytic = loss_and_grad(head, ds, pool);
        CHECK(analytic.loss == doctest::Approx(oracle::cross_entropy_loss(head.weights, head.tau, ds, pool)).epsilon(1e-12));

        const double h = 1e-3;
        double max_diff = 0.0, max_fd = 0.0;
        for (std::size_t i = 0; i < head.weights.data().size(); ++i) {
            auto plus = head.weights, minus = head.weights;
            plus.data()[i] += h;
            minus.data()[i] -= h;
            const double fd =
                (oracle::cross_entropy_loss(plus, head.tau, ds, pool) - oracle::cross_entropy_loss(minus, head.tau, ds, pool)) / (2 * h);
            max_diff = std::max(max_diff, std::abs(fd - analytic.grad.data()[i]));
            max_fd = std::max(max_fd, std::abs(fd));
        }
        worst = std::max(worst, max_diff / max_fd);
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("duplicating every record leaves loss and gradient unchanged") {
    std::mt19937_64 rng(8);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 8; ++i) rows.push_back(random_unit(rng, 4));
    const auto ds = testing::make_dataset(rows, {0, 1, 2, 0, 1, 2, 0, 1}, 3);
    const PromptHead head{testing::random_matrix(rng, 3, 4), 0.2};
    const LabeledPool once({{0, 0, false}, {1, 1, false}, {2, 2, true}, {3, 1, false}});
    const auto a = loss_and_grad(head, ds, once);
    // Same records again through distinct dataset rows carrying identical embeddings.
    const auto doubled_ds = testing::make_dataset({rows[0], rows[1], rows[2], rows[3], rows[0], rows[1], rows[2], rows[3]},
                                                  {0, 1, 2, 0, 0, 1, 2, 0}, 3);
    const LabeledPool twice({{0, 0, false}, {1, 1, false}, {2, 2, true}, {3, 1, false},
                             {4, 0, false}, {5, 1, false}, {6, 2, true}, {7, 1, false}});
    const auto b = loss_and_grad(head, doubled_ds, twice);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < a.grad.data().size(); ++i)
        CHECK(a.grad.data()[i] == doctest::Approx(b.grad.data()[i]).epsilon(1e-10));
}

TEST_CASE("empty pool and duplicate indices are rejected") {
    const auto ds = testing::make_dataset({{1, 0}}, {0}, 2);
    CHECK_THROWS_AS(loss_and_grad(two_class_head(1.0), ds, LabeledPool{}), DomainError);
    LabeledPool pool({{0, 0, false}});
    CHECK_THROWS_AS(pool.add({0, 1, true}), ConsistencyError);
}

TEST_CASE("training") {
    const auto ds = generate_synthetic({2, 4, 10, 0.0, 0.0, 7});
    LabeledPool pool;
    for (Index i : ds.indices(Split::Train)) pool.add({i, ds.ground_truth()[i], false});
    TrainConfig cfg;
    cfg.seed = 3;
    const auto start = init_head(ds.text_matrix(), cfg, 1, 0.01);

    SUBCASE("separable pool is fit perfectly") {
        const auto trained = train(start, ds, pool, cfg);
        CHECK(evaluate(trained, ds, Split::Train) == 1.0);
    }
    SUBCASE("loss does not increase") {
        const auto noisy = generate_synthetic({4, 6, 10, 0.4, 0.4, 2});
        LabeledPool p;
        for (Index i : noisy.indices(Split::Train)) p.add({i, noisy.ground_truth()[i], false});
        const auto h0 = init_head(noisy.text_matrix(), cfg, 1, 0.01);
        const auto h1 = train(h0, noisy, p, cfg);
        CHECK(loss_and_grad(h1, noisy, p).loss <= loss_and_grad(h0, noisy, p).loss);
    }
    SUBCASE("deterministic, including mini-batches") {
        CHECK(train(start, ds, pool, cfg) == train(start, ds, pool, cfg));
        auto mb = cfg;
        mb.batch = 3;
        mb.epochs = 5;
        CHECK(train(start, ds, pool, mb) == train(start, ds, pool, mb));
    }
    SUBCASE("divergence is reported") {
        auto wild = cfg;
        wild.lr0 = 1e308;
        CHECK_THROWS_AS(train(start, ds, pool, wild), TrainingDivergedError);
    }
    SUBCASE("config validation") {
        auto bad = cfg;
        bad.epochs = 0;
        CHECK_THROWS_AS(train(start, ds, pool, bad), DomainError);
        CHECK_THROWS_AS(train(start, ds, LabeledPool{}, cfg), DomainError);
    }
}

TEST_CASE("evaluation") {
    SUBCASE("zero-noise data with the zero-shot head") {
        const auto ds = generate_synthetic({5, 8, 10, 0.0, 0.0, 4});
        TrainConfig cfg;
        cfg.init_std = 0.0;
        CHECK(evaluate(init_head(ds.text_matrix(), cfg, 1, 0.01), ds, Split::Test) == 1.0);
    }
    SUBCASE("identical rows send everything to class 0") {
        const auto ds = generate_synthetic({4, 8, 500, 0.3, 0.3, 6});  // 400 test images, balanced
        Matrix w(4, 8, 0.0);
        for (std::size_t k = 0; k < 4; ++k) w(k, 0) = 1.0;
        const double acc = evaluate({w, 0.01}, ds, Split::Test);
        CHECK(acc >= 0.15);
        CHECK(acc <= 0.35);
    }
    SUBCASE("a common positive scale changes no prediction") {
        const auto ds = generate_synthetic({6, 8, 20, 0.5, 0.5, 1});
        std::mt19937_64 rng(1);
        PromptHead head{testing::random_matrix(rng, 6, 8), 0.05};
        auto scaled = head;
        for (double& v : scaled.weights.data()) v *= 17.5;
        const HeadScorer a(head), b(scaled);
        for (Index i = 0; i < ds.size(); ++i)
            CHECK(argmax_prediction(a.probs(ds.image(i))).label == argmax_prediction(b.probs(ds.image(i))).label);
        CHECK(evaluate(head, ds, Split::Test) == evaluate(scaled, ds, Split::Test));
    }
    SUBCASE("empty split") {
        const auto ds = testing::make_dataset({{1, 0}}, {0}, 2);
        CHECK_THROWS_AS(evaluate(two_class_head(1.0), ds, Split::Test), DomainError);
    }
}
