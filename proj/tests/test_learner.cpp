#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <vector>

#include "cpsw/datasets.hpp"
#include "cpsw/learner.hpp"

using namespace cpsw;
using learner::Batch;
using learner::LossConfig;
using learner::ModelParams;

namespace {

ModelParams zero_model(int input, int hidden, int classes) {
    ModelParams p;
    p.input_dim = input;
    p.hidden_dim = hidden;
    p.num_classes = classes;
    p.w1.assign(static_cast<std::size_t>(hidden) * input, 0.0);
    p.b1.assign(hidden, 0.0);
    p.w2.assign(static_cast<std::size_t>(classes) * hidden, 0.0);
    p.b2.assign(classes, 0.0);
    return p;
}

// Hand-committed 2-2-2 configuration (see frozen values below).
ModelParams fixture_model() {
    ModelParams p = zero_model(2, 2, 2);
    p.w1 = {0.5, -0.25, 0.1, 0.3};
    p.b1 = {0.05, -0.1};
    p.w2 = {1.0, -0.5, 0.25, 0.75};
    p.b2 = {0.01, -0.02};
    return p;
}

ModelParams random_model(int input, int hidden, int classes, rng::Rng& rng) {
    return ModelParams::init(input, hidden, classes, rng);
}

Batch make_batch(int input_dim, const std::vector<const double*>& xs,
                 std::vector<int> labels) {
    Batch b;
    b.input_dim = input_dim;
    b.inputs = xs;
    b.labels = std::move(labels);
    return b;
}

double fd_gradient(const ModelParams& p, const Batch& batch, double alpha,
                   double beta, std::size_t coord, double h = 1e-5) {
    ModelParams plus = p, minus = p;
    std::vector<double> flat = p.flatten();
    flat[coord] += h;
    plus.unflatten(flat);
    flat[coord] -= 2 * h;
    minus.unflatten(flat);
    const double fp = learner::total_loss(plus, batch, alpha, beta).total;
    const double fm = learner::total_loss(minus, batch, alpha, beta).total;
    return (fp - fm) / (2 * h);
}

} // namespace

TEST_CASE("zero parameters give zero logits") {
    const ModelParams p = zero_model(4, 3, 2);
    const std::vector<double> x = {0.3, -0.2, 0.9, 0.5};
    for (double z : learner::forward(p, x.data())) CHECK(z == 0.0);
}

TEST_CASE("single-unit model scales its input") {
    ModelParams p = zero_model(1, 1, 2);
    p.w1 = {1.0};
    p.w2 = {2.0, 0.0}; // logit0 = 2*tanh(x), logit1 = 0
    const double x = 0.4;
    const auto logits = learner::forward(p, &x);
    CHECK(logits[0] == doctest::Approx(2.0 * std::tanh(0.4)).epsilon(1e-12));
    CHECK(logits[1] == 0.0);
}

TEST_CASE("fixture forward pass matches committed arithmetic") {
    const ModelParams p = fixture_model();
    const std::vector<double> x = {0.2, 0.4};
    const auto logits = learner::forward(p, x.data());
    CHECK(logits[0] ==
          doctest::Approx(0.039969034802298187).epsilon(1e-12));
    CHECK(logits[1] ==
          doctest::Approx(0.022473603972842673).epsilon(1e-12));
}

TEST_CASE("erm loss of uniform logits is ln(m)") {
    const ModelParams p = zero_model(3, 2, 2);
    const std::vector<double> x = {0.1, 0.2, 0.3};
    const Batch b = make_batch(3, {x.data()}, {1});
    CHECK(learner::loss_erm(p, b) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("confident correct predictions drive the loss toward zero") {
    ModelParams p = zero_model(1, 1, 2);
    p.w1 = {0.0};
    p.b1 = {5.0};        // hidden ~ tanh(5) ~ 1
    p.w2 = {4.0, -4.0};  // margin ~ 8
    const double x = 0.0;
    const Batch b = make_batch(1, {&x}, {0});
    CHECK(learner::loss_erm(p, b) < 1e-3);
}

TEST_CASE("fixture two-sample erm value") {
    // Logits engineered through the head bias so the per-sample values are
    // the committed cross-entropies.
    ModelParams p = zero_model(1, 1, 2);
    SUBCASE("sample A: logits (0.3, -0.2), label 0") {
        p.b2 = {0.3, -0.2};
        const double x = 0.0;
        const Batch b = make_batch(1, {&x}, {0});
        CHECK(learner::loss_erm(p, b) ==
              doctest::Approx(0.47407698418010674).epsilon(1e-12));
    }
    SUBCASE("mean over both samples") {
        // Sample B has logits (-0.1, 0.4) label 1, same cross entropy by
        // symmetry; the two-sample mean was committed from the arithmetic
        // oracle.
        p.b2 = {0.25, -0.25};
        const double x = 0.0;
        const Batch b = make_batch(1, {&x, &x}, {0, 1});
        const double la = learner::loss_erm(
            p, make_batch(1, {&x}, {0}));
        const double lb = learner::loss_erm(
            p, make_batch(1, {&x}, {1}));
        CHECK(learner::loss_erm(p, b) ==
              doctest::Approx((la + lb) / 2).epsilon(1e-12));
    }
}

TEST_CASE("psw loss reduces to erm when every weight is one") {
    rng::Rng rng(3);
    const ModelParams p = random_model(6, 4, 2, rng);
    std::vector<double> xs(12);
    for (auto& v : xs) v = rng.uniform(-1, 1);
    Batch b = make_batch(6, {xs.data(), xs.data() + 6}, {0, 1});
    b.weights = {1.0, 1.0};
    CHECK(learner::loss_psw(p, b) == learner::loss_erm(p, b)); // bit-exact
}

TEST_CASE("psw loss scales by the inverse propensity") {
    rng::Rng rng(4);
    const ModelParams p = random_model(5, 3, 2, rng);
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(-1, 1);
    Batch b = make_batch(5, {x.data()}, {1});
    b.weights = {2.0}; // pi = 0.5
    CHECK(learner::loss_psw(p, b) ==
          doctest::Approx(2.0 * learner::loss_erm(p, b)).epsilon(1e-12));

    Batch missing = make_batch(5, {x.data()}, {1});
    try {
        learner::loss_psw(p, missing);
        FAIL("expected missing_weights");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::missing_weights);
    }
}

TEST_CASE("ps loss equals erm when twins coincide with originals") {
    rng::Rng rng(5);
    const ModelParams p = random_model(4, 3, 2, rng);
    std::vector<double> xs(8);
    for (auto& v : xs) v = rng.uniform(-1, 1);
    Batch b = make_batch(4, {xs.data(), xs.data() + 4}, {0, 1});
    b.twins = b.inputs;
    CHECK(learner::loss_ps(p, b) == learner::loss_erm(p, b)); // bit-exact

    Batch missing = make_batch(4, {xs.data()}, {0});
    try {
        learner::loss_ps(p, missing);
        FAIL("expected missing_twins");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::missing_twins);
    }
}

TEST_CASE("ps loss averages originals and twins with the half normalizer") {
    ModelParams p = zero_model(1, 1, 2);
    p.w1 = {1.0};
    p.w2 = {1.0, -1.0};
    const double a = 0.3, b_ = -0.8, c = 1.2, d = 0.05;
    Batch b = make_batch(1, {&a, &b_}, {0, 1});
    b.twins = {&c, &d};
    const double la = learner::loss_erm(p, make_batch(1, {&a}, {0}));
    const double lb = learner::loss_erm(p, make_batch(1, {&b_}, {1}));
    const double lc = learner::loss_erm(p, make_batch(1, {&c}, {0}));
    const double ld = learner::loss_erm(p, make_batch(1, {&d}, {1}));
    CHECK(learner::loss_ps(p, b) ==
          doctest::Approx((la + lb + lc + ld) / 4).epsilon(1e-12));
}

TEST_CASE("total loss composition identity") {
    rng::Rng rng(6);
    const ModelParams p = random_model(6, 4, 3, rng);
    std::vector<double> xs(18);
    for (auto& v : xs) v = rng.uniform(-1, 1);
    Batch b = make_batch(6, {xs.data(), xs.data() + 6, xs.data() + 12},
                         {0, 1, 2});
    b.weights = {1.5, 0.9, 3.0};
    b.twins = {xs.data() + 6, xs.data() + 12, xs.data()};
    for (const auto& [alpha, beta] :
         std::vector<std::pair<double, double>>{{0.0, 0.0},
                                                {0.1, 0.1},
                                                {0.5, 0.25},
                                                {1.0, 1.0}}) {
        const auto r = learner::total_loss(p, b, alpha, beta);
        CHECK(std::abs(r.total - (r.base + alpha * r.psw + beta * r.ps)) <=
              1e-9);
        if (alpha == 0.0 && beta == 0.0) CHECK(r.total == r.base);
    }
}

TEST_CASE("per-sample loss stays below omega even for huge logits") {
    ModelParams p = zero_model(1, 1, 2);
    p.w1 = {100.0};
    p.b1 = {10.0};
    p.w2 = {500.0, -500.0};
    const double x = 1.0;
    const LossConfig cfg{10.0};
    const Batch wrong = make_batch(1, {&x}, {1}); // mispredicted by far
    CHECK(learner::loss_erm(p, wrong, cfg) <= 10.0);
    CHECK(learner::loss_erm(p, wrong, cfg) > 8.0);
}

TEST_CASE("gradient of the head bias vanishes at the symmetric point") {
    const ModelParams p = zero_model(2, 2, 2);
    std::vector<double> xs = {0.4, -0.3, -0.4, 0.3};
    Batch b = make_batch(2, {xs.data(), xs.data() + 2}, {0, 1});
    const auto g = learner::backward(p, b, 0.0, 0.0);
    for (double v : g.b2) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("analytic gradients match central finite differences") {
    rng::Rng rng(7);
    int checked = 0;
    for (int rep = 0; rep < 24; ++rep) {
        const int input = 2 + static_cast<int>(rng.below(4));
        const int hidden = 1 + static_cast<int>(rng.below(3));
        const int classes = 2 + static_cast<int>(rng.below(2));
        const ModelParams p = random_model(input, hidden, classes, rng);
        const int n = 1 + static_cast<int>(rng.below(3));
        std::vector<double> xs(static_cast<std::size_t>(n) * input);
        std::vector<double> twins(xs.size());
        for (auto& v : xs) v = rng.uniform(-1, 1);
        for (auto& v : twins) v = rng.uniform(-1, 1);
        Batch b;
        b.input_dim = input;
        for (int i = 0; i < n; ++i) {
            b.inputs.push_back(xs.data() + static_cast<std::size_t>(i) * input);
            b.twins.push_back(twins.data() +
                              static_cast<std::size_t>(i) * input);
            b.labels.push_back(static_cast<int>(rng.below(classes)));
            b.weights.push_back(rng.uniform(0.5, 4.0));
        }
        const double alpha = rep % 3 == 0 ? 0.0 : rng.uniform(0.0, 1.0);
        const double beta = rep % 4 == 0 ? 0.0 : rng.uniform(0.0, 1.0);
        const auto grad = learner::backward(p, b, alpha, beta).flatten();
        // Probe a handful of coordinates per configuration.
        for (int probe = 0; probe < 6; ++probe) {
            const std::size_t coord = rng.below(grad.size());
            const double fd = fd_gradient(p, b, alpha, beta, coord);
            const double scale =
                std::max({std::abs(fd), std::abs(grad[coord]), 1e-6});
            CHECK(std::abs(grad[coord] - fd) / scale < 1e-4);
            ++checked;
        }
    }
    CHECK(checked >= 20 * 6);
}

TEST_CASE("psw weight scales a sample's gradient contribution linearly") {
    rng::Rng rng(8);
    const ModelParams p = random_model(3, 2, 2, rng);
    std::vector<double> x = {0.2, -0.7, 0.4};
    auto grad_with_weight = [&](double w) {
        Batch b = make_batch(3, {x.data()}, {1});
        b.weights = {w};
        return learner::backward(p, b, 1.0, 0.0).flatten();
    };
    const auto g0 = grad_with_weight(1.0);
    const auto g1 = grad_with_weight(2.0);
    const auto g2 = grad_with_weight(3.0);
    for (std::size_t i = 0; i < g0.size(); ++i)
        CHECK(g2[i] - g1[i] == doctest::Approx(g1[i] - g0[i]).epsilon(1e-9));
}

TEST_CASE("training on color-free glyphs beats the majority baseline") {
    data::GenSpec spec;
    spec.biases = {0.5};
    spec.noise = 0.0;
    spec.per_domain = 400;
    spec.seed = 31;
    const auto domains = data::generate(spec);

    learner::TrainDomain td;
    td.name = domains[0].name;
    td.input_dim = domains[0].input_dim();
    td.height = domains[0].height;
    td.width = domains[0].width;
    td.channels = domains[0].channels;
    td.images = domains[0].images.data();
    td.labels = domains[0].labels.data();
    td.clean_labels = domains[0].clean_labels.data();
    td.count = domains[0].count();

    learner::TrainConfig cfg;
    cfg.seed = 1;
    cfg.epochs = 5;
    cfg.hidden_dim = 16;
    cfg.batch_size = 64;
    const auto result = learner::train(cfg, {td}, {});
    const double acc = learner::evaluate_accuracy(result.params, td, false);
    double majority = 0.0;
    for (std::size_t i = 0; i < td.count; ++i) majority += td.labels[i];
    majority = std::max(majority / td.count, 1.0 - majority / td.count);
    CHECK(acc > majority + 0.05);
}

TEST_CASE("training with the full objective is deterministic per seed") {
    data::GenSpec spec;
    spec.biases = {0.2, 0.8};
    spec.noise = 0.1;
    spec.per_domain = 120;
    spec.seed = 77;
    const auto domains = data::generate(spec);
    auto as_train = [&](const data::DomainDataset& d) {
        learner::TrainDomain td;
        td.name = d.name;
        td.input_dim = d.input_dim();
        td.height = d.height;
        td.width = d.width;
        td.channels = d.channels;
        td.images = d.images.data();
        td.labels = d.labels.data();
        td.clean_labels = d.clean_labels.data();
        td.count = d.count();
        return td;
    };
    learner::TrainConfig cfg;
    cfg.seed = 5;
    cfg.epochs = 2;
    cfg.hidden_dim = 8;
    cfg.batch_size = 32;
    cfg.alpha = 0.5;
    cfg.beta = 0.5;
    const auto a =
        learner::train(cfg, {as_train(domains[0])}, {as_train(domains[1])});
    const auto b =
        learner::train(cfg, {as_train(domains[0])}, {as_train(domains[1])});
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].accuracy == b.history[i].accuracy);
        CHECK(a.history[i].total == b.history[i].total);
    }
    CHECK(a.params.w1 == b.params.w1);
    CHECK_FALSE(a.case_study.empty());
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    rng::Rng rng(12);
    const ModelParams p = random_model(7, 5, 3, rng);
    const std::string path = "/tmp/cpsw_test_ckpt.bin";
    learner::save_checkpoint(p, path);
    const ModelParams q = learner::load_checkpoint(path);
    CHECK(q.w1 == p.w1);
    CHECK(q.b1 == p.b1);
    CHECK(q.w2 == p.w2);
    CHECK(q.b2 == p.b2);
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("CPSWNET1", f);
        std::fclose(f);
    }
    try {
        learner::load_checkpoint(path);
        FAIL("expected truncated_file");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::truncated_file);
    }
    std::remove(path.c_str());
}
