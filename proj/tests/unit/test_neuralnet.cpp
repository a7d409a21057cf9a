#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dpr/neuralnet.hpp"
#include "test_util.hpp"

using namespace dpr;

namespace {

Hyperparams small_hp(std::size_t layers, std::size_t hidden, double dropout = 0.0) {
    Hyperparams hp;
    hp.embed_dim = 1;
    hp.window = 1;
    hp.layer_count = layers;
    hp.hidden_dim = hidden;
    hp.dropout_rate = dropout;
    hp.epochs = 1;
    hp.seed = 5;
    return hp;
}

std::vector<double> random_input(std::size_t n, SplitMix64& rng) {
    std::vector<double> x(n);
    for (auto& v : x) v = 2.0 * rng.uniform() - 1.0;
    return x;
}

double loss_at(const MlpModel& m, const std::vector<double>& x, std::size_t t) {
    return cross_entropy(t, predict_proba(m, x));
}

} // namespace

TEST_CASE("relu") {
    CHECK(relu(std::vector<double>{-3, 0, 2}) == std::vector<double>{0, 0, 2});
    CHECK(relu(std::vector<double>{0.5, 1, 7}) == std::vector<double>{0.5, 1, 7});
    CHECK(relu(std::vector<double>{-0.5, -1, -7}) == std::vector<double>{0, 0, 0});
}

TEST_CASE("softmax is stable and translation invariant") {
    const auto p = softmax(std::vector<double>{1000.0, 1000.0});
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
    const auto q = softmax(std::vector<double>{-1000.0, 0.0, 1000.0});
    CHECK(std::isfinite(q[0]));
    CHECK(q[2] == doctest::Approx(1.0));

    SplitMix64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        auto z = random_input(1 + rng.below(20), rng);
        for (auto& v : z) v *= 30.0;
        const auto a = softmax(z);
        for (auto& v : z) v += 123.25;
        const auto b = softmax(z);
        CHECK(std::fabs(std::accumulate(a.begin(), a.end(), 0.0) - 1.0) <= 1e-9);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) <= 1e-12);
    }
}

TEST_CASE("cross entropy") {
    CHECK(cross_entropy(std::vector<double>{1, 0}, std::vector<double>{1, 0}) == doctest::Approx(0.0).epsilon(1e-11));
    for (std::size_t k : {2u, 10u, 14u}) {
        std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
        CHECK(std::fabs(cross_entropy(0, uniform) - std::log(static_cast<double>(k))) <= 1e-12);
    }
    CHECK(cross_entropy(1, std::vector<double>{0.25, 0.75}) == doctest::Approx(0.2876820724517809));
    // Clamped: a zero probability gives -log(1e-12), not infinity.
    CHECK(cross_entropy(0, std::vector<double>{0.0, 1.0}) == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(cross_entropy(std::vector<double>{1, 0, 0}, std::vector<double>{0.5, 0.5}), UsageError);
}

TEST_CASE("forward: zero single-layer model is uniform") {
    MlpModel m(4, 5, small_hp(1, 3));
    SplitMix64 rng(0);
    const auto c = forward(m, std::vector<double>{1, -2, 3, 4}, Mode::eval, rng);
    for (double p : c.probs) CHECK(p == doctest::Approx(0.2));
}

TEST_CASE("forward: eval mode is deterministic, dimension checked") {
    const auto m = MlpModel::initialized(6, 3, small_hp(3, 8, 0.5));
    SplitMix64 r1(1), r2(99);
    const std::vector<double> x{0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
    CHECK(forward(m, x, Mode::eval, r1).probs == forward(m, x, Mode::eval, r2).probs);
    CHECK(forward(m, x, Mode::eval, r1).masks.empty());
    CHECK(forward(m, x, Mode::train, r1).masks.size() == 2);
    CHECK_THROWS_AS(predict_proba(m, std::vector<double>{1.0}), DataError);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    CHECK(argmax(std::vector<double>{0.2, 0.4, 0.4}) == 1);
    CHECK(argmax(std::vector<double>{0.5, 0.5}) == 0);
}

TEST_CASE("backward: softmax regression closed form") {
    auto m = MlpModel::initialized(3, 4, small_hp(1, 1));
    SplitMix64 rng(0);
    const std::vector<double> x{0.5, -1.0, 2.0};
    const auto c = forward(m, x, Mode::train, rng);
    const auto g = backward(m, c, 2);
    for (std::size_t r = 0; r < 4; ++r) {
        const double delta = c.probs[r] - (r == 2 ? 1.0 : 0.0);
        CHECK(g[0].bias[r] == doctest::Approx(delta));
        for (std::size_t col = 0; col < 3; ++col) CHECK(g[0].weights[r * 3 + col] == doctest::Approx(delta * x[col]));
    }

    const auto c0 = forward(m, std::vector<double>{0, 0, 0}, Mode::train, rng);
    const auto g0 = backward(m, c0, 1);
    for (double w : g0[0].weights) CHECK(w == 0.0);
    for (std::size_t r = 0; r < 4; ++r) CHECK(g0[0].bias[r] == doctest::Approx(c0.probs[r] - (r == 1 ? 1.0 : 0.0)));
}

TEST_CASE("backward: matches central differences on an L=3 model") {
    Hyperparams hp = small_hp(3, 7);
    auto m = MlpModel::initialized(5, 4, hp);
    SplitMix64 rng(31);
    for (auto& l : m.layers())
        for (auto& b : l.bias) b = 0.5 * rng.uniform() - 0.25;
    const auto x = random_input(5, rng);
    const std::size_t target = 3;
    const auto cache = forward(m, x, Mode::train, rng);
    const auto grads = backward(m, cache, target);

    const double h = 1e-5;
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        auto check_param = [&](double& p, double analytic) {
            const double saved = p;
            p = saved + h;
            const double up = loss_at(m, x, target);
            p = saved - h;
            const double down = loss_at(m, x, target);
            p = saved;
            const double numeric = (up - down) / (2 * h);
            const double rel = std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
            CHECK(rel < 1e-4);
        };
        for (std::size_t i = 0; i < m.layers()[l].weights.size(); ++i)
            check_param(m.layers()[l].weights[i], grads[l].weights[i]);
        for (std::size_t i = 0; i < m.layers()[l].bias.size(); ++i) check_param(m.layers()[l].bias[i], grads[l].bias[i]);
    }
}

TEST_CASE("backward rejects stale caches") {
    auto m = MlpModel::initialized(3, 2, small_hp(2, 4));
    ForwardCache empty;
    CHECK_THROWS_AS(backward(m, empty, 0), UsageError);
    SplitMix64 rng(0);
    const auto c = forward(m, std::vector<double>{1, 2, 3}, Mode::train, rng);
    const auto other = MlpModel::initialized(3, 2, small_hp(3, 4));
    CHECK_THROWS_AS(backward(other, c, 0), UsageError);
}

TEST_CASE("sgd_step") {
    std::vector<DenseLayer> layers(1, DenseLayer(1, 2));
    layers[0].weights = {1.0, 2.0};
    MlpModel m(layers, small_hp(1, 1));
    Gradients g{{{0.5, -1.0}, {0.0, 0.0}}};

    auto copy = m;
    sgd_step(copy, g, 0.0);
    CHECK(copy == m);

    sgd_step(m, g, 0.1);
    CHECK(m.layers()[0].weights[0] == doctest::Approx(0.95));
    CHECK(m.layers()[0].weights[1] == doctest::Approx(2.1));

    auto a = MlpModel::initialized(4, 3, small_hp(2, 5));
    auto b = a;
    auto ga = zero_gradients(a);
    SplitMix64 rng(3);
    for (auto& lg : ga)
        for (auto& v : lg.weights) v = rng.uniform();
    sgd_step(a, ga, 0.05);
    sgd_step(b, ga, 0.05);
    CHECK(a == b);

    ga[1].bias[0] = std::nan("");
    const auto before = a;
    CHECK_THROWS_AS(sgd_step(a, ga, 0.05), NumericError);
    CHECK(a == before);
}

TEST_CASE("dropout mask") {
    SplitMix64 rng(1);
    const auto ones = dropout_mask(10, 0.0, rng);
    for (double v : ones) CHECK(v == 1.0);

    SplitMix64 a(17), b(17);
    CHECK(dropout_mask(64, 0.5, a) == dropout_mask(64, 0.5, b));

    SplitMix64 mc(5);
    const auto mask = dropout_mask(100000, 0.5, mc);
    const double mean = std::accumulate(mask.begin(), mask.end(), 0.0) / mask.size();
    CHECK(std::fabs(mean - 1.0) < 0.01);
    for (double v : mask) CHECK((v == 0.0 || v == 2.0));

    CHECK_THROWS_AS(dropout_mask(3, 1.0, rng), UsageError);
    CHECK_THROWS_AS(dropout_mask(3, -0.1, rng), UsageError);
}

namespace {

// Two Gaussian-free separable clusters: class = sign of the first coordinate.
std::vector<Instance> separable_instances(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<Instance> out;
    for (std::size_t i = 0; i < n; ++i) {
        Instance inst;
        inst.label = i % 2;
        inst.feature = {(inst.label ? 1.0 : -1.0) * (0.5 + rng.uniform()), rng.uniform() - 0.5, rng.uniform() - 0.5,
                        rng.uniform() - 0.5};
        out.push_back(std::move(inst));
    }
    return out;
}

} // namespace

TEST_CASE("train: log length, overfit sanity, determinism") {
    Hyperparams hp = small_hp(2, 16);
    hp.epochs = 60;
    hp.learning_rate = 0.05;
    const auto data = separable_instances(50, 8);

    auto m = MlpModel::initialized(4, 2, hp);
    const auto log = train(m, data, hp);
    CHECK(log.size() == 60);
    CHECK(log.back().epoch == 60);
    CHECK(log.back().accuracy == 1.0);
    CHECK(log.back().mean_loss < 0.1);

    auto m2 = MlpModel::initialized(4, 2, hp);
    train(m2, data, hp);
    CHECK(serialize_model(m) == serialize_model(m2));

    hp.epochs = 3;
    auto m3 = MlpModel::initialized(4, 2, hp);
    CHECK(train(m3, data, hp).size() == 3);
}

TEST_CASE("train: input validation") {
    Hyperparams hp = small_hp(2, 4);
    auto m = MlpModel::initialized(4, 2, hp);
    CHECK_THROWS_AS(train(m, std::vector<Instance>{}, hp), DataError);
    CHECK_THROWS_AS(train(m, std::vector<Instance>{{{1.0}, 0}}, hp), DataError);
    CHECK_THROWS_AS(train(m, std::vector<Instance>{{{1, 2, 3, 4}, 7}}, hp), DataError);
    hp.dropout_rate = 1.0;
    CHECK_THROWS_AS(train(m, separable_instances(4, 1), hp), UsageError);
}

TEST_CASE("train: NaN input aborts with a numeric error") {
    Hyperparams hp = small_hp(2, 4);
    auto m = MlpModel::initialized(4, 2, hp);
    auto data = separable_instances(4, 1);
    data[2].feature[0] = std::nan("");
    CHECK_THROWS_AS(train(m, data, hp), NumericError);
}

TEST_CASE("hex floats round-trip exactly") {
    SplitMix64 rng(44);
    for (int i = 0; i < 2000; ++i) {
        const double v = (rng.uniform() - 0.5) * std::pow(2.0, static_cast<double>(rng.below(200)) - 100.0);
        REQUIRE(from_hex_float(to_hex_float(v)) == v);
    }
    CHECK(to_hex_float(1.5) == "0x1.8p+0");
    CHECK(std::signbit(from_hex_float(to_hex_float(-0.0))));
    CHECK(from_hex_float("0x1p-1074") == std::numeric_limits<double>::denorm_min());
    CHECK_THROWS_AS(from_hex_float("1.5"), DataError);
}

TEST_CASE("model files round-trip bit-exactly") {
    test::TempDir dir("model");
    Hyperparams hp = small_hp(3, 9, 0.3);
    auto m = MlpModel::initialized(6, 14, hp, "full14");
    SplitMix64 rng(2);
    train(m, std::vector<Instance>{{random_input(6, rng), 3}, {random_input(6, rng), 11}}, hp);
    save_model(m, dir / "m.json");
    const auto back = load_model(dir / "m.json");
    CHECK(back == m);
    CHECK(back.label_set_name() == "full14");
    CHECK(back.hyperparams() == hp);
    for (int i = 0; i < 100; ++i) {
        const auto x = random_input(6, rng);
        REQUIRE(predict_proba(back, x) == predict_proba(m, x));
    }
    CHECK_NOTHROW(load_model(dir / "m.json", 14));
    CHECK_THROWS_AS(load_model(dir / "m.json", 10), DataError);
}

TEST_CASE("model loading rejects bad files") {
    test::TempDir dir("badmodel");
    const auto m = MlpModel::initialized(3, 2, small_hp(2, 4));
    const auto text = serialize_model(m);

    auto edited = text;
    edited.replace(edited.find("\"in_dim\": 4"), 11, "\"in_dim\": 5");
    CHECK_THROWS_AS(deserialize_model(edited), DataError);

    auto versioned = text;
    versioned.replace(versioned.find("\"version\": 1"), 12, "\"version\": 9");
    CHECK_THROWS_AS(deserialize_model(versioned), DataError);

    CHECK_THROWS_AS(deserialize_model(text.substr(0, text.size() / 2)), DataError);
    CHECK_THROWS_AS(load_model(dir / "missing.json"), DataError);
}

TEST_CASE("hyperparameter validation") {
    Hyperparams hp;
    CHECK_NOTHROW(hp.validate());
    CHECK(hp.input_dim() == 600);
    auto bad = hp;
    bad.dropout_rate = 1.0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = hp;
    bad.layer_count = 0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = hp;
    bad.learning_rate = -1;
    CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("layer shapes follow L and hidden width") {
    const auto m = MlpModel::initialized(10, 14, small_hp(4, 6));
    REQUIRE(m.layer_count() == 4);
    CHECK(m.layers()[0].in_dim == 10);
    CHECK(m.layers()[0].out_dim == 6);
    CHECK(m.layers()[3].out_dim == 14);
    const double limit = std::sqrt(6.0 / 16.0);
    for (double w : m.layers()[0].weights) CHECK(std::fabs(w) <= limit);
}
