#include <doctest.h>

#include <cmath>
#include <limits>

#include "dpr/eval.hpp"
#include "dpr/random.hpp"
#include "dpr/synth.hpp"

#if defined(DPR_HAVE_BOOST_MATH)
#include <boost/math/distributions/students_t.hpp>
#endif

using namespace dpr;

TEST_CASE("all-negative predictor on 10% positives scores 0.90") {
    std::vector<std::size_t> gold(100, 0), pred(100, 0);
    for (std::size_t i = 0; i < 10; ++i) gold[i * 10] = 1;
    const auto r = make_report("dpi", {"not_dropped", "dropped"}, gold, pred);
    CHECK(r.accuracy == doctest::Approx(0.90));
    CHECK(r.per_class[1].recall == 0.0);
    CHECK(r.per_class[1].precision == 0.0);
    CHECK(r.per_class[1].f1 == 0.0);
    CHECK(r.per_class[0].recall == 1.0);
    CHECK(r.per_class[0].support == 90);
}

TEST_CASE("perfect predictions score 1.0 and accuracy is trace over n") {
    std::vector<std::size_t> gold{0, 1, 2, 2, 1, 0, 3};
    auto r = make_report("dpg", {"a", "b", "c", "d"}, gold, gold);
    CHECK(r.accuracy == 1.0);
    for (const auto& c : r.per_class) CHECK(c.f1 == 1.0);

    std::vector<std::size_t> pred{0, 2, 2, 1, 1, 3, 3};
    r = make_report("dpg", {"a", "b", "c", "d"}, gold, pred);
    REQUIRE(r.confusion.size() == 4);
    std::size_t trace = 0, total = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        REQUIRE(r.confusion[i].size() == 4);
        trace += r.confusion[i][i];
        for (auto v : r.confusion[i]) total += v;
    }
    CHECK(total == gold.size());
    CHECK(r.accuracy == doctest::Approx(static_cast<double>(trace) / total));
    CHECK(r.confusion[1][2] == 1);
    CHECK(r.correct == std::vector<std::uint8_t>{1, 0, 1, 0, 1, 0, 1});
    CHECK_THROWS_AS(make_report("x", {"a"}, gold, std::vector<std::size_t>{0}), UsageError);
}

TEST_CASE("uniform random predictor scores about 1/k") {
    for (std::size_t k : {10u, 14u}) {
        SplitMix64 rng(k);
        const std::size_t n = 20000;
        std::vector<std::size_t> gold(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            gold[i] = i % k;
            pred[i] = rng.below(k);
        }
        std::vector<std::string> names(k, "c");
        const auto r = make_report("dpg", names, gold, pred);
        const double p = 1.0 / static_cast<double>(k);
        CHECK(std::fabs(r.accuracy - p) < 3.0 * std::sqrt(p * (1 - p) / n));
    }
}

TEST_CASE("paired t-test matches independent reference values") {
    const std::vector<std::uint8_t> a{1, 1, 0, 1, 1}, b{0, 1, 0, 0, 1};
    const auto s = paired_significance(a, b);
    CHECK(s.df == 4);
    CHECK(s.statistic == doctest::Approx(1.632993161855452).epsilon(1e-12));
    CHECK(std::fabs(s.p_value - 0.17780780835622126) < 1e-10);
    CHECK_FALSE(s.significant);

    const std::vector<double> x{0.9, 0.7, 0.8, 0.6, 0.95}, y{0.85, 0.72, 0.7, 0.5, 0.9};
    const auto r = paired_significance(x, y);
    CHECK(r.statistic == doctest::Approx(2.54021158510848).epsilon(1e-12));
    CHECK(std::fabs(r.p_value - 0.06396653057897189) < 1e-10);
    CHECK(paired_significance(x, y, 0.1).significant);
}

TEST_CASE("paired t-test degenerate cases") {
    const std::vector<std::uint8_t> same{1, 0, 1, 1};
    const auto z = paired_significance(same, same);
    CHECK(z.statistic == 0.0);
    CHECK(z.p_value == 1.0);
    CHECK_FALSE(z.significant);

    const std::vector<std::uint8_t> ones(100, 1), zeros(100, 0);
    const auto d = paired_significance(ones, zeros);
    CHECK(std::isinf(d.statistic));
    CHECK(d.statistic > 0);
    CHECK(d.p_value == 0.0);
    CHECK(d.significant);

    CHECK_THROWS_AS(paired_significance(std::vector<double>{1.0}, std::vector<double>{0.0}), UsageError);
    CHECK_THROWS_AS(paired_significance(std::vector<double>{1, 2}, std::vector<double>{0}), UsageError);
}

TEST_CASE("student t tail and incomplete beta") {
    CHECK(student_t_two_sided_p(0.0, 5) == doctest::Approx(1.0));
    // t with 1 df is Cauchy: P(|T| >= 1) = 0.5.
    CHECK(student_t_two_sided_p(1.0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(incomplete_beta(2, 3, 0.0) == 0.0);
    CHECK(incomplete_beta(2, 3, 1.0) == 1.0);
    // I_x(2,1) = x^2
    CHECK(incomplete_beta(2, 1, 0.6) == doctest::Approx(0.36).epsilon(1e-12));

#if defined(DPR_HAVE_BOOST_MATH)
    for (double df : {1.0, 2.0, 4.0, 9.0, 30.0, 250.0, 5000.0}) {
        const boost::math::students_t dist(df);
        for (double t : {0.1, 0.7, 1.5, 2.2, 4.0, 9.0}) {
            const double expected = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
            CHECK(student_t_two_sided_p(t, df) == doctest::Approx(expected).epsilon(1e-9));
            CHECK(student_t_two_sided_p(-t, df) == doctest::Approx(expected).epsilon(1e-9));
        }
    }
#endif
}

TEST_CASE("reports serialise") {
    std::vector<std::size_t> gold{0, 1, 1}, pred{0, 1, 0};
    const auto r = make_report("dpi", {"not_dropped", "dropped"}, gold, pred, "gold positions");
    const auto json = report_to_json(r);
    CHECK(json.find("\"accuracy\"") != std::string::npos);
    CHECK(json.find("\"confusion\"") != std::string::npos);
    const auto text = report_to_text(r);
    CHECK(text.find("dropped") != std::string::npos);
    CHECK(text.find("0.6667") != std::string::npos);
}
