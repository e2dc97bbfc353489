#include "doctest.h"

#include <cmath>
#include <vector>

#include "cpsw/bounds.hpp"

using namespace cpsw;
using bounds::BoundInput;
using bounds::Scenario;

TEST_CASE("closed-form slack for unit propensities") {
    BoundInput b;
    b.empirical_risk = 0.0;
    b.omega = 1.0;
    b.hypothesis_count = 1.0;
    b.confidence_delta = 0.5;
    b.propensities = {1.0, 1.0};
    // (1/2) * sqrt(ln(4)/2) * sqrt(2) = sqrt(ln 4)/2
    const double want = 0.5 * std::sqrt(std::log(4.0));
    CHECK(std::abs(bounds::psw_slack(b) - want) <= 1e-12);
    CHECK(std::abs(want - 0.58870501125773733) <= 1e-12);
    CHECK(bounds::psw_bound(b) == bounds::psw_slack(b));
}

TEST_CASE("halving every propensity doubles the slack exactly") {
    BoundInput b;
    b.omega = 2.5;
    b.hypothesis_count = 8.0;
    b.confidence_delta = 0.1;
    b.propensities = {0.9, 0.4, 0.75, 1.0};
    const double base = bounds::psw_slack(b);
    for (auto& pi : b.propensities) pi /= 2.0;
    CHECK(bounds::psw_slack(b) == doctest::Approx(2.0 * base).epsilon(1e-12));
}

TEST_CASE("committed fixture value") {
    // 900 samples at pi=0.9, 100 at pi=0.1, omega=10, |H|=16, delta=0.05.
    BoundInput b;
    b.empirical_risk = 0.3;
    b.omega = 10.0;
    b.hypothesis_count = 16.0;
    b.confidence_delta = 0.05;
    b.propensities.assign(900, 0.9);
    b.propensities.insert(b.propensities.end(), 100, 0.1);
    CHECK(bounds::psw_slack(b) ==
          doctest::Approx(1.8946515622717366).epsilon(1e-12));
    CHECK(bounds::psw_bound(b) ==
          doctest::Approx(0.3 + 1.8946515622717366).epsilon(1e-12));
}

TEST_CASE("slack monotonicity") {
    BoundInput b;
    b.omega = 1.0;
    b.hypothesis_count = 4.0;
    b.confidence_delta = 0.1;
    b.propensities = {0.5, 0.8, 0.9};
    const double base = bounds::psw_slack(b);

    BoundInput larger_omega = b;
    larger_omega.omega = 2.0;
    CHECK(bounds::psw_slack(larger_omega) > base);

    BoundInput more_hypotheses = b;
    more_hypotheses.hypothesis_count = 64.0;
    CHECK(bounds::psw_slack(more_hypotheses) > base);

    BoundInput smaller_pi = b;
    smaller_pi.propensities[0] = 0.25;
    CHECK(bounds::psw_slack(smaller_pi) > base);

    BoundInput looser_delta = b;
    looser_delta.confidence_delta = 0.5;
    CHECK(bounds::psw_slack(looser_delta) < base);

    // Doubling N with the same per-sample profile shrinks the slack.
    BoundInput doubled = b;
    doubled.propensities.insert(doubled.propensities.end(),
                                b.propensities.begin(),
                                b.propensities.end());
    CHECK(bounds::psw_slack(doubled) < base);
}

TEST_CASE("input validation") {
    BoundInput b;
    b.propensities = {0.5};
    b.confidence_delta = 0.0;
    try {
        bounds::psw_slack(b);
        FAIL("expected invalid_confidence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_confidence);
    }
    b.confidence_delta = 0.05;
    b.propensities = {0.5, 0.0};
    try {
        bounds::psw_slack(b);
        FAIL("expected zero_propensity");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::zero_propensity);
    }
}

TEST_CASE("loss-form slack is tighter than the uniform-omega form") {
    BoundInput b;
    b.omega = 10.0;
    b.hypothesis_count = 16.0;
    b.confidence_delta = 0.05;
    b.propensities = {0.9, 0.5, 0.25, 1.0};
    const std::vector<double> losses = {1.0, 0.2, 5.0, 9.0};
    CHECK(bounds::psw_slack_loss_form(b, losses) <= bounds::psw_slack(b));
    CHECK_THROWS_AS(bounds::psw_slack_loss_form(b, {1.0}), Error);
}

TEST_CASE("scenario population has the stated exact risk") {
    const Scenario sc = bounds::make_binary_bias_scenario(0.9, 0.25, 800);
    CHECK(sc.items.size() == 800);
    CHECK(sc.exact_risk() == doctest::Approx(0.25).epsilon(1e-12));
    for (const auto& item : sc.items) {
        CHECK((item.propensity == doctest::Approx(0.9) ||
               item.propensity == doctest::Approx(0.1)));
        CHECK(item.loss <= sc.omega);
    }
    CHECK_THROWS_AS(bounds::make_binary_bias_scenario(0.9, 0.25, 7), Error);
}

TEST_CASE("estimator is unbiased across trials") {
    const Scenario sc = bounds::make_binary_bias_scenario(0.9, 0.25, 1600);
    const auto res = bounds::coverage_experiment(sc, 2000, 0.05, 99);
    // Standard error of the mean over trials.
    double var = 0.0;
    for (const auto& t : res.trials) {
        const double d = t.empirical_risk - res.mean_empirical;
        var += d * d;
    }
    var /= res.trials.size() - 1;
    const double se = std::sqrt(var / res.trials.size());
    CHECK(std::abs(res.mean_empirical - res.exact_risk) <= 3 * se);
}

TEST_CASE("coverage meets the confidence level") {
    const Scenario sc = bounds::make_binary_bias_scenario(0.9, 0.25, 2000);
    const auto res = bounds::coverage_experiment(sc, 200, 0.05, 7);
    CHECK(res.coverage >= 0.95);
}

TEST_CASE("unit-propensity scenario has exactly full coverage") {
    Scenario sc;
    sc.omega = 1.0;
    sc.hypothesis_count = 2.0;
    for (int i = 0; i < 64; ++i) sc.items.push_back({0.5, 1.0});
    const auto res = bounds::coverage_experiment(sc, 50, 0.05, 3);
    CHECK(res.coverage == 1.0);
    for (const auto& t : res.trials)
        CHECK(t.empirical_risk == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("shrinking the propensity floor inflates the slack") {
    double previous = 0.0;
    for (const double floor : {0.5, 0.25, 0.1, 0.05}) {
        BoundInput b;
        b.omega = 1.0;
        b.hypothesis_count = 4.0;
        b.confidence_delta = 0.05;
        b.propensities.assign(100, floor);
        const double slack = bounds::psw_slack(b);
        CHECK(slack > previous);
        previous = slack;
    }
}
