#include "cpsw/bounds.hpp"

#include <cmath>

#include "cpsw/rng.hpp"

namespace cpsw::bounds {

namespace {

void validate(const BoundInput& b) {
    if (!(b.confidence_delta > 0.0 && b.confidence_delta < 1.0))
        fail(ErrorCode::invalid_confidence, "delta must lie in (0, 1)");
    if (!(b.omega > 0.0))
        fail(ErrorCode::config_invalid, "omega must be positive");
    if (!(b.hypothesis_count >= 1.0))
        fail(ErrorCode::config_invalid, "|H| must be >= 1");
    if (b.propensities.empty())
        fail(ErrorCode::config_invalid, "empty propensity vector");
    for (double pi : b.propensities) {
        if (!(pi > 0.0))
            fail(ErrorCode::zero_propensity, "propensity must be positive");
        if (pi > 1.0)
            fail(ErrorCode::config_invalid, "propensity above 1");
    }
}

double log_term(const BoundInput& b) {
    return std::sqrt(
        std::log(2.0 * b.hypothesis_count / b.confidence_delta) / 2.0);
}

} // namespace

double psw_slack(const BoundInput& b) {
    validate(b);
    double sum_inv_sq = 0.0;
    for (double pi : b.propensities) sum_inv_sq += 1.0 / (pi * pi);
    return b.omega / static_cast<double>(b.n()) * log_term(b) *
           std::sqrt(sum_inv_sq);
}

double psw_bound(const BoundInput& b) { return b.empirical_risk + psw_slack(b); }

double psw_slack_loss_form(const BoundInput& b,
                           const std::vector<double>& losses) {
    validate(b);
    if (losses.size() != b.n())
        fail(ErrorCode::config_invalid, "losses misaligned with propensities");
    double sum = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (losses[i] < 0.0 || losses[i] > b.omega)
            fail(ErrorCode::config_invalid, "loss outside [0, omega]");
        const double r = losses[i] / b.propensities[i];
        sum += r * r;
    }
    return log_term(b) * std::sqrt(sum) / static_cast<double>(b.n());
}

double Scenario::exact_risk() const {
    double sum = 0.0;
    for (const auto& item : items) sum += item.loss;
    return items.empty() ? 0.0 : sum / static_cast<double>(items.size());
}

Scenario make_binary_bias_scenario(double bias, double noise, std::size_t n,
                                   double hypothesis_count) {
    if (n == 0 || n % 8 != 0)
        fail(ErrorCode::scenario_invalid,
             "population size must be a positive multiple of 8");
    if (!(bias > 0.0 && bias < 1.0) || !(noise >= 0.0 && noise < 0.5))
        fail(ErrorCode::scenario_invalid, "bias in (0,1), noise in [0,0.5)");
    // Both cell masses must be exact: use the nearest rational with
    // denominator n/4 per (c, s) cell and n/8 per (y, c, s) cell.
    Scenario sc;
    sc.omega = 1.0;
    sc.hypothesis_count = hypothesis_count;
    const std::size_t per_cs = n / 4; // post-intervention: C independent of S
    for (int c = 0; c < 2; ++c) {
        for (int s = 0; s < 2; ++s) {
            // Factual selection propensity pi = P(C = c | S = s).
            const double pi = c == s ? bias : 1.0 - bias;
            // Y | C flips with rate `noise`; predictor y_hat = c, so the
            // loss is 1 exactly when the label flipped.
            const std::size_t flipped =
                static_cast<std::size_t>(std::llround(noise * per_cs));
            for (std::size_t i = 0; i < per_cs; ++i)
                sc.items.push_back({i < flipped ? 1.0 : 0.0, pi});
        }
    }
    return sc;
}

CoverageResult coverage_experiment(const Scenario& scenario, int trials,
                                   double delta, std::uint64_t seed) {
    if (scenario.items.empty())
        fail(ErrorCode::scenario_invalid, "scenario has no population");
    if (trials < 1)
        fail(ErrorCode::scenario_invalid, "need at least one trial");

    BoundInput base;
    base.omega = scenario.omega;
    base.hypothesis_count = scenario.hypothesis_count;
    base.confidence_delta = delta;
    for (const auto& item : scenario.items)
        base.propensities.push_back(item.propensity);
    const double slack = psw_slack(base);
    const double exact = scenario.exact_risk();
    const double n = static_cast<double>(scenario.items.size());

    CoverageResult out;
    out.exact_risk = exact;
    out.slack = slack;
    std::size_t covered = 0;
    double sum_risk = 0.0;
    for (int t = 0; t < trials; ++t) {
        rng::Rng rng = rng::derive(seed, "bound-trial",
                                   static_cast<std::uint64_t>(t));
        double weighted = 0.0;
        for (const auto& item : scenario.items)
            if (rng.bernoulli(item.propensity))
                weighted += item.loss / item.propensity;
        TrialRow row;
        row.empirical_risk = weighted / n;
        row.bound = row.empirical_risk + slack;
        row.exact_risk = exact;
        row.covered = exact <= row.bound;
        covered += row.covered ? 1 : 0;
        sum_risk += row.empirical_risk;
        out.trials.push_back(row);
    }
    out.coverage = static_cast<double>(covered) / trials;
    out.mean_empirical = sum_risk / trials;
    return out;
}

} // namespace cpsw::bounds
