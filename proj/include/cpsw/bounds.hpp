#pragma once
// Propensity-scored generalization bound and its empirical coverage check.
// The slack follows the Hoeffding route: R_hat + (omega/N) *
// sqrt(log(2|H|/delta)/2) * sqrt(sum 1/pi_i^2); a tighter variant keeps the
// per-sample losses in place of the uniform omega.

#include <cstdint>
#include <vector>

#include "cpsw/errors.hpp"

namespace cpsw::bounds {

struct BoundInput {
    double empirical_risk = 0.0;
    double omega = 1.0;            // uniform per-sample loss bound
    double hypothesis_count = 1.0; // |H|
    double confidence_delta = 0.05;
    std::vector<double> propensities; // pi_i in (0, 1]

    std::size_t n() const { return propensities.size(); }
};

double psw_slack(const BoundInput& b);
double psw_bound(const BoundInput& b); // empirical_risk + slack

// Tighter form: per-sample losses replace the uniform omega inside the
// root. losses must align with propensities.
double psw_slack_loss_form(const BoundInput& b,
                           const std::vector<double>& losses);

// --- coverage experiment ---------------------------------------------------

struct PopulationItem {
    double loss = 0.0;       // bounded by omega
    double propensity = 1.0; // factual selection probability
};

// An enumerable population with exactly known mean loss. The Bernoulli
// construction observes item i with probability pi_i and weighs it by
// 1/pi_i, so each trial's estimator has expectation equal to the
// population mean.
struct Scenario {
    std::vector<PopulationItem> items;
    double omega = 1.0;
    double hypothesis_count = 1.0;

    double exact_risk() const;
};

// Biased binary population shaped like the color/digit harness: S (color)
// is a fair root, P(C = S | S) = bias, Y flips C with rate noise; the
// items enumerate the post-intervention (C independent of S) population
// with multiplicities n * Q, the propensity is the factual P(C | S), and
// the loss is 0/1 misclassification of the predictor y_hat = c.
// n must be divisible by 8 so every cell count is exact.
Scenario make_binary_bias_scenario(double bias, double noise, std::size_t n,
                                   double hypothesis_count = 16.0);

struct TrialRow {
    double empirical_risk = 0.0;
    double bound = 0.0;
    double exact_risk = 0.0;
    bool covered = false;
};

struct CoverageResult {
    double coverage = 0.0;       // fraction of trials with R <= bound
    double mean_empirical = 0.0; // mean R_hat across trials
    double exact_risk = 0.0;
    double slack = 0.0;
    std::vector<TrialRow> trials;
};

CoverageResult coverage_experiment(const Scenario& scenario, int trials,
                                   double delta, std::uint64_t seed);

} // namespace cpsw::bounds
