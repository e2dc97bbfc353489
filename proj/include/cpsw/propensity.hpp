#pragma once
// Cluster encoded high-frequency (invariant) and low-frequency (spurious)
// features with deterministic Lloyd k-means, estimate the population
// propensity table P(C-cluster | S-cluster), and turn it into per-sample
// inverse-propensity weights.

#include <cstdint>
#include <vector>

#include "cpsw/errors.hpp"

namespace cpsw::propensity {

enum class FeatureOrigin { invariant, spurious };

struct FeatureSet {
    int dim = 0;
    std::vector<double> vectors; // N x dim, row-major
    FeatureOrigin origin = FeatureOrigin::invariant;
    std::vector<int> sample_ids; // optional; empty means 0..N-1

    std::size_t count() const {
        return dim == 0 ? 0 : vectors.size() / static_cast<std::size_t>(dim);
    }
    const double* row(std::size_t i) const {
        return vectors.data() + i * static_cast<std::size_t>(dim);
    }
};

struct Clustering {
    int k = 0;
    int dim = 0;
    std::vector<double> centroids;   // k x dim
    std::vector<int> assignments;    // N
    double inertia = 0.0;            // total within-cluster squared distance
    std::vector<double> inertia_history; // one entry per Lloyd iteration
};

// Deterministic k-means: seeded uniform first pick, then greedy
// farthest-point seeding; assignment ties go to the lowest cluster index;
// empty clusters are re-seeded to the point farthest from its own centroid.
// Runs until the assignment fixpoint or max_iters.
Clustering kmeans(const FeatureSet& fs, int k, std::uint64_t seed,
                  int max_iters = 50);

struct PropensityTable {
    int m = 0; // invariant-cluster count (rows)
    int n = 0; // spurious-cluster count (columns)
    std::vector<double> probs;  // m x n, column l holds P(C = k | S = l)
    std::vector<double> counts; // m x n joint counts
    double floor = 0.0;

    double at(int k, int l) const {
        return probs[static_cast<std::size_t>(k) * n + l];
    }
};

// Column l: count(k,l)/count(.,l); empty columns become uniform 1/m; all
// entries are then raised to >= floor with the remaining mass rescaled so
// columns still sum to 1. Requires floor * m <= 1.
PropensityTable build_table(const Clustering& c_cluster,
                            const Clustering& s_cluster, double floor = 0.05);

double sample_propensity(const PropensityTable& table,
                         const Clustering& c_cluster,
                         const Clustering& s_cluster, std::size_t i);

// w_i = 1 / pi_i for each requested sample; with self_normalize the batch
// is divided by its mean weight.
std::vector<double> psw_weights(const PropensityTable& table,
                                const Clustering& c_cluster,
                                const Clustering& s_cluster,
                                const std::vector<int>& batch,
                                bool self_normalize = false);

} // namespace cpsw::propensity
