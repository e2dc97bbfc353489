#include "cpsw/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpsw/kernels.hpp"
#include "cpsw/rng.hpp"

namespace cpsw::propensity {

namespace {

int nearest_centroid(const FeatureSet& fs, const std::vector<double>& centroids,
                     int k, std::size_t i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
        const double d = kernels::sqdist(
            fs.row(i), centroids.data() + static_cast<std::size_t>(c) * fs.dim,
            fs.dim);
        if (d < best_d) { // strict: ties keep the lowest index
            best_d = d;
            best = c;
        }
    }
    return best;
}

} // namespace

Clustering kmeans(const FeatureSet& fs, int k, std::uint64_t seed,
                  int max_iters) {
    const std::size_t n = fs.count();
    if (n == 0) fail(ErrorCode::empty_input, "kmeans on empty feature set");
    if (k <= 0 || static_cast<std::size_t>(k) > n)
        fail(ErrorCode::too_few_points,
             "kmeans needs 1 <= k <= point count");
    if (max_iters < 1) fail(ErrorCode::config_invalid, "max_iters < 1");

    const int d = fs.dim;
    Clustering out;
    out.k = k;
    out.dim = d;
    out.centroids.assign(static_cast<std::size_t>(k) * d, 0.0);
    out.assignments.assign(n, 0);

    // Greedy farthest-point seeding from a seeded uniform first pick.
    rng::Rng rng(seed);
    std::vector<std::size_t> chosen;
    chosen.push_back(static_cast<std::size_t>(rng.below(n)));
    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    while (chosen.size() < static_cast<std::size_t>(k)) {
        const std::size_t last = chosen.back();
        for (std::size_t i = 0; i < n; ++i)
            min_d[i] =
                std::min(min_d[i], kernels::sqdist(fs.row(i), fs.row(last), d));
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i)
            if (min_d[i] > far_d) {
                far_d = min_d[i];
                far = i;
            }
        chosen.push_back(far);
    }
    for (int c = 0; c < k; ++c)
        std::copy_n(fs.row(chosen[c]), d,
                    out.centroids.begin() + static_cast<std::size_t>(c) * d);

    std::vector<double> sums(static_cast<std::size_t>(k) * d);
    std::vector<std::size_t> sizes(k);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            const int a = nearest_centroid(fs, out.centroids, k, i);
            if (a != out.assignments[i]) changed = true;
            out.assignments[i] = a;
        }

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const int a = out.assignments[i];
            kernels::axpy(1.0, fs.row(i),
                          sums.data() + static_cast<std::size_t>(a) * d, d);
            ++sizes[a];
        }
        for (int c = 0; c < k; ++c) {
            if (sizes[c] == 0) continue;
            for (int j = 0; j < d; ++j)
                out.centroids[static_cast<std::size_t>(c) * d + j] =
                    sums[static_cast<std::size_t>(c) * d + j] / sizes[c];
        }
        // Empty clusters: re-seed to the point currently farthest from its
        // own centroid (ties to the lowest index, coincident points allowed).
        for (int c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const int a = out.assignments[i];
                const double dist = kernels::sqdist(
                    fs.row(i),
                    out.centroids.data() + static_cast<std::size_t>(a) * d, d);
                if (dist > far_d) {
                    far_d = dist;
                    far = i;
                }
            }
            std::copy_n(fs.row(far), d,
                        out.centroids.begin() +
                            static_cast<std::size_t>(c) * d);
            changed = true;
        }

        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int a = nearest_centroid(fs, out.centroids, k, i);
            out.assignments[i] = a;
            inertia += kernels::sqdist(
                fs.row(i),
                out.centroids.data() + static_cast<std::size_t>(a) * d, d);
        }
        out.inertia_history.push_back(inertia);
        out.inertia = inertia;
        if (!changed) break;
    }
    return out;
}

PropensityTable build_table(const Clustering& c_cluster,
                            const Clustering& s_cluster, double floor) {
    if (c_cluster.assignments.size() != s_cluster.assignments.size())
        fail(ErrorCode::misaligned_samples,
             "clusterings cover different sample counts");
    const int m = c_cluster.k;
    const int n = s_cluster.k;
    if (floor < 0.0 || floor * m > 1.0)
        fail(ErrorCode::config_invalid, "floor must satisfy 0 <= floor*m <= 1");

    PropensityTable t;
    t.m = m;
    t.n = n;
    t.floor = floor;
    t.counts.assign(static_cast<std::size_t>(m) * n, 0.0);
    t.probs.assign(static_cast<std::size_t>(m) * n, 0.0);
    for (std::size_t i = 0; i < c_cluster.assignments.size(); ++i) {
        const int k = c_cluster.assignments[i];
        const int l = s_cluster.assignments[i];
        t.counts[static_cast<std::size_t>(k) * n + l] += 1.0;
    }
    for (int l = 0; l < n; ++l) {
        double col = 0.0;
        for (int k = 0; k < m; ++k)
            col += t.counts[static_cast<std::size_t>(k) * n + l];
        std::vector<double> p(m, 1.0 / m);
        if (col > 0.0)
            for (int k = 0; k < m; ++k)
                p[k] = t.counts[static_cast<std::size_t>(k) * n + l] / col;
        // Raise entries to >= floor, rescaling the unpinned mass; repeats
        // until no entry dips back below the floor.
        std::vector<bool> pinned(m, false);
        for (;;) {
            double pinned_mass = 0.0, free_mass = 0.0;
            for (int k = 0; k < m; ++k) {
                if (pinned[k])
                    pinned_mass += floor;
                else
                    free_mass += p[k];
            }
            bool again = false;
            for (int k = 0; k < m; ++k) {
                if (pinned[k]) continue;
                const double scaled =
                    free_mass > 0.0 ? p[k] * (1.0 - pinned_mass) / free_mass
                                    : 0.0;
                if (scaled < floor) {
                    pinned[k] = true;
                    again = true;
                }
            }
            if (!again) {
                for (int k = 0; k < m; ++k)
                    p[k] = pinned[k]
                               ? floor
                               : p[k] * (1.0 - pinned_mass) / free_mass;
                break;
            }
        }
        for (int k = 0; k < m; ++k)
            t.probs[static_cast<std::size_t>(k) * n + l] = p[k];
    }
    return t;
}

double sample_propensity(const PropensityTable& table,
                         const Clustering& c_cluster,
                         const Clustering& s_cluster, std::size_t i) {
    if (i >= c_cluster.assignments.size() ||
        i >= s_cluster.assignments.size())
        fail(ErrorCode::index_out_of_range, "sample index out of range");
    return table.at(c_cluster.assignments[i], s_cluster.assignments[i]);
}

std::vector<double> psw_weights(const PropensityTable& table,
                                const Clustering& c_cluster,
                                const Clustering& s_cluster,
                                const std::vector<int>& batch,
                                bool self_normalize) {
    std::vector<double> w;
    w.reserve(batch.size());
    for (int i : batch)
        w.push_back(1.0 / sample_propensity(table, c_cluster, s_cluster,
                                            static_cast<std::size_t>(i)));
    if (self_normalize && !w.empty()) {
        double mean = 0.0;
        for (double x : w) mean += x;
        mean /= static_cast<double>(w.size());
        for (double& x : w) x /= mean;
    }
    return w;
}

} // namespace cpsw::propensity
