#include "doctest.h"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "cpsw/causal_graph.hpp"
#include "cpsw/scm.hpp"

using namespace cpsw;
using graph::CausalDag;
using graph::Path;

namespace {

CausalDag fork_model() {
    return graph::build_dag({"X", "L", "C", "S", "Y"},
                            {{"X", "C"}, {"X", "S"}, {"L", "S"},
                             {"L", "Y"}, {"C", "Y"}});
}

CausalDag collider_model() {
    return graph::build_dag({"X", "C", "S", "Y", "E"},
                            {{"X", "C"}, {"X", "S"}, {"C", "Y"},
                             {"S", "E"}, {"Y", "E"}, {"C", "E"}});
}

CausalDag covariate_fork_model() {
    return graph::build_dag({"T", "L", "C", "Z", "Y"},
                            {{"T", "C"}, {"T", "Z"}, {"L", "Z"},
                             {"L", "Y"}, {"C", "Y"}});
}

bool has_path(const CausalDag& g, const std::vector<Path>& paths,
              const std::string& rendered) {
    return std::any_of(paths.begin(), paths.end(), [&](const Path& p) {
        return graph::format_path(g, p) == rendered;
    });
}

// All DAGs whose edges point from lower to higher node index.
std::vector<CausalDag> upper_triangular_dags(int n) {
    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) slots.emplace_back(i, j);
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back(std::string(1, 'A' + i));
    std::vector<CausalDag> out;
    for (std::size_t bits = 0; bits < (std::size_t{1} << slots.size());
         ++bits) {
        std::vector<std::pair<std::string, std::string>> edges;
        for (std::size_t k = 0; k < slots.size(); ++k)
            if (bits >> k & 1)
                edges.emplace_back(names[slots[k].first],
                                   names[slots[k].second]);
        out.emplace_back(names, edges);
    }
    return out;
}

CausalDag random_dag(int n, rng::Rng& rng, double edge_prob = 0.4) {
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back(std::string(1, 'A' + i));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.bernoulli(edge_prob))
                edges.emplace_back(names[order[i]], names[order[j]]);
    return CausalDag(names, edges);
}

} // namespace

TEST_CASE("build_dag validates structure") {
    const CausalDag g = graph::build_dag(
        {"X", "C", "S", "Y"}, {{"X", "C"}, {"X", "S"}, {"C", "Y"}});
    CHECK(g.node_count() == 4);
    CHECK(g.edges().size() == 3);

    try {
        graph::build_dag({"A", "B"}, {{"A", "B"}, {"B", "A"}});
        FAIL("expected cycle");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::cycle_detected);
    }
    try {
        graph::build_dag({"A"}, {{"A", "B"}});
        FAIL("expected unknown node");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::unknown_node);
    }
    try {
        graph::build_dag({"A", "B"}, {{"A", "B"}, {"A", "B"}});
        FAIL("expected duplicate edge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::duplicate_edge);
    }
    try {
        graph::build_dag({"A", "B", "C"},
                         {{"A", "B"}, {"B", "C"}, {"C", "A"}});
        FAIL("expected cycle");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::cycle_detected);
    }
}

TEST_CASE("enumerate_paths on the fork model finds both C-L paths") {
    const CausalDag g = fork_model();
    const auto paths = graph::enumerate_paths(g, "C", "L");
    REQUIRE(paths.size() == 2);
    CHECK(has_path(g, paths, "C -> Y <- L"));
    CHECK(has_path(g, paths, "C <- X -> S <- L"));
    for (const Path& p : paths)
        for (std::size_t k = 1; k + 1 < p.nodes.size(); ++k)
            CHECK(p.role_at(k) != graph::NodeRole::endpoint);
}

TEST_CASE("enumerate_paths trivia") {
    const CausalDag chain =
        graph::build_dag({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
    const auto paths = graph::enumerate_paths(chain, "A", "C");
    REQUIRE(paths.size() == 1);
    CHECK(graph::format_path(chain, paths[0]) == "A -> B -> C");
    CHECK(paths[0].role_at(1) == graph::NodeRole::chain);

    const CausalDag disconnected = graph::build_dag({"A", "B"}, {});
    CHECK(graph::enumerate_paths(disconnected, "A", "B").empty());
}

TEST_CASE("d-separation collider rule") {
    const CausalDag g =
        graph::build_dag({"A", "B", "C"}, {{"A", "B"}, {"C", "B"}});
    CHECK(graph::is_d_separated(g, {"A", "C", {}}));
    CHECK_FALSE(graph::is_d_separated(g, {"A", "C", {"B"}}));

    // A descendant of the collider also opens the path.
    const CausalDag g2 = graph::build_dag(
        {"A", "B", "C", "D"}, {{"A", "B"}, {"C", "B"}, {"B", "D"}});
    CHECK_FALSE(graph::is_d_separated(g2, {"A", "C", {"D"}}));
}

TEST_CASE("d-separation on the fork model matches the worked analysis") {
    const CausalDag g = fork_model();
    CHECK(graph::is_d_separated(g, {"C", "L", {}}));
    CHECK(graph::is_d_separated(g, {"X", "Y", {"C", "L"}}));
    CHECK(graph::is_d_separated(g, {"S", "Y", {"C", "L"}}));
    CHECK_FALSE(graph::is_d_separated(g, {"S", "Y", {}}));
    CHECK_THROWS_AS(graph::is_d_separated(g, {"C", "C", {}}), Error);
    CHECK_THROWS_AS(graph::is_d_separated(g, {"C", "L", {"C"}}), Error);
}

TEST_CASE("backdoor_paths") {
    const CausalDag g = collider_model();
    const auto paths = graph::backdoor_paths(g, "C", "Y");
    CHECK(has_path(g, paths, "C <- X -> S -> E <- Y"));
    for (const Path& p : paths)
        CHECK(p.arrows.front() == graph::Arrow::backward);

    const CausalDag direct = graph::build_dag({"C", "Y"}, {{"C", "Y"}});
    CHECK(graph::backdoor_paths(direct, "C", "Y").empty());

    const CausalDag cov = covariate_fork_model();
    const auto cov_paths = graph::backdoor_paths(cov, "C", "Y");
    REQUIRE(cov_paths.size() == 1);
    CHECK(graph::format_path(cov, cov_paths[0]) == "C <- T -> Z <- L -> Y");
}

TEST_CASE("backdoor criterion on the covariate fork model") {
    const CausalDag g = covariate_fork_model();
    // The one backdoor path is blocked by the collider Z when nothing is
    // conditioned; conditioning on Z opens it.
    CHECK(graph::satisfies_backdoor(g, "C", "Y", {}));
    CHECK(graph::satisfies_backdoor(g, "C", "Y", {"T"}));
    CHECK(graph::satisfies_backdoor(g, "C", "Y", {"L"}));
    CHECK_FALSE(graph::satisfies_backdoor(g, "C", "Y", {"Z"}));
    CHECK(graph::satisfies_backdoor(g, "C", "Y", {"Z", "T"}));
}

TEST_CASE("backdoor criterion rejects descendants of the treatment") {
    const CausalDag g = collider_model();
    CHECK_FALSE(graph::satisfies_backdoor(g, "C", "Y", {"E"}));
    CHECK(graph::satisfies_backdoor(g, "C", "Y", {"S"}));
    CHECK(graph::satisfies_backdoor(g, "C", "Y", {"X"}));
}

TEST_CASE("d-separation is symmetric and paths are unique simple paths") {
    rng::Rng rng(42);
    for (int rep = 0; rep < 30; ++rep) {
        const CausalDag g = random_dag(6, rng);
        const auto& names = g.nodes();
        for (std::size_t a = 0; a < names.size(); ++a) {
            for (std::size_t b = a + 1; b < names.size(); ++b) {
                std::set<std::string> z;
                for (const auto& name : names)
                    if (name != names[a] && name != names[b] &&
                        rng.bernoulli(0.3))
                        z.insert(name);
                CHECK(graph::is_d_separated(g, {names[a], names[b], z}) ==
                      graph::is_d_separated(g, {names[b], names[a], z}));

                const auto paths =
                    graph::enumerate_paths(g, names[a], names[b]);
                std::set<std::vector<int>> seen;
                for (const Path& p : paths) {
                    CHECK(seen.insert(p.nodes).second); // unique
                    const std::set<int> distinct(p.nodes.begin(),
                                                 p.nodes.end());
                    CHECK(distinct.size() == p.nodes.size()); // simple
                    for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
                        const bool fwd = p.arrows[i] == graph::Arrow::forward;
                        CHECK(g.has_edge(fwd ? p.nodes[i] : p.nodes[i + 1],
                                         fwd ? p.nodes[i + 1] : p.nodes[i]));
                    }
                }
            }
        }
    }
}

TEST_CASE("d-separation soundness against the exact-independence oracle") {
    // d-separated => zero dependence gap and zero mutual information on the
    // enumerated joint of a random positive SCM; a macroscopic measured
    // dependence => not d-separated.
    rng::Rng rng(2024);
    std::vector<CausalDag> graphs;
    for (int n = 2; n <= 4; ++n)
        for (auto& g : upper_triangular_dags(n)) graphs.push_back(std::move(g));
    for (int rep = 0; rep < 25; ++rep) graphs.push_back(random_dag(5, rng));
    for (int rep = 0; rep < 25; ++rep) graphs.push_back(random_dag(6, rng));

    std::size_t dsep_checked = 0, dep_checked = 0;
    for (const CausalDag& g : graphs) {
        const scm::DiscreteScm model = scm::random_binary_scm(g, rng);
        const scm::JointTable jt = scm::joint(model);
        const auto& names = g.nodes();
        const int n = g.node_count();
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                std::vector<std::string> rest;
                for (int i = 0; i < n; ++i)
                    if (i != a && i != b) rest.push_back(names[i]);
                for (std::size_t bits = 0;
                     bits < (std::size_t{1} << rest.size()); ++bits) {
                    std::set<std::string> z;
                    for (std::size_t k = 0; k < rest.size(); ++k)
                        if (bits >> k & 1) z.insert(rest[k]);
                    const bool dsep =
                        graph::is_d_separated(g, {names[a], names[b], z});
                    const double gap =
                        scm::dependence_gap(jt, names[a], names[b], z);
                    if (dsep) {
                        CHECK(gap <= 1e-9);
                        CHECK(scm::mutual_information(jt, names[a], names[b],
                                                      z) <= 1e-9);
                        ++dsep_checked;
                    }
                    if (gap > 1e-9) {
                        CHECK_FALSE(dsep);
                        ++dep_checked;
                    }
                }
            }
        }
    }
    CHECK(dsep_checked > 200);
    CHECK(dep_checked > 200);
}

TEST_CASE("satisfies_backdoor equals its two-clause decomposition") {
    rng::Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const CausalDag g = random_dag(6, rng, 0.45);
        const auto& names = g.nodes();
        const std::string t = names[rng.below(names.size())];
        const std::string o = names[rng.below(names.size())];
        if (o == t) continue;
        std::set<std::string> z;
        for (const auto& name : names)
            if (name != t && name != o && rng.bernoulli(0.35)) z.insert(name);

        const auto desc = g.descendants(g.index_of(t));
        bool no_desc = true;
        for (const auto& name : z)
            if (desc.count(g.index_of(name))) no_desc = false;
        std::set<int> zi;
        for (const auto& name : z) zi.insert(g.index_of(name));
        bool all_blocked = true;
        for (const auto& p : graph::backdoor_paths(g, t, o))
            if (!graph::path_blocked(g, p, zi)) all_blocked = false;

        CHECK(graph::satisfies_backdoor(g, t, o, z) ==
              (no_desc && all_blocked));
    }
}

TEST_CASE("dag text format round-trips and reports parse errors") {
    const std::string text = "# fork\nnode X\nX -> C\nX -> S\nC -> Y\n";
    const CausalDag g = graph::parse_dag_text(text);
    CHECK(g.node_count() == 4);
    const CausalDag again = graph::parse_dag_text(graph::dag_to_text(g));
    CHECK(again.edges().size() == g.edges().size());

    try {
        graph::parse_dag_text("X => Y\n");
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse_error);
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
}
