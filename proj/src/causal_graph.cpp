#include "cpsw/causal_graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace cpsw::graph {

CausalDag::CausalDag(std::vector<std::string> nodes,
                     std::vector<std::pair<std::string, std::string>> edges)
    : nodes_(std::move(nodes)) {
    std::map<std::string, int> index;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        if (!index.emplace(nodes_[i], i).second)
            fail(ErrorCode::invalid_spec, "duplicate node name: " + nodes_[i]);
    }
    parents_.resize(nodes_.size());
    children_.resize(nodes_.size());
    for (const auto& [p, c] : edges) {
        auto pi = index.find(p);
        auto ci = index.find(c);
        if (pi == index.end()) fail(ErrorCode::unknown_node, "unknown node: " + p);
        if (ci == index.end()) fail(ErrorCode::unknown_node, "unknown node: " + c);
        if (pi->second == ci->second)
            fail(ErrorCode::cycle_detected, "self-loop on " + p);
        if (has_edge(pi->second, ci->second))
            fail(ErrorCode::duplicate_edge, "duplicate edge " + p + " -> " + c);
        edges_.emplace_back(pi->second, ci->second);
        children_[pi->second].push_back(ci->second);
        parents_[ci->second].push_back(pi->second);
    }
    for (auto& v : parents_) std::sort(v.begin(), v.end());
    for (auto& v : children_) std::sort(v.begin(), v.end());
    topological_order(); // throws on cycles
}

int CausalDag::index_of(const std::string& name) const {
    for (int i = 0; i < node_count(); ++i)
        if (nodes_[i] == name) return i;
    fail(ErrorCode::unknown_node, "unknown node: " + name);
}

bool CausalDag::has_edge(int parent, int child) const {
    const auto& ch = children_[parent];
    return std::find(ch.begin(), ch.end(), child) != ch.end();
}

std::vector<int> CausalDag::topological_order() const {
    std::vector<int> indegree(node_count(), 0);
    for (int v = 0; v < node_count(); ++v)
        indegree[v] = static_cast<int>(parents_[v].size());
    std::vector<int> ready, order;
    for (int v = 0; v < node_count(); ++v)
        if (indegree[v] == 0) ready.push_back(v);
    while (!ready.empty()) {
        const int v = ready.front();
        ready.erase(ready.begin());
        order.push_back(v);
        for (int c : children_[v])
            if (--indegree[c] == 0) ready.push_back(c);
    }
    if (order.size() != nodes_.size())
        fail(ErrorCode::cycle_detected, "graph contains a cycle");
    return order;
}

std::set<int> CausalDag::descendants(int id) const {
    std::set<int> out;
    std::vector<int> stack(children_[id].begin(), children_[id].end());
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (!out.insert(v).second) continue;
        stack.insert(stack.end(), children_[v].begin(), children_[v].end());
    }
    return out;
}

NodeRole Path::role_at(std::size_t k) const {
    if (k == 0 || k + 1 >= nodes.size()) return NodeRole::endpoint;
    const bool in_left = arrows[k - 1] == Arrow::forward;   // prev -> node
    const bool in_right = arrows[k] == Arrow::backward;     // node <- next
    if (in_left && in_right) return NodeRole::collider;
    if (!in_left && !in_right) return NodeRole::fork;
    return NodeRole::chain;
}

std::string format_path(const CausalDag& g, const Path& p) {
    std::ostringstream os;
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        if (i > 0) os << (p.arrows[i - 1] == Arrow::forward ? " -> " : " <- ");
        os << g.name_of(p.nodes[i]);
    }
    return os.str();
}

CausalDag build_dag(std::vector<std::string> nodes,
                    std::vector<std::pair<std::string, std::string>> edges) {
    return CausalDag(std::move(nodes), std::move(edges));
}

namespace {

// Neighbors of v with the arrow seen from v, name-sorted for determinism.
std::vector<std::pair<int, Arrow>> undirected_neighbors(const CausalDag& g,
                                                        int v) {
    std::vector<std::pair<int, Arrow>> out;
    for (int c : g.children(v)) out.emplace_back(c, Arrow::forward);
    for (int p : g.parents(v)) out.emplace_back(p, Arrow::backward);
    std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
        return g.name_of(a.first) < g.name_of(b.first);
    });
    return out;
}

void dfs_paths(const CausalDag& g, int v, int target, std::vector<bool>& used,
               Path& cur, std::vector<Path>& out,
               bool require_first_backward) {
    for (const auto& [next, arrow] : undirected_neighbors(g, v)) {
        if (used[next]) continue;
        if (require_first_backward && cur.nodes.size() == 1 &&
            arrow != Arrow::backward)
            continue;
        cur.nodes.push_back(next);
        cur.arrows.push_back(arrow);
        if (next == target) {
            out.push_back(cur);
        } else {
            used[next] = true;
            dfs_paths(g, next, target, used, cur, out, require_first_backward);
            used[next] = false;
        }
        cur.nodes.pop_back();
        cur.arrows.pop_back();
    }
}

std::vector<Path> all_paths(const CausalDag& g, const std::string& x,
                            const std::string& y, bool backdoor_only) {
    const int xi = g.index_of(x);
    const int yi = g.index_of(y);
    if (xi == yi) fail(ErrorCode::overlapping_query, "x == y in path query");
    std::vector<bool> used(g.node_count(), false);
    used[xi] = true;
    Path cur;
    cur.nodes.push_back(xi);
    std::vector<Path> out;
    dfs_paths(g, xi, yi, used, cur, out, backdoor_only);
    return out;
}

} // namespace

std::vector<Path> enumerate_paths(const CausalDag& g, const std::string& x,
                                  const std::string& y) {
    return all_paths(g, x, y, false);
}

bool path_blocked(const CausalDag& g, const Path& p, const std::set<int>& z) {
    for (std::size_t k = 1; k + 1 < p.nodes.size(); ++k) {
        const int node = p.nodes[k];
        const NodeRole role = p.role_at(k);
        if (role == NodeRole::collider) {
            if (z.count(node)) continue;
            bool descendant_conditioned = false;
            for (int d : g.descendants(node))
                if (z.count(d)) {
                    descendant_conditioned = true;
                    break;
                }
            if (!descendant_conditioned) return true;
        } else {
            if (z.count(node)) return true;
        }
    }
    return false;
}

bool is_d_separated(const CausalDag& g, const SeparationQuery& q) {
    if (q.x == q.y) fail(ErrorCode::overlapping_query, "x == y");
    if (q.z.count(q.x) || q.z.count(q.y))
        fail(ErrorCode::overlapping_query, "conditioning set contains x or y");
    std::set<int> z;
    for (const auto& name : q.z) z.insert(g.index_of(name));
    for (const Path& p : enumerate_paths(g, q.x, q.y))
        if (!path_blocked(g, p, z)) return false;
    return true;
}

std::vector<Path> backdoor_paths(const CausalDag& g,
                                 const std::string& treatment,
                                 const std::string& outcome) {
    return all_paths(g, treatment, outcome, true);
}

bool satisfies_backdoor(const CausalDag& g, const std::string& treatment,
                        const std::string& outcome,
                        const std::set<std::string>& z) {
    const int ti = g.index_of(treatment);
    g.index_of(outcome);
    std::set<int> zi;
    for (const auto& name : z) {
        if (name == treatment || name == outcome)
            fail(ErrorCode::overlapping_query,
                 "adjustment set contains treatment or outcome");
        zi.insert(g.index_of(name));
    }
    const std::set<int> desc = g.descendants(ti);
    for (int v : zi)
        if (desc.count(v)) return false;
    for (const Path& p : backdoor_paths(g, treatment, outcome))
        if (!path_blocked(g, p, zi)) return false;
    return true;
}

CausalDag parse_dag_text(const std::string& text) {
    std::vector<std::string> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    auto declare = [&](const std::string& name) {
        if (std::find(nodes.begin(), nodes.end(), name) == nodes.end())
            nodes.push_back(name);
    };
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "node") {
            std::string name;
            if (!(ls >> name))
                fail(ErrorCode::parse_error,
                     "line " + std::to_string(lineno) + ": node needs a name");
            declare(name);
            continue;
        }
        if (tok == "cpt" || tok == "domain" || tok == "condition")
            continue; // scm-level lines; the DAG parser skips them
        std::string arrow, child;
        if (!(ls >> arrow >> child) || arrow != "->")
            fail(ErrorCode::parse_error, "line " + std::to_string(lineno) +
                                             ": expected `parent -> child`");
        std::string extra;
        if (ls >> extra)
            fail(ErrorCode::parse_error, "line " + std::to_string(lineno) +
                                             ": trailing token `" + extra + "`");
        declare(tok);
        declare(child);
        edges.emplace_back(tok, child);
    }
    return CausalDag(std::move(nodes), std::move(edges));
}

std::string dag_to_text(const CausalDag& g) {
    std::ostringstream os;
    for (const auto& n : g.nodes()) os << "node " << n << "\n";
    for (const auto& [p, c] : g.edges())
        os << g.name_of(p) << " -> " << g.name_of(c) << "\n";
    return os.str();
}

} // namespace cpsw::graph
