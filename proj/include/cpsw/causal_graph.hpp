#pragma once
// DAG construction, simple-path enumeration, d-separation and the backdoor
// criterion. Pure functions on immutable graphs; variable names are
// case-sensitive opaque strings ordered lexicographically for deterministic
// output. Graphs in scope are small (<= 12 nodes), so path search is
// exhaustive DFS over simple paths.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "cpsw/errors.hpp"

namespace cpsw::graph {

class CausalDag {
  public:
    // Validates: unique declared names, edges over declared nodes, no
    // self-loops/duplicates, acyclic.
    CausalDag(std::vector<std::string> nodes,
              std::vector<std::pair<std::string, std::string>> edges);

    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    int index_of(const std::string& name) const;   // throws unknown_node
    const std::string& name_of(int id) const { return nodes_[id]; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

    bool has_edge(int parent, int child) const;
    const std::vector<int>& parents(int id) const { return parents_[id]; }
    const std::vector<int>& children(int id) const { return children_[id]; }

    // Indices in topological order (ties broken by node order).
    std::vector<int> topological_order() const;

    // Strict descendants (the node itself excluded).
    std::set<int> descendants(int id) const;

  private:
    std::vector<std::string> nodes_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;
};

enum class Arrow : std::uint8_t { forward, backward }; // relative to traversal

enum class NodeRole : std::uint8_t { endpoint, chain, fork, collider };

struct Path {
    std::vector<int> nodes;      // traversal order, >= 2 entries
    std::vector<Arrow> arrows;   // arrows[i] joins nodes[i] and nodes[i+1]

    NodeRole role_at(std::size_t k) const; // classify interior node k
};

std::string format_path(const CausalDag& g, const Path& p);

struct SeparationQuery {
    std::string x;
    std::string y;
    std::set<std::string> z;
};

CausalDag build_dag(std::vector<std::string> nodes,
                    std::vector<std::pair<std::string, std::string>> edges);

// All simple undirected paths between x and y, deterministic order
// (lexicographic in the traversed node names).
std::vector<Path> enumerate_paths(const CausalDag& g, const std::string& x,
                                  const std::string& y);

// Blocking rule of the two-clause d-separation definition applied to one
// path: a chain/fork middle node in Z blocks; a collider blocks unless it
// or one of its strict descendants is in Z.
bool path_blocked(const CausalDag& g, const Path& p, const std::set<int>& z);

bool is_d_separated(const CausalDag& g, const SeparationQuery& q);

// Paths from treatment to outcome whose first arrow points INTO treatment.
std::vector<Path> backdoor_paths(const CausalDag& g,
                                 const std::string& treatment,
                                 const std::string& outcome);

// Backdoor criterion: no member of z is a strict descendant of treatment,
// and z blocks every backdoor path.
bool satisfies_backdoor(const CausalDag& g, const std::string& treatment,
                        const std::string& outcome,
                        const std::set<std::string>& z);

// Text format: one `parent -> child` line per edge, optional `node NAME`
// declarations, `#` comments. Used by the analyze-graph subcommand.
CausalDag parse_dag_text(const std::string& text);
std::string dag_to_text(const CausalDag& g);

} // namespace cpsw::graph
