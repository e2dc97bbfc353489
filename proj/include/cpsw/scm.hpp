#pragma once
// Exact discrete structural causal models: joint enumeration, mutilation
// (do-interventions), conditioning/marginalization, adjustment-formula
// estimation, and executable non-confounding checks. Everything is exact
// summation over dense tables; sampling never appears outside test oracles.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cpsw/causal_graph.hpp"
#include "cpsw/errors.hpp"
#include "cpsw/rng.hpp"

namespace cpsw::scm {

// Variable name -> value index within its domain.
using Assignment = std::map<std::string, int>;

struct Cpt {
    std::vector<int> parents; // node ids, row enumeration order (last fastest)
    std::vector<double> table; // [parent_config * domain + value]
};

struct DiscreteScm {
    graph::CausalDag dag;
    std::vector<std::vector<std::string>> domains; // value names per node
    std::vector<Cpt> mechanisms;                   // one per node
    // Optional conditioning context shipped with fixture files
    // (`condition NAME value`), e.g. the embedding slice of the collider
    // fixtures. Consumers apply it explicitly.
    Assignment conditioning;

    int domain_size(int node) const {
        return static_cast<int>(domains[node].size());
    }
    int value_index(const std::string& node, const std::string& value) const;
};

class JointTable {
  public:
    JointTable(std::vector<std::string> variables,
               std::vector<int> domain_sizes, std::vector<double> probs);

    const std::vector<std::string>& variables() const { return variables_; }
    const std::vector<int>& domain_sizes() const { return sizes_; }
    const std::vector<double>& probs() const { return probs_; }
    std::size_t cells() const { return probs_.size(); }

    int var_index(const std::string& name) const; // throws unknown_node
    double mass(const Assignment& partial) const; // sum over matching cells

    // Linear cell index <-> per-variable value indices (last var fastest).
    std::vector<int> unpack(std::size_t cell) const;
    std::size_t pack(const std::vector<int>& values) const;

  private:
    std::vector<std::string> variables_;
    std::vector<int> sizes_;
    std::vector<double> probs_;
};

struct Intervention {
    std::string target;
    std::string value; // by name; use value_index for ints
};

// --- construction -----------------------------------------------------

class ScmBuilder {
  public:
    explicit ScmBuilder(graph::CausalDag dag);
    ScmBuilder& domain(const std::string& node,
                       std::vector<std::string> values);
    // parents given in row-enumeration order; must match graph parents as a
    // set. rows: parent configs (last listed parent fastest) x values.
    ScmBuilder& cpt(const std::string& node,
                    const std::vector<std::string>& parents,
                    std::vector<double> rows);
    ScmBuilder& condition(const std::string& node, const std::string& value);
    DiscreteScm build(); // validates coverage, row sums, parent sets

  private:
    graph::CausalDag dag_;
    std::vector<std::vector<std::string>> domains_;
    std::vector<std::optional<Cpt>> mechanisms_;
    Assignment conditioning_;
};

// Random positive CPTs over a fixed DAG (binary domains), for property
// tests and randomized acceptance sweeps.
DiscreteScm random_binary_scm(const graph::CausalDag& dag, rng::Rng& rng,
                              double min_prob = 0.05);

// --- core operations ---------------------------------------------------

// Exact joint by product of CPTs; variables in graph node order.
// Throws domain_too_large above cell_cap.
JointTable joint(const DiscreteScm& scm, std::size_t cell_cap = 10'000'000);

// Mutilated SCM: all arrows into target removed, mechanism replaced by a
// point mass. The joint of the result is the manipulated distribution.
DiscreteScm intervene(const DiscreteScm& scm, const Intervention& iv);

// P(outcome | given), exact. Throws zero_conditioning_event.
double query(const JointTable& jt, const Assignment& outcome,
             const Assignment& given = {});

// Marginal over `keep` (table order preserved).
JointTable marginal(const JointTable& jt, const std::set<std::string>& keep);

// Condition on a full assignment of some variables; they are dropped from
// the result. Throws zero_conditioning_event.
JointTable condition(const JointTable& jt, const Assignment& given);

// Adjustment formula sum_z P(outcome | treatment, z) P(z).
// Throws positivity_violation if some stratum with P(z) > 0 has zero
// treatment mass.
double adjustment_estimate(const JointTable& jt, const Assignment& treatment,
                           const Assignment& outcome,
                           const std::set<std::string>& z);

// Interventional truth P(outcome | do(assignments)), via mutilation.
double do_probability(const DiscreteScm& scm, const Assignment& treatment,
                      const Assignment& outcome);

// --- independence on exact tables --------------------------------------

inline constexpr double kIndepTol = 1e-9;

// max over positive-mass strata s and cells (a,b) of
// |P(a,b|s) - P(a|s) P(b|s)|
double dependence_gap(const JointTable& jt, const std::string& a,
                      const std::string& b, const std::set<std::string>& cond);

bool independent(const JointTable& jt, const std::string& a,
                 const std::string& b, const std::set<std::string>& cond,
                 double tol = kIndepTol);

// Conditional mutual information I(a;b | cond), nats. Secondary diagnostic.
double mutual_information(const JointTable& jt, const std::string& a,
                          const std::string& b,
                          const std::set<std::string>& cond);

// --- the paper-level checks --------------------------------------------

// Statistical non-confounding of x -> y under the partition (t1, t2):
//   (1) P(x) = P(x | t1) for all t1 values,
//   (2) P(y | t1, x) = P(y | t1, t2, x) for all values,
// each within tol. Throws descendant_in_t if t1 or t2 touches a strict
// descendant of x in g.
bool check_nonconfounding_statistical(const JointTable& jt,
                                      const graph::CausalDag& g,
                                      const std::string& x,
                                      const std::string& y,
                                      const std::set<std::string>& t1,
                                      const std::set<std::string>& t2,
                                      double tol = kIndepTol);

struct PartitionResult {
    std::set<std::string> t1;
    std::set<std::string> t2;
    bool nonconfounding;
};

// Every 2-partition of the non-descendants of x (minus x, y). Small graphs
// only; 2^|T| entries.
std::vector<PartitionResult> enumerate_nonconfounding_partitions(
    const JointTable& jt, const graph::CausalDag& g, const std::string& x,
    const std::string& y, double tol = kIndepTol);

// Causal non-confounding: P(y | do(x)) = P(y | x) for every value pair with
// P(x) > 0, within tol.
bool check_nonconfounding_causal(const DiscreteScm& scm, const std::string& x,
                                 const std::string& y, double tol = kIndepTol);

struct SpuriousWitness {
    std::string z1;
    std::set<std::string> s1;
    std::string z2;
    std::set<std::string> s2;
};

// Search for the two-clause witness of spurious correlation between s and
// y: some (Z1, S1) with Z1 dep s | S1 and Z1 indep y | S1, and some
// (Z2, S2) with Z2 dep y | S2 and Z2 indep s | S2. Conditioning sets up to
// max_cond variables. Deterministic (lexicographic) search order.
std::optional<SpuriousWitness> spurious_correlation_witness(
    const JointTable& jt, const graph::CausalDag& g, const std::string& s,
    const std::string& y, int max_cond = 2, double tol = kIndepTol);

// --- text format ---------------------------------------------------------
// DAG block as in causal_graph, plus:
//   domain NAME v0 v1 ...          (optional; binary 0/1 by default)
//   cpt NAME | P1 P2 ... : r ; r   (rows over parent configs, last fastest)
//   condition NAME value           (optional fixture conditioning context)
DiscreteScm parse_scm_text(const std::string& text);
DiscreteScm load_scm_file(const std::string& path);
std::string scm_to_text(const DiscreteScm& scm);

} // namespace cpsw::scm
