#include "cpsw/scm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cpsw::scm {

namespace {

constexpr double kRowSumTol = 1e-12;

std::size_t product_size(const std::vector<int>& sizes) {
    std::size_t n = 1;
    for (int s : sizes) n *= static_cast<std::size_t>(s);
    return n;
}

} // namespace

int DiscreteScm::value_index(const std::string& node,
                             const std::string& value) const {
    const int id = dag.index_of(node);
    const auto& dom = domains[id];
    for (int i = 0; i < static_cast<int>(dom.size()); ++i)
        if (dom[i] == value) return i;
    fail(ErrorCode::value_out_of_domain,
         "value `" + value + "` not in domain of " + node);
}

JointTable::JointTable(std::vector<std::string> variables,
                       std::vector<int> domain_sizes,
                       std::vector<double> probs)
    : variables_(std::move(variables)), sizes_(std::move(domain_sizes)),
      probs_(std::move(probs)) {
    if (variables_.size() != sizes_.size() ||
        probs_.size() != product_size(sizes_))
        fail(ErrorCode::dimension_mismatch, "joint table shape mismatch");
    double total = 0.0;
    for (double p : probs_) {
        if (p < -kRowSumTol)
            fail(ErrorCode::invalid_spec, "negative probability in table");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        fail(ErrorCode::invalid_spec, "joint table mass != 1");
}

int JointTable::var_index(const std::string& name) const {
    for (int i = 0; i < static_cast<int>(variables_.size()); ++i)
        if (variables_[i] == name) return i;
    fail(ErrorCode::unknown_node, "variable not in table: " + name);
}

std::vector<int> JointTable::unpack(std::size_t cell) const {
    std::vector<int> values(sizes_.size());
    for (int i = static_cast<int>(sizes_.size()) - 1; i >= 0; --i) {
        values[i] = static_cast<int>(cell % sizes_[i]);
        cell /= sizes_[i];
    }
    return values;
}

std::size_t JointTable::pack(const std::vector<int>& values) const {
    std::size_t cell = 0;
    for (std::size_t i = 0; i < sizes_.size(); ++i)
        cell = cell * sizes_[i] + values[i];
    return cell;
}

double JointTable::mass(const Assignment& partial) const {
    std::vector<int> want(variables_.size(), -1);
    for (const auto& [name, value] : partial) {
        const int vi = var_index(name);
        if (value < 0 || value >= sizes_[vi])
            fail(ErrorCode::value_out_of_domain,
                 "value index out of range for " + name);
        want[vi] = value;
    }
    const int nv = static_cast<int>(sizes_.size());
    double total = 0.0;
    for (std::size_t cell = 0; cell < probs_.size(); ++cell) {
        std::size_t rest = cell;
        bool match = true;
        for (int i = nv - 1; i >= 0; --i) {
            const int v = static_cast<int>(rest % sizes_[i]);
            rest /= sizes_[i];
            if (want[i] >= 0 && v != want[i]) {
                match = false;
                break;
            }
        }
        if (match) total += probs_[cell];
    }
    return total;
}

// --- builder -------------------------------------------------------------

ScmBuilder::ScmBuilder(graph::CausalDag dag) : dag_(std::move(dag)) {
    domains_.assign(dag_.node_count(), {"0", "1"});
    mechanisms_.resize(dag_.node_count());
}

ScmBuilder& ScmBuilder::domain(const std::string& node,
                               std::vector<std::string> values) {
    if (values.empty())
        fail(ErrorCode::invalid_spec, "empty domain for " + node);
    domains_[dag_.index_of(node)] = std::move(values);
    return *this;
}

ScmBuilder& ScmBuilder::cpt(const std::string& node,
                            const std::vector<std::string>& parents,
                            std::vector<double> rows) {
    const int id = dag_.index_of(node);
    Cpt c;
    for (const auto& p : parents) c.parents.push_back(dag_.index_of(p));
    std::vector<int> expected = dag_.parents(id);
    std::vector<int> given = c.parents;
    std::sort(given.begin(), given.end());
    if (given != expected)
        fail(ErrorCode::invalid_spec,
             "cpt parents for " + node + " do not match graph parents");
    c.table = std::move(rows);
    mechanisms_[id] = std::move(c);
    return *this;
}

ScmBuilder& ScmBuilder::condition(const std::string& node,
                                  const std::string& value) {
    const int id = dag_.index_of(node);
    const auto& dom = domains_[id];
    const auto it = std::find(dom.begin(), dom.end(), value);
    if (it == dom.end())
        fail(ErrorCode::value_out_of_domain,
             "conditioning value not in domain of " + node);
    conditioning_[node] = static_cast<int>(it - dom.begin());
    return *this;
}

DiscreteScm ScmBuilder::build() {
    std::vector<Cpt> mechanisms;
    for (int id = 0; id < dag_.node_count(); ++id) {
        if (!mechanisms_[id])
            fail(ErrorCode::invalid_spec,
                 "missing cpt for " + dag_.name_of(id));
        Cpt c = *mechanisms_[id];
        std::size_t configs = 1;
        for (int p : c.parents) configs *= domains_[p].size();
        const std::size_t dom = domains_[id].size();
        if (c.table.size() != configs * dom)
            fail(ErrorCode::invalid_spec,
                 "cpt for " + dag_.name_of(id) + " has wrong size");
        for (std::size_t r = 0; r < configs; ++r) {
            double sum = 0.0;
            for (std::size_t v = 0; v < dom; ++v) {
                const double p = c.table[r * dom + v];
                if (p < 0.0)
                    fail(ErrorCode::invalid_spec, "negative cpt entry");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowSumTol)
                fail(ErrorCode::invalid_spec,
                     "cpt row for " + dag_.name_of(id) + " sums to " +
                         std::to_string(sum));
        }
        mechanisms.push_back(std::move(c));
    }
    return DiscreteScm{std::move(dag_), std::move(domains_),
                       std::move(mechanisms), std::move(conditioning_)};
}

DiscreteScm random_binary_scm(const graph::CausalDag& dag, rng::Rng& rng,
                              double min_prob) {
    ScmBuilder b(dag);
    for (int id = 0; id < dag.node_count(); ++id) {
        std::vector<std::string> parent_names;
        std::size_t configs = 1;
        for (int p : dag.parents(id)) {
            parent_names.push_back(dag.name_of(p));
            configs *= 2;
        }
        std::vector<double> rows;
        for (std::size_t r = 0; r < configs; ++r) {
            const double p = rng.uniform(min_prob, 1.0 - min_prob);
            rows.push_back(p);
            rows.push_back(1.0 - p);
        }
        b.cpt(dag.name_of(id), parent_names, std::move(rows));
    }
    return b.build();
}

// --- core operations -------------------------------------------------------

JointTable joint(const DiscreteScm& scm, std::size_t cell_cap) {
    const int n = scm.dag.node_count();
    std::vector<int> sizes(n);
    std::size_t cells = 1;
    for (int i = 0; i < n; ++i) {
        sizes[i] = scm.domain_size(i);
        cells *= static_cast<std::size_t>(sizes[i]);
        if (cells > cell_cap)
            fail(ErrorCode::domain_too_large,
                 "joint table exceeds cell cap of " + std::to_string(cell_cap));
    }
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back(scm.dag.name_of(i));

    std::vector<double> probs(cells, 0.0);
    std::vector<int> values(n, 0);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::size_t rest = cell;
        for (int i = n - 1; i >= 0; --i) {
            values[i] = static_cast<int>(rest % sizes[i]);
            rest /= sizes[i];
        }
        double p = 1.0;
        for (int i = 0; i < n && p > 0.0; ++i) {
            const Cpt& c = scm.mechanisms[i];
            std::size_t config = 0;
            for (int parent : c.parents)
                config = config * sizes[parent] + values[parent];
            p *= c.table[config * sizes[i] + values[i]];
        }
        probs[cell] = p;
    }
    return JointTable(std::move(names), std::move(sizes), std::move(probs));
}

DiscreteScm intervene(const DiscreteScm& scm, const Intervention& iv) {
    const int target = scm.dag.index_of(iv.target);
    const int value = scm.value_index(iv.target, iv.value);

    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [p, c] : scm.dag.edges())
        if (c != target)
            edges.emplace_back(scm.dag.name_of(p), scm.dag.name_of(c));
    graph::CausalDag mutilated(scm.dag.nodes(), edges);

    ScmBuilder b(std::move(mutilated));
    for (int id = 0; id < scm.dag.node_count(); ++id)
        b.domain(scm.dag.name_of(id), scm.domains[id]);
    for (int id = 0; id < scm.dag.node_count(); ++id) {
        if (id == target) {
            std::vector<double> point(scm.domain_size(id), 0.0);
            point[value] = 1.0;
            b.cpt(iv.target, {}, std::move(point));
        } else {
            std::vector<std::string> parent_names;
            for (int p : scm.mechanisms[id].parents)
                parent_names.push_back(scm.dag.name_of(p));
            b.cpt(scm.dag.name_of(id), parent_names, scm.mechanisms[id].table);
        }
    }
    for (const auto& [name, v] : scm.conditioning)
        if (name != iv.target)
            b.condition(name, scm.domains[scm.dag.index_of(name)][v]);
    return b.build();
}

double query(const JointTable& jt, const Assignment& outcome,
             const Assignment& given) {
    for (const auto& [name, value] : outcome)
        if (given.count(name))
            fail(ErrorCode::overlapping_query,
                 "variable in both outcome and given: " + name);
    const double denom = given.empty() ? 1.0 : jt.mass(given);
    if (denom <= 0.0)
        fail(ErrorCode::zero_conditioning_event,
             "conditioning event has zero probability");
    Assignment both = outcome;
    both.insert(given.begin(), given.end());
    return jt.mass(both) / denom;
}

JointTable marginal(const JointTable& jt, const std::set<std::string>& keep) {
    std::vector<std::string> names;
    std::vector<int> sizes;
    std::vector<int> keep_idx;
    for (int i = 0; i < static_cast<int>(jt.variables().size()); ++i) {
        if (keep.count(jt.variables()[i])) {
            names.push_back(jt.variables()[i]);
            sizes.push_back(jt.domain_sizes()[i]);
            keep_idx.push_back(i);
        }
    }
    if (names.size() != keep.size())
        fail(ErrorCode::unknown_node, "marginal over unknown variable");
    std::vector<double> probs(product_size(sizes), 0.0);
    const int nv = static_cast<int>(jt.domain_sizes().size());
    std::vector<int> values(nv);
    for (std::size_t cell = 0; cell < jt.cells(); ++cell) {
        std::size_t rest = cell;
        for (int i = nv - 1; i >= 0; --i) {
            values[i] = static_cast<int>(rest % jt.domain_sizes()[i]);
            rest /= jt.domain_sizes()[i];
        }
        std::size_t out = 0;
        for (std::size_t k = 0; k < keep_idx.size(); ++k)
            out = out * sizes[k] + values[keep_idx[k]];
        probs[out] += jt.probs()[cell];
    }
    return JointTable(std::move(names), std::move(sizes), std::move(probs));
}

JointTable condition(const JointTable& jt, const Assignment& given) {
    const double denom = jt.mass(given);
    if (denom <= 0.0)
        fail(ErrorCode::zero_conditioning_event,
             "conditioning event has zero probability");
    std::vector<std::string> names;
    std::vector<int> sizes;
    std::vector<int> keep_idx;
    std::vector<int> want(jt.variables().size(), -1);
    for (const auto& [name, value] : given) want[jt.var_index(name)] = value;
    for (int i = 0; i < static_cast<int>(jt.variables().size()); ++i) {
        if (want[i] < 0) {
            names.push_back(jt.variables()[i]);
            sizes.push_back(jt.domain_sizes()[i]);
            keep_idx.push_back(i);
        }
    }
    std::vector<double> probs(product_size(sizes), 0.0);
    const int nv = static_cast<int>(jt.domain_sizes().size());
    std::vector<int> values(nv);
    for (std::size_t cell = 0; cell < jt.cells(); ++cell) {
        std::size_t rest = cell;
        for (int i = nv - 1; i >= 0; --i) {
            values[i] = static_cast<int>(rest % jt.domain_sizes()[i]);
            rest /= jt.domain_sizes()[i];
        }
        bool match = true;
        for (int i = 0; i < nv; ++i)
            if (want[i] >= 0 && values[i] != want[i]) {
                match = false;
                break;
            }
        if (!match) continue;
        std::size_t out = 0;
        for (std::size_t k = 0; k < keep_idx.size(); ++k)
            out = out * sizes[k] + values[keep_idx[k]];
        probs[out] += jt.probs()[cell] / denom;
    }
    return JointTable(std::move(names), std::move(sizes), std::move(probs));
}

namespace {

// Iterate all value combinations of the named variables.
class ConfigRange {
  public:
    ConfigRange(const JointTable& jt, const std::set<std::string>& vars) {
        for (const auto& v : vars) {
            names_.push_back(v);
            sizes_.push_back(jt.domain_sizes()[jt.var_index(v)]);
        }
    }
    std::size_t count() const { return product_size(sizes_); }
    Assignment at(std::size_t k) const {
        Assignment a;
        for (int i = static_cast<int>(sizes_.size()) - 1; i >= 0; --i) {
            a[names_[i]] = static_cast<int>(k % sizes_[i]);
            k /= sizes_[i];
        }
        return a;
    }

  private:
    std::vector<std::string> names_;
    std::vector<int> sizes_;
};

} // namespace

double adjustment_estimate(const JointTable& jt, const Assignment& treatment,
                           const Assignment& outcome,
                           const std::set<std::string>& z) {
    for (const auto& name : z)
        if (treatment.count(name) || outcome.count(name))
            fail(ErrorCode::overlapping_query,
                 "adjustment variable overlaps treatment/outcome: " + name);
    const ConfigRange strata(jt, z);
    double total = 0.0;
    for (std::size_t k = 0; k < strata.count(); ++k) {
        const Assignment zs = strata.at(k);
        const double pz = z.empty() ? 1.0 : jt.mass(zs);
        if (pz <= 0.0) continue;
        Assignment xz = treatment;
        xz.insert(zs.begin(), zs.end());
        const double pxz = jt.mass(xz);
        if (pxz <= 0.0)
            fail(ErrorCode::positivity_violation,
                 "stratum with positive mass but zero treatment mass");
        Assignment yxz = outcome;
        yxz.insert(xz.begin(), xz.end());
        total += jt.mass(yxz) / pxz * pz;
    }
    return total;
}

double do_probability(const DiscreteScm& scm, const Assignment& treatment,
                      const Assignment& outcome) {
    DiscreteScm mutilated = scm;
    for (const auto& [name, value] : treatment) {
        const int id = scm.dag.index_of(name);
        mutilated = intervene(mutilated,
                              Intervention{name, scm.domains[id][value]});
    }
    return joint(mutilated).mass(outcome);
}

namespace {

// Accumulated stratum tables for (a, b | cond) queries, built from one pass
// over the marginal onto {a, b} + cond.
struct AbStrata {
    int da = 0, db = 0;
    std::size_t strata = 1;
    std::vector<double> p_s, p_as, p_bs, p_abs;

    AbStrata(const JointTable& jt, const std::string& a, const std::string& b,
             const std::set<std::string>& cond) {
        std::set<std::string> keep = cond;
        keep.insert(a);
        keep.insert(b);
        const JointTable m = marginal(jt, keep);
        const int ai = m.var_index(a);
        const int bi = m.var_index(b);
        const int nv = static_cast<int>(m.domain_sizes().size());
        da = m.domain_sizes()[ai];
        db = m.domain_sizes()[bi];
        for (int i = 0; i < nv; ++i)
            if (i != ai && i != bi) strata *= m.domain_sizes()[i];
        p_s.assign(strata, 0.0);
        p_as.assign(strata * da, 0.0);
        p_bs.assign(strata * db, 0.0);
        p_abs.assign(strata * da * db, 0.0);
        for (std::size_t cell = 0; cell < m.cells(); ++cell) {
            std::size_t rest = cell;
            int av = 0, bv = 0;
            std::size_t sidx = 0;
            for (int i = nv - 1; i >= 0; --i) {
                const int v = static_cast<int>(rest % m.domain_sizes()[i]);
                rest /= m.domain_sizes()[i];
                if (i == ai)
                    av = v;
                else if (i == bi)
                    bv = v;
            }
            // Recompute the stratum index in fixed variable order.
            rest = cell;
            std::size_t mul = 1;
            for (int i = nv - 1; i >= 0; --i) {
                const int v = static_cast<int>(rest % m.domain_sizes()[i]);
                rest /= m.domain_sizes()[i];
                if (i == ai || i == bi) continue;
                sidx += mul * static_cast<std::size_t>(v);
                mul *= m.domain_sizes()[i];
            }
            const double p = m.probs()[cell];
            p_s[sidx] += p;
            p_as[sidx * da + av] += p;
            p_bs[sidx * db + bv] += p;
            p_abs[(sidx * da + av) * db + bv] += p;
        }
    }
};

} // namespace

double dependence_gap(const JointTable& jt, const std::string& a,
                      const std::string& b,
                      const std::set<std::string>& cond) {
    const AbStrata t(jt, a, b, cond);
    double worst = 0.0;
    for (std::size_t s = 0; s < t.strata; ++s) {
        if (t.p_s[s] <= 0.0) continue;
        const double inv = 1.0 / t.p_s[s];
        for (int av = 0; av < t.da; ++av) {
            for (int bv = 0; bv < t.db; ++bv) {
                const double pab = t.p_abs[(s * t.da + av) * t.db + bv] * inv;
                const double pa = t.p_as[s * t.da + av] * inv;
                const double pb = t.p_bs[s * t.db + bv] * inv;
                worst = std::max(worst, std::abs(pab - pa * pb));
            }
        }
    }
    return worst;
}

bool independent(const JointTable& jt, const std::string& a,
                 const std::string& b, const std::set<std::string>& cond,
                 double tol) {
    return dependence_gap(jt, a, b, cond) <= tol;
}

double mutual_information(const JointTable& jt, const std::string& a,
                          const std::string& b,
                          const std::set<std::string>& cond) {
    const AbStrata t(jt, a, b, cond);
    double mi = 0.0;
    for (std::size_t s = 0; s < t.strata; ++s) {
        if (t.p_s[s] <= 0.0) continue;
        const double inv = 1.0 / t.p_s[s];
        for (int av = 0; av < t.da; ++av) {
            for (int bv = 0; bv < t.db; ++bv) {
                const double pab = t.p_abs[(s * t.da + av) * t.db + bv] * inv;
                const double pa = t.p_as[s * t.da + av] * inv;
                const double pb = t.p_bs[s * t.db + bv] * inv;
                if (pab > 0.0 && pa > 0.0 && pb > 0.0)
                    mi += t.p_s[s] * pab * std::log(pab / (pa * pb));
            }
        }
    }
    return std::max(mi, 0.0);
}

// --- paper-level checks ------------------------------------------------

namespace {

void require_non_descendants(const graph::CausalDag& g, const std::string& x,
                             const std::set<std::string>& t) {
    const auto desc = g.descendants(g.index_of(x));
    for (const auto& name : t)
        if (desc.count(g.index_of(name)))
            fail(ErrorCode::descendant_in_t,
                 name + " is a descendant of " + x);
}

} // namespace

bool check_nonconfounding_statistical(const JointTable& jt,
                                      const graph::CausalDag& g,
                                      const std::string& x,
                                      const std::string& y,
                                      const std::set<std::string>& t1,
                                      const std::set<std::string>& t2,
                                      double tol) {
    for (const auto& name : t1)
        if (t2.count(name) || name == x || name == y)
            fail(ErrorCode::overlapping_query, "bad partition: " + name);
    for (const auto& name : t2)
        if (name == x || name == y)
            fail(ErrorCode::overlapping_query, "bad partition: " + name);
    require_non_descendants(g, x, t1);
    require_non_descendants(g, x, t2);

    const int xi = jt.var_index(x);
    const int yi = jt.var_index(y);

    // Clause 1: P(x) = P(x | t1).
    const ConfigRange t1range(jt, t1);
    for (std::size_t k = 0; k < t1range.count(); ++k) {
        const Assignment t1s = t1range.at(k);
        const double pt1 = t1.empty() ? 1.0 : jt.mass(t1s);
        if (pt1 <= 0.0) continue;
        for (int xv = 0; xv < jt.domain_sizes()[xi]; ++xv) {
            Assignment xa{{x, xv}};
            Assignment xt1 = xa;
            xt1.insert(t1s.begin(), t1s.end());
            const double lhs = jt.mass(xa);
            const double rhs = jt.mass(xt1) / pt1;
            if (std::abs(lhs - rhs) > tol) return false;
        }
    }

    // Clause 2: P(y | t1, x) = P(y | t1, t2, x).
    std::set<std::string> t12 = t1;
    t12.insert(t2.begin(), t2.end());
    const ConfigRange t12range(jt, t12);
    for (std::size_t k = 0; k < t12range.count(); ++k) {
        const Assignment ts = t12range.at(k);
        Assignment t1s;
        for (const auto& name : t1) t1s[name] = ts.at(name);
        for (int xv = 0; xv < jt.domain_sizes()[xi]; ++xv) {
            Assignment t1x = t1s;
            t1x[x] = xv;
            Assignment txall = ts;
            txall[x] = xv;
            const double p_t1x = jt.mass(t1x);
            const double p_txall = jt.mass(txall);
            if (p_t1x <= 0.0 || p_txall <= 0.0) continue;
            for (int yv = 0; yv < jt.domain_sizes()[yi]; ++yv) {
                Assignment lhs_num = t1x, rhs_num = txall;
                lhs_num[y] = yv;
                rhs_num[y] = yv;
                const double lhs = jt.mass(lhs_num) / p_t1x;
                const double rhs = jt.mass(rhs_num) / p_txall;
                if (std::abs(lhs - rhs) > tol) return false;
            }
        }
    }
    return true;
}

std::vector<PartitionResult> enumerate_nonconfounding_partitions(
    const JointTable& jt, const graph::CausalDag& g, const std::string& x,
    const std::string& y, double tol) {
    const int xi = g.index_of(x);
    const auto desc = g.descendants(xi);
    std::vector<std::string> pool;
    for (const auto& name : g.nodes()) {
        if (name == x || name == y) continue;
        if (desc.count(g.index_of(name))) continue;
        pool.push_back(name);
    }
    std::vector<PartitionResult> out;
    const std::size_t subsets = std::size_t{1} << pool.size();
    for (std::size_t bits = 0; bits < subsets; ++bits) {
        PartitionResult r;
        for (std::size_t i = 0; i < pool.size(); ++i)
            (bits >> i & 1 ? r.t1 : r.t2).insert(pool[i]);
        r.nonconfounding =
            check_nonconfounding_statistical(jt, g, x, y, r.t1, r.t2, tol);
        out.push_back(std::move(r));
    }
    return out;
}

bool check_nonconfounding_causal(const DiscreteScm& scm, const std::string& x,
                                 const std::string& y, double tol) {
    const JointTable jt = joint(scm);
    const int xid = scm.dag.index_of(x);
    const int yid = scm.dag.index_of(y);
    for (int xv = 0; xv < scm.domain_size(xid); ++xv) {
        const Assignment xa{{x, xv}};
        if (jt.mass(xa) <= 0.0) continue;
        const JointTable jt_m =
            joint(intervene(scm, Intervention{x, scm.domains[xid][xv]}));
        for (int yv = 0; yv < scm.domain_size(yid); ++yv) {
            const Assignment ya{{y, yv}};
            const double interventional = jt_m.mass(ya);
            const double observational = query(jt, ya, xa);
            if (std::abs(interventional - observational) > tol) return false;
        }
    }
    return true;
}

std::optional<SpuriousWitness> spurious_correlation_witness(
    const JointTable& jt, const graph::CausalDag& g, const std::string& s,
    const std::string& y, int max_cond, double tol) {
    std::vector<std::string> others;
    for (const auto& name : g.nodes())
        if (name != s && name != y) others.push_back(name);
    std::sort(others.begin(), others.end());

    // All conditioning sets over `pool` up to max_cond, smallest first.
    auto cond_sets = [&](const std::string& z) {
        std::vector<std::set<std::string>> sets;
        std::vector<std::string> pool;
        for (const auto& name : others)
            if (name != z) pool.push_back(name);
        const std::size_t subsets = std::size_t{1} << pool.size();
        for (std::size_t bits = 0; bits < subsets; ++bits) {
            std::set<std::string> cur;
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (bits >> i & 1) cur.insert(pool[i]);
            if (static_cast<int>(cur.size()) <= max_cond)
                sets.push_back(std::move(cur));
        }
        std::sort(sets.begin(), sets.end(),
                  [](const auto& a, const auto& b) {
                      if (a.size() != b.size()) return a.size() < b.size();
                      return a < b;
                  });
        return sets;
    };

    auto find_clause = [&](const std::string& dep_with,
                           const std::string& indep_of)
        -> std::optional<std::pair<std::string, std::set<std::string>>> {
        for (const auto& z : others) {
            for (const auto& cond : cond_sets(z)) {
                if (cond.count(dep_with) || cond.count(indep_of)) continue;
                if (!independent(jt, z, dep_with, cond, tol) &&
                    independent(jt, z, indep_of, cond, tol))
                    return std::make_pair(z, cond);
            }
        }
        return std::nullopt;
    };

    const auto clause1 = find_clause(s, y);
    if (!clause1) return std::nullopt;
    const auto clause2 = find_clause(y, s);
    if (!clause2) return std::nullopt;
    return SpuriousWitness{clause1->first, clause1->second, clause2->first,
                           clause2->second};
}

// --- text format ---------------------------------------------------------

DiscreteScm parse_scm_text(const std::string& text) {
    struct RawCpt {
        std::vector<std::string> parents;
        std::vector<double> rows;
    };
    std::vector<std::string> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    std::map<std::string, std::vector<std::string>> domains;
    std::map<std::string, RawCpt> cpts;
    std::vector<std::pair<std::string, std::string>> conditions;

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
        const std::string where = "line " + std::to_string(lineno);
        if (tok == "node") {
            std::string name;
            if (!(ls >> name))
                fail(ErrorCode::parse_error, where + ": node needs a name");
            declare(name);
        } else if (tok == "domain") {
            std::string name, value;
            if (!(ls >> name))
                fail(ErrorCode::parse_error, where + ": domain needs a name");
            declare(name);
            std::vector<std::string> values;
            while (ls >> value) values.push_back(value);
            if (values.empty())
                fail(ErrorCode::parse_error, where + ": empty domain");
            domains[name] = std::move(values);
        } else if (tok == "condition") {
            std::string name, value;
            if (!(ls >> name >> value))
                fail(ErrorCode::parse_error,
                     where + ": condition needs `name value`");
            conditions.emplace_back(name, value);
        } else if (tok == "cpt") {
            std::string name;
            if (!(ls >> name))
                fail(ErrorCode::parse_error, where + ": cpt needs a name");
            declare(name);
            RawCpt raw;
            std::string piece;
            if (!(ls >> piece) || piece != "|")
                fail(ErrorCode::parse_error, where + ": expected `|`");
            while (ls >> piece && piece != ":") raw.parents.push_back(piece);
            if (piece != ":")
                fail(ErrorCode::parse_error, where + ": expected `:`");
            while (ls >> piece) {
                if (piece == ";") continue;
                raw.rows.push_back(std::stod(piece));
            }
            if (raw.rows.empty())
                fail(ErrorCode::parse_error, where + ": cpt has no rows");
            cpts[name] = std::move(raw);
        } else {
            std::string arrow, child;
            if (!(ls >> arrow >> child) || arrow != "->")
                fail(ErrorCode::parse_error,
                     where + ": expected `parent -> child`");
            declare(tok);
            declare(child);
            edges.emplace_back(tok, child);
        }
    }

    ScmBuilder b(graph::CausalDag(nodes, edges));
    for (const auto& [name, values] : domains) b.domain(name, values);
    for (const auto& [name, raw] : cpts) b.cpt(name, raw.parents, raw.rows);
    for (const auto& [name, value] : conditions) b.condition(name, value);
    return b.build();
}

DiscreteScm load_scm_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::file_not_found, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scm_text(buf.str());
}

std::string scm_to_text(const DiscreteScm& scm) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& n : scm.dag.nodes()) os << "node " << n << "\n";
    for (const auto& [p, c] : scm.dag.edges())
        os << scm.dag.name_of(p) << " -> " << scm.dag.name_of(c) << "\n";
    for (int id = 0; id < scm.dag.node_count(); ++id) {
        os << "domain " << scm.dag.name_of(id);
        for (const auto& v : scm.domains[id]) os << " " << v;
        os << "\n";
    }
    for (int id = 0; id < scm.dag.node_count(); ++id) {
        const Cpt& c = scm.mechanisms[id];
        os << "cpt " << scm.dag.name_of(id) << " |";
        for (int p : c.parents) os << " " << scm.dag.name_of(p);
        os << " :";
        const int dom = scm.domain_size(id);
        for (std::size_t i = 0; i < c.table.size(); ++i) {
            if (i > 0 && i % dom == 0) os << " ;";
            os << " " << c.table[i];
        }
        os << "\n";
    }
    for (const auto& [name, v] : scm.conditioning)
        os << "condition " << name << " "
           << scm.domains[scm.dag.index_of(name)][v] << "\n";
    return os.str();
}

} // namespace cpsw::scm
