#include "weave/cp/solver.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace weave::cp {

namespace {

// Matches `x - y != 0` (in either sign order) and returns the ordered pair.
std::optional<std::pair<VarId, VarId>> ne_edge(const Constraint &c)
{
    const auto *l = std::get_if<Linear>(&c.body);
    if (!l || l->rel != Rel::NE || l->rhs != 0 || l->terms.size() != 2)
        return std::nullopt;
    const Term &a = l->terms[0], &b = l->terms[1];
    if (a.coef + b.coef != 0 || (a.coef != 1 && a.coef != -1) || a.var == b.var)
        return std::nullopt;
    return std::make_pair(std::min(a.var, b.var), std::max(a.var, b.var));
}

void replace_cliques(Model &m, std::vector<std::string> &log)
{
    std::map<std::pair<VarId, VarId>, std::size_t> edges; // edge -> constraint index
    for (std::size_t i = 0; i < m.constraints.size(); ++i)
        if (auto e = ne_edge(m.constraints[i]))
            edges.emplace(*e, i);
    if (edges.size() < 3)
        return;
    std::map<VarId, std::set<VarId>> adj;
    for (const auto &[e, i] : edges) {
        adj[e.first].insert(e.second);
        adj[e.second].insert(e.first);
    }
    std::vector<bool> drop(m.constraints.size(), false);
    std::vector<Constraint> added;
    for (;;) {
        // Seed from the vertex with the highest remaining degree, lowest id on ties.
        VarId seed = -1;
        std::size_t best = 0;
        for (const auto &[v, ns] : adj)
            if (ns.size() > best) {
                best = ns.size();
                seed = v;
            }
        if (best < 2)
            break;
        std::vector<VarId> clique{seed};
        std::vector<VarId> cand(adj[seed].begin(), adj[seed].end());
        std::stable_sort(cand.begin(), cand.end(), [&](VarId a, VarId b) { return adj[a].size() > adj[b].size(); });
        for (VarId c : cand)
            if (std::all_of(clique.begin(), clique.end(), [&](VarId u) { return adj[c].count(u) > 0; }))
                clique.push_back(c);
        if (clique.size() < 3) {
            // The seed's neighbourhood holds no triangle; retire its edges from
            // consideration without rewriting them.
            for (VarId u : adj[seed])
                adj[u].erase(seed);
            adj.erase(seed);
            continue;
        }
        std::sort(clique.begin(), clique.end());
        int group = -1;
        for (std::size_t i = 0; i < clique.size(); ++i)
            for (std::size_t j = i + 1; j < clique.size(); ++j) {
                std::size_t ci = edges.at({clique[i], clique[j]});
                drop[ci] = true;
                int g = m.constraints[ci].group;
                group = group < 0 ? g : std::min(group, g);
                adj[clique[i]].erase(clique[j]);
                adj[clique[j]].erase(clique[i]);
            }
        added.push_back({AllDifferent{clique}, group});
        log.push_back("clique of " + std::to_string(clique.size()) + " != constraints -> all_different");
    }
    if (added.empty())
        return;
    std::vector<Constraint> kept;
    for (std::size_t i = 0; i < m.constraints.size(); ++i)
        if (!drop[i])
            kept.push_back(std::move(m.constraints[i]));
    kept.insert(kept.end(), added.begin(), added.end());
    m.constraints = std::move(kept);
}

// Substitutes variables whose declared domain is a single value into linear
// constraints and folds constraints that no longer mention any variable.
void fold_linear(Model &m, std::vector<std::string> &log)
{
    std::vector<Constraint> kept;
    for (auto &c : m.constraints) {
        auto *l = std::get_if<Linear>(&c.body);
        if (!l) {
            kept.push_back(std::move(c));
            continue;
        }
        std::vector<Term> terms;
        __int128 rhs = l->rhs;
        bool substituted = false;
        for (const auto &t : l->terms) {
            if (t.coef == 0) {
                substituted = true;
                continue;
            }
            const Domain &d = m.vars[t.var].domain;
            if (d.fixed()) {
                rhs -= static_cast<__int128>(t.coef) * d.value();
                substituted = true;
            } else {
                terms.push_back(t);
            }
        }
        if (!substituted || rhs < INT64_MIN || rhs > INT64_MAX) {
            kept.push_back(std::move(c));
            continue;
        }
        std::int64_t r = static_cast<std::int64_t>(rhs);
        if (terms.empty()) {
            if (holds(0, l->rel, r)) {
                log.push_back("folded constant linear constraint");
                continue;
            }
            // Keep an unsatisfiable stub so the failure stays attributable.
            log.push_back("folded constant linear constraint (false)");
            kept.push_back({Linear{{}, l->rel, r}, c.group});
            continue;
        }
        log.push_back("substituted fixed variables into linear constraint");
        kept.push_back({Linear{std::move(terms), l->rel, r}, c.group});
    }
    m.constraints = std::move(kept);
}

} // namespace

PresolveResult presolve(const Model &model)
{
    PresolveResult r{model, {}};
    replace_cliques(r.model, r.log);
    fold_linear(r.model, r.log);
    return r;
}

} // namespace weave::cp
