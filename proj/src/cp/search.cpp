#include "weave/cp/solver.hpp"
#include "weave/error.hpp"

#include "propagation.hpp"

#include <numeric>

namespace weave::cp {

const char *status_name(Status s)
{
    switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Feasible: return "feasible";
    case Status::Unsat: return "unsat";
    case Status::Unknown: return "unknown";
    }
    return "?";
}

namespace {

std::vector<std::size_t> all_constraints(const Model &m)
{
    std::vector<std::size_t> idx(m.constraints.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

// First-fail over unfixed decision variables, then over the rest; ties go
// to the lowest id. Without first_fail, the lowest unfixed id.
VarId select(const Model &m, const std::vector<Domain> &dom, bool first_fail)
{
    VarId best = -1;
    std::uint64_t best_size = 0;
    for (int pass = 0; pass < 2 && best < 0; ++pass)
        for (std::size_t v = 0; v < dom.size(); ++v) {
            if (dom[v].fixed() || ((m.vars[v].role == VarRole::Decision) != (pass == 0)))
                continue;
            std::uint64_t s = dom[v].size();
            if (best < 0 || (first_fail && s < best_size)) {
                best = static_cast<VarId>(v);
                best_size = s;
            }
        }
    return best;
}

struct Node {
    std::vector<Domain> dom;
    VarId changed;
};

SolveOutcome search(const Model &m, const SolveOptions &opt, SearchStats &stats,
                    const SolveOutcome *incumbent = nullptr)
{
    using clock = std::chrono::steady_clock;
    auto start = clock::now();
    std::optional<clock::time_point> deadline;
    if (opt.budget.time)
        deadline = start + *opt.budget.time;
    auto out_of_budget = [&] {
        if (opt.budget.nodes && stats.nodes >= *opt.budget.nodes)
            return true;
        return deadline && clock::now() >= *deadline;
    };

    SolveOutcome out;
    detail::Propagation prop(m, all_constraints(m));
    std::vector<Node> stack;
    {
        std::vector<Domain> root;
        for (const auto &v : m.vars)
            root.push_back(v.domain);
        stack.push_back({std::move(root), -1});
    }
    bool optimize = opt.optimize && m.objective.has_value();
    bool found = false;
    if (incumbent) {
        found = true;
        out.assignment = incumbent->assignment;
        out.objective = incumbent->objective;
        stats.incumbents.push_back(out.objective);
        if (!optimize)
            stack.clear();
        else
            prop.set_objective_bound(out.objective - m.objective->constant + 1);
    }
    while (!stack.empty()) {
        if (out_of_budget()) {
            out.timed_out = true;
            break;
        }
        Node node = std::move(stack.back());
        stack.pop_back();
        ++stats.nodes;
        bool root = node.changed < 0;
        std::vector<VarId> changed;
        if (!root)
            changed.push_back(node.changed);
        if (!prop.fixpoint(node.dom, changed, root)) {
            ++stats.failures;
            if (root && prop.failed_constraint() >= 0 && !found)
                out.root_failure = static_cast<std::size_t>(prop.failed_constraint());
            continue;
        }
        VarId v = select(m, node.dom, opt.first_fail);
        if (v < 0) {
            std::vector<std::int64_t> a;
            a.reserve(node.dom.size());
            for (const auto &d : node.dom)
                a.push_back(d.value());
            std::int64_t obj = objective_value(m, a);
            found = true;
            out.assignment = std::move(a);
            out.objective = obj;
            stats.incumbents.push_back(obj);
            if (!optimize)
                break;
            prop.set_objective_bound(obj - m.objective->constant + 1);
            continue;
        }
        std::int64_t value = node.dom[v].min();
        Node right{node.dom, v};
        right.dom[v].remove(value);
        node.dom[v].assign(value);
        node.changed = v;
        stack.push_back(std::move(right));
        stack.push_back(std::move(node));
    }
    stats.propagations += prop.propagations();
    if (found)
        out.status = out.timed_out ? Status::Feasible : Status::Optimal;
    else
        out.status = out.timed_out ? Status::Unknown : Status::Unsat;
    if (out.status != Status::Unsat)
        out.root_failure.reset();
    stats.wall_ms += std::chrono::duration<double, std::milli>(clock::now() - start).count();
    return out;
}

// Completes the hinted decision values with a short search over the rest.
std::optional<SolveOutcome> from_hint(const Model &m, const SolveOptions &options, SearchStats &stats)
{
    if (options.hint.size() != m.vars.size())
        return std::nullopt;
    Model fixed = m;
    for (std::size_t v = 0; v < fixed.vars.size(); ++v)
        if (fixed.vars[v].role == VarRole::Decision) {
            if (!fixed.vars[v].domain.contains(options.hint[v]))
                return std::nullopt;
            fixed.vars[v].domain = Domain::of({options.hint[v]});
        }
    SolveOptions o;
    o.optimize = false;
    o.budget = Budget::of_nodes(1000);
    auto kept = stats.incumbents.size();
    SolveOutcome r = search(fixed, o, stats);
    stats.incumbents.resize(kept);
    if (!r.has_solution())
        return std::nullopt;
    r.objective = objective_value(m, r.assignment);
    return r;
}

} // namespace

SolveOutcome solve(const Model &model, const SolveOptions &options, SearchStats *stats)
{
    SearchStats local;
    SearchStats &s = stats ? *stats : local;
    if (options.presolve) {
        PresolveResult p = presolve(model);
        s.presolve_rewrites += p.log.size();
        auto start = from_hint(p.model, options, s);
        SolveOutcome out = search(p.model, options, s, start ? &*start : nullptr);
        // Presolve may drop or merge constraints; root failures refer to the
        // rewritten model and are not meaningful for the caller.
        out.root_failure.reset();
        return out;
    }
    auto start = from_hint(model, options, s);
    return search(model, options, s, start ? &*start : nullptr);
}

bool propagate(const Model &model, std::vector<Domain> &domains)
{
    detail::Propagation prop(model, all_constraints(model));
    return prop.fixpoint(domains, {}, true);
}

Core extract_core(const Model &model, Budget per_check)
{
    std::vector<int> hard;
    for (std::size_t g = 0; g < model.groups.size(); ++g)
        if (model.groups[g].kind == GroupKind::Hard)
            hard.push_back(static_cast<int>(g));

    // 1 sat, 0 unsat, -1 inconclusive.
    auto check = [&](const std::vector<int> &keep) {
        std::vector<bool> on(model.groups.size(), true);
        for (int g : hard)
            on[g] = false;
        for (int g : keep)
            on[g] = true;
        Model sub;
        sub.vars = model.vars;
        sub.groups = model.groups;
        for (const auto &c : model.constraints)
            if (on[c.group])
                sub.constraints.push_back(c);
        SolveOptions opt;
        opt.budget = per_check;
        opt.presolve = false;
        opt.optimize = false;
        SolveOutcome o = solve(sub, opt);
        if (o.has_solution())
            return 1;
        return o.status == Status::Unsat ? 0 : -1;
    };

    Core core;
    int full = check(hard);
    if (full == 1)
        throw SolverError("unsat core requested for a satisfiable model");
    if (full < 0)
        core.minimal = false;
    std::vector<int> current = hard;
    for (std::size_t i = 0; i < current.size();) {
        std::vector<int> trial = current;
        trial.erase(trial.begin() + static_cast<long>(i));
        int r = check(trial);
        if (r == 0) {
            current = std::move(trial);
        } else {
            if (r < 0)
                core.minimal = false;
            ++i;
        }
    }
    core.groups = std::move(current);
    return core;
}

} // namespace weave::cp
