#include "weave/runtime/engine.hpp"

#include "weave/error.hpp"

#include <chrono>

namespace weave::runtime {

Engine Engine::compile(std::string_view schema, std::optional<std::string_view> reconfig_schema, Reconfig reconfig)
{
    Engine e;
    e.primary_ = compiler::compile(schema, "<schema>");
    e.reconfig_opts_ = std::move(reconfig);
    if (reconfig_schema) {
        e.reconfig_ = compiler::compile(*reconfig_schema, "<reconfig>");
        const auto &a = e.primary_.program.tables;
        const auto &b = e.reconfig_->program.tables;
        if (a.size() != b.size())
            throw SchemaError("reconfiguration schema declares a different set of tables");
        for (const auto &t : a) {
            const auto *u = e.reconfig_->program.find_table(t.name);
            if (!u || !same_shape(t, *u))
                throw SchemaError("reconfiguration schema disagrees on table " + t.name);
        }
    }
    return e;
}

SolveReport Engine::run(const compiler::Template &t, const compiler::BindOptions &opt, cp::Budget budget) const
{
    if (!store_)
        throw StoreError("engine is not connected to a store");
    SolveReport r;
    auto t0 = std::chrono::steady_clock::now();
    auto model = std::make_shared<compiler::GroundModel>(compiler::bind(t, *store_, opt));
    r.bind_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    r.model_stats = model->stats();
    cp::SolveOptions so;
    so.budget = budget;
    so.presolve = presolve_;
    // Leaving everything as it is satisfies a relaxed model; start there.
    if (opt.allow_unset)
        so.hint = model->unchanged_hint();
    r.outcome = cp::solve(model->model, so, &r.stats);
    if (r.outcome.has_solution())
        r.deltas = model->deltas(r.outcome.assignment);
    r.model = std::move(model);
    return r;
}

SolveReport Engine::solve_once(compiler::Scope scope, std::optional<cp::Budget> budget) const
{
    compiler::BindOptions opt;
    opt.scope = scope;
    opt.rewrites = rewrites_;
    return run(primary_, opt, budget.value_or(budget_));
}

SolveReport Engine::solve_or_escalate(compiler::Scope scope, std::optional<cp::Budget> budget) const
{
    SolveReport first = solve_once(scope, budget);
    // A timeout without any solution escalates too: the relaxed model always
    // has one.
    if (first.outcome.has_solution())
        return first;
    compiler::BindOptions opt;
    opt.scope = compiler::Scope::All;
    opt.rewrites = rewrites_;
    opt.allow_unset = true;
    opt.allow_evict = true;
    opt.max_moves = reconfig_opts_.max_moves;
    opt.priority_column = reconfig_opts_.priority_column;
    opt.objective_soft = false;
    opt.objective_assigned = true;
    // Without a separate reconfiguration schema the primary policies are
    // reused with the wider bind options.
    SolveReport second = run(reconfig_ ? *reconfig_ : primary_, opt, budget.value_or(budget_));
    second.escalated = true;
    if (second.outcome.status == cp::Status::Unsat) {
        first.escalated = true;
        return first;
    }
    return second;
}

std::vector<std::string> Engine::explain_unsat(const SolveReport &report, cp::Budget per_check) const
{
    if (report.outcome.status != cp::Status::Unsat || !report.model)
        throw SolverError("explain_unsat needs an unsat report");
    auto core = cp::extract_core(report.model->model, per_check);
    std::vector<std::string> lines;
    for (int g : core.groups)
        lines.push_back(report.model->model.groups[static_cast<std::size_t>(g)].label());
    if (!core.minimal)
        lines.push_back("(core may not be minimal: a check ran out of budget)");
    return lines;
}

} // namespace weave::runtime
