#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "weave/compiler/compiler.hpp"
#include "weave/cp/solver.hpp"
#include "weave/store/store.hpp"

namespace weave::runtime {

// How the reconfiguration model may change placed rows.
struct Reconfig {
    // Integer column used to order rows; see BindOptions::priority_column.
    std::optional<std::string> priority_column;
    // Placed cells may move (bounded) instead of only being evicted.
    std::optional<std::int64_t> max_moves;
};

struct SolveReport {
    cp::SolveOutcome outcome;
    std::vector<store::Delta> deltas; // one per in-scope cell, empty without a solution
    cp::SearchStats stats;
    compiler::GroundStats model_stats;
    bool escalated = false;
    double bind_ms = 0;
    // The model that produced `outcome`; for an unsat escalation, the primary one.
    std::shared_ptr<const compiler::GroundModel> model;
};

class Engine {
public:
    // Compiles the primary schema and, optionally, a reconfiguration schema
    // over the same tables. Throws the front-end errors, naming the view.
    static Engine compile(std::string_view schema, std::optional<std::string_view> reconfig_schema = std::nullopt,
                          Reconfig reconfig = {});

    // The store is read on every solve and never written.
    void connect(const store::Store &store) { store_ = &store; }

    void set_budget(cp::Budget b) { budget_ = b; }
    void set_rewrites(bool on) { rewrites_ = on; }
    void set_presolve(bool on) { presolve_ = on; }

    const compiler::Template &primary() const { return primary_; }
    const compiler::Template *reconfig() const { return reconfig_ ? &*reconfig_ : nullptr; }

    // Binds a fresh snapshot of the connected store, solves, and reports deltas.
    SolveReport solve_once(compiler::Scope scope = compiler::Scope::Pending,
                           std::optional<cp::Budget> budget = std::nullopt) const;

    // Solves the primary model; if it is unsat (or the budget ran out with no
    // solution), solves the reconfiguration
    // model, which may leave pending rows unset and evict placed ones while
    // maximizing the (priority-weighted) number of assigned rows.
    SolveReport solve_or_escalate(compiler::Scope scope = compiler::Scope::Pending,
                                  std::optional<cp::Budget> budget = std::nullopt) const;

    // One line per core group, `view[row keys]`. Throws SolverError when the
    // report is not unsat. A trailing line notes a non-minimal core.
    std::vector<std::string> explain_unsat(const SolveReport &report,
                                           cp::Budget per_check = cp::Budget::of_nodes(100'000)) const;

private:
    SolveReport run(const compiler::Template &t, const compiler::BindOptions &opt, cp::Budget budget) const;

    compiler::Template primary_;
    std::optional<compiler::Template> reconfig_;
    Reconfig reconfig_opts_;
    const store::Store *store_ = nullptr;
    cp::Budget budget_ = cp::Budget::of_time(std::chrono::milliseconds(5000));
    bool rewrites_ = true;
    bool presolve_ = true;
};

} // namespace weave::runtime
