#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "weave/cp/model.hpp"

namespace weave::cp {

// Search limit in explored nodes, wall time, or both. Tests use node counts
// so that outcomes are reproducible.
struct Budget {
    std::optional<std::uint64_t> nodes;
    std::optional<std::chrono::milliseconds> time;

    static Budget of_nodes(std::uint64_t n) { return {n, std::nullopt}; }
    static Budget of_time(std::chrono::milliseconds t) { return {std::nullopt, t}; }
};

enum class Status { Optimal, Feasible, Unsat, Unknown };
const char *status_name(Status s);

struct SearchStats {
    std::uint64_t nodes = 0;
    std::uint64_t failures = 0;
    std::uint64_t propagations = 0;
    std::uint64_t presolve_rewrites = 0;
    double wall_ms = 0;
    std::vector<std::int64_t> incumbents; // objective of each improving solution
};

struct SolveOutcome {
    Status status = Status::Unknown;
    std::vector<std::int64_t> assignment; // one value per model variable
    std::int64_t objective = 0;
    bool timed_out = false;
    // Model index of the constraint whose propagation failed at the root,
    // when unsatisfiability was detected without search.
    std::optional<std::size_t> root_failure;

    bool has_solution() const { return status == Status::Optimal || status == Status::Feasible; }
};

struct SolveOptions {
    Budget budget;
    bool presolve = true;
    bool optimize = true; // false: stop at the first solution
    // Smallest domain first; false branches in variable order, which makes
    // node counts comparable across encodings of the same model.
    bool first_fail = true;
    // Optional starting point, one value per variable (or empty). When the
    // decision values it gives are feasible, the search starts from that
    // incumbent, so a timeout still returns at least this solution.
    std::vector<std::int64_t> hint;
};

SolveOutcome solve(const Model &model, const SolveOptions &options, SearchStats *stats = nullptr);

struct PresolveResult {
    Model model;
    std::vector<std::string> log;
};

// Rewrites that keep the variable set intact: greedy replacement of cliques
// of pairwise `x - y != 0` constraints (size >= 3) by all_different,
// substitution of fixed variables into linear constraints, and folding of
// linear constraints left with no terms.
PresolveResult presolve(const Model &model);

struct Core {
    std::vector<int> groups; // indices into Model::groups
    bool minimal = true;
};

// Deletion-based minimization over hard-constraint groups. `per_check` bounds
// each satisfiability test; an inconclusive test keeps the group and clears
// `minimal`. Throws SolverError when the model is satisfiable.
Core extract_core(const Model &model, Budget per_check);

// Runs all propagators of `model` to a fixpoint over `domains`. Returns false
// on failure. Exposed for propagation tests.
bool propagate(const Model &model, std::vector<Domain> &domains);

} // namespace weave::cp
