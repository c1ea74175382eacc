#pragma once

// Internal to the solver: propagators and the fixpoint loop.

#include <cstdint>
#include <deque>
#include <memory>
#include <vector>

#include "weave/cp/model.hpp"

namespace weave::cp::detail {

struct Context {
    std::vector<Domain> &dom;
    std::vector<VarId> modified;

    bool touch(VarId v, bool changed)
    {
        if (changed)
            modified.push_back(v);
        return !dom[v].empty();
    }
    bool set_min(VarId v, std::int64_t x) { return touch(v, dom[v].set_min(x)); }
    bool set_max(VarId v, std::int64_t x) { return touch(v, dom[v].set_max(x)); }
    bool remove(VarId v, std::int64_t x) { return touch(v, dom[v].remove(x)); }
    bool assign(VarId v, std::int64_t x) { return touch(v, dom[v].assign(x)); }
    bool intersect(VarId v, const Domain &d) { return touch(v, dom[v].intersect(d)); }
    bool subtract(VarId v, const Domain &d) { return touch(v, dom[v].subtract(d)); }
};

class Propagator {
public:
    virtual ~Propagator() = default;
    // Contracts domains; false signals failure.
    virtual bool run(Context &ctx) = 0;
    virtual std::vector<VarId> vars() const = 0;
    virtual bool expensive() const { return false; }
};

std::unique_ptr<Propagator> make_propagator(const ConstraintBody &c);

class LinearPropagator;

// Owns one propagator per constraint plus an optional objective bound, and
// runs them to a fixpoint with a cheap queue drained before the expensive one.
class Propagation {
public:
    Propagation(const Model &m, const std::vector<std::size_t> &constraints);
    ~Propagation();

    // Requires objective >= bound from now on.
    void set_objective_bound(std::int64_t bound);

    // Runs every propagator when `all` is set, otherwise only those watching
    // `changed` (plus the objective bound). Returns false on failure and sets
    // failed_constraint() to the model index of the failing constraint, or -1
    // for the objective bound.
    bool fixpoint(std::vector<Domain> &dom, const std::vector<VarId> &changed, bool all);

    long failed_constraint() const { return failed_; }
    std::uint64_t propagations() const { return propagations_; }

private:
    void enqueue(std::size_t p);

    std::vector<std::unique_ptr<Propagator>> props_;
    std::vector<long> origin_; // model constraint index, -1 for the bound
    std::vector<std::vector<std::size_t>> watchers_;
    std::vector<bool> queued_;
    std::deque<std::size_t> cheap_, costly_;
    LinearPropagator *bound_ = nullptr;
    std::size_t bound_index_ = 0;
    long failed_ = -1;
    std::uint64_t propagations_ = 0;
};

} // namespace weave::cp::detail
