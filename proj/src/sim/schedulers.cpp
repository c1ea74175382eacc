#include "weave/sim/sim.hpp"

#include "weave/compiler/compiler.hpp"
#include "weave/runtime/engine.hpp"

#include <algorithm>
#include <queue>

namespace weave::sim {

std::size_t Trace::placed() const
{
    std::size_t n = 0;
    if (!final_state.has_table("pod"))
        return 0;
    auto col = *final_state.def("pod").column_index("node_name");
    for (const auto &r : final_state.rows("pod"))
        n += !is_unset(r[col]);
    return n;
}

double Trace::placed_fraction() const
{
    return total_pods ? static_cast<double>(placed()) / static_cast<double>(total_pods) : 1.0;
}

namespace {

struct Pod {
    PodRequest req;
    Value node = Unset{};
};

// Pods known to the scheduler, mirrored into the pod table on every change.
class State {
public:
    State(const ClusterSpec &cluster, const Workload &w, const sql::ClassifiedProgram &program) : cluster_(cluster)
    {
        for (const auto &t : program.tables)
            store.create_table(t);
        load_cluster(store, cluster);
        // Affinity rows may name pods that have not arrived; the views join
        // them against the pod table, so they are inert until then.
        store.insert_rows("pod_affinity", w.pod_affinity);
        store.insert_rows("pod_anti_affinity", w.pod_anti_affinity);
    }

    void add(const PodRequest &p)
    {
        index_[p.name] = pods.size();
        pods.push_back({p, Unset{}});
    }

    void remove(const std::string &name)
    {
        auto it = index_.find(name);
        pods.erase(pods.begin() + static_cast<std::ptrdiff_t>(it->second));
        index_.clear();
        for (std::size_t i = 0; i < pods.size(); ++i)
            index_[pods[i].req.name] = i;
    }

    Pod &pod(const std::string &name) { return pods[index_.at(name)]; }
    bool has(const std::string &name) const { return index_.count(name) > 0; }

    void sync()
    {
        store.clear_rows("pod");
        std::vector<store::Row> rows;
        for (const auto &p : pods)
            rows.push_back({p.req.name, p.req.app, p.req.priority, p.req.cpu, p.req.mem, p.node});
        store.insert_rows("pod", std::move(rows));
    }

    std::int64_t spare_cpu(const std::string &node) const
    {
        std::int64_t cap = 0;
        for (const auto &n : cluster_.nodes)
            if (n.name == node)
                cap = n.cpu;
        for (const auto &p : pods)
            if (p.node == Value(node))
                cap -= p.req.cpu;
        return cap;
    }

    std::size_t placed() const
    {
        return static_cast<std::size_t>(
            std::count_if(pods.begin(), pods.end(), [](const Pod &p) { return !is_unset(p.node); }));
    }

    std::map<std::int64_t, std::size_t> placed_by_priority() const
    {
        std::map<std::int64_t, std::size_t> out;
        for (const auto &p : pods)
            if (!is_unset(p.node))
                ++out[p.req.priority];
        return out;
    }

    store::Store store;
    std::vector<Pod> pods;

private:
    const ClusterSpec &cluster_;
    std::map<std::string, std::size_t> index_;
};

// Whether the single pending pod in `state` can run on `node`.
bool fits(const compiler::Template &t, const State &state, const std::string &node)
{
    auto g = compiler::bind(t, state.store);
    if (g.cells.size() != 1)
        return false;
    auto &dom = g.model.vars[static_cast<std::size_t>(g.cells[0].var)].domain;
    auto it = std::find(g.text_values.begin(), g.text_values.end(), node);
    if (it == g.text_values.end())
        return false;
    auto id = static_cast<std::int64_t>(it - g.text_values.begin());
    if (!dom.contains(id))
        return false;
    dom = cp::Domain::of({id});
    cp::SolveOptions o;
    o.optimize = false;
    o.budget = cp::Budget::of_nodes(10'000);
    return cp::solve(g.model, o).has_solution();
}

struct Arrival {
    PodRequest pod;
    double time;
    int attempt;
    bool operator>(const Arrival &o) const { return time != o.time ? time > o.time : pod.name > o.pod.name; }
};

} // namespace

Trace greedy_schedule(const ClusterSpec &cluster, const Workload &w, const std::string &policy_text, bool preempt)
{
    auto t = compiler::compile(policy_text);
    State state(cluster, w, t.program);
    std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> queue;
    for (const auto &p : w.pods)
        queue.push({p, p.arrival_ms, 0});
    Trace trace;
    trace.total_pods = w.pods.size();
    const int max_attempts = 3;
    const double backoff_ms = 1000;
    int step = 0;
    while (!queue.empty()) {
        Arrival a = queue.top();
        queue.pop();
        state.add(a.pod);
        state.sync();

        std::vector<std::string> order;
        for (const auto &n : cluster.nodes)
            order.push_back(n.name);
        std::stable_sort(order.begin(), order.end(), [&](const std::string &x, const std::string &y) {
            auto sx = state.spare_cpu(x), sy = state.spare_cpu(y);
            return sx != sy ? sx > sy : x < y;
        });
        Event ev;
        ev.time_ms = a.time;
        ev.batch = step++;
        ev.pods = 1;
        std::optional<std::string> chosen;
        for (const auto &n : order)
            if (fits(t, state, n)) {
                chosen = n;
                break;
            }

        std::vector<std::string> evicted;
        if (!chosen && preempt) {
            // Single-node preemption: the node needing the fewest evictions
            // of strictly lower priority pods, lowest priority first.
            std::optional<std::vector<std::string>> best;
            for (const auto &n : order) {
                std::vector<Pod> victims;
                for (const auto &p : state.pods)
                    if (p.node == Value(n) && p.req.priority < a.pod.priority)
                        victims.push_back(p);
                std::stable_sort(victims.begin(), victims.end(),
                                 [](const Pod &x, const Pod &y) { return x.req.priority < y.req.priority; });
                State trial = state;
                std::vector<std::string> names;
                for (const auto &v : victims) {
                    if (best && names.size() + 1 >= best->size())
                        break;
                    trial.remove(v.req.name);
                    names.push_back(v.req.name);
                    trial.sync();
                    if (fits(t, trial, n)) {
                        best = names;
                        chosen = n;
                        break;
                    }
                }
            }
            if (best)
                evicted = *best;
        }

        for (const auto &name : evicted) {
            Pod victim = state.pod(name);
            state.remove(name);
            queue.push({victim.req, a.time + backoff_ms, 0});
        }
        if (chosen) {
            state.pod(a.pod.name).node = *chosen;
            ev.placed = 1;
        } else {
            state.remove(a.pod.name);
            ev.failed = 1;
            if (preempt && a.attempt + 1 < max_attempts)
                queue.push({a.pod, a.time + backoff_ms * (1 << a.attempt), a.attempt + 1});
        }
        ev.evicted = evicted.size();
        trace.evictions += evicted.size();
        ev.status = chosen ? "placed" : "failed";
        ev.total_placed = state.placed();
        ev.placed_by_priority = state.placed_by_priority();
        trace.events.push_back(std::move(ev));
    }
    // Pods that never found a node are listed unplaced.
    for (const auto &p : w.pods)
        if (!state.has(p.name))
            state.add(p);
    state.sync();
    trace.final_state = state.store;
    return trace;
}

Trace batch_schedule(const ClusterSpec &cluster, const Workload &w, const std::string &policy_text,
                     const BatchOptions &opt)
{
    auto engine = runtime::Engine::compile(policy_text, policy_text, runtime::Reconfig{std::string("priority"), opt.max_moves});
    engine.set_rewrites(opt.rewrites);
    State state(cluster, w, engine.primary().program);
    engine.connect(state.store);
    Trace trace;
    trace.total_pods = w.pods.size();

    // Pods left unset by a call wait here, out of the store, so later models
    // only carry the new batch. They are retried in chunks once arrivals stop.
    std::vector<PodRequest> backlog;
    auto invoke = [&](double time, int batch, std::size_t batch_size) {
        state.sync();
        auto r = engine.solve_or_escalate(compiler::Scope::Pending, opt.budget);
        // The escalated objective only counts placements. When it evicts
        // nothing, park the pods it left out and solve the rest again so the
        // soft views pick among their nodes.
        std::vector<std::string> parked;
        if (r.escalated && r.outcome.has_solution() && std::none_of(r.deltas.begin(), r.deltas.end(), [&](const store::Delta &d) {
                return !is_unset(state.pod(std::get<std::string>(d.row_key)).node);
            })) {
            for (const auto &d : r.deltas)
                if (is_unset(d.new_value))
                    parked.push_back(std::get<std::string>(d.row_key));
            std::vector<Pod> saved;
            for (const auto &name : parked) {
                saved.push_back(state.pod(name));
                state.remove(name);
            }
            state.sync();
            auto again = engine.solve_once(compiler::Scope::Pending, opt.budget);
            if (again.outcome.has_solution()) {
                again.escalated = true;
                r = std::move(again);
            } else {
                parked.clear();
            }
            for (auto &p : saved)
                state.add(p.req);
            state.sync();
        }
        Event ev;
        ev.time_ms = time;
        ev.batch = batch;
        ev.pods = batch_size;
        ev.vars = r.model_stats.vars;
        ev.constraints = r.model_stats.constraints;
        ev.search_nodes = r.stats.nodes;
        ev.status = cp::status_name(r.outcome.status);
        ev.escalated = r.escalated;
        for (const auto &d : r.deltas) {
            auto &p = state.pod(std::get<std::string>(d.row_key));
            bool was = !is_unset(p.node);
            bool now = !is_unset(d.new_value);
            ev.placed += !was && now;
            ev.evicted += was && !now;
            p.node = d.new_value;
        }
        std::vector<std::string> left;
        for (const auto &p : state.pods)
            if (is_unset(p.node))
                left.push_back(p.req.name);
        for (const auto &name : left) {
            backlog.push_back(state.pod(name).req);
            state.remove(name);
        }
        ev.failed = left.size();
        trace.evictions += ev.evicted;
        ev.total_placed = state.placed();
        ev.placed_by_priority = state.placed_by_priority();
        trace.events.push_back(std::move(ev));
        return trace.events.back().placed;
    };

    std::size_t i = 0;
    int batch = 0;
    double clock = 0;
    const std::size_t b = std::max<std::size_t>(opt.b, 1);
    while (i < w.pods.size()) {
        std::size_t start = i;
        state.add(w.pods[i]);
        double last = w.pods[i].arrival_ms;
        ++i;
        while (i < w.pods.size() && i - start < b && w.pods[i].arrival_ms - last <= opt.window_ms) {
            state.add(w.pods[i]);
            last = w.pods[i].arrival_ms;
            ++i;
        }
        clock = i - start == b ? last : last + opt.window_ms;
        invoke(clock, batch++, i - start);
    }
    for (int round = 0; round < opt.retry_rounds && !backlog.empty(); ++round) {
        auto waiting = std::move(backlog);
        backlog.clear();
        std::size_t placed = 0;
        for (std::size_t k = 0; k < waiting.size(); k += b) {
            std::size_t end = std::min(waiting.size(), k + b);
            for (std::size_t j = k; j < end; ++j)
                state.add(waiting[j]);
            clock += opt.window_ms;
            placed += invoke(clock, batch++, end - k);
        }
        if (placed == 0)
            break;
    }
    for (const auto &p : backlog)
        state.add(p);
    state.sync();
    trace.final_state = state.store;
    return trace;
}

} // namespace weave::sim
