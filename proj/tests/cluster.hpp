#pragma once

// Small cluster states for compiler and runtime tests, plus a brute-force
// reference that tries every placement directly against the store checker.

#include "fixtures.hpp"
#include "weave/compiler/compiler.hpp"
#include "weave/sql/classify.hpp"
#include "weave/sql/parser.hpp"
#include "weave/store/check.hpp"
#include "weave/store/store.hpp"

#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace weave::testing {

struct PodSpec {
    std::string name;
    std::int64_t cpu = 1;
    bool affinity = false;
    Value node = Unset{}; // placed when set
};

struct NodeSpec {
    std::string name;
    std::int64_t cpu = 10;
    bool healthy = true;
};

inline store::Store make_store(const sql::ClassifiedProgram &prog)
{
    store::Store s;
    for (const auto &t : prog.tables)
        s.create_table(t);
    return s;
}

inline void add_pods(store::Store &s, const std::vector<PodSpec> &pods)
{
    std::vector<store::Row> rows;
    for (const auto &p : pods)
        rows.push_back({p.name, std::string("Pending"), p.cpu, p.affinity, p.node});
    s.insert_rows("pending_pod", std::move(rows));
}

inline void add_nodes(store::Store &s, const std::vector<NodeSpec> &nodes)
{
    std::vector<store::Row> rows;
    for (const auto &n : nodes)
        rows.push_back({n.name, !n.healthy, false, false, true, n.cpu});
    s.insert_rows("node", std::move(rows));
}

inline sql::ClassifiedProgram classify(const std::string &text)
{
    return sql::classify_views(sql::parse_program(text, "<test>"));
}

// Applies a solution's deltas to a copy of the store.
inline store::Store apply(const store::Store &s, const compiler::GroundModel &g, const std::vector<std::int64_t> &a)
{
    store::Store out = s;
    auto d = g.deltas(a);
    out.apply_deltas(d);
    return out;
}

// Every assignment of the cells to `choices` (and unset when allowed) whose
// resulting store passes the hard-view checker. Each result lists the
// values in cell order.
inline std::set<std::vector<Value>> brute_force(const store::Store &s, const sql::ClassifiedProgram &prog,
                                                const std::vector<compiler::Cell> &cells,
                                                const std::vector<Value> &choices, bool allow_unset)
{
    std::vector<Value> options = choices;
    if (allow_unset)
        options.push_back(Unset{});
    std::set<std::vector<Value>> out;
    std::vector<Value> pick(cells.size());
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == cells.size()) {
            store::Store t = s;
            std::vector<store::Delta> d;
            for (std::size_t i = 0; i < cells.size(); ++i)
                d.push_back({cells[i].table, cells[i].row_key, cells[i].column_name, pick[i]});
            t.apply_deltas(d);
            if (store::check_hard_views(t, prog).empty())
                out.insert(pick);
            return;
        }
        for (const auto &v : options) {
            pick[k] = v;
            rec(k + 1);
        }
    };
    rec(0);
    return out;
}

} // namespace weave::testing
