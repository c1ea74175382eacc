#include <gtest/gtest.h>

#include "cluster.hpp"
#include "cp_oracle.hpp"
#include "weave/cp/solver.hpp"
#include "weave/error.hpp"

using namespace weave;
using namespace weave::testing;
using compiler::BindOptions;
using compiler::GroundModel;

namespace {

const char *kCapacity = R"sql(
-- @hard_constraint
create view constraint_capacity as
select node.name from node
join pending_pod on pending_pod.node_name = node.name
group by node.name, node.available_cpu_capacity
having sum(pending_pod.cpu_request) <= node.available_cpu_capacity;
)sql";

const char *kSpread = R"sql(
-- @hard_constraint
create view constraint_spread as
select count(*) from pending_pod
having all_different(pending_pod.node_name);
)sql";

std::string schema(std::initializer_list<const char *> parts)
{
    std::string s = kPodSchema;
    for (const char *p : parts)
        s += p;
    return s;
}

std::vector<NodeSpec> nodes(int n, std::int64_t cpu = 10)
{
    std::vector<NodeSpec> out;
    for (int i = 0; i < n; ++i)
        out.push_back({"n" + std::to_string(i), cpu, true});
    return out;
}

std::vector<PodSpec> pods(int n, std::int64_t cpu = 1)
{
    std::vector<PodSpec> out;
    for (int i = 0; i < n; ++i)
        out.push_back({"p" + std::to_string(i), cpu});
    return out;
}

// Decision-variable solutions of a ground model, decoded to store values.
std::set<std::vector<Value>> model_solutions(const GroundModel &g)
{
    auto r = enumerate(g.model, true);
    std::set<std::vector<Value>> out;
    for (const auto &a : r.all) {
        std::vector<Value> row;
        for (const auto &c : g.cells)
            row.push_back(g.decode(c, a[static_cast<std::size_t>(c.var)]));
        out.insert(row);
    }
    return out;
}

cp::SolveOutcome solve(const GroundModel &g, bool presolve = true)
{
    cp::SolveOptions o;
    o.budget = cp::Budget::of_nodes(1'000'000);
    o.presolve = presolve;
    return cp::solve(g.model, o);
}

} // namespace

TEST(Compiler, NodePredicatesBecomeMembership)
{
    auto t = compiler::compile(schema({kNodePredicates}));
    auto store = make_store(t.program);
    auto ns = nodes(4);
    ns[2].healthy = false;
    add_nodes(store, ns);
    add_pods(store, pods(3));

    auto g = compiler::bind(t, store);
    auto s = g.stats();
    EXPECT_EQ(s.decision_vars, 3u);
    EXPECT_EQ(s.memberships, 3u);
    EXPECT_EQ(s.bool_exprs, 0u);
    EXPECT_EQ(s.aux_vars, 0u);
    for (const auto &c : g.model.constraints) {
        const auto &m = std::get<cp::Membership>(c.body);
        EXPECT_EQ(m.values.size(), 3u);
        const auto &grp = g.model.groups[static_cast<std::size_t>(c.group)];
        EXPECT_EQ(grp.view, "constraint_node_predicates");
        ASSERT_EQ(grp.row_keys.size(), 1u);
    }
    auto out = solve(g);
    ASSERT_TRUE(out.has_solution());
    auto after = apply(store, g, out.assignment);
    EXPECT_TRUE(store::check_hard_views(after, t.program).empty());
    for (const auto &d : g.deltas(out.assignment))
        EXPECT_NE(d.new_value, Value(std::string("n2")));

    BindOptions naive;
    naive.rewrites = false;
    auto gn = compiler::bind(t, store, naive);
    EXPECT_EQ(gn.stats().memberships, 0u);
    EXPECT_EQ(model_solutions(g), model_solutions(gn));
}

// Rewritten and naive groundings accept exactly the placements that the
// store checker accepts, on random small clusters.
TEST(Compiler, RewriteAndNaiveMatchStoreChecker)
{
    std::vector<std::vector<const char *>> policies = {
        {kNodePredicates},
        {kNodePredicates, kCapacity},
        {kNodePredicates, kNodeAffinity},
        {kNodePredicates, kSpread},
        {kNodePredicates, kCapacity, kNodeAffinity},
    };
    int checked = 0;
    for (unsigned seed = 0; seed < 40; ++seed) {
        std::mt19937 rng(seed);
        const auto &pol = policies[seed % policies.size()];
        std::string text = kPodSchema;
        for (const char *p : pol)
            text += p;
        auto t = compiler::compile(text);
        auto store = make_store(t.program);
        int n_nodes = 2 + static_cast<int>(rng() % 3);
        auto ns = nodes(n_nodes, 2 + static_cast<std::int64_t>(rng() % 4));
        for (auto &n : ns)
            n.healthy = rng() % 4 != 0;
        add_nodes(store, ns);
        std::vector<PodSpec> ps;
        int n_pods = 2 + static_cast<int>(rng() % 3);
        for (int i = 0; i < n_pods; ++i) {
            PodSpec p{"p" + std::to_string(i), 1 + static_cast<std::int64_t>(rng() % 3), rng() % 2 == 0};
            if (rng() % 4 == 0)
                p.node = std::string(ns[rng() % ns.size()].name);
            ps.push_back(p);
        }
        add_pods(store, ps);
        std::vector<store::Row> labels, wants;
        for (const auto &n : ns)
            if (rng() % 2)
                labels.push_back({n.name, std::string("gpu")});
        for (const auto &p : ps)
            if (rng() % 2)
                wants.push_back({p.name, std::string("gpu")});
        store.insert_rows("node_label", labels);
        store.insert_rows("pod_affinity_label", wants);

        BindOptions opt;
        opt.allow_unset = seed % 3 == 0;
        auto gr = compiler::bind(t, store, opt);
        opt.rewrites = false;
        auto gn = compiler::bind(t, store, opt);
        ASSERT_LE(gr.cells.size(), 6u);

        std::vector<Value> choices;
        for (const auto &n : ns)
            choices.push_back(n.name);
        auto expected = brute_force(store, t.program, gr.cells, choices, opt.allow_unset);
        auto rewritten = model_solutions(gr);
        auto naive = model_solutions(gn);
        EXPECT_EQ(rewritten, expected) << "seed " << seed;
        EXPECT_EQ(naive, expected) << "seed " << seed;

        auto out = solve(gr);
        EXPECT_EQ(out.has_solution(), !expected.empty()) << "seed " << seed;
        if (out.has_solution()) {
            EXPECT_TRUE(store::check_hard_views(apply(store, gr, out.assignment), t.program).empty());
        }
        ++checked;
    }
    EXPECT_EQ(checked, 40);
}

TEST(Compiler, SumOfPredicateHasNoOptionalAuxiliaries)
{
    auto t = compiler::compile(schema({kNodePredicates, kCapacity}));
    auto store = make_store(t.program);
    add_nodes(store, nodes(50, 100));
    add_pods(store, pods(100));
    auto gr = compiler::bind(t, store);
    BindOptions naive;
    naive.rewrites = false;
    auto gn = compiler::bind(t, store, naive);
    EXPECT_EQ(gr.stats().aux_vars, 0u);
    EXPECT_GE(gn.stats().aux_vars, 5000u);
    EXPECT_EQ(gr.stats().literals, 5000u);
}

TEST(Compiler, AllDifferentAggregate)
{
    auto t = compiler::compile(schema({kNodePredicates, kSpread}));
    auto store = make_store(t.program);
    add_nodes(store, nodes(100));
    add_pods(store, pods(100));
    auto gr = compiler::bind(t, store);
    BindOptions naive;
    naive.rewrites = false;
    auto gn = compiler::bind(t, store, naive);
    EXPECT_EQ(gr.stats().all_different, 1u);
    EXPECT_EQ(gr.stats().pairwise_ne, 0u);
    EXPECT_EQ(gn.stats().all_different, 0u);
    EXPECT_EQ(gn.stats().pairwise_ne, 4950u);
}

TEST(Compiler, AllDifferentWithPlacedPodExcludesItsNode)
{
    auto t = compiler::compile(schema({kNodePredicates, kSpread}));
    auto store = make_store(t.program);
    add_nodes(store, nodes(3));
    auto ps = pods(3);
    ps[0].node = std::string("n1");
    add_pods(store, ps);
    auto g = compiler::bind(t, store);
    std::vector<Value> choices{std::string("n0"), std::string("n1"), std::string("n2")};
    EXPECT_EQ(model_solutions(g), brute_force(store, t.program, g.cells, choices, false));
    EXPECT_EQ(model_solutions(g).size(), 2u);
}

TEST(Compiler, ProvenanceIsTotal)
{
    auto t = compiler::compile(schema({kNodePredicates, kCapacity, kNodeAffinity, kLoadBalancing}));
    auto store = make_store(t.program);
    add_nodes(store, nodes(4));
    auto ps = pods(5);
    ps[1].affinity = true;
    add_pods(store, ps);
    store.insert_rows("node_label", {{std::string("n1"), std::string("ssd")}});
    store.insert_rows("pod_affinity_label", {{std::string("p1"), std::string("ssd")}});
    for (bool rewrites : {true, false}) {
        BindOptions opt;
        opt.rewrites = rewrites;
        auto g = compiler::bind(t, store, opt);
        std::set<std::string> names{"empty domain", "max_moves", "assigned", "kept"};
        for (const auto &v : t.ir.views)
            names.insert(v.name);
        for (const auto &c : g.model.constraints) {
            ASSERT_GE(c.group, 0);
            ASSERT_LT(static_cast<std::size_t>(c.group), g.model.groups.size());
            EXPECT_TRUE(names.count(g.model.groups[static_cast<std::size_t>(c.group)].view));
            for (auto v : cp::constraint_vars(c.body))
                ASSERT_LT(static_cast<std::size_t>(v), g.model.vars.size());
        }
    }
}

TEST(Compiler, ScopeCoversOnlyPendingRows)
{
    auto t = compiler::compile(schema({kNodePredicates, kCapacity}));
    auto store = make_store(t.program);
    add_nodes(store, nodes(50, 1000));
    std::vector<PodSpec> ps;
    for (int i = 0; i < 2400; ++i)
        ps.push_back({"placed" + std::to_string(i), 1, false, std::string("n" + std::to_string(i % 50))});
    for (int i = 0; i < 50; ++i)
        ps.push_back({"new" + std::to_string(i), 1});
    add_pods(store, ps);
    auto g = compiler::bind(t, store);
    EXPECT_EQ(g.stats().decision_vars, 50u);
    EXPECT_EQ(g.cells.size(), 50u);
    auto out = solve(g);
    ASSERT_EQ(out.status, cp::Status::Optimal);
    EXPECT_TRUE(store::check_hard_views(apply(store, g, out.assignment), t.program).empty());
}

TEST(Compiler, EmptyAffinitySetIsUnsat)
{
    auto t = compiler::compile(schema({kNodePredicates, kNodeAffinity}));
    auto store = make_store(t.program);
    add_nodes(store, nodes(3));
    auto ps = pods(2);
    ps[0].affinity = true;
    add_pods(store, ps);
    auto g = compiler::bind(t, store);
    auto out = solve(g);
    EXPECT_EQ(out.status, cp::Status::Unsat);
    auto core = cp::extract_core(g.model, cp::Budget::of_nodes(10'000));
    std::set<std::string> views;
    for (int gi : core.groups)
        views.insert(g.model.groups[static_cast<std::size_t>(gi)].label());
    EXPECT_EQ(views, (std::set<std::string>{"constraint_node_affinity[p0]"}));
}

TEST(Compiler, NotInRemovesValues)
{
    auto t = compiler::compile(schema({kNodePredicates, R"sql(
create view drained as select node.name as name from node where node.available_cpu_capacity < 5;
-- @hard_constraint
create view constraint_avoid_drained as
select * from pending_pod where pending_pod.node_name not in (select name from drained);
)sql"}));
    auto store = make_store(t.program);
    auto ns = nodes(3);
    ns[1].cpu = 2;
    add_nodes(store, ns);
    add_pods(store, pods(2));
    auto g = compiler::bind(t, store);
    EXPECT_EQ(g.stats().memberships, 2u);
    std::vector<Value> choices{std::string("n0"), std::string("n1"), std::string("n2")};
    auto sols = model_solutions(g);
    EXPECT_EQ(sols, brute_force(store, t.program, g.cells, choices, false));
    EXPECT_EQ(sols.size(), 4u);
}

TEST(Compiler, NoVariableColumns)
{
    std::string text = kPodSchema;
    text.erase(text.find("-- @variable_columns (node_name)"), 32);
    auto t = compiler::compile(text);
    EXPECT_TRUE(t.var_groups.empty());
    auto store = make_store(t.program);
    add_nodes(store, nodes(2));
    auto g = compiler::bind(t, store);
    EXPECT_EQ(g.model.vars.size(), 0u);
    auto out = solve(g);
    EXPECT_EQ(out.status, cp::Status::Optimal);
    EXPECT_TRUE(g.deltas(out.assignment).empty());
}

TEST(Compiler, NoPendingRows)
{
    auto t = compiler::compile(schema({kNodePredicates, kCapacity, kLoadBalancing}));
    auto store = make_store(t.program);
    add_nodes(store, nodes(2));
    add_pods(store, {{"p", 1, false, std::string("n0")}});
    auto g = compiler::bind(t, store);
    EXPECT_EQ(g.stats().decision_vars, 0u);
    EXPECT_TRUE(solve(g).has_solution());
}

TEST(Compiler, UnboundedVariableColumnRejected)
{
    EXPECT_THROW(compiler::compile(schema({R"sql(
-- @hard_constraint
create view constraint_not_x as
select * from pending_pod where pending_pod.node_name <> 'x';
)sql"})),
                 CompileError);
}

TEST(Compiler, VariableSumUnderVariableFilterRejected)
{
    auto t = compiler::compile(schema({kNodePredicates, R"sql(
-- @soft_constraint
create view weird as
select sum(pending_pod.cpu_request * 0 + node.available_cpu_capacity) from pending_pod
join node on pending_pod.node_name = node.name;
)sql"}));
    auto store = make_store(t.program);
    add_nodes(store, nodes(2));
    add_pods(store, pods(2));
    // Static summand under a variable join: fine.
    EXPECT_NO_THROW(compiler::bind(t, store));
}

// Maximizing the least spare capacity: compare against a direct computation
// over every placement.
TEST(Compiler, LoadBalanceOptimumMatchesBruteForce)
{
    for (unsigned seed = 0; seed < 12; ++seed) {
        std::mt19937 rng(seed + 100);
        auto t = compiler::compile(schema({kNodePredicates, kCapacity, kLoadBalancing}));
        auto store = make_store(t.program);
        int n_nodes = 2 + static_cast<int>(rng() % 2);
        auto ns = nodes(n_nodes);
        for (auto &n : ns)
            n.cpu = 4 + static_cast<std::int64_t>(rng() % 6);
        add_nodes(store, ns);
        std::vector<PodSpec> ps;
        for (int i = 0; i < 4; ++i)
            ps.push_back({"p" + std::to_string(i), 1 + static_cast<std::int64_t>(rng() % 4)});
        add_pods(store, ps);

        std::optional<std::int64_t> best;
        std::vector<int> pick(ps.size(), 0);
        std::function<void(std::size_t)> rec = [&](std::size_t k) {
            if (k == ps.size()) {
                std::vector<std::int64_t> spare;
                for (const auto &n : ns)
                    spare.push_back(n.cpu);
                for (std::size_t i = 0; i < ps.size(); ++i)
                    spare[static_cast<std::size_t>(pick[i])] -= ps[i].cpu;
                if (*std::min_element(spare.begin(), spare.end()) < 0)
                    return; // over capacity
                std::int64_t v = *std::min_element(spare.begin(), spare.end());
                best = best ? std::max(*best, v) : v;
                return;
            }
            for (int j = 0; j < n_nodes; ++j) {
                pick[k] = j;
                rec(k + 1);
            }
        };
        rec(0);

        for (bool rewrites : {true, false}) {
            BindOptions opt;
            opt.rewrites = rewrites;
            auto g = compiler::bind(t, store, opt);
            auto out = solve(g, rewrites);
            ASSERT_EQ(out.has_solution(), best.has_value()) << "seed " << seed;
            if (best) {
                EXPECT_EQ(out.status, cp::Status::Optimal);
                EXPECT_EQ(out.objective, *best) << "seed " << seed << " rewrites " << rewrites;
            }
        }
    }
}

TEST(Compiler, UnsetCellsAreGuarded)
{
    auto t = compiler::compile(schema({kNodePredicates, kCapacity}));
    auto store = make_store(t.program);
    add_nodes(store, nodes(1, 2));
    add_pods(store, pods(3));
    BindOptions opt;
    opt.allow_unset = true;
    opt.objective_assigned = true;
    auto g = compiler::bind(t, store, opt);
    auto out = solve(g);
    ASSERT_EQ(out.status, cp::Status::Optimal);
    EXPECT_EQ(out.objective, 2 * 4); // two of three cells assigned, weight n + 1
    int unset = 0;
    for (const auto &d : g.deltas(out.assignment))
        unset += is_unset(d.new_value);
    EXPECT_EQ(unset, 1);
    EXPECT_TRUE(store::check_hard_views(apply(store, g, out.assignment), t.program).empty());
}

TEST(Compiler, StatsJson)
{
    compiler::GroundStats s;
    s.vars = 3;
    auto j = compiler::stats_json(s);
    EXPECT_NE(j.find("\"vars\":3"), std::string::npos);
    EXPECT_NE(j.find("\"pairwise_ne\":0"), std::string::npos);
}
