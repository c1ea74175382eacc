// weave: compile policies, solve a cluster state from CSV, run simulations.

#include "weave/compiler/compiler.hpp"
#include "weave/error.hpp"
#include "weave/ir/comprehension.hpp"
#include "weave/runtime/engine.hpp"
#include "weave/sim/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

using namespace weave;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path &path, const std::string &text)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// "5s", "250ms" or "100000nodes".
cp::Budget parse_budget(const std::string &text)
{
    std::smatch m;
    if (!std::regex_match(text, m, std::regex(R"((\d+)\s*(ms|s|nodes))")))
        throw std::runtime_error("bad budget '" + text + "' (use 5s, 250ms or 100000nodes)");
    auto n = std::stoull(m[1]);
    if (m[2] == "nodes")
        return cp::Budget::of_nodes(n);
    return cp::Budget::of_time(std::chrono::milliseconds(m[2] == "s" ? n * 1000 : n));
}

std::string csv_field(const Value &v)
{
    if (is_unset(v))
        return "?";
    std::string s = to_string(v);
    if (s != "?" && s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s)
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

json stats_object(const compiler::GroundStats &s) { return json::parse(compiler::stats_json(s)); }

store::Store load_store(const sql::ClassifiedProgram &program, const std::string &data)
{
    store::Store s;
    for (const auto &def : program.tables) {
        s.create_table(def);
        fs::path p = fs::path(data) / (def.name + ".csv");
        if (!data.empty() && fs::exists(p))
            s.load_csv(def.name, read_file(p.string()));
    }
    return s;
}

int cmd_compile(const std::string &schema, const std::string &data, bool dump_model, bool dump_ir, bool naive,
                bool stats)
{
    auto t = compiler::compile(read_file(schema), schema);
    if (dump_ir)
        for (const auto &v : t.ir.views)
            std::cout << v.name << " = " << ir::dump(v.comp) << "\n";
    if (!dump_model && !stats) {
        if (!dump_ir)
            std::cout << "ok: " << t.program.tables.size() << " tables, " << t.views.size() << " views\n";
        return 0;
    }
    // Without --data the state is empty: no variable cells, but the shape
    // of the model is visible.
    auto s = load_store(t.program, data);
    compiler::BindOptions o;
    o.rewrites = !naive;
    auto g = compiler::bind(t, s, o);
    if (dump_model)
        std::cout << cp::dump(g.model);
    if (stats)
        std::cout << compiler::stats_json(g.stats()) << "\n";
    return 0;
}

struct SolveArgs {
    std::string schema, data, out, budget = "5s", scope = "pending", stats;
    bool escalate = false, naive = false;
};

int cmd_solve(const SolveArgs &a)
{
    auto text = read_file(a.schema);
    auto engine = a.escalate ? runtime::Engine::compile(text, text, runtime::Reconfig{})
                             : runtime::Engine::compile(text);
    engine.set_rewrites(!a.naive);
    auto s = load_store(engine.primary().program, a.data);
    engine.connect(s);
    auto scope = a.scope == "all" ? compiler::Scope::All : compiler::Scope::Pending;
    auto budget = parse_budget(a.budget);
    auto r = a.escalate ? engine.solve_or_escalate(scope, budget) : engine.solve_once(scope, budget);

    fs::path out = a.out.empty() ? fs::path(a.data) : fs::path(a.out);
    fs::create_directories(out);
    std::map<std::string, std::string> files;
    for (const auto &d : r.deltas) {
        auto &f = files[d.table];
        if (f.empty())
            f = "key,column,value\n";
        f += csv_field(d.row_key) + "," + d.column + "," + csv_field(d.new_value) + "\n";
    }
    for (const auto &[table, body] : files)
        write_file(out / (table + ".delta.csv"), body);

    json j;
    j["status"] = cp::status_name(r.outcome.status);
    j["escalated"] = r.escalated;
    j["objective"] = r.outcome.objective;
    j["timed_out"] = r.outcome.timed_out;
    j["nodes"] = r.stats.nodes;
    j["failures"] = r.stats.failures;
    j["wall_ms"] = r.stats.wall_ms;
    j["bind_ms"] = r.bind_ms;
    j["model"] = stats_object(r.model_stats);
    if (!a.stats.empty())
        write_file(a.stats, j.dump(2) + "\n");

    std::cout << cp::status_name(r.outcome.status) << (r.escalated ? " (escalated)" : "") << ": " << r.deltas.size()
              << " cells\n";
    if (r.outcome.status == cp::Status::Unsat) {
        for (const auto &l : engine.explain_unsat(r))
            std::cerr << l << "\n";
        return 2;
    }
    return r.outcome.has_solution() ? 0 : 3;
}

struct SimArgs {
    std::string scenario = "affinity", out = "sim_out";
    int nodes = 10, apps = 8;
    std::size_t b = 10;
    std::uint64_t seed = 1;
};

const char *kTraceHeader = "mode,time_ms,batch,pods,placed,failed,evicted,vars,constraints,search_nodes,status,"
                           "escalated,total_placed,placed_p0,placed_p1,placed_p2\n";

std::string trace_rows(const sim::Trace &t, const std::string &mode)
{
    std::string s;
    for (const auto &e : t.events) {
        auto at = [&](std::int64_t p) { return e.placed_by_priority.count(p) ? e.placed_by_priority.at(p) : 0; };
        std::ostringstream o;
        o << mode << "," << e.time_ms << "," << e.batch << "," << e.pods << "," << e.placed << "," << e.failed << ","
          << e.evicted << "," << e.vars << "," << e.constraints << "," << e.search_nodes << "," << e.status << ","
          << e.escalated << "," << e.total_placed << "," << at(0) << "," << at(1) << "," << at(2) << "\n";
        s += o.str();
    }
    return s;
}

json trace_metrics(const sim::Trace &t)
{
    json j;
    j["placed"] = t.placed();
    j["total_pods"] = t.total_pods;
    j["placed_fraction"] = t.placed_fraction();
    j["evictions"] = t.evictions;
    json sizes = json::array();
    for (const auto &e : t.events)
        sizes.push_back({{"vars", e.vars}, {"constraints", e.constraints}});
    j["invocations"] = sizes;
    return j;
}

std::string loads_csv(const std::map<std::string, std::int64_t> &loads)
{
    std::string s = "node,cpu_used\n";
    for (const auto &[n, v] : loads)
        s += n + "," + std::to_string(v) + "\n";
    return s;
}

int cmd_sim(const SimArgs &a)
{
    fs::path out(a.out);
    fs::create_directories(out);
    auto dir = sim::default_policy_dir();
    json metrics;
    metrics["scenario"] = a.scenario;
    metrics["seed"] = a.seed;
    if (a.scenario == "rebalance") {
        auto c = sim::ClusterSpec::uniform(a.nodes, 10000, 1000);
        auto vms = sim::imbalanced_vms(c, 5 * a.nodes, a.seed);
        auto r = sim::rebalance(c, vms, static_cast<std::int64_t>(a.b));
        auto g = sim::greedy_rebalance(c, vms, static_cast<std::int64_t>(a.b));
        write_file(out / "loads_before.csv", loads_csv(r.loads_before));
        write_file(out / "loads_after.csv", loads_csv(r.loads_after));
        std::string trace = "vm,node\n";
        for (const auto &[vm, node] : r.migrations)
            trace += vm + "," + node + "\n";
        write_file(out / "trace.csv", trace);
        metrics["max_moves"] = a.b;
        metrics["status"] = cp::status_name(r.status);
        metrics["spread_before"] = r.spread_before;
        metrics["spread_after"] = r.spread_after;
        metrics["migrations"] = r.migrations.size();
        metrics["greedy_spread_after"] = g.spread_after;
        write_file(out / "metrics.json", metrics.dump(2) + "\n");
        std::cout << "spread " << r.spread_before << " -> " << r.spread_after << " (" << r.migrations.size()
                  << " migrations), greedy -> " << g.spread_after << "\n";
        return 0;
    }

    sim::ClusterSpec c;
    sim::Workload w;
    std::string policy;
    bool preempt = false;
    if (a.scenario == "affinity" || a.scenario == "hetero") {
        if (a.scenario == "hetero") {
            for (int i = 0; i < a.nodes; ++i) {
                std::int64_t cap = 2000 + 1000 * (i % 4);
                c.nodes.push_back({"node" + std::to_string(i), "zone" + std::to_string(i % 2), cap, cap, {}});
            }
        } else {
            c = sim::ClusterSpec::uniform(a.nodes, 4000, 4000);
        }
        sim::AppSpec spec;
        spec.apps = a.apps;
        spec.mean_cpu = spec.mean_mem = 400;
        w = sim::generate_workload(c, spec, a.seed);
        policy = sim::load_policies(dir, {"node_predicates", "capacity", "inter_pod_affinity", "load_balance"});
    } else if (a.scenario == "preempt") {
        c = sim::ClusterSpec::uniform(a.nodes, 4000, 4000);
        w = sim::preemption_workload(c, 2 * a.nodes, a.seed);
        policy = sim::load_policies(dir, {"node_predicates", "capacity"});
        preempt = true;
    } else {
        throw std::runtime_error("unknown scenario " + a.scenario);
    }
    auto g = sim::greedy_schedule(c, w, policy, preempt);
    sim::BatchOptions o;
    o.b = a.b;
    auto bt = sim::batch_schedule(c, w, policy, o);
    write_file(out / "trace.csv", kTraceHeader + trace_rows(g, "greedy") + trace_rows(bt, "batch"));
    metrics["greedy"] = trace_metrics(g);
    metrics["batch"] = trace_metrics(bt);
    write_file(out / "metrics.json", metrics.dump(2) + "\n");
    std::cout << "greedy placed " << g.placed() << "/" << g.total_pods << ", batch (b=" << a.b << ") placed "
              << bt.placed() << "/" << bt.total_pods << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"weave: cluster policies as SQL views, solved as constraint models"};
    app.require_subcommand(1);

    std::string schema, data;
    bool dump_model = false, dump_ir = false, naive = false, stats = false;
    auto *compile = app.add_subcommand("compile", "Compile a schema and its views");
    compile->add_option("schema", schema, "Schema file")->required()->check(CLI::ExistingFile);
    compile->add_option("--data", data, "Ground against <table>.csv files here")->check(CLI::ExistingDirectory);
    compile->add_flag("--dump-model", dump_model, "Print the ground model");
    compile->add_flag("--dump-ir", dump_ir, "Print each view in comprehension form");
    compile->add_flag("--no-rewrites", naive, "Use the naive encodings");
    compile->add_flag("--stats", stats, "Print model counts as JSON");

    SolveArgs sa;
    auto *solve = app.add_subcommand("solve", "Solve a cluster state loaded from CSV files");
    solve->add_option("--schema", sa.schema, "Schema file")->required()->check(CLI::ExistingFile);
    solve->add_option("--data", sa.data, "Directory with <table>.csv files")->required()->check(CLI::ExistingDirectory);
    solve->add_option("--out", sa.out, "Directory for <table>.delta.csv (default: --data)");
    solve->add_option("--budget", sa.budget, "5s, 250ms or 100000nodes")->capture_default_str();
    solve->add_option("--scope", sa.scope, "Rows to solve for")->check(CLI::IsMember({"pending", "all"}))
        ->capture_default_str();
    solve->add_flag("--escalate", sa.escalate, "On unsat or timeout, re-solve allowing evictions");
    solve->add_flag("--no-rewrites", sa.naive, "Use the naive encodings");
    solve->add_option("--stats", sa.stats, "Write solver statistics JSON here");

    SimArgs ma;
    auto *simc = app.add_subcommand("sim", "Run a scheduling scenario");
    simc->add_option("--scenario", ma.scenario)->check(CLI::IsMember({"affinity", "hetero", "preempt", "rebalance"}))
        ->capture_default_str();
    simc->add_option("--nodes", ma.nodes)->check(CLI::PositiveNumber)->capture_default_str();
    simc->add_option("--apps", ma.apps)->check(CLI::PositiveNumber)->capture_default_str();
    simc->add_option("--b", ma.b, "Batch size; migration budget for rebalance")->capture_default_str();
    simc->add_option("--seed", ma.seed)->capture_default_str();
    simc->add_option("--out", ma.out)->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*compile)
            return cmd_compile(schema, data, dump_model, dump_ir, naive, stats);
        if (*solve)
            return cmd_solve(sa);
        return cmd_sim(ma);
    } catch (const std::exception &e) {
        std::cerr << "weave: " << e.what() << "\n";
        return 1;
    }
}
