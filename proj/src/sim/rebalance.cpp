#include "weave/sim/sim.hpp"

#include "weave/compiler/compiler.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace weave::sim {

namespace {

std::map<std::string, std::int64_t> loads(const ClusterSpec &cluster, const std::vector<Placement> &vms)
{
    std::map<std::string, std::int64_t> out;
    for (const auto &n : cluster.nodes)
        out[n.name] = 0;
    for (const auto &v : vms)
        out[v.node] += v.cpu;
    return out;
}

std::int64_t spread(const std::map<std::string, std::int64_t> &l)
{
    if (l.empty())
        return 0;
    auto [lo, hi] = std::minmax_element(l.begin(), l.end(),
                                        [](const auto &a, const auto &b) { return a.second < b.second; });
    return hi->second - lo->second;
}

bool fits(const ClusterSpec &cluster, const std::vector<Placement> &vms)
{
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> used;
    for (const auto &v : vms) {
        used[v.node].first += v.cpu;
        used[v.node].second += v.mem;
    }
    for (const auto &n : cluster.nodes)
        if (used[n.name].first > n.cpu || used[n.name].second > n.mem)
            return false;
    return true;
}

} // namespace

std::vector<Placement> imbalanced_vms(const ClusterSpec &cluster, int vms, std::uint64_t seed)
{
    if (cluster.nodes.empty())
        throw std::invalid_argument("imbalanced_vms: empty cluster");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int64_t> cpu(100, 800);
    // Host i is picked with weight 2^-i, so the first hosts pile up.
    std::vector<double> w;
    for (std::size_t i = 0; i < cluster.nodes.size(); ++i)
        w.push_back(std::ldexp(1.0, -static_cast<int>(i)));
    std::discrete_distribution<std::size_t> host(w.begin(), w.end());
    std::map<std::string, std::int64_t> used;
    std::vector<Placement> out;
    for (int i = 0; i < vms; ++i) {
        Placement p{"vm" + std::to_string(i), cpu(rng), 1, ""};
        std::size_t h = host(rng);
        for (std::size_t k = 0; k < cluster.nodes.size() && p.node.empty(); ++k) {
            const auto &n = cluster.nodes[(h + k) % cluster.nodes.size()];
            if (used[n.name] + p.cpu <= n.cpu)
                p.node = n.name;
        }
        if (p.node.empty())
            continue;
        used[p.node] += p.cpu;
        out.push_back(p);
    }
    return out;
}

RebalanceResult rebalance(const ClusterSpec &cluster, const std::vector<Placement> &vms, std::int64_t k,
                          cp::Budget budget)
{
    auto t = compiler::compile(load_policies(default_policy_dir(), {"node_predicates", "capacity", "rebalance"}));
    store::Store s;
    for (const auto &def : t.program.tables)
        s.create_table(def);
    load_cluster(s, cluster);
    std::vector<store::Row> rows;
    for (const auto &v : vms)
        rows.push_back({v.name, std::string("vm"), std::int64_t{0}, v.cpu, v.mem, v.node});
    s.insert_rows("pod", std::move(rows));

    compiler::BindOptions opt;
    opt.scope = compiler::Scope::All;
    opt.max_moves = k;
    opt.objective_kept = true;
    auto g = compiler::bind(t, s, opt);
    cp::SolveOptions so;
    so.budget = budget;
    // Start from the greedy plan; the search only has to improve on it.
    so.hint = g.unchanged_hint();
    std::map<std::string, std::string> plan;
    for (const auto &v : vms)
        plan[v.name] = v.node;
    for (const auto &[vm, node] : greedy_rebalance(cluster, vms, k).migrations)
        plan[vm] = node;
    for (const auto &c : g.cells) {
        auto it = std::find(g.text_values.begin(), g.text_values.end(), plan[std::get<std::string>(c.row_key)]);
        if (it != g.text_values.end())
            so.hint[static_cast<std::size_t>(c.var)] = it - g.text_values.begin();
    }
    auto out = cp::solve(g.model, so);

    RebalanceResult r;
    r.loads_before = loads(cluster, vms);
    r.spread_before = spread(r.loads_before);
    r.status = out.status;
    std::vector<Placement> after = vms;
    if (out.has_solution()) {
        for (const auto &d : g.deltas(out.assignment)) {
            const auto &name = std::get<std::string>(d.row_key);
            auto it = std::find_if(after.begin(), after.end(), [&](const Placement &p) { return p.name == name; });
            const auto &node = std::get<std::string>(d.new_value);
            if (it->node != node)
                r.migrations.emplace_back(name, node);
            it->node = node;
        }
    }
    r.loads_after = loads(cluster, after);
    r.spread_after = spread(r.loads_after);
    return r;
}

RebalanceResult greedy_rebalance(const ClusterSpec &cluster, const std::vector<Placement> &vms, std::int64_t k)
{
    RebalanceResult r;
    r.loads_before = loads(cluster, vms);
    r.spread_before = spread(r.loads_before);
    std::vector<Placement> cur = vms;
    // Score is (spread, sum of squared loads); a move must lower it.
    auto score = [&](const std::vector<Placement> &p) {
        auto l = loads(cluster, p);
        std::int64_t sq = 0;
        for (const auto &[_, v] : l)
            sq += v * v;
        return std::pair{spread(l), sq};
    };
    for (std::int64_t step = 0; step < k; ++step) {
        auto best = score(cur);
        std::optional<std::pair<std::size_t, std::string>> move;
        for (std::size_t i = 0; i < cur.size(); ++i)
            for (const auto &n : cluster.nodes) {
                if (n.name == cur[i].node)
                    continue;
                auto trial = cur;
                trial[i].node = n.name;
                if (!fits(cluster, trial))
                    continue;
                auto s = score(trial);
                if (s < best) {
                    best = s;
                    move = {i, n.name};
                }
            }
        if (!move)
            break;
        cur[move->first].node = move->second;
        r.migrations.emplace_back(cur[move->first].name, move->second);
    }
    r.loads_after = loads(cluster, cur);
    r.spread_after = spread(r.loads_after);
    r.status = cp::Status::Feasible;
    return r;
}

} // namespace weave::sim
