#include "weave/sim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace weave::sim {

ClusterSpec ClusterSpec::uniform(int n, std::int64_t cpu, std::int64_t mem, int zones)
{
    ClusterSpec c;
    for (int i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "node%02d", i);
        c.nodes.push_back({buf, "zone" + std::to_string(i % std::max(zones, 1)), cpu, mem, {}});
    }
    return c;
}

void Workload::append(const Workload &other)
{
    pods.insert(pods.end(), other.pods.begin(), other.pods.end());
    pod_affinity.insert(pod_affinity.end(), other.pod_affinity.begin(), other.pod_affinity.end());
    pod_anti_affinity.insert(pod_anti_affinity.end(), other.pod_anti_affinity.begin(), other.pod_anti_affinity.end());
}

Workload generate_workload(const ClusterSpec &cluster, const AppSpec &spec, std::uint64_t seed)
{
    if (spec.mean_cpu <= 0 || spec.mean_mem <= 0)
        throw std::invalid_argument("demand means must be positive");
    if (spec.apps < 1 || spec.cache < 1 || spec.web < 0)
        throw std::invalid_argument("application groups must be non-empty");
    std::int64_t max_cpu = 1, max_mem = 1;
    for (const auto &n : cluster.nodes) {
        max_cpu = std::max(max_cpu, n.cpu);
        max_mem = std::max(max_mem, n.mem);
    }
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> cpu(1.0 / spec.mean_cpu), mem(1.0 / spec.mean_mem);
    auto draw = [&](std::exponential_distribution<double> &d, std::int64_t cap) {
        auto v = static_cast<std::int64_t>(std::ceil(d(rng)));
        return std::clamp<std::int64_t>(v, 1, cap);
    };
    Workload w;
    for (int a = 0; a < spec.apps; ++a) {
        std::string cache_app = "app" + std::to_string(a) + "-cache";
        std::string web_app = "app" + std::to_string(a) + "-web";
        for (int i = 0; i < spec.cache + spec.web; ++i) {
            bool is_cache = i < spec.cache;
            PodRequest p;
            p.app = is_cache ? cache_app : web_app;
            p.name = p.app + "-" + std::to_string(is_cache ? i : i - spec.cache);
            p.priority = spec.priority;
            p.cpu = draw(cpu, max_cpu);
            p.mem = draw(mem, max_mem);
            if (spec.affinity) {
                w.pod_anti_affinity.push_back({p.name, p.app, std::string("node")});
                if (!is_cache)
                    w.pod_affinity.push_back({p.name, cache_app});
            }
            w.pods.push_back(std::move(p));
        }
    }
    std::shuffle(w.pods.begin(), w.pods.end(), rng);
    for (std::size_t i = 0; i < w.pods.size(); ++i)
        w.pods[i].arrival_ms = static_cast<double>(i) * spec.interarrival_ms;
    return w;
}

std::string load_policies(const std::string &dir, const std::vector<std::string> &names)
{
    auto read = [&](const std::string &name) {
        std::ifstream in(dir + "/" + name + ".sql");
        if (!in)
            throw std::runtime_error("cannot read policy " + dir + "/" + name + ".sql");
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    std::string text = read("schema");
    for (const auto &n : names)
        text += "\n" + read(n);
    return text;
}

std::string default_policy_dir()
{
    if (const char *env = std::getenv("WEAVE_POLICY_DIR"))
        return env;
    return WEAVE_POLICY_DIR;
}

Workload preemption_workload(const ClusterSpec &cluster, int pods_per_wave, std::uint64_t seed)
{
    std::int64_t total_cpu = 0;
    for (const auto &n : cluster.nodes)
        total_cpu += n.cpu;
    // Every wave alone fills the cluster; pod sizes divide node capacity so
    // the high wave packs exactly.
    std::int64_t per_pod = std::max<std::int64_t>(1, total_cpu / std::max(pods_per_wave, 1));
    std::mt19937_64 rng(seed);
    Workload w;
    const char *names[] = {"low", "mid", "high"};
    for (int wave = 0; wave < 3; ++wave) {
        for (int i = 0; i < pods_per_wave; ++i) {
            PodRequest p;
            p.app = names[wave];
            p.name = p.app + "-" + std::to_string(i);
            p.priority = wave;
            p.cpu = per_pod;
            p.mem = 1;
            w.pods.push_back(std::move(p));
        }
        std::shuffle(w.pods.end() - pods_per_wave, w.pods.end(), rng);
    }
    // 50 ms apart within a wave, 5 s between waves.
    for (std::size_t i = 0; i < w.pods.size(); ++i) {
        auto wave = i / static_cast<std::size_t>(pods_per_wave);
        w.pods[i].arrival_ms = static_cast<double>(wave) * (5000 + 50.0 * pods_per_wave) +
                               50.0 * static_cast<double>(i % static_cast<std::size_t>(pods_per_wave));
    }
    return w;
}

void load_cluster(store::Store &s, const ClusterSpec &cluster)
{
    std::vector<store::Row> nodes, labels;
    for (const auto &n : cluster.nodes) {
        nodes.push_back({n.name, n.zone, false, false, false, true, n.cpu, n.mem});
        for (const auto &l : n.labels)
            labels.push_back({n.name, l});
    }
    s.insert_rows("node", std::move(nodes));
    s.insert_rows("node_label", std::move(labels));
}

} // namespace weave::sim
