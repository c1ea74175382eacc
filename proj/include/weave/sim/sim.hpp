#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "weave/cp/solver.hpp"
#include "weave/store/store.hpp"

namespace weave::sim {

struct NodeSpec {
    std::string name;
    std::string zone;
    std::int64_t cpu = 0;
    std::int64_t mem = 0;
    std::vector<std::string> labels;
};

struct ClusterSpec {
    std::vector<NodeSpec> nodes;

    // n identical nodes spread round-robin over `zones` zones.
    static ClusterSpec uniform(int n, std::int64_t cpu, std::int64_t mem, int zones = 2);
};

// Per application: cache pods (pairwise on distinct nodes) and web pods
// (pairwise on distinct nodes, each next to a cache pod of its app).
struct AppSpec {
    int apps = 8;
    int cache = 5;
    int web = 5;
    double mean_cpu = 1000; // exponential, rounded up, truncated at node capacity
    double mean_mem = 1000;
    double interarrival_ms = 50;
    bool affinity = true;
    std::int64_t priority = 0;
};

struct PodRequest {
    std::string name;
    std::string app;
    std::int64_t priority = 0;
    std::int64_t cpu = 1;
    std::int64_t mem = 1;
    double arrival_ms = 0;
};

struct Workload {
    std::vector<PodRequest> pods; // arrival order
    std::vector<store::Row> pod_affinity;
    std::vector<store::Row> pod_anti_affinity;

    void append(const Workload &other);
};

// Deterministic for a fixed seed. Throws std::invalid_argument on a
// non-positive mean or group size.
Workload generate_workload(const ClusterSpec &cluster, const AppSpec &apps, std::uint64_t seed);

// The bundled schema plus the named policy files, read from `dir`.
std::string load_policies(const std::string &dir, const std::vector<std::string> &names);
// Directory holding the bundled policy files.
std::string default_policy_dir();

struct Event {
    double time_ms = 0;
    int batch = 0;
    std::size_t pods = 0;   // pods considered in this invocation
    std::size_t placed = 0; // newly placed
    std::size_t failed = 0;
    std::size_t evicted = 0;
    std::size_t vars = 0;
    std::size_t constraints = 0;
    std::uint64_t search_nodes = 0;
    std::string status;
    bool escalated = false;
    std::size_t total_placed = 0;
    std::map<std::int64_t, std::size_t> placed_by_priority;
};

struct Trace {
    std::vector<Event> events;
    std::size_t total_pods = 0;
    std::size_t evictions = 0;
    store::Store final_state;

    std::size_t placed() const;
    double placed_fraction() const;
};

struct BatchOptions {
    std::size_t b = 10;
    double window_ms = 200;
    cp::Budget budget = cp::Budget::of_nodes(50'000);
    bool rewrites = true;
    // Invocations after the last arrival while pods are still pending.
    int retry_rounds = 3;
    // On escalation, placed pods may also move to other nodes, at most this
    // many per call; unset allows evictions only.
    std::optional<std::int64_t> max_moves;
};

// One pod at a time: feasible nodes under the hard policies, most spare cpu
// first, ties by node name. With `preempt`, a failing pod may evict lower
// priority pods from one node; failed and evicted pods retry with backoff.
Trace greedy_schedule(const ClusterSpec &cluster, const Workload &w, const std::string &policy_text,
                      bool preempt = false);

// Batches of up to b pods, closed early when the next arrival is more than
// window_ms after the previous one, each solved with escalation.
Trace batch_schedule(const ClusterSpec &cluster, const Workload &w, const std::string &policy_text,
                     const BatchOptions &opt);

// Waves of low, mid and high priority pods; the high wave alone fills the
// cluster.
Workload preemption_workload(const ClusterSpec &cluster, int pods_per_wave, std::uint64_t seed);

struct Placement {
    std::string name;
    std::int64_t cpu = 1;
    std::int64_t mem = 1;
    std::string node;
};

struct RebalanceResult {
    std::map<std::string, std::int64_t> loads_before; // cpu used per node
    std::map<std::string, std::int64_t> loads_after;
    std::vector<std::pair<std::string, std::string>> migrations; // (vm, new node)
    std::int64_t spread_before = 0;
    std::int64_t spread_after = 0;
    cp::Status status = cp::Status::Unknown;
};

// Synthetic imbalanced VM placement: 40 VMs over 8 hosts by default.
std::vector<Placement> imbalanced_vms(const ClusterSpec &cluster, int vms, std::uint64_t seed);

// Moves at most k VMs to minimize the cpu load spread.
RebalanceResult rebalance(const ClusterSpec &cluster, const std::vector<Placement> &vms, std::int64_t k,
                          cp::Budget budget = cp::Budget::of_nodes(200'000));
// Baseline: up to k single moves, each the best spread reduction available.
RebalanceResult greedy_rebalance(const ClusterSpec &cluster, const std::vector<Placement> &vms, std::int64_t k);

// Fills a store created from the bundled schema.
void load_cluster(store::Store &s, const ClusterSpec &cluster);

} // namespace weave::sim
