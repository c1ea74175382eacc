#include "propagation.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace weave::cp::detail {

namespace {

using i128 = __int128;
constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();
constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();

std::int64_t clamp64(i128 v)
{
    if (v < kMin)
        return kMin;
    if (v > kMax)
        return kMax;
    return static_cast<std::int64_t>(v);
}

i128 floor_div(i128 a, i128 b) // b > 0
{
    i128 q = a / b;
    if ((a % b != 0) && (a < 0))
        --q;
    return q;
}

} // namespace

class LinearPropagator : public Propagator {
public:
    explicit LinearPropagator(Linear c) : c_(std::move(c)) {}

    void set_rhs(std::int64_t rhs) { c_.rhs = rhs; }

    std::vector<VarId> vars() const override
    {
        std::vector<VarId> v;
        for (const auto &t : c_.terms)
            v.push_back(t.var);
        return v;
    }

    bool run(Context &ctx) override
    {
        switch (c_.rel) {
        case Rel::LE: return upper(ctx, 1, c_.rhs);
        case Rel::LT: return upper(ctx, 1, static_cast<i128>(c_.rhs) - 1);
        case Rel::GE: return upper(ctx, -1, -static_cast<i128>(c_.rhs));
        case Rel::GT: return upper(ctx, -1, -static_cast<i128>(c_.rhs) - 1);
        case Rel::EQ:
            for (;;) {
                std::size_t before = ctx.modified.size();
                if (!upper(ctx, 1, c_.rhs) || !upper(ctx, -1, -static_cast<i128>(c_.rhs)))
                    return false;
                if (ctx.modified.size() == before)
                    return true;
            }
        case Rel::NE: return not_equal(ctx);
        }
        return true;
    }

private:
    // Enforces sign * sum(terms) <= rhs by bounds reasoning.
    bool upper(Context &ctx, int sign, i128 rhs)
    {
        for (;;) {
            i128 minsum = 0;
            for (const auto &t : c_.terms) {
                i128 a = static_cast<i128>(t.coef) * sign;
                const Domain &d = ctx.dom[t.var];
                minsum += a > 0 ? a * d.min() : a * d.max();
            }
            if (minsum > rhs)
                return false;
            bool changed = false;
            for (const auto &t : c_.terms) {
                i128 a = static_cast<i128>(t.coef) * sign;
                if (a == 0)
                    continue;
                const Domain &d = ctx.dom[t.var];
                i128 own = a > 0 ? a * d.min() : a * d.max();
                i128 slack = rhs - (minsum - own);
                std::size_t before = ctx.modified.size();
                if (a > 0) {
                    if (!ctx.set_max(t.var, clamp64(floor_div(slack, a))))
                        return false;
                } else {
                    if (!ctx.set_min(t.var, clamp64(-floor_div(slack, -a))))
                        return false;
                }
                changed |= ctx.modified.size() != before;
            }
            if (!changed)
                return true;
        }
    }

    bool not_equal(Context &ctx)
    {
        i128 fixed = 0;
        const Term *open = nullptr;
        for (const auto &t : c_.terms) {
            if (t.coef == 0)
                continue;
            const Domain &d = ctx.dom[t.var];
            if (d.fixed()) {
                fixed += static_cast<i128>(t.coef) * d.value();
            } else if (open) {
                return true;
            } else {
                open = &t;
            }
        }
        if (!open)
            return fixed != c_.rhs;
        i128 rest = static_cast<i128>(c_.rhs) - fixed;
        if (rest % open->coef == 0) {
            i128 v = rest / open->coef;
            if (v >= kMin && v <= kMax)
                return ctx.remove(open->var, static_cast<std::int64_t>(v));
        }
        return true;
    }

    Linear c_;
};

namespace {

// Enforces (x rel c) on a domain.
bool enforce_const(Context &ctx, VarId x, Rel rel, std::int64_t c)
{
    switch (rel) {
    case Rel::EQ: return ctx.assign(x, c);
    case Rel::NE: return ctx.remove(x, c);
    case Rel::LT: return c == kMin ? ctx.assign(x, c) && ctx.remove(x, c) : ctx.set_max(x, c - 1);
    case Rel::LE: return ctx.set_max(x, c);
    case Rel::GT: return c == kMax ? ctx.assign(x, c) && ctx.remove(x, c) : ctx.set_min(x, c + 1);
    case Rel::GE: return ctx.set_min(x, c);
    }
    return true;
}

// 1: every value satisfies, 0: none does, -1: undecided.
int status_const(const Domain &d, Rel rel, std::int64_t c)
{
    switch (rel) {
    case Rel::EQ: return !d.contains(c) ? 0 : d.fixed() ? 1 : -1;
    case Rel::NE: return !d.contains(c) ? 1 : d.fixed() ? 0 : -1;
    case Rel::LT: return d.max() < c ? 1 : d.min() >= c ? 0 : -1;
    case Rel::LE: return d.max() <= c ? 1 : d.min() > c ? 0 : -1;
    case Rel::GT: return d.min() > c ? 1 : d.max() <= c ? 0 : -1;
    case Rel::GE: return d.min() >= c ? 1 : d.max() < c ? 0 : -1;
    }
    return -1;
}

Rel swap_rel(Rel r)
{
    switch (r) {
    case Rel::LT: return Rel::GT;
    case Rel::LE: return Rel::GE;
    case Rel::GT: return Rel::LT;
    case Rel::GE: return Rel::LE;
    default: return r;
    }
}

int status_vars(const Domain &x, Rel rel, const Domain &y)
{
    switch (rel) {
    case Rel::EQ: return !x.intersects(y) ? 0 : (x.fixed() && y.fixed()) ? 1 : -1;
    case Rel::NE: return !x.intersects(y) ? 1 : (x.fixed() && y.fixed()) ? 0 : -1;
    case Rel::LT: return x.max() < y.min() ? 1 : x.min() >= y.max() ? 0 : -1;
    case Rel::LE: return x.max() <= y.min() ? 1 : x.min() > y.max() ? 0 : -1;
    case Rel::GT: return status_vars(y, Rel::LT, x);
    case Rel::GE: return status_vars(y, Rel::LE, x);
    }
    return -1;
}

bool enforce_vars(Context &ctx, VarId x, Rel rel, VarId y)
{
    switch (rel) {
    case Rel::EQ: {
        Domain dx = ctx.dom[x];
        return ctx.intersect(x, ctx.dom[y]) && ctx.intersect(y, dx);
    }
    case Rel::NE:
        if (ctx.dom[x].fixed() && !ctx.remove(y, ctx.dom[x].value()))
            return false;
        if (ctx.dom[y].fixed() && !ctx.remove(x, ctx.dom[y].value()))
            return false;
        return true;
    case Rel::LT:
        return enforce_const(ctx, x, Rel::LT, ctx.dom[y].max()) && enforce_const(ctx, y, Rel::GT, ctx.dom[x].min());
    case Rel::LE:
        return ctx.set_max(x, ctx.dom[y].max()) && ctx.set_min(y, ctx.dom[x].min());
    case Rel::GT:
    case Rel::GE: return enforce_vars(ctx, y, swap_rel(rel), x);
    }
    return true;
}

class ReifiedPropagator : public Propagator {
public:
    explicit ReifiedPropagator(Reified c) : c_(std::move(c)) {}

    std::vector<VarId> vars() const override
    {
        std::vector<VarId> v{c_.b, c_.x};
        if (c_.y)
            v.push_back(*c_.y);
        return v;
    }

    bool run(Context &ctx) override
    {
        if (!ctx.set_min(c_.b, 0) || !ctx.set_max(c_.b, 1))
            return false;
        for (;;) {
            std::size_t before = ctx.modified.size();
            const Domain &b = ctx.dom[c_.b];
            if (b.fixed()) {
                Rel r = b.value() == 1 ? c_.rel : negate(c_.rel);
                bool ok = c_.y ? enforce_vars(ctx, c_.x, r, *c_.y) : enforce_const(ctx, c_.x, r, c_.c);
                if (!ok)
                    return false;
            } else {
                int s = c_.y ? status_vars(ctx.dom[c_.x], c_.rel, ctx.dom[*c_.y]) : status_const(ctx.dom[c_.x], c_.rel, c_.c);
                if (s >= 0 && !ctx.assign(c_.b, s))
                    return false;
            }
            if (ctx.modified.size() == before)
                return true;
        }
    }

private:
    Reified c_;
};

class BoolPropagator : public Propagator {
public:
    explicit BoolPropagator(BoolExpr c) : c_(std::move(c)) {}

    std::vector<VarId> vars() const override
    {
        std::vector<VarId> v;
        for (const auto &n : c_.nodes)
            if (n.kind == BoolNode::Lit)
                v.push_back(n.lit);
        return v;
    }

    bool run(Context &ctx) override
    {
        if (c_.nodes.empty())
            return false;
        const std::size_t n = c_.nodes.size();
        std::vector<int> val(n), need(n);
        for (;;) {
            // Three-valued bottom-up evaluation: 0, 1, or -1 for unknown.
            for (std::size_t i = 0; i < n; ++i) {
                const auto &nd = c_.nodes[i];
                switch (nd.kind) {
                case BoolNode::Const: val[i] = nd.value; break;
                case BoolNode::Lit: {
                    const Domain &d = ctx.dom[nd.lit];
                    if (!ctx.set_min(nd.lit, 0) || !ctx.set_max(nd.lit, 1))
                        return false;
                    val[i] = d.fixed() ? static_cast<int>(d.value()) : -1;
                    break;
                }
                case BoolNode::Not: val[i] = val[nd.kids[0]] < 0 ? -1 : 1 - val[nd.kids[0]]; break;
                case BoolNode::And:
                case BoolNode::Or: {
                    int absorbing = nd.kind == BoolNode::And ? 0 : 1;
                    bool unknown = false, hit = false;
                    for (int k : nd.kids) {
                        if (val[k] == absorbing)
                            hit = true;
                        else if (val[k] < 0)
                            unknown = true;
                    }
                    val[i] = hit ? absorbing : unknown ? -1 : 1 - absorbing;
                    break;
                }
                }
            }
            if (val[n - 1] == 0)
                return false;
            // Top-down forcing of required values.
            std::fill(need.begin(), need.end(), -1);
            need[n - 1] = 1;
            std::size_t before = ctx.modified.size();
            for (std::size_t j = n; j-- > 0;) {
                int r = need[j];
                if (r < 0 || val[j] >= 0) {
                    if (r >= 0 && val[j] != r)
                        return false;
                    continue;
                }
                const auto &nd = c_.nodes[j];
                switch (nd.kind) {
                case BoolNode::Const: break;
                case BoolNode::Lit:
                    if (!ctx.assign(nd.lit, r))
                        return false;
                    break;
                case BoolNode::Not:
                    if (!require(need, nd.kids[0], 1 - r))
                        return false;
                    break;
                case BoolNode::And:
                case BoolNode::Or: {
                    // Identity value: what every kid must take when r differs
                    // from the absorbing value.
                    int absorbing = nd.kind == BoolNode::And ? 0 : 1;
                    if (r != absorbing) {
                        for (int k : nd.kids)
                            if (!require(need, k, r))
                                return false;
                    } else {
                        int open = -1, count = 0;
                        for (int k : nd.kids)
                            if (val[k] < 0) {
                                open = k;
                                ++count;
                            }
                        if (count == 1 && !require(need, open, r))
                            return false;
                    }
                    break;
                }
                }
            }
            if (ctx.modified.size() == before)
                return true;
        }
    }

private:
    static bool require(std::vector<int> &need, int k, int v)
    {
        if (need[k] >= 0 && need[k] != v)
            return false;
        need[k] = v;
        return true;
    }

    BoolExpr c_;
};

class MembershipPropagator : public Propagator {
public:
    explicit MembershipPropagator(Membership c) : c_(std::move(c)) {}
    std::vector<VarId> vars() const override { return {c_.x}; }
    bool run(Context &ctx) override { return c_.negated ? ctx.subtract(c_.x, c_.values) : ctx.intersect(c_.x, c_.values); }

private:
    Membership c_;
};

class MinMaxPropagator : public Propagator {
public:
    explicit MinMaxPropagator(MinMax c) : c_(std::move(c)) {}

    std::vector<VarId> vars() const override
    {
        std::vector<VarId> v = c_.xs;
        v.push_back(c_.y);
        return v;
    }

    bool run(Context &ctx) override
    {
        if (c_.xs.empty())
            return false;
        for (;;) {
            std::size_t before = ctx.modified.size();
            if (!(c_.is_max ? run_max(ctx) : run_min(ctx)))
                return false;
            if (ctx.modified.size() == before)
                return true;
        }
    }

private:
    bool run_min(Context &ctx)
    {
        std::int64_t lo = kMax, hi = kMax;
        for (auto x : c_.xs) {
            lo = std::min(lo, ctx.dom[x].min());
            hi = std::min(hi, ctx.dom[x].max());
        }
        if (!ctx.set_min(c_.y, lo) || !ctx.set_max(c_.y, hi))
            return false;
        std::int64_t ylo = ctx.dom[c_.y].min(), yhi = ctx.dom[c_.y].max();
        VarId support = -1;
        int count = 0;
        for (auto x : c_.xs) {
            if (!ctx.set_min(x, ylo))
                return false;
            if (ctx.dom[x].min() <= yhi) {
                support = x;
                ++count;
            }
        }
        if (count == 0)
            return false;
        if (count == 1 && !ctx.set_max(support, yhi))
            return false;
        return true;
    }

    bool run_max(Context &ctx)
    {
        std::int64_t lo = kMin, hi = kMin;
        for (auto x : c_.xs) {
            lo = std::max(lo, ctx.dom[x].min());
            hi = std::max(hi, ctx.dom[x].max());
        }
        if (!ctx.set_min(c_.y, lo) || !ctx.set_max(c_.y, hi))
            return false;
        std::int64_t ylo = ctx.dom[c_.y].min(), yhi = ctx.dom[c_.y].max();
        VarId support = -1;
        int count = 0;
        for (auto x : c_.xs) {
            if (!ctx.set_max(x, yhi))
                return false;
            if (ctx.dom[x].max() >= ylo) {
                support = x;
                ++count;
            }
        }
        if (count == 0)
            return false;
        if (count == 1 && !ctx.set_min(support, ylo))
            return false;
        return true;
    }

    MinMax c_;
};

// Matching-based filtering for all_different: a maximum matching in the
// variable/value graph (Hopcroft-Karp), then removal of every edge that lies
// in no maximum matching, found through the strongly connected components of
// the residual graph and alternating paths from free values.
class AllDifferentPropagator : public Propagator {
public:
    explicit AllDifferentPropagator(AllDifferent c) : c_(std::move(c)) {}
    std::vector<VarId> vars() const override { return c_.vars; }
    bool expensive() const override { return true; }

    bool run(Context &ctx) override
    {
        const std::size_t n = c_.vars.size();
        if (n <= 1)
            return true;
        if (!forward_check(ctx))
            return false;
        std::uint64_t total = 0;
        for (auto v : c_.vars)
            total += ctx.dom[v].size();
        if (total > kMaxEdges)
            return true; // forward checking only on huge domains

        // Value universe.
        std::map<std::int64_t, int> index;
        std::vector<std::int64_t> value_of;
        std::vector<std::vector<int>> adj(n);
        for (std::size_t i = 0; i < n; ++i)
            for (auto v : ctx.dom[c_.vars[i]].values()) {
                auto [it, fresh] = index.emplace(v, static_cast<int>(value_of.size()));
                if (fresh)
                    value_of.push_back(v);
                adj[i].push_back(it->second);
            }
        const std::size_t m = value_of.size();
        if (m < n)
            return false;

        std::vector<int> match_var(n, -1), match_val(m, -1);
        if (hopcroft_karp(adj, match_var, match_val) < n)
            return false;

        // Residual graph: var -> its matched value, value -> var for unmatched edges.
        // Nodes 0..n-1 are variables, n..n+m-1 values.
        const std::size_t N = n + m;
        std::vector<std::vector<int>> g(N);
        for (std::size_t i = 0; i < n; ++i)
            for (int v : adj[i]) {
                if (match_var[i] == v)
                    g[i].push_back(static_cast<int>(n) + v);
                else
                    g[n + v].push_back(static_cast<int>(i));
            }
        // Values reachable from free values lie on even alternating paths.
        std::vector<bool> reach(N, false);
        std::vector<int> stack;
        for (std::size_t v = 0; v < m; ++v)
            if (match_val[v] < 0) {
                reach[n + v] = true;
                stack.push_back(static_cast<int>(n + v));
            }
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int w : g[u])
                if (!reach[w]) {
                    reach[w] = true;
                    stack.push_back(w);
                }
        }
        std::vector<int> comp = tarjan(g);
        for (std::size_t i = 0; i < n; ++i)
            for (int v : adj[i]) {
                if (match_var[i] == v || reach[n + v] || comp[i] == comp[n + v])
                    continue;
                if (!ctx.remove(c_.vars[i], value_of[v]))
                    return false;
            }
        return true;
    }

private:
    static constexpr std::uint64_t kMaxEdges = 200000;

    bool forward_check(Context &ctx)
    {
        for (;;) {
            std::size_t before = ctx.modified.size();
            for (std::size_t i = 0; i < c_.vars.size(); ++i) {
                const Domain &d = ctx.dom[c_.vars[i]];
                if (!d.fixed())
                    continue;
                std::int64_t v = d.value();
                for (std::size_t j = 0; j < c_.vars.size(); ++j)
                    if (j != i && !ctx.remove(c_.vars[j], v))
                        return false;
            }
            if (ctx.modified.size() == before)
                return true;
        }
    }

    static std::size_t hopcroft_karp(const std::vector<std::vector<int>> &adj, std::vector<int> &mu, std::vector<int> &mv)
    {
        const std::size_t n = adj.size();
        const int inf = std::numeric_limits<int>::max();
        std::vector<int> dist(n);
        std::size_t matched = 0;
        auto bfs = [&] {
            std::deque<int> q;
            bool found = false;
            for (std::size_t i = 0; i < n; ++i) {
                dist[i] = mu[i] < 0 ? 0 : inf;
                if (mu[i] < 0)
                    q.push_back(static_cast<int>(i));
            }
            while (!q.empty()) {
                int u = q.front();
                q.pop_front();
                for (int v : adj[u]) {
                    int w = mv[v];
                    if (w < 0)
                        found = true;
                    else if (dist[w] == inf) {
                        dist[w] = dist[u] + 1;
                        q.push_back(w);
                    }
                }
            }
            return found;
        };
        std::vector<std::size_t> it(n);
        auto dfs = [&](auto &&self, int u) -> bool {
            for (; it[u] < adj[u].size(); ++it[u]) {
                int v = adj[u][it[u]];
                int w = mv[v];
                if (w < 0 || (dist[w] == dist[u] + 1 && self(self, w))) {
                    mu[u] = v;
                    mv[v] = u;
                    return true;
                }
            }
            dist[u] = inf;
            return false;
        };
        while (bfs()) {
            std::fill(it.begin(), it.end(), 0);
            for (std::size_t i = 0; i < n; ++i)
                if (mu[i] < 0 && dfs(dfs, static_cast<int>(i)))
                    ++matched;
        }
        return matched;
    }

    // Iterative Tarjan; returns the component id of every node.
    static std::vector<int> tarjan(const std::vector<std::vector<int>> &g)
    {
        const int N = static_cast<int>(g.size());
        std::vector<int> idx(N, -1), low(N, 0), comp(N, -1), st;
        std::vector<bool> on(N, false);
        std::vector<std::pair<int, std::size_t>> call;
        int counter = 0, comps = 0;
        for (int s = 0; s < N; ++s) {
            if (idx[s] >= 0)
                continue;
            call.push_back({s, 0});
            idx[s] = low[s] = counter++;
            st.push_back(s);
            on[s] = true;
            while (!call.empty()) {
                auto &[u, k] = call.back();
                if (k < g[u].size()) {
                    int w = g[u][k++];
                    if (idx[w] < 0) {
                        idx[w] = low[w] = counter++;
                        st.push_back(w);
                        on[w] = true;
                        call.push_back({w, 0});
                    } else if (on[w]) {
                        low[u] = std::min(low[u], idx[w]);
                    }
                    continue;
                }
                int done = u;
                if (low[done] == idx[done]) {
                    int w;
                    do {
                        w = st.back();
                        st.pop_back();
                        on[w] = false;
                        comp[w] = comps;
                    } while (w != done);
                    ++comps;
                }
                call.pop_back();
                if (!call.empty())
                    low[call.back().first] = std::min(low[call.back().first], low[done]);
            }
        }
        return comp;
    }

    AllDifferent c_;
};

} // namespace

std::unique_ptr<Propagator> make_propagator(const ConstraintBody &c)
{
    return std::visit(
        [](const auto &k) -> std::unique_ptr<Propagator> {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Linear>)
                return std::make_unique<LinearPropagator>(k);
            else if constexpr (std::is_same_v<T, Reified>)
                return std::make_unique<ReifiedPropagator>(k);
            else if constexpr (std::is_same_v<T, BoolExpr>)
                return std::make_unique<BoolPropagator>(k);
            else if constexpr (std::is_same_v<T, AllDifferent>)
                return std::make_unique<AllDifferentPropagator>(k);
            else if constexpr (std::is_same_v<T, Membership>)
                return std::make_unique<MembershipPropagator>(k);
            else
                return std::make_unique<MinMaxPropagator>(k);
        },
        c);
}

Propagation::Propagation(const Model &m, const std::vector<std::size_t> &constraints)
    : watchers_(m.vars.size())
{
    for (auto i : constraints) {
        props_.push_back(make_propagator(m.constraints[i].body));
        origin_.push_back(static_cast<long>(i));
    }
    if (m.objective) {
        auto p = std::make_unique<LinearPropagator>(Linear{m.objective->terms, Rel::GE, kMin});
        bound_ = p.get();
        bound_index_ = props_.size();
        props_.push_back(std::move(p));
        origin_.push_back(-1);
    }
    for (std::size_t p = 0; p < props_.size(); ++p) {
        auto vs = props_[p]->vars();
        std::sort(vs.begin(), vs.end());
        vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
        for (auto v : vs)
            watchers_[v].push_back(p);
    }
    queued_.assign(props_.size(), false);
}

Propagation::~Propagation() = default;

void Propagation::set_objective_bound(std::int64_t bound)
{
    if (bound_)
        bound_->set_rhs(bound);
}

void Propagation::enqueue(std::size_t p)
{
    if (queued_[p])
        return;
    queued_[p] = true;
    (props_[p]->expensive() ? costly_ : cheap_).push_back(p);
}

bool Propagation::fixpoint(std::vector<Domain> &dom, const std::vector<VarId> &changed, bool all)
{
    if (all) {
        for (std::size_t p = 0; p < props_.size(); ++p)
            enqueue(p);
    } else {
        for (auto v : changed)
            for (auto p : watchers_[v])
                enqueue(p);
        if (bound_)
            enqueue(bound_index_);
    }
    Context ctx{dom, {}};
    while (!cheap_.empty() || !costly_.empty()) {
        std::size_t p;
        if (!cheap_.empty()) {
            p = cheap_.front();
            cheap_.pop_front();
        } else {
            p = costly_.front();
            costly_.pop_front();
        }
        queued_[p] = false;
        ++propagations_;
        ctx.modified.clear();
        if (!props_[p]->run(ctx)) {
            failed_ = origin_[p];
            for (auto q : cheap_)
                queued_[q] = false;
            for (auto q : costly_)
                queued_[q] = false;
            cheap_.clear();
            costly_.clear();
            return false;
        }
        std::sort(ctx.modified.begin(), ctx.modified.end());
        ctx.modified.erase(std::unique(ctx.modified.begin(), ctx.modified.end()), ctx.modified.end());
        for (auto v : ctx.modified)
            for (auto q : watchers_[v])
                if (q != p)
                    enqueue(q);
    }
    return true;
}

} // namespace weave::cp::detail
