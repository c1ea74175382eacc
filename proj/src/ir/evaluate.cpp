#include "weave/error.hpp"
#include "weave/ir/comprehension.hpp"

#include <algorithm>
#include <set>

namespace weave::ir {

namespace {

using sql::AggFn;
using sql::BinOp;
using sql::UnOp;
using store::Row;

using Env = std::vector<const Row *>;
using Group = std::vector<Env>;

bool truthy(const Value &v)
{
    const auto *b = std::get_if<bool>(&v);
    return b && *b;
}

class Evaluator {
public:
    Evaluator(const Program &program, const store::Store &store, int slots)
        : program_(program), store_(store), env_(static_cast<std::size_t>(std::max(slots, 1)) + 64, nullptr)
    {
    }

    store::Relation run(const Comprehension &c)
    {
        grow(c);
        store::Relation out;
        for (const auto &h : c.head) {
            out.columns.push_back(h.name);
            out.types.push_back(h.type);
        }
        Group matches;
        bind(c, 0, matches);
        if (!c.grouped) {
            for (const auto &env : matches) {
                Env saved = swap_in(env);
                Row row;
                for (const auto &h : c.head)
                    row.push_back(eval(*h.expr, nullptr));
                out.rows.push_back(std::move(row));
                env_ = std::move(saved);
            }
        } else {
            for (const auto &group : groups(c, matches)) {
                Env saved = group.empty() ? env_ : swap_in(group.front());
                if (!c.having || truthy(eval(*c.having, &group))) {
                    Row row;
                    for (const auto &h : c.head)
                        row.push_back(eval(*h.expr, &group));
                    out.rows.push_back(std::move(row));
                }
                env_ = std::move(saved);
            }
        }
        std::stable_sort(out.rows.begin(), out.rows.end());
        return out;
    }

private:
    // Slot numbers of nested comprehensions are below the root's count, but a
    // view evaluated on behalf of another reuses this evaluator with its own
    // numbering; make room for the largest slot seen.
    void grow(const Comprehension &c)
    {
        for (const auto &g : c.generators)
            if (static_cast<std::size_t>(g.slot) >= env_.size())
                env_.resize(static_cast<std::size_t>(g.slot) + 1, nullptr);
    }

    Env swap_in(const Env &env)
    {
        Env saved = env_;
        env_ = env;
        return saved;
    }

    const std::vector<Row> &relation(const Generator &g)
    {
        if (!g.is_view)
            return store_.rows(g.source);
        auto it = views_.find(g.source);
        if (it != views_.end())
            return it->second;
        const LoweredView *v = program_.find(g.source);
        if (!v)
            throw StoreError("unknown view " + g.source);
        if (references_variable(v->comp))
            throw StoreError("view " + g.source + " reads a variable column");
        // A nested view has its own slot numbering; evaluate it in isolation.
        Evaluator inner(program_, store_, v->comp.slot_count);
        inner.views_ = views_;
        auto rel = inner.run(v->comp);
        return views_.emplace(g.source, std::move(rel.rows)).first->second;
    }

    // Binds generators in order, applying each qualifier once every slot of
    // this comprehension it reads is bound.
    void bind(const Comprehension &c, std::size_t k, Group &out)
    {
        if (due_.find(&c) == due_.end()) {
            std::vector<std::vector<const Qualifier *>> due(c.generators.size());
            for (const auto &q : c.qualifiers) {
                std::vector<int> slots;
                collect_slots(*q.expr, slots);
                std::size_t last = 0;
                for (std::size_t i = 0; i < c.generators.size(); ++i)
                    if (std::find(slots.begin(), slots.end(), c.generators[i].slot) != slots.end())
                        last = i;
                due[last].push_back(&q);
            }
            due_[&c] = std::move(due);
        }
        if (k == c.generators.size()) {
            out.push_back(env_);
            return;
        }
        const auto &g = c.generators[k];
        const auto &due = due_[&c][k];
        for (const auto &row : relation(g)) {
            env_[g.slot] = &row;
            bool ok = true;
            for (const auto *q : due)
                if (!truthy(eval(*q->expr, nullptr))) {
                    ok = false;
                    break;
                }
            if (ok)
                bind(c, k + 1, out);
        }
        env_[g.slot] = nullptr;
    }

    std::vector<Group> groups(const Comprehension &c, const Group &matches)
    {
        std::vector<Group> out;
        if (c.group_key.empty()) {
            out.push_back(matches);
            return out;
        }
        std::map<Row, std::size_t> index;
        for (const auto &env : matches) {
            Env saved = swap_in(env);
            Row key;
            for (const auto &g : c.group_key)
                key.push_back(eval(*g, nullptr));
            env_ = std::move(saved);
            auto [it, inserted] = index.emplace(key, out.size());
            if (inserted)
                out.emplace_back();
            out[it->second].push_back(env);
        }
        return out;
    }

    Value eval(const Expr &e, const Group *group)
    {
        if (const auto *c = std::get_if<Col>(&e.node)) {
            const Row *row = env_[c->slot];
            if (!row)
                throw StoreError("column " + c->name + " read before its binder is bound");
            return (*row)[c->column];
        }
        if (const auto *k = std::get_if<Const>(&e.node))
            return k->value;
        if (const auto *u = std::get_if<Unary>(&e.node)) {
            Value v = eval(*u->operand, group);
            if (is_unset(v))
                return u->op == UnOp::Not ? Value{false} : v;
            if (u->op == UnOp::Not)
                return !std::get<bool>(v);
            return -std::get<std::int64_t>(v);
        }
        if (const auto *b = std::get_if<Binary>(&e.node)) {
            if (b->op == BinOp::And)
                return truthy(eval(*b->lhs, group)) && truthy(eval(*b->rhs, group));
            if (b->op == BinOp::Or)
                return truthy(eval(*b->lhs, group)) || truthy(eval(*b->rhs, group));
            Value l = eval(*b->lhs, group);
            Value r = eval(*b->rhs, group);
            if (is_unset(l) || is_unset(r))
                return sql::is_comparison(b->op) ? Value{b->op == BinOp::Ne} : Value{Unset{}};
            switch (b->op) {
            case BinOp::Eq: return l == r;
            case BinOp::Ne: return l != r;
            case BinOp::Lt: return l < r;
            case BinOp::Le: return l <= r;
            case BinOp::Gt: return l > r;
            case BinOp::Ge: return l >= r;
            case BinOp::Add: return std::get<std::int64_t>(l) + std::get<std::int64_t>(r);
            case BinOp::Sub: return std::get<std::int64_t>(l) - std::get<std::int64_t>(r);
            case BinOp::Mul: return std::get<std::int64_t>(l) * std::get<std::int64_t>(r);
            default: break;
            }
        }
        if (const auto *a = std::get_if<Agg>(&e.node)) {
            if (!group)
                throw StoreError("aggregate evaluated outside a group");
            return aggregate(*a, *group);
        }
        if (const auto *in = std::get_if<InQuery>(&e.node)) {
            Value l = eval(*in->lhs, group);
            auto sub = run(*in->sub);
            bool found = false;
            if (!is_unset(l))
                for (const auto &row : sub.rows)
                    found = found || (!is_unset(row[0]) && row[0] == l);
            return in->negated ? !found : found;
        }
        if (const auto *in = std::get_if<InSet>(&e.node)) {
            Value l = eval(*in->lhs, group);
            Row key;
            bool bound = true;
            for (const auto &k : in->keys) {
                key.push_back(eval(*k, group));
                bound = bound && !is_unset(key.back());
            }
            bool found = false;
            if (!is_unset(l) && bound) {
                const auto &set = keyed_set(*in);
                auto it = set.find(key);
                found = it != set.end() && it->second.count(l) > 0;
            }
            return in->negated ? !found : found;
        }
        if (const auto *s = std::get_if<Scalar>(&e.node)) {
            auto sub = run(*s->sub);
            if (sub.rows.size() != 1)
                throw StoreError("scalar subquery returned " + std::to_string(sub.rows.size()) + " rows");
            return sub.rows[0][0];
        }
        throw StoreError("unsupported expression");
    }

    const std::map<Row, std::set<Value>> &keyed_set(const InSet &in)
    {
        auto it = sets_.find(in.source.get());
        if (it != sets_.end())
            return it->second;
        std::map<Row, std::set<Value>> set;
        for (const auto &row : run(*in.source).rows) {
            if (is_unset(row[0]))
                continue;
            Row key(row.begin() + 1, row.end());
            if (std::any_of(key.begin(), key.end(), [](const Value &v) { return is_unset(v); }))
                continue;
            set[key].insert(row[0]);
        }
        return sets_.emplace(in.source.get(), std::move(set)).first->second;
    }

    Value aggregate(const Agg &a, const Group &group)
    {
        if (a.fn == AggFn::Count && !a.arg)
            return static_cast<std::int64_t>(group.size());
        std::vector<Value> values;
        for (const auto &env : group) {
            Env saved = swap_in(env);
            Value v = eval(*a.arg, nullptr);
            env_ = std::move(saved);
            if (!is_unset(v))
                values.push_back(std::move(v));
        }
        switch (a.fn) {
        case AggFn::Count: return static_cast<std::int64_t>(values.size());
        case AggFn::Sum: {
            std::int64_t s = 0;
            for (const auto &v : values)
                s += std::get<std::int64_t>(v);
            return s;
        }
        case AggFn::Min:
        case AggFn::Max: {
            if (values.empty())
                return Unset{};
            auto [lo, hi] = std::minmax_element(values.begin(), values.end());
            return a.fn == AggFn::Min ? *lo : *hi;
        }
        case AggFn::AllDifferent: {
            std::set<Value> seen;
            for (const auto &v : values)
                if (!seen.insert(v).second)
                    return false;
            return true;
        }
        }
        return Unset{};
    }

    const Program &program_;
    const store::Store &store_;
    Env env_;
    std::map<std::string, std::vector<Row>, std::less<>> views_;
    std::map<const Comprehension *, std::vector<std::vector<const Qualifier *>>> due_;
    std::map<const Comprehension *, std::map<Row, std::set<Value>>> sets_;
};

} // namespace

store::Relation evaluate(const Program &program, const store::Store &store, const Comprehension &c)
{
    if (references_variable(c))
        throw StoreError("comprehension reads a variable column");
    Evaluator e(program, store, c.slot_count);
    return e.run(c);
}

} // namespace weave::ir
