#include "weave/error.hpp"
#include "weave/sql/classify.hpp"
#include "weave/store/check.hpp"
#include "weave/store/store.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>

namespace weave::store {

namespace {

using namespace weave::sql;

struct Source {
    std::vector<std::string> names;
    std::vector<bool> variable;
    const std::vector<Row> *rows = nullptr;
};

struct Frame {
    std::vector<std::string> binders;
    std::vector<const Source *> sources;
    std::vector<const Row *> rows;
    const Frame *outer = nullptr;
};

using Group = std::vector<Frame>;

bool truthy(const Value &v)
{
    const auto *b = std::get_if<bool>(&v);
    return b && *b;
}

class Evaluator {
public:
    Evaluator(const Store &store, const ClassifiedProgram &program) : store_(store), program_(program) {}

    const Source &source(const std::string &name)
    {
        auto it = sources_.find(name);
        if (it != sources_.end())
            return it->second;
        Source s;
        if (store_.has_table(name)) {
            const auto &def = store_.def(name);
            for (const auto &c : def.columns) {
                s.names.push_back(c.name);
                s.variable.push_back(c.is_variable);
            }
            s.rows = &store_.rows(name);
        } else {
            const ViewDef *v = program_.find_view(name);
            if (!v)
                throw StoreError("unknown table or view " + name);
            auto &rel = views_[name];
            rel = run(*v->query, nullptr);
            s.names = rel.columns;
            s.variable.assign(rel.columns.size(), v->cls != ViewClass::Input);
            s.rows = &rel.rows;
        }
        return sources_.emplace(name, std::move(s)).first->second;
    }

    // Enumerates FROM x JOIN ... ON ..., applying each ON as soon as its
    // binder is bound. WHERE is left to the caller.
    void for_each_binding(const Query &q, const Frame *outer, const std::function<void(const Frame &)> &fn)
    {
        Frame f;
        f.outer = outer;
        std::vector<const TableRef *> refs{&q.from};
        for (const auto &j : q.joins)
            refs.push_back(&j.table);
        for (const auto *r : refs) {
            f.binders.push_back(r->binder());
            f.sources.push_back(&source(r->table));
        }
        f.rows.assign(refs.size(), nullptr);
        std::function<void(std::size_t)> rec = [&](std::size_t k) {
            if (k == refs.size()) {
                fn(f);
                return;
            }
            for (const auto &row : *f.sources[k]->rows) {
                f.rows[k] = &row;
                if (k > 0 && !truthy(eval(*q.joins[k - 1].on, f, nullptr)))
                    continue;
                rec(k + 1);
            }
            f.rows[k] = nullptr;
        };
        rec(0);
    }

    Relation run(const Query &q, const Frame *outer)
    {
        Relation out;
        std::vector<Frame> matches;
        for_each_binding(q, outer, [&](const Frame &f) {
            if (q.where && !truthy(eval(*q.where, f, nullptr)))
                return;
            matches.push_back(f);
        });

        bool aggregate = q.is_grouped();
        for (const auto &item : q.items)
            aggregate = aggregate || contains_aggregate(*item.expr);

        if (q.star) {
            const Frame &shape = matches.empty() ? probe_frame(q, outer) : matches.front();
            for (std::size_t b = 0; b < shape.sources.size(); ++b)
                out.columns.insert(out.columns.end(), shape.sources[b]->names.begin(), shape.sources[b]->names.end());
            for (const auto &f : matches) {
                Row row;
                for (const auto *r : f.rows)
                    row.insert(row.end(), r->begin(), r->end());
                out.rows.push_back(std::move(row));
            }
        } else {
            for (std::size_t i = 0; i < q.items.size(); ++i) {
                const auto &item = q.items[i];
                std::string name = item.alias;
                if (name.empty()) {
                    if (const auto *c = std::get_if<ColumnRef>(&item.expr->node))
                        name = c->column;
                    else
                        name = "expr" + std::to_string(i);
                }
                out.columns.push_back(name);
            }
            if (!aggregate) {
                for (const auto &f : matches) {
                    Row row;
                    for (const auto &item : q.items)
                        row.push_back(eval(*item.expr, f, nullptr));
                    out.rows.push_back(std::move(row));
                }
            } else {
                for (const auto &group : groups(q, matches)) {
                    const Frame &rep = group.empty() ? probe_frame(q, outer) : group.front();
                    if (q.having && !truthy(eval(*q.having, rep, &group)))
                        continue;
                    Row row;
                    for (const auto &item : q.items)
                        row.push_back(eval(*item.expr, rep, &group));
                    out.rows.push_back(std::move(row));
                }
            }
        }
        out.types.resize(out.columns.size(), DType::Integer);
        for (std::size_t c = 0; c < out.columns.size(); ++c)
            for (const auto &row : out.rows)
                if (!is_unset(row[c])) {
                    out.types[c] = std::holds_alternative<std::int64_t>(row[c]) ? DType::Integer
                                   : std::holds_alternative<bool>(row[c])       ? DType::Boolean
                                                                                : DType::Text;
                    break;
                }
        std::stable_sort(out.rows.begin(), out.rows.end());
        return out;
    }

    // Grouped bindings. Without group by, all bindings form one group (which
    // exists even when empty, as in SQL).
    std::vector<Group> groups(const Query &q, const std::vector<Frame> &matches)
    {
        std::vector<Group> out;
        if (q.group_by.empty()) {
            out.push_back(matches);
            return out;
        }
        std::map<Row, std::size_t> index;
        for (const auto &f : matches) {
            Row key;
            for (const auto &g : q.group_by)
                key.push_back(eval(*g, f, nullptr));
            auto [it, inserted] = index.emplace(key, out.size());
            if (inserted)
                out.emplace_back();
            out[it->second].push_back(f);
        }
        return out;
    }

    Value eval(const Expr &e, const Frame &f, const Group *group)
    {
        if (const auto *c = std::get_if<ColumnRef>(&e.node))
            return column(*c, f);
        if (const auto *l = std::get_if<Literal>(&e.node))
            return l->value;
        if (const auto *u = std::get_if<Unary>(&e.node)) {
            Value v = eval(*u->operand, f, group);
            if (is_unset(v))
                return u->op == UnOp::Not ? Value{false} : v;
            if (u->op == UnOp::Not)
                return !std::get<bool>(v);
            return -std::get<std::int64_t>(v);
        }
        if (const auto *b = std::get_if<Binary>(&e.node)) {
            if (b->op == BinOp::And) {
                if (!truthy(eval(*b->lhs, f, group)))
                    return false;
                return truthy(eval(*b->rhs, f, group));
            }
            if (b->op == BinOp::Or) {
                if (truthy(eval(*b->lhs, f, group)))
                    return true;
                return truthy(eval(*b->rhs, f, group));
            }
            Value l = eval(*b->lhs, f, group);
            Value r = eval(*b->rhs, f, group);
            if (is_unset(l) || is_unset(r)) {
                if (is_comparison(b->op))
                    return b->op == BinOp::Ne;
                return Unset{};
            }
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
        if (const auto *a = std::get_if<Aggregate>(&e.node)) {
            if (!group)
                throw StoreError("aggregate evaluated outside a group");
            return aggregate(*a, *group);
        }
        if (const auto *in = std::get_if<InSubquery>(&e.node)) {
            Value l = eval(*in->lhs, f, group);
            Relation sub = run(*in->query, &f);
            bool found = false;
            if (!is_unset(l))
                for (const auto &row : sub.rows)
                    if (!is_unset(row[0]) && row[0] == l)
                        found = true;
            return in->negated ? !found : found;
        }
        if (const auto *s = std::get_if<ScalarSubquery>(&e.node)) {
            Relation sub = run(*s->query, &f);
            if (sub.rows.size() != 1)
                throw StoreError("scalar subquery returned " + std::to_string(sub.rows.size()) + " rows");
            return sub.rows[0][0];
        }
        throw StoreError("unsupported expression");
    }

    Value aggregate(const Aggregate &a, const Group &group)
    {
        if (a.fn == AggFn::Count && !a.arg)
            return static_cast<std::int64_t>(group.size());
        std::vector<Value> values;
        for (const auto &f : group) {
            Value v = eval(*a.arg, f, nullptr);
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

    Value column(const ColumnRef &c, const Frame &f)
    {
        for (const Frame *fr = &f; fr; fr = fr->outer) {
            for (std::size_t b = 0; b < fr->binders.size(); ++b) {
                if (!c.qualifier.empty() && fr->binders[b] != c.qualifier)
                    continue;
                const auto &names = fr->sources[b]->names;
                for (std::size_t i = 0; i < names.size(); ++i)
                    if (names[i] == c.column) {
                        if (!fr->rows[b])
                            throw StoreError("column " + c.column + " read before its binder is bound");
                        return (*fr->rows[b])[i];
                    }
            }
        }
        throw StoreError("unresolved column " + (c.qualifier.empty() ? c.column : c.qualifier + "." + c.column));
    }

    // Frame with sources but no rows, for naming columns of empty results
    // and for evaluating aggregates over an empty group.
    const Frame &probe_frame(const Query &q, const Frame *outer)
    {
        auto &f = probes_.emplace_back();
        f.outer = outer;
        std::vector<const TableRef *> refs{&q.from};
        for (const auto &j : q.joins)
            refs.push_back(&j.table);
        for (const auto *r : refs) {
            f.binders.push_back(r->binder());
            f.sources.push_back(&source(r->table));
        }
        f.rows.assign(refs.size(), nullptr);
        return f;
    }

private:
    const Store &store_;
    const ClassifiedProgram &program_;
    std::map<std::string, Source> sources_;
    std::map<std::string, Relation> views_;
    std::deque<Frame> probes_;
};

void collect_refs(const Expr &e, std::set<std::pair<std::string, std::string>> &out);

void collect_refs(const Query &q, std::set<std::pair<std::string, std::string>> &out)
{
    for (const auto &item : q.items)
        collect_refs(*item.expr, out);
    for (const auto &j : q.joins)
        collect_refs(*j.on, out);
    if (q.where)
        collect_refs(*q.where, out);
    for (const auto &g : q.group_by)
        collect_refs(*g, out);
    if (q.having)
        collect_refs(*q.having, out);
}

void collect_refs(const Expr &e, std::set<std::pair<std::string, std::string>> &out)
{
    if (const auto *c = std::get_if<ColumnRef>(&e.node))
        out.insert({c->qualifier, c->column});
    else if (const auto *u = std::get_if<Unary>(&e.node))
        collect_refs(*u->operand, out);
    else if (const auto *b = std::get_if<Binary>(&e.node)) {
        collect_refs(*b->lhs, out);
        collect_refs(*b->rhs, out);
    } else if (const auto *a = std::get_if<Aggregate>(&e.node)) {
        if (a->arg)
            collect_refs(*a->arg, out);
    } else if (const auto *in = std::get_if<InSubquery>(&e.node)) {
        collect_refs(*in->lhs, out);
        collect_refs(*in->query, out);
    } else if (const auto *s = std::get_if<ScalarSubquery>(&e.node)) {
        collect_refs(*s->query, out);
    }
}

} // namespace

Relation eval_input_view(const Store &store, const ClassifiedProgram &program, const ViewDef &view)
{
    if (view.cls != ViewClass::Input)
        throw StoreError("view " + view.name + ": variable column in input view (class " +
                         std::string(class_name(view.cls)) + "); it must be compiled, not evaluated");
    Evaluator ev(store, program);
    return ev.run(*view.query, nullptr);
}

Relation eval_query(const Store &store, const ClassifiedProgram &program, const Query &query)
{
    Evaluator ev(store, program);
    return ev.run(query, nullptr);
}

std::vector<Violation> check_hard_views(const Store &store, const ClassifiedProgram &program)
{
    std::vector<Violation> out;
    Evaluator ev(store, program);
    for (std::size_t vi : program.order) {
        const ViewDef &view = program.views[vi];
        if (view.cls != ViewClass::Hard)
            continue;
        const Query &q = *view.query;
        std::set<std::pair<std::string, std::string>> refs;
        collect_refs(q, refs);
        auto has_unset_reference = [&](const Frame &f) {
            for (std::size_t b = 0; b < f.binders.size(); ++b) {
                const Source &s = *f.sources[b];
                for (std::size_t c = 0; c < s.names.size(); ++c) {
                    if (!s.variable[c] || !is_unset((*f.rows[b])[c]))
                        continue;
                    if (refs.count({f.binders[b], s.names[c]}) || refs.count({"", s.names[c]}))
                        return true;
                }
            }
            return false;
        };
        auto describe = [&](const Frame &f) {
            std::string d;
            for (std::size_t b = 0; b < f.binders.size(); ++b) {
                d += (b ? ", " : "") + f.binders[b] + "=";
                d += f.rows[b]->empty() ? "" : to_string((*f.rows[b])[0]);
            }
            return d;
        };
        if (!q.is_grouped()) {
            ev.for_each_binding(q, nullptr, [&](const Frame &f) {
                if (has_unset_reference(f) || !q.where)
                    return;
                if (!truthy(ev.eval(*q.where, f, nullptr)))
                    out.push_back({view.name, describe(f)});
            });
        } else {
            std::vector<Frame> matches;
            ev.for_each_binding(q, nullptr, [&](const Frame &f) {
                if (has_unset_reference(f))
                    return;
                if (q.where && !truthy(ev.eval(*q.where, f, nullptr)))
                    return;
                matches.push_back(f);
            });
            if (!q.having)
                continue;
            for (const auto &group : ev.groups(q, matches)) {
                const Frame &rep = group.empty() ? ev.probe_frame(q, nullptr) : group.front();
                if (!truthy(ev.eval(*q.having, rep, &group)))
                    out.push_back({view.name, group.empty() ? "empty group" : "group of " + describe(rep)});
            }
        }
    }
    return out;
}

} // namespace weave::store
