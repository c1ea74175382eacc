#include "weave/error.hpp"
#include "weave/ir/comprehension.hpp"

#include <algorithm>
#include <set>

namespace weave::ir {

using sql::AggFn;
using sql::BinOp;
using sql::UnOp;

ExprPtr make(decltype(Expr::node) node) { return std::make_shared<const Expr>(Expr{std::move(node)}); }

const LoweredView *Program::find(std::string_view name) const
{
    for (const auto &v : views)
        if (v.name == name)
            return &v;
    return nullptr;
}

namespace {

struct Scope {
    const std::vector<Generator> *generators;
    const Scope *outer;
};

DType type_of(const Expr &e);

DType type_of_comp_head(const Comprehension &c)
{
    if (c.head.empty())
        throw CompileError("subquery selects no column");
    return c.head[0].type;
}

DType type_of(const Expr &e)
{
    return std::visit(
        [](const auto &n) -> DType {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Col>) {
                return n.type;
            } else if constexpr (std::is_same_v<T, Const>) {
                if (std::holds_alternative<bool>(n.value))
                    return DType::Boolean;
                if (std::holds_alternative<std::string>(n.value))
                    return DType::Text;
                return DType::Integer;
            } else if constexpr (std::is_same_v<T, Unary>) {
                return n.op == UnOp::Not ? DType::Boolean : DType::Integer;
            } else if constexpr (std::is_same_v<T, Binary>) {
                switch (n.op) {
                case BinOp::Add:
                case BinOp::Sub:
                case BinOp::Mul: return DType::Integer;
                default: return DType::Boolean;
                }
            } else if constexpr (std::is_same_v<T, Agg>) {
                switch (n.fn) {
                case AggFn::Count:
                case AggFn::Sum: return DType::Integer;
                case AggFn::AllDifferent: return DType::Boolean;
                default: return type_of(*n.arg);
                }
            } else if constexpr (std::is_same_v<T, Scalar>) {
                return type_of_comp_head(*n.sub);
            } else {
                return DType::Boolean;
            }
        },
        e.node);
}

class Lowerer {
public:
    explicit Lowerer(const Catalog &catalog) : catalog_(catalog) {}

    Comprehension query(const sql::Query &q, const Scope *outer)
    {
        Comprehension c;
        auto bind = [&](const sql::TableRef &r) {
            auto it = catalog_.find(r.table);
            if (it == catalog_.end())
                throw CompileError("unknown table or view " + r.table);
            Generator g;
            g.slot = next_slot_++;
            g.binder = r.binder();
            g.source = r.table;
            g.is_view = it->second.is_view;
            g.auxiliary = it->second.is_view && it->second.cls == sql::ViewClass::Auxiliary;
            g.columns = it->second.columns;
            c.generators.push_back(std::move(g));
        };
        Scope scope{&c.generators, outer};
        bind(q.from);
        for (const auto &j : q.joins) {
            bind(j.table);
            for (const auto &conj : sql::conjuncts(j.on))
                c.qualifiers.push_back({expr(*conj, scope), Origin::On});
        }
        for (const auto &conj : sql::conjuncts(q.where))
            c.qualifiers.push_back({expr(*conj, scope), Origin::Where});
        for (const auto &g : q.group_by)
            c.group_key.push_back(expr(*g, scope));
        if (q.having)
            c.having = expr(*q.having, scope);
        bool aggregate = q.is_grouped();
        if (q.star) {
            for (const auto &g : c.generators)
                for (std::size_t i = 0; i < g.columns.size(); ++i) {
                    const auto &col = g.columns[i];
                    auto e = make(Col{g.slot, i, g.binder, col.name, col.dtype, col.is_variable});
                    c.head.push_back({col.name, e, col.dtype, col.is_variable});
                }
        } else {
            for (std::size_t i = 0; i < q.items.size(); ++i) {
                const auto &item = q.items[i];
                aggregate = aggregate || sql::contains_aggregate(*item.expr);
                ExprPtr e = expr(*item.expr, scope);
                std::string name = item.alias;
                if (name.empty()) {
                    if (const auto *col = std::get_if<sql::ColumnRef>(&item.expr->node))
                        name = col->column;
                    else
                        name = "expr" + std::to_string(i);
                }
                // An aggregate over rows whose existence is decided by the
                // solver is variable even when it reads only input columns.
                bool variable = references_variable(*e) ||
                                (sql::contains_aggregate(*item.expr) && references_variable(c));
                c.head.push_back({name, e, type_of(*e), variable});
            }
        }
        c.grouped = aggregate;
        return c;
    }

    int slots() const { return next_slot_; }

private:
    ExprPtr expr(const sql::Expr &e, const Scope &scope)
    {
        if (const auto *c = std::get_if<sql::ColumnRef>(&e.node))
            return column(*c, scope);
        if (const auto *l = std::get_if<sql::Literal>(&e.node))
            return make(Const{l->value});
        if (const auto *u = std::get_if<sql::Unary>(&e.node))
            return make(Unary{u->op, expr(*u->operand, scope)});
        if (const auto *b = std::get_if<sql::Binary>(&e.node))
            return make(Binary{b->op, expr(*b->lhs, scope), expr(*b->rhs, scope)});
        if (const auto *a = std::get_if<sql::Aggregate>(&e.node))
            return make(Agg{a->fn, a->arg ? expr(*a->arg, scope) : nullptr});
        if (const auto *in = std::get_if<sql::InSubquery>(&e.node)) {
            auto sub = std::make_shared<Comprehension>(query(*in->query, &scope));
            return make(InQuery{expr(*in->lhs, scope), sub, in->negated});
        }
        if (const auto *s = std::get_if<sql::ScalarSubquery>(&e.node))
            return make(Scalar{std::make_shared<Comprehension>(query(*s->query, &scope))});
        throw CompileError("unsupported expression");
    }

    ExprPtr column(const sql::ColumnRef &c, const Scope &scope)
    {
        for (const Scope *s = &scope; s; s = s->outer) {
            const Generator *found = nullptr;
            std::size_t index = 0;
            int matches = 0;
            for (const auto &g : *s->generators) {
                if (!c.qualifier.empty() && g.binder != c.qualifier)
                    continue;
                for (std::size_t i = 0; i < g.columns.size(); ++i)
                    if (g.columns[i].name == c.column) {
                        found = &g;
                        index = i;
                        ++matches;
                    }
            }
            if (matches > 1)
                throw CompileError("ambiguous column reference " + c.column);
            if (matches == 1) {
                const auto &col = found->columns[index];
                return make(Col{found->slot, index, found->binder, col.name, col.dtype, col.is_variable});
            }
        }
        throw CompileError("unresolved column reference " + (c.qualifier.empty() ? c.column : c.qualifier + "." + c.column));
    }

    const Catalog &catalog_;
    int next_slot_ = 0;
};

void comp_slots(const Comprehension &c, std::vector<int> &out);

void slots_of(const Expr &e, std::vector<int> &out)
{
    std::visit(
        [&](const auto &n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Col>) {
                out.push_back(n.slot);
            } else if constexpr (std::is_same_v<T, Unary>) {
                slots_of(*n.operand, out);
            } else if constexpr (std::is_same_v<T, Binary>) {
                slots_of(*n.lhs, out);
                slots_of(*n.rhs, out);
            } else if constexpr (std::is_same_v<T, Agg>) {
                if (n.arg)
                    slots_of(*n.arg, out);
            } else if constexpr (std::is_same_v<T, InQuery>) {
                slots_of(*n.lhs, out);
                comp_slots(*n.sub, out);
            } else if constexpr (std::is_same_v<T, InSet>) {
                slots_of(*n.lhs, out);
                for (const auto &k : n.keys)
                    slots_of(*k, out);
            } else if constexpr (std::is_same_v<T, Scalar>) {
                comp_slots(*n.sub, out);
            }
        },
        e.node);
}

void comp_slots(const Comprehension &c, std::vector<int> &out)
{
    for (const auto &h : c.head)
        slots_of(*h.expr, out);
    for (const auto &q : c.qualifiers)
        slots_of(*q.expr, out);
    for (const auto &k : c.group_key)
        slots_of(*k, out);
    if (c.having)
        slots_of(*c.having, out);
}

// Slots bound by the generators of c and of its nested comprehensions.
void owned_slots(const Comprehension &c, std::set<int> &out);

void owned_in_expr(const Expr &e, std::set<int> &out)
{
    std::visit(
        [&](const auto &n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Unary>) {
                owned_in_expr(*n.operand, out);
            } else if constexpr (std::is_same_v<T, Binary>) {
                owned_in_expr(*n.lhs, out);
                owned_in_expr(*n.rhs, out);
            } else if constexpr (std::is_same_v<T, Agg>) {
                if (n.arg)
                    owned_in_expr(*n.arg, out);
            } else if constexpr (std::is_same_v<T, InQuery>) {
                owned_in_expr(*n.lhs, out);
                owned_slots(*n.sub, out);
            } else if constexpr (std::is_same_v<T, InSet>) {
                owned_in_expr(*n.lhs, out);
                owned_slots(*n.source, out);
            } else if constexpr (std::is_same_v<T, Scalar>) {
                owned_slots(*n.sub, out);
            }
        },
        e.node);
}

void owned_slots(const Comprehension &c, std::set<int> &out)
{
    for (const auto &g : c.generators)
        out.insert(g.slot);
    for (const auto &h : c.head)
        owned_in_expr(*h.expr, out);
    for (const auto &q : c.qualifiers)
        owned_in_expr(*q.expr, out);
    for (const auto &k : c.group_key)
        owned_in_expr(*k, out);
    if (c.having)
        owned_in_expr(*c.having, out);
}

bool reads_auxiliary(const Comprehension &c);

bool expr_reads_auxiliary(const Expr &e)
{
    return std::visit(
        [&](const auto &n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Unary>)
                return expr_reads_auxiliary(*n.operand);
            else if constexpr (std::is_same_v<T, Binary>)
                return expr_reads_auxiliary(*n.lhs) || expr_reads_auxiliary(*n.rhs);
            else if constexpr (std::is_same_v<T, Agg>)
                return n.arg && expr_reads_auxiliary(*n.arg);
            else if constexpr (std::is_same_v<T, InQuery>)
                return expr_reads_auxiliary(*n.lhs) || reads_auxiliary(*n.sub);
            else if constexpr (std::is_same_v<T, InSet>)
                return expr_reads_auxiliary(*n.lhs) || reads_auxiliary(*n.source);
            else if constexpr (std::is_same_v<T, Scalar>)
                return reads_auxiliary(*n.sub);
            else
                return false;
        },
        e.node);
}

bool reads_auxiliary(const Comprehension &c)
{
    for (const auto &g : c.generators)
        if (g.auxiliary)
            return true;
    for (const auto &q : c.qualifiers)
        if (expr_reads_auxiliary(*q.expr))
            return true;
    for (const auto &h : c.head)
        if (expr_reads_auxiliary(*h.expr))
            return true;
    return c.having && expr_reads_auxiliary(*c.having);
}

class Unnester {
public:
    explicit Unnester(const Catalog &catalog) : catalog_(catalog) {}

    Comprehension comp(const Comprehension &c)
    {
        Comprehension out = c;
        for (auto &h : out.head)
            h.expr = expr(h.expr);
        for (auto &q : out.qualifiers)
            q.expr = expr(q.expr);
        for (auto &k : out.group_key)
            k = expr(k);
        if (out.having)
            out.having = expr(out.having);
        return out;
    }

private:
    ExprPtr expr(const ExprPtr &e)
    {
        return std::visit(
            [&](const auto &n) -> ExprPtr {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Unary>) {
                    return make(Unary{n.op, expr(n.operand)});
                } else if constexpr (std::is_same_v<T, Binary>) {
                    return make(Binary{n.op, expr(n.lhs), expr(n.rhs)});
                } else if constexpr (std::is_same_v<T, Agg>) {
                    return make(Agg{n.fn, n.arg ? expr(n.arg) : nullptr});
                } else if constexpr (std::is_same_v<T, Scalar>) {
                    return make(Scalar{std::make_shared<Comprehension>(comp(*n.sub))});
                } else if constexpr (std::is_same_v<T, InQuery>) {
                    return in_query(n);
                } else {
                    return e;
                }
            },
            e->node);
    }

    ExprPtr in_query(const InQuery &n)
    {
        ExprPtr lhs = expr(n.lhs);
        auto sub = std::make_shared<Comprehension>(comp(*n.sub));
        for (const auto &g : sub->generators)
            if (g.auxiliary)
                throw CompileError("IN over variable-dependent view " + g.source +
                                   " is unsupported; join against it instead");
        if (reads_auxiliary(*sub))
            throw CompileError("IN subquery reads a variable-dependent view");
        if (references_variable(*sub))
            return make(InQuery{lhs, sub, n.negated}); // decided per binding by the solver

        std::set<int> inner;
        owned_slots(*sub, inner);
        auto is_outer = [&](const Expr &x) {
            std::vector<int> s;
            slots_of(x, s);
            return std::any_of(s.begin(), s.end(), [&](int k) { return !inner.count(k); });
        };
        auto is_inner_only = [&](const Expr &x) {
            std::vector<int> s;
            slots_of(x, s);
            return std::all_of(s.begin(), s.end(), [&](int k) { return inner.count(k) > 0; });
        };
        auto is_outer_only = [&](const Expr &x) {
            std::vector<int> s;
            slots_of(x, s);
            return std::none_of(s.begin(), s.end(), [&](int k) { return inner.count(k) > 0; });
        };
        for (const auto &h : sub->head)
            if (is_outer(*h.expr))
                throw CompileError("correlated reference in the select list of an IN subquery");
        for (const auto &k : sub->group_key)
            if (is_outer(*k))
                throw CompileError("correlated reference in the group by of an IN subquery");
        if (sub->having && is_outer(*sub->having))
            throw CompileError("correlated reference in the having clause of an IN subquery");

        Comprehension source = *sub;
        source.qualifiers.clear();
        std::vector<ExprPtr> keys;
        std::vector<ExprPtr> inner_keys;
        for (const auto &q : sub->qualifiers) {
            if (!is_outer(*q.expr)) {
                source.qualifiers.push_back(q);
                continue;
            }
            const auto *b = std::get_if<Binary>(&q.expr->node);
            bool ok = b && b->op == BinOp::Eq && !references_variable(*b->lhs) && !references_variable(*b->rhs);
            if (ok && is_outer_only(*b->lhs) && is_inner_only(*b->rhs)) {
                keys.push_back(b->lhs);
                inner_keys.push_back(b->rhs);
            } else if (ok && is_outer_only(*b->rhs) && is_inner_only(*b->lhs)) {
                keys.push_back(b->rhs);
                inner_keys.push_back(b->lhs);
            } else {
                throw CompileError("correlated subquery must correlate by equality on input columns");
            }
        }
        if (sub->grouped && !keys.empty())
            throw CompileError("correlated grouped subquery is unsupported");
        if (sub->head.empty())
            throw CompileError("IN subquery selects no column");
        source.head.resize(1);
        for (std::size_t i = 0; i < inner_keys.size(); ++i)
            source.head.push_back({"key" + std::to_string(i), inner_keys[i], type_of(*inner_keys[i]), false});
        return make(InSet{lhs, std::make_shared<Comprehension>(std::move(source)), std::move(keys), n.negated});
    }

    const Catalog &catalog_;
};

std::string literal_text(const Value &v)
{
    if (const auto *s = std::get_if<std::string>(&v)) {
        std::string out = "'";
        for (char c : *s) {
            if (c == '\'')
                out += '\'';
            out += c;
        }
        return out + "'";
    }
    return to_string(v);
}

} // namespace

bool references_variable(const Expr &e)
{
    return std::visit(
        [&](const auto &n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Col>)
                return n.variable;
            else if constexpr (std::is_same_v<T, Const>)
                return false;
            else if constexpr (std::is_same_v<T, Unary>)
                return references_variable(*n.operand);
            else if constexpr (std::is_same_v<T, Binary>)
                return references_variable(*n.lhs) || references_variable(*n.rhs);
            else if constexpr (std::is_same_v<T, Agg>)
                return n.arg && references_variable(*n.arg);
            else if constexpr (std::is_same_v<T, InQuery>)
                return references_variable(*n.lhs) || references_variable(*n.sub);
            else if constexpr (std::is_same_v<T, InSet>) {
                if (references_variable(*n.lhs))
                    return true;
                for (const auto &k : n.keys)
                    if (references_variable(*k))
                        return true;
                return false;
            } else
                return references_variable(*n.sub);
        },
        e.node);
}

bool references_variable(const Comprehension &c)
{
    for (const auto &g : c.generators)
        if (g.auxiliary)
            return true;
    for (const auto &h : c.head)
        if (references_variable(*h.expr))
            return true;
    for (const auto &q : c.qualifiers)
        if (references_variable(*q.expr))
            return true;
    for (const auto &k : c.group_key)
        if (references_variable(*k))
            return true;
    return c.having && references_variable(*c.having);
}

void collect_slots(const Expr &e, std::vector<int> &out) { slots_of(e, out); }

Comprehension lower(const sql::ViewDef &view, const Catalog &catalog)
{
    Lowerer l(catalog);
    Comprehension c = l.query(*view.query, nullptr);
    c.slot_count = l.slots();
    return c;
}

Comprehension unnest(const Comprehension &c, const Catalog &catalog)
{
    Unnester u(catalog);
    Comprehension out = u.comp(c);
    out.slot_count = c.slot_count;
    return out;
}

Program lower_program(const sql::ClassifiedProgram &program)
{
    Program out;
    for (const auto &t : program.tables)
        out.catalog[t.name] = RelationInfo{t.columns, false, sql::ViewClass::Input};
    for (std::size_t i : program.order) {
        const auto &v = program.views[i];
        Comprehension c;
        try {
            c = unnest(lower(v, out.catalog), out.catalog);
        } catch (const CompileError &e) {
            throw CompileError("view " + v.name + ": " + e.what());
        }
        RelationInfo info;
        info.is_view = true;
        info.cls = v.cls;
        for (const auto &h : c.head)
            info.columns.push_back({h.name, h.type, h.variable});
        out.catalog[v.name] = std::move(info);
        out.views.push_back({v.name, v.cls, std::move(c)});
    }
    return out;
}

QualifierSplit split_qualifiers(const Comprehension &c, sql::ViewClass cls)
{
    QualifierSplit s;
    bool asserting = cls == sql::ViewClass::Hard && !c.grouped;
    for (const auto &q : c.qualifiers) {
        bool dynamic = references_variable(*q.expr) || (asserting && q.origin == Origin::Where);
        (dynamic ? s.dynamic_part : s.static_part).push_back(q);
    }
    return s;
}

std::string dump(const Expr &e)
{
    return std::visit(
        [&](const auto &n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            auto wrap = [](const ExprPtr &x) {
                std::string s = dump(*x);
                return std::holds_alternative<Binary>(x->node) ? "(" + s + ")" : s;
            };
            if constexpr (std::is_same_v<T, Col>) {
                return n.binder + "." + n.name;
            } else if constexpr (std::is_same_v<T, Const>) {
                return literal_text(n.value);
            } else if constexpr (std::is_same_v<T, Unary>) {
                return (n.op == UnOp::Not ? "not " : "-") + wrap(n.operand);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return wrap(n.lhs) + " " + std::string(sql::op_text(n.op)) + " " + wrap(n.rhs);
            } else if constexpr (std::is_same_v<T, Agg>) {
                return std::string(sql::agg_name(n.fn)) + "(" + (n.arg ? dump(*n.arg) : "*") + ")";
            } else if constexpr (std::is_same_v<T, InQuery>) {
                return wrap(n.lhs) + (n.negated ? " not in " : " in ") + dump(*n.sub);
            } else if constexpr (std::is_same_v<T, InSet>) {
                std::string s = wrap(n.lhs) + (n.negated ? " ∉ S" : " ∈ S");
                if (!n.keys.empty()) {
                    s += "(";
                    for (std::size_t i = 0; i < n.keys.size(); ++i)
                        s += (i ? ", " : "") + dump(*n.keys[i]);
                    s += ")";
                }
                return s;
            } else {
                return "scalar" + dump(*n.sub);
            }
        },
        e.node);
}

std::string dump(const Comprehension &c)
{
    std::string s = "[";
    for (std::size_t i = 0; i < c.head.size(); ++i)
        s += (i ? ", " : "") + dump(*c.head[i].expr);
    s += " | ";
    for (std::size_t i = 0; i < c.generators.size(); ++i)
        s += (i ? ", " : "") + c.generators[i].binder + " ← " + c.generators[i].source;
    for (std::size_t i = 0; i < c.qualifiers.size(); ++i)
        s += (i ? ", " : "; ") + dump(*c.qualifiers[i].expr);
    if (!c.group_key.empty()) {
        s += "; group by ";
        for (std::size_t i = 0; i < c.group_key.size(); ++i)
            s += (i ? ", " : "") + dump(*c.group_key[i]);
    }
    if (c.having)
        s += "; having " + dump(*c.having);
    return s + "]";
}

} // namespace weave::ir
