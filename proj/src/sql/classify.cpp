#include "weave/sql/classify.hpp"
#include "weave/sql/parser.hpp"

#include <functional>

namespace weave::sql {

const TableDef *ClassifiedProgram::find_table(std::string_view name) const
{
    for (const auto &t : tables)
        if (t.name == name)
            return &t;
    return nullptr;
}

const ViewDef *ClassifiedProgram::find_view(std::string_view name) const
{
    for (const auto &v : views)
        if (v.name == name)
            return &v;
    return nullptr;
}

std::set<std::string> referenced_relations(const Query &q)
{
    std::set<std::string> out;
    std::function<void(const Expr &)> walk_expr;
    std::function<void(const Query &)> walk_query = [&](const Query &query) {
        out.insert(query.from.table);
        for (const auto &j : query.joins) {
            out.insert(j.table.table);
            walk_expr(*j.on);
        }
        for (const auto &item : query.items)
            walk_expr(*item.expr);
        if (query.where)
            walk_expr(*query.where);
        for (const auto &g : query.group_by)
            walk_expr(*g);
        if (query.having)
            walk_expr(*query.having);
    };
    walk_expr = [&](const Expr &e) {
        if (const auto *u = std::get_if<Unary>(&e.node))
            walk_expr(*u->operand);
        else if (const auto *b = std::get_if<Binary>(&e.node)) {
            walk_expr(*b->lhs);
            walk_expr(*b->rhs);
        } else if (const auto *a = std::get_if<Aggregate>(&e.node)) {
            if (a->arg)
                walk_expr(*a->arg);
        } else if (const auto *in = std::get_if<InSubquery>(&e.node)) {
            walk_expr(*in->lhs);
            walk_query(*in->query);
        } else if (const auto *s = std::get_if<ScalarSubquery>(&e.node)) {
            walk_query(*s->query);
        }
    };
    walk_query(q);
    return out;
}

namespace {

struct Shape {
    std::vector<ColumnDef> columns; // is_variable marks variable-derived columns
};

struct Binder {
    std::string name;
    const Shape *shape;
};

struct Scope {
    std::vector<Binder> binders;
    const Scope *outer = nullptr;
};

enum class Ty { Int, Bool, Text };

Ty to_ty(DType d)
{
    switch (d) {
    case DType::Integer: return Ty::Int;
    case DType::Boolean: return Ty::Bool;
    case DType::Text: return Ty::Text;
    }
    return Ty::Int;
}

DType to_dtype(Ty t)
{
    switch (t) {
    case Ty::Int: return DType::Integer;
    case Ty::Bool: return DType::Boolean;
    case Ty::Text: return DType::Text;
    }
    return DType::Integer;
}

std::string_view ty_name(Ty t) { return dtype_name(to_dtype(t)); }

struct Typed {
    Ty ty;
    bool variable; // depends on a variable column
};

class Checker {
public:
    Checker(const std::map<std::string, Shape> &shapes, std::string view) : shapes_(shapes), view_(std::move(view)) {}

    // Returns the output shape of q; marks touched_variable when any column
    // reference anywhere in q reaches variable-derived data.
    Shape query(const Query &q, const Scope *outer)
    {
        Scope scope;
        scope.outer = outer;
        auto bind = [&](const TableRef &r) {
            auto it = shapes_.find(r.table);
            if (it == shapes_.end())
                fail("unknown table or view " + r.table);
            for (const auto &b : scope.binders)
                if (b.name == r.binder())
                    fail("duplicate binder " + r.binder() + "; use an alias");
            scope.binders.push_back({r.binder(), &it->second});
        };
        bind(q.from);
        for (const auto &j : q.joins) {
            bind(j.table);
            expect(boolean(*j.on, scope, false), Ty::Bool, "join condition");
        }
        if (q.where)
            expect(boolean(*q.where, scope, false), Ty::Bool, "where clause");
        for (const auto &g : q.group_by) {
            if (contains_aggregate(*g))
                fail("aggregate in group by");
            expr(*g, scope, false);
        }
        bool grouped = q.is_grouped();
        if (q.having)
            expect(boolean(*q.having, scope, true), Ty::Bool, "having clause");

        Shape out;
        if (q.star) {
            for (const auto &b : scope.binders)
                for (const auto &c : b.shape->columns) {
                    for (const auto &existing : out.columns)
                        if (existing.name == c.name)
                            fail("select * produces duplicate column " + c.name + "; list columns explicitly");
                    out.columns.push_back(c);
                }
            if (grouped)
                fail("select * with group by");
        } else {
            bool any_agg = false;
            for (std::size_t i = 0; i < q.items.size(); ++i) {
                const auto &item = q.items[i];
                bool agg = contains_aggregate(*item.expr);
                any_agg = any_agg || agg;
                Typed t = expr(*item.expr, scope, true);
                std::string name = item.alias;
                if (name.empty()) {
                    if (const auto *c = std::get_if<ColumnRef>(&item.expr->node))
                        name = c->column;
                    else
                        name = "expr" + std::to_string(i);
                }
                for (const auto &existing : out.columns)
                    if (existing.name == name)
                        fail("duplicate output column " + name);
                out.columns.push_back({name, to_dtype(t.ty), t.variable});
            }
            (void)any_agg;
        }
        return out;
    }

    bool touched_variable = false;

private:
    Ty boolean(const Expr &e, const Scope &s, bool allow_agg) { return expr(e, s, allow_agg).ty; }

    void expect(Ty got, Ty want, const std::string &what)
    {
        if (got != want)
            fail(what + " has type " + std::string(ty_name(got)) + ", expected " + std::string(ty_name(want)));
    }

    Typed column(const ColumnRef &c, const Scope &s)
    {
        for (const Scope *scope = &s; scope; scope = scope->outer) {
            const ColumnDef *found = nullptr;
            int matches = 0;
            for (const auto &b : scope->binders) {
                if (!c.qualifier.empty() && b.name != c.qualifier)
                    continue;
                for (const auto &col : b.shape->columns)
                    if (col.name == c.column) {
                        found = &col;
                        ++matches;
                    }
            }
            if (matches > 1)
                fail("ambiguous column reference " + (c.qualifier.empty() ? c.column : c.qualifier + "." + c.column));
            if (matches == 1) {
                if (found->is_variable)
                    touched_variable = true;
                return {to_ty(found->dtype), found->is_variable};
            }
            if (!c.qualifier.empty()) {
                bool binder_here = false;
                for (const auto &b : scope->binders)
                    binder_here = binder_here || b.name == c.qualifier;
                if (binder_here)
                    fail("unknown column " + c.qualifier + "." + c.column);
            }
        }
        fail("unresolved column reference " + (c.qualifier.empty() ? c.column : c.qualifier + "." + c.column));
    }

    Typed expr(const Expr &e, const Scope &s, bool allow_agg)
    {
        if (const auto *c = std::get_if<ColumnRef>(&e.node))
            return column(*c, s);
        if (const auto *l = std::get_if<Literal>(&e.node)) {
            if (std::holds_alternative<std::int64_t>(l->value))
                return {Ty::Int, false};
            if (std::holds_alternative<bool>(l->value))
                return {Ty::Bool, false};
            return {Ty::Text, false};
        }
        if (const auto *u = std::get_if<Unary>(&e.node)) {
            Typed t = expr(*u->operand, s, allow_agg);
            expect(t.ty, u->op == UnOp::Not ? Ty::Bool : Ty::Int, u->op == UnOp::Not ? "operand of not" : "operand of -");
            return t;
        }
        if (const auto *b = std::get_if<Binary>(&e.node)) {
            Typed l = expr(*b->lhs, s, allow_agg);
            Typed r = expr(*b->rhs, s, allow_agg);
            bool var = l.variable || r.variable;
            switch (b->op) {
            case BinOp::And:
            case BinOp::Or:
                expect(l.ty, Ty::Bool, "operand of " + std::string(op_text(b->op)));
                expect(r.ty, Ty::Bool, "operand of " + std::string(op_text(b->op)));
                return {Ty::Bool, var};
            case BinOp::Add:
            case BinOp::Sub:
            case BinOp::Mul:
                expect(l.ty, Ty::Int, "operand of " + std::string(op_text(b->op)));
                expect(r.ty, Ty::Int, "operand of " + std::string(op_text(b->op)));
                return {Ty::Int, var};
            default:
                if (l.ty != r.ty)
                    fail("comparison between " + std::string(ty_name(l.ty)) + " and " + std::string(ty_name(r.ty)));
                if (l.ty == Ty::Text && b->op != BinOp::Eq && b->op != BinOp::Ne)
                    fail("ordering comparison on text values");
                return {Ty::Bool, var};
            }
        }
        if (const auto *a = std::get_if<Aggregate>(&e.node)) {
            if (!allow_agg)
                fail("aggregate " + std::string(agg_name(a->fn)) + " outside select/having");
            if (!a->arg)
                return {Ty::Int, false};
            if (contains_aggregate(*a->arg))
                fail("nested aggregate");
            Typed t = expr(*a->arg, s, false);
            switch (a->fn) {
            case AggFn::Sum: expect(t.ty, Ty::Int, "argument of sum"); return {Ty::Int, t.variable};
            case AggFn::Count: return {Ty::Int, false};
            case AggFn::Min:
            case AggFn::Max:
                if (t.ty == Ty::Text)
                    fail(std::string(agg_name(a->fn)) + " over text values");
                return t;
            case AggFn::AllDifferent: return {Ty::Bool, t.variable};
            }
        }
        if (const auto *in = std::get_if<InSubquery>(&e.node)) {
            Typed l = expr(*in->lhs, s, allow_agg);
            Shape inner = query(*in->query, &s);
            if (inner.columns.size() != 1)
                fail("IN subquery must select exactly one column");
            if (to_ty(inner.columns[0].dtype) != l.ty)
                fail("IN compares " + std::string(ty_name(l.ty)) + " with " +
                     std::string(dtype_name(inner.columns[0].dtype)));
            return {Ty::Bool, l.variable || inner.columns[0].is_variable};
        }
        if (const auto *sq = std::get_if<ScalarSubquery>(&e.node)) {
            Shape inner = query(*sq->query, &s);
            if (inner.columns.size() != 1)
                fail("scalar subquery must select exactly one column");
            return {to_ty(inner.columns[0].dtype), inner.columns[0].is_variable};
        }
        fail("unsupported expression");
    }

    [[noreturn]] void fail(const std::string &msg) const { throw SchemaError("view " + view_ + ": " + msg); }

    const std::map<std::string, Shape> &shapes_;
    std::string view_;
};

bool is_scalar_aggregate(const Query &q)
{
    if (q.star || q.items.size() != 1 || !q.group_by.empty())
        return false;
    return contains_aggregate(*q.items[0].expr);
}

} // namespace

ClassifiedProgram classify_views(const Program &program)
{
    ClassifiedProgram out;
    out.tables = program.tables;
    out.views = program.views;

    std::map<std::string, std::size_t> view_index;
    std::map<std::string, Shape> shapes;
    for (const auto &t : out.tables) {
        validate(t);
        if (shapes.count(t.name))
            throw SchemaError("duplicate table " + t.name);
        shapes[t.name] = Shape{t.columns};
    }
    for (std::size_t i = 0; i < out.views.size(); ++i) {
        const auto &v = out.views[i];
        if (shapes.count(v.name) || view_index.count(v.name))
            throw SchemaError("view " + v.name + " redefines an existing relation");
        view_index[v.name] = i;
    }

    // Dependency order by DFS; source order breaks ties so the result does
    // not depend on how views are arranged beyond their dependencies.
    std::vector<std::set<std::string>> deps(out.views.size());
    for (std::size_t i = 0; i < out.views.size(); ++i) {
        for (const auto &name : referenced_relations(*out.views[i].query)) {
            if (view_index.count(name))
                deps[i].insert(name);
            else if (!shapes.count(name))
                throw SchemaError("view " + out.views[i].name + ": unknown table or view " + name);
        }
    }
    std::vector<int> color(out.views.size(), 0);
    std::function<void(std::size_t, std::vector<std::string> &)> visit = [&](std::size_t i,
                                                                              std::vector<std::string> &stack) {
        if (color[i] == 2)
            return;
        stack.push_back(out.views[i].name);
        if (color[i] == 1) {
            std::string cycle;
            for (const auto &n : stack)
                cycle += (cycle.empty() ? "" : " -> ") + n;
            throw SchemaError("cycle in view dependencies: " + cycle);
        }
        color[i] = 1;
        for (const auto &d : deps[i])
            visit(view_index.at(d), stack);
        color[i] = 2;
        stack.pop_back();
        out.order.push_back(i);
    };
    // Visit in name order so the topological order is stable under source reordering.
    for (const auto &[name, idx] : view_index) {
        std::vector<std::string> stack;
        visit(idx, stack);
    }

    std::vector<bool> variable(out.views.size(), false);
    for (std::size_t i : out.order) {
        auto &v = out.views[i];
        for (const auto &d : deps[i]) {
            const auto &dv = out.views[view_index.at(d)];
            if (dv.cls == ViewClass::Hard || dv.cls == ViewClass::Soft)
                throw SchemaError("view " + v.name + " references constraint view " + d +
                                  "; constraint views cannot be nested");
        }
        Checker checker(shapes, v.name);
        Shape shape = checker.query(*v.query, nullptr);
        bool var = checker.touched_variable;
        for (const auto &d : deps[i])
            var = var || variable[view_index.at(d)];
        variable[i] = var;
        // Row existence of a variable-dependent view is decided by the solver,
        // so every output column counts as variable-derived downstream.
        if (var)
            for (auto &c : shape.columns)
                c.is_variable = true;
        shapes[v.name] = shape;

        if (v.cls == ViewClass::Soft) {
            if (!is_scalar_aggregate(*v.query))
                throw SchemaError("soft constraint view " + v.name +
                                  " must select a single aggregate value (one row, one integer column)");
            if (shape.columns[0].dtype != DType::Integer)
                throw SchemaError("soft constraint view " + v.name + " must produce an integer");
        }
    }

    // Unannotated variable-dependent views must feed a constraint view.
    std::vector<bool> feeds_constraint(out.views.size(), false);
    for (auto it = out.order.rbegin(); it != out.order.rend(); ++it) {
        std::size_t i = *it;
        const auto &v = out.views[i];
        bool reach = v.cls == ViewClass::Hard || v.cls == ViewClass::Soft || feeds_constraint[i];
        if (reach)
            for (const auto &d : deps[i])
                feeds_constraint[view_index.at(d)] = true;
    }
    for (std::size_t i = 0; i < out.views.size(); ++i) {
        auto &v = out.views[i];
        if (v.cls != ViewClass::Unclassified)
            continue;
        if (!variable[i]) {
            v.cls = ViewClass::Input;
        } else if (feeds_constraint[i]) {
            v.cls = ViewClass::Auxiliary;
        } else {
            throw SchemaError("view " + v.name +
                              " reads a variable column but is neither annotated as a constraint nor used by one");
        }
    }
    return out;
}

} // namespace weave::sql
