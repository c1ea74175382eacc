#include "weave/sql/ast.hpp"

namespace weave::sql {

std::string_view op_text(BinOp op)
{
    switch (op) {
    case BinOp::And: return "and";
    case BinOp::Or: return "or";
    case BinOp::Eq: return "=";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    }
    return "?";
}

std::string_view agg_name(AggFn fn)
{
    switch (fn) {
    case AggFn::Sum: return "sum";
    case AggFn::Count: return "count";
    case AggFn::Min: return "min";
    case AggFn::Max: return "max";
    case AggFn::AllDifferent: return "all_different";
    }
    return "?";
}

bool is_comparison(BinOp op)
{
    switch (op) {
    case BinOp::Eq:
    case BinOp::Ne:
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: return true;
    default: return false;
    }
}

std::string_view class_name(ViewClass c)
{
    switch (c) {
    case ViewClass::Unclassified: return "unclassified";
    case ViewClass::Input: return "input";
    case ViewClass::Auxiliary: return "auxiliary";
    case ViewClass::Hard: return "hard";
    case ViewClass::Soft: return "soft";
    }
    return "?";
}

ExprPtr make_expr(decltype(Expr::node) node, SourcePos pos)
{
    return std::make_shared<const Expr>(Expr{std::move(node), pos});
}

namespace {

bool equal_query_ptr(const QueryPtr &a, const QueryPtr &b)
{
    if (!a || !b)
        return !a && !b;
    return equal(*a, *b);
}

struct EqualVisitor {
    const Expr &other;

    bool operator()(const ColumnRef &a) const
    {
        const auto &b = std::get<ColumnRef>(other.node);
        return a.qualifier == b.qualifier && a.column == b.column;
    }
    bool operator()(const Literal &a) const { return a.value == std::get<Literal>(other.node).value; }
    bool operator()(const Unary &a) const
    {
        const auto &b = std::get<Unary>(other.node);
        return a.op == b.op && equal(a.operand, b.operand);
    }
    bool operator()(const Binary &a) const
    {
        const auto &b = std::get<Binary>(other.node);
        return a.op == b.op && equal(a.lhs, b.lhs) && equal(a.rhs, b.rhs);
    }
    bool operator()(const Aggregate &a) const
    {
        const auto &b = std::get<Aggregate>(other.node);
        return a.fn == b.fn && equal(a.arg, b.arg);
    }
    bool operator()(const InSubquery &a) const
    {
        const auto &b = std::get<InSubquery>(other.node);
        return a.negated == b.negated && equal(a.lhs, b.lhs) && equal_query_ptr(a.query, b.query);
    }
    bool operator()(const ScalarSubquery &a) const
    {
        return equal_query_ptr(a.query, std::get<ScalarSubquery>(other.node).query);
    }
};

bool equal_table_ref(const TableRef &a, const TableRef &b) { return a.table == b.table && a.alias == b.alias; }

} // namespace

bool equal(const Expr &a, const Expr &b)
{
    if (a.node.index() != b.node.index())
        return false;
    return std::visit(EqualVisitor{b}, a.node);
}

bool equal(const ExprPtr &a, const ExprPtr &b)
{
    if (!a || !b)
        return !a && !b;
    return equal(*a, *b);
}

bool equal(const Query &a, const Query &b)
{
    if (a.star != b.star || a.items.size() != b.items.size() || a.joins.size() != b.joins.size() ||
        a.group_by.size() != b.group_by.size())
        return false;
    for (std::size_t i = 0; i < a.items.size(); ++i)
        if (a.items[i].alias != b.items[i].alias || !equal(a.items[i].expr, b.items[i].expr))
            return false;
    if (!equal_table_ref(a.from, b.from))
        return false;
    for (std::size_t i = 0; i < a.joins.size(); ++i)
        if (!equal_table_ref(a.joins[i].table, b.joins[i].table) || !equal(a.joins[i].on, b.joins[i].on))
            return false;
    for (std::size_t i = 0; i < a.group_by.size(); ++i)
        if (!equal(a.group_by[i], b.group_by[i]))
            return false;
    return equal(a.where, b.where) && equal(a.having, b.having);
}

bool equal(const Program &a, const Program &b)
{
    if (a.tables != b.tables || a.views.size() != b.views.size())
        return false;
    for (std::size_t i = 0; i < a.views.size(); ++i) {
        const auto &va = a.views[i];
        const auto &vb = b.views[i];
        if (va.name != vb.name || va.cls != vb.cls || !equal_query_ptr(va.query, vb.query))
            return false;
    }
    return true;
}

bool contains_aggregate(const Expr &e)
{
    struct Visitor {
        bool operator()(const ColumnRef &) const { return false; }
        bool operator()(const Literal &) const { return false; }
        bool operator()(const Unary &u) const { return contains_aggregate(*u.operand); }
        bool operator()(const Binary &b) const { return contains_aggregate(*b.lhs) || contains_aggregate(*b.rhs); }
        bool operator()(const Aggregate &) const { return true; }
        // Aggregates inside a subquery belong to that subquery.
        bool operator()(const InSubquery &in) const { return contains_aggregate(*in.lhs); }
        bool operator()(const ScalarSubquery &) const { return false; }
    };
    return std::visit(Visitor{}, e.node);
}

std::vector<ExprPtr> conjuncts(const ExprPtr &e)
{
    std::vector<ExprPtr> out;
    if (!e)
        return out;
    if (const auto *b = std::get_if<Binary>(&e->node); b && b->op == BinOp::And) {
        auto l = conjuncts(b->lhs);
        auto r = conjuncts(b->rhs);
        out.insert(out.end(), l.begin(), l.end());
        out.insert(out.end(), r.begin(), r.end());
    } else {
        out.push_back(e);
    }
    return out;
}

} // namespace weave::sql
