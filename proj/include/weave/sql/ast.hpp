#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "weave/error.hpp"
#include "weave/schema.hpp"
#include "weave/value.hpp"

namespace weave::sql {

struct Expr;
struct Query;
using ExprPtr = std::shared_ptr<const Expr>;
using QueryPtr = std::shared_ptr<const Query>;

enum class BinOp { And, Or, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub, Mul };
enum class UnOp { Not, Neg };
enum class AggFn { Sum, Count, Min, Max, AllDifferent };

std::string_view op_text(BinOp op);
std::string_view agg_name(AggFn fn);
bool is_comparison(BinOp op);

// `qualifier` is empty for a bare column name.
struct ColumnRef {
    std::string qualifier;
    std::string column;
};

struct Literal {
    Value value;
};

struct Unary {
    UnOp op;
    ExprPtr operand;
};

struct Binary {
    BinOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};

// `arg` is null for count(*).
struct Aggregate {
    AggFn fn;
    ExprPtr arg;
};

struct InSubquery {
    ExprPtr lhs;
    QueryPtr query;
    bool negated = false;
};

struct ScalarSubquery {
    QueryPtr query;
};

struct Expr {
    std::variant<ColumnRef, Literal, Unary, Binary, Aggregate, InSubquery, ScalarSubquery> node;
    SourcePos pos;
};

struct SelectItem {
    ExprPtr expr;
    std::string alias;
};

struct TableRef {
    std::string table;
    std::string alias; // empty when not aliased

    const std::string &binder() const { return alias.empty() ? table : alias; }
};

struct Join {
    TableRef table;
    ExprPtr on;
};

struct Query {
    bool star = false;
    std::vector<SelectItem> items;
    TableRef from;
    std::vector<Join> joins;
    ExprPtr where;
    std::vector<ExprPtr> group_by;
    ExprPtr having;

    bool is_grouped() const { return !group_by.empty() || having != nullptr; }
};

enum class ViewClass { Unclassified, Input, Auxiliary, Hard, Soft };
std::string_view class_name(ViewClass c);

enum class AnnotationKind { VariableColumns, HardConstraint, SoftConstraint };

struct Annotation {
    AnnotationKind kind;
    std::vector<std::string> columns;
    SourcePos pos;
};

struct ViewDef {
    std::string name;
    QueryPtr query;
    ViewClass cls = ViewClass::Unclassified;
    SourcePos pos;
};

struct Program {
    std::vector<TableDef> tables;
    std::vector<ViewDef> views;
};

ExprPtr make_expr(decltype(Expr::node) node, SourcePos pos = {});

// Structural equality, source positions ignored.
bool equal(const Expr &a, const Expr &b);
bool equal(const ExprPtr &a, const ExprPtr &b);
bool equal(const Query &a, const Query &b);
bool equal(const Program &a, const Program &b);

bool contains_aggregate(const Expr &e);

// Splits a predicate on top-level AND.
std::vector<ExprPtr> conjuncts(const ExprPtr &e);

} // namespace weave::sql
