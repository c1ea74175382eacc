#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "weave/schema.hpp"
#include "weave/sql/ast.hpp"
#include "weave/sql/classify.hpp"
#include "weave/store/store.hpp"

namespace weave::ir {

struct Expr;
struct Comprehension;
using ExprPtr = std::shared_ptr<const Expr>;
using CompPtr = std::shared_ptr<const Comprehension>;

// Column of the row bound to generator `slot`. Slots are numbered per view,
// across nested comprehensions, so a correlated reference is just a slot
// owned by an enclosing comprehension.
struct Col {
    int slot;
    std::size_t column;
    std::string binder;
    std::string name;
    DType type;
    bool variable; // a variable column, or a variable-derived view column
};

struct Const {
    Value value;
};

struct Unary {
    sql::UnOp op;
    ExprPtr operand;
};

struct Binary {
    sql::BinOp op;
    ExprPtr lhs, rhs;
};

// `arg` is null for count(*).
struct Agg {
    sql::AggFn fn;
    ExprPtr arg;
};

// `lhs in (sub)`, left nested.
struct InQuery {
    ExprPtr lhs;
    CompPtr sub;
    bool negated = false;
};

// Unnested membership `lhs in S(keys)`. S is built once per evaluation from
// the uncorrelated comprehension `source`, whose head is the member value
// followed by the inner correlation keys; `keys` are the outer expressions
// matched against them (empty when the subquery was uncorrelated).
struct InSet {
    ExprPtr lhs;
    CompPtr source;
    std::vector<ExprPtr> keys;
    bool negated = false;
};

struct Scalar {
    CompPtr sub;
};

struct Expr {
    std::variant<Col, Const, Unary, Binary, Agg, InQuery, InSet, Scalar> node;
};

struct Generator {
    int slot;
    std::string binder;
    std::string source;
    bool is_view = false;
    bool auxiliary = false; // rows produced by a variable-dependent view
    std::vector<ColumnDef> columns;
};

enum class Origin { On, Where };

struct Qualifier {
    ExprPtr expr;
    Origin origin = Origin::Where;
};

struct HeadItem {
    std::string name;
    ExprPtr expr;
    DType type;
    bool variable = false;
};

struct Comprehension {
    std::vector<HeadItem> head;
    std::vector<Generator> generators;
    std::vector<Qualifier> qualifiers;
    bool grouped = false;
    std::vector<ExprPtr> group_key;
    ExprPtr having;
    int slot_count = 0; // slots used by this comprehension and its subqueries (root only)
};

struct QualifierSplit {
    std::vector<Qualifier> static_part;
    std::vector<Qualifier> dynamic_part;
};

// A relation visible to lowering: a table or an already lowered view.
struct RelationInfo {
    std::vector<ColumnDef> columns;
    bool is_view = false;
    sql::ViewClass cls = sql::ViewClass::Input;
};

using Catalog = std::map<std::string, RelationInfo, std::less<>>;

struct LoweredView {
    std::string name;
    sql::ViewClass cls;
    Comprehension comp;
};

struct Program {
    Catalog catalog;
    std::vector<LoweredView> views; // dependency order

    const LoweredView *find(std::string_view name) const;
};

ExprPtr make(decltype(Expr::node) node);

// Joins become generators with their conditions appended as qualifiers;
// where clauses are split on top-level AND.
Comprehension lower(const sql::ViewDef &view, const Catalog &catalog);

// Lowers (and unnests) every view of a classified program in dependency order.
Program lower_program(const sql::ClassifiedProgram &program);

// Rewrites IN-subqueries over input relations into keyed value sets.
// Correlation must be by equality on input columns. IN over a
// variable-dependent view is rejected; IN over a base table's variable
// column is left nested.
Comprehension unnest(const Comprehension &c, const Catalog &catalog);

// Static qualifiers reference no variable column. In a non-grouped hard
// constraint view, where-qualifiers assert rather than filter, so all of
// them belong to the dynamic part there.
QualifierSplit split_qualifiers(const Comprehension &c, sql::ViewClass cls);

bool references_variable(const Expr &e);
bool references_variable(const Comprehension &c);

// Slots read by `e`, including reads from inside nested comprehensions.
void collect_slots(const Expr &e, std::vector<int> &out);

std::string dump(const Expr &e);
std::string dump(const Comprehension &c);

// Evaluates a comprehension that reads no variable column against the store;
// views it reads are evaluated recursively. Rows are sorted.
store::Relation evaluate(const Program &program, const store::Store &store, const Comprehension &c);

} // namespace weave::ir
