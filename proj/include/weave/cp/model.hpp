#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "weave/cp/domain.hpp"

namespace weave::cp {

using VarId = std::int32_t;

enum class VarRole {
    Decision, // one per in-scope variable cell
    Literal,  // 0/1 truth value of a reified comparison
    Defined,  // functionally determined (sums, min/max, objective terms)
    Optional, // naive-mode auxiliary standing for "value if the row is selected"
};

struct Var {
    std::string name;
    Domain domain;
    VarRole role = VarRole::Decision;
};

enum class Rel { EQ, NE, LT, LE, GT, GE };

const char *rel_text(Rel r);
Rel negate(Rel r);
bool holds(std::int64_t a, Rel r, std::int64_t b);

struct Term {
    std::int64_t coef;
    VarId var;
    bool operator==(const Term &) const = default;
};

// sum(coef * var) rel rhs, rel in {EQ, NE, LE, GE}.
struct Linear {
    std::vector<Term> terms;
    Rel rel = Rel::LE;
    std::int64_t rhs = 0;
};

// b <=> (x rel y) when y is set, otherwise b <=> (x rel c).
struct Reified {
    VarId b;
    VarId x;
    Rel rel;
    std::optional<VarId> y;
    std::int64_t c = 0;
};

// Boolean formula over 0/1 literal variables, asserted true. Nodes are
// stored in a flat array; children precede their parents and the last node
// is the root.
struct BoolNode {
    enum Kind { And, Or, Not, Lit, Const } kind;
    std::vector<int> kids;
    VarId lit = -1;
    bool value = false;
};

struct BoolExpr {
    std::vector<BoolNode> nodes;
};

struct AllDifferent {
    std::vector<VarId> vars;
};

struct Membership {
    VarId x;
    Domain values;
    bool negated = false;
};

// y = min(xs) or y = max(xs).
struct MinMax {
    VarId y;
    std::vector<VarId> xs;
    bool is_max = false;
};

using ConstraintBody = std::variant<Linear, Reified, BoolExpr, AllDifferent, Membership, MinMax>;

struct Constraint {
    ConstraintBody body;
    int group = 0;
};

enum class GroupKind { Hard, Soft, Auxiliary, Structural };

// Provenance of a set of grounded constraints: the SQL view and the row keys
// of the binding that produced them. Core extraction removes whole groups.
struct Group {
    std::string view;
    std::vector<std::string> row_keys;
    GroupKind kind = GroupKind::Hard;

    std::string label() const;
};

struct Objective {
    std::vector<Term> terms;
    std::int64_t constant = 0;
};

struct Model {
    std::vector<Var> vars;
    std::vector<Constraint> constraints;
    std::vector<Group> groups;
    std::optional<Objective> objective; // maximized

    VarId add_var(std::string name, Domain domain, VarRole role);
    int add_group(Group g);
    void post(ConstraintBody body, int group) { constraints.push_back({std::move(body), group}); }

    std::size_t count_vars(VarRole role) const;
};

std::vector<VarId> constraint_vars(const ConstraintBody &c);

// Concrete evaluation of one constraint on a full assignment.
bool satisfied(const ConstraintBody &c, const std::vector<std::int64_t> &assignment);

// Indices of constraints violated by `assignment` (which must assign every
// variable a value of its declared domain, otherwise all constraints on that
// variable are reported).
std::vector<std::size_t> violations(const Model &m, const std::vector<std::int64_t> &assignment);

std::int64_t objective_value(const Model &m, const std::vector<std::int64_t> &assignment);

// Deterministic textual listing of vars, domains, constraints and objective.
std::string dump(const Model &m);

} // namespace weave::cp
