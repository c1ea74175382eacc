#pragma once

// Symbolic values produced while grounding views: static values, integer
// linear expressions over solver variables, and boolean formulas whose
// atoms are linear comparisons. Formulas are kept in negation normal form;
// Not only ever wraps an AllDiff atom.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "weave/cp/model.hpp"
#include "weave/value.hpp"

namespace weave::compiler::detail {

std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);

struct LinExpr {
    std::map<cp::VarId, std::int64_t> terms; // no zero coefficients
    std::int64_t constant = 0;

    static LinExpr of_var(cp::VarId v, std::int64_t coef = 1);
    static LinExpr of_const(std::int64_t c);

    bool is_constant() const { return terms.empty(); }
    void add(const LinExpr &o, std::int64_t scale = 1);
    LinExpr scaled(std::int64_t k) const;
    std::string key() const;
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
    enum Kind { Const, Cmp, AllDiff, And, Or, Not } kind;
    bool value = false;          // Const
    LinExpr lin;                 // Cmp: lin rel 0
    cp::Rel rel = cp::Rel::EQ;   // Cmp
    std::vector<cp::VarId> vars; // AllDiff
    std::vector<FormulaPtr> kids;
};

FormulaPtr f_const(bool v);
inline FormulaPtr f_true() { return f_const(true); }
inline FormulaPtr f_false() { return f_const(false); }
bool is_const(const FormulaPtr &f, bool v);

FormulaPtr f_and(std::vector<FormulaPtr> kids);
FormulaPtr f_or(std::vector<FormulaPtr> kids);
FormulaPtr f_not(const FormulaPtr &f);
inline FormulaPtr f_implies(const FormulaPtr &a, const FormulaPtr &b) { return f_or({f_not(a), b}); }

// Raw comparison atom `lin rel 0`, normalized; folds when lin is constant.
// Callers that know domains should go through Encoder::cmp.
FormulaPtr f_cmp_raw(LinExpr lin, cp::Rel rel);
FormulaPtr f_alldiff(std::vector<cp::VarId> vars);

void formula_vars(const Formula &f, std::vector<cp::VarId> &out);
// Value of f when `var` takes `value`; f must mention no other variable.
bool eval_single(const Formula &f, cp::VarId var, std::int64_t value);
std::string formula_key(const Formula &f);

// A grounded cell or expression value.
struct Sym {
    enum Kind { Val, Lin, Form } kind = Val;
    Value val;
    LinExpr lin;
    FormulaPtr form;
    bool text = false; // Lin over interned text ids

    static Sym value(Value v) { return Sym{Val, std::move(v), {}, nullptr, false}; }
    static Sym linear(LinExpr l, bool text = false) { return Sym{Lin, {}, std::move(l), nullptr, text}; }
    static Sym formula(FormulaPtr f) { return Sym{Form, {}, {}, std::move(f), false}; }
};

} // namespace weave::compiler::detail
