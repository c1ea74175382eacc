#include "formula.hpp"

#include "weave/error.hpp"

#include <algorithm>

namespace weave::compiler::detail {

std::int64_t checked_add(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r))
        throw CompileError("integer overflow while grounding");
    return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r))
        throw CompileError("integer overflow while grounding");
    return r;
}

LinExpr LinExpr::of_var(cp::VarId v, std::int64_t coef)
{
    LinExpr l;
    if (coef != 0)
        l.terms[v] = coef;
    return l;
}

LinExpr LinExpr::of_const(std::int64_t c)
{
    LinExpr l;
    l.constant = c;
    return l;
}

void LinExpr::add(const LinExpr &o, std::int64_t scale)
{
    constant = checked_add(constant, checked_mul(o.constant, scale));
    for (const auto &[v, c] : o.terms) {
        std::int64_t n = checked_add(terms[v], checked_mul(c, scale));
        if (n == 0)
            terms.erase(v);
        else
            terms[v] = n;
    }
}

LinExpr LinExpr::scaled(std::int64_t k) const
{
    LinExpr out;
    out.add(*this, k);
    return out;
}

std::string LinExpr::key() const
{
    std::string s;
    for (const auto &[v, c] : terms)
        s += std::to_string(c) + "*v" + std::to_string(v) + "+";
    return s + std::to_string(constant);
}

FormulaPtr f_const(bool v)
{
    static const FormulaPtr t = std::make_shared<const Formula>(Formula{Formula::Const, true});
    static const FormulaPtr f = std::make_shared<const Formula>(Formula{Formula::Const, false});
    return v ? t : f;
}

bool is_const(const FormulaPtr &f, bool v) { return f->kind == Formula::Const && f->value == v; }

namespace {

FormulaPtr junction(Formula::Kind kind, std::vector<FormulaPtr> kids)
{
    const bool absorbing = kind == Formula::Or; // the constant that decides the junction
    std::vector<FormulaPtr> flat;
    for (auto &k : kids) {
        if (k->kind == Formula::Const) {
            if (k->value == absorbing)
                return f_const(absorbing);
            continue;
        }
        if (k->kind == kind)
            flat.insert(flat.end(), k->kids.begin(), k->kids.end());
        else
            flat.push_back(std::move(k));
    }
    if (flat.empty())
        return f_const(!absorbing);
    if (flat.size() == 1)
        return flat[0];
    Formula f{kind};
    f.kids = std::move(flat);
    return std::make_shared<const Formula>(std::move(f));
}

} // namespace

FormulaPtr f_and(std::vector<FormulaPtr> kids) { return junction(Formula::And, std::move(kids)); }
FormulaPtr f_or(std::vector<FormulaPtr> kids) { return junction(Formula::Or, std::move(kids)); }

FormulaPtr f_not(const FormulaPtr &f)
{
    switch (f->kind) {
    case Formula::Const: return f_const(!f->value);
    case Formula::Cmp: return f_cmp_raw(f->lin, cp::negate(f->rel));
    case Formula::And:
    case Formula::Or: {
        std::vector<FormulaPtr> kids;
        for (const auto &k : f->kids)
            kids.push_back(f_not(k));
        return f->kind == Formula::And ? f_or(std::move(kids)) : f_and(std::move(kids));
    }
    case Formula::Not: return f->kids[0];
    case Formula::AllDiff: {
        Formula n{Formula::Not};
        n.kids.push_back(f);
        return std::make_shared<const Formula>(std::move(n));
    }
    }
    return f;
}

FormulaPtr f_cmp_raw(LinExpr lin, cp::Rel rel)
{
    // lin < 0 <=> lin + 1 <= 0, lin > 0 <=> lin - 1 >= 0.
    if (rel == cp::Rel::LT) {
        lin.constant = checked_add(lin.constant, 1);
        rel = cp::Rel::LE;
    } else if (rel == cp::Rel::GT) {
        lin.constant = checked_add(lin.constant, -1);
        rel = cp::Rel::GE;
    }
    if (lin.is_constant())
        return f_const(cp::holds(lin.constant, rel, 0));
    if (lin.terms.begin()->second < 0) {
        lin = lin.scaled(-1);
        if (rel == cp::Rel::LE)
            rel = cp::Rel::GE;
        else if (rel == cp::Rel::GE)
            rel = cp::Rel::LE;
    }
    Formula f{Formula::Cmp};
    f.lin = std::move(lin);
    f.rel = rel;
    return std::make_shared<const Formula>(std::move(f));
}

FormulaPtr f_alldiff(std::vector<cp::VarId> vars)
{
    std::sort(vars.begin(), vars.end());
    if (std::adjacent_find(vars.begin(), vars.end()) != vars.end())
        return f_false();
    if (vars.size() < 2)
        return f_true();
    Formula f{Formula::AllDiff};
    f.vars = std::move(vars);
    return std::make_shared<const Formula>(std::move(f));
}

void formula_vars(const Formula &f, std::vector<cp::VarId> &out)
{
    switch (f.kind) {
    case Formula::Const: break;
    case Formula::Cmp:
        for (const auto &[v, c] : f.lin.terms)
            out.push_back(v);
        break;
    case Formula::AllDiff: out.insert(out.end(), f.vars.begin(), f.vars.end()); break;
    default:
        for (const auto &k : f.kids)
            formula_vars(*k, out);
    }
}

bool eval_single(const Formula &f, cp::VarId var, std::int64_t value)
{
    switch (f.kind) {
    case Formula::Const: return f.value;
    case Formula::Cmp: {
        std::int64_t s = f.lin.constant;
        for (const auto &[v, c] : f.lin.terms)
            s = checked_add(s, checked_mul(c, v == var ? value : 0));
        return cp::holds(s, f.rel, 0);
    }
    case Formula::AllDiff: return f.vars.size() < 2;
    case Formula::And:
        for (const auto &k : f.kids)
            if (!eval_single(*k, var, value))
                return false;
        return true;
    case Formula::Or:
        for (const auto &k : f.kids)
            if (eval_single(*k, var, value))
                return true;
        return false;
    case Formula::Not: return !eval_single(*f.kids[0], var, value);
    }
    return false;
}

std::string formula_key(const Formula &f)
{
    switch (f.kind) {
    case Formula::Const: return f.value ? "T" : "F";
    case Formula::Cmp: return f.lin.key() + cp::rel_text(f.rel) + "0";
    case Formula::AllDiff: {
        std::string s = "alldiff(";
        for (auto v : f.vars)
            s += std::to_string(v) + ",";
        return s + ")";
    }
    default: {
        std::string s = f.kind == Formula::And ? "and(" : f.kind == Formula::Or ? "or(" : "not(";
        for (const auto &k : f.kids)
            s += formula_key(*k) + ",";
        return s + ")";
    }
    }
}

} // namespace weave::compiler::detail
