#include "encoder.hpp"

#include "weave/error.hpp"

#include <algorithm>

namespace weave::compiler::detail {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
    std::int64_t q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b)
{
    std::int64_t q = a / b;
    return (a % b != 0 && ((a < 0) == (b < 0))) ? q + 1 : q;
}

} // namespace

int Encoder::group(const std::string &view, const std::vector<std::string> &keys, cp::GroupKind kind)
{
    auto k = std::make_tuple(view, keys, kind);
    auto it = groups_.find(k);
    if (it != groups_.end())
        return it->second;
    int id = m_.add_group({view, keys, kind});
    groups_.emplace(std::move(k), id);
    return id;
}

int Encoder::structural(int g)
{
    const auto &grp = m_.groups[static_cast<std::size_t>(g)];
    if (grp.kind == cp::GroupKind::Structural)
        return g;
    return group(grp.view, grp.row_keys, cp::GroupKind::Structural);
}

std::pair<std::int64_t, std::int64_t> Encoder::bounds(const LinExpr &l) const
{
    std::int64_t lo = l.constant, hi = l.constant;
    for (const auto &[v, c] : l.terms) {
        const auto &d = m_.vars[static_cast<std::size_t>(v)].domain;
        if (d.empty())
            continue;
        std::int64_t a = checked_mul(c, d.min()), b = checked_mul(c, d.max());
        lo = checked_add(lo, std::min(a, b));
        hi = checked_add(hi, std::max(a, b));
    }
    return {lo, hi};
}

FormulaPtr Encoder::cmp(LinExpr lin, cp::Rel rel)
{
    FormulaPtr f = f_cmp_raw(std::move(lin), rel);
    if (f->kind != Formula::Cmp)
        return f;
    if (f->lin.terms.size() == 1) {
        cp::VarId x = f->lin.terms.begin()->first;
        const auto &d = m_.vars[static_cast<std::size_t>(x)].domain;
        if (d.size() <= 4096) {
            bool any_true = false, any_false = false;
            for (auto v : d.values()) {
                (eval_single(*f, x, v) ? any_true : any_false) = true;
                if (any_true && any_false)
                    return f;
            }
            return f_const(any_true);
        }
    }
    auto [lo, hi] = bounds(f->lin);
    switch (f->rel) {
    case cp::Rel::LE:
        if (hi <= 0)
            return f_true();
        if (lo > 0)
            return f_false();
        break;
    case cp::Rel::GE:
        if (lo >= 0)
            return f_true();
        if (hi < 0)
            return f_false();
        break;
    case cp::Rel::EQ:
        if (lo > 0 || hi < 0)
            return f_false();
        if (lo == 0 && hi == 0)
            return f_true();
        break;
    case cp::Rel::NE:
        if (lo > 0 || hi < 0)
            return f_true();
        if (lo == 0 && hi == 0)
            return f_false();
        break;
    default: break;
    }
    return f;
}

cp::VarId Encoder::as_var(const LinExpr &l, int g)
{
    if (l.constant == 0 && l.terms.size() == 1 && l.terms.begin()->second == 1)
        return l.terms.begin()->first;
    std::string key = l.key();
    auto it = defined_.find(key);
    if (it != defined_.end())
        return it->second;
    auto [lo, hi] = bounds(l);
    cp::VarId s = m_.add_var("s" + std::to_string(stats_.defined++), cp::Domain(lo, hi), cp::VarRole::Defined);
    LinExpr def = l;
    def.add(LinExpr::of_var(s), -1); // l - s = 0
    post_linear(def, cp::Rel::EQ, structural(g));
    defined_.emplace(std::move(key), s);
    return s;
}

cp::VarId Encoder::min_max(const std::vector<LinExpr> &xs, bool is_max, int g)
{
    cp::MinMax mm;
    mm.is_max = is_max;
    std::int64_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto [a, b] = bounds(xs[i]);
        if (i == 0) {
            lo = a;
            hi = b;
        } else if (is_max) {
            lo = std::max(lo, a);
            hi = std::max(hi, b);
        } else {
            lo = std::min(lo, a);
            hi = std::min(hi, b);
        }
        mm.xs.push_back(as_var(xs[i], g));
    }
    mm.y = m_.add_var(std::string(is_max ? "max" : "min") + std::to_string(stats_.defined++), cp::Domain(lo, hi),
                      cp::VarRole::Defined);
    cp::VarId y = mm.y;
    m_.post(std::move(mm), structural(g));
    return y;
}

LitRef Encoder::lit(const FormulaPtr &f, int g)
{
    if (f->kind == Formula::Const)
        return {true, f->value, -1};
    if (f->kind == Formula::AllDiff || f->kind == Formula::Not)
        throw CompileError("all_different is only supported as an asserted condition");
    std::string key = formula_key(*f);
    auto it = lits_.find(key);
    if (it != lits_.end())
        return {false, false, it->second};
    int sg = structural(g);
    cp::VarId b = m_.add_var("b" + std::to_string(stats_.literals++), cp::Domain(0, 1), cp::VarRole::Literal);
    if (f->kind == Formula::Cmp) {
        const auto &terms = f->lin.terms;
        std::int64_t k = f->lin.constant;
        auto first = terms.begin();
        if (terms.size() == 1 && (first->second == 1 || f->rel == cp::Rel::LE || f->rel == cp::Rel::GE ||
                                  (-k) % first->second == 0)) {
            // a*x + k rel 0 with a > 0 after normalization.
            std::int64_t a = first->second;
            std::int64_t c = f->rel == cp::Rel::LE   ? floor_div(-k, a)
                             : f->rel == cp::Rel::GE ? ceil_div(-k, a)
                                                     : -k / a;
            m_.post(cp::Reified{b, first->first, f->rel, std::nullopt, c}, sg);
        } else if (terms.size() == 2 && k == 0 && first->second == 1 && std::next(first)->second == -1) {
            m_.post(cp::Reified{b, first->first, f->rel, std::next(first)->first, 0}, sg);
        } else {
            LinExpr body = f->lin;
            body.constant = 0;
            cp::VarId s = as_var(body, g);
            m_.post(cp::Reified{b, s, f->rel, std::nullopt, -k}, sg);
        }
    } else {
        // b <=> F as (b and F) or (not b and not F).
        cp::BoolExpr e;
        int fb = build(f, e, g);
        int nf = build(f_not(f), e, g);
        e.nodes.push_back({cp::BoolNode::Lit, {}, b});
        int lb = static_cast<int>(e.nodes.size()) - 1;
        e.nodes.push_back({cp::BoolNode::Not, {lb}});
        int nb = static_cast<int>(e.nodes.size()) - 1;
        e.nodes.push_back({cp::BoolNode::And, {lb, fb}});
        int both = static_cast<int>(e.nodes.size()) - 1;
        e.nodes.push_back({cp::BoolNode::And, {nb, nf}});
        int neither = static_cast<int>(e.nodes.size()) - 1;
        e.nodes.push_back({cp::BoolNode::Or, {both, neither}});
        m_.post(std::move(e), sg);
    }
    lits_.emplace(std::move(key), b);
    return {false, false, b};
}

int Encoder::build(const FormulaPtr &f, cp::BoolExpr &e, int g)
{
    switch (f->kind) {
    case Formula::Const: e.nodes.push_back({cp::BoolNode::Const, {}, -1, f->value}); break;
    case Formula::And:
    case Formula::Or: {
        std::vector<int> kids;
        for (const auto &k : f->kids)
            kids.push_back(build(k, e, g));
        e.nodes.push_back({f->kind == Formula::And ? cp::BoolNode::And : cp::BoolNode::Or, std::move(kids)});
        break;
    }
    default: {
        LitRef l = lit(f, g);
        e.nodes.push_back({cp::BoolNode::Lit, {}, l.var});
    }
    }
    return static_cast<int>(e.nodes.size()) - 1;
}

LinExpr Encoder::selected(const FormulaPtr &cond, std::int64_t coef, int g)
{
    if (coef == 0)
        return {};
    LitRef l = lit(cond, g);
    if (l.constant)
        return LinExpr::of_const(l.value ? coef : 0);
    if (rewrites_)
        return LinExpr::of_var(l.var, coef);
    cp::VarId o = m_.add_var("o" + std::to_string(stats_.optionals++), cp::Domain::of({0, coef}), cp::VarRole::Optional);
    m_.post(cp::Reified{l.var, o, cp::Rel::EQ, std::nullopt, coef}, structural(g));
    return LinExpr::of_var(o);
}

void Encoder::post_linear(const LinExpr &l, cp::Rel rel, int g)
{
    cp::Linear lin;
    for (const auto &[v, c] : l.terms)
        lin.terms.push_back({c, v});
    lin.rel = rel;
    lin.rhs = checked_mul(l.constant, -1);
    m_.post(std::move(lin), g);
}

void Encoder::require(const FormulaPtr &f, int g, const std::string &view)
{
    switch (f->kind) {
    case Formula::Const:
        if (!f->value)
            m_.post(cp::BoolExpr{{{cp::BoolNode::Const, {}, -1, false}}}, g);
        return;
    case Formula::And:
        for (const auto &k : f->kids)
            require(k, g, view);
        return;
    case Formula::AllDiff:
        if (rewrites_) {
            m_.post(cp::AllDifferent{f->vars}, g);
        } else {
            for (std::size_t i = 0; i < f->vars.size(); ++i)
                for (std::size_t j = i + 1; j < f->vars.size(); ++j)
                    m_.post(cp::Linear{{{1, f->vars[i]}, {-1, f->vars[j]}}, cp::Rel::NE, 0}, g);
        }
        return;
    case Formula::Not: throw CompileError("negated all_different is unsupported");
    default: break;
    }
    std::vector<cp::VarId> vars;
    formula_vars(*f, vars);
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    if (rewrites_ && vars.size() == 1 && m_.vars[static_cast<std::size_t>(vars[0])].role == cp::VarRole::Decision) {
        cp::VarId x = vars[0];
        std::vector<std::int64_t> allowed;
        const auto &dom = m_.vars[static_cast<std::size_t>(x)].domain;
        for (auto v : dom.values())
            if (eval_single(*f, x, v))
                allowed.push_back(v);
        ++stats_.merged_formulas;
        auto key = std::make_pair(view, x);
        auto it = pending_index_.find(key);
        if (it == pending_index_.end()) {
            int mg = group(view, {owner ? owner(x) : m_.vars[static_cast<std::size_t>(x)].name}, m_.groups[g].kind);
            pending_index_.emplace(key, pending_.size());
            pending_.push_back({x, view, cp::Domain::of(allowed), mg});
        } else {
            pending_[it->second].allowed.intersect(cp::Domain::of(allowed));
        }
        return;
    }
    if (f->kind == Formula::Cmp) {
        post_linear(f->lin, f->rel, g);
        return;
    }
    cp::BoolExpr e;
    build(f, e, g);
    m_.post(std::move(e), g);
}

void Encoder::flush()
{
    for (auto &p : pending_) {
        const auto &dom = m_.vars[static_cast<std::size_t>(p.var)].domain;
        if (p.allowed.size() == dom.size())
            continue; // every value allowed
        m_.post(cp::Membership{p.var, std::move(p.allowed), false}, p.group);
        ++stats_.memberships;
    }
    pending_.clear();
    pending_index_.clear();
}

} // namespace weave::compiler::detail
