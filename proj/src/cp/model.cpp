#include "weave/cp/model.hpp"

#include <algorithm>

namespace weave::cp {

const char *rel_text(Rel r)
{
    switch (r) {
    case Rel::EQ: return "=";
    case Rel::NE: return "!=";
    case Rel::LT: return "<";
    case Rel::LE: return "<=";
    case Rel::GT: return ">";
    case Rel::GE: return ">=";
    }
    return "?";
}

Rel negate(Rel r)
{
    switch (r) {
    case Rel::EQ: return Rel::NE;
    case Rel::NE: return Rel::EQ;
    case Rel::LT: return Rel::GE;
    case Rel::LE: return Rel::GT;
    case Rel::GT: return Rel::LE;
    case Rel::GE: return Rel::LT;
    }
    return r;
}

bool holds(std::int64_t a, Rel r, std::int64_t b)
{
    switch (r) {
    case Rel::EQ: return a == b;
    case Rel::NE: return a != b;
    case Rel::LT: return a < b;
    case Rel::LE: return a <= b;
    case Rel::GT: return a > b;
    case Rel::GE: return a >= b;
    }
    return false;
}

std::string Group::label() const
{
    std::string s = view + "[";
    for (std::size_t i = 0; i < row_keys.size(); ++i)
        s += (i ? "," : "") + row_keys[i];
    return s + "]";
}

VarId Model::add_var(std::string name, Domain domain, VarRole role)
{
    vars.push_back({std::move(name), std::move(domain), role});
    return static_cast<VarId>(vars.size() - 1);
}

int Model::add_group(Group g)
{
    groups.push_back(std::move(g));
    return static_cast<int>(groups.size() - 1);
}

std::size_t Model::count_vars(VarRole role) const
{
    return static_cast<std::size_t>(std::count_if(vars.begin(), vars.end(), [&](const Var &v) { return v.role == role; }));
}

std::vector<VarId> constraint_vars(const ConstraintBody &c)
{
    std::vector<VarId> out;
    std::visit(
        [&](const auto &k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Linear>) {
                for (const auto &t : k.terms)
                    out.push_back(t.var);
            } else if constexpr (std::is_same_v<T, Reified>) {
                out.push_back(k.b);
                out.push_back(k.x);
                if (k.y)
                    out.push_back(*k.y);
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                for (const auto &n : k.nodes)
                    if (n.kind == BoolNode::Lit)
                        out.push_back(n.lit);
            } else if constexpr (std::is_same_v<T, AllDifferent>) {
                out = k.vars;
            } else if constexpr (std::is_same_v<T, Membership>) {
                out.push_back(k.x);
            } else {
                out.push_back(k.y);
                out.insert(out.end(), k.xs.begin(), k.xs.end());
            }
        },
        c);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool satisfied(const ConstraintBody &c, const std::vector<std::int64_t> &a)
{
    return std::visit(
        [&](const auto &k) -> bool {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Linear>) {
                __int128 s = 0;
                for (const auto &t : k.terms)
                    s += static_cast<__int128>(t.coef) * a[t.var];
                switch (k.rel) {
                case Rel::EQ: return s == k.rhs;
                case Rel::NE: return s != k.rhs;
                case Rel::LT: return s < k.rhs;
                case Rel::LE: return s <= k.rhs;
                case Rel::GT: return s > k.rhs;
                case Rel::GE: return s >= k.rhs;
                }
                return false;
            } else if constexpr (std::is_same_v<T, Reified>) {
                bool truth = holds(a[k.x], k.rel, k.y ? a[*k.y] : k.c);
                return a[k.b] == (truth ? 1 : 0);
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                std::vector<bool> val(k.nodes.size());
                for (std::size_t i = 0; i < k.nodes.size(); ++i) {
                    const auto &n = k.nodes[i];
                    switch (n.kind) {
                    case BoolNode::Const: val[i] = n.value; break;
                    case BoolNode::Lit: val[i] = a[n.lit] != 0; break;
                    case BoolNode::Not: val[i] = !val[n.kids[0]]; break;
                    case BoolNode::And:
                        val[i] = std::all_of(n.kids.begin(), n.kids.end(), [&](int j) { return val[j]; });
                        break;
                    case BoolNode::Or:
                        val[i] = std::any_of(n.kids.begin(), n.kids.end(), [&](int j) { return val[j]; });
                        break;
                    }
                }
                return !k.nodes.empty() && val.back();
            } else if constexpr (std::is_same_v<T, AllDifferent>) {
                std::vector<std::int64_t> v;
                for (auto x : k.vars)
                    v.push_back(a[x]);
                std::sort(v.begin(), v.end());
                return std::adjacent_find(v.begin(), v.end()) == v.end();
            } else if constexpr (std::is_same_v<T, Membership>) {
                return k.values.contains(a[k.x]) != k.negated;
            } else {
                if (k.xs.empty())
                    return false;
                std::int64_t best = a[k.xs[0]];
                for (auto x : k.xs)
                    best = k.is_max ? std::max(best, a[x]) : std::min(best, a[x]);
                return a[k.y] == best;
            }
        },
        c);
}

std::vector<std::size_t> violations(const Model &m, const std::vector<std::int64_t> &assignment)
{
    std::vector<std::size_t> out;
    std::vector<bool> bad_var(m.vars.size(), false);
    for (std::size_t v = 0; v < m.vars.size(); ++v)
        bad_var[v] = v >= assignment.size() || !m.vars[v].domain.contains(assignment[v]);
    for (std::size_t i = 0; i < m.constraints.size(); ++i) {
        auto vars = constraint_vars(m.constraints[i].body);
        bool bad = std::any_of(vars.begin(), vars.end(), [&](VarId v) { return bad_var[v]; });
        if (bad || !satisfied(m.constraints[i].body, assignment))
            out.push_back(i);
    }
    return out;
}

std::int64_t objective_value(const Model &m, const std::vector<std::int64_t> &assignment)
{
    if (!m.objective)
        return 0;
    std::int64_t s = m.objective->constant;
    for (const auto &t : m.objective->terms)
        s += t.coef * assignment[t.var];
    return s;
}

namespace {

std::string var_name(const Model &m, VarId v) { return "v" + std::to_string(v); }

std::string terms_text(const Model &m, const std::vector<Term> &terms)
{
    std::string s;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        std::int64_t c = terms[i].coef;
        if (i)
            s += c < 0 ? " - " : " + ";
        else if (c < 0)
            s += "-";
        std::int64_t mag = c < 0 ? -c : c;
        if (mag != 1)
            s += std::to_string(mag) + "*";
        s += var_name(m, terms[i].var);
    }
    return terms.empty() ? "0" : s;
}

const char *role_text(VarRole r)
{
    switch (r) {
    case VarRole::Decision: return "decision";
    case VarRole::Literal: return "literal";
    case VarRole::Defined: return "defined";
    case VarRole::Optional: return "optional";
    }
    return "?";
}

} // namespace

std::string dump(const Model &m)
{
    std::string out;
    out += "vars " + std::to_string(m.vars.size()) + "\n";
    for (std::size_t i = 0; i < m.vars.size(); ++i)
        out += "  " + var_name(m, static_cast<VarId>(i)) + " " + role_text(m.vars[i].role) + " " + m.vars[i].name + " in " +
               m.vars[i].domain.str() + "\n";
    out += "constraints " + std::to_string(m.constraints.size()) + "\n";
    for (const auto &c : m.constraints) {
        std::string body = std::visit(
            [&](const auto &k) -> std::string {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Linear>) {
                    return "linear " + terms_text(m, k.terms) + " " + rel_text(k.rel) + " " + std::to_string(k.rhs);
                } else if constexpr (std::is_same_v<T, Reified>) {
                    return "reified " + var_name(m, k.b) + " <-> " + var_name(m, k.x) + " " + rel_text(k.rel) + " " +
                           (k.y ? var_name(m, *k.y) : std::to_string(k.c));
                } else if constexpr (std::is_same_v<T, BoolExpr>) {
                    std::vector<std::string> txt(k.nodes.size());
                    for (std::size_t i = 0; i < k.nodes.size(); ++i) {
                        const auto &n = k.nodes[i];
                        switch (n.kind) {
                        case BoolNode::Const: txt[i] = n.value ? "true" : "false"; break;
                        case BoolNode::Lit: txt[i] = var_name(m, n.lit); break;
                        case BoolNode::Not: txt[i] = "not " + txt[n.kids[0]]; break;
                        case BoolNode::And:
                        case BoolNode::Or: {
                            std::string s = "(";
                            for (std::size_t j = 0; j < n.kids.size(); ++j)
                                s += (j ? (n.kind == BoolNode::And ? " and " : " or ") : "") + txt[n.kids[j]];
                            txt[i] = s + ")";
                            break;
                        }
                        }
                    }
                    return "bool " + (txt.empty() ? std::string("false") : txt.back());
                } else if constexpr (std::is_same_v<T, AllDifferent>) {
                    std::string s = "all_different(";
                    for (std::size_t i = 0; i < k.vars.size(); ++i)
                        s += (i ? ", " : "") + var_name(m, k.vars[i]);
                    return s + ")";
                } else if constexpr (std::is_same_v<T, Membership>) {
                    return "member " + var_name(m, k.x) + (k.negated ? " not in " : " in ") + k.values.str();
                } else {
                    std::string s = std::string(k.is_max ? "max " : "min ") + var_name(m, k.y) + " = (";
                    for (std::size_t i = 0; i < k.xs.size(); ++i)
                        s += (i ? ", " : "") + var_name(m, k.xs[i]);
                    return s + ")";
                }
            },
            c.body);
        out += "  " + body + "  # " + m.groups.at(c.group).label() + "\n";
    }
    if (m.objective)
        out += "maximize " + terms_text(m, m.objective->terms) +
               (m.objective->constant ? " + " + std::to_string(m.objective->constant) : std::string()) + "\n";
    else
        out += "satisfy\n";
    return out;
}

} // namespace weave::cp
