#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "formula.hpp"
#include "weave/cp/model.hpp"

namespace weave::compiler::detail {

// A 0/1 value: either a known constant or a literal variable.
struct LitRef {
    bool constant = true;
    bool value = false;
    cp::VarId var = -1;
};

struct EncodeStats {
    std::size_t literals = 0;
    std::size_t defined = 0;
    std::size_t optionals = 0;
    std::size_t memberships = 0;
    std::size_t merged_formulas = 0;
};

// Turns formulas and aggregates into solver constraints. Literals are
// created lazily and shared by structurally equal atoms.
class Encoder {
public:
    Encoder(cp::Model &model, bool rewrites) : m_(model), rewrites_(rewrites) {}

    bool rewrites() const { return rewrites_; }
    cp::Model &model() { return m_; }
    const EncodeStats &stats() const { return stats_; }

    int group(const std::string &view, const std::vector<std::string> &keys, cp::GroupKind kind);

    // `lin rel 0`, folded against the current domains.
    FormulaPtr cmp(LinExpr lin, cp::Rel rel);

    std::pair<std::int64_t, std::int64_t> bounds(const LinExpr &l) const;

    LitRef lit(const FormulaPtr &f, int group);

    // Contribution of `coef` when `cond` holds, as a linear expression.
    // Rewrite mode sums reified literals; naive mode introduces one optional
    // variable per row.
    LinExpr selected(const FormulaPtr &cond, std::int64_t coef, int group);

    // A variable equal to `l` (l itself when it already is one).
    cp::VarId as_var(const LinExpr &l, int group);
    cp::VarId min_max(const std::vector<LinExpr> &xs, bool is_max, int group);

    // Posts `f` as a hard requirement. Single-variable formulas over
    // decision variables are collected per (view, variable) and posted as
    // one membership constraint by flush() in rewrite mode.
    void require(const FormulaPtr &f, int group, const std::string &view);
    void flush();

    // Row key owning a decision variable, for membership provenance.
    std::function<std::string(cp::VarId)> owner;

private:
    int build(const FormulaPtr &f, cp::BoolExpr &e, int group);
    void post_linear(const LinExpr &l, cp::Rel rel, int group);
    int structural(int group);

    struct Pending {
        cp::VarId var;
        std::string view;
        cp::Domain allowed;
        int group;
    };

    cp::Model &m_;
    bool rewrites_;
    EncodeStats stats_;
    std::map<std::tuple<std::string, std::vector<std::string>, cp::GroupKind>, int> groups_;
    std::map<std::string, cp::VarId> lits_;
    std::map<std::string, cp::VarId> defined_;
    std::vector<Pending> pending_;
    std::map<std::pair<std::string, cp::VarId>, std::size_t> pending_index_;
};

} // namespace weave::compiler::detail
