#include "encoder.hpp"
#include "formula.hpp"
#include "weave/compiler/compiler.hpp"
#include "weave/error.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>

namespace weave::compiler {

using namespace detail;
using sql::AggFn;
using sql::BinOp;
using sql::UnOp;

namespace {

struct SymRow {
    std::vector<Sym> cells;
    FormulaPtr cond;
    std::string key;
};

using SymRelation = std::vector<SymRow>;
using Env = std::vector<const SymRow *>;

struct Binding {
    Env env;
    FormulaPtr cond;
};

using Group = std::vector<Binding>;

bool truthy(const Value &v)
{
    const auto *b = std::get_if<bool>(&v);
    return b && *b;
}

cp::Rel rel_of(BinOp op)
{
    switch (op) {
    case BinOp::Eq: return cp::Rel::EQ;
    case BinOp::Ne: return cp::Rel::NE;
    case BinOp::Lt: return cp::Rel::LT;
    case BinOp::Le: return cp::Rel::LE;
    case BinOp::Gt: return cp::Rel::GT;
    default: return cp::Rel::GE;
    }
}

std::string key_text(const std::vector<Sym> &cells)
{
    if (!cells.empty() && cells[0].kind == Sym::Val)
        return to_string(cells[0].val);
    return "?";
}

class Grounder {
public:
    Grounder(const Template &t, const store::Store &store, const BindOptions &opt)
        : t_(t), store_(store), opt_(opt), enc_(out_.model, opt.rewrites)
    {
        out_.rewrites = opt.rewrites;
        enc_.owner = [this](cp::VarId v) {
            auto it = cell_of_var_.find(v);
            return it == cell_of_var_.end() ? out_.model.vars[static_cast<std::size_t>(v)].name
                                            : to_string(out_.cells[it->second].row_key);
        };
    }

    GroundModel run()
    {
        for (const auto &table : t_.program.tables)
            if (!store_.has_table(table.name))
                throw StoreError("store has no table " + table.name);
        universes();
        cells();
        for (const auto &table : t_.program.tables)
            table_relation(table);
        for (std::size_t i = 0; i < t_.ir.views.size(); ++i) {
            const auto &view = t_.ir.views[i];
            const auto &plan = t_.views[i];
            try {
                ground_view(view, plan);
            } catch (const CompileError &e) {
                throw CompileError("view " + view.name + ": " + e.what());
            }
            enc_.flush();
        }
        objective();
        return std::move(out_);
    }

private:
    // ---- universes and decision variables ----

    std::int64_t intern(const std::string &s)
    {
        auto it = text_ids_.find(s);
        if (it != text_ids_.end())
            return it->second;
        auto id = static_cast<std::int64_t>(out_.text_values.size());
        out_.text_values.push_back(s);
        text_ids_.emplace(s, id);
        return id;
    }

    std::optional<std::int64_t> lookup(const Value &v) const
    {
        if (const auto *i = std::get_if<std::int64_t>(&v))
            return *i;
        if (const auto *s = std::get_if<std::string>(&v)) {
            auto it = text_ids_.find(*s);
            if (it != text_ids_.end())
                return it->second;
        }
        return std::nullopt;
    }

    std::int64_t encode(const Value &v) { return std::holds_alternative<std::string>(v) ? intern(std::get<std::string>(v)) : std::get<std::int64_t>(v); }

    void universes()
    {
        for (const auto &g : t_.var_groups) {
            std::vector<Value> values;
            auto take = [&](const std::vector<std::string> &cols, const std::vector<store::Row> &rows, const std::string &col) {
                auto idx = std::find(cols.begin(), cols.end(), col) - cols.begin();
                for (const auto &r : rows)
                    if (!is_unset(r[static_cast<std::size_t>(idx)]))
                        values.push_back(r[static_cast<std::size_t>(idx)]);
            };
            if (g.sources.empty()) {
                for (const auto &r : store_.rows(g.table))
                    if (!is_unset(r[g.column_index]))
                        values.push_back(r[g.column_index]);
            }
            for (const auto &s : g.sources) {
                if (store_.has_table(s.relation)) {
                    std::vector<std::string> cols;
                    for (const auto &c : store_.def(s.relation).columns)
                        cols.push_back(c.name);
                    take(cols, store_.rows(s.relation), s.column);
                } else {
                    const auto *v = t_.ir.find(s.relation);
                    auto rel = ir::evaluate(t_.ir, store_, v->comp);
                    take(rel.columns, rel.rows, s.column);
                }
            }
            std::vector<std::int64_t> ids;
            for (const auto &v : values)
                ids.push_back(encode(v));
            universe_.push_back(cp::Domain::of(ids));
        }
    }

    void cells()
    {
        // In-scope rows per table.
        std::map<std::string, std::vector<bool>> in_scope;
        for (const auto &table : t_.program.tables) {
            if (!table.has_variable_columns())
                continue;
            const auto &rows = store_.rows(table.name);
            std::vector<bool> scope(rows.size(), opt_.scope == Scope::All);
            for (std::size_t r = 0; r < rows.size(); ++r)
                for (std::size_t c = 0; c < table.columns.size(); ++c)
                    if (table.columns[c].is_variable && is_unset(rows[r][c]))
                        scope[r] = true;
            in_scope[table.name] = std::move(scope);
        }
        // Priorities: pinning threshold and lexicographic weights.
        std::optional<std::int64_t> pin_at;
        std::map<std::int64_t, int> rank;
        std::set<std::pair<std::string, std::size_t>> pinned;
        if (opt_.priority_column) {
            for (const auto &g : t_.var_groups) {
                const auto &def = store_.def(g.table);
                auto pc = def.column_index(*opt_.priority_column);
                if (!pc)
                    throw CompileError("priority column " + *opt_.priority_column + " not in table " + g.table);
                const auto &rows = store_.rows(g.table);
                for (std::size_t r = 0; r < rows.size(); ++r) {
                    if (!in_scope[g.table][r])
                        continue;
                    const auto *p = std::get_if<std::int64_t>(&rows[r][*pc]);
                    if (!p)
                        throw CompileError("priority column " + *opt_.priority_column + " must hold integers");
                    rank[*p] = 0;
                    if (is_unset(rows[r][g.column_index]))
                        pin_at = pin_at ? std::max(*pin_at, *p) : *p;
                }
            }
            int k = 0;
            for (auto &[p, r] : rank)
                r = k++;
            // Pinned rows cannot be evicted. Without moves they cannot change
            // at all, so they stay constants like rows out of scope.
            if (opt_.allow_evict || opt_.max_moves)
                for (const auto &g : t_.var_groups) {
                    auto pc = *store_.def(g.table).column_index(*opt_.priority_column);
                    const auto &rows = store_.rows(g.table);
                    for (std::size_t r = 0; r < rows.size(); ++r)
                        if (in_scope[g.table][r] && !is_unset(rows[r][g.column_index]) &&
                            (!pin_at || std::get<std::int64_t>(rows[r][pc]) >= *pin_at)) {
                            if (opt_.max_moves)
                                pinned.insert({g.table, r});
                            else
                                in_scope[g.table][r] = false;
                        }
                }
        }
        std::size_t n_cells = 0;
        for (const auto &g : t_.var_groups)
            for (bool s : in_scope[g.table])
                n_cells += s;

        // Real values get ids below unset_base; unset cells get one id each above it.
        std::int64_t base = static_cast<std::int64_t>(out_.text_values.size());
        for (const auto &u : universe_)
            if (!u.empty())
                base = std::max(base, checked_add(u.max(), 1));
        std::vector<std::pair<std::size_t, std::size_t>> pending; // (group, row)
        for (std::size_t gi = 0; gi < t_.var_groups.size(); ++gi) {
            const auto &g = t_.var_groups[gi];
            const auto &rows = store_.rows(g.table);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (!in_scope[g.table][r])
                    continue;
                pending.emplace_back(gi, r);
                const Value &prior = rows[r][g.column_index];
                if (!is_unset(prior))
                    base = std::max(base, checked_add(encode(prior), 1));
            }
        }
        base = std::max<std::int64_t>(base, 0);
        out_.unset_base = base;

        int moves_group = -1;
        cp::Linear moves{{}, cp::Rel::LE, opt_.max_moves.value_or(0)};
        for (std::size_t i = 0; i < pending.size(); ++i) {
            auto [gi, r] = pending[i];
            const auto &g = t_.var_groups[gi];
            const auto &row = store_.rows(g.table)[r];
            const Value &prior = row[g.column_index];
            Cell cell;
            cell.table = g.table;
            cell.row = r;
            cell.column = g.column_index;
            cell.column_name = g.column;
            cell.type = g.type;
            cell.row_key = store_.key_value(g.table, r);
            cell.prior = prior;
            std::int64_t unset_id = checked_add(base, static_cast<std::int64_t>(i));
            cell.unchanged = is_unset(prior) ? unset_id : encode(prior);
            // Assigning one cell outweighs keeping every placed cell in place,
            // and each priority level outweighs all levels below it.
            const auto scale = static_cast<std::int64_t>(n_cells) + 1;
            cell.weight = scale;
            if (opt_.priority_column) {
                auto pc = *store_.def(g.table).column_index(*opt_.priority_column);
                std::int64_t p = std::get<std::int64_t>(row[pc]);
                for (int k = 0; k < rank[p]; ++k)
                    cell.weight = checked_mul(cell.weight, scale);
            }
            cp::Domain dom;
            if (is_unset(prior)) {
                dom = universe_[gi];
                if (opt_.allow_unset)
                    dom = dom.unite(cp::Domain::of({unset_id}));
            } else {
                std::int64_t pid = encode(prior);
                if (opt_.max_moves) {
                    dom = universe_[gi];
                    dom = dom.unite(cp::Domain::of({pid}));
                    if (opt_.allow_evict && !pinned.count({g.table, r}))
                        dom = dom.unite(cp::Domain::of({unset_id}));
                } else if (opt_.allow_evict) {
                    dom = cp::Domain::of({pid, unset_id});
                } else {
                    dom = universe_[gi];
                }
            }
            std::string name = g.table + "." + g.column + "[" + to_string(cell.row_key) + "]";
            bool empty = dom.empty();
            if (empty)
                dom = cp::Domain::of({unset_id});
            cell.var = out_.model.add_var(name, dom, cp::VarRole::Decision);
            if (empty) {
                int eg = enc_.group("empty domain", {g.table + "." + g.column, to_string(cell.row_key)}, cp::GroupKind::Hard);
                enc_.require(f_false(), eg, "empty domain");
            }
            if (dom.max() >= base)
                unsettable_.insert(cell.var);
            cell_of_var_[cell.var] = out_.cells.size();
            cell_index_[{g.table, r, g.column_index}] = out_.cells.size();
            if (opt_.max_moves && !is_unset(prior) && dom.size() > 1) {
                if (moves_group < 0)
                    moves_group = enc_.group("max_moves", {std::to_string(*opt_.max_moves)}, cp::GroupKind::Hard);
                LinExpr diff = LinExpr::of_var(cell.var);
                diff.constant = -encode(prior);
                LitRef moved = enc_.lit(enc_.cmp(diff, cp::Rel::NE), moves_group);
                if (!moved.constant)
                    moves.terms.push_back({1, moved.var});
                else if (moved.value)
                    moves.rhs -= 1;
            }
            out_.cells.push_back(std::move(cell));
        }
        if (moves_group >= 0)
            out_.model.post(std::move(moves), moves_group);
    }

    FormulaPtr assigned(cp::VarId v)
    {
        if (!unsettable_.count(v))
            return f_true();
        LinExpr l = LinExpr::of_var(v);
        l.constant = -(out_.unset_base - 1);
        return enc_.cmp(l, cp::Rel::LE);
    }

    void table_relation(const TableDef &table)
    {
        SymRelation rel;
        const auto &rows = store_.rows(table.name);
        rel.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            SymRow row;
            row.cond = f_true();
            row.key = store_.row_key(table.name, r);
            for (std::size_t c = 0; c < table.columns.size(); ++c) {
                auto it = cell_index_.find({table.name, r, c});
                if (it != cell_index_.end())
                    row.cells.push_back(Sym::linear(LinExpr::of_var(out_.cells[it->second].var),
                                                    table.columns[c].dtype == DType::Text));
                else
                    row.cells.push_back(Sym::value(rows[r][c]));
            }
            rel.push_back(std::move(row));
        }
        relations_[table.name] = std::move(rel);
    }

    // ---- views ----

    void ground_view(const ir::LoweredView &view, const ViewPlan &plan)
    {
        view_ = view.name;
        env_.assign(static_cast<std::size_t>(std::max(view.comp.slot_count, 1)), nullptr);
        switch (view.cls) {
        case sql::ViewClass::Input: {
            auto rel = ir::evaluate(t_.ir, store_, view.comp);
            SymRelation out;
            for (auto &r : rel.rows) {
                SymRow row;
                row.cond = f_true();
                for (auto &v : r)
                    row.cells.push_back(Sym::value(std::move(v)));
                row.key = key_text(row.cells);
                out.push_back(std::move(row));
            }
            relations_[view.name] = std::move(out);
            break;
        }
        case sql::ViewClass::Auxiliary:
            group_ = enc_.group(view.name, {}, cp::GroupKind::Auxiliary);
            relations_[view.name] = run(view.comp);
            break;
        case sql::ViewClass::Hard: hard(view, plan); break;
        case sql::ViewClass::Soft: soft(view); break;
        default: throw CompileError("unclassified view");
        }
    }

    void hard(const ir::LoweredView &view, const ViewPlan &plan)
    {
        const auto &c = view.comp;
        group_ = enc_.group(view.name, {}, cp::GroupKind::Hard);
        auto refs = referenced_cells(c);
        if (!c.grouped) {
            std::vector<const ir::Qualifier *> filters, asserts;
            for (const auto &q : plan.split.static_part)
                filters.push_back(&q);
            for (const auto &q : plan.split.dynamic_part)
                (q.origin == ir::Origin::Where ? asserts : filters).push_back(&q);
            if (asserts.empty())
                return;
            enumerate(c, filters, [&](const FormulaPtr &cond) {
                FormulaPtr guard = guarded(c, refs, cond);
                if (!guard)
                    return;
                std::vector<std::string> keys;
                for (const auto &g : c.generators)
                    keys.push_back(env_[g.slot]->key);
                int grp = enc_.group(view.name, keys, cp::GroupKind::Hard);
                int saved = group_;
                group_ = grp;
                for (const auto *q : asserts)
                    enc_.require(f_implies(guard, formula(eval(*q->expr, nullptr))), grp, view.name);
                group_ = saved;
            });
            return;
        }
        if (!c.having)
            return;
        std::vector<const ir::Qualifier *> filters;
        for (const auto &q : c.qualifiers)
            filters.push_back(&q);
        Group all;
        enumerate(c, filters, [&](const FormulaPtr &cond) {
            if (auto g = guarded(c, refs, cond))
                all.push_back({env_, g});
        });
        for (auto &[key, group] : groups(c, all)) {
            int grp = enc_.group(view.name, key, cp::GroupKind::Hard);
            group_ = grp;
            Env saved = env_;
            if (!group.empty())
                env_ = group.front().env;
            FormulaPtr h = formula(eval(*c.having, &group));
            if (c.group_key.empty()) {
                enc_.require(h, grp, view.name);
            } else {
                // The group exists only if one of its rows is selected. When
                // the having clause holds on an empty group anyway, the
                // existence guard adds nothing.
                Group none;
                FormulaPtr h0 = formula(eval(*c.having, &none));
                if (is_const(h0, true)) {
                    enc_.require(h, grp, view.name);
                } else {
                    std::vector<FormulaPtr> conds;
                    for (const auto &b : group)
                        conds.push_back(b.cond);
                    enc_.require(f_implies(f_or(std::move(conds)), h), grp, view.name);
                }
            }
            env_ = std::move(saved);
        }
    }

    void soft(const ir::LoweredView &view)
    {
        const auto &c = view.comp;
        group_ = enc_.group(view.name, {}, cp::GroupKind::Soft);
        std::vector<const ir::Qualifier *> filters;
        for (const auto &q : c.qualifiers)
            filters.push_back(&q);
        Sym value;
        if (c.grouped) {
            Group all;
            enumerate(c, filters, [&](const FormulaPtr &cond) { all.push_back({env_, cond}); });
            if (c.having)
                throw CompileError("soft constraint must not have a having clause");
            if (!all.empty())
                env_ = all.front().env;
            value = eval(*c.head[0].expr, &all);
        } else {
            // A non-aggregate soft view must produce exactly one row.
            SymRelation rows = run(c);
            if (rows.size() != 1 || !is_const(rows[0].cond, true))
                throw CompileError("soft constraint must produce exactly one row");
            value = rows[0].cells[0];
        }
        if (value.kind == Sym::Val) {
            if (const auto *i = std::get_if<std::int64_t>(&value.val))
                objective_.constant = checked_add(objective_.constant, *i);
        } else if (value.kind == Sym::Lin) {
            objective_.add(value.lin);
        } else {
            throw CompileError("soft constraint must select an integer");
        }
        has_soft_ = true;
    }

    void objective()
    {
        LinExpr obj;
        bool any = false;
        if (opt_.objective_soft && has_soft_) {
            obj.add(objective_);
            any = true;
        }
        if (opt_.objective_assigned) {
            any = true;
            int g = enc_.group("assigned", {}, cp::GroupKind::Soft);
            for (const auto &cell : out_.cells) {
                LitRef l = enc_.lit(assigned(cell.var), g);
                if (l.constant)
                    obj.constant = checked_add(obj.constant, l.value ? cell.weight : 0);
                else
                    obj.add(LinExpr::of_var(l.var, cell.weight));
                if (is_unset(cell.prior))
                    continue;
                LinExpr kept = LinExpr::of_var(cell.var);
                kept.constant = -encode(cell.prior);
                LitRef k = enc_.lit(enc_.cmp(kept, cp::Rel::EQ), g);
                if (k.constant)
                    obj.constant = checked_add(obj.constant, k.value ? 1 : 0);
                else
                    obj.add(LinExpr::of_var(k.var, 1));
            }
        }
        if (opt_.objective_kept && !opt_.objective_assigned) {
            // Kept cells number at most n, so one unit of the other terms
            // outweighs all of them.
            obj = obj.scaled(static_cast<std::int64_t>(out_.cells.size()) + 1);
            any = true;
            int g = enc_.group("kept", {}, cp::GroupKind::Soft);
            for (const auto &cell : out_.cells) {
                if (is_unset(cell.prior))
                    continue;
                LinExpr kept = LinExpr::of_var(cell.var);
                kept.constant = -encode(cell.prior);
                LitRef k = enc_.lit(enc_.cmp(kept, cp::Rel::EQ), g);
                if (k.constant)
                    obj.constant = checked_add(obj.constant, k.value ? 1 : 0);
                else
                    obj.add(LinExpr::of_var(k.var, 1));
            }
        }
        if (!any)
            return;
        cp::Objective o;
        for (const auto &[v, c] : obj.terms)
            o.terms.push_back({c, v});
        o.constant = obj.constant;
        out_.model.objective = std::move(o);
    }

    // ---- symbolic evaluation ----

    using CellSet = std::map<int, std::set<std::size_t>>; // slot -> referenced columns

    CellSet referenced_cells(const ir::Comprehension &c)
    {
        CellSet out;
        std::set<int> own;
        for (const auto &g : c.generators)
            own.insert(g.slot);
        std::function<void(const ir::Expr &)> visit;
        std::function<void(const ir::Comprehension &)> visit_comp = [&](const ir::Comprehension &k) {
            for (const auto &h : k.head)
                visit(*h.expr);
            for (const auto &q : k.qualifiers)
                visit(*q.expr);
            for (const auto &e : k.group_key)
                visit(*e);
            if (k.having)
                visit(*k.having);
        };
        visit = [&](const ir::Expr &e) {
            std::visit(
                [&](const auto &n) {
                    using T = std::decay_t<decltype(n)>;
                    if constexpr (std::is_same_v<T, ir::Col>) {
                        if (own.count(n.slot))
                            out[n.slot].insert(n.column);
                    } else if constexpr (std::is_same_v<T, ir::Unary>) {
                        visit(*n.operand);
                    } else if constexpr (std::is_same_v<T, ir::Binary>) {
                        visit(*n.lhs);
                        visit(*n.rhs);
                    } else if constexpr (std::is_same_v<T, ir::Agg>) {
                        if (n.arg)
                            visit(*n.arg);
                    } else if constexpr (std::is_same_v<T, ir::InQuery>) {
                        visit(*n.lhs);
                        visit_comp(*n.sub);
                    } else if constexpr (std::is_same_v<T, ir::InSet>) {
                        visit(*n.lhs);
                        for (const auto &k : n.keys)
                            visit(*k);
                    } else if constexpr (std::is_same_v<T, ir::Scalar>) {
                        visit_comp(*n.sub);
                    }
                },
                e.node);
        };
        visit_comp(c);
        return out;
    }

    // Bindings of a constraint view in which a referenced variable cell is
    // unset are not checked: a known-unset cell drops the binding, and a cell
    // that may become unset adds an "assigned" guard. Returns null to drop.
    FormulaPtr guarded(const ir::Comprehension &c, const CellSet &refs, FormulaPtr cond)
    {
        std::vector<FormulaPtr> parts{std::move(cond)};
        for (const auto &[slot, cols] : refs) {
            const SymRow *row = env_[slot];
            for (auto col : cols) {
                const Sym &s = row->cells[col];
                if (s.kind == Sym::Val && is_unset(s.val))
                    return nullptr;
                if (s.kind == Sym::Lin)
                    for (const auto &[v, k] : s.lin.terms)
                        parts.push_back(assigned(v));
            }
        }
        return f_and(std::move(parts));
    }

    const SymRelation &relation(const ir::Generator &g)
    {
        auto it = relations_.find(g.source);
        if (it == relations_.end())
            throw CompileError("relation " + g.source + " is not available");
        return it->second;
    }

    // Enumerates bindings of c's generators, applying `filters` as early as
    // their slots allow. `fn` sees the binding in env_ and its selection
    // condition (never constant false).
    void enumerate(const ir::Comprehension &c, const std::vector<const ir::Qualifier *> &filters,
                   const std::function<void(const FormulaPtr &)> &fn)
    {
        std::vector<std::vector<const ir::Qualifier *>> due(c.generators.size());
        for (const auto *q : filters) {
            std::vector<int> slots;
            ir::collect_slots(*q->expr, slots);
            std::size_t last = 0;
            for (std::size_t i = 0; i < c.generators.size(); ++i)
                if (std::find(slots.begin(), slots.end(), c.generators[i].slot) != slots.end())
                    last = i;
            due[last].push_back(q);
        }
        for (const auto &g : c.generators)
            if (static_cast<std::size_t>(g.slot) >= env_.size())
                env_.resize(static_cast<std::size_t>(g.slot) + 1, nullptr);
        std::function<void(std::size_t, const FormulaPtr &)> rec = [&](std::size_t k, const FormulaPtr &cond) {
            if (k == c.generators.size()) {
                fn(cond);
                return;
            }
            const auto &g = c.generators[k];
            for (const auto &row : relation(g)) {
                env_[g.slot] = &row;
                std::vector<FormulaPtr> parts{cond, row.cond};
                bool dead = false;
                for (const auto *q : due[k]) {
                    FormulaPtr f = formula(eval(*q->expr, nullptr));
                    if (is_const(f, false)) {
                        dead = true;
                        break;
                    }
                    parts.push_back(std::move(f));
                }
                if (dead)
                    continue;
                FormulaPtr next = f_and(std::move(parts));
                if (is_const(next, false))
                    continue;
                rec(k + 1, next);
            }
            env_[g.slot] = nullptr;
        };
        rec(0, f_true());
    }

    std::vector<std::pair<std::vector<std::string>, Group>> groups(const ir::Comprehension &c, Group &all)
    {
        std::vector<std::pair<std::vector<std::string>, Group>> out;
        if (c.group_key.empty()) {
            out.emplace_back(std::vector<std::string>{}, std::move(all));
            return out;
        }
        std::map<store::Row, std::size_t> index;
        Env saved = env_;
        for (auto &b : all) {
            env_ = b.env;
            store::Row key;
            std::vector<std::string> text;
            for (const auto &e : c.group_key) {
                Sym s = eval(*e, nullptr);
                if (s.kind != Sym::Val)
                    throw CompileError("group by over a variable expression");
                text.push_back(to_string(s.val));
                key.push_back(std::move(s.val));
            }
            auto [it, inserted] = index.emplace(std::move(key), out.size());
            if (inserted)
                out.emplace_back(std::move(text), Group{});
            out[it->second].second.push_back(std::move(b));
        }
        env_ = std::move(saved);
        return out;
    }

    // Rows of a comprehension, each with the condition under which it exists.
    // Grouped comprehensions have static group existence.
    SymRelation run(const ir::Comprehension &c)
    {
        std::vector<const ir::Qualifier *> filters;
        for (const auto &q : c.qualifiers)
            filters.push_back(&q);
        SymRelation out;
        if (!c.grouped) {
            enumerate(c, filters, [&](const FormulaPtr &cond) {
                SymRow row;
                row.cond = cond;
                for (const auto &h : c.head)
                    row.cells.push_back(eval(*h.expr, nullptr));
                row.key = key_text(row.cells);
                out.push_back(std::move(row));
            });
            return out;
        }
        Group all;
        enumerate(c, filters, [&](const FormulaPtr &cond) { all.push_back({env_, cond}); });
        Env saved = env_;
        for (auto &[key, group] : groups(c, all)) {
            if (!group.empty())
                env_ = group.front().env;
            SymRow row;
            row.cond = c.having ? formula(eval(*c.having, &group)) : f_true();
            if (is_const(row.cond, false))
                continue;
            for (const auto &h : c.head)
                row.cells.push_back(eval(*h.expr, &group));
            row.key = key.empty() ? key_text(row.cells) : key[0];
            for (std::size_t i = 1; i < key.size(); ++i)
                row.key += "," + key[i];
            out.push_back(std::move(row));
            env_ = saved;
        }
        env_ = std::move(saved);
        return out;
    }

    FormulaPtr formula(const Sym &s)
    {
        if (s.kind == Sym::Form)
            return s.form;
        if (s.kind == Sym::Val)
            return f_const(truthy(s.val));
        throw CompileError("integer expression used as a condition");
    }

    FormulaPtr assigned_all(const Sym &a, const Sym &b)
    {
        std::vector<FormulaPtr> parts;
        for (const Sym *s : {&a, &b})
            if (s->kind == Sym::Lin)
                for (const auto &[v, k] : s->lin.terms)
                    parts.push_back(assigned(v));
        return f_and(std::move(parts));
    }

    // `a op b` for a comparison operator.
    Sym compare(const Sym &a, BinOp op, const Sym &b)
    {
        if (a.kind == Sym::Val && b.kind == Sym::Val) {
            if (is_unset(a.val) || is_unset(b.val))
                return Sym::value(op == BinOp::Ne);
            switch (op) {
            case BinOp::Eq: return Sym::value(a.val == b.val);
            case BinOp::Ne: return Sym::value(a.val != b.val);
            case BinOp::Lt: return Sym::value(a.val < b.val);
            case BinOp::Le: return Sym::value(a.val <= b.val);
            case BinOp::Gt: return Sym::value(a.val > b.val);
            default: return Sym::value(a.val >= b.val);
            }
        }
        if (a.kind == Sym::Form || b.kind == Sym::Form) {
            if (op != BinOp::Eq && op != BinOp::Ne)
                throw CompileError("ordering comparison on boolean expressions");
            FormulaPtr fa = formula(a), fb = formula(b);
            if ((a.kind == Sym::Val && is_unset(a.val)) || (b.kind == Sym::Val && is_unset(b.val)))
                return Sym::value(op == BinOp::Ne);
            FormulaPtr eq = f_or({f_and({fa, fb}), f_and({f_not(fa), f_not(fb)})});
            return Sym::formula(op == BinOp::Eq ? eq : f_not(eq));
        }
        // At least one side is linear over decision variables.
        auto lin = [&](const Sym &s) -> std::optional<LinExpr> {
            if (s.kind == Sym::Lin)
                return s.lin;
            if (is_unset(s.val))
                return std::nullopt;
            if (auto id = lookup(s.val))
                return LinExpr::of_const(*id);
            return std::nullopt; // text that no variable can hold
        };
        auto la = lin(a), lb = lin(b);
        if (!la || !lb) {
            bool unset = (a.kind == Sym::Val && is_unset(a.val)) || (b.kind == Sym::Val && is_unset(b.val));
            if (unset || op == BinOp::Eq || op == BinOp::Ne)
                return Sym::value(op == BinOp::Ne);
            throw CompileError("ordering comparison with an unknown text value");
        }
        LinExpr d = *la;
        d.add(*lb, -1);
        FormulaPtr guard = assigned_all(a, b);
        if (op == BinOp::Ne)
            return Sym::formula(f_not(f_and({enc_.cmp(d, cp::Rel::EQ), guard})));
        return Sym::formula(f_and({enc_.cmp(d, rel_of(op)), guard}));
    }

    Sym arith(const Sym &a, BinOp op, const Sym &b)
    {
        if ((a.kind == Sym::Val && is_unset(a.val)) || (b.kind == Sym::Val && is_unset(b.val)))
            return Sym::value(Unset{});
        if (a.kind == Sym::Form || b.kind == Sym::Form || a.text || b.text)
            throw CompileError("arithmetic on a non-integer expression");
        if (a.kind == Sym::Val && b.kind == Sym::Val) {
            auto x = std::get<std::int64_t>(a.val), y = std::get<std::int64_t>(b.val);
            switch (op) {
            case BinOp::Add: return Sym::value(checked_add(x, y));
            case BinOp::Sub: return Sym::value(checked_add(x, checked_mul(y, -1)));
            default: return Sym::value(checked_mul(x, y));
            }
        }
        auto as_lin = [](const Sym &s) {
            return s.kind == Sym::Lin ? s.lin : LinExpr::of_const(std::get<std::int64_t>(s.val));
        };
        if (op == BinOp::Mul) {
            if (a.kind == Sym::Lin && b.kind == Sym::Lin)
                throw CompileError("product of two variable expressions is not linear");
            const Sym &l = a.kind == Sym::Lin ? a : b;
            const Sym &k = a.kind == Sym::Lin ? b : a;
            return Sym::linear(l.lin.scaled(std::get<std::int64_t>(k.val)));
        }
        LinExpr out = as_lin(a);
        out.add(as_lin(b), op == BinOp::Add ? 1 : -1);
        return Sym::linear(std::move(out));
    }

    Sym eval(const ir::Expr &e, const Group *group)
    {
        if (const auto *c = std::get_if<ir::Col>(&e.node)) {
            const SymRow *row = env_[c->slot];
            if (!row)
                throw CompileError("column " + c->name + " read on an empty group");
            return row->cells[c->column];
        }
        if (const auto *k = std::get_if<ir::Const>(&e.node))
            return Sym::value(k->value);
        if (const auto *u = std::get_if<ir::Unary>(&e.node)) {
            Sym v = eval(*u->operand, group);
            if (u->op == UnOp::Not) {
                if (v.kind == Sym::Val)
                    return Sym::value(is_unset(v.val) ? false : !truthy(v.val));
                return Sym::formula(f_not(formula(v)));
            }
            return arith(Sym::value(std::int64_t{0}), BinOp::Sub, v);
        }
        if (const auto *b = std::get_if<ir::Binary>(&e.node)) {
            if (b->op == BinOp::And || b->op == BinOp::Or) {
                FormulaPtr l = formula(eval(*b->lhs, group));
                if (is_const(l, b->op == BinOp::Or))
                    return Sym::value(b->op == BinOp::Or);
                FormulaPtr r = formula(eval(*b->rhs, group));
                FormulaPtr f = b->op == BinOp::And ? f_and({l, r}) : f_or({l, r});
                if (f->kind == Formula::Const)
                    return Sym::value(f->value);
                return Sym::formula(f);
            }
            Sym l = eval(*b->lhs, group);
            Sym r = eval(*b->rhs, group);
            if (sql::is_comparison(b->op))
                return fold(compare(l, b->op, r));
            return arith(l, b->op, r);
        }
        if (const auto *a = std::get_if<ir::Agg>(&e.node)) {
            if (!group)
                throw CompileError("aggregate outside a group");
            return aggregate(*a, *group);
        }
        if (const auto *in = std::get_if<ir::InSet>(&e.node))
            return fold(in_set(*in, group));
        if (const auto *in = std::get_if<ir::InQuery>(&e.node)) {
            Sym l = eval(*in->lhs, group);
            std::vector<FormulaPtr> any;
            if (!(l.kind == Sym::Val && is_unset(l.val)))
                for (const auto &row : run(*in->sub))
                    any.push_back(f_and({row.cond, formula(compare(l, BinOp::Eq, row.cells[0]))}));
            FormulaPtr f = f_or(std::move(any));
            return fold(Sym::formula(in->negated ? f_not(f) : f));
        }
        if (const auto *s = std::get_if<ir::Scalar>(&e.node)) {
            SymRelation rows = run(*s->sub);
            if (rows.size() != 1 || !is_const(rows[0].cond, true) || rows[0].cells[0].kind != Sym::Val)
                throw CompileError("scalar subquery must produce exactly one static row");
            return rows[0].cells[0];
        }
        throw CompileError("unsupported expression");
    }

    static Sym fold(Sym s)
    {
        if (s.kind == Sym::Form && s.form->kind == Formula::Const)
            return Sym::value(s.form->value);
        return s;
    }

    Sym in_set(const ir::InSet &in, const Group *group)
    {
        Sym l = eval(*in.lhs, group);
        store::Row key;
        bool bound = true;
        for (const auto &k : in.keys) {
            Sym s = eval(*k, group);
            if (s.kind != Sym::Val)
                throw CompileError("IN correlation key depends on a variable");
            bound = bound && !is_unset(s.val);
            key.push_back(std::move(s.val));
        }
        FormulaPtr found = f_false();
        if (bound && !(l.kind == Sym::Val && is_unset(l.val))) {
            const auto &sets = keyed_set(in);
            auto it = sets.find(key);
            if (it != sets.end()) {
                if (l.kind == Sym::Val) {
                    found = f_const(it->second.count(l.val) > 0);
                } else {
                    std::vector<FormulaPtr> any;
                    for (const auto &v : it->second)
                        any.push_back(formula(compare(l, BinOp::Eq, Sym::value(v))));
                    found = f_or(std::move(any));
                }
            }
        }
        return Sym::formula(in.negated ? f_not(found) : found);
    }

    const std::map<store::Row, std::set<Value>> &keyed_set(const ir::InSet &in)
    {
        auto it = sets_.find(in.source.get());
        if (it != sets_.end())
            return it->second;
        std::map<store::Row, std::set<Value>> set;
        for (const auto &row : ir::evaluate(t_.ir, store_, *in.source).rows) {
            if (is_unset(row[0]))
                continue;
            store::Row key(row.begin() + 1, row.end());
            if (std::any_of(key.begin(), key.end(), [](const Value &v) { return is_unset(v); }))
                continue;
            set[key].insert(row[0]);
        }
        return sets_.emplace(in.source.get(), std::move(set)).first->second;
    }

    Sym aggregate(const ir::Agg &a, const Group &group)
    {
        Env saved = env_;
        struct Item {
            Sym value;
            FormulaPtr cond;
        };
        std::vector<Item> items;
        for (const auto &b : group) {
            env_ = b.env;
            Sym v = a.arg ? eval(*a.arg, nullptr) : Sym::value(std::int64_t{1});
            items.push_back({std::move(v), b.cond});
        }
        env_ = std::move(saved);

        auto has_unsettable = [&](const Sym &s) {
            if (s.kind != Sym::Lin)
                return false;
            for (const auto &[v, k] : s.lin.terms)
                if (unsettable_.count(v))
                    return true;
            return false;
        };

        switch (a.fn) {
        case AggFn::Count:
        case AggFn::Sum: {
            LinExpr total;
            for (const auto &it : items) {
                const Sym &v = it.value;
                if (v.kind == Sym::Val && is_unset(v.val))
                    continue;
                if (a.fn == AggFn::Count) {
                    FormulaPtr cond = it.cond;
                    if (v.kind == Sym::Lin) {
                        std::vector<FormulaPtr> parts{cond};
                        for (const auto &[x, k] : v.lin.terms)
                            parts.push_back(assigned(x));
                        cond = f_and(std::move(parts));
                    }
                    total.add(enc_.selected(cond, 1, group_));
                } else if (v.kind == Sym::Val) {
                    total.add(enc_.selected(it.cond, std::get<std::int64_t>(v.val), group_));
                } else if (v.kind == Sym::Lin && is_const(it.cond, true) && !has_unsettable(v)) {
                    total.add(v.lin);
                } else {
                    throw CompileError("sum of a variable expression over rows selected by a variable predicate "
                                       "is unsupported");
                }
            }
            if (total.is_constant())
                return Sym::value(total.constant);
            return Sym::linear(std::move(total));
        }
        case AggFn::Min:
        case AggFn::Max: {
            bool is_max = a.fn == AggFn::Max;
            std::vector<Value> statics;
            std::vector<LinExpr> vars;
            for (const auto &it : items) {
                if (!is_const(it.cond, true))
                    throw CompileError(std::string(sql::agg_name(a.fn)) +
                                       " over rows selected by a variable predicate is unsupported");
                const Sym &v = it.value;
                if (v.kind == Sym::Val) {
                    if (!is_unset(v.val))
                        statics.push_back(v.val);
                } else if (v.kind == Sym::Lin && !v.text && !has_unsettable(v)) {
                    vars.push_back(v.lin);
                } else {
                    throw CompileError(std::string(sql::agg_name(a.fn)) + " over this expression is unsupported");
                }
            }
            if (vars.empty()) {
                if (statics.empty())
                    return Sym::value(Unset{});
                auto [lo, hi] = std::minmax_element(statics.begin(), statics.end());
                return Sym::value(is_max ? *hi : *lo);
            }
            for (const auto &s : statics)
                vars.push_back(LinExpr::of_const(std::get<std::int64_t>(s)));
            return Sym::linear(LinExpr::of_var(enc_.min_max(vars, is_max, group_)));
        }
        case AggFn::AllDifferent: {
            // Unset cells carry distinct ids, so rows dropped only because
            // their own cell is unset can stay in the global constraint.
            // Rows with any other variable condition are compared pairwise.
            std::vector<Value> statics;
            std::vector<cp::VarId> vars;
            std::vector<Item> conditional;
            for (const auto &it : items) {
                if (is_const(it.cond, false))
                    continue;
                const Sym &v = it.value;
                if (v.kind == Sym::Form)
                    throw CompileError("all_different over a boolean expression");
                if (v.kind == Sym::Val && is_unset(v.val))
                    continue;
                bool plain = is_const(it.cond, true);
                if (!plain && v.kind == Sym::Lin && v.lin.constant == 0 && v.lin.terms.size() == 1 &&
                    v.lin.terms.begin()->second == 1)
                    plain = formula_key(*it.cond) == formula_key(*assigned(v.lin.terms.begin()->first));
                if (!plain)
                    conditional.push_back(it);
                else if (v.kind == Sym::Val)
                    statics.push_back(v.val);
                else
                    vars.push_back(enc_.as_var(v.lin, group_));
            }
            std::set<Value> seen;
            for (const auto &s : statics)
                if (!seen.insert(s).second)
                    return Sym::value(false);
            std::vector<FormulaPtr> parts{f_alldiff(vars)};
            for (auto x : vars)
                for (const auto &s : statics)
                    parts.push_back(formula(compare(Sym::linear(LinExpr::of_var(x)), BinOp::Ne, Sym::value(s))));
            for (std::size_t i = 0; i < conditional.size(); ++i) {
                const auto &ci = conditional[i];
                for (std::size_t j = i + 1; j < conditional.size(); ++j)
                    parts.push_back(f_implies(f_and({ci.cond, conditional[j].cond}),
                                              formula(compare(ci.value, BinOp::Ne, conditional[j].value))));
                for (auto x : vars)
                    parts.push_back(
                        f_implies(ci.cond, formula(compare(ci.value, BinOp::Ne, Sym::linear(LinExpr::of_var(x))))));
                for (const auto &s : statics)
                    parts.push_back(f_implies(ci.cond, formula(compare(ci.value, BinOp::Ne, Sym::value(s)))));
            }
            return fold(Sym::formula(f_and(std::move(parts))));
        }
        }
        throw CompileError("unsupported aggregate");
    }

    const Template &t_;
    const store::Store &store_;
    BindOptions opt_;
    GroundModel out_;
    Encoder enc_;
    std::vector<cp::Domain> universe_;
    std::map<std::string, std::int64_t> text_ids_;
    std::set<cp::VarId> unsettable_;
    std::map<cp::VarId, std::size_t> cell_of_var_;
    std::map<std::tuple<std::string, std::size_t, std::size_t>, std::size_t> cell_index_;
    std::map<std::string, SymRelation, std::less<>> relations_;
    std::map<const ir::Comprehension *, std::map<store::Row, std::set<Value>>> sets_;
    Env env_;
    std::string view_;
    int group_ = 0;
    LinExpr objective_;
    bool has_soft_ = false;
};

} // namespace

std::vector<std::int64_t> GroundModel::unchanged_hint() const
{
    std::vector<std::int64_t> h(model.vars.size(), 0);
    for (const auto &c : cells)
        h[static_cast<std::size_t>(c.var)] = c.unchanged;
    return h;
}

Value GroundModel::decode(const Cell &c, std::int64_t id) const
{
    if (id >= unset_base)
        return Unset{};
    if (c.type == DType::Text) {
        if (id < 0 || static_cast<std::size_t>(id) >= text_values.size())
            throw CompileError("value id " + std::to_string(id) + " has no text");
        return text_values[static_cast<std::size_t>(id)];
    }
    return id;
}

std::vector<store::Delta> GroundModel::deltas(const std::vector<std::int64_t> &assignment) const
{
    std::vector<store::Delta> out;
    for (const auto &c : cells)
        out.push_back({c.table, c.row_key, c.column_name, decode(c, assignment.at(static_cast<std::size_t>(c.var)))});
    return out;
}

GroundStats GroundModel::stats() const
{
    GroundStats s;
    s.vars = model.vars.size();
    s.decision_vars = model.count_vars(cp::VarRole::Decision);
    s.aux_vars = model.count_vars(cp::VarRole::Optional);
    s.literals = model.count_vars(cp::VarRole::Literal);
    s.defined_vars = model.count_vars(cp::VarRole::Defined);
    s.constraints = model.constraints.size();
    for (const auto &c : model.constraints) {
        if (const auto *l = std::get_if<cp::Linear>(&c.body)) {
            ++s.linear;
            if (l->rel == cp::Rel::NE && l->rhs == 0 && l->terms.size() == 2 && l->terms[0].coef == -l->terms[1].coef &&
                (l->terms[0].coef == 1 || l->terms[0].coef == -1))
                ++s.pairwise_ne;
        } else if (std::holds_alternative<cp::Reified>(c.body)) {
            ++s.reified;
        } else if (std::holds_alternative<cp::BoolExpr>(c.body)) {
            ++s.bool_exprs;
        } else if (std::holds_alternative<cp::AllDifferent>(c.body)) {
            ++s.all_different;
        } else if (std::holds_alternative<cp::Membership>(c.body)) {
            ++s.memberships;
        } else {
            ++s.min_max;
        }
    }
    return s;
}

std::string stats_json(const GroundStats &s)
{
    nlohmann::ordered_json j{{"vars", s.vars},
                             {"decision_vars", s.decision_vars},
                             {"constraints", s.constraints},
                             {"aux_vars", s.aux_vars},
                             {"literals", s.literals},
                             {"defined_vars", s.defined_vars},
                             {"memberships", s.memberships},
                             {"all_different", s.all_different},
                             {"pairwise_ne", s.pairwise_ne},
                             {"linear", s.linear},
                             {"reified", s.reified},
                             {"bool_exprs", s.bool_exprs},
                             {"min_max", s.min_max}};
    return j.dump();
}

GroundModel bind(const Template &t, const store::Store &store, const BindOptions &options)
{
    return Grounder(t, store, options).run();
}

} // namespace weave::compiler
