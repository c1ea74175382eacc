#include "weave/compiler/compiler.hpp"
#include "weave/error.hpp"
#include "weave/sql/parser.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace weave::compiler {

const VarGroup *Template::find_group(std::string_view table, std::string_view column) const
{
    for (const auto &g : var_groups)
        if (g.table == table && g.column == column)
            return &g;
    return nullptr;
}

namespace {

using ir::Comprehension;
using ir::Expr;

// Generators of a comprehension and everything nested in it, by slot.
void index_generators(const Comprehension &c, std::map<int, const ir::Generator *> &out);

void index_in_expr(const Expr &e, std::map<int, const ir::Generator *> &out)
{
    std::visit(
        [&](const auto &n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ir::Unary>) {
                index_in_expr(*n.operand, out);
            } else if constexpr (std::is_same_v<T, ir::Binary>) {
                index_in_expr(*n.lhs, out);
                index_in_expr(*n.rhs, out);
            } else if constexpr (std::is_same_v<T, ir::Agg>) {
                if (n.arg)
                    index_in_expr(*n.arg, out);
            } else if constexpr (std::is_same_v<T, ir::InQuery>) {
                index_in_expr(*n.lhs, out);
                index_generators(*n.sub, out);
            } else if constexpr (std::is_same_v<T, ir::InSet>) {
                index_in_expr(*n.lhs, out);
                index_generators(*n.source, out);
            } else if constexpr (std::is_same_v<T, ir::Scalar>) {
                index_generators(*n.sub, out);
            }
        },
        e.node);
}

void index_generators(const Comprehension &c, std::map<int, const ir::Generator *> &out)
{
    for (const auto &g : c.generators)
        out[g.slot] = &g;
    for (const auto &h : c.head)
        index_in_expr(*h.expr, out);
    for (const auto &q : c.qualifiers)
        index_in_expr(*q.expr, out);
    for (const auto &k : c.group_key)
        index_in_expr(*k, out);
    if (c.having)
        index_in_expr(*c.having, out);
}

// Visits every expression node reachable from a comprehension.
void walk(const Comprehension &c, const std::function<void(const Expr &)> &fn);

void walk(const Expr &e, const std::function<void(const Expr &)> &fn)
{
    fn(e);
    std::visit(
        [&](const auto &n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ir::Unary>) {
                walk(*n.operand, fn);
            } else if constexpr (std::is_same_v<T, ir::Binary>) {
                walk(*n.lhs, fn);
                walk(*n.rhs, fn);
            } else if constexpr (std::is_same_v<T, ir::Agg>) {
                if (n.arg)
                    walk(*n.arg, fn);
            } else if constexpr (std::is_same_v<T, ir::InQuery>) {
                walk(*n.lhs, fn);
                walk(*n.sub, fn);
            } else if constexpr (std::is_same_v<T, ir::InSet>) {
                walk(*n.lhs, fn);
                for (const auto &k : n.keys)
                    walk(*k, fn);
                walk(*n.source, fn);
            } else if constexpr (std::is_same_v<T, ir::Scalar>) {
                walk(*n.sub, fn);
            }
        },
        e.node);
}

void walk(const Comprehension &c, const std::function<void(const Expr &)> &fn)
{
    for (const auto &h : c.head)
        walk(*h.expr, fn);
    for (const auto &q : c.qualifiers)
        walk(*q.expr, fn);
    for (const auto &k : c.group_key)
        walk(*k, fn);
    if (c.having)
        walk(*c.having, fn);
}

using CellRef = std::pair<std::string, std::string>; // (table, column)

class UniverseFinder {
public:
    explicit UniverseFinder(const ir::Program &prog) : prog_(prog) {}

    std::map<CellRef, std::set<UniverseSource>> sources;
    std::set<CellRef> referenced;

    void view(const ir::LoweredView &v)
    {
        std::map<int, const ir::Generator *> gens;
        index_generators(v.comp, gens);
        walk(v.comp, [&](const Expr &e) {
            if (const auto *c = std::get_if<ir::Col>(&e.node)) {
                if (auto o = variable_origin(*c, gens))
                    referenced.insert(*o);
            } else if (const auto *b = std::get_if<ir::Binary>(&e.node)) {
                if (b->op == sql::BinOp::Eq) {
                    pair(*b->lhs, *b->rhs, gens, gens);
                    pair(*b->rhs, *b->lhs, gens, gens);
                }
            } else if (const auto *in = std::get_if<ir::InSet>(&e.node)) {
                pair(*in->lhs, *in->source->head[0].expr, gens, gens);
            } else if (const auto *in = std::get_if<ir::InQuery>(&e.node)) {
                pair(*in->lhs, *in->sub->head[0].expr, gens, gens);
            }
        });
    }

private:
    // The base variable cell a column reference reads, following auxiliary
    // views that pass a variable column through unchanged.
    std::optional<CellRef> variable_origin(const ir::Col &c, const std::map<int, const ir::Generator *> &gens)
    {
        auto it = gens.find(c.slot);
        if (it == gens.end())
            return std::nullopt;
        const ir::Generator &g = *it->second;
        if (!g.is_view)
            return g.columns[c.column].is_variable ? std::optional<CellRef>({g.source, g.columns[c.column].name})
                                                   : std::nullopt;
        const ir::LoweredView *v = prog_.find(g.source);
        if (!v || v->cls != sql::ViewClass::Auxiliary || c.column >= v->comp.head.size())
            return std::nullopt;
        const auto *inner = std::get_if<ir::Col>(&v->comp.head[c.column].expr->node);
        if (!inner)
            return std::nullopt;
        std::map<int, const ir::Generator *> inner_gens;
        index_generators(v->comp, inner_gens);
        return variable_origin(*inner, inner_gens);
    }

    std::optional<UniverseSource> static_source(const ir::Col &c, const std::map<int, const ir::Generator *> &gens)
    {
        auto it = gens.find(c.slot);
        if (it == gens.end())
            return std::nullopt;
        const ir::Generator &g = *it->second;
        if (g.columns[c.column].is_variable)
            return std::nullopt;
        if (g.is_view) {
            const ir::LoweredView *v = prog_.find(g.source);
            if (!v || v->cls != sql::ViewClass::Input)
                return std::nullopt;
        }
        return UniverseSource{g.source, g.columns[c.column].name};
    }

    void pair(const Expr &var_side, const Expr &static_side, const std::map<int, const ir::Generator *> &vg,
              const std::map<int, const ir::Generator *> &sg)
    {
        const auto *a = std::get_if<ir::Col>(&var_side.node);
        const auto *b = std::get_if<ir::Col>(&static_side.node);
        if (!a || !b)
            return;
        auto origin = variable_origin(*a, vg);
        auto src = static_source(*b, sg);
        if (origin && src)
            sources[*origin].insert(*src);
    }

    const ir::Program &prog_;
};

void validate_view(const ir::LoweredView &v)
{
    const auto &c = v.comp;
    for (const auto &k : c.group_key)
        if (ir::references_variable(*k))
            throw CompileError("view " + v.name + ": group by over a variable expression is unsupported; "
                               "group by a column of the table the variable ranges over");
    walk(c, [&](const Expr &e) {
        if (const auto *s = std::get_if<ir::Scalar>(&e.node))
            if (ir::references_variable(*s->sub))
                throw CompileError("view " + v.name + ": scalar subquery reads a variable column");
    });
    if (v.cls == sql::ViewClass::Soft) {
        if (c.head.size() != 1 || c.head[0].type != DType::Integer)
            throw CompileError("view " + v.name + ": soft constraint must select one integer value");
        if (!c.group_key.empty())
            throw CompileError("view " + v.name + ": soft constraint must not group by");
    }
}

} // namespace

Template synthesize(const sql::ClassifiedProgram &program)
{
    Template t;
    t.program = program;
    t.ir = ir::lower_program(program);
    for (const auto &v : t.ir.views) {
        validate_view(v);
        t.views.push_back({v.name, v.cls, ir::split_qualifiers(v.comp, v.cls)});
    }
    UniverseFinder finder(t.ir);
    for (const auto &v : t.ir.views)
        if (v.cls != sql::ViewClass::Input)
            finder.view(v);
    for (const auto &table : program.tables)
        for (std::size_t i = 0; i < table.columns.size(); ++i) {
            const auto &col = table.columns[i];
            if (!col.is_variable)
                continue;
            VarGroup g{table.name, col.name, i, col.dtype, {}};
            CellRef ref{table.name, col.name};
            auto it = finder.sources.find(ref);
            if (it != finder.sources.end()) {
                for (const auto &s : it->second) {
                    const auto &info = t.ir.catalog.at(s.relation);
                    for (const auto &sc : info.columns)
                        if (sc.name == s.column && sc.dtype != col.dtype)
                            throw CompileError("variable column " + table.name + "." + col.name + " is compared with " +
                                               s.relation + "." + s.column + " of a different type");
                    g.sources.push_back(s);
                }
            } else if (finder.referenced.count(ref)) {
                throw CompileError("no equality join or IN subquery bounds the values of variable column " +
                                   table.name + "." + col.name);
            }
            t.var_groups.push_back(std::move(g));
        }
    return t;
}

Template compile(std::string_view schema_text, const std::string &file)
{
    return synthesize(sql::classify_views(sql::parse_program(schema_text, file)));
}

} // namespace weave::compiler
