#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "weave/cp/model.hpp"
#include "weave/ir/comprehension.hpp"
#include "weave/sql/classify.hpp"
#include "weave/store/store.hpp"

namespace weave::compiler {

// Where the values of a variable column come from: a column of a table or
// input view it is equi-joined (or IN-compared) against somewhere.
struct UniverseSource {
    std::string relation;
    std::string column;
    bool operator==(const UniverseSource &) const = default;
    bool operator<(const UniverseSource &o) const
    {
        return relation != o.relation ? relation < o.relation : column < o.column;
    }
};

// One per (table, variable column).
struct VarGroup {
    std::string table;
    std::string column;
    std::size_t column_index = 0;
    DType type = DType::Integer;
    // Empty when no view constrains the column; its universe is then the set
    // of values the column currently holds.
    std::vector<UniverseSource> sources;
};

struct ViewPlan {
    std::string name;
    sql::ViewClass cls;
    ir::QualifierSplit split;
};

struct Template {
    sql::ClassifiedProgram program;
    ir::Program ir;
    std::vector<VarGroup> var_groups;
    std::vector<ViewPlan> views; // dependency order, input views included

    const VarGroup *find_group(std::string_view table, std::string_view column) const;
};

Template synthesize(const sql::ClassifiedProgram &program);
// Parse, classify and synthesize; errors name the offending view.
Template compile(std::string_view schema_text, const std::string &file = "<schema>");

enum class Scope { Pending, All };

struct BindOptions {
    // Pending: rows with an unset variable cell; All: every row.
    Scope scope = Scope::Pending;
    // An unset in-scope cell may stay unset.
    bool allow_unset = false;
    // A placed in-scope cell may be reset to unset (evicted) but not moved.
    bool allow_evict = false;
    // A placed in-scope cell may move; at most this many move (evictions count).
    std::optional<std::int64_t> max_moves;
    // Column of the variable table holding an integer priority. With
    // allow_evict or max_moves, placed rows at or above the highest pending
    // priority are pinned: never evicted, and without max_moves kept out of
    // scope (no cell). The assignment objective weights rows
    // lexicographically by priority.
    std::optional<std::string> priority_column;
    bool objective_soft = true;     // maximize the sum of soft views
    // Maximize the (priority-weighted) count of assigned cells, then the count
    // of placed cells left where they were.
    bool objective_assigned = false;
    // Below the other objective terms, prefer placed cells left where they were.
    bool objective_kept = false;
    bool rewrites = true;           // false selects the naive encodings
};

// A decision variable standing for one store cell.
struct Cell {
    std::string table;
    std::size_t row = 0;
    std::size_t column = 0;
    std::string column_name;
    DType type = DType::Integer;
    Value row_key;
    Value prior;
    cp::VarId var = -1;
    std::int64_t weight = 1;
    std::int64_t unchanged = 0; // the value that leaves the cell as it was
};

struct GroundStats {
    std::size_t vars = 0;
    std::size_t decision_vars = 0;
    std::size_t constraints = 0;
    std::size_t aux_vars = 0; // optionality auxiliaries (naive encoding only)
    std::size_t literals = 0;
    std::size_t defined_vars = 0;
    std::size_t memberships = 0;
    std::size_t all_different = 0;
    std::size_t pairwise_ne = 0;
    std::size_t linear = 0;
    std::size_t reified = 0;
    std::size_t bool_exprs = 0;
    std::size_t min_max = 0;
};

struct GroundModel {
    cp::Model model;
    std::vector<Cell> cells;
    std::vector<std::string> text_values; // interned id -> text
    std::int64_t unset_base = 0;          // ids >= unset_base decode to unset
    bool rewrites = true;

    Value decode(const Cell &c, std::int64_t id) const;
    // A solver hint that changes no cell.
    std::vector<std::int64_t> unchanged_hint() const;
    // One delta per in-scope cell.
    std::vector<store::Delta> deltas(const std::vector<std::int64_t> &assignment) const;
    GroundStats stats() const;
};

GroundModel bind(const Template &t, const store::Store &store, const BindOptions &options = {});

std::string stats_json(const GroundStats &s);

} // namespace weave::compiler
