#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "weave/sql/ast.hpp"

namespace weave::sql {

struct ClassifiedProgram {
    std::vector<TableDef> tables;
    std::vector<ViewDef> views;       // cls assigned, source order kept
    std::vector<std::size_t> order;   // indices into views, dependencies first

    const TableDef *find_table(std::string_view name) const;
    const ViewDef *find_view(std::string_view name) const;
};

// Assigns input/auxiliary/hard/soft classes and a dependency order.
// Unannotated views are input views unless a variable column is reachable;
// variable-dependent unannotated views must feed some constraint view
// (auxiliary) or classification fails. Also checks that every column
// reference resolves to exactly one binder in scope.
ClassifiedProgram classify_views(const Program &program);

// Names of the tables and views a query reads, including subqueries.
std::set<std::string> referenced_relations(const Query &q);

} // namespace weave::sql
