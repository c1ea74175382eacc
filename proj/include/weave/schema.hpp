#pragma once

#include <optional>
#include <string>
#include <vector>

#include "weave/value.hpp"

namespace weave {

struct ColumnDef {
    std::string name;
    DType dtype = DType::Integer;
    bool is_variable = false;

    bool operator==(const ColumnDef &) const = default;
};

struct TableDef {
    std::string name;
    std::vector<ColumnDef> columns;
    std::optional<std::string> primary_key;

    std::optional<std::size_t> column_index(std::string_view column) const;
    const ColumnDef &column(std::string_view column) const;
    bool has_variable_columns() const;

    bool operator==(const TableDef &) const = default;
};

// Throws SchemaError on duplicate/empty columns, a bad primary key, or a
// boolean variable column.
void validate(const TableDef &def);

// Same table names, column names and types. Variable annotations may differ
// (a reconfiguration schema may widen the set of decision columns).
bool same_shape(const TableDef &a, const TableDef &b);

} // namespace weave
