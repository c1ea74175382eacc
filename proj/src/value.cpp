#include "weave/value.hpp"
#include "weave/error.hpp"
#include "weave/schema.hpp"

#include <set>

namespace weave {

std::string_view dtype_name(DType t)
{
    switch (t) {
    case DType::Integer: return "integer";
    case DType::Boolean: return "boolean";
    case DType::Text: return "text";
    }
    return "?";
}

bool value_has_type(const Value &v, DType t)
{
    switch (t) {
    case DType::Integer: return std::holds_alternative<std::int64_t>(v);
    case DType::Boolean: return std::holds_alternative<bool>(v);
    case DType::Text: return std::holds_alternative<std::string>(v);
    }
    return false;
}

std::string to_string(const Value &v)
{
    struct Visitor {
        std::string operator()(const Unset &) const { return "?"; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(const std::string &s) const { return s; }
    };
    return std::visit(Visitor{}, v);
}

ParseError::ParseError(std::string file, SourcePos pos, const std::string &message)
    : Error(file + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " + message),
      file_(std::move(file)), pos_(pos), message_(message)
{
}

std::optional<std::size_t> TableDef::column_index(std::string_view column) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == column)
            return i;
    return std::nullopt;
}

const ColumnDef &TableDef::column(std::string_view column) const
{
    auto idx = column_index(column);
    if (!idx)
        throw SchemaError("table " + name + " has no column " + std::string(column));
    return columns[*idx];
}

bool TableDef::has_variable_columns() const
{
    for (const auto &c : columns)
        if (c.is_variable)
            return true;
    return false;
}

void validate(const TableDef &def)
{
    if (def.name.empty())
        throw SchemaError("table without a name");
    if (def.columns.empty())
        throw SchemaError("table " + def.name + " declares no columns");
    std::set<std::string> seen;
    for (const auto &c : def.columns) {
        if (!seen.insert(c.name).second)
            throw SchemaError("table " + def.name + ": duplicate column " + c.name);
        if (c.is_variable && c.dtype == DType::Boolean)
            throw SchemaError("table " + def.name + ": boolean column " + c.name +
                              " cannot be a decision variable; model it as a 0/1 integer");
    }
    if (def.primary_key) {
        auto idx = def.column_index(*def.primary_key);
        if (!idx)
            throw SchemaError("table " + def.name + ": primary key names unknown column " + *def.primary_key);
        if (def.columns[*idx].is_variable)
            throw SchemaError("table " + def.name + ": primary key cannot be a variable column");
    }
}

bool same_shape(const TableDef &a, const TableDef &b)
{
    if (a.name != b.name || a.columns.size() != b.columns.size() || a.primary_key != b.primary_key)
        return false;
    for (std::size_t i = 0; i < a.columns.size(); ++i)
        if (a.columns[i].name != b.columns[i].name || a.columns[i].dtype != b.columns[i].dtype)
            return false;
    return true;
}

} // namespace weave
