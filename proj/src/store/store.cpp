#include "weave/store/store.hpp"
#include "weave/error.hpp"

#include <charconv>

namespace weave::store {

std::optional<std::size_t> Relation::column_index(std::string_view name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name)
            return i;
    return std::nullopt;
}

void Store::create_table(TableDef def)
{
    validate(def);
    if (tables_.count(def.name))
        throw StoreError("table " + def.name + " already exists");
    std::string name = def.name;
    tables_.emplace(name, Table{std::move(def), {}, {}});
}

Store::Table &Store::table(std::string_view name)
{
    auto it = tables_.find(name);
    if (it == tables_.end())
        throw StoreError("unknown table " + std::string(name));
    return it->second;
}

const Store::Table &Store::table(std::string_view name) const
{
    auto it = tables_.find(name);
    if (it == tables_.end())
        throw StoreError("unknown table " + std::string(name));
    return it->second;
}

std::size_t Store::insert_rows(std::string_view name, std::vector<Row> rows)
{
    Table &t = table(name);
    const auto &cols = t.def.columns;
    std::optional<std::size_t> pk;
    if (t.def.primary_key)
        pk = t.def.column_index(*t.def.primary_key);
    // Validate everything before touching the table.
    std::map<Value, std::size_t> new_keys;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row &row = rows[r];
        if (row.size() != cols.size())
            throw StoreError("table " + t.def.name + ": row has " + std::to_string(row.size()) + " values, expected " +
                             std::to_string(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (is_unset(row[c])) {
                if (!cols[c].is_variable)
                    throw StoreError("table " + t.def.name + ": column " + cols[c].name +
                                     " is not a variable column and cannot be unset");
                continue;
            }
            if (!value_has_type(row[c], cols[c].dtype))
                throw StoreError("table " + t.def.name + ": column " + cols[c].name + " expects " +
                                 std::string(dtype_name(cols[c].dtype)) + ", got '" + to_string(row[c]) + "'");
        }
        if (pk) {
            const Value &key = row[*pk];
            if (t.by_key.count(key) || !new_keys.emplace(key, r).second)
                throw StoreError("table " + t.def.name + ": duplicate primary key " + to_string(key));
        }
    }
    std::size_t base = t.rows.size();
    for (auto &[key, r] : new_keys)
        t.by_key[key] = base + r;
    for (auto &row : rows)
        t.rows.push_back(std::move(row));
    return rows.size();
}

namespace {

std::vector<std::vector<std::pair<std::string, bool>>> split_csv(std::string_view text)
{
    // Each field carries whether it was quoted.
    std::vector<std::vector<std::pair<std::string, bool>>> lines;
    std::vector<std::pair<std::string, bool>> fields;
    std::string field;
    bool quoted = false, in_quotes = false, any = false;
    std::size_t i = 0;
    auto end_field = [&] {
        fields.emplace_back(field, quoted);
        field.clear();
        quoted = false;
    };
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            in_quotes = true;
            quoted = true;
            any = true;
        } else if (c == ',') {
            end_field();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
            if (any || !field.empty()) {
                end_field();
                lines.push_back(std::move(fields));
                fields.clear();
            }
            any = false;
        } else {
            field += c;
            any = true;
        }
        ++i;
    }
    if (in_quotes)
        throw StoreError("csv: unterminated quoted field");
    if (any || !field.empty()) {
        end_field();
        lines.push_back(std::move(fields));
    }
    return lines;
}

bool needs_quotes(const std::string &s)
{
    return s.empty() || s == "?" || s.find_first_of(",\"\n\r") != std::string::npos;
}

} // namespace

std::size_t Store::load_csv(std::string_view name, std::string_view text)
{
    const Table &t = table(name);
    auto lines = split_csv(text);
    if (lines.empty())
        throw StoreError("csv for " + t.def.name + ": missing header row");
    const auto &header = lines[0];
    if (header.size() != t.def.columns.size())
        throw StoreError("csv for " + t.def.name + ": header has " + std::to_string(header.size()) +
                         " columns, table has " + std::to_string(t.def.columns.size()));
    std::vector<std::size_t> target(header.size());
    std::vector<bool> seen(header.size(), false);
    for (std::size_t i = 0; i < header.size(); ++i) {
        auto idx = t.def.column_index(header[i].first);
        if (!idx || seen[*idx])
            throw StoreError("csv for " + t.def.name + ": header column '" + header[i].first +
                             "' does not match the table");
        seen[*idx] = true;
        target[i] = *idx;
    }
    std::vector<Row> rows;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const auto &fields = lines[l];
        std::string where = "csv for " + t.def.name + " line " + std::to_string(l + 1) + ": ";
        if (fields.size() != header.size())
            throw StoreError(where + "expected " + std::to_string(header.size()) + " fields, found " +
                             std::to_string(fields.size()));
        Row row(header.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const ColumnDef &col = t.def.columns[target[i]];
            const auto &[text_value, was_quoted] = fields[i];
            Value v;
            if (col.is_variable && !was_quoted && text_value == "?") {
                v = Unset{};
            } else {
                switch (col.dtype) {
                case DType::Integer: {
                    std::int64_t n = 0;
                    auto [ptr, ec] = std::from_chars(text_value.data(), text_value.data() + text_value.size(), n);
                    if (ec != std::errc() || ptr != text_value.data() + text_value.size())
                        throw StoreError(where + "column " + col.name + ": '" + text_value + "' is not an integer");
                    v = n;
                    break;
                }
                case DType::Boolean:
                    if (text_value == "true")
                        v = true;
                    else if (text_value == "false")
                        v = false;
                    else
                        throw StoreError(where + "column " + col.name + ": '" + text_value + "' is not a boolean");
                    break;
                case DType::Text: v = text_value; break;
                }
            }
            row[target[i]] = std::move(v);
        }
        rows.push_back(std::move(row));
    }
    return insert_rows(name, std::move(rows));
}

std::string Store::export_csv(std::string_view name) const
{
    const Table &t = table(name);
    std::string out;
    for (std::size_t i = 0; i < t.def.columns.size(); ++i)
        out += (i ? "," : "") + t.def.columns[i].name;
    out += "\n";
    for (const auto &row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i)
                out += ",";
            if (const auto *s = std::get_if<std::string>(&row[i]); s && needs_quotes(*s)) {
                out += '"';
                for (char c : *s) {
                    if (c == '"')
                        out += '"';
                    out += c;
                }
                out += '"';
            } else {
                out += to_string(row[i]);
            }
        }
        out += "\n";
    }
    return out;
}

void Store::apply_deltas(std::span<const Delta> deltas)
{
    struct Resolved {
        Table *table;
        std::size_t row;
        std::size_t column;
        const Value *value;
    };
    std::vector<Resolved> resolved;
    for (const auto &d : deltas) {
        Table &t = table(d.table);
        auto col = t.def.column_index(d.column);
        if (!col)
            throw StoreError("delta: table " + d.table + " has no column " + d.column);
        if (!t.def.columns[*col].is_variable)
            throw StoreError("delta: column " + d.table + "." + d.column + " is not a variable column");
        if (!is_unset(d.new_value) && !value_has_type(d.new_value, t.def.columns[*col].dtype))
            throw StoreError("delta: value '" + to_string(d.new_value) + "' does not match the type of " + d.table +
                             "." + d.column);
        auto row = find_row(d.table, d.row_key);
        if (!row)
            throw StoreError("delta: table " + d.table + " has no row " + to_string(d.row_key));
        resolved.push_back({&t, *row, *col, &d.new_value});
    }
    for (const auto &r : resolved)
        r.table->rows[r.row][r.column] = *r.value;
}

bool Store::has_table(std::string_view name) const { return tables_.find(name) != tables_.end(); }

const TableDef &Store::def(std::string_view name) const { return table(name).def; }

const std::vector<Row> &Store::rows(std::string_view name) const { return table(name).rows; }

std::vector<std::string> Store::table_names() const
{
    std::vector<std::string> out;
    for (const auto &[name, t] : tables_)
        out.push_back(name);
    return out;
}

Value Store::key_value(std::string_view name, std::size_t index) const
{
    const Table &t = table(name);
    if (t.def.primary_key)
        return t.rows.at(index)[*t.def.column_index(*t.def.primary_key)];
    return static_cast<std::int64_t>(index);
}

std::string Store::row_key(std::string_view name, std::size_t index) const
{
    return to_string(key_value(name, index));
}

std::optional<std::size_t> Store::find_row(std::string_view name, const Value &key) const
{
    const Table &t = table(name);
    if (t.def.primary_key) {
        auto it = t.by_key.find(key);
        if (it == t.by_key.end())
            return std::nullopt;
        return it->second;
    }
    if (const auto *i = std::get_if<std::int64_t>(&key); i && *i >= 0 && static_cast<std::size_t>(*i) < t.rows.size())
        return static_cast<std::size_t>(*i);
    return std::nullopt;
}

void Store::clear_rows(std::string_view name)
{
    Table &t = table(name);
    t.rows.clear();
    t.by_key.clear();
}

} // namespace weave::store
