#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weave/schema.hpp"
#include "weave/value.hpp"

namespace weave::sql {
struct ClassifiedProgram;
struct ViewDef;
struct Query;
} // namespace weave::sql

namespace weave::store {

using Row = std::vector<Value>;

struct Relation {
    std::vector<std::string> columns;
    std::vector<DType> types;
    std::vector<Row> rows;

    std::optional<std::size_t> column_index(std::string_view name) const;
};

// One cell update produced by a solve. `row_key` is the primary-key value,
// or the row index (integer) for tables without a primary key.
struct Delta {
    std::string table;
    Value row_key;
    std::string column;
    Value new_value;

    bool operator==(const Delta &) const = default;
};

// In-memory cluster state. Single writer; copies are cheap snapshots for
// concurrent readers.
class Store {
public:
    void create_table(TableDef def);
    std::size_t insert_rows(std::string_view table, std::vector<Row> rows);
    std::size_t load_csv(std::string_view table, std::string_view text);
    std::string export_csv(std::string_view table) const;
    void apply_deltas(std::span<const Delta> deltas);

    bool has_table(std::string_view name) const;
    const TableDef &def(std::string_view table) const;
    const std::vector<Row> &rows(std::string_view table) const;
    std::vector<std::string> table_names() const;

    // Primary-key value (or row index) identifying row `index`.
    Value key_value(std::string_view table, std::size_t index) const;
    std::string row_key(std::string_view table, std::size_t index) const;
    std::optional<std::size_t> find_row(std::string_view table, const Value &key) const;

    void clear_rows(std::string_view table);

private:
    struct Table {
        TableDef def;
        std::vector<Row> rows;
        std::map<Value, std::size_t> by_key;
    };
    Table &table(std::string_view name);
    const Table &table(std::string_view name) const;

    std::map<std::string, Table, std::less<>> tables_;
};

// Evaluates an input view against the store. Rows are sorted by the
// projected columns. Throws StoreError if the view reaches a variable column.
Relation eval_input_view(const Store &store, const sql::ClassifiedProgram &program, const sql::ViewDef &view);

// Evaluates any query, allowing variable columns (whatever they currently
// hold). Comparisons against an unset cell are false, except `!=`, which is
// true: an unset cell equals nothing, not even another unset cell.
Relation eval_query(const Store &store, const sql::ClassifiedProgram &program, const sql::Query &query);

} // namespace weave::store
