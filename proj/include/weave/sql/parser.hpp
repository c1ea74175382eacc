#pragma once

#include <string>
#include <string_view>

#include "weave/sql/ast.hpp"

namespace weave::sql {

// Parses DDL and view definitions. Annotations are SQL line comments of the
// form `-- @variable_columns (a, b)`, `-- @hard_constraint` or
// `-- @soft_constraint` placed immediately before a statement. Throws
// ParseError ("file:line:col: message") on anything outside the grammar.
Program parse_program(std::string_view text, const std::string &file = "<input>");

std::string to_sql(const Expr &e);
std::string to_sql(const Query &q);
std::string to_sql(const Program &p);

} // namespace weave::sql
