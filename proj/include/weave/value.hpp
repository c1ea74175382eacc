#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace weave {

enum class DType { Integer, Boolean, Text };

std::string_view dtype_name(DType t);

// Marker for a variable cell that has no decision yet. Distinct from SQL NULL:
// it compares unequal to everything, including another unset cell.
struct Unset {
    auto operator<=>(const Unset &) const = default;
};

using Value = std::variant<Unset, std::int64_t, bool, std::string>;

inline bool is_unset(const Value &v) { return std::holds_alternative<Unset>(v); }

bool value_has_type(const Value &v, DType t);

// Rendering used by CSV export and row keys. Unset renders as "?".
std::string to_string(const Value &v);

} // namespace weave
