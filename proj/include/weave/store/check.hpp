#pragma once

#include <string>
#include <vector>

#include "weave/sql/classify.hpp"
#include "weave/store/store.hpp"

namespace weave::store {

struct Violation {
    std::string view;
    std::string detail;
};

// Re-evaluates every hard constraint view directly on the store's concrete
// values, independent of the compiler and solver. A non-grouped view is
// violated by any joined row whose where clause is false; a grouped view by
// any group whose having clause is false. Rows in which a referenced variable
// cell is still unset (unscheduled or evicted) are not checked.
std::vector<Violation> check_hard_views(const Store &store, const sql::ClassifiedProgram &program);

} // namespace weave::store
