#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace weave::cp {

// Finite set of 64-bit integers stored as sorted, disjoint, non-adjacent
// closed ranges. An empty domain signals failure.
class Domain {
public:
    struct Range {
        std::int64_t lo, hi;
        bool operator==(const Range &) const = default;
    };

    Domain() = default;
    Domain(std::int64_t lo, std::int64_t hi);
    static Domain of(std::vector<std::int64_t> values);

    bool empty() const { return ranges_.empty(); }
    std::uint64_t size() const;
    std::int64_t min() const { return ranges_.front().lo; }
    std::int64_t max() const { return ranges_.back().hi; }
    bool fixed() const { return ranges_.size() == 1 && ranges_[0].lo == ranges_[0].hi; }
    std::int64_t value() const { return ranges_.front().lo; }
    bool contains(std::int64_t v) const;
    const std::vector<Range> &ranges() const { return ranges_; }
    std::vector<std::int64_t> values() const;

    // Mutators return true when the domain changed.
    bool set_min(std::int64_t v);
    bool set_max(std::int64_t v);
    bool remove(std::int64_t v);
    bool assign(std::int64_t v);
    bool intersect(const Domain &other);
    bool subtract(const Domain &other);

    Domain unite(const Domain &other) const;
    bool intersects(const Domain &other) const;

    std::string str() const;
    bool operator==(const Domain &) const = default;

private:
    void normalize();
    std::vector<Range> ranges_;
};

} // namespace weave::cp
