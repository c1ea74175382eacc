#include "weave/cp/domain.hpp"

#include <algorithm>
#include <limits>

namespace weave::cp {

Domain::Domain(std::int64_t lo, std::int64_t hi)
{
    if (lo <= hi)
        ranges_.push_back({lo, hi});
}

Domain Domain::of(std::vector<std::int64_t> values)
{
    std::sort(values.begin(), values.end());
    Domain d;
    for (auto v : values) {
        if (!d.ranges_.empty() && d.ranges_.back().hi != std::numeric_limits<std::int64_t>::max() &&
            v <= d.ranges_.back().hi + 1)
            d.ranges_.back().hi = std::max(d.ranges_.back().hi, v);
        else
            d.ranges_.push_back({v, v});
    }
    return d;
}

std::uint64_t Domain::size() const
{
    std::uint64_t n = 0;
    for (const auto &r : ranges_)
        n += static_cast<std::uint64_t>(r.hi - r.lo) + 1;
    return n;
}

bool Domain::contains(std::int64_t v) const
{
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), v, [](std::int64_t x, const Range &r) { return x < r.lo; });
    if (it == ranges_.begin())
        return false;
    --it;
    return v <= it->hi;
}

std::vector<std::int64_t> Domain::values() const
{
    std::vector<std::int64_t> out;
    for (const auto &r : ranges_)
        for (std::int64_t v = r.lo;; ++v) {
            out.push_back(v);
            if (v == r.hi)
                break;
        }
    return out;
}

bool Domain::set_min(std::int64_t v)
{
    if (ranges_.empty() || v <= min())
        return false;
    auto it = ranges_.begin();
    while (it != ranges_.end() && it->hi < v)
        ++it;
    ranges_.erase(ranges_.begin(), it);
    if (!ranges_.empty() && ranges_.front().lo < v)
        ranges_.front().lo = v;
    return true;
}

bool Domain::set_max(std::int64_t v)
{
    if (ranges_.empty() || v >= max())
        return false;
    while (!ranges_.empty() && ranges_.back().lo > v)
        ranges_.pop_back();
    if (!ranges_.empty() && ranges_.back().hi > v)
        ranges_.back().hi = v;
    return true;
}

bool Domain::remove(std::int64_t v)
{
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), v, [](std::int64_t x, const Range &r) { return x < r.lo; });
    if (it == ranges_.begin())
        return false;
    --it;
    if (v > it->hi)
        return false;
    if (it->lo == v && it->hi == v) {
        ranges_.erase(it);
    } else if (it->lo == v) {
        ++it->lo;
    } else if (it->hi == v) {
        --it->hi;
    } else {
        Range upper{v + 1, it->hi};
        it->hi = v - 1;
        ranges_.insert(it + 1, upper);
    }
    return true;
}

bool Domain::assign(std::int64_t v)
{
    if (fixed() && value() == v)
        return false;
    bool had = contains(v);
    ranges_.clear();
    if (had)
        ranges_.push_back({v, v});
    return true;
}

bool Domain::intersect(const Domain &other)
{
    std::vector<Range> out;
    std::size_t i = 0, j = 0;
    while (i < ranges_.size() && j < other.ranges_.size()) {
        std::int64_t lo = std::max(ranges_[i].lo, other.ranges_[j].lo);
        std::int64_t hi = std::min(ranges_[i].hi, other.ranges_[j].hi);
        if (lo <= hi)
            out.push_back({lo, hi});
        if (ranges_[i].hi < other.ranges_[j].hi)
            ++i;
        else
            ++j;
    }
    if (out == ranges_)
        return false;
    ranges_ = std::move(out);
    return true;
}

bool Domain::subtract(const Domain &other)
{
    bool changed = false;
    for (const auto &r : other.ranges_) {
        if (ranges_.empty())
            break;
        if (r.hi < min() || r.lo > max())
            continue;
        // Clip [r.lo, r.hi] out of every overlapping range.
        std::vector<Range> out;
        for (const auto &x : ranges_) {
            if (x.hi < r.lo || x.lo > r.hi) {
                out.push_back(x);
                continue;
            }
            changed = true;
            if (x.lo < r.lo)
                out.push_back({x.lo, r.lo - 1});
            if (x.hi > r.hi)
                out.push_back({r.hi + 1, x.hi});
        }
        ranges_ = std::move(out);
    }
    return changed;
}

Domain Domain::unite(const Domain &other) const
{
    Domain d;
    d.ranges_ = ranges_;
    d.ranges_.insert(d.ranges_.end(), other.ranges_.begin(), other.ranges_.end());
    d.normalize();
    return d;
}

bool Domain::intersects(const Domain &other) const
{
    std::size_t i = 0, j = 0;
    while (i < ranges_.size() && j < other.ranges_.size()) {
        if (std::max(ranges_[i].lo, other.ranges_[j].lo) <= std::min(ranges_[i].hi, other.ranges_[j].hi))
            return true;
        if (ranges_[i].hi < other.ranges_[j].hi)
            ++i;
        else
            ++j;
    }
    return false;
}

void Domain::normalize()
{
    std::sort(ranges_.begin(), ranges_.end(), [](const Range &a, const Range &b) { return a.lo < b.lo; });
    std::vector<Range> out;
    for (const auto &r : ranges_) {
        if (!out.empty() && (out.back().hi == std::numeric_limits<std::int64_t>::max() || r.lo <= out.back().hi + 1))
            out.back().hi = std::max(out.back().hi, r.hi);
        else
            out.push_back(r);
    }
    ranges_ = std::move(out);
}

std::string Domain::str() const
{
    std::string s = "{";
    for (std::size_t i = 0; i < ranges_.size(); ++i) {
        if (i)
            s += ",";
        s += std::to_string(ranges_[i].lo);
        if (ranges_[i].hi != ranges_[i].lo)
            s += ".." + std::to_string(ranges_[i].hi);
    }
    return s + "}";
}

} // namespace weave::cp
