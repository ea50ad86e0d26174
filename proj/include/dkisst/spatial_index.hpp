#pragma once
/**
 * @file    spatial_index.hpp
 * @brief   Uniform bucket grid over the normalized (x, y, heading, speed)
 *          space. The heading axis lives in [0, 1) and wraps around.
 *
 * Queries visit the 3^4 neighbourhood of the query cell, so results are
 * exact for radii up to the cell edge.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

namespace dkisst
{

using NormalizedPoint = std::array<double, 4>;

/// Distance in the normalized space with the heading axis wrapping at 1.
inline double normalized_distance(const NormalizedPoint& a, const NormalizedPoint& b)
{
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    double dh = std::abs(a[2] - b[2]);
    dh = std::min(dh, 1.0 - dh);
    const double dv = a[3] - b[3];
    return std::sqrt(dx * dx + dy * dy + dh * dh + dv * dv);
}

template <typename Id>
class BucketIndex
{
  public:
    explicit BucketIndex(double cell) : cell_(cell)
    {
        heading_cells_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(1.0 / cell)));
    }

    void insert(Id id, const NormalizedPoint& p) { buckets_[key_of(p)].push_back(id); }

    void erase(Id id, const NormalizedPoint& p)
    {
        auto it = buckets_.find(key_of(p));
        if (it == buckets_.end())
            return;
        auto& v = it->second;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] == id)
            {
                v[i] = v.back();
                v.pop_back();
                break;
            }
        if (v.empty())
            buckets_.erase(it);
    }

    /// Calls `fn(id)` for every entry in the cells neighbouring `p`.
    template <typename Fn>
    void for_each_candidate(const NormalizedPoint& p, Fn&& fn) const
    {
        const Key base = key_of(p);
        std::array<std::int64_t, 3> headings{};
        std::size_t n_headings = 0;
        for (std::int64_t dh = -1; dh <= 1; ++dh)
        {
            const std::int64_t h = ((base[2] + dh) % heading_cells_ + heading_cells_) % heading_cells_;
            bool seen = false;
            for (std::size_t k = 0; k < n_headings; ++k)
                seen = seen || headings[k] == h;
            if (!seen)
                headings[n_headings++] = h;
        }
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy)
                for (std::size_t k = 0; k < n_headings; ++k)
                    for (std::int64_t dv = -1; dv <= 1; ++dv)
                    {
                        auto it = buckets_.find(Key{base[0] + dx, base[1] + dy, headings[k], base[3] + dv});
                        if (it == buckets_.end())
                            continue;
                        for (const Id& id : it->second)
                            fn(id);
                    }
    }

    [[nodiscard]] double cell() const { return cell_; }

  private:
    using Key = std::array<std::int64_t, 4>;

    struct KeyHash
    {
        std::size_t operator()(const Key& k) const noexcept
        {
            std::uint64_t h = 0x9E3779B97F4A7C15ULL;
            for (auto v : k)
            {
                h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
            }
            return static_cast<std::size_t>(h);
        }
    };

    [[nodiscard]] Key key_of(const NormalizedPoint& p) const
    {
        auto h = static_cast<std::int64_t>(std::floor(p[2] * static_cast<double>(heading_cells_)));
        h = ((h % heading_cells_) + heading_cells_) % heading_cells_;
        return {static_cast<std::int64_t>(std::floor(p[0] / cell_)), static_cast<std::int64_t>(std::floor(p[1] / cell_)),
                h, static_cast<std::int64_t>(std::floor(p[3] / cell_))};
    }

    double cell_;
    std::int64_t heading_cells_ = 1;
    std::unordered_map<Key, std::vector<Id>, KeyHash> buckets_;
};

} // namespace dkisst
