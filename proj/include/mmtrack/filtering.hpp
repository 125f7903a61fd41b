#pragma once

#include <cmath>
#include <cstdint>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "mmtrack/core.hpp"

namespace mmtrack {

// Boundary / energy / speed gate. Pure partition: every input point lands in
// exactly one of kept or rejected, each preserving input order.
struct BesResult {
    std::vector<RadarPoint> kept;
    std::vector<RadarPoint> rejected;
};

inline bool besAccepts(const RadarPoint& p, const RoomBounds& room,
                       const BackgroundConfig& cfg) {
    if (!p.isFinite()) return false;
    if (!room.contains(p.x, p.y, p.z)) return false;
    if (p.energy < cfg.min_energy) return false;
    const double speed = std::abs(static_cast<double>(p.speed));
    return speed >= cfg.speed_band[0] && speed <= cfg.speed_band[1];
}

inline BesResult besFilter(const std::vector<RadarPoint>& points,
                           const RoomBounds& room, const BackgroundConfig& cfg) {
    BesResult r;
    for (const auto& p : points) {
        if (besAccepts(p, room, cfg)) r.kept.push_back(p);
        else r.rejected.push_back(p);
    }
    return r;
}

// Voxel persistence map. A voxel that keeps receiving rejected or unclustered
// points is eventually flagged as furniture-like background; flagged voxels
// have their points removed before clustering. Feeding the removed points back
// in keeps the flag alive while the object is present; once it disappears the
// flag expires after the decay horizon.
class BackgroundGrid {
public:
    BackgroundGrid(const BackgroundConfig& cfg, int persistence_ticks, int decay_ticks)
        : edge_(cfg.voxel_edge),
          persistence_ticks_(persistence_ticks),
          decay_ticks_(decay_ticks) {}

    // One call per working tick with every point the pipeline rejected this
    // tick (BES rejects, background-subtracted points, cluster noise).
    void update(const std::vector<RadarPoint>& rejected, int64_t tick) {
        // A voxel counts at most once per tick no matter how many points hit it.
        for (const auto& p : rejected) {
            if (!p.isFinite()) continue;
            Cell& c = cells_[keyOf(p)];
            if (c.initialized && c.last_seen == tick) continue;
            if (c.initialized && tick - c.last_seen > decay_ticks_) c.count = 0;
            c.initialized = true;
            c.last_seen = tick;
            ++c.count;
        }
        last_tick_ = tick;
    }

    bool isFlagged(const RadarPoint& p, int64_t tick) const {
        const auto [ix, iy, iz] = indicesOf(p);
        return cellFlagged(ix, iy, iz, tick);
    }

    // Dilated lookup: the point's own voxel or any of its 26 neighbors. Static
    // returns scatter across voxel borders, so suppressing only the flagged
    // voxel would leave a fringe of survivors around every learned object.
    bool isFlaggedNear(const RadarPoint& p, int64_t tick) const {
        const auto [ix, iy, iz] = indicesOf(p);
        for (int64_t dx = -1; dx <= 1; ++dx)
            for (int64_t dy = -1; dy <= 1; ++dy)
                for (int64_t dz = -1; dz <= 1; ++dz)
                    if (cellFlagged(ix + dx, iy + dy, iz + dz, tick)) return true;
        return false;
    }

    // Splits into surviving points and points suppressed as background.
    void subtract(const std::vector<RadarPoint>& points, int64_t tick,
                  std::vector<RadarPoint>& clean,
                  std::vector<RadarPoint>& suppressed) const {
        clean.clear();
        suppressed.clear();
        for (const auto& p : points) {
            if (isFlaggedNear(p, tick)) suppressed.push_back(p);
            else clean.push_back(p);
        }
    }

    size_t flaggedVoxelCount(int64_t tick) const {
        size_t n = 0;
        for (const auto& [k, c] : cells_)
            if (tick - c.last_seen <= decay_ticks_ && c.count >= persistence_ticks_) ++n;
        return n;
    }

    size_t trackedVoxelCount() const { return cells_.size(); }

private:
    struct Cell {
        int64_t last_seen = 0;
        int count = 0;
        bool initialized = false;
    };

    double edge_;
    int persistence_ticks_;
    int decay_ticks_;
    int64_t last_tick_ = 0;
    std::unordered_map<uint64_t, Cell> cells_;

    std::tuple<int64_t, int64_t, int64_t> indicesOf(const RadarPoint& p) const {
        // Offset keeps indices positive over any practical room.
        return {static_cast<int64_t>(std::floor(p.x / edge_)) + (1 << 20),
                static_cast<int64_t>(std::floor(p.y / edge_)) + (1 << 20),
                static_cast<int64_t>(std::floor(p.z / edge_)) + (1 << 20)};
    }

    static uint64_t keyAt(int64_t ix, int64_t iy, int64_t iz) {
        // 21 bits per axis.
        return (static_cast<uint64_t>(ix & 0x1FFFFF) << 42) |
               (static_cast<uint64_t>(iy & 0x1FFFFF) << 21) |
               static_cast<uint64_t>(iz & 0x1FFFFF);
    }

    uint64_t keyOf(const RadarPoint& p) const {
        const auto [ix, iy, iz] = indicesOf(p);
        return keyAt(ix, iy, iz);
    }

    bool cellFlagged(int64_t ix, int64_t iy, int64_t iz, int64_t tick) const {
        auto it = cells_.find(keyAt(ix, iy, iz));
        if (it == cells_.end()) return false;
        const Cell& c = it->second;
        if (tick - c.last_seen > decay_ticks_) return false;  // expired
        return c.count >= persistence_ticks_;
    }
};

}  // namespace mmtrack
