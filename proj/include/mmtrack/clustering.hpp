#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "mmtrack/core.hpp"
#include "mmtrack/geometry.hpp"

namespace mmtrack {

struct Cluster {
    std::vector<int> members;  // sorted indices into the clustered frame
    Vec3 centroid;
    Vec3 box_min;
    Vec3 box_max;
    double mean_energy = 0.0;

    int size() const { return static_cast<int>(members.size()); }
    Vec3 boxExtent() const { return box_max - box_min; }
};

inline Cluster summarize(const std::vector<RadarPoint>& points,
                         std::vector<int> members) {
    if (members.empty()) throw ValidationError("cluster summary of zero points");
    std::sort(members.begin(), members.end());
    Cluster c;
    c.box_min = {points[members[0]].x, points[members[0]].y, points[members[0]].z};
    c.box_max = c.box_min;
    double sx = 0, sy = 0, sz = 0, se = 0;
    for (int idx : members) {
        const auto& p = points[idx];
        sx += p.x; sy += p.y; sz += p.z; se += p.energy;
        c.box_min.x = std::min(c.box_min.x, static_cast<double>(p.x));
        c.box_min.y = std::min(c.box_min.y, static_cast<double>(p.y));
        c.box_min.z = std::min(c.box_min.z, static_cast<double>(p.z));
        c.box_max.x = std::max(c.box_max.x, static_cast<double>(p.x));
        c.box_max.y = std::max(c.box_max.y, static_cast<double>(p.y));
        c.box_max.z = std::max(c.box_max.z, static_cast<double>(p.z));
    }
    const double n = static_cast<double>(members.size());
    c.centroid = {sx / n, sy / n, sz / n};
    c.mean_energy = se / n;
    c.members = std::move(members);
    return c;
}

namespace detail {

// Uniform hash grid over a point subset; cells of edge epsilon so a ball query
// only inspects the 27 surrounding cells.
class NeighborGrid {
public:
    NeighborGrid(const std::vector<RadarPoint>& points, const std::vector<int>& subset,
                 double epsilon)
        : points_(points), eps2_(epsilon * epsilon), inv_edge_(1.0 / epsilon) {
        cells_.reserve(subset.size());
        for (int idx : subset) cells_[keyOf(points_[idx])].push_back(idx);
    }

    // Indices within epsilon of points[center], the center itself included.
    void query(int center, std::vector<int>& out) const {
        out.clear();
        const auto& c = points_[center];
        const int64_t cx = coord(c.x), cy = coord(c.y), cz = coord(c.z);
        for (int64_t dx = -1; dx <= 1; ++dx)
            for (int64_t dy = -1; dy <= 1; ++dy)
                for (int64_t dz = -1; dz <= 1; ++dz) {
                    auto it = cells_.find(pack(cx + dx, cy + dy, cz + dz));
                    if (it == cells_.end()) continue;
                    for (int idx : it->second) {
                        const auto& p = points_[idx];
                        const double ddx = p.x - c.x, ddy = p.y - c.y, ddz = p.z - c.z;
                        if (ddx * ddx + ddy * ddy + ddz * ddz <= eps2_)
                            out.push_back(idx);
                    }
                }
        std::sort(out.begin(), out.end());
    }

private:
    const std::vector<RadarPoint>& points_;
    double eps2_;
    double inv_edge_;
    std::unordered_map<uint64_t, std::vector<int>> cells_;

    int64_t coord(double v) const { return static_cast<int64_t>(std::floor(v * inv_edge_)); }

    static uint64_t pack(int64_t x, int64_t y, int64_t z) {
        return (static_cast<uint64_t>((x + (1 << 20)) & 0x1FFFFF) << 42) |
               (static_cast<uint64_t>((y + (1 << 20)) & 0x1FFFFF) << 21) |
               static_cast<uint64_t>((z + (1 << 20)) & 0x1FFFFF);
    }

    uint64_t keyOf(const RadarPoint& p) const {
        return pack(coord(p.x), coord(p.y), coord(p.z));
    }
};

// Canonical density clustering over a subset of the frame. A point counts
// itself toward min_points; border points join a cluster without expanding it.
inline std::vector<std::vector<int>> dbscanPass(const std::vector<RadarPoint>& points,
                                                const std::vector<int>& subset,
                                                double epsilon, int min_points) {
    constexpr int kUnvisited = -2, kNoise = -1;
    std::unordered_map<int, int> label;
    label.reserve(subset.size());
    for (int idx : subset) label[idx] = kUnvisited;

    NeighborGrid grid(points, subset, epsilon);
    std::vector<std::vector<int>> clusters;
    std::vector<int> neighbors, expand;

    for (int idx : subset) {
        if (label[idx] != kUnvisited) continue;
        grid.query(idx, neighbors);
        if (static_cast<int>(neighbors.size()) < min_points) {
            label[idx] = kNoise;
            continue;
        }
        const int cid = static_cast<int>(clusters.size());
        clusters.emplace_back();
        label[idx] = cid;
        clusters[cid].push_back(idx);
        std::vector<int> seeds = neighbors;
        for (size_t si = 0; si < seeds.size(); ++si) {
            const int q = seeds[si];
            int& ql = label[q];
            if (ql == kNoise) {  // noise becomes a border member
                ql = cid;
                clusters[cid].push_back(q);
                continue;
            }
            if (ql != kUnvisited) continue;
            ql = cid;
            clusters[cid].push_back(q);
            grid.query(q, expand);
            if (static_cast<int>(expand.size()) >= min_points)
                seeds.insert(seeds.end(), expand.begin(), expand.end());
        }
    }
    for (auto& c : clusters) std::sort(c.begin(), c.end());
    return clusters;
}

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }

    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace detail

struct DbscanResult {
    std::vector<Cluster> clusters;  // ordered by smallest member index
    std::vector<int> noise;         // indices clustered by no pass
};

// Banded density clustering. Passes run from the highest energy band down;
// the pass for band b clusters b's points together with every higher band's
// points under b's parameters, and clusters from different passes that share
// a point are merged. A band with no points of its own contributes nothing
// (its pass set equals a higher pass run under laxer-or-equal parameters, a
// consequence of the validated band monotonicity), so it is skipped.
inline DbscanResult dynamicDbscan(const std::vector<RadarPoint>& points,
                                  const std::vector<EnergyBand>& bands) {
    const int n = static_cast<int>(points.size());
    DbscanResult result;
    if (n == 0) return result;

    detail::UnionFind uf(n);
    std::vector<bool> clustered(n, false);

    // bands are validated ascending; walk them highest first.
    for (auto it = bands.rbegin(); it != bands.rend(); ++it) {
        const EnergyBand& band = *it;
        bool own = false;
        std::vector<int> pass_set;
        for (int i = 0; i < n; ++i) {
            const double e = points[i].energy;
            if (e >= band.energy_lo) pass_set.push_back(i);
            if (band.contains(e)) own = true;
        }
        if (!own) continue;

        const auto pass_clusters =
            detail::dbscanPass(points, pass_set, band.epsilon, band.min_points);
        for (const auto& members : pass_clusters) {
            for (int idx : members) {
                clustered[idx] = true;
                uf.unite(members.front(), idx);
            }
        }
    }

    std::unordered_map<int, std::vector<int>> merged;
    for (int i = 0; i < n; ++i) {
        if (clustered[i]) merged[uf.find(i)].push_back(i);
        else result.noise.push_back(i);
    }
    for (auto& [root, members] : merged)
        result.clusters.push_back(summarize(points, std::move(members)));
    std::sort(result.clusters.begin(), result.clusters.end(),
              [](const Cluster& a, const Cluster& b) {
                  return a.members.front() < b.members.front();
              });
    return result;
}

}  // namespace mmtrack
