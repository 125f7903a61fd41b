#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "mmtrack/clustering.hpp"
#include "mmtrack/core.hpp"

namespace mmtrack {

// Pairing probability, Eq-style weighted sum of four terms:
//   current position consistency, current shape consistency (Z-score ramps
//   against the bin's own recent history), and two prior-expectation terms
//   (triangular memberships for plausible human centroid height and box
//   height). A Z-score beyond the cutoff vetoes the pairing outright.
struct ScoreBreakdown {
    double c_pos = 0.0;
    double c_shape = 0.0;
    double e_pos = 0.0;
    double e_shape = 0.0;
    double total = 0.0;
    bool vetoed = false;
};

struct BinSnapshot {
    int64_t tick = 0;
    Vec3 centroid;
    Vec3 extent;  // bounding-box edge lengths
};

struct TrackBin {
    int id = 0;
    TrackState state = TrackState::Tentative;
    int64_t born_tick = 0;
    int64_t last_assigned_tick = 0;
    int consecutive_hits = 0;
    int tentative_misses = 0;
    int last_cluster_index = -1;  // cluster assigned on the most recent step
    std::deque<BinSnapshot> history;  // newest at back, bounded

    const BinSnapshot& latest() const { return history.back(); }
};

// Per-axis mean / deviation of the bin's recent motion and shape, with a
// configured floor so a bin that has held still does not veto all movement.
struct BinStats {
    Vec3 last_centroid;
    Vec3 disp_mean, disp_sigma;
    Vec3 ext_mean, ext_sigma;
};

namespace detail {

inline constexpr int kStatsWindow = 20;  // displacement pairs considered

inline void meanSigma(const std::vector<double>& v, double floor_sigma,
                      double& mean, double& sigma) {
    if (v.empty()) {
        mean = 0.0;
        sigma = floor_sigma;
        return;
    }
    double s = 0.0;
    for (double x : v) s += x;
    mean = s / static_cast<double>(v.size());
    double q = 0.0;
    for (double x : v) q += (x - mean) * (x - mean);
    sigma = std::max(std::sqrt(q / static_cast<double>(v.size())), floor_sigma);
}

}  // namespace detail

inline BinStats computeBinStats(const TrackBin& bin, const TrackingConfig& cfg) {
    BinStats st;
    st.last_centroid = bin.latest().centroid;

    const size_t n = bin.history.size();
    const size_t pairs = n >= 2 ? std::min<size_t>(n - 1, detail::kStatsWindow) : 0;
    std::vector<double> dx, dy, dz;
    for (size_t k = n - pairs; k < n; ++k) {
        const Vec3 d = bin.history[k].centroid - bin.history[k - 1].centroid;
        dx.push_back(d.x);
        dy.push_back(d.y);
        dz.push_back(d.z);
    }
    detail::meanSigma(dx, cfg.sigma_floor_position, st.disp_mean.x, st.disp_sigma.x);
    detail::meanSigma(dy, cfg.sigma_floor_position, st.disp_mean.y, st.disp_sigma.y);
    detail::meanSigma(dz, cfg.sigma_floor_position, st.disp_mean.z, st.disp_sigma.z);

    std::vector<double> ex, ey, ez;
    const size_t shape_from = n > detail::kStatsWindow ? n - detail::kStatsWindow : 0;
    for (size_t k = shape_from; k < n; ++k) {
        ex.push_back(bin.history[k].extent.x);
        ey.push_back(bin.history[k].extent.y);
        ez.push_back(bin.history[k].extent.z);
    }
    detail::meanSigma(ex, cfg.sigma_floor_shape, st.ext_mean.x, st.ext_sigma.x);
    detail::meanSigma(ey, cfg.sigma_floor_shape, st.ext_mean.y, st.ext_sigma.y);
    detail::meanSigma(ez, cfg.sigma_floor_shape, st.ext_mean.z, st.ext_sigma.z);
    return st;
}

// Widen a coasting bin's tolerances. History freezes while a bin goes
// unassigned, so a body mid-collapse drifts outside the frozen z-cutoff and
// would stay vetoed forever once prone. Growing the sigmas with each missed
// tick re-admits the settled shape; the cap keeps clusters far from the last
// seen centroid vetoed, so a coasting bin cannot steal a distant track.
inline void inflateForCoast(BinStats& st, int64_t missed_ticks,
                            const TrackingConfig& cfg) {
    if (missed_ticks <= 0 || cfg.coast_sigma_rate <= 0.0) return;
    const double scale =
        std::min(cfg.coast_sigma_max,
                 1.0 + cfg.coast_sigma_rate * static_cast<double>(missed_ticks));
    st.disp_sigma = st.disp_sigma * scale;
    st.ext_sigma = st.ext_sigma * scale;
}

inline double expectationPosition(const Cluster& c, const TrackingConfig& cfg) {
    return cfg.centroid_height.eval(c.centroid.z);
}

inline double expectationShape(const Cluster& c, const TrackingConfig& cfg) {
    return cfg.box_height.eval(c.boxExtent().z);
}

inline ScoreBreakdown scorePair(const BinStats& st, const Cluster& c,
                                const TrackingConfig& cfg) {
    ScoreBreakdown out;

    const Vec3 d = c.centroid - st.last_centroid;
    const double zp = std::max({std::abs(d.x - st.disp_mean.x) / st.disp_sigma.x,
                                std::abs(d.y - st.disp_mean.y) / st.disp_sigma.y,
                                std::abs(d.z - st.disp_mean.z) / st.disp_sigma.z});
    const Vec3 e = c.boxExtent();
    const double zs = std::max({std::abs(e.x - st.ext_mean.x) / st.ext_sigma.x,
                                std::abs(e.y - st.ext_mean.y) / st.ext_sigma.y,
                                std::abs(e.z - st.ext_mean.z) / st.ext_sigma.z});

    out.e_pos = expectationPosition(c, cfg);
    out.e_shape = expectationShape(c, cfg);
    if (zp > cfg.z_cutoff || zs > cfg.z_cutoff) {
        out.vetoed = true;
        return out;  // total stays 0
    }
    out.c_pos = std::max(0.0, 1.0 - zp / cfg.z_cutoff);
    out.c_shape = std::max(0.0, 1.0 - zs / cfg.z_cutoff);
    out.total = cfg.coefficients[0] * out.c_pos + cfg.coefficients[1] * out.c_shape +
                cfg.coefficients[2] * out.e_pos + cfg.coefficients[3] * out.e_shape;
    return out;
}

// Admission score for a cluster with no bin: the expectation terms only,
// renormalized to [0, 1].
inline double newBinGate(const Cluster& c, const TrackingConfig& cfg) {
    const double g = cfg.coefficients[2], d = cfg.coefficients[3];
    const double ep = expectationPosition(c, cfg);
    const double es = expectationShape(c, cfg);
    if (g + d <= 0.0) return 0.5 * (ep + es);
    return (g * ep + d * es) / (g + d);
}

// Greedy global-max assignment. Repeatedly take the largest non-zero entry
// (ties: lowest row, then lowest column), bind that row to that column, and
// absorb every still-free column whose centroid sits within neighbor_radius of
// the winner: those are treated as fragments of the same person.
struct AssignmentResult {
    std::vector<std::pair<int, int>> pairs;  // (row, column)
    std::vector<int> absorbed;               // columns removed as fragments
    std::vector<int> leftover_columns;       // candidate new people
    std::vector<int> unassigned_rows;
};

inline AssignmentResult greedyAssign(const std::vector<std::vector<double>>& matrix,
                                     const std::vector<Vec3>& column_centroids,
                                     double neighbor_radius) {
    const int rows = static_cast<int>(matrix.size());
    const int cols = rows > 0 ? static_cast<int>(matrix[0].size())
                              : static_cast<int>(column_centroids.size());
    std::vector<bool> row_free(rows, true), col_free(cols, true);
    AssignmentResult out;

    for (;;) {
        double best = 0.0;
        int bi = -1, bj = -1;
        for (int i = 0; i < rows; ++i) {
            if (!row_free[i]) continue;
            for (int j = 0; j < cols; ++j) {
                if (!col_free[j]) continue;
                if (matrix[i][j] > best) {
                    best = matrix[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi < 0) break;  // no non-zero entries left

        out.pairs.emplace_back(bi, bj);
        row_free[bi] = false;
        col_free[bj] = false;
        for (int j = 0; j < cols; ++j) {
            if (!col_free[j]) continue;
            if ((column_centroids[j] - column_centroids[bj]).norm() <= neighbor_radius) {
                col_free[j] = false;
                out.absorbed.push_back(j);
            }
        }
    }
    for (int j = 0; j < cols; ++j)
        if (col_free[j]) out.leftover_columns.push_back(j);
    for (int i = 0; i < rows; ++i)
        if (row_free[i]) out.unassigned_rows.push_back(i);
    return out;
}

// Bin lifecycle around the per-tick assignment.
class Tracker {
public:
    explicit Tracker(const TrackingConfig& cfg, int timeout_ticks)
        : cfg_(cfg), timeout_ticks_(timeout_ticks) {}

    struct StepResult {
        std::vector<std::pair<int, int>> assignments;  // (bin id, cluster index)
        std::vector<int> spawned;
        std::vector<int> confirmed;
        std::vector<int> retired;  // tentative bins given up on
        std::vector<int> lost;     // confirmed bins timed out
        bool detection = false;    // any assignment or spawn this tick
    };

    StepResult step(const std::vector<Cluster>& clusters, int64_t tick) {
        StepResult result;

        std::vector<std::vector<double>> matrix(bins_.size(),
                                                std::vector<double>(clusters.size(), 0.0));
        std::vector<Vec3> centroids(clusters.size());
        for (size_t j = 0; j < clusters.size(); ++j) centroids[j] = clusters[j].centroid;
        for (size_t i = 0; i < bins_.size(); ++i) {
            BinStats st = computeBinStats(bins_[i], cfg_);
            inflateForCoast(st, tick - bins_[i].last_assigned_tick - 1, cfg_);
            for (size_t j = 0; j < clusters.size(); ++j)
                matrix[i][j] = scorePair(st, clusters[j], cfg_).total;
        }

        const AssignmentResult assign =
            greedyAssign(matrix, centroids, cfg_.neighbor_radius);

        std::vector<bool> bin_hit(bins_.size(), false);
        for (auto& b : bins_) b.last_cluster_index = -1;
        for (const auto& [row, col] : assign.pairs) {
            TrackBin& bin = bins_[row];
            bin_hit[row] = true;
            bin.last_cluster_index = col;
            bin.last_assigned_tick = tick;
            bin.consecutive_hits += 1;
            bin.tentative_misses = 0;
            pushSnapshot(bin, clusters[col], tick);
            if (bin.state == TrackState::Tentative &&
                bin.consecutive_hits >= cfg_.confirm_ticks) {
                bin.state = TrackState::Confirmed;
                result.confirmed.push_back(bin.id);
            }
            result.assignments.emplace_back(bin.id, col);
            result.detection = true;
        }

        std::vector<TrackBin> survivors;
        survivors.reserve(bins_.size());
        for (size_t i = 0; i < bins_.size(); ++i) {
            TrackBin& bin = bins_[i];
            if (bin_hit[i]) {
                survivors.push_back(std::move(bin));
                continue;
            }
            if (bin.state == TrackState::Tentative) {
                bin.consecutive_hits = 0;
                if (++bin.tentative_misses >= cfg_.tentative_max_misses) {
                    result.retired.push_back(bin.id);
                    continue;
                }
            } else if (tick - bin.last_assigned_tick >= timeout_ticks_) {
                bin.state = TrackState::Lost;
                result.lost.push_back(bin.id);
                continue;  // lost bins receive no further assignments
            }
            survivors.push_back(std::move(bin));
        }
        bins_ = std::move(survivors);

        for (int col : assign.leftover_columns) {
            if (newBinGate(clusters[col], cfg_) <= 0.5) continue;
            TrackBin bin;
            bin.id = next_id_++;
            bin.state = TrackState::Tentative;
            bin.born_tick = tick;
            bin.last_assigned_tick = tick;
            bin.consecutive_hits = 1;
            bin.last_cluster_index = col;
            pushSnapshot(bin, clusters[col], tick);
            result.spawned.push_back(bin.id);
            result.detection = true;
            bins_.push_back(std::move(bin));
        }

        return result;
    }

    const std::vector<TrackBin>& bins() const { return bins_; }

    const TrackBin* find(int id) const {
        for (const auto& b : bins_)
            if (b.id == id) return &b;
        return nullptr;
    }

private:
    TrackingConfig cfg_;
    int timeout_ticks_;
    std::vector<TrackBin> bins_;  // kept in id order (append-only ids)
    int next_id_ = 1;

    static void pushSnapshot(TrackBin& bin, const Cluster& c, int64_t tick) {
        bin.history.push_back({tick, c.centroid, c.boxExtent()});
        while (bin.history.size() > 32) bin.history.pop_front();
    }
};

}  // namespace mmtrack
