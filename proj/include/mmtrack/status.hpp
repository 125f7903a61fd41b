#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <vector>

#include "mmtrack/clustering.hpp"
#include "mmtrack/core.hpp"

namespace mmtrack {

// ---- instant status ----------------------------------------------------------

struct StatusScores {
    double standing = 0.0;
    double sitting = 0.0;
    double fallen = 0.0;

    double of(StatusLabel s) const {
        switch (s) {
            case StatusLabel::Standing: return standing;
            case StatusLabel::Sitting: return sitting;
            case StatusLabel::Fallen: return fallen;
        }
        return 0.0;
    }
};

enum class AspectClass : uint8_t { Tall, Neutral, Flat };

inline AspectClass aspectOf(const Cluster& c, const StatusConfig& cfg) {
    const Vec3 e = c.boxExtent();
    const double horizontal = std::max(e.x, e.y);
    if (horizontal <= 0.0) return AspectClass::Tall;  // degenerate vertical stack
    const double ratio = e.z / horizontal;
    if (ratio > cfg.aspect_tall) return AspectClass::Tall;
    if (ratio < cfg.aspect_flat) return AspectClass::Flat;
    return AspectClass::Neutral;
}

namespace detail {

// Shape agreement between a cluster's aspect and a portrait's expected aspect:
// exact match 1, opposite (tall vs flat) 0, anything involving neutral 0.5.
inline double aspectAgreement(AspectClass cluster, AspectClass portrait) {
    if (cluster == portrait) return 1.0;
    if (cluster == AspectClass::Neutral || portrait == AspectClass::Neutral) return 0.5;
    return 0.0;
}

inline AspectClass portraitAspect(StatusLabel s) {
    switch (s) {
        case StatusLabel::Standing: return AspectClass::Tall;
        case StatusLabel::Sitting: return AspectClass::Neutral;
        case StatusLabel::Fallen: return AspectClass::Flat;
    }
    return AspectClass::Neutral;
}

}  // namespace detail

// Weighted portrait match: position term is a triangular membership around the
// portrait's expected cloud-centroid height, shape term compares box aspect.
inline StatusScores statusScores(const Cluster& c, const StatusConfig& cfg) {
    const AspectClass cluster_aspect = aspectOf(c, cfg);
    const double lambda = cfg.coefficients[0], sigma = cfg.coefficients[1];
    auto one = [&](StatusLabel s, double portrait_height) {
        const Triangle t{portrait_height - cfg.height_halfwidth, portrait_height,
                         portrait_height + cfg.height_halfwidth};
        const double e_pos = t.eval(c.centroid.z);
        const double e_shape =
            detail::aspectAgreement(cluster_aspect, detail::portraitAspect(s));
        return lambda * e_pos + sigma * e_shape;
    };
    StatusScores out;
    out.standing = one(StatusLabel::Standing, cfg.portrait_standing);
    out.sitting = one(StatusLabel::Sitting, cfg.portrait_sitting);
    out.fallen = one(StatusLabel::Fallen, cfg.portrait_fallen);
    return out;
}

// Arg-max with a fixed priority for exact ties: Standing, then Sitting, then Fallen.
inline StatusLabel classifyStatus(const StatusScores& s) {
    StatusLabel best = StatusLabel::Standing;
    double best_score = s.standing;
    if (s.sitting > best_score) { best = StatusLabel::Sitting; best_score = s.sitting; }
    if (s.fallen > best_score) { best = StatusLabel::Fallen; best_score = s.fallen; }
    return best;
}

inline StatusLabel classifyStatus(const Cluster& c, const StatusConfig& cfg) {
    return classifyStatus(statusScores(c, cfg));
}

// ---- temporal blur -----------------------------------------------------------

// Majority vote over the most recent `window` instant labels. A tie keeps the
// previous blurred value when it is among the tied labels, otherwise the
// Standing > Sitting > Fallen priority decides. Short bursts (under half the
// window) can never flip the vote.
class StatusBlur {
public:
    explicit StatusBlur(int window) : window_(window < 1 ? 1 : window) {}

    StatusLabel push(StatusLabel instant) {
        labels_.push_back(instant);
        if (labels_.size() > static_cast<size_t>(window_)) labels_.pop_front();

        int counts[3] = {0, 0, 0};
        for (StatusLabel l : labels_) ++counts[static_cast<int>(l)];
        int best = std::max({counts[0], counts[1], counts[2]});

        if (blurred_ && counts[static_cast<int>(*blurred_)] == best) {
            return *blurred_;  // tie or outright win for the incumbent
        }
        for (StatusLabel l : {StatusLabel::Standing, StatusLabel::Sitting,
                              StatusLabel::Fallen}) {
            if (counts[static_cast<int>(l)] == best) {
                blurred_ = l;
                return l;
            }
        }
        return StatusLabel::Standing;  // unreachable
    }

    std::optional<StatusLabel> blurred() const { return blurred_; }
    int window() const { return window_; }

    // Share of the current vote window that says Fallen.
    double fallenFraction() const {
        if (labels_.empty()) return 0.0;
        int n = 0;
        for (StatusLabel l : labels_)
            if (l == StatusLabel::Fallen) ++n;
        return static_cast<double>(n) / static_cast<double>(labels_.size());
    }

private:
    int window_;
    std::deque<StatusLabel> labels_;
    std::optional<StatusLabel> blurred_;
};

// Blur plus edge detection: fires exactly once per transition into Fallen.
class StatusTracker {
public:
    explicit StatusTracker(const StatusConfig& cfg) : cfg_(cfg), blur_(cfg.blur_window) {}

    struct Update {
        StatusLabel instant = StatusLabel::Standing;
        StatusLabel blurred = StatusLabel::Standing;
        bool fall_edge = false;
        double fallen_fraction = 0.0;  // vote share behind a Fallen verdict
    };

    Update push(const Cluster& c) {
        Update u;
        u.instant = classifyStatus(c, cfg_);
        const std::optional<StatusLabel> before = blur_.blurred();
        u.blurred = blur_.push(u.instant);
        u.fall_edge = before.has_value() && *before != StatusLabel::Fallen &&
                      u.blurred == StatusLabel::Fallen;
        u.fallen_fraction = blur_.fallenFraction();
        return u;
    }

    std::optional<StatusLabel> blurred() const { return blur_.blurred(); }

private:
    StatusConfig cfg_;
    StatusBlur blur_;
};

// ---- posture after a fall ------------------------------------------------------

struct PostureReport {
    PostureLabel label = PostureLabel::LyingFaceUp;
    double dominant_height = 0.0;  // m, modal z-histogram bin center
    double footprint_area = 0.0;   // m^2, convex hull of the x-y projection
    int point_count = 0;
    double span_seconds = 0.0;
};

// Monotone-chain convex hull of the x-y projection; returns vertices in
// counter-clockwise order. Fewer than three distinct points yield an empty hull.
inline std::vector<Vec3> convexHullXY(std::vector<Vec3> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec3& a, const Vec3& b) {
                              return a.x == b.x && a.y == b.y;
                          }),
              pts.end());
    const size_t n = pts.size();
    if (n < 3) return {};
    auto cross = [](const Vec3& o, const Vec3& a, const Vec3& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<Vec3> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

inline double polygonAreaXY(const std::vector<Vec3>& poly) {
    if (poly.size() < 3) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        const Vec3& a = poly[i];
        const Vec3& b = poly[(i + 1) % poly.size()];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * std::abs(s);
}

// Classifies how a fallen person ended up, from points accumulated while the
// blurred status stayed Fallen. Dominant height decides the band; when several
// histogram bins tie across bands the footprint area breaks the tie (face-up
// bodies show the largest footprint, seated-on-ground the smallest).
inline PostureReport estimatePosture(const std::vector<Vec3>& points,
                                     double span_seconds, const PostureConfig& cfg) {
    if (static_cast<int>(points.size()) < cfg.min_points)
        throw InsufficientDataError("posture needs at least " +
                                    std::to_string(cfg.min_points) + " points");
    if (span_seconds < cfg.min_span_seconds)
        throw InsufficientDataError("posture needs " +
                                    std::to_string(cfg.min_span_seconds) +
                                    " s of accumulation");

    std::vector<int> counts;
    for (const auto& p : points) {
        if (p.z < 0.0) continue;
        const auto bin = static_cast<size_t>(p.z / cfg.bin_height);
        if (counts.size() <= bin) counts.resize(bin + 1, 0);
        ++counts[bin];
    }
    if (counts.empty()) throw InsufficientDataError("no points above the floor");

    const int best = *std::max_element(counts.begin(), counts.end());
    std::vector<double> tied_centers;
    for (size_t i = 0; i < counts.size(); ++i)
        if (counts[i] == best) tied_centers.push_back((i + 0.5) * cfg.bin_height);

    auto bandOf = [&](double h) {
        if (h < cfg.low_band) return PostureLabel::LyingFaceUp;
        if (h < cfg.mid_band) return PostureLabel::LyingSideways;
        return PostureLabel::SittingOnGround;
    };

    PostureReport r;
    r.point_count = static_cast<int>(points.size());
    r.span_seconds = span_seconds;
    r.footprint_area = polygonAreaXY(convexHullXY(points));
    r.dominant_height = tied_centers.front();

    bool same_band = true;
    for (double h : tied_centers)
        if (bandOf(h) != bandOf(tied_centers.front())) same_band = false;
    if (same_band) {
        r.label = bandOf(r.dominant_height);
    } else if (r.footprint_area >= cfg.area_large) {
        r.label = PostureLabel::LyingFaceUp;
    } else if (r.footprint_area <= cfg.area_small) {
        r.label = PostureLabel::SittingOnGround;
    } else {
        r.label = PostureLabel::LyingSideways;
    }
    return r;
}

}  // namespace mmtrack
