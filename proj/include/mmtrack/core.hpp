#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mmtrack {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// ---- errors ----------------------------------------------------------------

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public Error { using Error::Error; };        // malformed input text
class ValidationError : public Error { using Error::Error; };   // well-formed but out of contract
class DomainError : public Error { using Error::Error; };       // argument outside physical domain
class AmbiguityError : public Error { using Error::Error; };    // phase outside unambiguous range
class CapacityError : public Error { using Error::Error; };     // fixed-size limit exceeded
class ScriptError : public Error { using Error::Error; };       // bad scenario script
class IoError : public Error { using Error::Error; };           // file system failure
class AlignmentError : public Error { using Error::Error; };    // tick clocks disagree
class InsufficientDataError : public Error { using Error::Error; };

// ---- basic sample types -----------------------------------------------------

struct RadarPoint {
    float x = 0.0f;       // m
    float y = 0.0f;       // m
    float z = 0.0f;       // m
    float energy = 0.0f;  // unitless intensity
    float speed = 0.0f;   // radial m/s, signed

    bool isFinite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
               std::isfinite(energy) && std::isfinite(speed);
    }
};

enum class StatusLabel : uint8_t {
    Standing = 0,
    Sitting  = 1,
    Fallen   = 2,
};

enum class PostureLabel : uint8_t {
    LyingFaceUp = 0,
    LyingSideways = 1,
    SittingOnGround = 2,
};

enum class TrackState : uint8_t {
    Tentative = 0,
    Confirmed = 1,
    Lost      = 2,
};

inline const char* toString(StatusLabel s) {
    switch (s) {
        case StatusLabel::Standing: return "standing";
        case StatusLabel::Sitting:  return "sitting";
        case StatusLabel::Fallen:   return "fallen";
    }
    return "?";
}

inline StatusLabel statusFromString(const std::string& s) {
    if (s == "standing") return StatusLabel::Standing;
    if (s == "sitting") return StatusLabel::Sitting;
    if (s == "fallen") return StatusLabel::Fallen;
    throw ParseError("unknown status label: " + s);
}

inline const char* toString(PostureLabel p) {
    switch (p) {
        case PostureLabel::LyingFaceUp: return "lying_face_up";
        case PostureLabel::LyingSideways: return "lying_sideways";
        case PostureLabel::SittingOnGround: return "sitting_on_ground";
    }
    return "?";
}

inline const char* toString(TrackState s) {
    switch (s) {
        case TrackState::Tentative: return "tentative";
        case TrackState::Confirmed: return "confirmed";
        case TrackState::Lost:      return "lost";
    }
    return "?";
}

// Asymmetric triangular membership: 0 at lo and hi, 1 at peak.
struct Triangle {
    double lo = 0.0;
    double peak = 0.0;
    double hi = 0.0;

    double eval(double x) const {
        if (x <= lo || x >= hi) return 0.0;
        if (x < peak) return (x - lo) / (peak - lo);
        if (x > peak) return (hi - x) / (hi - peak);
        return 1.0;
    }

    bool operator==(const Triangle&) const = default;
};

// ---- configuration ----------------------------------------------------------

struct FieldOfViewSpec {
    double azimuth_deg = 50.0;    // half-angle about boresight, horizontal
    double elevation_deg = 30.0;  // half-angle, vertical
    double max_range = 8.0;       // m

    bool operator==(const FieldOfViewSpec&) const = default;
};

struct RadarPose {
    uint32_t id = 0;
    double position[3] = {0.0, 0.0, 0.0};      // m, global frame
    double rotation_deg[3] = {0.0, 0.0, 0.0};  // about x, y, z; right-hand rule
    FieldOfViewSpec fov;

    bool operator==(const RadarPose& o) const {
        return id == o.id &&
               position[0] == o.position[0] && position[1] == o.position[1] &&
               position[2] == o.position[2] &&
               rotation_deg[0] == o.rotation_deg[0] &&
               rotation_deg[1] == o.rotation_deg[1] &&
               rotation_deg[2] == o.rotation_deg[2] &&
               fov == o.fov;
    }
};

struct RoomBounds {
    double x[2] = {-2.4, 1.6};  // m
    double y[2] = {0.0, 4.2};
    double z[2] = {0.0, 2.6};

    bool contains(double px, double py, double pz) const {
        return px >= x[0] && px <= x[1] && py >= y[0] && py <= y[1] &&
               pz >= z[0] && pz <= z[1];
    }

    bool operator==(const RoomBounds& o) const {
        return x[0] == o.x[0] && x[1] == o.x[1] && y[0] == o.y[0] &&
               y[1] == o.y[1] && z[0] == o.z[0] && z[1] == o.z[1];
    }
};

// One DBSCAN parameter set tied to an energy interval [lo, hi).
struct EnergyBand {
    double energy_lo = 0.0;
    double energy_hi = std::numeric_limits<double>::infinity();
    double epsilon = 0.5;   // m
    int min_points = 10;

    bool contains(double e) const { return e >= energy_lo && e < energy_hi; }

    bool operator==(const EnergyBand&) const = default;
};

struct TrackingConfig {
    // Weights for current-position / current-shape / expectation-position /
    // expectation-shape terms; must sum to 1.
    double coefficients[4] = {0.3, 0.3, 0.2, 0.2};
    double z_cutoff = 3.0;              // Z-score beyond which a pairing is vetoed
    double sigma_floor_position = 0.1;  // m, keeps the veto usable for static bins
    double sigma_floor_shape = 0.1;     // m
    double neighbor_radius = 0.5;       // m, clusters this close to a winner are absorbed
    int confirm_ticks = 5;              // consecutive assignments before Confirmed
    int tentative_max_misses = 3;
    double timeout_seconds = 3.0;       // Confirmed -> Lost without assignments
    // A bin that misses assignments coasts with growing match tolerance: its
    // sigmas scale by 1 + rate * missed_ticks, capped. This lets a body whose
    // shape changes faster than the veto allows (a collapse) be re-acquired
    // once it settles, while the cap keeps far-away clusters vetoed.
    double coast_sigma_rate = 0.5;      // per missed tick; 0 disables coasting
    double coast_sigma_max = 3.0;       // largest sigma scale while coasting
    Triangle centroid_height{0.1, 0.9, 1.3};  // m, plausible human centroid
    Triangle box_height{0.5, 1.5, 2.5};       // m, plausible bounding-box height

    bool operator==(const TrackingConfig& o) const {
        return coefficients[0] == o.coefficients[0] &&
               coefficients[1] == o.coefficients[1] &&
               coefficients[2] == o.coefficients[2] &&
               coefficients[3] == o.coefficients[3] &&
               z_cutoff == o.z_cutoff &&
               sigma_floor_position == o.sigma_floor_position &&
               sigma_floor_shape == o.sigma_floor_shape &&
               neighbor_radius == o.neighbor_radius &&
               confirm_ticks == o.confirm_ticks &&
               tentative_max_misses == o.tentative_max_misses &&
               timeout_seconds == o.timeout_seconds &&
               coast_sigma_rate == o.coast_sigma_rate &&
               coast_sigma_max == o.coast_sigma_max &&
               centroid_height == o.centroid_height && box_height == o.box_height;
    }
};

struct PostureConfig {
    double bin_height = 0.1;        // m, z-histogram resolution
    double low_band = 0.35;         // m, below: lying face up
    double mid_band = 0.75;         // m, below: lying sideways; above: sitting up
    int min_points = 50;
    double min_span_seconds = 30.0; // accumulation before a report is allowed
    double area_large = 0.6;        // m^2, footprint tie-break thresholds
    double area_small = 0.35;

    bool operator==(const PostureConfig&) const = default;
};

struct StatusConfig {
    double coefficients[2] = {0.7, 0.3};  // position weight, shape weight; sum 1
    int blur_window = 20;                 // ticks of modal smoothing
    double portrait_standing = 1.0;       // m, expected cloud centroid height
    double portrait_sitting = 0.6;
    double portrait_fallen = 0.2;
    double height_halfwidth = 0.45;       // m, triangle half-width around portraits
    double aspect_tall = 1.2;             // box z-extent / max horizontal extent
    double aspect_flat = 0.8;
    PostureConfig posture;
    std::string webhook_url;              // empty: webhook sink disabled

    bool operator==(const StatusConfig& o) const {
        return coefficients[0] == o.coefficients[0] &&
               coefficients[1] == o.coefficients[1] &&
               blur_window == o.blur_window &&
               portrait_standing == o.portrait_standing &&
               portrait_sitting == o.portrait_sitting &&
               portrait_fallen == o.portrait_fallen &&
               height_halfwidth == o.height_halfwidth &&
               aspect_tall == o.aspect_tall && aspect_flat == o.aspect_flat &&
               posture == o.posture && webhook_url == o.webhook_url;
    }
};

struct SyncConfig {
    double window_seconds = 0.05;  // merge window length
    int group_windows = 10;        // windows per frame group
    int grace_windows = 2;         // live-mode stall allowance before a stream is parked
    int inbox_capacity = 4096;     // per-radar producer inbox, drop-oldest on overflow

    bool operator==(const SyncConfig&) const = default;
};

struct FpsConfig {
    int working = 20;
    int standby = 1;                     // must divide working
    double standby_delay_seconds = 30.0; // quiet time before entering Standby

    bool operator==(const FpsConfig&) const = default;
};

struct BackgroundConfig {
    double voxel_edge = 0.2;          // m
    double persistence_ratio = 0.9;   // fraction of ticks a voxel must be noisy
    double persistence_seconds = 15.0;
    double decay_seconds = 60.0;      // unseen this long: voxel unflagged
    double min_energy = 30.0;         // BES energy floor
    double speed_band[2] = {0.0, 8.0};  // m/s, accepted |radial speed|
    // Smallest cluster accepted as a mover. Anything below is residual clutter
    // too dense for the noise list, fed back into the grid so it gets learned.
    int min_cluster_points = 30;

    bool operator==(const BackgroundConfig& o) const {
        return voxel_edge == o.voxel_edge &&
               persistence_ratio == o.persistence_ratio &&
               persistence_seconds == o.persistence_seconds &&
               decay_seconds == o.decay_seconds && min_energy == o.min_energy &&
               speed_band[0] == o.speed_band[0] && speed_band[1] == o.speed_band[1] &&
               min_cluster_points == o.min_cluster_points;
    }
};

struct PipelineConfig {
    std::vector<RadarPose> radars;
    RoomBounds room;
    std::vector<EnergyBand> bands;  // ascending by energy_lo, disjoint, covers [0, inf)
    TrackingConfig tracking;
    StatusConfig status;
    SyncConfig sync;
    FpsConfig fps;
    BackgroundConfig background;

    PipelineConfig() {
        RadarPose r1;
        r1.id = 1;
        r1.position[0] = 0.0; r1.position[1] = 0.0; r1.position[2] = 1.0;

        RadarPose r2;
        r2.id = 2;
        r2.position[0] = 1.6; r2.position[1] = 2.1; r2.position[2] = 2.6;
        r2.rotation_deg[0] = -55.0; r2.rotation_deg[1] = 0.0; r2.rotation_deg[2] = 90.0;

        RadarPose r3;
        r3.id = 3;
        r3.position[0] = 0.0; r3.position[1] = 2.1; r3.position[2] = 2.6;
        r3.rotation_deg[0] = -90.0;

        radars = {r1, r2, r3};

        bands = {
            {0.0, 200.0, 0.5, 10},
            {200.0, 300.0, 0.7, 3},
            {300.0, 400.0, 1.0, 2},
            {400.0, std::numeric_limits<double>::infinity(), 1.0, 2},
        };
    }

    // Derived tick quantities. One pipeline tick is one merged window.
    int standbyStride() const { return fps.working / fps.standby; }
    int timeoutTicks() const {
        return static_cast<int>(std::lround(tracking.timeout_seconds * fps.working));
    }
    int standbyDelayTicks() const {
        return static_cast<int>(std::lround(fps.standby_delay_seconds * fps.working));
    }
    int persistenceTicks() const {
        return static_cast<int>(std::lround(background.persistence_ratio *
                                            background.persistence_seconds * fps.working));
    }
    int decayTicks() const {
        return static_cast<int>(std::lround(background.decay_seconds * fps.working));
    }

    bool operator==(const PipelineConfig&) const = default;
};

// ---- config JSON ------------------------------------------------------------

using json = nlohmann::json;

inline void to_json(json& j, const FieldOfViewSpec& f) {
    j = json{{"azimuth_deg", f.azimuth_deg},
             {"elevation_deg", f.elevation_deg},
             {"max_range", f.max_range}};
}

inline void from_json(const json& j, FieldOfViewSpec& f) {
    f.azimuth_deg = j.value("azimuth_deg", f.azimuth_deg);
    f.elevation_deg = j.value("elevation_deg", f.elevation_deg);
    f.max_range = j.value("max_range", f.max_range);
}

inline void to_json(json& j, const RadarPose& r) {
    j = json{{"id", r.id},
             {"position", {r.position[0], r.position[1], r.position[2]}},
             {"rotation_deg", {r.rotation_deg[0], r.rotation_deg[1], r.rotation_deg[2]}},
             {"fov", r.fov}};
}

inline void from_json(const json& j, RadarPose& r) {
    r.id = j.at("id").get<uint32_t>();
    const auto& p = j.at("position");
    for (int i = 0; i < 3; ++i) r.position[i] = p.at(i).get<double>();
    if (j.contains("rotation_deg")) {
        const auto& q = j.at("rotation_deg");
        for (int i = 0; i < 3; ++i) r.rotation_deg[i] = q.at(i).get<double>();
    }
    if (j.contains("fov")) r.fov = j.at("fov").get<FieldOfViewSpec>();
}

inline void to_json(json& j, const RoomBounds& r) {
    j = json{{"x", {r.x[0], r.x[1]}}, {"y", {r.y[0], r.y[1]}}, {"z", {r.z[0], r.z[1]}}};
}

inline void from_json(const json& j, RoomBounds& r) {
    auto axis = [&](const char* k, double* out) {
        const auto& a = j.at(k);
        out[0] = a.at(0).get<double>();
        out[1] = a.at(1).get<double>();
    };
    axis("x", r.x);
    axis("y", r.y);
    axis("z", r.z);
}

inline void to_json(json& j, const EnergyBand& b) {
    json hi;
    if (std::isinf(b.energy_hi)) hi = nullptr;  // open upper bound
    else hi = b.energy_hi;
    j = json{{"energy", {b.energy_lo, hi}},
             {"epsilon", b.epsilon},
             {"min_points", b.min_points}};
}

inline void from_json(const json& j, EnergyBand& b) {
    const auto& e = j.at("energy");
    b.energy_lo = e.at(0).get<double>();
    b.energy_hi = e.at(1).is_null() ? std::numeric_limits<double>::infinity()
                                    : e.at(1).get<double>();
    b.epsilon = j.at("epsilon").get<double>();
    b.min_points = j.at("min_points").get<int>();
}

inline void to_json(json& j, const Triangle& t) { j = json{t.lo, t.peak, t.hi}; }

inline void from_json(const json& j, Triangle& t) {
    t.lo = j.at(0).get<double>();
    t.peak = j.at(1).get<double>();
    t.hi = j.at(2).get<double>();
}

inline void to_json(json& j, const TrackingConfig& t) {
    j = json{{"coefficients", {t.coefficients[0], t.coefficients[1],
                               t.coefficients[2], t.coefficients[3]}},
             {"z_cutoff", t.z_cutoff},
             {"sigma_floor_position", t.sigma_floor_position},
             {"sigma_floor_shape", t.sigma_floor_shape},
             {"neighbor_radius", t.neighbor_radius},
             {"confirm_ticks", t.confirm_ticks},
             {"tentative_max_misses", t.tentative_max_misses},
             {"timeout_seconds", t.timeout_seconds},
             {"coast_sigma_rate", t.coast_sigma_rate},
             {"coast_sigma_max", t.coast_sigma_max},
             {"centroid_height", t.centroid_height},
             {"box_height", t.box_height}};
}

inline void from_json(const json& j, TrackingConfig& t) {
    TrackingConfig d;
    const auto& c = j.at("coefficients");
    for (int i = 0; i < 4; ++i) t.coefficients[i] = c.at(i).get<double>();
    t.z_cutoff = j.value("z_cutoff", d.z_cutoff);
    t.sigma_floor_position = j.value("sigma_floor_position", d.sigma_floor_position);
    t.sigma_floor_shape = j.value("sigma_floor_shape", d.sigma_floor_shape);
    t.neighbor_radius = j.value("neighbor_radius", d.neighbor_radius);
    t.confirm_ticks = j.value("confirm_ticks", d.confirm_ticks);
    t.tentative_max_misses = j.value("tentative_max_misses", d.tentative_max_misses);
    t.timeout_seconds = j.value("timeout_seconds", d.timeout_seconds);
    t.coast_sigma_rate = j.value("coast_sigma_rate", d.coast_sigma_rate);
    t.coast_sigma_max = j.value("coast_sigma_max", d.coast_sigma_max);
    if (j.contains("centroid_height")) t.centroid_height = j.at("centroid_height").get<Triangle>();
    if (j.contains("box_height")) t.box_height = j.at("box_height").get<Triangle>();
}

inline void to_json(json& j, const PostureConfig& p) {
    j = json{{"bin_height", p.bin_height},
             {"low_band", p.low_band},
             {"mid_band", p.mid_band},
             {"min_points", p.min_points},
             {"min_span_seconds", p.min_span_seconds},
             {"area_large", p.area_large},
             {"area_small", p.area_small}};
}

inline void from_json(const json& j, PostureConfig& p) {
    PostureConfig d;
    p.bin_height = j.value("bin_height", d.bin_height);
    p.low_band = j.value("low_band", d.low_band);
    p.mid_band = j.value("mid_band", d.mid_band);
    p.min_points = j.value("min_points", d.min_points);
    p.min_span_seconds = j.value("min_span_seconds", d.min_span_seconds);
    p.area_large = j.value("area_large", d.area_large);
    p.area_small = j.value("area_small", d.area_small);
}

inline void to_json(json& j, const StatusConfig& s) {
    j = json{{"coefficients", {s.coefficients[0], s.coefficients[1]}},
             {"blur_window", s.blur_window},
             {"portraits", {{"standing", s.portrait_standing},
                            {"sitting", s.portrait_sitting},
                            {"fallen", s.portrait_fallen}}},
             {"height_halfwidth", s.height_halfwidth},
             {"aspect_tall", s.aspect_tall},
             {"aspect_flat", s.aspect_flat},
             {"posture", s.posture},
             {"webhook_url", s.webhook_url}};
}

inline void from_json(const json& j, StatusConfig& s) {
    StatusConfig d;
    const auto& c = j.at("coefficients");
    s.coefficients[0] = c.at(0).get<double>();
    s.coefficients[1] = c.at(1).get<double>();
    s.blur_window = j.value("blur_window", d.blur_window);
    if (j.contains("portraits")) {
        const auto& p = j.at("portraits");
        s.portrait_standing = p.value("standing", d.portrait_standing);
        s.portrait_sitting = p.value("sitting", d.portrait_sitting);
        s.portrait_fallen = p.value("fallen", d.portrait_fallen);
    }
    s.height_halfwidth = j.value("height_halfwidth", d.height_halfwidth);
    s.aspect_tall = j.value("aspect_tall", d.aspect_tall);
    s.aspect_flat = j.value("aspect_flat", d.aspect_flat);
    if (j.contains("posture")) s.posture = j.at("posture").get<PostureConfig>();
    s.webhook_url = j.value("webhook_url", d.webhook_url);
}

inline void to_json(json& j, const SyncConfig& s) {
    j = json{{"window_seconds", s.window_seconds},
             {"group_windows", s.group_windows},
             {"grace_windows", s.grace_windows},
             {"inbox_capacity", s.inbox_capacity}};
}

inline void from_json(const json& j, SyncConfig& s) {
    SyncConfig d;
    s.window_seconds = j.value("window_seconds", d.window_seconds);
    s.group_windows = j.value("group_windows", d.group_windows);
    s.grace_windows = j.value("grace_windows", d.grace_windows);
    s.inbox_capacity = j.value("inbox_capacity", d.inbox_capacity);
}

inline void to_json(json& j, const FpsConfig& f) {
    j = json{{"working", f.working},
             {"standby", f.standby},
             {"standby_delay_seconds", f.standby_delay_seconds}};
}

inline void from_json(const json& j, FpsConfig& f) {
    FpsConfig d;
    f.working = j.value("working", d.working);
    f.standby = j.value("standby", d.standby);
    f.standby_delay_seconds = j.value("standby_delay_seconds", d.standby_delay_seconds);
}

inline void to_json(json& j, const BackgroundConfig& b) {
    j = json{{"voxel_edge", b.voxel_edge},
             {"persistence_ratio", b.persistence_ratio},
             {"persistence_seconds", b.persistence_seconds},
             {"decay_seconds", b.decay_seconds},
             {"min_energy", b.min_energy},
             {"speed_band", {b.speed_band[0], b.speed_band[1]}},
             {"min_cluster_points", b.min_cluster_points}};
}

inline void from_json(const json& j, BackgroundConfig& b) {
    BackgroundConfig d;
    b.voxel_edge = j.value("voxel_edge", d.voxel_edge);
    b.persistence_ratio = j.value("persistence_ratio", d.persistence_ratio);
    b.persistence_seconds = j.value("persistence_seconds", d.persistence_seconds);
    b.decay_seconds = j.value("decay_seconds", d.decay_seconds);
    b.min_energy = j.value("min_energy", d.min_energy);
    b.min_cluster_points = j.value("min_cluster_points", d.min_cluster_points);
    if (j.contains("speed_band")) {
        const auto& s = j.at("speed_band");
        b.speed_band[0] = s.at(0).get<double>();
        b.speed_band[1] = s.at(1).get<double>();
    }
}

inline void to_json(json& j, const PipelineConfig& c) {
    j = json{{"radars", c.radars},   {"room", c.room},
             {"bands", c.bands},     {"tracking", c.tracking},
             {"status", c.status},   {"sync", c.sync},
             {"fps", c.fps},         {"background", c.background}};
}

inline void from_json(const json& j, PipelineConfig& c) {
    if (j.contains("radars")) c.radars = j.at("radars").get<std::vector<RadarPose>>();
    if (j.contains("room")) c.room = j.at("room").get<RoomBounds>();
    if (j.contains("bands")) c.bands = j.at("bands").get<std::vector<EnergyBand>>();
    if (j.contains("tracking")) c.tracking = j.at("tracking").get<TrackingConfig>();
    if (j.contains("status")) c.status = j.at("status").get<StatusConfig>();
    if (j.contains("sync")) c.sync = j.at("sync").get<SyncConfig>();
    if (j.contains("fps")) c.fps = j.at("fps").get<FpsConfig>();
    if (j.contains("background")) c.background = j.at("background").get<BackgroundConfig>();
}

// ---- validation -------------------------------------------------------------

namespace detail {

inline void require(bool ok, const std::string& field, const std::string& why) {
    if (!ok) throw ValidationError(field + ": " + why);
}

}  // namespace detail

inline void validate(const PipelineConfig& c) {
    using detail::require;

    require(!c.radars.empty(), "radars", "at least one radar is required");
    for (size_t i = 0; i < c.radars.size(); ++i) {
        const auto& r = c.radars[i];
        const std::string f = "radars[" + std::to_string(i) + "]";
        require(r.id > 0, f + ".id", "must be positive");
        for (size_t k = i + 1; k < c.radars.size(); ++k)
            require(c.radars[k].id != r.id, f + ".id", "duplicate radar id");
        for (int a = 0; a < 3; ++a) {
            require(std::isfinite(r.position[a]), f + ".position", "must be finite");
            require(r.rotation_deg[a] >= -180.0 && r.rotation_deg[a] <= 180.0,
                    f + ".rotation_deg", "must lie in [-180, 180]");
        }
        require(r.fov.azimuth_deg > 0.0 && r.fov.azimuth_deg <= 90.0,
                f + ".fov.azimuth_deg", "must lie in (0, 90]");
        require(r.fov.elevation_deg > 0.0 && r.fov.elevation_deg <= 90.0,
                f + ".fov.elevation_deg", "must lie in (0, 90]");
        require(r.fov.max_range > 0.0, f + ".fov.max_range", "must be positive");
    }

    require(c.room.x[0] < c.room.x[1], "room.x", "lower bound must be below upper");
    require(c.room.y[0] < c.room.y[1], "room.y", "lower bound must be below upper");
    require(c.room.z[0] < c.room.z[1], "room.z", "lower bound must be below upper");
    require(c.room.z[0] >= 0.0, "room.z", "floor must be at or above 0");

    require(!c.bands.empty(), "bands", "at least one band is required");
    for (size_t i = 0; i < c.bands.size(); ++i) {
        const auto& b = c.bands[i];
        const std::string f = "bands[" + std::to_string(i) + "]";
        require(b.energy_lo >= 0.0, f + ".energy", "lower bound must be >= 0");
        require(b.energy_lo < b.energy_hi, f + ".energy", "bounds must be ordered");
        require(b.epsilon > 0.0, f + ".epsilon", "must be positive");
        require(b.min_points >= 1, f + ".min_points", "must be >= 1");
        if (i > 0) {
            const auto& prev = c.bands[i - 1];
            require(b.energy_lo >= prev.energy_hi, f + ".energy",
                    "bands must be disjoint and ascending");
            require(b.energy_lo == prev.energy_hi, f + ".energy",
                    "bands must cover [0, inf) without gaps");
            // Lower-energy bands must be at least as strict; this is what makes
            // skipping an empty band's pass a no-op.
            require(b.epsilon >= prev.epsilon, f + ".epsilon",
                    "must not decrease with energy");
            require(b.min_points <= prev.min_points, f + ".min_points",
                    "must not increase with energy");
        }
    }
    require(c.bands.front().energy_lo == 0.0, "bands[0].energy", "coverage must start at 0");
    require(std::isinf(c.bands.back().energy_hi), "bands.back().energy",
            "coverage must extend to infinity (upper bound null)");

    {
        double sum = 0.0;
        for (int i = 0; i < 4; ++i) {
            require(c.tracking.coefficients[i] >= 0.0, "tracking.coefficients",
                    "must be non-negative");
            sum += c.tracking.coefficients[i];
        }
        require(std::abs(sum - 1.0) <= 1e-9, "tracking.coefficients",
                "must sum to 1 within 1e-9");
    }
    require(c.tracking.z_cutoff > 0.0, "tracking.z_cutoff", "must be positive");
    require(c.tracking.sigma_floor_position > 0.0, "tracking.sigma_floor_position",
            "must be positive");
    require(c.tracking.sigma_floor_shape > 0.0, "tracking.sigma_floor_shape",
            "must be positive");
    require(c.tracking.neighbor_radius >= 0.0, "tracking.neighbor_radius",
            "must be non-negative");
    require(c.tracking.confirm_ticks >= 1, "tracking.confirm_ticks", "must be >= 1");
    require(c.tracking.tentative_max_misses >= 1, "tracking.tentative_max_misses",
            "must be >= 1");
    require(c.tracking.timeout_seconds > 0.0, "tracking.timeout_seconds",
            "must be positive");
    require(c.tracking.coast_sigma_rate >= 0.0, "tracking.coast_sigma_rate",
            "must be non-negative");
    require(c.tracking.coast_sigma_max >= 1.0, "tracking.coast_sigma_max",
            "must be >= 1");
    auto checkTriangle = [](const Triangle& t, const std::string& f) {
        detail::require(t.lo < t.peak && t.peak < t.hi, f,
                        "must be ordered lo < peak < hi");
    };
    checkTriangle(c.tracking.centroid_height, "tracking.centroid_height");
    checkTriangle(c.tracking.box_height, "tracking.box_height");

    {
        const double sum = c.status.coefficients[0] + c.status.coefficients[1];
        require(c.status.coefficients[0] >= 0.0 && c.status.coefficients[1] >= 0.0,
                "status.coefficients", "must be non-negative");
        require(std::abs(sum - 1.0) <= 1e-9, "status.coefficients",
                "must sum to 1 within 1e-9");
    }
    require(c.status.blur_window >= 1, "status.blur_window", "must be >= 1");
    require(c.status.portrait_fallen >= 0.0 &&
                c.status.portrait_fallen < c.status.portrait_sitting &&
                c.status.portrait_sitting < c.status.portrait_standing,
            "status.portraits", "must be ordered fallen < sitting < standing");
    require(c.status.height_halfwidth > 0.0, "status.height_halfwidth",
            "must be positive");
    require(c.status.aspect_flat > 0.0 && c.status.aspect_flat < c.status.aspect_tall,
            "status.aspect_flat", "must be positive and below aspect_tall");
    require(c.status.posture.bin_height > 0.0, "status.posture.bin_height",
            "must be positive");
    require(c.status.posture.low_band > 0.0 &&
                c.status.posture.low_band < c.status.posture.mid_band,
            "status.posture.low_band", "must be positive and below mid_band");
    require(c.status.posture.min_points >= 3, "status.posture.min_points",
            "must be >= 3");
    require(c.status.posture.min_span_seconds > 0.0,
            "status.posture.min_span_seconds", "must be positive");
    require(c.status.posture.area_small > 0.0 &&
                c.status.posture.area_small < c.status.posture.area_large,
            "status.posture.area_small", "must be positive and below area_large");

    require(c.sync.window_seconds > 0.0, "sync.window_seconds", "must be positive");
    require(c.sync.group_windows >= 1, "sync.group_windows", "must be >= 1");
    require(c.sync.grace_windows >= 0, "sync.grace_windows", "must be >= 0");
    require(c.sync.inbox_capacity >= 1, "sync.inbox_capacity", "must be >= 1");

    require(c.fps.working >= 1, "fps.working", "must be >= 1");
    require(c.fps.standby >= 1, "fps.standby", "must be >= 1");
    require(c.fps.standby <= c.fps.working, "fps.standby",
            "must not exceed fps.working");
    require(c.fps.working % c.fps.standby == 0, "fps.standby",
            "must divide fps.working evenly");
    require(std::abs(c.fps.working * c.sync.window_seconds - 1.0) <= 1e-6,
            "fps.working", "must equal 1 / sync.window_seconds");
    require(c.fps.standby_delay_seconds >= 0.0, "fps.standby_delay_seconds",
            "must be non-negative");

    require(c.background.voxel_edge > 0.0, "background.voxel_edge", "must be positive");
    require(c.background.persistence_ratio > 0.0 && c.background.persistence_ratio <= 1.0,
            "background.persistence_ratio", "must lie in (0, 1]");
    require(c.background.persistence_seconds > 0.0, "background.persistence_seconds",
            "must be positive");
    require(c.background.decay_seconds > 0.0, "background.decay_seconds",
            "must be positive");
    require(c.background.min_energy >= 0.0, "background.min_energy",
            "must be non-negative");
    require(c.background.speed_band[0] >= 0.0 &&
                c.background.speed_band[0] < c.background.speed_band[1],
            "background.speed_band", "must satisfy 0 <= lo < hi");
    require(c.background.min_cluster_points >= 0, "background.min_cluster_points",
            "must be non-negative");
}

// ---- load / save ------------------------------------------------------------

inline PipelineConfig parseConfig(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    PipelineConfig c;
    try {
        c = j.get<PipelineConfig>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("config structure mismatch: ") + e.what());
    }
    validate(c);
    return c;
}

inline PipelineConfig loadConfig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parseConfig(ss.str());
}

inline std::string dumpConfig(const PipelineConfig& c) {
    return json(c).dump(2) + "\n";
}

inline void saveConfig(const PipelineConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config file: " + path);
    out << dumpConfig(c);
}

}  // namespace mmtrack
