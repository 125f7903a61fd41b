#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmtrack/core.hpp"
#include "mmtrack/geometry.hpp"
#include "mmtrack/packet.hpp"
#include "mmtrack/radar_math.hpp"

namespace mmtrack {

struct BodySpec {
    double height = 1.7;
    double shoulder = 0.45;
};

struct FallSpec {
    double time = 0.0;      // seconds from scenario start
    double duration = 1.0;  // collapse takes this long; Fallen thereafter
};

struct ActorScript {
    std::string id;
    BodySpec body;
    std::vector<std::array<double, 3>> waypoints;            // {t, x, y}
    std::vector<std::pair<double, StatusLabel>> status;      // {t, label}
    std::optional<FallSpec> fall;
};

struct Scenario {
    double duration_seconds = 60.0;
    uint64_t seed = 1;
    int clutter_sources = 0;
    double drop_probability = 0.0;
    double corruption_probability = 0.0;
    std::vector<ActorScript> actors;
    std::optional<std::vector<RadarPose>> radars;  // overrides the pipeline config
    std::optional<RoomBounds> room;
};

namespace detail {

inline std::string fmtTime(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", t);
    return buf;
}

}  // namespace detail

inline Scenario parseScenario(const json& j) {
    Scenario s;
    try {
        s.duration_seconds = j.at("duration_seconds").get<double>();
        if (j.contains("seed")) s.seed = j.at("seed").get<uint64_t>();
        if (j.contains("clutter_sources")) s.clutter_sources = j.at("clutter_sources").get<int>();
        if (j.contains("drop_probability")) s.drop_probability = j.at("drop_probability").get<double>();
        if (j.contains("corruption_probability"))
            s.corruption_probability = j.at("corruption_probability").get<double>();
        if (j.contains("radars")) s.radars = j.at("radars").get<std::vector<RadarPose>>();
        if (j.contains("room")) s.room = j.at("room").get<RoomBounds>();
        for (const auto& ja : j.value("actors", json::array())) {
            ActorScript a;
            a.id = ja.at("id").get<std::string>();
            if (ja.contains("body")) {
                a.body.height = ja.at("body").value("height", 1.7);
                a.body.shoulder = ja.at("body").value("shoulder", 0.45);
            }
            for (const auto& w : ja.at("waypoints"))
                a.waypoints.push_back({w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()});
            for (const auto& st : ja.value("status", json::array()))
                a.status.emplace_back(st.at(0).get<double>(),
                                      statusFromString(st.at(1).get<std::string>()));
            if (ja.contains("fall")) {
                FallSpec f;
                f.time = ja.at("fall").at("time").get<double>();
                f.duration = ja.at("fall").value("duration", 1.0);
                a.fall = f;
            }
            s.actors.push_back(std::move(a));
        }
    } catch (const json::exception& e) {
        throw ScriptError(std::string("scenario parse: ") + e.what());
    } catch (const ParseError& e) {
        throw ScriptError(std::string("scenario parse: ") + e.what());
    }
    return s;
}

inline void validate(const Scenario& s, const RoomBounds& room) {
    if (!(s.duration_seconds > 0))
        throw ScriptError("scenario: duration_seconds must be positive");
    if (s.clutter_sources < 0) throw ScriptError("scenario: clutter_sources must be >= 0");
    if (s.drop_probability < 0 || s.drop_probability >= 1)
        throw ScriptError("scenario: drop_probability must be in [0, 1)");
    if (s.corruption_probability < 0 || s.corruption_probability >= 1)
        throw ScriptError("scenario: corruption_probability must be in [0, 1)");
    std::vector<std::string> seen;
    for (const auto& a : s.actors) {
        if (a.id.empty()) throw ScriptError("scenario: actor with empty id");
        if (std::find(seen.begin(), seen.end(), a.id) != seen.end())
            throw ScriptError("actor '" + a.id + "': duplicate id");
        seen.push_back(a.id);
        if (!(a.body.height > 0.3) || !(a.body.shoulder > 0.05))
            throw ScriptError("actor '" + a.id + "': implausible body dimensions");
        if (a.waypoints.empty())
            throw ScriptError("actor '" + a.id + "': needs at least one waypoint");
        double prev = -1.0;
        for (const auto& w : a.waypoints) {
            if (w[0] < 0 || w[0] <= prev)
                throw ScriptError("actor '" + a.id + "': waypoint times must be increasing at t=" +
                                  detail::fmtTime(w[0]));
            prev = w[0];
            if (!room.contains(w[1], w[2], room.z[0]))
                throw ScriptError("actor '" + a.id + "': waypoint outside room at t=" +
                                  detail::fmtTime(w[0]));
        }
        prev = -1.0;
        for (const auto& st : a.status) {
            if (st.first < 0 || st.first < prev)
                throw ScriptError("actor '" + a.id + "': status times must be sorted at t=" +
                                  detail::fmtTime(st.first));
            prev = st.first;
        }
        if (a.fall) {
            if (a.fall->time < 0 || a.fall->time > s.duration_seconds)
                throw ScriptError("actor '" + a.id + "': fall time " +
                                  detail::fmtTime(a.fall->time) + " outside scenario");
            if (!(a.fall->duration > 0))
                throw ScriptError("actor '" + a.id + "': fall duration must be positive");
        }
    }
}

inline Scenario loadScenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ScriptError(std::string("scenario parse: ") + e.what());
    }
    return parseScenario(j);
}

// Instantaneous kinematic state of a scripted actor.
struct ActorSample {
    Vec3 position;        // path position, z = 0
    Vec3 velocity;        // horizontal path velocity
    Vec3 heading{1, 0, 0};
    StatusLabel status = StatusLabel::Standing;  // label before any fall applies
    bool fallen = false;                         // fall has started
    double fall_fraction = 0.0;                  // 0 upright .. 1 prone
};

inline ActorSample sampleActor(const ActorScript& a, double t) {
    ActorSample out;
    const auto& wp = a.waypoints;
    if (t <= wp.front()[0]) {
        out.position = {wp.front()[1], wp.front()[2], 0};
    } else if (t >= wp.back()[0]) {
        out.position = {wp.back()[1], wp.back()[2], 0};
    } else {
        for (size_t i = 1; i < wp.size(); ++i) {
            if (t <= wp[i][0]) {
                const double f = (t - wp[i - 1][0]) / (wp[i][0] - wp[i - 1][0]);
                out.position = {wp[i - 1][1] + f * (wp[i][1] - wp[i - 1][1]),
                                wp[i - 1][2] + f * (wp[i][2] - wp[i - 1][2]), 0};
                out.velocity = {(wp[i][1] - wp[i - 1][1]) / (wp[i][0] - wp[i - 1][0]),
                                (wp[i][2] - wp[i - 1][2]) / (wp[i][0] - wp[i - 1][0]), 0};
                break;
            }
        }
    }
    // Heading: direction of the most recent movement segment at or before t.
    for (size_t i = 1; i < wp.size(); ++i) {
        if (wp[i - 1][0] > t) break;
        Vec3 d{wp[i][1] - wp[i - 1][1], wp[i][2] - wp[i - 1][2], 0};
        if (d.norm() > 1e-9) out.heading = d * (1.0 / d.norm());
    }
    for (const auto& st : a.status)
        if (st.first <= t) out.status = st.second;
    if (a.fall && t >= a.fall->time) {
        out.fallen = true;
        out.fall_fraction = std::min(1.0, (t - a.fall->time) / a.fall->duration);
    }
    return out;
}

namespace detail {

struct BodyRegion {
    double height;       // cloud centre above floor, for a 1.7 m body
    double weight;       // share of the point budget
    double energy_mean;
    double energy_sigma;
};

inline const std::array<BodyRegion, 4>& standingRegions() {
    static const std::array<BodyRegion, 4> r{{{1.55, 0.15, 250, 40},
                                              {1.25, 0.35, 330, 35},
                                              {0.95, 0.25, 280, 40},
                                              {0.50, 0.25, 200, 50}}};
    return r;
}

// Seated shape: crown near 1.22 for a 1.7 m body on a chair, and the lower two
// regions are the thighs and shins, which project forward of the torso line.
inline const std::array<BodyRegion, 4>& sittingRegions() {
    static const std::array<BodyRegion, 4> r{{{1.22, 0.08, 250, 40},
                                              {0.92, 0.52, 330, 35},
                                              {0.55, 0.22, 280, 40},
                                              {0.22, 0.18, 200, 50}}};
    return r;
}

// Forward reach of a seated region: thighs project about 0.3 m, shins and feet
// about 0.6 m. Torso and head stay on the anchor line.
inline double seatedReach(const BodyRegion& region) {
    if (region.height > 0.7) return 0.0;
    return region.height <= 0.4 ? 0.60 : 0.30;
}

// A stationary body reflects mostly from the torso and with stronger returns.
inline const std::array<BodyRegion, 4>& idleRegions(StatusLabel status) {
    static const std::array<BodyRegion, 4> standing{{{1.55, 0.10, 250, 40},
                                                     {1.25, 0.60, 345, 25},
                                                     {0.95, 0.20, 300, 30},
                                                     {0.50, 0.10, 200, 50}}};
    static const std::array<BodyRegion, 4> sitting{{{1.22, 0.04, 250, 40},
                                                    {0.92, 0.62, 345, 25},
                                                    {0.55, 0.20, 300, 30},
                                                    {0.22, 0.14, 200, 50}}};
    return status == StatusLabel::Sitting ? sitting : standing;
}

}  // namespace detail

struct SimulationSummary {
    int64_t ticks = 0;
    uint64_t packets_written = 0;
    uint64_t points_written = 0;
    uint64_t packets_dropped = 0;
    uint64_t packets_corrupted = 0;
    uint64_t truth_rows = 0;
    std::vector<std::string> radar_files;
};

// Deterministic scenario renderer: one RNG, one fixed draw order, so a given
// (scenario, config) pair always produces byte-identical radar captures.
class Simulator {
public:
    Simulator(Scenario scenario, const PipelineConfig& config)
        : scenario_(std::move(scenario)),
          room_(scenario_.room.value_or(config.room)),
          radars_(scenario_.radars.value_or(config.radars)),
          window_us_(static_cast<uint64_t>(config.sync.window_seconds * 1e6)),
          range_step_(rangeResolution(ChirpParams{})),
          rng_(scenario_.seed) {
        validate(scenario_, room_);
        if (radars_.empty()) throw ValidationError("simulator: no radar poses");
        for (const auto& pose : radars_) transforms_.push_back(mountingTransform(pose));
        placeClutter();
    }

    SimulationSummary run(const std::string& out_dir) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        SimulationSummary sum;
        const int64_t ticks =
            static_cast<int64_t>(std::llround(scenario_.duration_seconds * 1e6 / window_us_));
        sum.ticks = ticks;

        std::vector<std::ofstream> outs;
        for (const auto& pose : radars_) {
            const std::string path = out_dir + "/radar" + std::to_string(pose.id) + ".mmr";
            outs.emplace_back(path, std::ios::binary | std::ios::trunc);
            if (!outs.back()) throw IoError("cannot open " + path);
            sum.radar_files.push_back(path);
        }
        std::ofstream truth(out_dir + "/truth.csv", std::ios::trunc);
        if (!truth) throw IoError("cannot open " + out_dir + "/truth.csv");
        truth << "tick,actor,x,y,z,status\n";

        std::vector<uint32_t> seq(radars_.size(), 0);
        std::vector<uint64_t> last_ts(radars_.size(), 0);

        for (int64_t tick = 0; tick < ticks; ++tick) {
            const double t = static_cast<double>(tick) * window_us_ * 1e-6;

            // Global clouds first, in actor order; per-radar work follows. The
            // draw order never depends on what a radar can see.
            std::vector<Vec3> cloud_pos;
            std::vector<float> cloud_energy;
            std::vector<Vec3> cloud_vel;
            for (const auto& actor : scenario_.actors) {
                const ActorSample s = sampleActor(actor, t);
                emitActorCloud(actor, s, cloud_pos, cloud_energy, cloud_vel);
                writeTruthRow(truth, tick, actor, s);
                ++sum.truth_rows;
            }
            for (size_t r = 0; r < radars_.size(); ++r) {
                FramePacket pkt;
                pkt.radar_id = radars_[r].id;
                pkt.seq = seq[r]++;
                uint64_t ts = tick * window_us_ + 3000 * static_cast<uint64_t>(r) +
                              std::uniform_int_distribution<uint64_t>(0, 1999)(rng_);
                if (ts <= last_ts[r]) ts = last_ts[r] + 1;
                last_ts[r] = ts;
                pkt.timestamp_us = ts;

                for (size_t i = 0; i < cloud_pos.size(); ++i)
                    appendVisible(r, cloud_pos[i], cloud_energy[i], cloud_vel[i], pkt.points);
                emitClutter(r, pkt.points);

                if (scenario_.drop_probability > 0 &&
                    std::bernoulli_distribution(scenario_.drop_probability)(rng_)) {
                    ++sum.packets_dropped;
                    continue;
                }
                std::vector<uint8_t> wire = encodePacket(pkt);
                if (scenario_.corruption_probability > 0 &&
                    std::bernoulli_distribution(scenario_.corruption_probability)(rng_)) {
                    corrupt(wire);
                    ++sum.packets_corrupted;
                }
                outs[r].write(reinterpret_cast<const char*>(wire.data()),
                              static_cast<std::streamsize>(wire.size()));
                ++sum.packets_written;
                sum.points_written += pkt.points.size();
            }
        }
        for (auto& o : outs)
            if (!o) throw IoError("radar capture write failed");
        return sum;
    }

    const std::vector<RadarPose>& radars() const { return radars_; }
    const RoomBounds& room() const { return room_; }

private:
    Scenario scenario_;
    RoomBounds room_;
    std::vector<RadarPose> radars_;
    std::vector<RigidTransform> transforms_;
    uint64_t window_us_;
    double range_step_;
    std::mt19937_64 rng_;
    std::vector<Vec3> clutter_;

    static constexpr int kMovingBudget = 25;
    static constexpr int kIdleBudget = 6;

    void placeClutter() {
        for (int i = 0; i < scenario_.clutter_sources; ++i) {
            std::uniform_real_distribution<double> ux(room_.x[0] + 0.3, room_.x[1] - 0.3);
            std::uniform_real_distribution<double> uy(room_.y[0] + 0.3, room_.y[1] - 0.3);
            std::uniform_real_distribution<double> uz(0.3, 0.5);
            clutter_.push_back({ux(rng_), uy(rng_), uz(rng_)});
        }
    }

    double gauss(double mean, double sigma) {
        return std::normal_distribution<double>(mean, sigma)(rng_);
    }

    // Seated low regions slide ahead of the anchor along the heading.
    double seatedForward(const ActorSample& s, const detail::BodyRegion& region,
                         double scale) {
        if (s.status != StatusLabel::Sitting) return 0.0;
        const double reach = detail::seatedReach(region);
        if (reach == 0.0) return 0.0;
        const double sigma = region.height <= 0.4 ? 0.15 : 0.10;
        return std::max(0.0, gauss(reach * scale, sigma));
    }

    void emitUprightPoint(const ActorScript& actor, const ActorSample& s,
                          const detail::BodyRegion& region, std::vector<Vec3>& pos,
                          std::vector<float>& energy) {
        const double scale = actor.body.height / 1.7;
        const double spread = actor.body.shoulder / 4.0;
        const double fwd = seatedForward(s, region, scale);
        pos.push_back({s.position.x + s.heading.x * fwd + gauss(0, spread),
                       s.position.y + s.heading.y * fwd + gauss(0, spread),
                       region.height * scale + gauss(0, 0.07)});
        energy.push_back(static_cast<float>(
            std::clamp(gauss(region.energy_mean, region.energy_sigma), 35.0, 500.0)));
    }

    void emitPronePoint(const ActorScript& actor, const ActorSample& s, std::vector<Vec3>& pos,
                        std::vector<float>& energy) {
        const double along =
            std::uniform_real_distribution<double>(-0.5, 0.5)(rng_) * actor.body.height;
        const double lateral = gauss(0, actor.body.shoulder / 4.0);
        const Vec3 side{-s.heading.y, s.heading.x, 0};
        pos.push_back({s.position.x + s.heading.x * along + side.x * lateral,
                       s.position.y + s.heading.y * along + side.y * lateral,
                       std::uniform_real_distribution<double>(0.08, 0.30)(rng_)});
        energy.push_back(static_cast<float>(std::clamp(gauss(280, 40), 35.0, 500.0)));
    }

    // Mid-collapse: every point slides from its upright position toward a spot
    // on the floor, so the cloud deforms continuously instead of jumping.
    void emitCollapsingPoint(const ActorScript& actor, const ActorSample& s,
                             const detail::BodyRegion& region, std::vector<Vec3>& pos,
                             std::vector<float>& energy) {
        const double scale = actor.body.height / 1.7;
        const double spread = actor.body.shoulder / 4.0;
        const double fwd = seatedForward(s, region, scale);
        const Vec3 up{s.position.x + s.heading.x * fwd + gauss(0, spread),
                      s.position.y + s.heading.y * fwd + gauss(0, spread),
                      region.height * scale + gauss(0, 0.07)};
        const double ue = std::clamp(gauss(region.energy_mean, region.energy_sigma), 35.0, 500.0);
        const double along =
            std::uniform_real_distribution<double>(-0.5, 0.5)(rng_) * actor.body.height;
        const double lateral = gauss(0, spread);
        const Vec3 side{-s.heading.y, s.heading.x, 0};
        const Vec3 down{s.position.x + s.heading.x * along + side.x * lateral,
                        s.position.y + s.heading.y * along + side.y * lateral,
                        std::uniform_real_distribution<double>(0.08, 0.30)(rng_)};
        const double pe = std::clamp(gauss(280, 40), 35.0, 500.0);
        const double f = s.fall_fraction;
        pos.push_back(up * (1.0 - f) + down * f);
        energy.push_back(static_cast<float>((1.0 - f) * ue + f * pe));
    }

    void emitActorCloud(const ActorScript& actor, const ActorSample& s, std::vector<Vec3>& pos,
                        std::vector<float>& energy, std::vector<Vec3>& vel) {
        const bool in_collapse = s.fallen && s.fall_fraction < 1.0;
        const bool fully_prone = s.fallen && !in_collapse;
        const bool moving = s.velocity.norm() > 0.05 || in_collapse;
        const int budget = moving ? kMovingBudget : kIdleBudget;
        const auto& regions = fully_prone || moving
                                  ? (s.status == StatusLabel::Sitting ? detail::sittingRegions()
                                                                      : detail::standingRegions())
                                  : detail::idleRegions(s.status);
        for (const auto& region : regions) {
            const int n = std::poisson_distribution<int>(region.weight * budget)(rng_);
            for (int k = 0; k < n; ++k) {
                if (fully_prone)
                    emitPronePoint(actor, s, pos, energy);
                else if (in_collapse)
                    emitCollapsingPoint(actor, s, region, pos, energy);
                else
                    emitUprightPoint(actor, s, region, pos, energy);
                vel.push_back(s.velocity);
            }
        }
    }

    // Cull against the radar's field of view, quantize range to the chirp's
    // resolution, and attach a noisy radial speed. Points are radar-local.
    void appendVisible(size_t r, const Vec3& global, float energy, const Vec3& velocity,
                       std::vector<RadarPoint>& out) {
        const RadarPose& pose = radars_[r];
        Vec3 local = transforms_[r].toLocal(global);
        FieldOfView fov = FieldOfView::fromSpec(pose.fov);
        if (!fov.contains(local)) return;
        const double range = local.norm();
        if (range > 1e-9) {
            const double snapped = std::round(range / range_step_) * range_step_;
            local = local * (snapped / range);
        }
        Vec3 los = global - Vec3{pose.position[0], pose.position[1], pose.position[2]};
        const double los_norm = los.norm();
        double radial = los_norm > 1e-9 ? velocity.dot(los * (1.0 / los_norm)) : 0.0;
        radial += gauss(0, 0.05);
        radial = std::clamp(radial, -7.9, 7.9);
        out.push_back({static_cast<float>(local.x), static_cast<float>(local.y),
                       static_cast<float>(local.z), energy, static_cast<float>(radial)});
    }

    void emitClutter(size_t r, std::vector<RadarPoint>& out) {
        for (const Vec3& src : clutter_) {
            if (!std::bernoulli_distribution(0.3)(rng_)) continue;
            const int n = 1 + std::poisson_distribution<int>(0.8)(rng_);
            for (int k = 0; k < n; ++k) {
                Vec3 p{src.x + gauss(0, 0.2), src.y + gauss(0, 0.2),
                       std::max(0.05, src.z + gauss(0, 0.05))};
                const float e =
                    static_cast<float>(std::clamp(gauss(60, 20), 35.0, 120.0));
                appendVisible(r, p, e, Vec3{0, 0, 0}, out);
            }
        }
    }

    void corrupt(std::vector<uint8_t>& wire) {
        if (wire.size() < 2) return;
        if (std::bernoulli_distribution(0.5)(rng_)) {
            const size_t idx =
                std::uniform_int_distribution<size_t>(0, wire.size() - 1)(rng_);
            wire[idx] ^= static_cast<uint8_t>(
                std::uniform_int_distribution<int>(1, 255)(rng_));
        } else {
            const size_t cut = std::uniform_int_distribution<size_t>(
                1, std::min<size_t>(10, wire.size() - 1))(rng_);
            wire.resize(wire.size() - cut);
        }
    }

    void writeTruthRow(std::ofstream& truth, int64_t tick, const ActorScript& actor,
                       const ActorSample& s) {
        StatusLabel label = s.fallen ? StatusLabel::Fallen : s.status;
        // Expected cloud centroid for a 1.7 m reference body: the weighted mean
        // of the moving region table. Seated bodies also sit forward of the
        // anchor because the legs fold ahead of the torso line.
        const bool seated = s.status == StatusLabel::Sitting;
        const double upright_z = seated ? 0.7366 : 1.0325;
        const double scale = actor.body.height / 1.7;
        double fwd = seated ? 0.174 * scale : 0.0;
        double z = upright_z;
        if (s.fallen) {
            z = upright_z + s.fall_fraction * (0.2 - upright_z);
            fwd *= 1.0 - s.fall_fraction;
        }
        char buf[160];
        std::snprintf(buf, sizeof buf, "%lld,%s,%.6f,%.6f,%.6f,%s\n",
                      static_cast<long long>(tick), actor.id.c_str(),
                      s.position.x + s.heading.x * fwd, s.position.y + s.heading.y * fwd, z,
                      toString(label));
        truth << buf;
    }
};

}  // namespace mmtrack
