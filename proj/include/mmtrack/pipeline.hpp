#pragma once

#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mmtrack/clustering.hpp"
#include "mmtrack/core.hpp"
#include "mmtrack/filtering.hpp"
#include "mmtrack/notifier.hpp"
#include "mmtrack/replay.hpp"
#include "mmtrack/status.hpp"
#include "mmtrack/sync.hpp"
#include "mmtrack/tracking.hpp"

namespace mmtrack {

struct PipelineOptions {
    std::string out_dir;
    bool write_outputs = true;
    bool live = false;  // wall-clock grace parking for stalled radars
    std::vector<std::shared_ptr<EventSink>> extra_sinks;
};

struct StageBreakdown {
    double filter_us = 0;
    double background_us = 0;
    double cluster_us = 0;
    double track_us = 0;
    double status_us = 0;
};

struct PostureRow {
    int track_id = 0;
    int64_t tick = 0;
    PostureReport report;
};

struct PipelineResult {
    int64_t windows = 0;
    int64_t processed_ticks = 0;
    int64_t standby_ticks = 0;  // windows that arrived while in standby
    uint64_t points_in = 0;
    uint64_t points_kept = 0;    // past the energy/speed/room filter
    uint64_t points_clean = 0;   // past background subtraction
    int tracks_spawned = 0;
    int tracks_confirmed = 0;
    std::vector<FallEvent> events;
    std::vector<PostureRow> postures;
    SyncCounters sync;
    size_t fifo_high_water = 0;
    std::map<uint32_t, ReplayStreamStats> decode;
    double wall_seconds = 0;
    double windows_per_second = 0;
    StageBreakdown stages;
};

// Consumer-side engine: merged windows in, tracks / events / reports out.
// Everything it writes is a pure function of the window sequence, so two
// replays of the same captures produce identical files.
class Pipeline {
public:
    Pipeline(const PipelineConfig& cfg, PipelineOptions opt)
        : cfg_(cfg),
          opt_(std::move(opt)),
          grid_(cfg.background, cfg.persistenceTicks(), cfg.decayTicks()),
          tracker_(cfg.tracking, cfg.timeoutTicks()) {
        validate(cfg_);
        for (const auto& pose : cfg_.radars) transforms_[pose.id] = mountingTransform(pose);
        if (opt_.write_outputs) {
            namespace fs = std::filesystem;
            if (opt_.out_dir.empty()) throw ValidationError("pipeline: out_dir required");
            fs::create_directories(opt_.out_dir);
            trajectories_.open(opt_.out_dir + "/trajectories.csv", std::ios::trunc);
            modes_.open(opt_.out_dir + "/modes.csv", std::ios::trunc);
            postures_.open(opt_.out_dir + "/postures.jsonl", std::ios::trunc);
            if (!trajectories_ || !modes_ || !postures_)
                throw IoError("pipeline: cannot open output files in " + opt_.out_dir);
            trajectories_ << "tick,track_id,x,y,z,state,status\n";
            modes_ << "tick,mode\n";
            notifier_ = std::make_unique<AsyncNotifier>(
                std::make_unique<JournalSink>(opt_.out_dir + "/events.jsonl"), makeSinks());
        } else if (!opt_.extra_sinks.empty()) {
            notifier_ = std::make_unique<AsyncNotifier>(nullptr, makeSinks());
        }
    }

    ~Pipeline() { finalize(); }

    // Single consumer thread only.
    void processWindow(MergedWindow window) {
        const int64_t tick = window.index;
        if (result_.windows == 0) last_detection_tick_ = tick - 1;
        ++result_.windows;

        recent_.push_back(std::move(window));
        while (recent_.size() > static_cast<size_t>(cfg_.sync.group_windows))
            recent_.pop_front();

        const bool standby = (tick - last_detection_tick_) >= cfg_.standbyDelayTicks();
        if (modes_.is_open())
            modes_ << tick << ',' << (standby ? "standby" : "working") << '\n';
        if (standby) {
            ++result_.standby_ticks;
            if (tick % cfg_.standbyStride() != 0) return;  // skipped in standby
        }
        processTick(tick);
    }

    // Flushes writers and stops the dispatcher. Safe to call twice.
    void finalize() {
        if (finalized_) return;
        finalized_ = true;
        if (notifier_) notifier_->close();
        if (trajectories_.is_open()) trajectories_.close();
        if (modes_.is_open()) modes_.close();
        if (postures_.is_open()) postures_.close();
    }

    const PipelineResult& result() const { return result_; }
    const Tracker& tracker() const { return tracker_; }
    const BackgroundGrid& grid() const { return grid_; }

    // Full replay run: producers feed the synchronizer, this thread consumes.
    PipelineResult runFromFiles(const std::vector<ReplaySource>& sources,
                                const ReplayOptions& ropts = {}) {
        std::vector<uint32_t> ids;
        for (const auto& pose : cfg_.radars) ids.push_back(pose.id);
        Synchronizer sync(cfg_.sync, ids);
        Replayer replayer(sources, sync, ropts);
        result_.decode = replayer.stats();

        std::ofstream sync_stats;
        if (opt_.write_outputs) {
            sync_stats.open(opt_.out_dir + "/sync_stats.csv", std::ios::trunc);
            sync_stats << "window,emitted,merged,stale_dropped,inbox_dropped,fifo_high_water\n";
        }
        uint64_t next_stats_mark = 100;
        auto write_stats_row = [&](uint64_t mark) {
            if (!sync_stats.is_open()) return;
            const SyncCounters c = sync.counters();
            sync_stats << mark << ',' << c.windows_emitted << ',' << c.packets_merged << ','
                       << c.stale_dropped << ',' << c.inbox_dropped << ','
                       << sync.fifoHighWater(true) << '\n';
        };

        const auto t0 = std::chrono::steady_clock::now();
        replayer.start();
        for (;;) {
            std::vector<MergedWindow> windows =
                opt_.live ? sync.poll(nowUs()) : sync.poll();
            if (windows.empty()) {
                if (replayer.finished()) {
                    for (auto& w : sync.flush()) consume(std::move(w));
                    break;
                }
                std::this_thread::sleep_for(std::chrono::microseconds(100));
                continue;
            }
            for (auto& w : windows) consume(std::move(w));
            while (static_cast<uint64_t>(result_.windows) >= next_stats_mark) {
                write_stats_row(next_stats_mark);
                next_stats_mark += 100;
            }
        }
        replayer.join();
        const auto t1 = std::chrono::steady_clock::now();

        result_.fifo_high_water = peak_fifo_ = std::max(peak_fifo_, sync.fifoHighWater());
        if (static_cast<uint64_t>(result_.windows) + 100 != next_stats_mark)
            write_stats_row(static_cast<uint64_t>(result_.windows));
        result_.sync = sync.counters();
        result_.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        result_.windows_per_second =
            result_.wall_seconds > 0 ? result_.windows / result_.wall_seconds : 0.0;
        finalize();
        return result_;
    }

private:
    PipelineConfig cfg_;
    PipelineOptions opt_;
    std::map<uint32_t, RigidTransform> transforms_;
    BackgroundGrid grid_;
    Tracker tracker_;
    std::deque<MergedWindow> recent_;
    int64_t last_detection_tick_ = 0;
    bool finalized_ = false;
    size_t peak_fifo_ = 0;

    std::map<int, StatusTracker> status_;
    struct PostureAccum {
        std::vector<Vec3> points;
        uint64_t first_us = 0;
        uint64_t last_us = 0;
        bool reported = false;
    };
    std::map<int, PostureAccum> posture_;

    std::ofstream trajectories_;
    std::ofstream modes_;
    std::ofstream postures_;
    std::unique_ptr<AsyncNotifier> notifier_;
    PipelineResult result_;

    std::vector<std::shared_ptr<EventSink>> makeSinks() {
        std::vector<std::shared_ptr<EventSink>> sinks = opt_.extra_sinks;
        if (!cfg_.status.webhook_url.empty())
            sinks.push_back(std::make_shared<WebhookSink>(cfg_.status.webhook_url));
        return sinks;
    }

    static uint64_t nowUs() {
        return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                         std::chrono::steady_clock::now().time_since_epoch())
                                         .count());
    }

    void consume(MergedWindow w) { processWindow(std::move(w)); }

    template <typename F>
    double timed(F&& f) {
        const auto a = std::chrono::steady_clock::now();
        f();
        const auto b = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::micro>(b - a).count();
    }

    void processTick(int64_t tick) {
        ++result_.processed_ticks;
        const FrameGroup group = assembleGroup(recent_, transforms_);
        result_.points_in += group.points.size();

        BesResult bes;
        result_.stages.filter_us +=
            timed([&] { bes = besFilter(group.points, cfg_.room, cfg_.background); });
        result_.points_kept += bes.kept.size();

        std::vector<RadarPoint> clean, suppressed;
        result_.stages.background_us +=
            timed([&] { grid_.subtract(bes.kept, tick, clean, suppressed); });
        result_.points_clean += clean.size();

        DbscanResult db;
        result_.stages.cluster_us += timed([&] { db = dynamicDbscan(clean, cfg_.bands); });

        // Clusters below mover size are residual clutter: too dense for the
        // noise list, too small to be a person. They feed the grid so static
        // sources get learned and suppressed instead of lingering forever.
        std::vector<Cluster> movers;
        std::vector<int> residual;
        movers.reserve(db.clusters.size());
        for (auto& c : db.clusters) {
            if (static_cast<int>(c.members.size()) >= cfg_.background.min_cluster_points)
                movers.push_back(std::move(c));
            else
                residual.insert(residual.end(), c.members.begin(), c.members.end());
        }

        result_.stages.background_us += timed([&] {
            std::vector<RadarPoint> feed;
            feed.reserve(bes.rejected.size() + suppressed.size() + db.noise.size() +
                         residual.size());
            for (const auto& p : bes.rejected)
                if (p.isFinite()) feed.push_back(p);
            feed.insert(feed.end(), suppressed.begin(), suppressed.end());
            for (int idx : db.noise) feed.push_back(clean[idx]);
            for (int idx : residual) feed.push_back(clean[idx]);
            grid_.update(feed, tick);
        });

        Tracker::StepResult step;
        result_.stages.track_us += timed([&] { step = tracker_.step(movers, tick); });
        result_.tracks_spawned += static_cast<int>(step.spawned.size());
        result_.tracks_confirmed += static_cast<int>(step.confirmed.size());
        if (step.detection) last_detection_tick_ = tick;

        result_.stages.status_us += timed([&] {
            for (int id : step.retired) dropTrack(id);
            for (int id : step.lost) dropTrack(id);
            for (const auto& [bin_id, cluster_idx] : step.assignments) {
                const TrackBin* bin = tracker_.find(bin_id);
                if (!bin || bin->state != TrackState::Confirmed) continue;
                const Cluster& cluster = movers[cluster_idx];
                auto [it, fresh] = status_.try_emplace(bin_id, cfg_.status);
                (void)fresh;
                const StatusTracker::Update update = it->second.push(cluster);
                writeTrajectoryRow(tick, bin_id, cluster, *bin, update.blurred);
                if (update.fall_edge) emitFall(tick, bin_id, cluster, update);
                trackPosture(tick, bin_id, cluster, clean, update.blurred);
            }
        });
    }

    void dropTrack(int id) {
        status_.erase(id);
        posture_.erase(id);
    }

    void writeTrajectoryRow(int64_t tick, int id, const Cluster& c, const TrackBin& bin,
                            StatusLabel status) {
        if (!trajectories_.is_open()) return;
        char buf[192];
        std::snprintf(buf, sizeof buf, "%lld,%d,%.6f,%.6f,%.6f,%s,%s\n",
                      static_cast<long long>(tick), id, c.centroid.x, c.centroid.y,
                      c.centroid.z, toString(bin.state), toString(status));
        trajectories_ << buf;
    }

    void emitFall(int64_t tick, int id, const Cluster& c, const StatusTracker::Update& u) {
        FallEvent e;
        e.track_id = id;
        e.tick = tick;
        e.timestamp_us = recent_.back().end_us;  // data time, not wall time
        e.position[0] = c.centroid.x;
        e.position[1] = c.centroid.y;
        e.position[2] = c.centroid.z;
        e.confidence = u.fallen_fraction;
        result_.events.push_back(e);
        if (notifier_) notifier_->notify(e);
    }

    void trackPosture(int64_t tick, int id, const Cluster& cluster,
                      const std::vector<RadarPoint>& clean, StatusLabel blurred) {
        if (blurred != StatusLabel::Fallen) {
            posture_.erase(id);
            return;
        }
        PostureAccum& acc = posture_[id];
        if (acc.reported) return;
        const uint64_t now = recent_.back().end_us;
        if (acc.points.empty()) acc.first_us = now;
        acc.last_us = now;
        for (int idx : cluster.members) {
            const RadarPoint& p = clean[idx];
            acc.points.push_back({p.x, p.y, p.z});
        }
        const double span = (acc.last_us - acc.first_us) * 1e-6;
        if (span < cfg_.status.posture.min_span_seconds ||
            acc.points.size() < static_cast<size_t>(cfg_.status.posture.min_points))
            return;
        PostureRow row;
        row.track_id = id;
        row.tick = tick;
        row.report = estimatePosture(acc.points, span, cfg_.status.posture);
        acc.reported = true;
        acc.points.clear();
        acc.points.shrink_to_fit();
        result_.postures.push_back(row);
        if (postures_.is_open()) {
            json j{{"track_id", id},
                   {"tick", tick},
                   {"label", toString(row.report.label)},
                   {"dominant_height", row.report.dominant_height},
                   {"footprint_area", row.report.footprint_area},
                   {"point_count", row.report.point_count},
                   {"span_seconds", row.report.span_seconds}};
            postures_ << j.dump() << '\n';
            postures_.flush();
        }
    }
};

}  // namespace mmtrack
