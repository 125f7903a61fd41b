#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "mmtrack/geometry.hpp"
#include "mmtrack/packet.hpp"

namespace mmtrack {

// One closed merge window: all surviving packets whose timestamps fall in
// [index*W, (index+1)*W), ordered by (radar_id, seq).
struct MergedWindow {
    int64_t index = 0;
    uint64_t start_us = 0;
    uint64_t end_us = 0;
    std::vector<FramePacket> packets;  // still in radar-local coordinates

    size_t pointCount() const {
        size_t n = 0;
        for (const auto& p : packets) n += p.points.size();
        return n;
    }

    std::vector<uint32_t> sources() const {
        std::vector<uint32_t> ids;
        for (const auto& p : packets)
            if (ids.empty() || ids.back() != p.radar_id) ids.push_back(p.radar_id);
        return ids;
    }
};

struct SyncCounters {
    uint64_t windows_emitted = 0;
    uint64_t packets_merged = 0;
    uint64_t stale_dropped = 0;   // arrived behind the watermark
    uint64_t inbox_dropped = 0;   // producer inbox overflow, drop-oldest
};

// Aligns R packet streams onto a fixed window grid. Producers call submit()
// concurrently (lock per radar, never blocked by the consumer); one consumer
// thread calls poll()/markDone()/flush().
//
// A window closes once every stream that can still deliver has shown a
// timestamp at or past the window end. Streams stop counting when their file
// ends (markDone) or, in live operation, when they stall longer than the grace
// interval while newer data exists elsewhere (poll's now_us). Closure therefore
// depends only on recorded timestamps during replay, never on arrival
// interleaving, which is what makes replay runs reproducible.
class Synchronizer {
public:
    Synchronizer(const SyncConfig& cfg, const std::vector<uint32_t>& radar_ids)
        : window_us_(static_cast<uint64_t>(std::llround(cfg.window_seconds * 1e6))),
          grace_us_(static_cast<uint64_t>(cfg.grace_windows) * window_us_),
          inbox_capacity_(static_cast<size_t>(cfg.inbox_capacity)) {
        for (uint32_t id : radar_ids) streams_[id];  // default-construct in id order
    }

    uint64_t windowUs() const { return window_us_; }

    // Producer side. Thread-safe; drop-oldest when the inbox is full.
    void submit(uint32_t radar_id, FramePacket packet) {
        auto it = streams_.find(radar_id);
        if (it == streams_.end()) return;  // unknown radar: ignore
        Stream& s = it->second;
        std::lock_guard<std::mutex> lock(s.inbox_mutex);
        s.inbox.push_back(std::move(packet));
        if (s.inbox.size() > inbox_capacity_) {
            s.inbox.pop_front();
            ++s.inbox_dropped;
        }
    }

    void markDone(uint32_t radar_id) {
        auto it = streams_.find(radar_id);
        if (it == streams_.end()) return;
        std::lock_guard<std::mutex> lock(it->second.inbox_mutex);
        it->second.done_flag = true;
    }

    // Producer promise: no packet from this radar will ever carry a timestamp
    // below ts. Lets windows close across recording gaps while the producer
    // throttles itself.
    void advance(uint32_t radar_id, uint64_t ts) {
        auto it = streams_.find(radar_id);
        if (it == streams_.end()) return;
        auto& hint = it->second.hint;
        uint64_t cur = hint.load(std::memory_order_relaxed);
        while (cur < ts && !hint.compare_exchange_weak(cur, ts, std::memory_order_relaxed)) {
        }
    }

    // End of the last closed window (data time); 0 until the grid has started.
    // Safe to read from producer threads.
    uint64_t emittedEndUs() const { return emitted_end_us_.load(std::memory_order_relaxed); }

    // Consumer side. now_us enables the live-mode grace rule; leave it unset
    // during replay so output depends on packet timestamps alone.
    std::vector<MergedWindow> poll(std::optional<uint64_t> now_us = std::nullopt) {
        drainInboxes(now_us);
        return emitClosable(false);
    }

    // Consumer side, after every producer has finished: emits everything left,
    // including a trailing partial window.
    std::vector<MergedWindow> flush() {
        drainInboxes(std::nullopt);
        return emitClosable(true);
    }

    SyncCounters counters() const {
        SyncCounters c = counters_;
        for (const auto& [id, s] : streams_) {
            std::lock_guard<std::mutex> lock(s.inbox_mutex);
            c.inbox_dropped += s.inbox_dropped;
        }
        return c;
    }

    // High-water mark of per-radar buffered packets beyond the watermark,
    // sampled after each emission. reset starts a fresh interval.
    size_t fifoHighWater(bool reset = false) {
        const size_t hw = fifo_high_water_;
        if (reset) fifo_high_water_ = 0;
        return hw;
    }

private:
    struct Stream {
        mutable std::mutex inbox_mutex;
        std::deque<FramePacket> inbox;
        uint64_t inbox_dropped = 0;
        bool done_flag = false;

        std::atomic<uint64_t> hint{0};

        // Consumer-private state.
        std::deque<FramePacket> fifo;
        uint64_t last_ts = 0;
        bool has_data = false;
        bool done = false;
        bool parked = false;
        uint64_t last_progress_now = 0;
        bool has_progress_stamp = false;
    };

    uint64_t window_us_;
    uint64_t grace_us_;
    size_t inbox_capacity_;
    std::map<uint32_t, Stream> streams_;
    SyncCounters counters_;
    int64_t next_index_ = 0;
    bool started_ = false;
    size_t fifo_high_water_ = 0;
    std::atomic<uint64_t> emitted_end_us_{0};

    void drainInboxes(std::optional<uint64_t> now_us) {
        for (auto& [id, s] : streams_) {
            std::deque<FramePacket> grabbed;
            {
                std::lock_guard<std::mutex> lock(s.inbox_mutex);
                grabbed.swap(s.inbox);
                s.done = s.done_flag;
            }
            if (!grabbed.empty()) {
                s.parked = false;
                if (now_us) {
                    s.last_progress_now = *now_us;
                    s.has_progress_stamp = true;
                }
            }
            for (auto& p : grabbed) {
                if (started_ && p.timestamp_us < watermarkUs()) {
                    ++counters_.stale_dropped;  // window already emitted
                    continue;
                }
                s.last_ts = std::max(s.last_ts, p.timestamp_us);
                s.has_data = true;
                s.fifo.push_back(std::move(p));
            }
            if (now_us && !s.has_progress_stamp) {
                s.last_progress_now = *now_us;  // baseline for the grace timer
                s.has_progress_stamp = true;
            }
        }
        if (now_us && grace_us_ > 0) applyGrace(*now_us);
    }

    void applyGrace(uint64_t now_us) {
        // Park a stream only when someone else has newer data waiting; parking
        // with nothing to emit would serve no one.
        bool someone_ready = false;
        for (const auto& [id, s] : streams_)
            if (!s.fifo.empty()) someone_ready = true;
        if (!someone_ready) return;
        for (auto& [id, s] : streams_) {
            if (s.done || s.parked) continue;
            if (s.has_progress_stamp && now_us - s.last_progress_now > grace_us_)
                s.parked = true;
        }
    }

    uint64_t watermarkUs() const {
        return static_cast<uint64_t>(next_index_) * window_us_;
    }

    std::vector<MergedWindow> emitClosable(bool flush_all) {
        std::vector<MergedWindow> out;

        if (!started_) {
            // First window starts at the earliest packet seen; wait until every
            // stream has either spoken or stopped counting.
            bool all_decided = true;
            bool any_data = false;
            uint64_t first_ts = UINT64_MAX;
            for (const auto& [id, s] : streams_) {
                if (!s.has_data && !s.done && !s.parked && !flush_all &&
                    s.hint.load(std::memory_order_relaxed) == 0)
                    all_decided = false;
                if (s.has_data) {
                    any_data = true;
                    first_ts = std::min(first_ts, s.fifo.empty()
                                                      ? s.last_ts
                                                      : s.fifo.front().timestamp_us);
                }
            }
            if (!all_decided || !any_data) return out;
            next_index_ = static_cast<int64_t>(first_ts / window_us_);
            started_ = true;
        }

        for (;;) {
            // Closure bound: the lowest timestamp a countable stream could
            // still deliver.
            bool any_active = false;
            uint64_t min_last = UINT64_MAX;
            bool all_fifos_empty = true;
            for (const auto& [id, s] : streams_) {
                if (!s.done && !s.parked) {
                    any_active = true;
                    const uint64_t eff = std::max(s.has_data ? s.last_ts : 0,
                                                  s.hint.load(std::memory_order_relaxed));
                    min_last = std::min(min_last, eff);
                }
                if (!s.fifo.empty()) all_fifos_empty = false;
            }

            const uint64_t window_end = watermarkUs() + window_us_;
            bool can_close;
            if (!any_active || flush_all) {
                can_close = !all_fifos_empty;  // drain whatever is buffered
            } else {
                can_close = min_last >= window_end;
            }
            if (!can_close) break;

            MergedWindow w;
            w.index = next_index_;
            w.start_us = watermarkUs();
            w.end_us = window_end;
            for (auto& [id, s] : streams_) {
                while (!s.fifo.empty() && s.fifo.front().timestamp_us < window_end) {
                    if (s.fifo.front().timestamp_us < w.start_us) {
                        ++counters_.stale_dropped;  // non-monotone producer
                        s.fifo.pop_front();
                        continue;
                    }
                    w.packets.push_back(std::move(s.fifo.front()));
                    s.fifo.pop_front();
                }
            }
            std::stable_sort(w.packets.begin(), w.packets.end(),
                             [](const FramePacket& a, const FramePacket& b) {
                                 if (a.radar_id != b.radar_id) return a.radar_id < b.radar_id;
                                 return a.seq < b.seq;
                             });
            counters_.packets_merged += w.packets.size();
            ++counters_.windows_emitted;
            ++next_index_;

            for (const auto& [id, s] : streams_)
                fifo_high_water_ = std::max(fifo_high_water_, s.fifo.size());

            out.push_back(std::move(w));
        }
        if (started_) emitted_end_us_.store(watermarkUs(), std::memory_order_relaxed);
        return out;
    }
};

// Sliding concatenation of the newest `group_windows` merged windows with all
// points lifted into the global frame.
struct FrameGroup {
    int64_t tick = 0;       // index of the newest contributing window
    uint64_t start_us = 0;  // start of the oldest contributing window
    uint64_t end_us = 0;
    int window_count = 0;
    std::vector<RadarPoint> points;                  // global frame
    std::vector<std::vector<uint32_t>> window_sources;  // radar ids, oldest first
};

inline FrameGroup assembleGroup(const std::deque<MergedWindow>& recent,
                                const std::map<uint32_t, RigidTransform>& transforms) {
    if (recent.empty()) throw ValidationError("frame group needs at least one window");
    FrameGroup g;
    g.tick = recent.back().index;
    g.start_us = recent.front().start_us;
    g.end_us = recent.back().end_us;
    g.window_count = static_cast<int>(recent.size());
    for (const auto& w : recent) {
        g.window_sources.push_back(w.sources());
        for (const auto& packet : w.packets) {
            auto it = transforms.find(packet.radar_id);
            if (it == transforms.end()) continue;  // no pose: cannot be merged
            const Mat4& m = it->second.local_to_global;
            for (const auto& pt : packet.points)
                g.points.push_back(transformPoint(m, pt));
        }
    }
    return g;
}

}  // namespace mmtrack
