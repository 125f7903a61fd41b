#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "mmtrack/packet.hpp"
#include "mmtrack/sync.hpp"

namespace mmtrack {

struct ReplaySource {
    uint32_t radar_id = 0;
    std::string path;
};

struct ReplayOptions {
    // Data-seconds per wall-second; <= 0 replays as fast as the gates allow.
    double speed = 0.0;
    // How far (data time) a producer may run ahead of its slowest sibling.
    uint64_t skew_budget_us = 100000;
    // How far (data time) a producer may run ahead of the consumer's closed
    // windows. Bounds every queue in the system no matter the replay speed.
    uint64_t lead_budget_us = 500000;
};

struct ReplayStreamStats {
    uint64_t packets = 0;
    uint64_t points = 0;
    uint64_t bad_magic = 0;
    uint64_t bad_crc = 0;
    uint64_t bad_length = 0;
    uint64_t truncated = 0;

    uint64_t badTotal() const { return bad_magic + bad_crc + bad_length + truncated; }
};

// Feeds recorded radar captures into a Synchronizer, one producer thread per
// file. Producers self-throttle on data time only (sibling skew and lead over
// the consumer), so the merged output is the same at any replay speed; the
// wall clock enters solely through the optional pacing sleep.
class Replayer {
public:
    Replayer(std::vector<ReplaySource> sources, Synchronizer& sync, ReplayOptions options = {})
        : sources_(std::move(sources)), sync_(sync), options_(options) {
        if (sources_.empty()) throw ValidationError("replay: no sources");
        decodeAll();
    }

    ~Replayer() { join(); }

    void start() {
        if (started_) return;
        started_ = true;
        for (size_t i = 0; i < sources_.size(); ++i)
            threads_.emplace_back([this, i] { produce(i); });
    }

    void join() {
        for (auto& t : threads_)
            if (t.joinable()) t.join();
    }

    bool finished() const {
        for (const auto& lane : lanes_)
            if (!lane->done.load(std::memory_order_acquire)) return false;
        return true;
    }

    // Decode accounting, complete as soon as the Replayer is constructed.
    std::map<uint32_t, ReplayStreamStats> stats() const {
        std::map<uint32_t, ReplayStreamStats> out;
        for (size_t i = 0; i < sources_.size(); ++i) out[sources_[i].radar_id] = lanes_[i]->stats;
        return out;
    }

    uint64_t baseTimestampUs() const { return base_ts_; }

private:
    struct Lane {
        std::vector<FramePacket> packets;
        ReplayStreamStats stats;
        std::atomic<uint64_t> next_ts{UINT64_MAX};
        std::atomic<bool> done{false};
    };

    std::vector<ReplaySource> sources_;
    Synchronizer& sync_;
    ReplayOptions options_;
    std::vector<std::unique_ptr<Lane>> lanes_;
    uint64_t base_ts_ = UINT64_MAX;
    bool started_ = false;
    std::vector<std::thread> threads_;

    void decodeAll() {
        for (const auto& src : sources_) {
            auto lane = std::make_unique<Lane>();
            for (auto& outcome : readMmr(src.path)) {
                if (outcome.ok) {
                    lane->stats.points += outcome.packet.points.size();
                    ++lane->stats.packets;
                    lane->packets.push_back(std::move(outcome.packet));
                } else {
                    switch (outcome.reason) {
                        case BadReason::Truncated: ++lane->stats.truncated; break;
                        case BadReason::BadMagic: ++lane->stats.bad_magic; break;
                        case BadReason::BadCrc: ++lane->stats.bad_crc; break;
                        case BadReason::BadLength: ++lane->stats.bad_length; break;
                    }
                }
            }
            if (!lane->packets.empty()) {
                lane->next_ts.store(lane->packets.front().timestamp_us);
                base_ts_ = std::min(base_ts_, lane->packets.front().timestamp_us);
            }
            lanes_.push_back(std::move(lane));
        }
        if (base_ts_ == UINT64_MAX) base_ts_ = 0;  // nothing decodable anywhere
    }

    uint64_t minSiblingNext(size_t self) const {
        uint64_t lowest = UINT64_MAX;
        for (size_t j = 0; j < lanes_.size(); ++j) {
            if (j == self || lanes_[j]->done.load(std::memory_order_acquire)) continue;
            lowest = std::min(lowest, lanes_[j]->next_ts.load(std::memory_order_acquire));
        }
        return lowest;
    }

    void produce(size_t i) {
        Lane& lane = *lanes_[i];
        const uint32_t id = sources_[i].radar_id;
        const auto epoch = std::chrono::steady_clock::now();

        for (auto& packet : lane.packets) {
            const uint64_t ts = packet.timestamp_us;
            lane.next_ts.store(ts, std::memory_order_release);
            sync_.advance(id, ts);

            if (options_.speed > 0) {
                const auto offset = std::chrono::microseconds(
                    static_cast<int64_t>((ts - base_ts_) / options_.speed));
                std::this_thread::sleep_until(epoch + offset);
            }
            // The lane holding the globally smallest pending timestamp never
            // waits here, so the gates cannot deadlock.
            for (;;) {
                const uint64_t sibling = minSiblingNext(i);
                const bool skew_ok =
                    sibling == UINT64_MAX || ts <= sibling + options_.skew_budget_us;
                const uint64_t emitted = sync_.emittedEndUs();
                const uint64_t lead_base = emitted > 0 ? emitted : base_ts_;
                const bool lead_ok = ts <= lead_base + options_.lead_budget_us;
                if (skew_ok && lead_ok) break;
                std::this_thread::sleep_for(std::chrono::microseconds(100));
            }
            sync_.submit(id, std::move(packet));
        }
        lane.next_ts.store(UINT64_MAX, std::memory_order_release);
        lane.done.store(true, std::memory_order_release);
        sync_.markDone(id);
    }
};

}  // namespace mmtrack
