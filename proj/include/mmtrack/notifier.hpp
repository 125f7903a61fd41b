#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "mmtrack/core.hpp"

namespace mmtrack {

class NotifierError : public Error { using Error::Error; };

struct FallEvent {
    int track_id = 0;
    int64_t tick = 0;
    uint64_t timestamp_us = 0;
    double position[3] = {0.0, 0.0, 0.0};
    double confidence = 0.0;  // fraction of the blur window voting Fallen
};

inline void to_json(json& j, const FallEvent& e) {
    j = json{{"track_id", e.track_id},
             {"tick", e.tick},
             {"timestamp_us", e.timestamp_us},
             {"position", {e.position[0], e.position[1], e.position[2]}},
             {"confidence", e.confidence}};
}

inline void from_json(const json& j, FallEvent& e) {
    e.track_id = j.at("track_id").get<int>();
    e.tick = j.at("tick").get<int64_t>();
    e.timestamp_us = j.at("timestamp_us").get<uint64_t>();
    const auto& p = j.at("position");
    for (int i = 0; i < 3; ++i) e.position[i] = p.at(i).get<double>();
    e.confidence = j.at("confidence").get<double>();
}

class EventSink {
public:
    virtual ~EventSink() = default;
    virtual bool deliver(const FallEvent& event) = 0;
};

// Appends one JSON object per line; flushed per event so a crash loses nothing
// that was acknowledged.
class JournalSink : public EventSink {
public:
    explicit JournalSink(const std::string& path) : out_(path, std::ios::app) {
        if (!out_) throw NotifierError("cannot open event journal: " + path);
    }

    bool deliver(const FallEvent& event) override {
        out_ << json(event).dump() << '\n';
        out_.flush();
        return static_cast<bool>(out_);
    }

private:
    std::ofstream out_;
};

// POSTs the event JSON to an http://host[:port][/path] endpoint.
class WebhookSink : public EventSink {
public:
    explicit WebhookSink(const std::string& url) {
        std::string rest = url;
        if (rest.rfind("http://", 0) != 0)
            throw ValidationError("webhook_url: only http:// endpoints are supported");
        rest = rest.substr(7);
        const auto slash = rest.find('/');
        std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : rest.substr(slash);
        const auto colon = hostport.find(':');
        host_ = colon == std::string::npos ? hostport : hostport.substr(0, colon);
        port_ = colon == std::string::npos ? 80 : std::stoi(hostport.substr(colon + 1));
        if (host_.empty()) throw ValidationError("webhook_url: missing host");
    }

    bool deliver(const FallEvent& event) override {
        httplib::Client client(host_, port_);
        client.set_connection_timeout(2, 0);
        client.set_write_timeout(2, 0);
        auto res = client.Post(path_, json(event).dump(), "application/json");
        return res && res->status >= 200 && res->status < 300;
    }

private:
    std::string host_;
    std::string path_;
    int port_ = 80;
};

// Journal-first notifier: notify() writes the journal on the caller's thread
// (at-least-once persistence) and queues the event for the dispatch worker,
// which pushes it to the remaining sinks with bounded retries. The pipeline is
// never blocked by a slow or dead endpoint.
class AsyncNotifier {
public:
    explicit AsyncNotifier(std::unique_ptr<EventSink> journal,
                           std::vector<std::shared_ptr<EventSink>> dispatch_sinks = {},
                           size_t queue_capacity = 1024, int max_attempts = 3)
        : journal_(std::move(journal)),
          sinks_(std::move(dispatch_sinks)),
          queue_capacity_(queue_capacity),
          max_attempts_(max_attempts) {
        if (!sinks_.empty()) worker_ = std::thread([this] { run(); });
    }

    ~AsyncNotifier() { close(); }

    void notify(const FallEvent& event) {
        if (journal_ && !journal_->deliver(event))
            throw NotifierError("event journal write failed");
        if (sinks_.empty()) return;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (queue_.size() >= queue_capacity_) {
                queue_.pop_front();  // oldest dropped; journal already has it
                ++overflow_dropped_;
            }
            queue_.push_back(event);
        }
        cv_.notify_one();
    }

    void close() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (closing_) return;
            closing_ = true;
        }
        cv_.notify_all();
        if (worker_.joinable()) worker_.join();
    }

    uint64_t dispatchFailures() const { return dispatch_failures_; }
    uint64_t overflowDropped() const { return overflow_dropped_; }

private:
    std::unique_ptr<EventSink> journal_;
    std::vector<std::shared_ptr<EventSink>> sinks_;
    size_t queue_capacity_;
    int max_attempts_;

    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<FallEvent> queue_;
    bool closing_ = false;
    std::thread worker_;
    std::atomic<uint64_t> dispatch_failures_{0};
    std::atomic<uint64_t> overflow_dropped_{0};

    void run() {
        for (;;) {
            FallEvent event;
            {
                std::unique_lock<std::mutex> lock(mutex_);
                cv_.wait(lock, [this] { return closing_ || !queue_.empty(); });
                if (queue_.empty()) return;  // closing and drained
                event = queue_.front();
                queue_.pop_front();
            }
            for (auto& sink : sinks_) {
                bool ok = false;
                for (int attempt = 0; attempt < max_attempts_ && !ok; ++attempt)
                    ok = sink->deliver(event);
                if (!ok) ++dispatch_failures_;
            }
        }
    }
};

}  // namespace mmtrack
