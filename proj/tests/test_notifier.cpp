#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "mmtrack/notifier.hpp"

namespace {

using namespace mmtrack;

FallEvent sampleEvent(int id) {
  FallEvent e;
  e.track_id = id;
  e.tick = 400 + id;
  e.timestamp_us = 20000000ull + 50000ull * static_cast<uint64_t>(id);
  e.position[0] = -0.8 + 0.1 * id;
  e.position[1] = 2.1;
  e.position[2] = 0.2;
  e.confidence = 0.55;
  return e;
}

std::string tempPath(const std::string& stem) {
  static std::atomic<int> counter{0};
  return testing::TempDir() + stem + "." + std::to_string(::getpid()) + "." +
         std::to_string(counter.fetch_add(1)) + ".jsonl";
}

std::vector<std::string> readLines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Records every event it sees, stamped with a global sequence number so
// cross-sink ordering can be checked after the fact.
class RecordingSink : public EventSink {
 public:
  explicit RecordingSink(std::atomic<uint64_t>& clock, bool result = true)
      : clock_(clock), result_(result) {}

  bool deliver(const FallEvent& event) override {
    std::lock_guard<std::mutex> lock(mutex_);
    seen_.emplace_back(event.track_id, clock_.fetch_add(1));
    return result_;
  }

  std::vector<std::pair<int, uint64_t>> seen() {
    std::lock_guard<std::mutex> lock(mutex_);
    return seen_;
  }

 private:
  std::atomic<uint64_t>& clock_;
  bool result_;
  std::mutex mutex_;
  std::vector<std::pair<int, uint64_t>> seen_;
};

// Fails a fixed number of times per event before succeeding.
class FlakySink : public EventSink {
 public:
  explicit FlakySink(int failures_before_success)
      : failures_before_success_(failures_before_success) {}

  bool deliver(const FallEvent&) override {
    const int n = attempts_.fetch_add(1) % (failures_before_success_ + 1);
    return n == failures_before_success_;
  }

  int attempts() const { return attempts_.load(); }

 private:
  int failures_before_success_;
  std::atomic<int> attempts_{0};
};

// First deliver() parks until released; used to back the queue up
// deterministically.
class BlockingSink : public EventSink {
 public:
  bool deliver(const FallEvent& event) override {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      delivered_.push_back(event.track_id);
      if (delivered_.size() == 1) {
        entered_first_.set_value();
        std::unique_lock<std::mutex> gate(gate_mutex_);
        // Already holding mutex_ is fine: release path only touches the gate.
        gate_cv_.wait(gate, [this] { return released_; });
      }
    }
    return true;
  }

  void waitUntilBlocked() { entered_first_.get_future().wait(); }

  void release() {
    {
      std::lock_guard<std::mutex> lock(gate_mutex_);
      released_ = true;
    }
    gate_cv_.notify_all();
  }

  std::vector<int> delivered() {
    std::lock_guard<std::mutex> lock(mutex_);
    return delivered_;
  }

 private:
  std::mutex mutex_;
  std::vector<int> delivered_;
  std::promise<void> entered_first_;
  std::mutex gate_mutex_;
  std::condition_variable gate_cv_;
  bool released_ = false;
};

TEST(Notifier, EventJsonShape) {
  const FallEvent e = sampleEvent(7);
  const json j = e;

  ASSERT_TRUE(j.is_object());
  EXPECT_EQ(j.size(), 5u);
  ASSERT_TRUE(j.contains("track_id"));
  ASSERT_TRUE(j.contains("tick"));
  ASSERT_TRUE(j.contains("timestamp_us"));
  ASSERT_TRUE(j.contains("position"));
  ASSERT_TRUE(j.contains("confidence"));

  EXPECT_EQ(j["track_id"].get<int>(), 7);
  EXPECT_EQ(j["tick"].get<int64_t>(), 407);
  EXPECT_EQ(j["timestamp_us"].get<uint64_t>(), 20350000ull);
  ASSERT_TRUE(j["position"].is_array());
  ASSERT_EQ(j["position"].size(), 3u);
  EXPECT_DOUBLE_EQ(j["position"][1].get<double>(), 2.1);
  EXPECT_DOUBLE_EQ(j["confidence"].get<double>(), 0.55);

  const FallEvent back = j.get<FallEvent>();
  EXPECT_EQ(back.track_id, e.track_id);
  EXPECT_EQ(back.tick, e.tick);
  EXPECT_EQ(back.timestamp_us, e.timestamp_us);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(back.position[i], e.position[i]);
  EXPECT_DOUBLE_EQ(back.confidence, e.confidence);

  // Serialization is deterministic; downstream diffing relies on it.
  EXPECT_EQ(j.dump(), json(e).dump());
}

TEST(Notifier, JournalWritesOneLinePerEventAndAppends) {
  const std::string path = tempPath("journal");

  {
    JournalSink sink(path);
    for (int i = 0; i < 3; ++i) EXPECT_TRUE(sink.deliver(sampleEvent(i)));
  }
  // A fresh sink on the same path appends instead of truncating.
  {
    JournalSink sink(path);
    EXPECT_TRUE(sink.deliver(sampleEvent(3)));
  }

  const auto lines = readLines(path);
  ASSERT_EQ(lines.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    const FallEvent got = json::parse(lines[i]).get<FallEvent>();
    EXPECT_EQ(got.track_id, i);
    EXPECT_EQ(got.tick, 400 + i);
  }
  std::remove(path.c_str());
}

TEST(Notifier, JournalThrowsWhenPathUnwritable) {
  EXPECT_THROW(JournalSink("/nonexistent-dir-for-test/journal.jsonl"),
               NotifierError);
}

TEST(Notifier, WebhookRejectsNonHttpUrls) {
  EXPECT_THROW(WebhookSink("https://example.com/hook"), ValidationError);
  EXPECT_THROW(WebhookSink("ftp://example.com/hook"), ValidationError);
  EXPECT_THROW(WebhookSink("example.com/hook"), ValidationError);
  EXPECT_THROW(WebhookSink("http://"), ValidationError);
  EXPECT_THROW(WebhookSink("http://:8080/hook"), ValidationError);

  EXPECT_NO_THROW(WebhookSink("http://localhost"));
  EXPECT_NO_THROW(WebhookSink("http://localhost:9000/alerts/fall"));
}

TEST(Notifier, WebhookPostsEventToLocalServer) {
  httplib::Server server;
  std::mutex mutex;
  std::vector<std::pair<std::string, std::string>> requests;  // (body, type)
  int respond_status = 200;

  server.Post("/alerts", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mutex);
    requests.emplace_back(req.body, req.get_header_value("Content-Type"));
    res.status = respond_status;
  });

  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  WebhookSink sink("http://127.0.0.1:" + std::to_string(port) + "/alerts");
  const FallEvent e = sampleEvent(11);
  EXPECT_TRUE(sink.deliver(e));

  respond_status = 500;
  EXPECT_FALSE(sink.deliver(e));

  server.stop();
  server_thread.join();

  ASSERT_EQ(requests.size(), 2u);
  for (const auto& [body, type] : requests) {
    EXPECT_EQ(type, "application/json");
    const FallEvent got = json::parse(body).get<FallEvent>();
    EXPECT_EQ(got.track_id, 11);
    EXPECT_EQ(got.timestamp_us, e.timestamp_us);
  }
}

TEST(Notifier, WebhookReportsFailureWhenNobodyListens) {
  // Discard port on loopback: connection is refused, not hung.
  WebhookSink sink("http://127.0.0.1:9/alerts");
  EXPECT_FALSE(sink.deliver(sampleEvent(0)));
}

TEST(Notifier, AsyncWritesJournalBeforeDispatch) {
  std::atomic<uint64_t> clock{0};
  auto journal = std::make_unique<RecordingSink>(clock);
  RecordingSink* journal_view = journal.get();
  auto dispatch = std::make_shared<RecordingSink>(clock);

  AsyncNotifier notifier(std::move(journal), {dispatch});
  for (int i = 0; i < 50; ++i) notifier.notify(sampleEvent(i));
  notifier.close();

  EXPECT_EQ(notifier.dispatchFailures(), 0u);
  EXPECT_EQ(notifier.overflowDropped(), 0u);

  const auto journaled = journal_view->seen();
  const auto dispatched = dispatch->seen();
  ASSERT_EQ(journaled.size(), 50u);
  ASSERT_EQ(dispatched.size(), 50u);

  // Per event: the journal stamp precedes the dispatch stamp.
  std::vector<uint64_t> journal_stamp(50), dispatch_stamp(50);
  for (const auto& [id, stamp] : journaled) journal_stamp[id] = stamp;
  for (const auto& [id, stamp] : dispatched) dispatch_stamp[id] = stamp;
  for (int i = 0; i < 50; ++i) EXPECT_LT(journal_stamp[i], dispatch_stamp[i]);

  // Dispatch preserves submission order.
  for (size_t i = 0; i < dispatched.size(); ++i)
    EXPECT_EQ(dispatched[i].first, static_cast<int>(i));
}

TEST(Notifier, AsyncRetriesUntilSinkRecovers) {
  auto flaky = std::make_shared<FlakySink>(2);  // fails twice, then succeeds
  {
    AsyncNotifier notifier(nullptr, {flaky}, 1024, 3);
    notifier.notify(sampleEvent(0));
    notifier.close();
    EXPECT_EQ(notifier.dispatchFailures(), 0u);
  }
  EXPECT_EQ(flaky->attempts(), 3);
}

TEST(Notifier, AsyncCountsExhaustedRetries) {
  auto dead = std::make_shared<FlakySink>(1000000);  // never succeeds
  {
    AsyncNotifier notifier(nullptr, {dead}, 1024, 3);
    for (int i = 0; i < 4; ++i) notifier.notify(sampleEvent(i));
    notifier.close();
    EXPECT_EQ(notifier.dispatchFailures(), 4u);
  }
  EXPECT_EQ(dead->attempts(), 12);  // 4 events x 3 attempts
}

TEST(Notifier, AsyncOverflowDropsOldestQueuedEvent) {
  std::atomic<uint64_t> clock{0};
  auto journal = std::make_unique<RecordingSink>(clock);
  RecordingSink* journal_view = journal.get();
  auto blocking = std::make_shared<BlockingSink>();

  AsyncNotifier notifier(std::move(journal), {blocking}, 2, 1);
  notifier.notify(sampleEvent(0));
  blocking->waitUntilBlocked();  // event 0 is out of the queue, in deliver()

  for (int i = 1; i <= 4; ++i) notifier.notify(sampleEvent(i));
  // Queue capacity 2: events 1 and 2 were displaced by 3 and 4.
  EXPECT_EQ(notifier.overflowDropped(), 2u);

  blocking->release();
  notifier.close();

  const auto delivered = blocking->delivered();
  ASSERT_EQ(delivered.size(), 3u);
  EXPECT_EQ(delivered[0], 0);
  EXPECT_EQ(delivered[1], 3);
  EXPECT_EQ(delivered[2], 4);

  // The journal never drops: every notify() landed there first.
  EXPECT_EQ(journal_view->seen().size(), 5u);
}

TEST(Notifier, NotifyThrowsWhenJournalWriteFails) {
  std::atomic<uint64_t> clock{0};
  auto bad_journal = std::make_unique<RecordingSink>(clock, /*result=*/false);
  AsyncNotifier notifier(std::move(bad_journal));
  EXPECT_THROW(notifier.notify(sampleEvent(0)), NotifierError);
}

TEST(Notifier, CloseDrainsEverythingAlreadyQueued) {
  std::atomic<uint64_t> clock{0};
  auto slow = std::make_shared<RecordingSink>(clock);
  {
    AsyncNotifier notifier(nullptr, {slow});
    for (int i = 0; i < 20; ++i) notifier.notify(sampleEvent(i));
    notifier.close();  // must not abandon queued events
  }
  EXPECT_EQ(slow->seen().size(), 20u);
}

}  // namespace
