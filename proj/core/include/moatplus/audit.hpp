#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "moatplus/types.hpp"

namespace moatplus {

/// One append-only record per scored event: the raw input, the result, the
/// bundle that produced it and the observed scoring latency.
struct AuditRecord {
    std::string item_id;
    Instant ts = 0;
    std::string event_json;    // exact input as received
    std::string features_json; // FeatureBundle snapshot (empty for NoAnchors)
    std::string result_json;
    std::string bundle_version;
    long long latency_micros = 0;

    std::string to_json() const;
    static AuditRecord from_json(const std::string& line);
};

/// Destination for audit lines. Implementations must tolerate being called
/// from a single consumer thread. flush() is invoked at idle moments so
/// write() can stay buffered.
class AuditSink {
public:
    virtual ~AuditSink() = default;
    virtual bool write(const std::string& line) = 0;  // false on sink failure
    virtual void flush() {}
};

class FileAuditSink : public AuditSink {
public:
    explicit FileAuditSink(const std::string& path);
    bool write(const std::string& line) override;
    void flush() override;

private:
    std::ofstream out_;
};

/// Bounded queue between the scoring path and the audit sink. Overflow and
/// sink failures drop records and bump a counter; the price path never
/// blocks on telemetry.
class AuditQueue {
public:
    explicit AuditQueue(std::unique_ptr<AuditSink> sink, std::size_t capacity = 8192);
    ~AuditQueue();

    void push(AuditRecord record);

    /// Blocks until everything queued so far is written (batch mode).
    void drain();

    std::uint64_t dropped() const { return dropped_.load(); }
    std::uint64_t written() const { return written_.load(); }

private:
    void run();

    std::unique_ptr<AuditSink> sink_;
    std::size_t capacity_;
    std::deque<AuditRecord> queue_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable drained_;
    std::atomic<std::uint64_t> dropped_{0};
    std::atomic<std::uint64_t> written_{0};
    bool stop_ = false;
    std::thread consumer_;
};

}  // namespace moatplus
