#include "moatplus/audit.hpp"

#include <json.hpp>

#include "moatplus/errors.hpp"

namespace moatplus {

using nlohmann::json;

std::string AuditRecord::to_json() const {
    json j;
    j["item_id"] = item_id;
    j["ts"] = format_iso8601(ts);
    j["event"] = json::parse(event_json);
    j["features"] = features_json.empty() ? json(nullptr) : json::parse(features_json);
    j["result"] = json::parse(result_json);
    j["bundle_version"] = bundle_version;
    j["latency_micros"] = latency_micros;
    return j.dump();
}

AuditRecord AuditRecord::from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed audit record: ") + e.what());
    }
    AuditRecord r;
    r.item_id = j.at("item_id").get<std::string>();
    r.ts = parse_iso8601(j.at("ts").get<std::string>());
    r.event_json = j.at("event").dump();
    r.features_json = j.at("features").is_null() ? std::string{} : j.at("features").dump();
    r.result_json = j.at("result").dump();
    r.bundle_version = j.at("bundle_version").get<std::string>();
    r.latency_micros = j.at("latency_micros").get<long long>();
    return r;
}

FileAuditSink::FileAuditSink(const std::string& path) : out_(path, std::ios::app) {
    if (!out_) throw IoError("cannot open audit log: " + path);
}

bool FileAuditSink::write(const std::string& line) {
    out_ << line << '\n';
    return static_cast<bool>(out_);
}

void FileAuditSink::flush() { out_.flush(); }

AuditQueue::AuditQueue(std::unique_ptr<AuditSink> sink, std::size_t capacity)
    : sink_(std::move(sink)), capacity_(capacity), consumer_([this] { run(); }) {}

AuditQueue::~AuditQueue() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    cv_.notify_all();
    consumer_.join();
}

void AuditQueue::push(AuditRecord record) {
    {
        std::lock_guard lock(mutex_);
        if (queue_.size() >= capacity_) {
            dropped_.fetch_add(1);
            return;
        }
        queue_.push_back(std::move(record));
    }
    cv_.notify_one();
}

void AuditQueue::drain() {
    std::unique_lock lock(mutex_);
    drained_.wait(lock, [this] { return queue_.empty(); });
}

void AuditQueue::run() {
    for (;;) {
        AuditRecord record;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
            if (queue_.empty()) {
                if (stop_) return;
                continue;
            }
            record = std::move(queue_.front());
            queue_.pop_front();
        }
        if (sink_->write(record.to_json())) {
            written_.fetch_add(1);
        } else {
            dropped_.fetch_add(1);
        }
        {
            std::lock_guard lock(mutex_);
            if (queue_.empty()) {
                sink_->flush();  // idle moment: the scoring path is not waiting
                drained_.notify_all();
            }
        }
    }
}

}  // namespace moatplus
