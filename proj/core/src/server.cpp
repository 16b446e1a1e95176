#include "moatplus/server.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "moatplus/errors.hpp"
#include "moatplus/event_json.hpp"
#include "moatplus/scoring.hpp"

namespace moatplus {

using nlohmann::json;

struct ScoreService::Impl {
    ServerConfig cfg;
    std::shared_ptr<const ModelBundle> bundle;
    mutable std::mutex bundle_mutex;
    std::unique_ptr<AuditQueue> audit;
    httplib::Server server;
    std::thread serve_thread;
    int bound_port = 0;

    std::shared_ptr<const ModelBundle> current_bundle() const {
        std::lock_guard lock(bundle_mutex);
        return bundle;
    }

    void swap_bundle(std::shared_ptr<const ModelBundle> next) {
        std::lock_guard lock(bundle_mutex);
        bundle = std::move(next);
    }

    void handle_score(const httplib::Request& req, httplib::Response& res) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto snapshot = current_bundle();
        PriceEvent event;
        try {
            event = parse_event(req.body);
        } catch (const Error& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}, {"code", "bad_request"}}.dump(),
                            "application/json");
            return;
        }
        try {
            const ScoreResult result = score(event, *snapshot);
            const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
            res.set_content(
                score_result_to_json(result, snapshot->bundle_version, std::max<long long>(1, micros)),
                "application/json");
            if (audit) {
                AuditRecord record;
                record.item_id = event.item_id;
                record.ts = event.ts;
                record.event_json = req.body;
                if (result.status != ScoreStatus::NoAnchors) {
                    record.features_json = feature_bundle_to_json(compute_features(
                        event, snapshot->standardization, snapshot->feature_config));
                }
                record.result_json = score_result_to_json(result, snapshot->bundle_version);
                record.bundle_version = snapshot->bundle_version;
                record.latency_micros = micros;
                audit->push(std::move(record));
            }
        } catch (const Error& e) {
            res.status = 500;
            res.set_content(json{{"error", e.what()}, {"code", "scoring_failed"}}.dump(),
                            "application/json");
        }
    }

    void handle_health(const httplib::Request&, httplib::Response& res) {
        const auto snapshot = current_bundle();
        json j{{"status", "ok"}, {"bundle_version", snapshot->bundle_version}};
        if (audit) {
            j["audit_written"] = audit->written();
            j["audit_dropped"] = audit->dropped();
        }
        res.set_content(j.dump(), "application/json");
    }

    void handle_reload(const httplib::Request& req, httplib::Response& res) {
        std::string path = cfg.bundle_path;
        if (!req.body.empty()) {
            try {
                const json j = json::parse(req.body);
                if (j.contains("path")) path = j["path"].get<std::string>();
            } catch (const json::exception&) {
                res.status = 400;
                res.set_content(json{{"error", "malformed reload body"}}.dump(),
                                "application/json");
                return;
            }
        }
        try {
            auto next = std::make_shared<const ModelBundle>(load_bundle(path));
            const std::string version = next->bundle_version;
            swap_bundle(std::move(next));
            cfg.bundle_path = path;
            res.set_content(json{{"bundle_version", version}}.dump(), "application/json");
        } catch (const Error& e) {
            res.status = 500;
            res.set_content(json{{"error", e.what()}, {"code", "reload_failed"}}.dump(),
                            "application/json");
        }
    }
};

ScoreService::ScoreService(ServerConfig cfg) : impl_(std::make_unique<Impl>()) {
    impl_->cfg = std::move(cfg);
    impl_->server.set_tcp_nodelay(true);   // tail latency dies under Nagle
    impl_->server.set_keep_alive_max_count(1 << 20);  // default closes every 5 requests
    const unsigned workers = std::max(8u, std::thread::hardware_concurrency());
    impl_->server.new_task_queue = [workers] {
        return new httplib::ThreadPool(workers);
    };
    impl_->bundle =
        std::make_shared<const ModelBundle>(load_bundle(impl_->cfg.bundle_path));
    if (!impl_->cfg.audit_path.empty()) {
        impl_->audit = std::make_unique<AuditQueue>(
            std::make_unique<FileAuditSink>(impl_->cfg.audit_path), impl_->cfg.audit_capacity);
    }

    impl_->server.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
        impl_->handle_score(req, res);
    });
    impl_->server.Get("/v1/health", [this](const httplib::Request& req, httplib::Response& res) {
        impl_->handle_health(req, res);
    });
    impl_->server.Post("/v1/reload", [this](const httplib::Request& req, httplib::Response& res) {
        impl_->handle_reload(req, res);
    });
}

ScoreService::~ScoreService() {
    stop();
}

void ScoreService::run() {
    if (impl_->cfg.port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(impl_->cfg.bind_address);
        if (impl_->bound_port <= 0) throw IoError("cannot bind scoring service");
        if (!impl_->server.listen_after_bind()) throw IoError("scoring service stopped abnormally");
        return;
    }
    if (!impl_->server.listen(impl_->cfg.bind_address, impl_->cfg.port)) {
        throw IoError("cannot bind scoring service to " + impl_->cfg.bind_address + ":" +
                      std::to_string(impl_->cfg.port));
    }
}

int ScoreService::start() {
    if (impl_->cfg.port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(impl_->cfg.bind_address);
    } else {
        if (!impl_->server.bind_to_port(impl_->cfg.bind_address, impl_->cfg.port)) {
            throw IoError("cannot bind scoring service");
        }
        impl_->bound_port = impl_->cfg.port;
    }
    if (impl_->bound_port <= 0) throw IoError("cannot bind scoring service");
    impl_->serve_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->bound_port;
}

void ScoreService::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
    if (impl_->serve_thread.joinable()) impl_->serve_thread.join();
}

std::string ScoreService::bundle_version() const {
    return impl_->current_bundle()->bundle_version;
}

std::uint64_t ScoreService::audit_dropped() const {
    return impl_->audit ? impl_->audit->dropped() : 0;
}

}  // namespace moatplus
