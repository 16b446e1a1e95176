#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "moatplus/audit.hpp"
#include "moatplus/bundle.hpp"

namespace moatplus {

struct ServerConfig {
    std::string bind_address = "127.0.0.1";
    int port = 8080;  // 0 -> pick an ephemeral port
    std::string bundle_path;
    std::string audit_path;  // empty -> no audit log
    std::size_t audit_capacity = 8192;
};

/// Real-time scoring service. Requests score against a shared immutable
/// bundle; /v1/reload swaps the bundle atomically, so every response is
/// produced entirely by one bundle version.
class ScoreService {
public:
    explicit ScoreService(ServerConfig cfg);
    ~ScoreService();

    /// Blocks serving until stop() is called. Throws on bind failure.
    void run();

    /// Starts serving on a background thread; returns the bound port.
    int start();
    void stop();

    std::string bundle_version() const;
    std::uint64_t audit_dropped() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace moatplus
