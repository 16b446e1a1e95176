#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "moatplus/event_json.hpp"
#include "moatplus/pipeline.hpp"
#include "moatplus/server.hpp"
#include "moatplus/synthetic.hpp"

using namespace moatplus;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ServedFixture {
    fs::path dir;
    Catalog catalog;
    std::string version;

    ServedFixture() {
        GeneratorConfig gen;
        gen.n_items = 8000;
        gen.seed = 606;
        catalog = generate_catalog(gen);
        inject_anomalies(catalog.events, catalog.truths, gen);
        TrainConfig cfg;
        cfg.seed = 607;
        cfg.aggregator.forest.n_trees = 15;
        cfg.threads = 2;
        auto [bundle, report] = train_bundle(catalog.events, catalog.truths, cfg);
        dir = fs::temp_directory_path() / "moatplus-server-bundle";
        fs::remove_all(dir);
        save_bundle(bundle, dir.string());
        version = bundle.bundle_version;
    }
};

ServedFixture& served() {
    static ServedFixture f;
    return f;
}

}  // namespace

TEST_SUITE("scoring_service") {

TEST_CASE("score, health, reload and error paths over HTTP") {
    auto& f = served();
    const fs::path audit_log = fs::temp_directory_path() / "moatplus-server-audit.jsonl";
    fs::remove(audit_log);

    ServerConfig cfg;
    cfg.bundle_path = f.dir.string();
    cfg.port = 0;  // ephemeral
    cfg.audit_path = audit_log.string();
    ScoreService service(cfg);
    const int port = service.start();
    REQUIRE(port > 0);

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);

    SUBCASE("health reports the bundle version") {
        const auto res = client.Get("/v1/health");
        REQUIRE(res);
        CHECK(res->status == 200);
        const json j = json::parse(res->body);
        CHECK(j.at("status") == "ok");
        CHECK(j.at("bundle_version") == f.version);
    }

    SUBCASE("valid events score 200 with the wire schema") {
        const std::string body = serialize_event(f.catalog.events[0]);
        const auto res = client.Post("/v1/score", body, "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        const json j = json::parse(res->body);
        CHECK(j.contains("optimal_anchor"));
        CHECK(j.contains("weights"));
        CHECK(j.contains("anomaly_flags"));
        CHECK(j.contains("ceiling_price"));
        CHECK(j.at("status") == "ok");
        CHECK(j.at("bundle_version") == f.version);
        CHECK(j.at("latency_micros").get<long long>() > 0);

        // Identical request twice -> identical scoring payload.
        const auto res2 = client.Post("/v1/score", body, "application/json");
        REQUIRE(res2);
        json a = json::parse(res->body), b = json::parse(res2->body);
        a.erase("latency_micros");
        b.erase("latency_micros");
        CHECK(a == b);
    }

    SUBCASE("malformed bodies get a 400 with an error code") {
        const auto res = client.Post("/v1/score", "{broken", "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
        const json j = json::parse(res->body);
        CHECK(j.contains("error"));

        const auto res2 = client.Post("/v1/score",
                                      R"({"item_id":"x","ts":"2025-01-01T00:00:00Z",)"
                                      R"("anchors":{"msrp":-4}})",
                                      "application/json");
        REQUIRE(res2);
        CHECK(res2->status == 400);
    }

    SUBCASE("reload swaps the bundle atomically and reports the version") {
        const auto res = client.Post("/v1/reload", "{}", "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        CHECK(json::parse(res->body).at("bundle_version") == f.version);

        const auto bad = client.Post("/v1/reload", R"({"path":"/nope"})", "application/json");
        REQUIRE(bad);
        CHECK(bad->status == 500);
        // Service still answers with the previous bundle.
        const auto health = client.Get("/v1/health");
        REQUIRE(health);
        CHECK(json::parse(health->body).at("bundle_version") == f.version);
    }

    SUBCASE("audit records accumulate for scored events") {
        for (int i = 0; i < 20; ++i) {
            const auto res = client.Post("/v1/score", serialize_event(f.catalog.events[i]),
                                         "application/json");
            REQUIRE(res);
            CHECK(res->status == 200);
        }
        // The audit consumer is asynchronous; poll briefly for the lines.
        int lines = 0;
        for (int attempt = 0; attempt < 100 && lines < 20; ++attempt) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            std::ifstream in(audit_log);
            lines = 0;
            std::string line;
            while (std::getline(in, line)) ++lines;
        }
        CHECK(lines >= 20);
    }

    service.stop();
}

}  // TEST_SUITE
