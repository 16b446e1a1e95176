// Acceptance suite: runs every release criterion against the seeded
// synthetic corpus and prints one PASS/FAIL line per criterion.
//
// Usage: acceptance_tests [path-to-cli-binary]
// The CLI path is needed by the determinism criterion; everything else runs
// in-process.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "moatplus/aggregator.hpp"
#include "moatplus/audit.hpp"
#include "moatplus/bundle.hpp"
#include "moatplus/detector.hpp"
#include "moatplus/evaluation.hpp"
#include "moatplus/event_json.hpp"
#include "moatplus/features.hpp"
#include "moatplus/metrics.hpp"
#include "moatplus/pipeline.hpp"
#include "moatplus/rng.hpp"
#include "moatplus/scoring.hpp"
#include "moatplus/server.hpp"
#include "moatplus/synthetic.hpp"
#include "moatplus/tree.hpp"
#include "moatplus/weak_supervision.hpp"

using namespace moatplus;
namespace fs = std::filesystem;

namespace {

struct Harness {
    int failures = 0;

    void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << criterion << " — " << name
                  << " — " << detail << '\n'
                  << std::flush;
        failures += !pass;
    }
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(prec);
    ss << v;
    return ss.str();
}

// ---------------------------------------------------------------------------
// Criterion 1: equation implementations vs independent brute-force references
// ---------------------------------------------------------------------------

bool run_equation_oracles(std::string& detail) {
    Rng rng(1001);
    int checked = 0;

    // Log-ratio and standardization transforms.
    for (int i = 0; i < 1000; ++i) {
        AnchorVector anchors;
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            if (rng.bernoulli(0.7)) anchors.values[s] = rng.uniform(0.5, 500.0);
        }
        const double x0 = rng.uniform(0.5, 500.0);
        const double c = rng.uniform(0.0, 2.0);
        const auto r = markup_ratios(anchors, x0, c);
        StandardizationParams p;
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            p.means[s] = rng.uniform(-1, 1);
            p.stds[s] = rng.uniform(0.1, 2.0);
        }
        const auto m = standardize(r, p);
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            if (!anchors.values[s]) {
                if (r[s] || m[s]) return false;
                continue;
            }
            const double want_r = std::log((*anchors.values[s] + c) / (x0 + c));
            if (std::abs(*r[s] - want_r) > 1e-12) return false;
            const double want_m = (want_r - p.means[s]) / p.stds[s];
            if (std::abs(*m[s] - want_m) > 1e-12) return false;
            ++checked;
        }
    }

    // Kernel density vs a naive loop.
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> samples(1 + rng.below(5));
        for (auto& s : samples) s = rng.uniform(-3, 3);
        const double q = rng.uniform(-4, 4);
        const double h = rng.uniform(0.1, 1.5);
        double naive = 0.0;
        for (double s : samples) {
            const double u = (q - s) / h;
            naive += std::exp(-0.5 * u * u) / std::sqrt(2.0 * 3.14159265358979323846);
        }
        naive /= samples.size() * h;
        if (std::abs(kde_density(samples, q, h) - naive) > 1e-12) return false;
    }

    // Point checks: the single-sample peak and numeric normalization.
    if (std::abs(kde_density(std::vector<double>{0.0}, 0.0, 0.5) - 0.7978846) > 1e-6) {
        return false;
    }
    {
        std::vector<double> samples{-2.5, -1.0, 0.3, 2.9};
        double integral = 0.0;
        const int n = 4001;
        const double lo = -10, hi = 10, step = (hi - lo) / (n - 1);
        for (int i = 0; i < n; ++i) {
            integral += ((i == 0 || i == n - 1) ? 0.5 : 1.0) *
                        kde_density(samples, lo + i * step, 0.5);
        }
        integral *= step;
        if (std::abs(integral - 1.0) > 1e-3) return false;
    }

    // Median absolute percentage error and precise-anchor coverage.
    for (int i = 0; i < 1000; ++i) {
        const int n = 1 + static_cast<int>(rng.below(30));
        std::vector<double> preds(n), aurs(n);
        for (int k = 0; k < n; ++k) {
            aurs[k] = rng.uniform(1, 100);
            preds[k] = rng.uniform(0.5, 150);
        }
        std::vector<double> e(n);
        for (int k = 0; k < n; ++k) e[k] = std::abs(preds[k] - aurs[k]) / aurs[k];
        std::sort(e.begin(), e.end());
        const double want_median = n % 2 ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]);
        if (std::abs(meape(preds, aurs) - want_median) > 1e-12) return false;
        const double t = rng.uniform(0.01, 1.0);
        int hits = 0;
        for (double v : e) hits += v < t;
        if (std::abs(pac(preds, aurs, t) - static_cast<double>(hits) / n) > 1e-12) return false;
    }
    detail = "transforms, kde, meape, pac vs brute force on 1000 instances each (" +
             std::to_string(checked) + " transform cells)";
    return true;
}

// ---------------------------------------------------------------------------
// Criterion 2: density score falls as anchor count grows; fixed bandwidth
// separates a planted outlier at least as well as the rule-of-thumb choice
// ---------------------------------------------------------------------------

double silverman_bandwidth(std::vector<double> xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / std::max(1.0, n - 1));
    std::sort(xs.begin(), xs.end());
    const double q1 = xs[static_cast<std::size_t>(0.25 * (xs.size() - 1))];
    const double q3 = xs[static_cast<std::size_t>(0.75 * (xs.size() - 1))];
    const double spread = std::min(sd, (q3 - q1) / 1.34);
    return std::max(1e-3, 0.9 * spread * std::pow(n, -0.2));
}

bool run_density_behavior(std::string& detail) {
    Rng rng(2002);
    std::array<double, 6> mean_by_k{};
    for (int k = 1; k <= 5; ++k) {
        double acc = 0.0;
        const int trials = 10000;
        for (int t = 0; t < trials; ++t) {
            std::vector<double> samples(k);
            for (auto& s : samples) s = rng.normal();
            for (double s : samples) acc += kde_density(samples, s, 0.5);
        }
        mean_by_k[k] = acc / (trials * k);
    }
    bool decreasing = true;
    for (int k = 2; k <= 5; ++k) decreasing &= mean_by_k[k] < mean_by_k[k - 1];

    // Separation: per-item markup sets (3..5 anchors) whose normal anchors
    // agree to varying degrees, plus one far aberrant markup. Downstream
    // classifiers apply a single split threshold to densities from every
    // item, so the score scales must be comparable across items: measure the
    // fraction of cross-item (normal, aberrant) density pairs that are
    // correctly ordered. A per-item rule-of-thumb bandwidth adapts itself
    // into incomparable scales (tiny h gives even the aberrant point a big
    // self-peak); the fixed bandwidth must order nearly every pair.
    std::vector<double> fixed_normal, fixed_aberrant, silver_normal, silver_aberrant;
    const int sep_trials = 1000;
    for (int t = 0; t < sep_trials; ++t) {
        const int k = 3 + static_cast<int>(rng.below(3));
        const double agreement = rng.bernoulli(0.2) ? 0.02 : rng.uniform(0.2, 0.7);
        std::vector<double> samples(k);
        for (auto& s : samples) s = agreement * rng.normal();
        samples.back() = 8.0 + rng.normal() * 0.3;  // e.g. a 10x shift in markup units

        const double hs = silverman_bandwidth(samples);
        for (int i = 0; i < k; ++i) {
            const bool aberrant = i == k - 1;
            (aberrant ? fixed_aberrant : fixed_normal)
                .push_back(kde_density(samples, samples[i], 0.5));
            (aberrant ? silver_aberrant : silver_normal)
                .push_back(kde_density(samples, samples[i], hs));
        }
    }
    auto separability = [&](const std::vector<double>& normal,
                            const std::vector<double>& aberrant) {
        Rng pair_rng(2003);
        std::int64_t ordered = 0;
        const int n_pairs = 100000;
        for (int i = 0; i < n_pairs; ++i) {
            ordered += normal[pair_rng.below(normal.size())] >
                       aberrant[pair_rng.below(aberrant.size())];
        }
        return static_cast<double>(ordered) / n_pairs;
    };
    const double fixed_sep = separability(fixed_normal, fixed_aberrant);
    const double silver_sep = separability(silver_normal, silver_aberrant);

    // Single-anchor sets score the kernel peak wherever they sit.
    bool k1_stable = true;
    for (int t = 0; t < 100; ++t) {
        const std::vector<double> solo{rng.uniform(-5, 5)};
        k1_stable &= std::abs(kde_density(solo, solo[0], 0.5) - 0.7978846) < 1e-6;
    }

    detail = "mean density k=1..5: ";
    for (int k = 1; k <= 5; ++k) detail += fmt(mean_by_k[k], 3) + (k < 5 ? ", " : "");
    detail += "; cross-item separability fixed=" + fmt(fixed_sep) +
              " silverman=" + fmt(silver_sep);
    return decreasing && k1_stable && fixed_sep >= 0.98 && fixed_sep > silver_sep;
}

// ---------------------------------------------------------------------------
// Criterion 6: service latency and sustained throughput
// ---------------------------------------------------------------------------

bool run_latency(const fs::path& bundle_dir, const std::vector<PriceEvent>& events,
                 std::string& detail) {
    ServerConfig cfg;
    cfg.bundle_path = bundle_dir.string();
    cfg.port = 0;
    cfg.audit_path = (bundle_dir.parent_path() / "latency-audit.jsonl").string();
    ScoreService service(cfg);
    const int port = service.start();

    std::vector<std::string> bodies;
    bodies.reserve(4096);
    for (std::size_t i = 0; i < 4096 && i < events.size(); ++i) {
        bodies.push_back(serialize_event(events[i]));
    }

    constexpr int kThreads = 4;
    constexpr double kTotalRate = 1250.0;  // paced just above the floor
    constexpr double kSeconds = 60.0;
    const int per_thread = static_cast<int>(kTotalRate / kThreads * kSeconds);

    std::vector<std::vector<double>> latencies(kThreads);
    std::vector<int> errors(kThreads, 0);
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::thread> pool;
    for (int w = 0; w < kThreads; ++w) {
        pool.emplace_back([&, w] {
            httplib::Client client("127.0.0.1", port);
            client.set_connection_timeout(5);
            client.set_read_timeout(5);
            client.set_keep_alive(true);
            client.set_tcp_nodelay(true);
            auto& lat = latencies[w];
            lat.reserve(per_thread);
            const double interval_ns = 1e9 * kThreads / kTotalRate;
            for (int i = 0; i < per_thread; ++i) {
                const auto due = start + std::chrono::nanoseconds(
                                             static_cast<std::int64_t>(interval_ns * i));
                std::this_thread::sleep_until(due);
                const auto t0 = std::chrono::steady_clock::now();
                const auto res = client.Post("/v1/score",
                                             bodies[(w * per_thread + i) % bodies.size()],
                                             "application/json");
                const auto t1 = std::chrono::steady_clock::now();
                if (!res || res->status != 200) {
                    errors[w] += 1;
                    continue;
                }
                lat.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            }
        });
    }
    for (auto& t : pool) t.join();
    const double wall = elapsed_s(start);
    service.stop();

    std::vector<double> all;
    int total_errors = 0;
    for (int w = 0; w < kThreads; ++w) {
        total_errors += errors[w];
        all.insert(all.end(), latencies[w].begin(), latencies[w].end());
    }
    if (all.empty()) {
        detail = "no successful requests";
        return false;
    }
    std::sort(all.begin(), all.end());
    const double p99 = all[static_cast<std::size_t>(0.99 * (all.size() - 1))];
    const double p50 = all[all.size() / 2];
    const double achieved = static_cast<double>(all.size()) / wall;

    detail = "p50=" + fmt(p50, 3) + "ms p99=" + fmt(p99, 3) + "ms rate=" + fmt(achieved, 1) +
             "/s over " + fmt(wall, 1) + "s errors=" + std::to_string(total_errors);
    return total_errors == 0 && p99 <= 12.42 && achieved >= 1200.0;
}

// ---------------------------------------------------------------------------
// Criterion 7: property suites
// ---------------------------------------------------------------------------

bool run_properties(const ModelBundle& bundle, const std::vector<PriceEvent>& events,
                    std::string& detail) {
    std::ostringstream why;

    // Masking presence-rate convergence at n = 10,000.
    {
        Rng rng(7001);
        std::vector<LabeledRow> rows;
        StandardizationParams identity;
        identity.means = {0, 0, 0, 0, 0};
        identity.stds = {1, 1, 1, 1, 1};
        for (int i = 0; i < 10000; ++i) {
            PriceEvent e;
            e.item_id = "m-" + std::to_string(i);
            e.category_id = "c";
            for (std::size_t s = 0; s < kAnchorArity; ++s) e.anchors.values[s] = rng.uniform(5, 50);
            e.offers = {10.0, 11.0};
            LabeledRow row;
            row.event = e;
            row.features = compute_features(e, identity, FeatureConfig{});
            rows.push_back(std::move(row));
        }
        SparsityProfile profile;
        profile.presence_rate = {0.91, 0.42, 0.73, 0.55, 0.84};
        const auto masked = mask_anchors(std::move(rows), profile, 7002, identity, FeatureConfig{});
        for (std::size_t s = 0; s < kAnchorArity; ++s) {
            double rate = 0;
            for (const auto& r : masked) rate += r.event.anchors.values[s].has_value();
            rate /= masked.size();
            if (std::abs(rate - profile.presence_rate[s]) >= 0.01) {
                why << "masking rate slot " << s << " off: " << rate << "; ";
            }
        }
    }

    // Weight simplex and convex-combination bounds on scored events.
    {
        int checked = 0;
        for (const auto& event : events) {
            if (checked >= 2000) break;
            const ScoreResult r = score(event, bundle);
            if (r.status != ScoreStatus::Ok) continue;
            ++checked;
            double sum = 0, lo = 1e300, hi = 0;
            for (std::size_t s = 0; s < kAnchorArity; ++s) {
                if (r.weights[s] < 0) why << "negative weight; ";
                if (r.weights[s] > 0 && r.anomaly_flags[s]) why << "flagged anchor weighted; ";
                if (r.weights[s] > 0) {
                    lo = std::min(lo, *event.anchors.values[s]);
                    hi = std::max(hi, *event.anchors.values[s]);
                }
                sum += r.weights[s];
            }
            if (std::abs(sum - 1.0) > 1e-9) why << "weights sum " << sum << "; ";
            if (*r.optimal_anchor < lo - 1e-9 || *r.optimal_anchor > hi + 1e-9) {
                why << "optimal anchor outside hull; ";
            }
        }
        if (checked < 1000) why << "too few scoreable events (" << checked << "); ";
    }

    // Tie-break uniformity (chi-squared, p > 0.01).
    {
        AnchorVector tied;
        tied.values[0] = 19.0;
        tied.values[1] = 23.0;
        int first = 0;
        const int n = 10000;
        for (int seed = 0; seed < n; ++seed) {
            Rng rng = Rng::derive(7003, seed);
            first += derive_target(tied, 21.0, rng) == 0;
        }
        const double expected = n / 2.0;
        const double chi2 = (first - expected) * (first - expected) / expected * 2.0;
        if (chi2 >= 6.635) why << "tie chi2 " << chi2 << "; ";
    }

    // Root split optimality vs exhaustive enumeration on small instances.
    {
        Rng rng(7004);
        for (int trial = 0; trial < 40; ++trial) {
            const int n = 8 + static_cast<int>(rng.below(57));
            const int nf = 1 + static_cast<int>(rng.below(3));
            Dataset d;
            d.n_classes = 2;
            for (int f = 0; f < nf; ++f) d.feature_names.push_back("f" + std::to_string(f));
            for (int i = 0; i < n; ++i) {
                FeatureRow row(nf);
                for (auto& v : row) {
                    v = rng.bernoulli(0.15) ? std::numeric_limits<double>::quiet_NaN()
                                            : rng.uniform(-2, 2);
                }
                d.rows.push_back(std::move(row));
                d.labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
            }
            TreeConfig cfg;
            cfg.max_depth = 1;
            cfg.min_leaf = 1;
            const auto tree = train_decision_tree(d, cfg, 7);

            // Exhaustive enumeration of (feature, midpoint, missing side).
            double best = 0.0;
            std::vector<double> parent(2, 0);
            for (int i = 0; i < n; ++i) parent[d.labels[i]] += 1;
            auto gini = [](const std::vector<double>& m) {
                const double tot = m[0] + m[1];
                if (tot <= 0) return 0.0;
                return 1.0 - (m[0] / tot) * (m[0] / tot) - (m[1] / tot) * (m[1] / tot);
            };
            const double parent_gini = gini(parent);
            for (int f = 0; f < nf; ++f) {
                std::vector<double> vals;
                for (int i = 0; i < n; ++i) {
                    if (!std::isnan(d.rows[i][f])) vals.push_back(d.rows[i][f]);
                }
                std::sort(vals.begin(), vals.end());
                vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
                for (std::size_t v = 0; v + 1 < vals.size(); ++v) {
                    const double thr = vals[v] + (vals[v + 1] - vals[v]) / 2;
                    for (bool mleft : {true, false}) {
                        std::vector<double> l(2, 0), rgt(2, 0);
                        for (int i = 0; i < n; ++i) {
                            const double x = d.rows[i][f];
                            const bool left = std::isnan(x) ? mleft : x < thr;
                            (left ? l : rgt)[d.labels[i]] += 1;
                        }
                        const double wl = l[0] + l[1], wr = rgt[0] + rgt[1];
                        if (wl < 1 || wr < 1) continue;
                        best = std::max(best, parent_gini - (wl * gini(l) + wr * gini(rgt)) /
                                                                (wl + wr));
                    }
                }
            }
            double got = 0.0;
            if (!tree.nodes[0].is_leaf()) {
                const auto& root = tree.nodes[0];
                std::vector<double> l(2, 0), rgt(2, 0);
                for (int i = 0; i < n; ++i) {
                    const double x = d.rows[i][root.feature];
                    const bool left = std::isnan(x) ? root.missing_left : x < root.threshold;
                    (left ? l : rgt)[d.labels[i]] += 1;
                }
                const double wl = l[0] + l[1], wr = rgt[0] + rgt[1];
                got = parent_gini - (wl * gini(l) + wr * gini(rgt)) / (wl + wr);
            }
            if (std::abs(got - best) > 1e-9) {
                why << "root split gain " << got << " vs brute " << best << "; ";
                break;
            }
        }
    }

    // Forest prediction equals the mean of member trees; serialization
    // round-trips with identical predictions.
    {
        Rng rng(7005);
        Dataset d;
        d.n_classes = 3;
        d.feature_names = {"a", "b", "c", "d"};
        for (int i = 0; i < 1000; ++i) {
            FeatureRow row(4);
            for (auto& v : row) {
                v = rng.bernoulli(0.1) ? std::numeric_limits<double>::quiet_NaN()
                                       : rng.uniform(-3, 3);
            }
            d.rows.push_back(std::move(row));
            d.labels.push_back(static_cast<int>(rng.below(3)));
        }
        ForestConfig cfg;
        cfg.n_trees = 20;
        const auto forest = train_random_forest(d, cfg, 7006, 2);
        const Classifier restored = deserialize_model(serialize_model(Classifier(forest)));
        for (int i = 0; i < 1000; ++i) {
            FeatureRow row(4);
            for (auto& v : row) {
                v = rng.bernoulli(0.1) ? std::numeric_limits<double>::quiet_NaN()
                                       : rng.uniform(-3, 3);
            }
            const auto p = forest.predict_proba(row);
            std::vector<double> mean(3, 0.0);
            for (const auto& tree : forest.trees) {
                const auto tp = tree.predict_proba(row);
                for (int c = 0; c < 3; ++c) mean[c] += tp[c];
            }
            for (int c = 0; c < 3; ++c) {
                if (std::abs(p[c] - mean[c] / forest.trees.size()) > 1e-12) {
                    why << "forest != mean of trees; ";
                }
            }
            const auto q = restored.predict_proba(row);
            for (int c = 0; c < 3; ++c) {
                if (p[c] != q[c]) why << "round-trip prediction drift; ";
            }
        }
    }

    // Audit replay reproduces results bit-exactly through score().
    {
        const fs::path log = fs::temp_directory_path() / "moatplus-acceptance-audit.jsonl";
        fs::remove(log);
        {
            AuditQueue audit(std::make_unique<FileAuditSink>(log.string()));
            for (std::size_t i = 0; i < 200 && i < events.size(); ++i) {
                const ScoreResult r = score(events[i], bundle);
                AuditRecord record;
                record.item_id = events[i].item_id;
                record.ts = events[i].ts;
                record.event_json = serialize_event(events[i]);
                record.result_json = score_result_to_json(r, bundle.bundle_version);
                record.bundle_version = bundle.bundle_version;
                audit.push(std::move(record));
            }
            audit.drain();
        }
        std::ifstream in(log);
        std::string line;
        int replayed = 0;
        while (std::getline(in, line)) {
            const AuditRecord record = AuditRecord::from_json(line);
            const ScoreResult now = score(parse_event(record.event_json), bundle);
            if (score_result_to_json(now, bundle.bundle_version) != record.result_json) {
                why << "audit replay mismatch; ";
                break;
            }
            ++replayed;
        }
        if (replayed < 200) why << "audit replay incomplete (" << replayed << "); ";
    }

    detail = why.str().empty() ? "masking, simplex/hull, tie chi2, split oracle, forest mean, "
                                 "round-trips, audit replay all hold"
                               : why.str();
    return why.str().empty();
}

// ---------------------------------------------------------------------------
// Criterion 8: CLI determinism at reduced scale
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

bool files_equal(const fs::path& a, const fs::path& b, std::string& why) {
    if (slurp(a) != slurp(b)) {
        why += a.filename().string() + " differs; ";
        return false;
    }
    return true;
}

bool run_cli_determinism(const std::string& cli, std::string& detail) {
    const fs::path root = fs::temp_directory_path() / "moatplus-acceptance-determinism";
    fs::remove_all(root);
    fs::create_directories(root);

    const fs::path gen_cfg = root / "gen.json";
    std::ofstream(gen_cfg) << R"({"n_items": 8000, "n_categories": 8, "seed": 31415})";
    const fs::path train_cfg = root / "train.json";
    std::ofstream(train_cfg)
        << R"({"seed": 2718, "band_mult": 1.45, "aggregator": {"n_trees": 25}, "threads": 2})";

    auto run_pipeline = [&](const fs::path& dir) -> bool {
        fs::create_directories(dir);
        auto sh = [&](const std::string& cmd) {
            const std::string full = cli + " " + cmd + " 2>> " + (dir / "stderr.log").string();
            return std::system(full.c_str()) == 0;
        };
        const std::string corpus = (dir / "corpus.jsonl").string();
        const std::string truth = (dir / "truth.jsonl").string();
        if (!sh("generate --config " + gen_cfg.string() + " --out " + corpus + " --truth " +
                truth)) {
            return false;
        }
        if (!sh("label --corpus " + corpus + " --truth " + truth + " --config " +
                train_cfg.string() + " --out " + (dir / "lf_report.json").string())) {
            return false;
        }
        if (!sh("train --corpus " + corpus + " --truth " + truth + " --config " +
                train_cfg.string() + " --out " + (dir / "bundle").string() + " --report " +
                (dir / "train_report.json").string())) {
            return false;
        }
        if (!sh("evaluate --corpus " + corpus + " --truth " + truth + " --bundle " +
                (dir / "bundle").string() + " --out " + (dir / "eval.json").string() + " > " +
                (dir / "eval_table.txt").string())) {
            return false;
        }
        // Single-event scoring from the corpus head.
        {
            std::ifstream in(corpus);
            std::string line;
            std::getline(in, line);
            std::ofstream(dir / "event.json") << line << '\n';
        }
        if (!sh("score --event " + (dir / "event.json").string() + " --bundle " +
                (dir / "bundle").string() + " > " + (dir / "score.json").string())) {
            return false;
        }
        if (!sh("bundle inspect --bundle " + (dir / "bundle").string() + " > " +
                (dir / "inspect.txt").string())) {
            return false;
        }
        return true;
    };

    const auto a = root / "run-a", b = root / "run-b";
    if (!run_pipeline(a) || !run_pipeline(b)) {
        detail = "pipeline command failed (see stderr.log under " + root.string() + ")";
        return false;
    }

    std::string why;
    for (const char* name : {"corpus.jsonl", "truth.jsonl", "lf_report.json",
                             "train_report.json", "eval.json", "eval_table.txt", "score.json",
                             "inspect.txt", "bundle/manifest.json", "bundle/aggregator.json"}) {
        files_equal(a / name, b / name, why);
    }
    for (const auto& entry : fs::directory_iterator(a / "bundle" / "detectors")) {
        files_equal(entry.path(), b / "bundle" / "detectors" / entry.path().filename(), why);
    }
    detail = why.empty() ? "generate/label/train/evaluate/score/inspect byte-identical across runs"
                         : why;
    return why.empty();
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    Harness harness;
    const fs::path work = fs::temp_directory_path() / "moatplus-acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    // Criterion 1 — equation oracles.
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool pass = false;
        try {
            pass = run_equation_oracles(detail);
        } catch (const std::exception& e) {
            detail = e.what();
        }
        const double secs = elapsed_s(t0);
        harness.report(1, "equation oracles", pass && secs < 60.0,
                       detail + " (" + fmt(secs, 1) + "s)");
    }

    // Criterion 2 — density vs anchor count, bandwidth separation.
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool pass = false;
        try {
            pass = run_density_behavior(detail);
        } catch (const std::exception& e) {
            detail = e.what();
        }
        const double secs = elapsed_s(t0);
        harness.report(2, "density falls with anchor count", pass && secs < 30.0,
                       detail + " (" + fmt(secs, 1) + "s)");
    }

    // Shared corpus and bundle for criteria 3-7.
    GeneratorConfig gen;
    gen.n_items = 100000;
    gen.n_categories = 20;
    gen.seed = 20240;
    Catalog catalog = generate_catalog(gen);
    inject_anomalies(catalog.events, catalog.truths, gen);

    ModelBundle bundle;
    TrainingReport train_report;
    double train_secs = 0.0;
    {
        const auto t0 = std::chrono::steady_clock::now();
        TrainConfig cfg;
        cfg.seed = 20241;
        cfg.band_mult = 1.45;
        cfg.threads = 2;
        auto [trained, report] = train_bundle(catalog.events, catalog.truths, cfg);
        bundle = std::move(trained);
        train_report = std::move(report);
        train_secs = elapsed_s(t0);
    }
    const fs::path bundle_dir = work / "bundle";
    save_bundle(bundle, bundle_dir.string());

    // Criterion 3 — detector quality at training scale.
    {
        std::string detail = "held-out F1:";
        bool pass = train_report.detectors.size() == 3;
        std::int64_t min_train = INT64_MAX;
        for (const auto& d : train_report.detectors) {
            detail += " " + std::string(kAnchorNames[d.anchor_slot]) + "=" + fmt(d.f1);
            pass &= d.f1 >= 0.80;
            min_train = std::min(min_train, d.n_train);
        }
        detail += "; min train rows " + std::to_string(min_train) + "; train wall " +
                  fmt(train_secs, 1) + "s";
        pass &= min_train >= 48000;  // Table-2 scale
        pass &= train_secs < 600.0;
        harness.report(3, "detector quality analog", pass, detail);
    }

    // Criteria 4 and 5 share one evaluation pass.
    {
        const auto t0 = std::chrono::steady_clock::now();
        EvalConfig eval_cfg;
        eval_cfg.pac_threshold = bundle.pac_threshold;
        eval_cfg.ceiling_multiplier = bundle.ceiling_multiplier;
        std::string detail4, detail5;
        bool pass4 = false, pass5 = false;
        try {
            const auto rows = evaluate_corpus(catalog.events, catalog.truths, bundle, eval_cfg);
            const auto subsets = subset_report(rows, eval_cfg);
            const auto& flagged = subsets[1];
            const auto& all_items = subsets[0];
            const auto& anomalous = subsets[2];

            const bool pac_order = flagged.moatplus.pac > flagged.baseline.pac &&
                                   flagged.baseline.pac > flagged.existing.pac;
            const bool meape_order = flagged.moatplus.meape < flagged.baseline.meape &&
                                     flagged.baseline.meape < flagged.existing.meape;
            const double lift = flagged.moatplus.pac - flagged.baseline.pac;
            pass4 = pac_order && meape_order && lift >= 0.05;
            detail4 = "flagged n=" + std::to_string(flagged.n) + " pac(Mp/B/E)=" +
                      fmt(flagged.moatplus.pac) + "/" + fmt(flagged.baseline.pac) + "/" +
                      fmt(flagged.existing.pac) + " meape=" + fmt(flagged.moatplus.meape) + "/" +
                      fmt(flagged.baseline.meape) + "/" + fmt(flagged.existing.meape) +
                      " lift=" + fmt(lift);

            const double lift_anomalous = anomalous.moatplus.pac - anomalous.existing.pac;
            const double lift_all = all_items.moatplus.pac - all_items.existing.pac;
            pass5 = lift_anomalous > lift_all;
            detail5 = "pac lift over rule-based: anomalous subset " + fmt(lift_anomalous) +
                      " vs all items " + fmt(lift_all);
        } catch (const std::exception& e) {
            detail4 = detail5 = e.what();
        }
        const double secs = elapsed_s(t0);
        harness.report(4, "configuration ordering analog", pass4 && secs < 300.0,
                       detail4 + " (" + fmt(secs, 1) + "s)");
        harness.report(5, "vulnerability-subset lift", pass5, detail5);
    }

    // Criterion 6 — latency/throughput.
    {
        std::string detail;
        bool pass = false;
        try {
            pass = run_latency(bundle_dir, catalog.events, detail);
        } catch (const std::exception& e) {
            detail = e.what();
        }
        harness.report(6, "service latency and throughput", pass, detail);
    }

    // Criterion 7 — property suites.
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool pass = false;
        try {
            pass = run_properties(bundle, catalog.events, detail);
        } catch (const std::exception& e) {
            detail = e.what();
        }
        const double secs = elapsed_s(t0);
        harness.report(7, "property suites", pass && secs < 300.0,
                       detail + " (" + fmt(secs, 1) + "s)");
    }

    // Criterion 8 — CLI determinism.
    {
        std::string detail;
        bool pass = false;
        const auto t0 = std::chrono::steady_clock::now();
        if (cli.empty()) {
            detail = "cli binary path not supplied";
        } else {
            try {
                pass = run_cli_determinism(cli, detail);
            } catch (const std::exception& e) {
                detail = e.what();
            }
        }
        const double secs = elapsed_s(t0);
        harness.report(8, "CLI determinism", pass && secs < 600.0,
                       detail + " (" + fmt(secs, 1) + "s)");
    }

    std::cout << (harness.failures == 0 ? "acceptance: all criteria passed"
                                        : "acceptance: " + std::to_string(harness.failures) +
                                              " criteria failed")
              << '\n';
    return harness.failures == 0 ? 0 : 1;
}
