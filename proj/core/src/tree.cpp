#include "moatplus/tree.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "moatplus/errors.hpp"
#include "moatplus/rng.hpp"

namespace moatplus {

using nlohmann::json;

bool feature_missing(double v) { return std::isnan(v); }

namespace {

constexpr const char* kModelVersion = "1";
constexpr double kMinGain = 1e-12;

struct SplitChoice {
    double gain = -1.0;
    int feature = -1;
    double threshold = 0.0;
    bool missing_left = true;
};

struct TrainContext {
    const Dataset* data;
    std::vector<double> weights;  // per-class
    int max_depth;
    int min_leaf;
};

double gini(std::span<const double> class_mass, double total) {
    if (total <= 0.0) return 0.0;
    double acc = 0.0;
    for (double m : class_mass) {
        const double f = m / total;
        acc += f * f;
    }
    return 1.0 - acc;
}

class TreeBuilder {
public:
    TreeBuilder(const TrainContext& ctx, Rng& rng, int feature_subsample)
        : ctx_(ctx), rng_(rng), feature_subsample_(feature_subsample) {}

    DecisionTree build(std::vector<int> row_indices) {
        DecisionTree tree;
        tree.n_classes = ctx_.data->n_classes;
        tree.feature_names = ctx_.data->feature_names;
        grow(tree, std::move(row_indices), 0);
        return tree;
    }

private:
    int grow(DecisionTree& tree, std::vector<int> rows, int depth) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        std::vector<std::int64_t> counts(ctx_.data->n_classes, 0);
        for (int r : rows) counts[ctx_.data->labels[r]] += 1;
        const bool pure =
            std::count_if(counts.begin(), counts.end(), [](std::int64_t c) { return c > 0; }) <= 1;

        SplitChoice split;
        if (!pure && depth < ctx_.max_depth &&
            static_cast<int>(rows.size()) >= 2 * ctx_.min_leaf) {
            split = best_split(rows);
        }

        if (split.feature < 0 || split.gain <= kMinGain) {
            tree.nodes[node_id].counts = std::move(counts);
            return node_id;
        }

        std::vector<int> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        for (int r : rows) {
            const double v = (*ctx_.data).rows[r][split.feature];
            const bool go_left = feature_missing(v) ? split.missing_left : v < split.threshold;
            (go_left ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        tree.nodes[node_id].feature = split.feature;
        tree.nodes[node_id].threshold = split.threshold;
        tree.nodes[node_id].missing_left = split.missing_left;
        const int left_id = grow(tree, std::move(left), depth + 1);
        tree.nodes[node_id].left = left_id;
        const int right_id = grow(tree, std::move(right), depth + 1);
        tree.nodes[node_id].right = right_id;
        return node_id;
    }

    std::vector<int> candidate_features() {
        const int d = static_cast<int>(ctx_.data->feature_names.size());
        std::vector<int> feats(d);
        std::iota(feats.begin(), feats.end(), 0);
        if (feature_subsample_ <= 0 || feature_subsample_ >= d) return feats;
        // Partial Fisher-Yates, then sorted so tie-breaking stays index-ordered.
        for (int i = 0; i < feature_subsample_; ++i) {
            const int j = i + static_cast<int>(rng_.below(static_cast<std::uint64_t>(d - i)));
            std::swap(feats[i], feats[j]);
        }
        feats.resize(feature_subsample_);
        std::sort(feats.begin(), feats.end());
        return feats;
    }

    SplitChoice best_split(const std::vector<int>& rows) {
        const int k = ctx_.data->n_classes;
        std::vector<double> node_mass(k, 0.0);
        for (int r : rows) node_mass[ctx_.data->labels[r]] += ctx_.weights[ctx_.data->labels[r]];
        const double node_total = std::accumulate(node_mass.begin(), node_mass.end(), 0.0);
        const double node_impurity = gini(node_mass, node_total);

        SplitChoice best;
        std::vector<std::pair<double, int>> present;  // (value, label)
        std::vector<double> missing_mass(k);
        std::vector<double> prefix(k), left_mass(k), right_mass(k);

        for (int f : candidate_features()) {
            present.clear();
            std::fill(missing_mass.begin(), missing_mass.end(), 0.0);
            int n_missing = 0;
            for (int r : rows) {
                const double v = (*ctx_.data).rows[r][f];
                if (feature_missing(v)) {
                    missing_mass[ctx_.data->labels[r]] += ctx_.weights[ctx_.data->labels[r]];
                    ++n_missing;
                } else {
                    present.emplace_back(v, ctx_.data->labels[r]);
                }
            }
            if (present.size() < 2) continue;
            std::sort(present.begin(), present.end());

            std::fill(prefix.begin(), prefix.end(), 0.0);
            for (std::size_t i = 0; i + 1 < present.size(); ++i) {
                prefix[present[i].second] += ctx_.weights[present[i].second];
                if (present[i].first == present[i + 1].first) continue;
                const double threshold =
                    present[i].first + (present[i + 1].first - present[i].first) / 2.0;
                const int n_left_present = static_cast<int>(i) + 1;
                const int n_right_present = static_cast<int>(present.size()) - n_left_present;

                // Missing rows attach to the side yielding lower post-split
                // impurity; both routings are evaluated when missing rows
                // exist, otherwise the lower-impurity child takes them.
                const int sides = n_missing > 0 ? 2 : 1;
                for (int missing_side = 0; missing_side < sides; ++missing_side) {
                    const bool missing_left = missing_side == 0;
                    const int n_left = n_left_present + (missing_left ? n_missing : 0);
                    const int n_right = n_right_present + (missing_left ? 0 : n_missing);
                    if (n_left < ctx_.min_leaf || n_right < ctx_.min_leaf) continue;
                    for (int c = 0; c < k; ++c) {
                        left_mass[c] = prefix[c] + (missing_left ? missing_mass[c] : 0.0);
                        right_mass[c] = node_mass[c] - left_mass[c];
                    }
                    const double wl =
                        std::accumulate(left_mass.begin(), left_mass.end(), 0.0);
                    const double wr =
                        std::accumulate(right_mass.begin(), right_mass.end(), 0.0);
                    const double gini_left = gini(left_mass, wl);
                    const double gini_right = gini(right_mass, wr);
                    const double child = (wl * gini_left + wr * gini_right) / (wl + wr);
                    const double gain = node_impurity - child;
                    // Strict improvement keeps the first (lowest feature,
                    // lowest threshold, missing-left) candidate on ties.
                    if (gain > best.gain + kMinGain ||
                        (best.feature < 0 && gain > best.gain)) {
                        best.gain = gain;
                        best.feature = f;
                        best.threshold = threshold;
                        best.missing_left =
                            n_missing > 0 ? missing_left : gini_left <= gini_right;
                    }
                }
            }
        }
        return best;
    }

    const TrainContext& ctx_;
    Rng& rng_;
    int feature_subsample_;
};

std::vector<double> leaf_probabilities(const TreeNode& leaf, int n_classes) {
    std::int64_t n = 0;
    for (std::int64_t c : leaf.counts) n += c;
    std::vector<double> probs(n_classes);
    const double denom = static_cast<double>(n + n_classes);
    for (int c = 0; c < n_classes; ++c) {
        probs[c] = static_cast<double>(leaf.counts[c] + 1) / denom;
    }
    return probs;
}

void check_row_arity(const FeatureRow& row, std::size_t expected) {
    if (row.size() != expected) {
        throw SchemaError("feature row arity " + std::to_string(row.size()) +
                          " does not match model arity " + std::to_string(expected));
    }
}

json tree_nodes_to_json(const DecisionTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
        if (n.is_leaf()) {
            nodes.push_back(json{{"counts", n.counts}});
        } else {
            nodes.push_back(json{{"f", n.feature},
                                 {"v", n.threshold},
                                 {"mleft", n.missing_left},
                                 {"l", n.left},
                                 {"r", n.right}});
        }
    }
    return nodes;
}

DecisionTree tree_nodes_from_json(const json& nodes, int n_classes,
                                  const std::vector<std::string>& features, std::uint64_t seed) {
    DecisionTree tree;
    tree.n_classes = n_classes;
    tree.feature_names = features;
    tree.seed = seed;
    if (!nodes.is_array() || nodes.empty()) {
        throw ModelBundleError("model document has no nodes");
    }
    tree.nodes.reserve(nodes.size());
    for (const auto& jn : nodes) {
        TreeNode n;
        if (jn.contains("counts")) {
            n.counts = jn.at("counts").get<std::vector<std::int64_t>>();
            if (static_cast<int>(n.counts.size()) != n_classes) {
                throw ModelBundleError("leaf count arity mismatch");
            }
        } else {
            n.feature = jn.at("f").get<int>();
            n.threshold = jn.at("v").get<double>();
            n.missing_left = jn.at("mleft").get<bool>();
            n.left = jn.at("l").get<int>();
            n.right = jn.at("r").get<int>();
            if (n.feature < 0 || n.feature >= static_cast<int>(features.size())) {
                throw ModelBundleError("split feature index out of range");
            }
        }
        tree.nodes.push_back(std::move(n));
    }
    // Validate index links before anything walks the tree.
    const int size = static_cast<int>(tree.nodes.size());
    for (const auto& n : tree.nodes) {
        if (n.is_leaf()) continue;
        if (n.left < 0 || n.left >= size || n.right < 0 || n.right >= size) {
            throw ModelBundleError("node child index out of range");
        }
    }
    return tree;
}

}  // namespace

std::vector<double> DecisionTree::predict_proba(const FeatureRow& row) const {
    return leaf_probabilities(nodes[leaf_index(row)], n_classes);
}

int DecisionTree::leaf_index(const FeatureRow& row) const {
    check_row_arity(row, feature_names.size());
    int at = 0;
    while (!nodes[at].is_leaf()) {
        const double v = row[nodes[at].feature];
        const bool go_left = feature_missing(v) ? nodes[at].missing_left : v < nodes[at].threshold;
        at = go_left ? nodes[at].left : nodes[at].right;
    }
    return at;
}

std::vector<double> RandomForest::predict_proba(const FeatureRow& row) const {
    if (trees.empty()) throw SchemaError("forest has no trees");
    std::vector<double> acc(n_classes, 0.0);
    for (const auto& tree : trees) {
        const auto p = tree.predict_proba(row);
        for (int c = 0; c < n_classes; ++c) acc[c] += p[c];
    }
    for (double& v : acc) v /= static_cast<double>(trees.size());
    return acc;
}

std::vector<double> balanced_class_weights(std::span<const int> labels, int n_classes) {
    std::vector<double> freq(n_classes, 0.0);
    for (int l : labels) freq[l] += 1.0;
    std::vector<double> weights(n_classes, 1.0);
    double mean = 0.0;
    int seen = 0;
    for (int c = 0; c < n_classes; ++c) {
        if (freq[c] > 0.0) {
            weights[c] = static_cast<double>(labels.size()) / (n_classes * freq[c]);
            mean += weights[c];
            ++seen;
        }
    }
    if (seen > 0) {
        mean /= seen;
        for (double& w : weights) w /= mean;
    }
    return weights;
}

DecisionTree train_decision_tree(const Dataset& data, const TreeConfig& cfg, std::uint64_t seed) {
    if (data.rows.empty()) throw TrainError("cannot train a tree on zero rows");
    if (data.rows.size() != data.labels.size()) throw TrainError("rows/labels size mismatch");

    TrainContext ctx;
    ctx.data = &data;
    ctx.weights = cfg.class_weights.empty() ? std::vector<double>(data.n_classes, 1.0)
                                            : cfg.class_weights;
    if (static_cast<int>(ctx.weights.size()) != data.n_classes) {
        throw TrainError("class weight arity mismatch");
    }
    ctx.max_depth = cfg.max_depth;
    ctx.min_leaf = std::max(1, cfg.min_leaf);

    Rng rng(seed);
    TreeBuilder builder(ctx, rng, 0);
    std::vector<int> all(data.rows.size());
    std::iota(all.begin(), all.end(), 0);
    DecisionTree tree = builder.build(std::move(all));
    tree.seed = seed;
    return tree;
}

RandomForest train_random_forest(const Dataset& data, const ForestConfig& cfg,
                                 std::uint64_t seed, int threads) {
    if (data.rows.empty()) throw TrainError("cannot train a forest on zero rows");
    if (cfg.n_trees < 1) throw TrainError("forest needs at least one tree");

    TrainContext ctx;
    ctx.data = &data;
    ctx.weights = cfg.class_weights.empty() ? std::vector<double>(data.n_classes, 1.0)
                                            : cfg.class_weights;
    if (static_cast<int>(ctx.weights.size()) != data.n_classes) {
        throw TrainError("class weight arity mismatch");
    }
    ctx.max_depth = cfg.max_depth;
    ctx.min_leaf = std::max(1, cfg.min_leaf);

    const int d = static_cast<int>(data.feature_names.size());
    const int subsample = cfg.feature_subsample > 0
                              ? std::min(cfg.feature_subsample, d)
                              : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));

    RandomForest forest;
    forest.n_classes = data.n_classes;
    forest.feature_names = data.feature_names;
    forest.seed = seed;
    forest.trees.resize(cfg.n_trees);

    const std::size_t n = data.rows.size();
    std::vector<std::vector<char>> in_bag;
    if (cfg.bootstrap) in_bag.assign(cfg.n_trees, std::vector<char>(n, 0));

    auto train_one = [&](int t) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(t));
        std::vector<int> rows;
        rows.reserve(n);
        if (cfg.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) {
                const int pick = static_cast<int>(rng.below(n));
                rows.push_back(pick);
                in_bag[t][pick] = 1;
            }
        } else {
            rows.resize(n);
            std::iota(rows.begin(), rows.end(), 0);
        }
        TreeBuilder builder(ctx, rng, subsample);
        DecisionTree tree = builder.build(std::move(rows));
        tree.seed = rng.next_u64();  // recorded for reference only
        forest.trees[t] = std::move(tree);
    };

    const int workers = std::max(1, std::min<int>(threads, cfg.n_trees));
    if (workers == 1) {
        for (int t = 0; t < cfg.n_trees; ++t) train_one(t);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int t = next.fetch_add(1); t < cfg.n_trees; t = next.fetch_add(1)) {
                    train_one(t);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    if (cfg.bootstrap) {
        // Out-of-bag accuracy over rows left out by at least one tree.
        std::size_t evaluated = 0, correct = 0;
        std::vector<double> acc(data.n_classes);
        for (std::size_t i = 0; i < n; ++i) {
            std::fill(acc.begin(), acc.end(), 0.0);
            int voters = 0;
            for (int t = 0; t < cfg.n_trees; ++t) {
                if (in_bag[t][i]) continue;
                const auto p = forest.trees[t].predict_proba(data.rows[i]);
                for (int c = 0; c < data.n_classes; ++c) acc[c] += p[c];
                ++voters;
            }
            if (voters == 0) continue;
            const int pred = static_cast<int>(
                std::max_element(acc.begin(), acc.end()) - acc.begin());
            ++evaluated;
            correct += pred == data.labels[i];
        }
        if (evaluated > 0) {
            forest.oob_estimate = static_cast<double>(correct) / static_cast<double>(evaluated);
        }
    }
    return forest;
}

std::vector<double> Classifier::predict_proba(const FeatureRow& row) const {
    return std::visit([&](const auto& m) { return m.predict_proba(row); }, model_);
}

int Classifier::n_classes() const {
    return std::visit([](const auto& m) { return m.n_classes; }, model_);
}

const std::vector<std::string>& Classifier::feature_names() const {
    return std::visit([](const auto& m) -> const std::vector<std::string>& {
        return m.feature_names;
    }, model_);
}

std::string serialize_model(const Classifier& model) {
    json j;
    j["version"] = kModelVersion;
    j["n_classes"] = model.n_classes();
    j["features"] = model.feature_names();
    if (model.is_forest()) {
        const auto& forest = model.forest();
        j["kind"] = "forest";
        j["seed"] = forest.seed;
        json trees = json::array();
        for (const auto& t : forest.trees) trees.push_back(tree_nodes_to_json(t));
        j["trees"] = std::move(trees);
        if (forest.oob_estimate) j["oob"] = *forest.oob_estimate;
    } else {
        const auto& tree = model.tree();
        j["kind"] = "tree";
        j["seed"] = tree.seed;
        j["nodes"] = tree_nodes_to_json(tree);
    }
    return j.dump();
}

Classifier deserialize_model(const std::string& bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::exception& e) {
        throw ModelBundleError(std::string("unreadable model document: ") + e.what());
    }
    try {
        if (j.at("version").get<std::string>() != kModelVersion) {
            throw ModelBundleError("unsupported model document version");
        }
        const int n_classes = j.at("n_classes").get<int>();
        if (n_classes < 2) throw ModelBundleError("model must have at least two classes");
        const auto features = j.at("features").get<std::vector<std::string>>();
        const auto seed = j.value("seed", std::uint64_t{0});
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "tree") {
            return Classifier(tree_nodes_from_json(j.at("nodes"), n_classes, features, seed));
        }
        if (kind == "forest") {
            RandomForest forest;
            forest.n_classes = n_classes;
            forest.feature_names = features;
            forest.seed = seed;
            if (j.contains("oob")) forest.oob_estimate = j.at("oob").get<double>();
            for (const auto& nodes : j.at("trees")) {
                forest.trees.push_back(tree_nodes_from_json(nodes, n_classes, features, seed));
            }
            if (forest.trees.empty()) throw ModelBundleError("forest document has no trees");
            return Classifier(std::move(forest));
        }
        throw ModelBundleError("unknown model kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw ModelBundleError(std::string("model document missing fields: ") + e.what());
    }
}

}  // namespace moatplus
