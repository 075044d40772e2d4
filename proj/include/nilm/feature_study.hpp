#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "nilm/error.hpp"
#include "nilm/rng.hpp"

namespace nilm {

using FeatureMatrix = std::vector<std::vector<double>>;  // row = sample

namespace detail {

inline void check_matrix(const FeatureMatrix& x, const std::vector<int>& y) {
    if (x.empty()) throw ValidationError("empty training set");
    if (x.size() != y.size()) throw ValidationError("feature/label count mismatch");
    for (const auto& row : x) {
        if (row.size() != x[0].size()) throw ValidationError("ragged feature matrix");
        for (double v : row)
            if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
    }
}

inline int num_classes(const std::vector<int>& y) {
    int m = -1;
    for (int v : y) {
        if (v < 0) throw ValidationError("labels must be non-negative integers");
        m = std::max(m, v);
    }
    return m + 1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Mutual information ranking (equal-frequency binning estimator)
// ---------------------------------------------------------------------------

/// MI of one binned feature against discrete labels, in nats.
inline double mutual_information_binned(const std::vector<double>& feature, const std::vector<int>& y,
                                        int n_classes, std::size_t bins) {
    const std::size_t n = feature.size();
    std::vector<double> sorted = feature;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (std::size_t b = 1; b < bins; ++b) {
        double e = sorted[b * n / bins];
        if (edges.empty() || e > edges.back()) edges.push_back(e);  // ties collapse bins
    }
    const std::size_t nb = edges.size() + 1;
    std::vector<double> joint(nb * static_cast<std::size_t>(n_classes), 0.0);
    std::vector<double> pb(nb, 0.0), pc(static_cast<std::size_t>(n_classes), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t b = static_cast<std::size_t>(
            std::upper_bound(edges.begin(), edges.end(), feature[i]) - edges.begin());
        joint[b * static_cast<std::size_t>(n_classes) + static_cast<std::size_t>(y[i])] += 1.0;
        pb[b] += 1.0;
        pc[static_cast<std::size_t>(y[i])] += 1.0;
    }
    double mi = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t b = 0; b < nb; ++b) {
        for (int c = 0; c < n_classes; ++c) {
            double pj = joint[b * static_cast<std::size_t>(n_classes) + static_cast<std::size_t>(c)] * inv_n;
            if (pj <= 0.0) continue;
            mi += pj * std::log(pj / (pb[b] * inv_n * pc[static_cast<std::size_t>(c)] * inv_n));
        }
    }
    return std::max(0.0, mi);
}

/// Per-feature MI against the labels, normalized to sum to 1.
inline std::vector<double> mutual_information_ranking(const FeatureMatrix& x, const std::vector<int>& y,
                                                      std::size_t bins = 10) {
    detail::check_matrix(x, y);
    int n_classes = detail::num_classes(y);
    if (n_classes < 2) throw ValidationError("mutual_information_ranking: need at least 2 classes");
    const std::size_t d = x[0].size();
    std::vector<double> scores(d, 0.0);
    std::vector<double> col(x.size());
    for (std::size_t f = 0; f < d; ++f) {
        for (std::size_t i = 0; i < x.size(); ++i) col[i] = x[i][f];
        scores[f] = mutual_information_binned(col, y, n_classes, bins);
    }
    double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    if (total <= 0.0) {
        std::fill(scores.begin(), scores.end(), 1.0 / static_cast<double>(d));
    } else {
        for (double& s : scores) s /= total;
    }
    return scores;
}

// ---------------------------------------------------------------------------
// k-nearest-neighbour classification
// ---------------------------------------------------------------------------

/// Euclidean k-NN; distance ties broken by lowest sample index, vote ties by
/// lowest label.
inline int knn_classify(const FeatureMatrix& x_train, const std::vector<int>& y_train,
                        const std::vector<double>& query, std::size_t k = 1) {
    detail::check_matrix(x_train, y_train);
    if (k == 0 || k > x_train.size()) throw ValidationError("knn_classify: k out of range");
    if (query.size() != x_train[0].size()) throw ValidationError("knn_classify: feature count mismatch");
    std::vector<std::pair<double, std::size_t>> dist(x_train.size());
    for (std::size_t i = 0; i < x_train.size(); ++i) {
        double acc = 0.0;
        for (std::size_t f = 0; f < query.size(); ++f) {
            double dv = x_train[i][f] - query[f];
            acc += dv * dv;
        }
        dist[i] = {acc, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    if (k == 1) return y_train[dist[0].second];
    int n_classes = detail::num_classes(y_train);
    std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(y_train[dist[i].second])];
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

// ---------------------------------------------------------------------------
// Random forest (bagged Gini-split trees, sqrt(d) feature subsampling)
// ---------------------------------------------------------------------------

struct ForestParams {
    std::size_t n_trees = 100;
    int max_depth = -1;  // -1: unlimited
    int mtry = -1;       // features tried per node; -1: round(sqrt(d))
    bool bootstrap = true;
    std::size_t min_samples_split = 2;
    std::uint64_t seed = 0;
};

struct TreeNode {
    int feature = -1;  // -1: leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> class_counts;  // leaf histogram
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    int predict(const std::vector<double>& x) const {
        int idx = 0;
        while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
            const TreeNode& nd = nodes[static_cast<std::size_t>(idx)];
            idx = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        const auto& counts = nodes[static_cast<std::size_t>(idx)].class_counts;
        return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    int n_classes = 0;
    std::size_t n_features = 0;
    ForestParams params;
    std::vector<double> importances;  // impurity-decrease, normalized to sum 1
};

namespace detail {

struct TreeBuilder {
    const FeatureMatrix& x;
    const std::vector<int>& y;
    int n_classes;
    const ForestParams& params;
    Rng& rng;
    DecisionTree& tree;
    std::vector<double>& importance_acc;
    double n_root;

    static double gini(const std::vector<double>& counts, double n) {
        if (n <= 0.0) return 0.0;
        double acc = 0.0;
        for (double c : counts) acc += (c / n) * (c / n);
        return 1.0 - acc;
    }

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    // Best threshold for one feature over the node's samples.
    Split best_split_on(int f, std::vector<std::size_t>& idx, const std::vector<double>& counts,
                        double node_gini) const {
        const std::size_t n = idx.size();
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            double va = x[a][static_cast<std::size_t>(f)], vb = x[b][static_cast<std::size_t>(f)];
            return va < vb || (va == vb && a < b);
        });
        std::vector<double> left(counts.size(), 0.0);
        Split best;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left[static_cast<std::size_t>(y[idx[i]])] += 1.0;
            double vi = x[idx[i]][static_cast<std::size_t>(f)];
            double vn = x[idx[i + 1]][static_cast<std::size_t>(f)];
            if (vi == vn) continue;
            double nl = static_cast<double>(i + 1);
            double nr = static_cast<double>(n) - nl;
            double sql = 0.0, sqr = 0.0;
            for (std::size_t c = 0; c < counts.size(); ++c) {
                sql += left[c] * left[c];
                double rc = counts[c] - left[c];
                sqr += rc * rc;
            }
            double child = (nl * (1.0 - sql / (nl * nl)) + nr * (1.0 - sqr / (nr * nr))) /
                           static_cast<double>(n);
            double gain = node_gini - child;
            if (gain > best.gain + 1e-15) {
                best.feature = f;
                best.threshold = 0.5 * (vi + vn);
                best.gain = gain;
            }
        }
        return best;
    }

    int build(std::vector<std::size_t> idx, int depth) {
        std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
        for (std::size_t i : idx) counts[static_cast<std::size_t>(y[i])] += 1.0;
        double n = static_cast<double>(idx.size());
        double node_gini = gini(counts, n);

        auto make_leaf = [&]() {
            TreeNode leaf;
            leaf.class_counts = counts;
            tree.nodes.push_back(std::move(leaf));
            return static_cast<int>(tree.nodes.size() - 1);
        };
        if (node_gini <= 0.0 || idx.size() < params.min_samples_split ||
            (params.max_depth >= 0 && depth >= params.max_depth))
            return make_leaf();

        // Feature candidates: a seeded shuffle, first mtry preferred; if none of
        // them yields a positive-gain split, keep scanning the rest so nodes with
        // any usable feature still split (exact training fit on unique data).
        std::size_t d = x[0].size();
        std::vector<int> order(d);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        std::size_t mtry = params.mtry > 0 ? static_cast<std::size_t>(params.mtry)
                                           : static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d))));
        mtry = std::min(std::max<std::size_t>(1, mtry), d);

        Split best;
        for (std::size_t oi = 0; oi < d; ++oi) {
            if (oi >= mtry && best.feature >= 0) break;
            Split s = best_split_on(order[oi], idx, counts, node_gini);
            if (s.gain > best.gain) best = s;
        }
        if (best.feature < 0) return make_leaf();

        std::vector<std::size_t> li, ri;
        for (std::size_t i : idx) {
            if (x[i][static_cast<std::size_t>(best.feature)] <= best.threshold)
                li.push_back(i);
            else
                ri.push_back(i);
        }
        importance_acc[static_cast<std::size_t>(best.feature)] += (n / n_root) * best.gain;

        TreeNode node;
        node.feature = best.feature;
        node.threshold = best.threshold;
        tree.nodes.push_back(node);
        int self = static_cast<int>(tree.nodes.size() - 1);
        int l = build(std::move(li), depth + 1);
        int r = build(std::move(ri), depth + 1);
        tree.nodes[static_cast<std::size_t>(self)].left = l;
        tree.nodes[static_cast<std::size_t>(self)].right = r;
        return self;
    }
};

}  // namespace detail

inline ForestModel train_forest(const FeatureMatrix& x, const std::vector<int>& y, ForestParams params = {}) {
    detail::check_matrix(x, y);
    ForestModel model;
    model.params = params;
    model.n_classes = detail::num_classes(y);
    model.n_features = x[0].size();
    model.importances.assign(model.n_features, 0.0);
    model.trees.resize(params.n_trees);

    const std::size_t n = x.size();
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        Rng rng(derive_seed(params.seed, t));
        std::vector<std::size_t> idx(n);
        if (params.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) idx[i] = rng.uniform_index(n);
        } else {
            std::iota(idx.begin(), idx.end(), std::size_t{0});
        }
        detail::TreeBuilder builder{x, y, model.n_classes, params, rng, model.trees[t],
                                    model.importances, static_cast<double>(n)};
        builder.build(std::move(idx), 0);
    }
    double total = std::accumulate(model.importances.begin(), model.importances.end(), 0.0);
    if (total > 0.0)
        for (double& v : model.importances) v /= total;
    else
        std::fill(model.importances.begin(), model.importances.end(),
                  1.0 / static_cast<double>(model.n_features));
    return model;
}

/// Majority vote over trees; ties resolved toward the lowest label.
inline int forest_predict(const ForestModel& model, const std::vector<double>& x) {
    if (x.size() != model.n_features) throw ValidationError("forest_predict: feature count mismatch");
    std::vector<int> votes(static_cast<std::size_t>(model.n_classes), 0);
    for (const auto& tree : model.trees) ++votes[static_cast<std::size_t>(tree.predict(x))];
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

inline const std::vector<double>& forest_importance(const ForestModel& model) { return model.importances; }

/// Per-mode importance report, one normalized vector per criterion.
struct ImportanceReport {
    std::vector<std::string> feature_names;
    std::vector<double> random_forest;
    std::vector<double> mutual_information;
};

inline ImportanceReport importance_report(const FeatureMatrix& x, const std::vector<int>& y,
                                          std::vector<std::string> feature_names,
                                          std::size_t mi_bins = 10, ForestParams forest_params = {}) {
    ImportanceReport report;
    report.feature_names = std::move(feature_names);
    report.mutual_information = mutual_information_ranking(x, y, mi_bins);
    report.random_forest = train_forest(x, y, forest_params).importances;
    return report;
}

}  // namespace nilm
