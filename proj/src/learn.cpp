#include "hetlink/learn.hpp"

#include "hetlink/adam.hpp"
#include "hetlink/errors.hpp"
#include "hetlink/kernels.hpp"
#include "hetlink/text.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <thread>

namespace hetlink {
namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_rows(const Eigen::MatrixXd& X, std::span<const int> y) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) {
        throw DimensionMismatch("feature rows (" + std::to_string(X.rows()) + ") and labels (" +
                                std::to_string(y.size()) + ") differ");
    }
    for (int v : y)
        if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
}

double gini_weighted(double n, double pos) {
    if (n <= 0) return 0.0;
    double p = pos / n;
    return n * 2.0 * p * (1.0 - p);
}

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    std::span<const int> y;
    const TreeConfig& cfg;
    Rng* rng;
    DecisionTree tree;

    int build(std::vector<std::size_t>& rows, int depth) {
        double pos = 0;
        for (auto r : rows) pos += y[r];
        const double n = static_cast<double>(rows.size());
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[static_cast<std::size_t>(id)].prob = n > 0 ? pos / n : 0.0;

        const bool pure = pos == 0 || pos == n;
        const bool depth_left = cfg.max_depth < 0 || depth < cfg.max_depth;
        if (pure || !depth_left || rows.size() < static_cast<std::size_t>(std::max(cfg.min_samples_split, 2))) {
            return id;
        }

        const auto d = static_cast<int>(X.cols());
        std::vector<int> features(static_cast<std::size_t>(d));
        std::iota(features.begin(), features.end(), 0);
        if (cfg.max_features > 0 && cfg.max_features < d) {
            if (!rng) throw std::invalid_argument("train_tree: feature subsampling needs an rng");
            for (int i = 0; i < cfg.max_features; ++i) {
                auto j = static_cast<std::size_t>(i) + uniform_index(*rng, static_cast<std::uint64_t>(d - i));
                std::swap(features[static_cast<std::size_t>(i)], features[j]);
            }
            features.resize(static_cast<std::size_t>(cfg.max_features));
            std::sort(features.begin(), features.end());
        }

        double best = std::numeric_limits<double>::infinity();
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::size_t> sorted = rows;
        for (int f : features) {
            std::stable_sort(sorted.begin(), sorted.end(),
                             [&](std::size_t a, std::size_t b) { return X(static_cast<Eigen::Index>(a), f) < X(static_cast<Eigen::Index>(b), f); });
            double left_pos = 0;
            for (std::size_t k = 1; k < sorted.size(); ++k) {
                left_pos += y[sorted[k - 1]];
                double lo = X(static_cast<Eigen::Index>(sorted[k - 1]), f);
                double hi = X(static_cast<Eigen::Index>(sorted[k]), f);
                if (!(lo < hi)) continue;
                double nl = static_cast<double>(k);
                double impurity = gini_weighted(nl, left_pos) + gini_weighted(n - nl, pos - left_pos);
                if (impurity < best - 1e-12) {
                    best = impurity;
                    best_feature = f;
                    best_threshold = lo + (hi - lo) / 2.0;
                    if (!(best_threshold < hi)) best_threshold = lo;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows) {
            (X(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? left : right).push_back(r);
        }
        int l = build(left, depth + 1);
        int r = build(right, depth + 1);
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = r;
        return id;
    }
};

class LogRegClassifier final : public Classifier {
public:
    explicit LogRegClassifier(const Config& p) {
        cfg_.l2 = p.get_double("l2", cfg_.l2);
        cfg_.epochs = static_cast<int>(p.get_int("epochs", cfg_.epochs));
        cfg_.learning_rate = p.get_double("learning_rate", cfg_.learning_rate);
        if (cfg_.l2 < 0 || cfg_.epochs < 0 || !(cfg_.learning_rate > 0)) throw ConfigError("bad logreg parameters");
    }
    void fit(const Eigen::MatrixXd& X, std::span<const int> y) override { model_ = train_logreg(X, y, cfg_); }
    Eigen::VectorXd score(const Eigen::MatrixXd& X) const override { return model_.predict_proba(X); }
    std::string name() const override { return "logreg"; }

private:
    LogRegConfig cfg_;
    LogRegModel model_;
};

class TreeClassifier final : public Classifier {
public:
    explicit TreeClassifier(const Config& p) {
        cfg_.max_depth = static_cast<int>(p.get_int("max_depth", cfg_.max_depth));
        cfg_.min_samples_split = static_cast<int>(p.get_int("min_samples_split", cfg_.min_samples_split));
    }
    void fit(const Eigen::MatrixXd& X, std::span<const int> y) override {
        check_rows(X, y);
        tree_ = train_tree(X, y, cfg_);
    }
    Eigen::VectorXd score(const Eigen::MatrixXd& X) const override { return tree_.predict_proba(X); }
    std::string name() const override { return "tree"; }

private:
    TreeConfig cfg_;
    DecisionTree tree_;
};

class ForestClassifier final : public Classifier {
public:
    ForestClassifier(const Config& p, std::uint64_t seed) {
        cfg_.n_estimators = static_cast<int>(p.get_int("n_estimators", cfg_.n_estimators));
        cfg_.max_depth = static_cast<int>(p.get_int("max_depth", cfg_.max_depth));
        cfg_.max_features = static_cast<int>(p.get_int("max_features", cfg_.max_features));
        cfg_.bootstrap = p.get_bool("bootstrap", cfg_.bootstrap);
        cfg_.threads = static_cast<int>(p.get_int("threads", cfg_.threads));
        cfg_.seed = seed;
        if (cfg_.n_estimators <= 0) throw ConfigError("n_estimators must be positive");
    }
    void fit(const Eigen::MatrixXd& X, std::span<const int> y) override { forest_ = train_forest(X, y, cfg_); }
    Eigen::VectorXd score(const Eigen::MatrixXd& X) const override { return forest_.predict_proba(X); }
    std::string name() const override { return "forest"; }

private:
    ForestConfig cfg_;
    RandomForest forest_;
};

class SvmClassifier final : public Classifier {
public:
    explicit SvmClassifier(const Config& p) {
        cfg_.C = p.get_double("C", cfg_.C);
        auto gamma = p.get_string("gamma", "scale");
        if (gamma != "scale") {
            double g = 0;
            if (!parse_double(gamma, g) || !(g > 0)) throw ConfigError("svm gamma must be 'scale' or positive");
            gamma_ = g;
        }
        if (!(cfg_.C > 0)) throw ConfigError("svm C must be positive");
    }
    void fit(const Eigen::MatrixXd& X, std::span<const int> y) override {
        check_rows(X, y);
        require_two_classes(y);
        scaler_ = StandardScaler::fit(X);
        train_ = scaler_.transform(X);
        double var = 0.0;
        if (train_.size() > 0) {
            double mean = train_.mean();
            var = (train_.array() - mean).square().mean();
        }
        used_gamma_ = gamma_ ? *gamma_ : (var > 0 ? 1.0 / (static_cast<double>(train_.cols()) * var) : 1.0);
        model_ = solve_svm_dual(rbf_gram(train_, train_, used_gamma_), y, cfg_);
    }
    Eigen::VectorXd score(const Eigen::MatrixXd& X) const override {
        return model_.decision(rbf_gram(scaler_.transform(X), train_, used_gamma_));
    }
    std::string name() const override { return "svm"; }

private:
    SvmConfig cfg_;
    std::optional<double> gamma_;
    double used_gamma_ = 1.0;
    StandardScaler scaler_;
    Eigen::MatrixXd train_;
    SvmModel model_;
};

class MlpClassifier final : public Classifier {
public:
    MlpClassifier(const Config& p, std::uint64_t seed) {
        cfg_.hidden_dim = static_cast<int>(p.get_int("hidden_dim", cfg_.hidden_dim));
        cfg_.epochs = static_cast<int>(p.get_int("epochs", cfg_.epochs));
        cfg_.learning_rate = p.get_double("learning_rate", cfg_.learning_rate);
        cfg_.l2 = p.get_double("l2", cfg_.l2);
        cfg_.seed = seed;
        if (cfg_.hidden_dim < 0 || cfg_.epochs < 0) throw ConfigError("bad mlp parameters");
    }
    void fit(const Eigen::MatrixXd& X, std::span<const int> y) override { model_ = train_mlp(X, y, cfg_); }
    Eigen::VectorXd score(const Eigen::MatrixXd& X) const override { return model_.predict_proba(X); }
    std::string name() const override { return "mlp"; }

private:
    MlpConfig cfg_;
    MlpModel model_;
};

std::unique_ptr<Classifier> make_plain(const std::string& kind, const Config& params, std::uint64_t seed) {
    if (kind == "logreg") return std::make_unique<LogRegClassifier>(params);
    if (kind == "tree") return std::make_unique<TreeClassifier>(params);
    if (kind == "forest") return std::make_unique<ForestClassifier>(params, seed);
    if (kind == "svm") return std::make_unique<SvmClassifier>(params);
    if (kind == "mlp") return std::make_unique<MlpClassifier>(params, seed);
    throw ConfigError("unknown classifier '" + kind + "' (logreg, tree, forest, svm, mlp)");
}

std::vector<Config> grid_for(const std::string& kind, const Config& base) {
    std::vector<std::vector<std::pair<std::string, std::string>>> combos;
    if (kind == "logreg") {
        for (auto l2 : {"0.0001", "0.001", "0.01", "0.1", "1"}) combos.push_back({{"l2", l2}});
    } else if (kind == "tree") {
        for (auto d : {"2", "4", "6", "8", "12"}) combos.push_back({{"max_depth", d}});
    } else if (kind == "forest") {
        for (auto d : {"4", "8", "12"})
            for (auto n : {"50", "100"}) combos.push_back({{"max_depth", d}, {"n_estimators", n}});
    } else if (kind == "svm") {
        for (auto c : {"0.1", "1", "10"}) combos.push_back({{"C", c}});
    } else if (kind == "mlp") {
        for (auto h : {"8", "16", "32"}) combos.push_back({{"hidden_dim", h}});
    }
    std::vector<Config> out;
    for (const auto& combo : combos) {
        Config c = base;
        for (const auto& [k, v] : combo) c.set(k, v);
        out.push_back(std::move(c));
    }
    return out;
}

class GridSearchClassifier final : public Classifier {
public:
    GridSearchClassifier(std::string kind, Config base, std::uint64_t seed)
        : kind_(std::move(kind)), base_(std::move(base)), seed_(seed) {
        make_plain(kind_, base_, seed_); // validate early
    }

    void fit(const Eigen::MatrixXd& X, std::span<const int> y) override {
        check_rows(X, y);
        require_two_classes(y);
        const auto n = y.size();
        std::vector<int> fold(n);
        auto rng = make_rng(seed_, {0x9d});
        for (int cls = 0; cls <= 1; ++cls) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < n; ++i)
                if (y[i] == cls) idx.push_back(i);
            std::shuffle(idx.begin(), idx.end(), rng);
            for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = static_cast<int>(k % 3);
        }

        double best = -1.0;
        Config chosen = base_;
        for (const auto& candidate : grid_for(kind_, base_)) {
            double total = 0.0;
            int used = 0;
            for (int f = 0; f < 3; ++f) {
                std::vector<Eigen::Index> tr, te;
                for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
                std::vector<int> ytr, yte;
                for (auto i : tr) ytr.push_back(y[static_cast<std::size_t>(i)]);
                for (auto i : te) yte.push_back(y[static_cast<std::size_t>(i)]);
                auto has_both = [](const std::vector<int>& v) {
                    return std::find(v.begin(), v.end(), 0) != v.end() && std::find(v.begin(), v.end(), 1) != v.end();
                };
                if (!has_both(ytr) || !has_both(yte)) continue;
                auto clf = make_plain(kind_, candidate, seed_);
                clf->fit(X(tr, Eigen::all), ytr);
                Eigen::VectorXd s = clf->score(X(te, Eigen::all));
                total += roc_auc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), yte).auc;
                ++used;
            }
            double mean = used ? total / used : 0.0;
            if (mean > best) {
                best = mean;
                chosen = candidate;
            }
        }
        best_ = make_plain(kind_, chosen, seed_);
        best_->fit(X, y);
    }

    Eigen::VectorXd score(const Eigen::MatrixXd& X) const override {
        if (!best_) throw std::logic_error("classifier used before fit");
        return best_->score(X);
    }
    std::string name() const override { return kind_; }

private:
    std::string kind_;
    Config base_;
    std::uint64_t seed_;
    std::unique_ptr<Classifier> best_;
};

std::vector<double> sorted_copy(std::span<const double> xs) {
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    return v;
}

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted.front();
    double pos = q * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

void Dataset::validate() const {
    check_rows(X, y);
    if (!ids.empty() && ids.size() != y.size()) throw DimensionMismatch("dataset ids and labels differ in length");
}

void require_two_classes(std::span<const int> y) {
    bool pos = false, neg = false;
    for (int v : y) (v == 1 ? pos : neg) = true;
    if (!pos || !neg) throw DataError("both classes must be present");
}

StandardScaler StandardScaler::fit(const Eigen::MatrixXd& X) {
    StandardScaler s;
    const auto n = static_cast<double>(std::max<Eigen::Index>(X.rows(), 1));
    s.mean = X.colwise().sum() / n;
    s.scale = ((X.rowwise() - s.mean).array().square().colwise().sum() / n).sqrt().matrix();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
        if (!(s.scale[j] > 1e-12)) s.scale[j] = 1.0;
    return s;
}

Eigen::MatrixXd StandardScaler::transform(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) throw DimensionMismatch("scaler fitted on a different feature count");
    return ((X.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

double logreg_loss(const Eigen::MatrixXd& X, std::span<const int> y, const Eigen::VectorXd& w, double b, double l2,
                   Eigen::VectorXd* grad_w, double* grad_b) {
    const auto n = static_cast<double>(X.rows());
    Eigen::VectorXd s = (X * w).array() + b;
    double loss = 0.0;
    Eigen::VectorXd ds(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const int yi = y[static_cast<std::size_t>(i)];
        loss += yi ? softplus(-s[i]) : softplus(s[i]);
        ds[i] = (sigmoid(s[i]) - yi) / n;
    }
    loss = loss / n + 0.5 * l2 * w.squaredNorm();
    if (grad_w) *grad_w = X.transpose() * ds + l2 * w;
    if (grad_b) *grad_b = ds.sum();
    return loss;
}

Eigen::VectorXd LogRegModel::predict_proba(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd s = (scaler.transform(X) * w).array() + b;
    return s.unaryExpr([](double v) { return sigmoid(v); });
}

LogRegModel train_logreg(const Eigen::MatrixXd& X, std::span<const int> y, const LogRegConfig& config) {
    check_rows(X, y);
    require_two_classes(y);
    LogRegModel m;
    m.scaler = StandardScaler::fit(X);
    const Eigen::MatrixXd Z = m.scaler.transform(X);
    m.w = Eigen::VectorXd::Zero(Z.cols());
    m.b = 0.0;
    double step = config.learning_rate;
    Eigen::VectorXd gw;
    double gb = 0.0;
    double loss = logreg_loss(Z, y, m.w, m.b, config.l2, &gw, &gb);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double gnorm2 = gw.squaredNorm() + gb * gb;
        if (gnorm2 < 1e-20) {
            m.losses.push_back(loss);
            continue;
        }
        // Armijo backtracking; grow the step again after each accepted move.
        for (int tries = 0; tries < 60; ++tries) {
            Eigen::VectorXd w2 = m.w - step * gw;
            double b2 = m.b - step * gb;
            double l2loss = logreg_loss(Z, y, w2, b2, config.l2);
            if (l2loss <= loss - 0.5 * step * gnorm2) {
                m.w = std::move(w2);
                m.b = b2;
                break;
            }
            step *= 0.5;
        }
        loss = logreg_loss(Z, y, m.w, m.b, config.l2, &gw, &gb);
        m.losses.push_back(loss);
        step = std::min(step * 2.0, config.learning_rate * 64.0);
    }
    return m;
}

double DecisionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    if (nodes.empty()) throw std::logic_error("empty decision tree");
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        i = static_cast<std::size_t>(row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
    }
    return nodes[i].prob;
}

Eigen::VectorXd DecisionTree::predict_proba(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r) out[r] = predict_row(X.row(r));
    return out;
}

int DecisionTree::depth() const {
    std::function<int(int)> walk = [&](int i) -> int {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        if (n.feature < 0) return 0;
        return 1 + std::max(walk(n.left), walk(n.right));
    };
    return nodes.empty() ? 0 : walk(0);
}

DecisionTree train_tree(const Eigen::MatrixXd& X, std::span<const int> y, const TreeConfig& config,
                        std::span<const std::size_t> rows, Rng* rng) {
    check_rows(X, y);
    if (y.empty()) throw DataError("train_tree: no rows");
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    if (idx.empty()) {
        idx.resize(y.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    TreeBuilder builder{X, y, config, rng, {}};
    builder.build(idx, 0);
    return std::move(builder.tree);
}

Eigen::VectorXd RandomForest::predict_proba(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (const auto& t : trees) out += t.predict_proba(X);
    return trees.empty() ? out : Eigen::VectorXd(out / static_cast<double>(trees.size()));
}

RandomForest train_forest(const Eigen::MatrixXd& X, std::span<const int> y, const ForestConfig& config) {
    check_rows(X, y);
    if (y.size() < 2) throw DataError("train_forest: need at least two rows");
    if (config.n_estimators <= 0) throw ConfigError("n_estimators must be positive");
    TreeConfig tc;
    tc.max_depth = config.max_depth;
    const auto d = static_cast<int>(X.cols());
    tc.max_features = config.max_features > 0 ? config.max_features
                                              : std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(d)))));
    RandomForest forest;
    forest.trees.resize(static_cast<std::size_t>(config.n_estimators));
    auto grow = [&](std::size_t t) {
        auto rng = make_rng(config.seed, {0xf0e5, t});
        std::vector<std::size_t> rows;
        if (config.bootstrap) {
            rows.resize(y.size());
            for (auto& r : rows) r = uniform_index(rng, y.size());
        }
        forest.trees[t] = train_tree(X, y, tc, rows, &rng);
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(config.threads, 1)), forest.trees.size());
    if (workers <= 1) {
        for (std::size_t t = 0; t < forest.trees.size(); ++t) grow(t);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < forest.trees.size(); t += workers) grow(t);
            });
        }
        for (auto& th : pool) th.join();
    }
    return forest;
}

Eigen::VectorXd SvmModel::decision(const Eigen::MatrixXd& k_rows) const {
    if (k_rows.cols() != coef.size()) throw DimensionMismatch("svm decision: kernel columns must match training rows");
    return (k_rows * coef).array() + bias;
}

SvmModel train_svm_precomputed(const Eigen::MatrixXd& gram, std::span<const int> labels, const SvmConfig& config) {
    auto psd = psd_check(gram, 1e-8);
    if (!psd.psd) {
        throw DataError("svm: Gram matrix is not positive semidefinite (min eigenvalue " +
                        format_double(psd.min_eigenvalue) + "); normalize the kernel or check its construction");
    }
    return solve_svm_dual(gram, labels, config);
}

SvmModel solve_svm_dual(const Eigen::MatrixXd& K, std::span<const int> labels, const SvmConfig& config) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (K.rows() != n || K.cols() != n) throw DimensionMismatch("svm: Gram matrix must be n x n for n labels");
    require_two_classes(labels);
    if (!(config.C > 0)) throw ConfigError("svm C must be positive");
    constexpr double tau = 1e-12;
    const double C = config.C;

    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);
    auto Q = [&](Eigen::Index i, Eigen::Index j) { return y[i] * y[j] * K(i, j); };
    auto upper = [&](Eigen::Index t) { return alpha[t] >= C; };
    auto lower = [&](Eigen::Index t) { return alpha[t] <= 0.0; };

    SvmModel model;
    const long max_iter = config.max_iter > 0 ? config.max_iter : 10000L * std::max<long>(n, 1);
    for (; model.iterations < max_iter; ++model.iterations) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmax2 = -std::numeric_limits<double>::infinity();
        Eigen::Index i = -1, j = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (y[t] > 0) {
                if (!upper(t) && -G[t] >= gmax) gmax = -G[t], i = t;
            } else {
                if (!lower(t) && G[t] >= gmax) gmax = G[t], i = t;
            }
        }
        if (i < 0) {
            model.converged = true;
            break;
        }
        double best_obj = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            if (y[t] > 0) {
                if (lower(t)) continue;
                double grad_diff = gmax + G[t];
                gmax2 = std::max(gmax2, G[t]);
                if (grad_diff > 0) {
                    double quad = K(i, i) + K(t, t) - 2.0 * y[i] * Q(i, t);
                    double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : tau);
                    if (obj <= best_obj) best_obj = obj, j = t;
                }
            } else {
                if (upper(t)) continue;
                double grad_diff = gmax - G[t];
                gmax2 = std::max(gmax2, -G[t]);
                if (grad_diff > 0) {
                    double quad = K(i, i) + K(t, t) + 2.0 * y[i] * Q(i, t);
                    double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : tau);
                    if (obj <= best_obj) best_obj = obj, j = t;
                }
            }
        }
        if (gmax + gmax2 < config.tol || j < 0) {
            model.converged = true;
            break;
        }

        const double ai = alpha[i], aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = K(i, i) + K(j, j) + 2.0 * Q(i, j);
            if (quad <= 0) quad = tau;
            double delta = (-G[i] - G[j]) / quad;
            double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) alpha[j] = 0, alpha[i] = diff;
            } else {
                if (alpha[i] < 0) alpha[i] = 0, alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > C) alpha[i] = C, alpha[j] = C - diff;
            } else {
                if (alpha[j] > C) alpha[j] = C, alpha[i] = C + diff;
            }
        } else {
            double quad = K(i, i) + K(j, j) - 2.0 * Q(i, j);
            if (quad <= 0) quad = tau;
            double delta = (G[i] - G[j]) / quad;
            double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) alpha[i] = C, alpha[j] = sum - C;
            } else {
                if (alpha[j] < 0) alpha[j] = 0, alpha[i] = sum;
            }
            if (sum > C) {
                if (alpha[j] > C) alpha[j] = C, alpha[i] = sum - C;
            } else {
                if (alpha[i] < 0) alpha[i] = 0, alpha[j] = sum;
            }
        }
        const double di = alpha[i] - ai, dj = alpha[j] - aj;
        for (Eigen::Index t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    }

    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int nr_free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        double yg = y[t] * G[t];
        if (upper(t)) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++nr_free;
            sum_free += yg;
        }
    }
    const double rho = nr_free > 0 ? sum_free / nr_free : (ub + lb) / 2.0;

    model.alpha = alpha;
    model.coef = alpha.cwiseProduct(y);
    model.bias = -rho;
    for (Eigen::Index t = 0; t < n; ++t)
        if (alpha[t] > 0) model.support.push_back(static_cast<std::size_t>(t));
    return model;
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double gamma) {
    if (A.cols() != B.cols()) throw DimensionMismatch("rbf_gram: feature counts differ");
    Eigen::VectorXd an = A.rowwise().squaredNorm();
    Eigen::VectorXd bn = B.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = (-2.0 * A * B.transpose()).colwise() + an;
    d2.rowwise() += bn.transpose();
    return (-gamma * d2.cwiseMax(0.0)).array().exp().matrix();
}

std::vector<Eigen::MatrixXd> mlp_init(int input_dim, const MlpConfig& config) {
    auto rng = make_rng(config.seed, {0x31f});
    auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
        double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> u(-limit, limit);
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
        return m;
    };
    std::vector<Eigen::MatrixXd> p;
    if (config.hidden_dim > 0) {
        p.push_back(glorot(config.hidden_dim, input_dim));
        p.push_back(Eigen::MatrixXd::Zero(config.hidden_dim, 1));
        p.push_back(glorot(1, config.hidden_dim));
    } else {
        p.push_back(glorot(1, input_dim));
    }
    p.push_back(Eigen::MatrixXd::Zero(1, 1));
    return p;
}

Eigen::VectorXd mlp_forward(const std::vector<Eigen::MatrixXd>& params, const Eigen::MatrixXd& X) {
    Eigen::VectorXd s;
    if (params.size() == 4) {
        Eigen::MatrixXd H = ((X * params[0].transpose()).rowwise() + params[1].col(0).transpose()).cwiseMax(0.0);
        s = (H * params[2].transpose()).col(0).array() + params[3](0, 0);
    } else {
        s = (X * params[0].transpose()).col(0).array() + params[1](0, 0);
    }
    return s.unaryExpr([](double v) { return sigmoid(v); });
}

double mlp_loss(const std::vector<Eigen::MatrixXd>& params, const Eigen::MatrixXd& X, std::span<const int> y,
                double l2, std::vector<Eigen::MatrixXd>* grads) {
    const auto n = static_cast<double>(X.rows());
    const bool hidden = params.size() == 4;
    Eigen::MatrixXd pre, H;
    const Eigen::MatrixXd* last_in = &X;
    const auto& W2 = hidden ? params[2] : params[0];
    const double b2 = params.back()(0, 0);
    if (hidden) {
        pre = (X * params[0].transpose()).rowwise() + params[1].col(0).transpose();
        H = pre.cwiseMax(0.0);
        last_in = &H;
    }
    Eigen::VectorXd s = (*last_in * W2.transpose()).col(0).array() + b2;
    double loss = 0.0;
    Eigen::VectorXd ds(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const int yi = y[static_cast<std::size_t>(i)];
        loss += yi ? softplus(-s[i]) : softplus(s[i]);
        ds[i] = (sigmoid(s[i]) - yi) / n;
    }
    loss /= n;
    double reg = W2.squaredNorm() + (hidden ? params[0].squaredNorm() : 0.0);
    loss += 0.5 * l2 * reg;
    if (grads) {
        grads->clear();
        Eigen::MatrixXd gW2 = ds.transpose() * *last_in + l2 * W2;
        Eigen::MatrixXd gb2(1, 1);
        gb2(0, 0) = ds.sum();
        if (hidden) {
            Eigen::MatrixXd dH = (ds * W2).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
            grads->push_back(dH.transpose() * X + l2 * params[0]);
            grads->push_back(dH.colwise().sum().transpose());
        }
        grads->push_back(gW2);
        grads->push_back(gb2);
    }
    return loss;
}

Eigen::VectorXd MlpModel::predict_proba(const Eigen::MatrixXd& X) const { return mlp_forward(params, scaler.transform(X)); }

MlpModel train_mlp(const Eigen::MatrixXd& X, std::span<const int> y, const MlpConfig& config) {
    check_rows(X, y);
    require_two_classes(y);
    MlpModel m;
    m.scaler = StandardScaler::fit(X);
    const Eigen::MatrixXd Z = m.scaler.transform(X);
    m.params = mlp_init(static_cast<int>(Z.cols()), config);
    AdamState adam;
    adam.alpha = config.learning_rate;
    std::vector<Eigen::MatrixXd> grads;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        m.losses.push_back(mlp_loss(m.params, Z, y, config.l2, &grads));
        adam_step(m.params, grads, adam);
    }
    return m;
}

RocSummary roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DimensionMismatch("roc_auc: scores and labels differ in length");
    for (double s : scores)
        if (std::isnan(s)) throw std::invalid_argument("roc_auc: NaN score");
    require_two_classes(labels);

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::uint64_t P = 0, N = 0;
    for (int l : labels) (l ? P : N) += 1;

    RocSummary roc;
    roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::uint64_t tp = 0, fp = 0;
    std::uint64_t u2 = 0; // twice the Mann-Whitney count
    for (std::size_t k = 0; k < order.size();) {
        std::uint64_t gp = 0, gn = 0;
        const double s = scores[order[k]];
        for (; k < order.size() && scores[order[k]] == s; ++k) (labels[order[k]] ? gp : gn) += 1;
        // positives in this group beat every negative ranked below it
        u2 += gp * (2 * (N - fp - gn)) + gp * gn;
        tp += gp;
        fp += gn;
        roc.points.push_back({s, static_cast<double>(fp) / static_cast<double>(N), static_cast<double>(tp) / static_cast<double>(P)});
    }
    roc.auc = static_cast<double>(u2) / (2.0 * static_cast<double>(P) * static_cast<double>(N));
    return roc;
}

double trapezoid_area(const std::vector<RocPoint>& points) {
    double area = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) {
        area += (points[k].fpr - points[k - 1].fpr) * (points[k].tpr + points[k - 1].tpr) / 2.0;
    }
    return area;
}

double silverman_bandwidth(std::span<const double> samples) {
    if (samples.empty()) throw DataError("kde: no samples");
    const auto n = static_cast<double>(samples.size());
    double sd = 0.0;
    if (samples.size() > 1) {
        double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : samples) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / (n - 1.0));
    }
    auto sorted = sorted_copy(samples);
    double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    double a = 0.0;
    if (sd > 0 && iqr > 0) a = std::min(sd, iqr / 1.34);
    else if (sd > 0) a = sd;
    else a = 1.0;
    return 0.9 * a * std::pow(n, -0.2);
}

std::vector<double> kde(std::span<const double> samples, std::optional<double> bandwidth, std::span<const double> grid) {
    if (samples.empty()) throw DataError("kde: no samples");
    const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
    if (!(h > 0)) throw std::invalid_argument("kde: bandwidth must be positive");
    const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> out;
    out.reserve(grid.size());
    for (double x : grid) {
        double s = 0.0;
        for (double xi : samples) {
            double u = (x - xi) / h;
            s += std::exp(-0.5 * u * u);
        }
        out.push_back(s * norm);
    }
    return out;
}

void write_roc_tsv(std::ostream& out, const RocSummary& roc) {
    out << "threshold\tfpr\ttpr\n";
    for (const auto& p : roc.points) {
        out << format_double(p.threshold) << '\t' << format_double(p.fpr) << '\t' << format_double(p.tpr) << '\n';
    }
    out << "# auc=" << format_double(roc.auc) << '\n';
}

void write_kde_tsv(std::ostream& out, std::span<const double> grid, std::span<const double> density) {
    if (grid.size() != density.size()) throw DimensionMismatch("kde grid and density differ in length");
    out << "x\tdensity\n";
    for (std::size_t i = 0; i < grid.size(); ++i) out << format_double(grid[i]) << '\t' << format_double(density[i]) << '\n';
}

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec, std::uint64_t seed) {
    if (spec.grid_search) return std::make_unique<GridSearchClassifier>(spec.kind, spec.params, seed);
    return make_plain(spec.kind, spec.params, seed);
}

} // namespace hetlink
