#pragma once

#include "hetlink/config.hpp"
#include "hetlink/rng.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hetlink {

struct Dataset {
    Eigen::MatrixXd X;
    std::vector<int> y; // 0 or 1
    std::vector<std::string> ids;

    void validate() const;
};

/// Requires both classes; throws DataError otherwise.
void require_two_classes(std::span<const int> y);

/// Column means and standard deviations from the training rows; zero-variance
/// columns are left unscaled.
struct StandardScaler {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static StandardScaler fit(const Eigen::MatrixXd& X);
    Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
};

// ---- logistic regression ----

struct LogRegConfig {
    double l2 = 1e-3;
    int epochs = 300;
    double learning_rate = 1.0; // initial step; backtracking shrinks it
};

/// Mean log-loss plus (l2/2)|w|^2 (bias unpenalised). Gradients are written when non-null.
double logreg_loss(const Eigen::MatrixXd& X, std::span<const int> y, const Eigen::VectorXd& w, double b, double l2,
                   Eigen::VectorXd* grad_w = nullptr, double* grad_b = nullptr);

struct LogRegModel {
    StandardScaler scaler;
    Eigen::VectorXd w;
    double b = 0.0;
    std::vector<double> losses; // per epoch

    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;
};

/// Full-batch gradient descent with Armijo backtracking on standardized features.
LogRegModel train_logreg(const Eigen::MatrixXd& X, std::span<const int> y, const LogRegConfig& config);

// ---- trees ----

struct TreeConfig {
    int max_depth = 8;
    int min_samples_split = 2;
    int max_features = 0; // features tried per split; 0 or >= d means all
};

struct DecisionTree {
    struct Node {
        int feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double prob = 0.0; // fraction of positive training rows reaching the node
    };
    std::vector<Node> nodes;

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;
    int depth() const;
};

/// CART with Gini impurity. `rows` lists training rows (repeats allowed, for
/// bootstraps); empty means all rows. `rng` is needed only when max_features
/// restricts the split search.
DecisionTree train_tree(const Eigen::MatrixXd& X, std::span<const int> y, const TreeConfig& config,
                        std::span<const std::size_t> rows = {}, Rng* rng = nullptr);

struct ForestConfig {
    int n_estimators = 100;
    int max_depth = 8;
    int max_features = 0; // 0 means round(sqrt(d))
    bool bootstrap = true;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;
};

RandomForest train_forest(const Eigen::MatrixXd& X, std::span<const int> y, const ForestConfig& config);

// ---- support vector machine ----

struct SvmConfig {
    double C = 1.0;
    double tol = 1e-3;
    long max_iter = 0; // 0 means 10^4 * n
};

struct SvmModel {
    Eigen::VectorXd coef; // alpha_i * y_i, y in {-1,+1}
    Eigen::VectorXd alpha;
    double bias = 0.0;
    std::vector<std::size_t> support;
    long iterations = 0;
    bool converged = false;

    /// k_rows: test x train kernel values.
    Eigen::VectorXd decision(const Eigen::MatrixXd& k_rows) const;
};

/// Soft-margin dual by SMO with second-order working-set selection.
/// `labels` are 0/1. Rejects a Gram matrix that fails psd_check.
SvmModel train_svm_precomputed(const Eigen::MatrixXd& gram, std::span<const int> labels, const SvmConfig& config);

/// The same solver without the PSD check, for kernels that are PSD by construction.
SvmModel solve_svm_dual(const Eigen::MatrixXd& gram, std::span<const int> labels, const SvmConfig& config);

/// exp(-gamma |a_i - b_j|^2) for all row pairs.
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double gamma);

// ---- multilayer perceptron ----

struct MlpConfig {
    int hidden_dim = 16; // 0 gives a single sigmoid unit
    int epochs = 300;
    double learning_rate = 0.01;
    double l2 = 0.0;
    std::uint64_t seed = 0;
};

/// params: {W1 (h x d), b1 (h x 1), W2 (1 x h), b2 (1 x 1)}, or {W2 (1 x d), b2} when h = 0.
std::vector<Eigen::MatrixXd> mlp_init(int input_dim, const MlpConfig& config);
double mlp_loss(const std::vector<Eigen::MatrixXd>& params, const Eigen::MatrixXd& X, std::span<const int> y,
                double l2, std::vector<Eigen::MatrixXd>* grads = nullptr);
Eigen::VectorXd mlp_forward(const std::vector<Eigen::MatrixXd>& params, const Eigen::MatrixXd& X);

struct MlpModel {
    StandardScaler scaler;
    std::vector<Eigen::MatrixXd> params;
    std::vector<double> losses;

    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;
};

/// Full-batch ADAM on standardized features.
MlpModel train_mlp(const Eigen::MatrixXd& X, std::span<const int> y, const MlpConfig& config);

// ---- metrics ----

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

struct RocSummary {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Mann-Whitney AUC with half credit for ties, plus the threshold-sweep curve.
RocSummary roc_auc(std::span<const double> scores, std::span<const int> labels);
double trapezoid_area(const std::vector<RocPoint>& points);

double silverman_bandwidth(std::span<const double> samples);
std::vector<double> kde(std::span<const double> samples, std::optional<double> bandwidth, std::span<const double> grid);

void write_roc_tsv(std::ostream& out, const RocSummary& roc);
void write_kde_tsv(std::ostream& out, std::span<const double> grid, std::span<const double> density);

// ---- classifier front end ----

/// A fitted-on-demand binary scorer. score() is monotone in the positive-class belief.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual void fit(const Eigen::MatrixXd& X, std::span<const int> y) = 0;
    virtual Eigen::VectorXd score(const Eigen::MatrixXd& X) const = 0;
    virtual std::string name() const = 0;
};

/// kind: logreg, tree, forest, svm (RBF on standardized features), mlp.
/// params holds the kind's keys (l2, epochs, learning_rate, max_depth,
/// n_estimators, max_features, C, gamma, hidden_dim). With grid_search the
/// kind's grid is scored by 3-fold cross-validated AUC and the best refit.
struct ClassifierSpec {
    std::string kind = "logreg";
    Config params;
    bool grid_search = false;
};

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec, std::uint64_t seed);

} // namespace hetlink
