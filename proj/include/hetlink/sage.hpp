#pragma once

#include "hetlink/adam.hpp"
#include "hetlink/config.hpp"
#include "hetlink/hetgraph.hpp"
#include "hetlink/rng.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hetlink {

struct SageConfig {
    std::vector<int> layer_dims{128, 128};
    std::vector<int> fanouts{10, 5}; // per hop from the target; 0 takes every neighbor
    double dropout = 0.1;
    int epochs = 20;
    int batch_size = 32;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
    bool nonzero_edges_only = true; // message passing ignores edges with weight 0

    int depth() const { return static_cast<int>(layer_dims.size()); }
    void validate() const;
    static SageConfig from_config(const Config& cfg);
    Config to_config() const;
};

/// Messages flow from neighbor_label nodes into node_label nodes.
struct Relation {
    std::string neighbor_label;
    std::string node_label;

    bool operator==(const Relation&) const = default;
};

struct LabelDim {
    std::string label;
    int dim;

    bool operator==(const LabelDim&) const = default;
};

/// Relation-specific layer weights plus a hadamard link head.
///
/// params() layout: W[layer * R + relation] for every layer and relation,
/// then the head weight (out_dim x 1), then the head bias (1 x 1).
/// Layers have no bias; W[i, r] maps concat(self, neighbor mean) to layer_dims[i].
class SageModel {
public:
    SageModel() = default;
    /// Relations and input sizes are read off the graph; weights are Glorot-uniform from config.seed.
    SageModel(const HeteroGraph& graph, SageConfig config);

    const SageConfig& config() const noexcept { return config_; }
    const std::vector<Relation>& relations() const noexcept { return relations_; }
    const std::vector<LabelDim>& input_dims() const noexcept { return input_dims_; }
    int input_dim(const std::string& label) const;
    int out_dim() const { return config_.layer_dims.back(); }

    std::vector<Eigen::MatrixXd>& params() noexcept { return params_; }
    const std::vector<Eigen::MatrixXd>& params() const noexcept { return params_; }
    Eigen::MatrixXd& weight(int layer, int relation);
    const Eigen::MatrixXd& weight(int layer, int relation) const;
    Eigen::MatrixXd& head_weight() { return params_[params_.size() - 2]; }
    const Eigen::MatrixXd& head_weight() const { return params_[params_.size() - 2]; }
    double& head_bias() { return params_.back()(0, 0); }
    double head_bias() const { return params_.back()(0, 0); }

    void write(std::ostream& out) const;
    static SageModel read(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static SageModel load(const std::filesystem::path& path);

private:
    SageConfig config_;
    std::vector<Relation> relations_;
    std::vector<LabelDim> input_dims_;
    std::vector<Eigen::MatrixXd> params_;
};

/// A graph bound to a model: per-node, per-relation message neighbor lists.
class SageContext {
public:
    SageContext(const HeteroGraph& graph, const SageModel& model);

    const HeteroGraph& graph() const noexcept { return *graph_; }
    /// Model relation indices that feed nodes with this node's label.
    const std::vector<int>& relations_of(NodeId v) const;
    /// Neighbors of v along relations_of(v)[k].
    const std::vector<NodeId>& neighbors(NodeId v, std::size_t k) const;

private:
    const HeteroGraph* graph_;
    std::vector<std::vector<int>> label_relations_;
    std::vector<std::vector<std::vector<NodeId>>> neighbors_;
};

enum class SageMode { train, eval };

/// Inverted-dropout mean; zero vector (of size `dim`) for an empty list.
Eigen::VectorXd mean_aggregate(std::span<const Eigen::VectorXd> states, Eigen::Index dim, double dropout, Rng& rng);

/// Representations h^k for `nodes`. Train mode applies dropout and samples
/// neighborhoods from `rng`; eval mode has no dropout and samples from a
/// stream fixed by (config seed, node), so it is repeatable.
std::vector<Eigen::VectorXd> sage_forward(const SageContext& ctx, const SageModel& model,
                                          std::span<const NodeId> nodes, SageMode mode, Rng& rng);

double link_head(const Eigen::VectorXd& za, const Eigen::VectorXd& zb, const Eigen::VectorXd& w, double bias);
double link_probability(const SageContext& ctx, const SageModel& model, NodeId a, NodeId b);

struct UnsupervisedLoss {
    double loss = 0.0;
    Eigen::VectorXd grad_u;
    Eigen::VectorXd grad_pos;
    std::vector<Eigen::VectorXd> grad_negs;
};

/// -log s(zu.zpos) - (Q/|negs|) sum log s(-zu.zneg), with gradients.
UnsupervisedLoss unsupervised_loss(const Eigen::VectorXd& zu, const Eigen::VectorXd& zpos,
                                   std::span<const Eigen::VectorXd> znegs, int Q);

struct LabeledPair {
    NodeId a;
    NodeId b;
    double label;
};

/// Log-loss of the link head on one pair; when `grads` is non-null, adds
/// d loss / d params into it (sized like model.params()).
double sage_pair_loss(const SageContext& ctx, const SageModel& model, const LabeledPair& pair, SageMode mode,
                      Rng& rng, std::vector<Eigen::MatrixXd>* grads);

struct SageTrainResult {
    std::vector<double> epoch_losses;
};

/// Mini-batch ADAM on link-head log-loss. Zero epochs leaves the model untouched.
SageTrainResult train_hinsage(const SageContext& ctx, SageModel& model, std::span<const LabeledPair> pairs);

} // namespace hetlink
