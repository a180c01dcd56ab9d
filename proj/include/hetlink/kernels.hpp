#pragma once

#include "hetlink/config.hpp"
#include "hetlink/hetgraph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hetlink {

enum class KernelKind { node_pairs_rbf, vertex_label_histogram, propagation };

KernelKind parse_kernel_kind(std::string_view name);
std::string_view kernel_kind_name(KernelKind kind);

struct KernelConfig {
    KernelKind kind = KernelKind::propagation;
    double rbf_sigma = 1.0;
    int iterations = 3;   // propagation steps T
    double bin_width = 0.1;
    int projections = 3;  // random projections per hash key
    std::uint64_t seed = 0;
    bool normalize = true;
    int threads = 1;

    void validate() const;
    static KernelConfig from_config(const Config& cfg);
    Config to_config() const;
};

double rbf(std::span<const double> x, std::span<const double> y, double sigma);

/// Sum of RBF values over all node pairs. Every node must carry attributes.
double node_pairs_kernel(const HeteroGraph& g, const HeteroGraph& h, double sigma);

/// Dot product of node-label count histograms, labels matched by name.
double vertex_label_histogram_kernel(const HeteroGraph& g, const HeteroGraph& h);

/// Per-iteration bin histograms of a graph's propagated label distributions.
/// Iteration 0 is the one-hot labelling; isolated nodes keep their state.
/// Bin keys hash the iteration and rounded random projections whose
/// directions are keyed by label name, so features of different graphs are
/// comparable without a shared alphabet.
struct PropagationFeatures {
    std::vector<std::map<std::vector<std::int64_t>, double>> histograms;
};

PropagationFeatures propagation_features(const HeteroGraph& g, const KernelConfig& config);
double propagation_dot(const PropagationFeatures& a, const PropagationFeatures& b);
double propagation_kernel(const HeteroGraph& g, const HeteroGraph& h, const KernelConfig& config);

/// Copy of g whose attributes are one-hot node labels over `alphabet`
/// (labels missing from it get an all-zero vector).
HeteroGraph with_label_attributes(const HeteroGraph& g, const std::vector<std::string>& alphabet);

/// Sorted union of node-label names over a set of graphs.
std::vector<std::string> label_union(std::span<const HeteroGraph> graphs);

struct GramMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    bool normalized = false;
};

/// Square Gram matrix over one graph set: upper triangle, mirrored.
GramMatrix gram_matrix(std::span<const HeteroGraph> graphs, std::span<const std::string> ids,
                       const KernelConfig& config);

/// Rectangular rows x cols Gram matrix. Normalization uses each graph's self-kernel.
GramMatrix gram_matrix(std::span<const HeteroGraph> rows, std::span<const std::string> row_ids,
                       std::span<const HeteroGraph> cols, std::span<const std::string> col_ids,
                       const KernelConfig& config);

struct PsdResult {
    bool psd = false;
    double min_eigenvalue = 0.0;
};

/// Throws std::invalid_argument when m is not square or not symmetric within tol.
PsdResult psd_check(const Eigen::MatrixXd& m, double tol = 1e-8);

void write_gram_tsv(std::ostream& out, const GramMatrix& gram);

} // namespace hetlink
