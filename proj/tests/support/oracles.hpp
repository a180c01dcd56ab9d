#pragma once
// Reference implementations used only by tests. Each one is written from the
// textbook definition and shares no code with the library routine it checks.

#include "hetlink/hetgraph.hpp"
#include "hetlink/sage.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace oracle {

/// Fraction of (positive, negative) pairs ranked correctly, ties counting 1/2.
/// Returned as the exact rational (num2 / (2 P N)) to allow exact comparison.
struct PairCount {
    std::uint64_t twice_concordant = 0; // 2*concordant + ties
    std::uint64_t pairs = 0;            // P*N
    double auc() const { return static_cast<double>(twice_concordant) / (2.0 * static_cast<double>(pairs)); }
};
PairCount brute_force_auc(std::span<const double> scores, std::span<const int> labels);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a, double tol = 1e-14, int max_sweeps = 100);

/// Central differences of f at x with step h.
std::vector<double> central_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h = 1e-5);

/// max_i |a_i - b_i| / max(|a|_inf, |b|_inf, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-8);

/// Layer-wise whole-graph forward pass: every node updated from every
/// neighbor, relation-specific weights averaged over the relations feeding a
/// node's label, ReLU, then L2 normalization. No sampling, no dropout.
/// Returns h^K for every node.
std::vector<Eigen::VectorXd> layerwise_forward(const hetlink::HeteroGraph& g, const hetlink::SageModel& model);

/// sum_{u in G} sum_{v in H} exp(-|x_u - x_v|^2 / (2 sigma^2)), plain loops.
double node_pairs_double_loop(const hetlink::HeteroGraph& g, const hetlink::HeteroGraph& h, double sigma);

/// Copy of g with node ids permuted by perm (new id of old node i is perm[i]).
hetlink::HeteroGraph permute_nodes(const hetlink::HeteroGraph& g, const std::vector<hetlink::NodeId>& perm);

/// Random simple labelled graph with attributes drawn per label, for sage/kernels.
/// Labels are "A" and "B"; attribute dims are dim_a and dim_b.
hetlink::HeteroGraph random_attributed_graph(std::mt19937_64& rng, int n_nodes, double edge_prob, int dim_a,
                                             int dim_b);

/// Random simple labelled graph (labels from `alphabet`) without attributes.
hetlink::HeteroGraph random_labelled_graph(std::mt19937_64& rng, int n_nodes, double edge_prob,
                                           const std::vector<std::string>& alphabet);

} // namespace oracle
