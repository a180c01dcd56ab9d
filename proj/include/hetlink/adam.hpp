#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace hetlink {

struct AdamState {
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<Eigen::MatrixXd> m;
    std::vector<Eigen::MatrixXd> v;
};

/// Bias-corrected ADAM update in place. Moments are allocated on first use;
/// a later shape change throws DimensionMismatch.
void adam_step(std::span<Eigen::MatrixXd> params, std::span<const Eigen::MatrixXd> grads, AdamState& state);

} // namespace hetlink
