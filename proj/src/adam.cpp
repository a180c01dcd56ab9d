#include "hetlink/adam.hpp"

#include "hetlink/errors.hpp"

#include <cmath>

namespace hetlink {

void adam_step(std::span<Eigen::MatrixXd> params, std::span<const Eigen::MatrixXd> grads, AdamState& state) {
    if (params.size() != grads.size()) throw DimensionMismatch("adam: parameter and gradient counts differ");
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
            state.v.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
        }
    }
    if (state.m.size() != params.size()) throw DimensionMismatch("adam: state does not match parameter list");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols() ||
            state.m[i].rows() != params[i].rows() || state.m[i].cols() != params[i].cols()) {
            throw DimensionMismatch("adam: shape mismatch at parameter " + std::to_string(i));
        }
    }

    ++state.t;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = state.m[i];
        auto& v = state.v[i];
        const auto& g = grads[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
        params[i].array() -= state.alpha * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
    }
}

} // namespace hetlink
