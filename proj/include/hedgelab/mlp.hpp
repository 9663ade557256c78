#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hedgelab/rng.hpp"

namespace hedgelab {

// Dense feedforward net with leaky-ReLU hidden layers (slope 0.01) and either
// a linear head (critics) or a logistic head onto [0,1] (actor). Batches are
// column-major: inputs are (dim x batch).
struct Mlp {
    enum class Head { linear, sigmoid01 };

    std::vector<Eigen::MatrixXd> weights;  // weights[l]: (out_l x in_l)
    std::vector<Eigen::VectorXd> biases;
    Head head = Head::linear;
    double leak = 0.01;

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
    long parameter_count() const;
    bool all_finite() const;
};

// He-style uniform init, deterministic given the rng state.
Mlp make_mlp(const std::vector<int>& layer_sizes, Mlp::Head head, Rng& rng);

// Stored pre-activations/activations for one forward pass, reused across
// steps to avoid reallocation.
struct MlpWorkspace {
    std::vector<Eigen::MatrixXd> pre;  // z_l
    std::vector<Eigen::MatrixXd> act;  // a_l, act[0] = input
};

struct MlpGrads {
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;

    void zero();
};

MlpGrads make_grads(const Mlp& net);

// Forward pass; when ws is provided the intermediates needed by
// mlp_backward are captured.
Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& input, MlpWorkspace* ws = nullptr);

// Backprop of dL/d(output) through the pass captured in ws. Accumulates into
// grads (call grads.zero() first) and returns dL/d(input).
Eigen::MatrixXd mlp_backward(const Mlp& net, const MlpWorkspace& ws, const Eigen::MatrixXd& d_output,
                             MlpGrads& grads);

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
};

AdamState make_adam(const Mlp& net, double lr);
void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state);

// target <- (1 - tau) * target + tau * online
void polyak_update(Mlp& target, const Mlp& online, double tau);

}  // namespace hedgelab
