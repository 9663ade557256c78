#include "hedgelab/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace hedgelab {

long Mlp::parameter_count() const {
    long n = 0;
    for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

bool Mlp::all_finite() const {
    for (size_t l = 0; l < weights.size(); ++l) {
        if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
    }
    return true;
}

Mlp make_mlp(const std::vector<int>& layer_sizes, Mlp::Head head, Rng& rng) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("make_mlp: need at least two layer sizes");
    Mlp net;
    net.head = head;
    for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int in = layer_sizes[l];
        const int out = layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / in);
        Eigen::MatrixXd w(out, in);
        for (int j = 0; j < in; ++j) {
            for (int i = 0; i < out; ++i) w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(Eigen::VectorXd::Zero(out));
    }
    return net;
}

void MlpGrads::zero() {
    for (auto& g : d_weights) g.setZero();
    for (auto& g : d_biases) g.setZero();
}

MlpGrads make_grads(const Mlp& net) {
    MlpGrads g;
    for (size_t l = 0; l < net.weights.size(); ++l) {
        g.d_weights.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        g.d_biases.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    }
    return g;
}

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& input, MlpWorkspace* ws) {
    if (input.rows() != net.input_dim()) {
        throw std::invalid_argument("mlp_forward: input dimension mismatch");
    }
    const size_t n_layers = net.weights.size();
    if (ws != nullptr) {
        ws->pre.resize(n_layers);
        ws->act.resize(n_layers + 1);
        ws->act[0] = input;
    }
    Eigen::MatrixXd a = input;
    for (size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = (net.weights[l] * a).colwise() + net.biases[l];
        const bool hidden = l + 1 < n_layers;
        if (hidden) {
            a = z.unaryExpr([leak = net.leak](double x) { return x > 0.0 ? x : leak * x; });
        } else if (net.head == Mlp::Head::sigmoid01) {
            a = z.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
        } else {
            a = z;
        }
        if (ws != nullptr) {
            ws->pre[l] = std::move(z);
            ws->act[l + 1] = a;
        }
    }
    return a;
}

Eigen::MatrixXd mlp_backward(const Mlp& net, const MlpWorkspace& ws, const Eigen::MatrixXd& d_output,
                             MlpGrads& grads) {
    const size_t n_layers = net.weights.size();
    Eigen::MatrixXd delta;
    if (net.head == Mlp::Head::sigmoid01) {
        const Eigen::MatrixXd& y = ws.act[n_layers];
        delta = (d_output.array() * y.array() * (1.0 - y.array())).matrix();
    } else {
        delta = d_output;
    }
    for (size_t l = n_layers; l-- > 0;) {
        grads.d_weights[l].noalias() += delta * ws.act[l].transpose();
        grads.d_biases[l].noalias() += delta.rowwise().sum();
        if (l == 0) {
            return net.weights[0].transpose() * delta;
        }
        Eigen::MatrixXd d_act = net.weights[l].transpose() * delta;
        delta = d_act.cwiseProduct(ws.pre[l - 1].unaryExpr(
            [leak = net.leak](double x) { return x > 0.0 ? 1.0 : leak; }));
    }
    return {};
}

AdamState make_adam(const Mlp& net, double lr) {
    AdamState s;
    s.lr = lr;
    for (size_t l = 0; l < net.weights.size(); ++l) {
        s.m_w.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        s.v_w.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        s.m_b.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
        s.v_b.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    }
    return s;
}

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& s) {
    ++s.step;
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    const double alpha = s.lr * std::sqrt(bc2) / bc1;
    for (size_t l = 0; l < net.weights.size(); ++l) {
        s.m_w[l] = s.beta1 * s.m_w[l] + (1.0 - s.beta1) * grads.d_weights[l];
        s.v_w[l] = s.beta2 * s.v_w[l].array().matrix() +
                   (1.0 - s.beta2) * grads.d_weights[l].cwiseProduct(grads.d_weights[l]);
        net.weights[l].array() -= alpha * s.m_w[l].array() / (s.v_w[l].array().sqrt() + s.eps);

        s.m_b[l] = s.beta1 * s.m_b[l] + (1.0 - s.beta1) * grads.d_biases[l];
        s.v_b[l] = s.beta2 * s.v_b[l].array().matrix() +
                   (1.0 - s.beta2) * grads.d_biases[l].cwiseProduct(grads.d_biases[l]);
        net.biases[l].array() -= alpha * s.m_b[l].array() / (s.v_b[l].array().sqrt() + s.eps);
    }
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
    for (size_t l = 0; l < target.weights.size(); ++l) {
        target.weights[l] = (1.0 - tau) * target.weights[l] + tau * online.weights[l];
        target.biases[l] = (1.0 - tau) * target.biases[l] + tau * online.biases[l];
    }
}

}  // namespace hedgelab
