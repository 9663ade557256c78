#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "hedgelab/env.hpp"
#include "hedgelab/mlp.hpp"
#include "hedgelab/rng.hpp"

namespace hedgelab {

constexpr int kStateDim = 4;

// Frozen training-sample standardization moments.
struct StateNorm {
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Vector4d std = Eigen::Vector4d::Ones();

    Eigen::Vector4d apply(const HedgeState& s) const {
        Eigen::Vector4d raw(s.fwd_moneyness, s.tau, s.inventory, s.iv);
        return (raw - mean).cwiseQuotient(std);
    }
};

struct TD3Config {
    double gamma = 0.99;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    int batch = 256;
    long buffer_cap = 1'000'000;
    double explore_noise_sd = 0.1;
    double target_noise_sd = 0.2;
    double target_noise_clip = 0.5;
    int policy_delay = 2;
    double tau_polyak = 0.005;
    long warmup_steps = 1000;
    long train_episodes = 20'000;
    long checkpoint_every = 1000;  // episodes between evaluation checkpoints
    std::vector<int> hidden = {256, 256};
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
};

struct Td3Batch {
    Eigen::MatrixXd state;       // (4 x B), standardized
    Eigen::VectorXd action;      // in [0,1]
    Eigen::VectorXd reward;
    Eigen::MatrixXd next_state;  // (4 x B), standardized
    Eigen::VectorXd done;        // 0/1
    int size = 0;
};

// FIFO ring buffer with uniform minibatch sampling.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(long capacity, int state_dim = kStateDim);

    void push(const Eigen::Ref<const Eigen::VectorXd>& state, double action, double reward,
              const Eigen::Ref<const Eigen::VectorXd>& next_state, bool done);
    void sample(Rng& rng, int batch_size, Td3Batch& out) const;

    long size() const { return size_; }
    long capacity() const { return capacity_; }

  private:
    long capacity_;
    long size_ = 0;
    long head_ = 0;  // next slot to overwrite
    Eigen::MatrixXd state_, next_state_;
    Eigen::VectorXd action_, reward_, done_;
};

// Frozen trained actor plus everything needed to reproduce its decisions.
struct ActorCheckpoint {
    Mlp actor;
    StateNorm norm;
    TD3Config config;
    long trained_episodes = 0;

    double act(const HedgeState& state) const;
};

// Versioned binary container; round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ActorCheckpoint& ckpt);
ActorCheckpoint load_checkpoint(const std::string& path);

struct TD3Agent {
    TD3Config cfg;
    StateNorm norm;
    Mlp actor, critic1, critic2;
    Mlp actor_target, critic1_target, critic2_target;
    AdamState actor_opt, critic1_opt, critic2_opt;
    Rng rng;
    long update_count = 0;

    // scratch reused across update steps
    Td3Batch batch_ws;
    MlpWorkspace critic_ws, actor_ws, actor_q_ws;
    MlpGrads critic1_grads, critic2_grads, actor_grads, critic_scratch_grads;

    explicit TD3Agent(const TD3Config& cfg, const StateNorm& norm);

    ActorCheckpoint checkpoint(long episodes_done) const;
};

// Clipped double-Q targets:
//   y = r + gamma (1 - done) min_k Q_k(s', clip(mu^-(s') + eps, 0, 1))
// with eps ~ N(0, target_noise_sd^2) clipped to +-target_noise_clip.
Eigen::VectorXd critic_target(const Td3Batch& batch, const Mlp& actor_target,
                              const Mlp& critic1_target, const Mlp& critic2_target,
                              const TD3Config& cfg, Rng& rng);

struct UpdateDiagnostics {
    double critic_loss = 0.0;
    double actor_objective = 0.0;
    bool actor_updated = false;
};

// One TD3 gradient step: both critics regress on the clipped double-Q target;
// every policy_delay steps the actor ascends critic-1 and the targets
// Polyak-mix. Throws on non-finite gradients.
UpdateDiagnostics update_step(TD3Agent& agent, const ReplayBuffer& buffer);

// Standardization moments from a Black-Scholes-delta scan over the pool.
StateNorm scan_state_moments(const std::vector<Episode>& pool);

struct TrainHooks {
    // called every cfg.checkpoint_every episodes and once at the end
    std::function<void(long episodes_done, const ActorCheckpoint&)> on_checkpoint;
};

struct TrainDiagnostics {
    long env_steps = 0;
    long updates = 0;
    double last_critic_loss = 0.0;
};

// Uniform-start episode sampling with exploration noise, one update per
// environment step after warmup. Deterministic given cfg.seed.
ActorCheckpoint train(const std::vector<Episode>& training_pool, const TD3Config& cfg,
                      const RewardConfig& reward_cfg, double cost, const TrainHooks& hooks = {},
                      TrainDiagnostics* diag = nullptr);

}  // namespace hedgelab
