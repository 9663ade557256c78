#include "hedgelab/td3.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "hedgelab/errors.hpp"

namespace hedgelab {

// ---------------------------------------------------------------------------
// Replay buffer

ReplayBuffer::ReplayBuffer(long capacity, int state_dim) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    state_.resize(state_dim, capacity);
    next_state_.resize(state_dim, capacity);
    action_.resize(capacity);
    reward_.resize(capacity);
    done_.resize(capacity);
}

void ReplayBuffer::push(const Eigen::Ref<const Eigen::VectorXd>& state, double action, double reward,
                        const Eigen::Ref<const Eigen::VectorXd>& next_state, bool done) {
    state_.col(head_) = state;
    next_state_.col(head_) = next_state;
    action_(head_) = action;
    reward_(head_) = reward;
    done_(head_) = done ? 1.0 : 0.0;
    head_ = (head_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
}

void ReplayBuffer::sample(Rng& rng, int batch_size, Td3Batch& out) const {
    if (size_ < batch_size) throw std::logic_error("ReplayBuffer: not enough samples");
    out.size = batch_size;
    out.state.resize(state_.rows(), batch_size);
    out.next_state.resize(state_.rows(), batch_size);
    out.action.resize(batch_size);
    out.reward.resize(batch_size);
    out.done.resize(batch_size);
    for (int j = 0; j < batch_size; ++j) {
        const long i = rng.uniform_int(size_);
        out.state.col(j) = state_.col(i);
        out.next_state.col(j) = next_state_.col(i);
        out.action(j) = action_(i);
        out.reward(j) = reward_(i);
        out.done(j) = done_(i);
    }
}

// ---------------------------------------------------------------------------
// Checkpoints

double ActorCheckpoint::act(const HedgeState& state) const {
    const Eigen::Vector4d x = norm.apply(state);
    const Eigen::MatrixXd y = mlp_forward(actor, x);
    return y(0, 0);
}

namespace {

constexpr char kCheckpointMagic[8] = {'H', 'L', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("checkpoint: truncated file");
    return v;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    write_pod<std::int64_t>(out, m.rows());
    write_pod<std::int64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double)) * m.size());
}

Eigen::MatrixXd read_matrix(std::istream& in) {
    const auto rows = read_pod<std::int64_t>(in);
    const auto cols = read_pod<std::int64_t>(in);
    if (rows < 0 || cols < 0 || rows * cols > (1LL << 32)) throw DataError("checkpoint: bad shape");
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
    if (!in) throw DataError("checkpoint: truncated matrix");
    return m;
}

void write_config(std::ostream& out, const TD3Config& c) {
    write_pod(out, c.gamma);
    write_pod(out, c.actor_lr);
    write_pod(out, c.critic_lr);
    write_pod<std::int64_t>(out, c.batch);
    write_pod<std::int64_t>(out, c.buffer_cap);
    write_pod(out, c.explore_noise_sd);
    write_pod(out, c.target_noise_sd);
    write_pod(out, c.target_noise_clip);
    write_pod<std::int64_t>(out, c.policy_delay);
    write_pod(out, c.tau_polyak);
    write_pod<std::int64_t>(out, c.warmup_steps);
    write_pod<std::int64_t>(out, c.train_episodes);
    write_pod<std::int64_t>(out, c.checkpoint_every);
    write_pod<std::int64_t>(out, static_cast<std::int64_t>(c.hidden.size()));
    for (int h : c.hidden) write_pod<std::int64_t>(out, h);
    write_pod(out, c.adam_beta1);
    write_pod(out, c.adam_beta2);
    write_pod(out, c.adam_eps);
    write_pod<std::uint64_t>(out, c.seed);
}

TD3Config read_config(std::istream& in) {
    TD3Config c;
    c.gamma = read_pod<double>(in);
    c.actor_lr = read_pod<double>(in);
    c.critic_lr = read_pod<double>(in);
    c.batch = static_cast<int>(read_pod<std::int64_t>(in));
    c.buffer_cap = read_pod<std::int64_t>(in);
    c.explore_noise_sd = read_pod<double>(in);
    c.target_noise_sd = read_pod<double>(in);
    c.target_noise_clip = read_pod<double>(in);
    c.policy_delay = static_cast<int>(read_pod<std::int64_t>(in));
    c.tau_polyak = read_pod<double>(in);
    c.warmup_steps = read_pod<std::int64_t>(in);
    c.train_episodes = read_pod<std::int64_t>(in);
    c.checkpoint_every = read_pod<std::int64_t>(in);
    const auto n_hidden = read_pod<std::int64_t>(in);
    c.hidden.clear();
    for (std::int64_t i = 0; i < n_hidden; ++i) {
        c.hidden.push_back(static_cast<int>(read_pod<std::int64_t>(in)));
    }
    c.adam_beta1 = read_pod<double>(in);
    c.adam_beta2 = read_pod<double>(in);
    c.adam_eps = read_pod<double>(in);
    c.seed = read_pod<std::uint64_t>(in);
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const ActorCheckpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot open '" + path + "' for writing");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod<std::int64_t>(out, static_cast<std::int64_t>(ckpt.actor.weights.size()));
    for (size_t l = 0; l < ckpt.actor.weights.size(); ++l) {
        write_matrix(out, ckpt.actor.weights[l]);
        write_matrix(out, ckpt.actor.biases[l]);
    }
    write_pod<std::uint8_t>(out, ckpt.actor.head == Mlp::Head::sigmoid01 ? 1 : 0);
    write_pod(out, ckpt.actor.leak);
    write_matrix(out, ckpt.norm.mean);
    write_matrix(out, ckpt.norm.std);
    write_config(out, ckpt.config);
    write_pod<std::int64_t>(out, ckpt.trained_episodes);
    if (!out) throw DataError("checkpoint: write failed for '" + path + "'");
}

ActorCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw DataError("checkpoint: bad magic in '" + path + "'");
    }
    ActorCheckpoint ckpt;
    const auto n_layers = read_pod<std::int64_t>(in);
    for (std::int64_t l = 0; l < n_layers; ++l) {
        ckpt.actor.weights.push_back(read_matrix(in));
        ckpt.actor.biases.push_back(read_matrix(in).col(0));
    }
    ckpt.actor.head = read_pod<std::uint8_t>(in) == 1 ? Mlp::Head::sigmoid01 : Mlp::Head::linear;
    ckpt.actor.leak = read_pod<double>(in);
    ckpt.norm.mean = read_matrix(in).col(0);
    ckpt.norm.std = read_matrix(in).col(0);
    ckpt.config = read_config(in);
    ckpt.trained_episodes = read_pod<std::int64_t>(in);
    return ckpt;
}

// ---------------------------------------------------------------------------
// Agent and updates

TD3Agent::TD3Agent(const TD3Config& cfg_in, const StateNorm& norm_in)
    : cfg(cfg_in), norm(norm_in), rng(cfg_in.seed) {
    std::vector<int> actor_sizes{kStateDim};
    std::vector<int> critic_sizes{kStateDim + 1};
    for (int h : cfg.hidden) {
        actor_sizes.push_back(h);
        critic_sizes.push_back(h);
    }
    actor_sizes.push_back(1);
    critic_sizes.push_back(1);

    actor = make_mlp(actor_sizes, Mlp::Head::sigmoid01, rng);
    critic1 = make_mlp(critic_sizes, Mlp::Head::linear, rng);
    critic2 = make_mlp(critic_sizes, Mlp::Head::linear, rng);
    actor_target = actor;
    critic1_target = critic1;
    critic2_target = critic2;
    actor_opt = make_adam(actor, cfg.actor_lr);
    critic1_opt = make_adam(critic1, cfg.critic_lr);
    critic2_opt = make_adam(critic2, cfg.critic_lr);
    actor_opt.beta1 = critic1_opt.beta1 = critic2_opt.beta1 = cfg.adam_beta1;
    actor_opt.beta2 = critic1_opt.beta2 = critic2_opt.beta2 = cfg.adam_beta2;
    actor_opt.eps = critic1_opt.eps = critic2_opt.eps = cfg.adam_eps;
    critic1_grads = make_grads(critic1);
    critic2_grads = make_grads(critic2);
    actor_grads = make_grads(actor);
    critic_scratch_grads = make_grads(critic1);
}

ActorCheckpoint TD3Agent::checkpoint(long episodes_done) const {
    return ActorCheckpoint{actor, norm, cfg, episodes_done};
}

Eigen::VectorXd critic_target(const Td3Batch& batch, const Mlp& actor_target,
                              const Mlp& critic1_target, const Mlp& critic2_target,
                              const TD3Config& cfg, Rng& rng) {
    if (batch.size <= 0) throw std::invalid_argument("critic_target: empty batch");
    const Eigen::MatrixXd mu = mlp_forward(actor_target, batch.next_state);
    Eigen::MatrixXd critic_in(batch.next_state.rows() + 1, batch.size);
    critic_in.topRows(batch.next_state.rows()) = batch.next_state;
    for (int j = 0; j < batch.size; ++j) {
        const double noise = std::clamp(rng.normal(0.0, cfg.target_noise_sd),
                                        -cfg.target_noise_clip, cfg.target_noise_clip);
        critic_in(batch.next_state.rows(), j) = std::clamp(mu(0, j) + noise, 0.0, 1.0);
    }
    const Eigen::MatrixXd q1 = mlp_forward(critic1_target, critic_in);
    const Eigen::MatrixXd q2 = mlp_forward(critic2_target, critic_in);
    Eigen::VectorXd y(batch.size);
    for (int j = 0; j < batch.size; ++j) {
        y(j) = batch.reward(j) +
               cfg.gamma * (1.0 - batch.done(j)) * std::min(q1(0, j), q2(0, j));
    }
    return y;
}

namespace {

double critic_regression_step(Mlp& critic, AdamState& opt, const Eigen::MatrixXd& input,
                              const Eigen::VectorXd& target, MlpWorkspace& ws, MlpGrads& grads) {
    const int batch = static_cast<int>(target.size());
    const Eigen::MatrixXd q = mlp_forward(critic, input, &ws);
    const Eigen::MatrixXd err = q.row(0).transpose() - target;
    const double loss = err.squaredNorm() / batch;
    grads.zero();
    Eigen::MatrixXd d_out = (2.0 / batch) * err.transpose();
    mlp_backward(critic, ws, d_out, grads);
    adam_step(critic, grads, opt);
    return loss;
}

}  // namespace

UpdateDiagnostics update_step(TD3Agent& agent, const ReplayBuffer& buffer) {
    UpdateDiagnostics diag;
    buffer.sample(agent.rng, agent.cfg.batch, agent.batch_ws);
    const Td3Batch& batch = agent.batch_ws;
    const int state_dim = static_cast<int>(batch.state.rows());

    const Eigen::VectorXd y =
        critic_target(batch, agent.actor_target, agent.critic1_target, agent.critic2_target,
                      agent.cfg, agent.rng);

    Eigen::MatrixXd critic_in(state_dim + 1, batch.size);
    critic_in.topRows(state_dim) = batch.state;
    critic_in.row(state_dim) = batch.action.transpose();

    const double loss1 = critic_regression_step(agent.critic1, agent.critic1_opt, critic_in, y,
                                                agent.critic_ws, agent.critic1_grads);
    const double loss2 = critic_regression_step(agent.critic2, agent.critic2_opt, critic_in, y,
                                                agent.critic_ws, agent.critic2_grads);
    diag.critic_loss = 0.5 * (loss1 + loss2);
    if (!std::isfinite(diag.critic_loss)) {
        throw std::runtime_error("td3: non-finite critic loss at update " +
                                 std::to_string(agent.update_count));
    }

    ++agent.update_count;
    if (agent.update_count % agent.cfg.policy_delay == 0) {
        // actor ascends critic-1's value at mu(s)
        const Eigen::MatrixXd a_pi = mlp_forward(agent.actor, batch.state, &agent.actor_ws);
        Eigen::MatrixXd pi_in(state_dim + 1, batch.size);
        pi_in.topRows(state_dim) = batch.state;
        pi_in.row(state_dim) = a_pi.row(0);
        const Eigen::MatrixXd q = mlp_forward(agent.critic1, pi_in, &agent.actor_q_ws);
        diag.actor_objective = q.mean();

        agent.critic_scratch_grads.zero();
        Eigen::MatrixXd d_q = Eigen::MatrixXd::Constant(1, batch.size, -1.0 / batch.size);
        const Eigen::MatrixXd d_input =
            mlp_backward(agent.critic1, agent.actor_q_ws, d_q, agent.critic_scratch_grads);
        agent.actor_grads.zero();
        mlp_backward(agent.actor, agent.actor_ws, d_input.row(state_dim), agent.actor_grads);
        adam_step(agent.actor, agent.actor_grads, agent.actor_opt);

        polyak_update(agent.actor_target, agent.actor, agent.cfg.tau_polyak);
        polyak_update(agent.critic1_target, agent.critic1, agent.cfg.tau_polyak);
        polyak_update(agent.critic2_target, agent.critic2, agent.cfg.tau_polyak);
        diag.actor_updated = true;
    }
    return diag;
}

// ---------------------------------------------------------------------------
// Training

StateNorm scan_state_moments(const std::vector<Episode>& pool) {
    if (pool.empty()) throw DataError("scan_state_moments: empty training pool");
    Eigen::Vector4d sum = Eigen::Vector4d::Zero();
    Eigen::Vector4d sum_sq = Eigen::Vector4d::Zero();
    long n = 0;
    // subsample large pools on a fixed stride for a bounded, deterministic scan
    const size_t stride = std::max<size_t>(1, pool.size() / 2000);
    for (size_t i = 0; i < pool.size(); i += stride) {
        const Episode& ep = pool[i];
        double delta_prev = 0.0;
        for (int t = 0; t < kEpisodeSteps; ++t) {
            const MarketInputs m = market_inputs_at(ep, t);
            const double bs = bs_call_delta(m);
            Eigen::Vector4d x(forward_moneyness(m), m.tau, -delta_prev, ep.days[t].iv);
            sum += x;
            sum_sq += x.cwiseProduct(x);
            ++n;
            delta_prev = bs;
        }
    }
    StateNorm norm;
    norm.mean = sum / n;
    const Eigen::Vector4d var = sum_sq / n - norm.mean.cwiseProduct(norm.mean);
    norm.std = var.cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-8);
    return norm;
}

ActorCheckpoint train(const std::vector<Episode>& training_pool, const TD3Config& cfg,
                      const RewardConfig& reward_cfg, double cost, const TrainHooks& hooks,
                      TrainDiagnostics* diag) {
    if (training_pool.empty()) throw DataError("td3::train: empty training pool");
    const StateNorm norm = scan_state_moments(training_pool);
    TD3Agent agent(cfg, norm);
    ReplayBuffer buffer(cfg.buffer_cap);
    TrainDiagnostics local;

    for (long ep_idx = 0; ep_idx < cfg.train_episodes; ++ep_idx) {
        const Episode& ep = training_pool[agent.rng.uniform_int(static_cast<long>(training_pool.size()))];
        const double s0 = ep.days.front().underlying;
        double delta_prev = 0.0;
        Eigen::Vector4d state;
        {
            const MarketInputs m0 = market_inputs_at(ep, 0);
            HedgeState h{forward_moneyness(m0), m0.tau, 0.0, ep.days[0].iv};
            state = norm.apply(h);
        }
        for (int t = 0; t < kEpisodeSteps; ++t) {
            const Eigen::MatrixXd mu = mlp_forward(agent.actor, state);
            const double action =
                std::clamp(mu(0, 0) + agent.rng.normal(0.0, cfg.explore_noise_sd), 0.0, 1.0);

            const DailyRecord& now = ep.days[static_cast<size_t>(t)];
            const DailyRecord& next = ep.days[static_cast<size_t>(t) + 1];
            const double raw = step_pnl(now.option_mid, next.option_mid, now.underlying,
                                        next.underlying, action, delta_prev, cost);
            const double reward = step_reward(raw / s0, reward_cfg);

            const bool done = t + 1 == kEpisodeSteps;
            Eigen::Vector4d next_state;
            {
                const MarketInputs mn = market_inputs_at(ep, t + 1);
                HedgeState h{forward_moneyness(mn), mn.tau, -action, next.iv};
                next_state = norm.apply(h);
            }
            buffer.push(state, action, reward, next_state, done);
            ++local.env_steps;
            if (local.env_steps > cfg.warmup_steps && buffer.size() >= cfg.batch) {
                const UpdateDiagnostics ud = update_step(agent, buffer);
                local.last_critic_loss = ud.critic_loss;
                ++local.updates;
            }
            state = next_state;
            delta_prev = action;
        }
        if (hooks.on_checkpoint && cfg.checkpoint_every > 0 &&
            (ep_idx + 1) % cfg.checkpoint_every == 0) {
            if (!agent.actor.all_finite()) {
                throw std::runtime_error("td3: non-finite actor parameters at episode " +
                                         std::to_string(ep_idx + 1));
            }
            hooks.on_checkpoint(ep_idx + 1, agent.checkpoint(ep_idx + 1));
        }
    }
    if (!agent.actor.all_finite() || !agent.critic1.all_finite() || !agent.critic2.all_finite()) {
        throw std::runtime_error("td3: non-finite parameters after training");
    }
    if (diag != nullptr) *diag = local;
    ActorCheckpoint final = agent.checkpoint(cfg.train_episodes);
    if (hooks.on_checkpoint && cfg.train_episodes % std::max<long>(cfg.checkpoint_every, 1) != 0) {
        hooks.on_checkpoint(cfg.train_episodes, final);
    }
    return final;
}

}  // namespace hedgelab
