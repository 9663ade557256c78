#include "hedgelab/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hedgelab {

double step_pnl(double c_now, double c_next, double s_now, double s_next, double delta,
                double delta_prev, double cost) {
    return (c_next - c_now) - delta * (s_next - s_now) - cost * s_now * std::abs(delta - delta_prev);
}

double step_reward(double pnl, const RewardConfig& cfg) {
    const double x = 100.0 * pnl;
    const double ax = std::abs(x);
    const double penalty = cfg.alpha == 1.0 ? ax : std::pow(ax, cfg.alpha);
    return 10.0 * (0.03 + x - cfg.kappa * penalty);
}

double EpisodeResult::accumulated_reward() const {
    double r = 0.0;
    for (double v : daily_reward) r += v;
    return r;
}

MarketInputs market_inputs_at(const Episode& episode, int step) {
    const DailyRecord& rec = episode.days.at(static_cast<size_t>(step));
    const double tau = (episode.contract.expiry - rec.date) / 365.0;
    return MarketInputs{rec.underlying, episode.contract.strike, tau, rec.rate, rec.div_yield, rec.iv};
}

EpisodeResult run_episode(const PolicyFn& policy, const Episode& episode, const RewardConfig& cfg,
                          double cost) {
    if (episode.days.size() != kEpisodeRecords) {
        throw std::invalid_argument("run_episode: episode must hold exactly 22 daily records");
    }
    EpisodeResult res;
    res.window_id = episode.window_id;
    res.contract = episode.contract;
    res.daily_pnl.reserve(kEpisodeSteps);
    res.daily_reward.reserve(kEpisodeSteps);
    res.deltas.reserve(kEpisodeSteps);
    res.bs_deltas.reserve(kEpisodeSteps);

    const double s0 = episode.days.front().underlying;
    const double pnl_scale = 1.0 / s0;  // step_reward applies the x100

    double delta_prev = 0.0;
    for (int t = 0; t < kEpisodeSteps; ++t) {
        const DailyRecord& now = episode.days[static_cast<size_t>(t)];
        const DailyRecord& next = episode.days[static_cast<size_t>(t) + 1];
        const MarketInputs market = market_inputs_at(episode, t);

        HedgeState state;
        state.fwd_moneyness = forward_moneyness(market);
        state.tau = market.tau;
        state.inventory = -delta_prev;
        state.iv = now.iv;

        bool fallback = false;
        double delta = policy(state, market, &fallback);
        if (fallback) ++res.policy_fallbacks;
        if (delta < 0.0 || delta > 1.0) {
            ++res.clipped_actions;
            delta = std::clamp(delta, 0.0, 1.0);
        }

        const double raw =
            step_pnl(now.option_mid, next.option_mid, now.underlying, next.underlying, delta,
                     delta_prev, cost);
        const double pnl = raw * pnl_scale;
        res.daily_pnl.push_back(100.0 * pnl);
        res.daily_reward.push_back(step_reward(pnl, cfg));
        res.deltas.push_back(delta);
        res.bs_deltas.push_back(bs_call_delta(market));
        delta_prev = delta;
    }
    double total = 0.0;
    for (double v : res.daily_pnl) total += v;
    res.terminal_pnl = total;
    return res;
}

}  // namespace hedgelab
