#pragma once

#include <string>
#include <vector>

#include "hedgelab/marketdata.hpp"
#include "hedgelab/pricing.hpp"

namespace hedgelab {

// Actor observation: forward moneyness, time to maturity, current underlying
// inventory h = -delta_prev, and implied volatility.
struct HedgeState {
    double fwd_moneyness = 1.0;
    double tau = 0.0;
    double inventory = 0.0;  // in [-1, 0]
    double iv = 0.0;
};

// r = 10 * (0.03 + X - kappa |X|^alpha), X the P&L in percent of the episode's
// initial underlying level. With kappa = alpha = 1 this is the pure shortfall
// form 0.3 - 20 max(-X, 0).
struct RewardConfig {
    double kappa = 1.0;
    double alpha = 1.0;
};

// Raw daily hedging P&L in price units:
//   (c_next - c_now) - delta (s_next - s_now) - cost s_now |delta - delta_prev|
double step_pnl(double c_now, double c_next, double s_now, double s_next, double delta,
                double delta_prev, double cost);

// pnl is in pre-scaling units; X = 100 * pnl inside the formula.
double step_reward(double pnl, const RewardConfig& cfg);

struct EpisodeResult {
    std::string window_id;
    ContractKey contract;
    std::string policy_name;
    std::vector<double> daily_pnl;     // 21 values, percent of initial underlying
    std::vector<double> daily_reward;  // 21 values
    std::vector<double> deltas;        // policy hedge ratios
    std::vector<double> bs_deltas;     // benchmark ratios from the same records
    double terminal_pnl = 0.0;         // exact order-preserving sum of daily_pnl
    long clipped_actions = 0;
    long policy_fallbacks = 0;

    double accumulated_reward() const;  // undiscounted sum
};

// Hedge-ratio callback: given the day's state and pricing inputs, return
// delta in [0,1]. `fallback_used` reports expression-evaluation fallbacks.
class PolicyFn {
  public:
    virtual ~PolicyFn() = default;
    virtual double operator()(const HedgeState& state, const MarketInputs& market,
                              bool* fallback_used) const = 0;
};

// Rolls one policy over one episode with shared accounting. Stored P&L and
// rewards are in percent-of-initial-underlying units; the Black-Scholes
// benchmark deltas are booked from the same records. Policy outputs outside
// [0,1] are clipped and counted.
EpisodeResult run_episode(const PolicyFn& policy, const Episode& episode, const RewardConfig& cfg,
                          double cost);

// Pricing inputs for decision step t of an episode.
MarketInputs market_inputs_at(const Episode& episode, int step);

}  // namespace hedgelab
