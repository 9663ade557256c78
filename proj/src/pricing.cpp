#include "hedgelab/pricing.hpp"

#include <algorithm>
#include <stdexcept>

namespace hedgelab {

namespace {

// Below this the d1/d2 terms degenerate; prices collapse to the forward
// intrinsic value and delta to a step at forward ATM.
constexpr double kVolTimeFloor = 1e-8;

}  // namespace

void validate(const MarketInputs& m) {
    if (!(m.spot > 0.0) || !std::isfinite(m.spot)) throw std::domain_error("pricing: spot must be positive");
    if (!(m.strike > 0.0) || !std::isfinite(m.strike)) throw std::domain_error("pricing: strike must be positive");
    if (!(m.tau > 0.0) || !std::isfinite(m.tau)) throw std::domain_error("pricing: tau must be positive");
    if (!(m.sigma > 0.0) || !std::isfinite(m.sigma)) throw std::domain_error("pricing: sigma must be positive");
    if (!std::isfinite(m.rate) || !std::isfinite(m.div_yield)) throw std::domain_error("pricing: non-finite rate inputs");
    const double fwd = m.spot * std::exp((m.rate - m.div_yield) * m.tau);
    if (!(fwd > 0.0) || !std::isfinite(fwd)) throw std::domain_error("pricing: degenerate forward");
}

double forward_moneyness(const MarketInputs& m) {
    validate(m);
    return m.spot * std::exp((m.rate - m.div_yield) * m.tau) / m.strike;
}

double bs_call_price(const MarketInputs& m) {
    validate(m);
    const double df_q = std::exp(-m.div_yield * m.tau);
    const double df_r = std::exp(-m.rate * m.tau);
    const double vol_time = m.sigma * std::sqrt(m.tau);
    if (vol_time < kVolTimeFloor) {
        return std::max(0.0, df_q * m.spot - df_r * m.strike);
    }
    const double fwd = m.spot * std::exp((m.rate - m.div_yield) * m.tau);
    const double d1 = (std::log(fwd / m.strike) + 0.5 * vol_time * vol_time) / vol_time;
    const double d2 = d1 - vol_time;
    return df_q * m.spot * norm_cdf(d1) - df_r * m.strike * norm_cdf(d2);
}

double bs_call_delta(const MarketInputs& m) {
    validate(m);
    const double df_q = std::exp(-m.div_yield * m.tau);
    const double vol_time = m.sigma * std::sqrt(m.tau);
    const double fwd = m.spot * std::exp((m.rate - m.div_yield) * m.tau);
    if (vol_time < kVolTimeFloor) {
        if (fwd > m.strike) return df_q;
        if (fwd < m.strike) return 0.0;
        return 0.5 * df_q;
    }
    const double d1 = (std::log(fwd / m.strike) + 0.5 * vol_time * vol_time) / vol_time;
    return df_q * norm_cdf(d1);
}

double bs_call_vega(const MarketInputs& m) {
    validate(m);
    const double vol_time = m.sigma * std::sqrt(m.tau);
    if (vol_time < kVolTimeFloor) return 0.0;
    const double df_q = std::exp(-m.div_yield * m.tau);
    const double fwd = m.spot * std::exp((m.rate - m.div_yield) * m.tau);
    const double d1 = (std::log(fwd / m.strike) + 0.5 * vol_time * vol_time) / vol_time;
    return df_q * m.spot * std::sqrt(m.tau) * norm_pdf(d1);
}

double implied_vol(double price, const MarketInputs& m_without_sigma) {
    MarketInputs m = m_without_sigma;
    m.sigma = 0.5;  // placeholder so validate() sees a full input set
    validate(m);
    const double df_q = std::exp(-m.div_yield * m.tau);
    const double df_r = std::exp(-m.rate * m.tau);
    const double lower = std::max(0.0, df_q * m.spot - df_r * m.strike);
    const double upper = df_q * m.spot;
    if (!(price > lower) || !(price < upper)) {
        throw std::domain_error("implied_vol: price outside no-arbitrage bounds");
    }

    double lo = 1e-6, hi = 5.0;
    constexpr int kMaxIter = 200;
    constexpr double kPriceTol = 1e-10;
    for (int it = 0; it < kMaxIter; ++it) {
        const double mid = 0.5 * (lo + hi);
        m.sigma = mid;
        const double diff = bs_call_price(m) - price;
        if (std::abs(diff) <= kPriceTol) return mid;
        if (diff > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    throw std::runtime_error("implied_vol: no convergence within iteration cap");
}

}  // namespace hedgelab
