#pragma once

#include <cmath>

namespace hedgelab {

// Standard normal CDF via erfc; absolute error below 1e-15.
inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
}

inline double norm_pdf(double x) {
    return 0.39894228040143267793994605993438 * std::exp(-0.5 * x * x);
}

// European call-pricing inputs. Rates are continuously compounded per year,
// tau is in calendar-day years (days / 365), sigma is per sqrt-year.
struct MarketInputs {
    double spot;
    double strike;
    double tau;
    double rate;
    double div_yield;
    double sigma;
};

// Throws std::domain_error unless spot, strike, tau, sigma > 0 and all
// fields are finite.
void validate(const MarketInputs& m);

// S * exp((r - q) * tau) / K
double forward_moneyness(const MarketInputs& m);

double bs_call_price(const MarketInputs& m);

// exp(-q tau) Phi(d1), in [0, exp(-q tau)]
double bs_call_delta(const MarketInputs& m);

// exp(-q tau) S sqrt(tau) phi(d1) >= 0
double bs_call_vega(const MarketInputs& m);

// Inverts bs_call_price in sigma by bisection on [1e-6, 5] to 1e-10 absolute
// price accuracy. Throws std::domain_error when price sits outside the
// no-arbitrage bounds and std::runtime_error if 200 iterations do not
// converge.
double implied_vol(double price, const MarketInputs& m_without_sigma);

}  // namespace hedgelab
