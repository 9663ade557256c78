#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "hedgelab/pricing.hpp"
#include "hedgelab/rng.hpp"
#include "oracles.hpp"

using namespace hedgelab;

namespace {

MarketInputs atm() { return MarketInputs{100.0, 100.0, 1.0, 0.0, 0.0, 0.2}; }

}  // namespace

TEST_CASE("bs_call_price limits") {
    MarketInputs m = atm();
    m.sigma = 1e-8;
    CHECK(std::abs(bs_call_price(m)) < 1e-4);  // vanishing vol: ATM value collapses to intrinsic 0

    MarketInputs deep{200.0, 100.0, 0.25, 0.0, 0.0, 0.2};
    CHECK(std::abs(bs_call_price(deep) - 100.0) < 0.01);
}

TEST_CASE("bs_call_price matches lognormal quadrature oracle") {
    const MarketInputs m = atm();
    const double oracle =
        oracles::quadrature_call_price(m.spot, m.strike, m.tau, m.rate, m.div_yield, m.sigma);
    CHECK(std::abs(bs_call_price(m) - oracle) <= 1e-6);

    const MarketInputs itm{120.0, 100.0, 0.5, 0.03, 0.01, 0.35};
    const double oracle2 =
        oracles::quadrature_call_price(itm.spot, itm.strike, itm.tau, itm.rate, itm.div_yield, itm.sigma);
    CHECK(std::abs(bs_call_price(itm) - oracle2) <= 1e-6);
}

TEST_CASE("bs_call_delta limits and finite-difference oracle") {
    MarketInputs deep{200.0, 100.0, 0.25, 0.0, 0.0, 0.2};
    CHECK(std::abs(bs_call_delta(deep) - 1.0) < 1e-6);

    MarketInputs otm{50.0, 100.0, 0.25, 0.0, 0.0, 0.2};
    CHECK(bs_call_delta(otm) < 1e-4);

    const MarketInputs m = atm();
    const double h = 1e-4 * m.spot;
    const double fd = oracles::central_diff(
        [&](double s) {
            MarketInputs mm = m;
            mm.spot = s;
            return bs_call_price(mm);
        },
        m.spot, h);
    CHECK(std::abs(bs_call_delta(m) - fd) <= 1e-6);
}

TEST_CASE("bs_call_vega nonnegative, tail decay, finite-difference oracle") {
    const MarketInputs m = atm();
    const double fd = oracles::central_diff(
        [&](double sig) {
            MarketInputs mm = m;
            mm.sigma = sig;
            return bs_call_price(mm);
        },
        m.sigma, 1e-6);
    CHECK(std::abs(bs_call_vega(m) - fd) <= 1e-6);

    MarketInputs tail{50.0, 100.0, 0.05, 0.0, 0.0, 0.1};
    CHECK(bs_call_vega(tail) >= 0.0);
    CHECK(bs_call_vega(tail) < 1e-6);
}

TEST_CASE("forward moneyness") {
    MarketInputs m = atm();
    CHECK(forward_moneyness(m) == doctest::Approx(1.0).epsilon(1e-15));

    MarketInputs carry{100.0, 100.0, 1.0, 0.05, 0.01, 0.2};
    CHECK(forward_moneyness(carry) == doctest::Approx(std::exp(0.04)).epsilon(1e-12));

    MarketInputs half{100.0, 200.0, 1.0, 0.02, 0.02, 0.2};
    CHECK(forward_moneyness(half) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("implied vol round trips and bound errors") {
    MarketInputs m = atm();
    CHECK(std::abs(implied_vol(bs_call_price(m), m) - 0.2) <= 1e-8);

    MarketInputs itm{130.0, 100.0, 0.4, 0.02, 0.01, 0.65};
    CHECK(std::abs(implied_vol(bs_call_price(itm), itm) - 0.65) <= 1e-8);

    // below intrinsic bound
    const double intrinsic = std::exp(-itm.div_yield * itm.tau) * itm.spot -
                             std::exp(-itm.rate * itm.tau) * itm.strike;
    CHECK_THROWS_AS(implied_vol(intrinsic * 0.9, itm), std::domain_error);
}

TEST_CASE("precondition violations raise domain errors") {
    MarketInputs m = atm();
    m.tau = 0.0;
    CHECK_THROWS_AS(bs_call_price(m), std::domain_error);
    m = atm();
    m.sigma = -0.1;
    CHECK_THROWS_AS(bs_call_delta(m), std::domain_error);
    m = atm();
    m.spot = 0.0;
    CHECK_THROWS_AS(forward_moneyness(m), std::domain_error);
}

TEST_CASE("property: delta matches price finite difference over a valid-input grid") {
    Rng rng(20240811);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        MarketInputs m;
        m.spot = 50.0 + 150.0 * rng.uniform();
        m.strike = m.spot * (0.7 + 0.7 * rng.uniform());
        m.tau = 0.02 + rng.uniform();
        m.rate = -0.01 + 0.07 * rng.uniform();
        m.div_yield = 0.03 * rng.uniform();
        m.sigma = 0.05 + 0.95 * rng.uniform();
        // h small enough that the oracle's own truncation error sits below
        // the 1e-6 relative target even at sharp-gamma corners
        const double h = 1e-5 * m.spot;
        const double fd = oracles::central_diff(
            [&](double s) {
                MarketInputs mm = m;
                mm.spot = s;
                return bs_call_price(mm);
            },
            m.spot, h);
        const double delta = bs_call_delta(m);
        const double scale = std::max({std::abs(delta), std::abs(fd), 0.01});
        CHECK(std::abs(delta - fd) / scale <= 1e-6);
        // delta bounds
        CHECK(delta >= 0.0);
        CHECK(delta <= std::exp(-m.div_yield * m.tau) + 1e-15);
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("property: forward moneyness increases in spot and carry") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        MarketInputs m;
        m.spot = 50.0 + 150.0 * rng.uniform();
        m.strike = m.spot * (0.8 + 0.4 * rng.uniform());
        m.tau = 0.05 + rng.uniform();
        m.rate = 0.05 * rng.uniform();
        m.div_yield = 0.03 * rng.uniform();
        m.sigma = 0.2;
        MarketInputs up = m;
        up.spot
            = m.spot * 1.01;
        CHECK(forward_moneyness(up) > forward_moneyness(m));
        MarketInputs carry = m;
        carry.rate = m.rate + 0.01;
        CHECK(forward_moneyness(carry) > forward_moneyness(m));
    }
}

TEST_CASE("property: implied vol composed with price is identity on a sigma grid") {
    for (double sigma = 0.05; sigma <= 1.5; sigma += 0.05) {
        MarketInputs m{110.0, 100.0, 0.3, 0.02, 0.01, sigma};
        CHECK(std::abs(implied_vol(bs_call_price(m), m) - sigma) <= 1e-8);
    }
}
