#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hedgelab/errors.hpp"
#include "hedgelab/marketdata.hpp"
#include "hedgelab/pricing.hpp"
#include "oracles.hpp"

using namespace hedgelab;

namespace {

OptionQuote make_quote(const char* date, double spot, double strike, const char* expiry,
                       double mid, double iv) {
    OptionQuote q;
    q.date = parse_date(date);
    q.underlying = spot;
    q.strike = strike;
    q.expiry = parse_date(expiry);
    q.is_call = true;
    q.bid = mid * 0.99;
    q.ask = mid * 1.01;
    q.mid = mid;
    q.iv = iv;
    q.rate = 0.02;
    q.div_yield = 0.01;
    return q;
}

const char* kHeader = "quote_date,underlying,strike,expiry,option_type,bid,ask,iv,rate,div_yield\n";

}  // namespace

TEST_CASE("load_chain happy path, rejections, empty file") {
    std::stringstream ok;
    ok << kHeader
       << "2020-01-02,100,100,2020-02-15,call,4.0,4.2,0.2,0.02,0.01\n"
       << "2020-01-02,100,105,2020-02-15,call,2.0,2.2,0.21,0.02,0.01\n"
       << "2020-01-02,100,95,2020-02-15,call,7.0,7.2,0.19,0.02,0.01\n";
    auto res = load_chain(ok, ColumnMap{});
    CHECK(res.quotes.size() == 3);
    CHECK(res.rejections.empty());
    CHECK(res.quotes[0].mid == doctest::Approx(4.1));

    std::stringstream crossed;
    crossed << kHeader << "2020-01-02,100,100,2020-02-15,call,4.4,4.2,0.2,0.02,0.01\n";
    res = load_chain(crossed, ColumnMap{});
    CHECK(res.quotes.empty());
    REQUIRE(res.rejections.size() == 1);
    CHECK(res.rejections[0].reason == "crossed quote");

    std::stringstream empty;
    empty << kHeader;
    res = load_chain(empty, ColumnMap{});
    CHECK(res.quotes.empty());
    CHECK(res.rejections.empty());

    std::stringstream headerless("");
    CHECK_THROWS_AS(load_chain(headerless, ColumnMap{}), DataError);

    std::stringstream wrong_cols;
    wrong_cols << "a,b,c\n1,2,3\n";
    CHECK_THROWS_AS(load_chain(wrong_cols, ColumnMap{}), DataError);
}

TEST_CASE("load_chain conservation: rejections + kept = input rows") {
    std::stringstream s;
    s << kHeader
      << "2020-01-02,100,100,2020-02-15,call,4.0,4.2,0.2,0.02,0.01\n"
      << "2020-01-02,100,0,2020-02-15,call,4.0,4.2,0.2,0.02,0.01\n"
      << "2020-01-02,100,100,2019-12-15,call,4.0,4.2,0.2,0.02,0.01\n"
      << "2020-01-02,100,100,2020-02-15,widget,4.0,4.2,0.2,0.02,0.01\n"
      << "bad-date,100,100,2020-02-15,call,4.0,4.2,0.2,0.02,0.01\n";
    auto res = load_chain(s, ColumnMap{});
    CHECK(res.quotes.size() + res.rejections.size() == 5);
    CHECK(res.quotes.size() == 1);
}

TEST_CASE("clean removes per rule and is idempotent") {
    CleanConfig cfg;
    std::vector<OptionQuote> qs;
    qs.push_back(make_quote("2020-01-02", 100, 100, "2020-02-15", 4.1, 0.2));  // kept
    auto bad_price = make_quote("2020-01-02", 100, 100, "2020-02-15", -1.0, 0.2);
    bad_price.bid = -1.1;
    bad_price.ask = -0.9;
    qs.push_back(bad_price);
    auto crossed = make_quote("2020-01-02", 100, 100, "2020-02-15", 4.1, 0.2);
    crossed.bid = 4.4;
    crossed.ask = 4.0;
    qs.push_back(crossed);
    auto put = make_quote("2020-01-02", 100, 100, "2020-02-15", 4.1, 0.2);
    put.is_call = false;
    qs.push_back(put);
    auto far = make_quote("2020-01-02", 100, 150, "2020-02-15", 0.01, 0.2);  // K/S = 1.5
    qs.push_back(far);
    auto nan_iv = make_quote("2020-01-02", 100, 100, "2020-02-15", 4.1, std::nan(""));
    qs.push_back(nan_iv);

    auto res = clean(qs, cfg);
    CHECK(res.kept.size() == 1);
    CHECK(res.report.input == 6);
    CHECK(res.report.removed_by_rule.at("invalid price") == 1);
    CHECK(res.report.removed_by_rule.at("negative spread") == 1);
    CHECK(res.report.removed_by_rule.at("not a call") == 1);
    CHECK(res.report.removed_by_rule.at("outside region") == 1);
    CHECK(res.report.removed_by_rule.at("missing field") == 1);
    CHECK(res.report.kept + res.report.removed() == res.report.input);

    auto twice = clean(res.kept, cfg);
    CHECK(twice.kept.size() == res.kept.size());
    CHECK(twice.report.removed() == 0);
}

TEST_CASE("select_start_options targets, ties, and unfilled boxes") {
    const Date d = parse_date("2020-01-02");
    SelectConfig cfg;

    SUBCASE("single ATM quote within box is selected") {
        std::vector<OptionQuote> qs{make_quote("2020-01-02", 100, 100, "2020-02-01", 4.0, 0.2)};
        auto sel = select_start_options(qs, d, cfg);
        REQUIRE(sel.size() == 1);
        CHECK(sel[0].strike == 100.0);
    }

    SUBCASE("equidistant moneyness: lower strike wins") {
        // targets K/S = 1.00: strikes 99 and 101 are equidistant
        std::vector<OptionQuote> qs{make_quote("2020-01-02", 100, 101, "2020-02-01", 3.6, 0.2),
                                    make_quote("2020-01-02", 100, 99, "2020-02-01", 4.6, 0.2)};
        cfg.moneyness_targets = {1.00};
        cfg.maturity_targets_days = {30};
        auto sel = select_start_options(qs, d, cfg);
        REQUIRE(sel.size() == 1);
        CHECK(sel[0].strike == 99.0);
    }

    SUBCASE("chain with only extreme strikes leaves middle targets unfilled") {
        std::vector<OptionQuote> qs{make_quote("2020-01-02", 100, 85, "2020-02-01", 15.5, 0.2),
                                    make_quote("2020-01-02", 100, 115, "2020-02-01", 0.2, 0.2)};
        auto sel = select_start_options(qs, d, cfg);
        // only the 0.85 and 1.15 moneyness targets can be filled
        CHECK(sel.size() == 2);
    }

    SUBCASE("no quote within tolerance box yields empty result") {
        std::vector<OptionQuote> qs{make_quote("2020-01-02", 100, 100, "2020-06-01", 8.0, 0.2)};
        cfg.maturity_targets_days = {30};
        auto sel = select_start_options(qs, d, cfg);
        CHECK(sel.empty());
    }
}

TEST_CASE("filter_nonoverlapping_windows greedy rule") {
    // trading axis: 60 consecutive weekdays
    std::vector<Date> axis;
    Date d = parse_date("2020-01-06");
    while (axis.size() < 60) {
        if (is_weekday(d)) axis.push_back(d);
        ++d;
    }
    auto at = [&](int i) { return axis[static_cast<size_t>(i)]; };

    SUBCASE("greedy simulation {0,10,21,30,42} -> {0,21,42}") {
        std::vector<Date> starts{at(0), at(10), at(21), at(30), at(42)};
        auto sel = filter_nonoverlapping_windows(starts, axis, 21);
        REQUIRE(sel.size() == 3);
        CHECK(sel[0] == at(0));
        CHECK(sel[1] == at(21));
        CHECK(sel[2] == at(42));
    }
    SUBCASE("single start is kept") {
        std::vector<Date> starts{at(5)};
        auto sel = filter_nonoverlapping_windows(starts, axis, 21);
        REQUIRE(sel.size() == 1);
        CHECK(sel[0] == at(5));
    }
    SUBCASE("all within one window keeps the first") {
        std::vector<Date> starts{at(3), at(7), at(12), at(20)};
        auto sel = filter_nonoverlapping_windows(starts, axis, 21);
        REQUIRE(sel.size() == 1);
        CHECK(sel[0] == at(3));
    }
}

TEST_CASE("build_episodes assembles 22-record paths and discards gaps") {
    SyntheticMarketConfig cfg;
    cfg.n_days = 40;
    cfg.seed = 99;
    auto quotes = synthesize_market(cfg);
    ChainIndex index(quotes);
    std::vector<Date> starts{index.dates().front()};
    EpisodeBuildStats stats;
    auto eps = build_episodes(index, starts, SelectConfig{}, &stats);
    REQUIRE(!eps.empty());
    for (const auto& ep : eps) {
        CHECK(ep.days.size() == 22);
        CHECK(ep.window_id == format_date(starts[0]));
        for (size_t i = 1; i < ep.days.size(); ++i) {
            CHECK(ep.days[i].date > ep.days[i - 1].date);
        }
        // maturity strictly decreasing
        for (size_t i = 1; i < ep.days.size(); ++i) {
            CHECK(ep.contract.expiry - ep.days[i].date < ep.contract.expiry - ep.days[i - 1].date);
        }
    }

    SUBCASE("missing a mid-path day discards the episode") {
        // remove one mid-path quote of the first episode's contract
        const auto& victim = eps.front();
        std::vector<OptionQuote> pruned;
        const Date gap_day = victim.days[10].date;
        for (const auto& q : quotes) {
            if (q.date == gap_day && q.strike == victim.contract.strike &&
                q.expiry == victim.contract.expiry) {
                continue;
            }
            pruned.push_back(q);
        }
        ChainIndex pruned_index(pruned);
        EpisodeBuildStats st2;
        auto eps2 = build_episodes(pruned_index, starts, SelectConfig{}, &st2);
        CHECK(eps2.size() == eps.size() - 1);
        CHECK(st2.discarded_missing_day == stats.discarded_missing_day + 1);
    }
}

TEST_CASE("synthetic market correlation matches configuration") {
    SyntheticMarketConfig cfg;
    cfg.n_days = 100000;
    cfg.seed = 31;

    SUBCASE("rho = 0") {
        cfg.rho = 0.0;
        auto paths = synthesize_paths(cfg);
        std::vector<double> dls, div;
        for (size_t i = 1; i < paths.spot.size(); ++i) {
            dls.push_back(std::log(paths.spot[i] / paths.spot[i - 1]));
            div.push_back(paths.iv[i] - paths.iv[i - 1]);
        }
        CHECK(std::abs(oracles::correlation(dls, div) - 0.0) < 0.02);
    }
    SUBCASE("rho = -0.7") {
        cfg.rho = -0.7;
        auto paths = synthesize_paths(cfg);
        std::vector<double> dls, div;
        for (size_t i = 1; i < paths.spot.size(); ++i) {
            dls.push_back(std::log(paths.spot[i] / paths.spot[i - 1]));
            div.push_back(paths.iv[i] - paths.iv[i - 1]);
        }
        CHECK(std::abs(oracles::correlation(dls, div) - (-0.7)) < 0.02);
    }
}

TEST_CASE("synthetic market determinism and no-arbitrage mids") {
    SyntheticMarketConfig cfg;
    cfg.n_days = 60;
    cfg.seed = 123;
    auto a = synthesize_market(cfg);
    auto b = synthesize_market(cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].date == b[i].date);
        CHECK(a[i].strike == b[i].strike);
        CHECK(a[i].mid == b[i].mid);  // bit-identical
    }
    for (const auto& q : a) {
        const double tau = (q.expiry - q.date) / 365.0;
        const double lower = std::max(0.0, std::exp(-q.div_yield * tau) * q.underlying -
                                               std::exp(-q.rate * tau) * q.strike);
        const double upper = std::exp(-q.div_yield * tau) * q.underlying;
        CHECK(q.mid >= lower - 1e-12);
        CHECK(q.mid <= upper + 1e-12);
    }
}

TEST_CASE("episode jsonl round trip") {
    SyntheticMarketConfig cfg;
    cfg.n_days = 40;
    cfg.seed = 5;
    auto quotes = synthesize_market(cfg);
    ChainIndex index(quotes);
    auto eps = build_episodes(index, {index.dates().front()}, SelectConfig{});
    REQUIRE(!eps.empty());

    std::stringstream buf;
    write_episodes_jsonl(buf, eps);
    auto back = read_episodes_jsonl(buf);
    REQUIRE(back.size() == eps.size());
    for (size_t i = 0; i < eps.size(); ++i) {
        CHECK(back[i].window_id == eps[i].window_id);
        CHECK(back[i].contract == eps[i].contract);
        REQUIRE(back[i].days.size() == eps[i].days.size());
        for (size_t k = 0; k < eps[i].days.size(); ++k) {
            CHECK(back[i].days[k].option_mid == doctest::Approx(eps[i].days[k].option_mid).epsilon(1e-12));
        }
    }
}
