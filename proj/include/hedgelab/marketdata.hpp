#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hedgelab/dates.hpp"

namespace hedgelab {

struct OptionQuote {
    Date date = 0;
    double underlying = 0.0;
    double strike = 0.0;
    Date expiry = 0;
    bool is_call = true;
    double bid = 0.0;
    double ask = 0.0;
    double mid = 0.0;
    double iv = 0.0;
    double rate = 0.0;
    double div_yield = 0.0;
};

struct ContractKey {
    double strike = 0.0;
    Date expiry = 0;
    bool is_call = true;

    friend auto operator<=>(const ContractKey&, const ContractKey&) = default;
};

std::string contract_label(const ContractKey& c);

struct DailyRecord {
    Date date = 0;
    double underlying = 0.0;
    double option_mid = 0.0;
    double iv = 0.0;
    double rate = 0.0;
    double div_yield = 0.0;
};

// A 21-trading-day hedging path: start state plus 21 steps.
struct Episode {
    ContractKey contract;
    std::vector<DailyRecord> days;  // exactly 22 records
    std::string window_id;          // ISO start date of the 21-day window

    Date start_date() const { return days.front().date; }
    int start_year() const { return year_of(days.front().date); }
};

constexpr int kEpisodeSteps = 21;
constexpr int kEpisodeRecords = kEpisodeSteps + 1;

// ---------------------------------------------------------------------------
// Ingestion

// Logical field -> column header mapping for delimited chain files.
struct ColumnMap {
    std::string date = "quote_date";
    std::string underlying = "underlying";
    std::string strike = "strike";
    std::string expiry = "expiry";
    std::string option_type = "option_type";  // "call"/"put" or "C"/"P"
    std::string bid = "bid";
    std::string ask = "ask";
    std::string iv = "iv";
    std::string rate = "rate";
    std::string div_yield = "div_yield";
    char delimiter = ',';
};

struct RejectedRow {
    long line = 0;
    std::string reason;
};

struct ChainLoadResult {
    std::vector<OptionQuote> quotes;
    std::vector<RejectedRow> rejections;
};

// Parses a delimited chain with a header row. Malformed rows are routed to
// the rejection report, never silently dropped. Throws DataError when the
// header is missing mapped columns or the stream fails.
ChainLoadResult load_chain(std::istream& in, const ColumnMap& cols);
ChainLoadResult load_chain_file(const std::string& path, const ColumnMap& cols);

// ---------------------------------------------------------------------------
// Cleaning

struct CleanConfig {
    double moneyness_lo = 0.7;   // strike / spot
    double moneyness_hi = 1.4;
    int maturity_lo_days = 7;
    int maturity_hi_days = 140;
};

struct CleaningReport {
    long input = 0;
    long kept = 0;
    std::map<std::string, long> removed_by_rule;

    long removed() const;
};

struct CleanResult {
    std::vector<OptionQuote> kept;
    CleaningReport report;
};

CleanResult clean(const std::vector<OptionQuote>& quotes, const CleanConfig& cfg);

// ---------------------------------------------------------------------------
// Episode selection and construction

struct SelectConfig {
    std::vector<double> moneyness_targets = {0.85, 0.90, 0.95, 1.00, 1.05, 1.10, 1.15};
    std::vector<int> maturity_targets_days = {30, 60, 90};
    double moneyness_tol = 0.02;
    int maturity_tol_days = 10;
};

// One quote per (K/S, maturity) target pair on one date; nearest in
// moneyness, then in maturity; ties to the lower strike, then the earlier
// expiry; duplicates removed.
std::vector<OptionQuote> select_start_options(const std::vector<OptionQuote>& quotes_on_date,
                                              Date date, const SelectConfig& cfg);

// Quotes indexed by date and contract, with the sorted trading-date axis.
class ChainIndex {
  public:
    explicit ChainIndex(const std::vector<OptionQuote>& quotes);

    const std::vector<Date>& dates() const { return dates_; }
    // position of `date` on the trading axis, or -1
    long date_pos(Date date) const;
    const OptionQuote* find(Date date, const ContractKey& key) const;
    std::vector<OptionQuote> quotes_on(Date date) const;

  private:
    std::vector<Date> dates_;
    std::map<std::pair<Date, ContractKey>, OptionQuote> by_day_contract_;
};

struct EpisodeBuildStats {
    long built = 0;
    long discarded_missing_day = 0;
    long starts_without_contracts = 0;
};

// Assembles 22-record paths for every (start date, selected contract) pair.
// Paths with any missing daily record are discarded and counted.
std::vector<Episode> build_episodes(const ChainIndex& index, const std::vector<Date>& start_dates,
                                    const SelectConfig& cfg, EpisodeBuildStats* stats = nullptr);

// Greedy earliest-first selection so consecutive selected windows are
// separated by at least `min_gap` trading days on the given axis.
std::vector<Date> filter_nonoverlapping_windows(const std::vector<Date>& start_dates,
                                                const std::vector<Date>& trading_dates,
                                                int min_gap = kEpisodeSteps);

// ---------------------------------------------------------------------------
// Synthetic market

struct SyntheticMarketConfig {
    int n_days = 1560;               // trading days (weekday calendar)
    Date start_date = days_from_civil(2015, 1, 1);
    double spot0 = 100.0;
    double iv0 = 0.20;
    double spot_vol = 0.18;          // annualized
    double iv_vol = 0.15;            // vol-of-IV, per sqrt-year
    double rho = -0.7;               // corr(daily spot return, daily IV change)
    double iv_mean_reversion = 4.0;  // per year, toward iv0
    double rate = 0.02;
    double div_yield = 0.015;
    std::uint64_t seed = 1;

    // option lattice
    std::vector<double> issue_moneyness = {0.85, 0.90, 0.95, 1.00, 1.05, 1.10, 1.15};
    std::vector<int> issue_maturities_days = {35, 65, 95};
    double strike_grid = 0.5;        // strikes snapped to this grid
    double half_spread = 0.002;      // relative half bid-ask spread
};

struct MarketPaths {
    std::vector<Date> dates;
    std::vector<double> spot;
    std::vector<double> iv;
};

// Correlated lognormal spot / mean-reverting IV daily paths on a weekday
// calendar; IV is reflected at the 0.01 floor. Deterministic given the seed.
MarketPaths synthesize_paths(const SyntheticMarketConfig& cfg);

// Full option chain on the synthetic paths: contracts issued daily around
// the moneyness/maturity lattice, quoted at flat-IV Black-Scholes mids while
// alive. Deterministic given the seed.
std::vector<OptionQuote> synthesize_market(const SyntheticMarketConfig& cfg);

// ---------------------------------------------------------------------------
// Serialization

void write_chain_csv(std::ostream& out, const std::vector<OptionQuote>& quotes);
void write_episodes_jsonl(std::ostream& out, const std::vector<Episode>& episodes);
std::vector<Episode> read_episodes_jsonl(std::istream& in);
void write_rejection_report(std::ostream& out, const ChainLoadResult& load,
                            const CleaningReport& cleaning);

}  // namespace hedgelab
