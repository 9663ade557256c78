#include "hedgelab/marketdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "hedgelab/errors.hpp"
#include "hedgelab/pricing.hpp"
#include "hedgelab/rng.hpp"

namespace hedgelab {

std::string contract_label(const ContractKey& c) {
    std::ostringstream os;
    os << (c.is_call ? "C" : "P") << c.strike << "@" << format_date(c.expiry);
    return os.str();
}

long CleaningReport::removed() const {
    long n = 0;
    for (const auto& [rule, count] : removed_by_rule) n += count;
    return n;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\r' || *(end - 1) == '\t')) --end;
    if (begin == end) return false;
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ChainLoadResult load_chain(std::istream& in, const ColumnMap& cols) {
    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw DataError("load_chain: empty stream, header row required");
    }
    const auto headers = split_line(trim(header_line), cols.delimiter);
    std::unordered_map<std::string, size_t> pos;
    for (size_t i = 0; i < headers.size(); ++i) pos[trim(headers[i])] = i;

    auto col = [&](const std::string& name) -> size_t {
        auto it = pos.find(name);
        if (it == pos.end()) {
            throw DataError("load_chain: header is missing mapped column '" + name + "'");
        }
        return it->second;
    };
    const size_t c_date = col(cols.date), c_under = col(cols.underlying), c_strike = col(cols.strike),
                 c_expiry = col(cols.expiry), c_type = col(cols.option_type), c_bid = col(cols.bid),
                 c_ask = col(cols.ask), c_iv = col(cols.iv), c_rate = col(cols.rate),
                 c_q = col(cols.div_yield);

    ChainLoadResult result;
    std::string line;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split_line(line, cols.delimiter);
        auto reject = [&](const std::string& reason) {
            result.rejections.push_back({line_no, reason});
        };
        if (fields.size() < pos.size()) {
            reject("short row");
            continue;
        }
        OptionQuote q;
        try {
            q.date = parse_date(trim(fields[c_date]));
            q.expiry = parse_date(trim(fields[c_expiry]));
        } catch (const std::invalid_argument&) {
            reject("malformed date");
            continue;
        }
        const std::string type = trim(fields[c_type]);
        if (type == "call" || type == "C" || type == "c") {
            q.is_call = true;
        } else if (type == "put" || type == "P" || type == "p") {
            q.is_call = false;
        } else {
            reject("unknown option type");
            continue;
        }
        if (!parse_double(fields[c_under], q.underlying) || !parse_double(fields[c_strike], q.strike) ||
            !parse_double(fields[c_bid], q.bid) || !parse_double(fields[c_ask], q.ask) ||
            !parse_double(fields[c_iv], q.iv) || !parse_double(fields[c_rate], q.rate) ||
            !parse_double(fields[c_q], q.div_yield)) {
            reject("unparseable numeric field");
            continue;
        }
        if (!(q.strike > 0.0)) {
            reject("nonpositive strike");
            continue;
        }
        if (!(q.underlying > 0.0)) {
            reject("nonpositive underlying");
            continue;
        }
        if (q.expiry <= q.date) {
            reject("expiry not after quote date");
            continue;
        }
        if (q.bid > q.ask) {
            reject("crossed quote");
            continue;
        }
        q.mid = 0.5 * (q.bid + q.ask);
        result.quotes.push_back(q);
    }
    return result;
}

ChainLoadResult load_chain_file(const std::string& path, const ColumnMap& cols) {
    std::ifstream in(path);
    if (!in) throw DataError("load_chain: cannot open '" + path + "'");
    return load_chain(in, cols);
}

// ---------------------------------------------------------------------------
// Cleaning

CleanResult clean(const std::vector<OptionQuote>& quotes, const CleanConfig& cfg) {
    CleanResult res;
    res.report.input = static_cast<long>(quotes.size());
    for (const auto& q : quotes) {
        auto drop = [&](const char* rule) { ++res.report.removed_by_rule[rule]; };
        const bool missing = !std::isfinite(q.underlying) || !std::isfinite(q.strike) ||
                             !std::isfinite(q.bid) || !std::isfinite(q.ask) || !std::isfinite(q.iv) ||
                             !std::isfinite(q.rate) || !std::isfinite(q.div_yield) || q.iv <= 0.0;
        if (missing) {
            drop("missing field");
            continue;
        }
        if (!q.is_call) {
            drop("not a call");
            continue;
        }
        if (q.strike <= 0.0 || q.underlying <= 0.0) {
            drop("invalid strike");
            continue;
        }
        if (q.mid <= 0.0) {
            drop("invalid price");
            continue;
        }
        if (q.ask < q.bid) {
            drop("negative spread");
            continue;
        }
        if (q.expiry <= q.date) {
            drop("expired");
            continue;
        }
        const double ks = q.strike / q.underlying;
        const int days = q.expiry - q.date;
        if (ks < cfg.moneyness_lo || ks > cfg.moneyness_hi || days < cfg.maturity_lo_days ||
            days > cfg.maturity_hi_days) {
            drop("outside region");
            continue;
        }
        res.kept.push_back(q);
    }
    res.report.kept = static_cast<long>(res.kept.size());
    return res;
}

// ---------------------------------------------------------------------------
// Selection

std::vector<OptionQuote> select_start_options(const std::vector<OptionQuote>& quotes_on_date,
                                              Date date, const SelectConfig& cfg) {
    std::vector<OptionQuote> picked;
    std::set<ContractKey> seen;
    for (double m_target : cfg.moneyness_targets) {
        for (int t_target : cfg.maturity_targets_days) {
            const OptionQuote* best = nullptr;
            double best_dm = 0.0;
            int best_dt = 0;
            for (const auto& q : quotes_on_date) {
                if (q.date != date) continue;
                const double dm = std::abs(q.strike / q.underlying - m_target);
                const int dt = std::abs((q.expiry - q.date) - t_target);
                if (dm > cfg.moneyness_tol || dt > cfg.maturity_tol_days) continue;
                bool better = false;
                if (best == nullptr) {
                    better = true;
                } else if (dm != best_dm) {
                    better = dm < best_dm;
                } else if (dt != best_dt) {
                    better = dt < best_dt;
                } else if (q.strike != best->strike) {
                    better = q.strike < best->strike;
                } else {
                    better = q.expiry < best->expiry;
                }
                if (better) {
                    best = &q;
                    best_dm = dm;
                    best_dt = dt;
                }
            }
            if (best != nullptr) {
                ContractKey key{best->strike, best->expiry, best->is_call};
                if (seen.insert(key).second) picked.push_back(*best);
            }
        }
    }
    return picked;
}

// ---------------------------------------------------------------------------
// ChainIndex and episode construction

ChainIndex::ChainIndex(const std::vector<OptionQuote>& quotes) {
    std::set<Date> dates;
    for (const auto& q : quotes) {
        dates.insert(q.date);
        by_day_contract_[{q.date, ContractKey{q.strike, q.expiry, q.is_call}}] = q;
    }
    dates_.assign(dates.begin(), dates.end());
}

long ChainIndex::date_pos(Date date) const {
    const auto it = std::lower_bound(dates_.begin(), dates_.end(), date);
    if (it == dates_.end() || *it != date) return -1;
    return it - dates_.begin();
}

const OptionQuote* ChainIndex::find(Date date, const ContractKey& key) const {
    const auto it = by_day_contract_.find({date, key});
    return it == by_day_contract_.end() ? nullptr : &it->second;
}

std::vector<OptionQuote> ChainIndex::quotes_on(Date date) const {
    std::vector<OptionQuote> out;
    for (auto it = by_day_contract_.lower_bound({date, ContractKey{}});
         it != by_day_contract_.end() && it->first.first == date; ++it) {
        out.push_back(it->second);
    }
    return out;
}

std::vector<Episode> build_episodes(const ChainIndex& index, const std::vector<Date>& start_dates,
                                    const SelectConfig& cfg, EpisodeBuildStats* stats) {
    EpisodeBuildStats local;
    std::vector<Episode> episodes;
    const auto& axis = index.dates();
    for (Date start : start_dates) {
        const long pos = index.date_pos(start);
        if (pos < 0 || pos + kEpisodeSteps >= static_cast<long>(axis.size())) continue;
        const auto selected = select_start_options(index.quotes_on(start), start, cfg);
        if (selected.empty()) {
            ++local.starts_without_contracts;
            continue;
        }
        for (const auto& pick : selected) {
            const ContractKey key{pick.strike, pick.expiry, pick.is_call};
            Episode ep;
            ep.contract = key;
            ep.window_id = format_date(start);
            ep.days.reserve(kEpisodeRecords);
            bool complete = true;
            for (int k = 0; k < kEpisodeRecords; ++k) {
                const Date d = axis[pos + k];
                const OptionQuote* q = index.find(d, key);
                if (q == nullptr || q->expiry <= d) {
                    complete = false;
                    break;
                }
                ep.days.push_back({d, q->underlying, q->mid, q->iv, q->rate, q->div_yield});
            }
            if (!complete) {
                ++local.discarded_missing_day;
                continue;
            }
            episodes.push_back(std::move(ep));
            ++local.built;
        }
    }
    if (stats != nullptr) *stats = local;
    return episodes;
}

std::vector<Date> filter_nonoverlapping_windows(const std::vector<Date>& start_dates,
                                                const std::vector<Date>& trading_dates,
                                                int min_gap) {
    std::vector<Date> selected;
    long last_pos = -1;
    for (Date d : start_dates) {
        const auto it = std::lower_bound(trading_dates.begin(), trading_dates.end(), d);
        if (it == trading_dates.end() || *it != d) continue;
        const long pos = it - trading_dates.begin();
        if (last_pos < 0 || pos - last_pos >= min_gap) {
            selected.push_back(d);
            last_pos = pos;
        }
    }
    return selected;
}

// ---------------------------------------------------------------------------
// Synthetic market

MarketPaths synthesize_paths(const SyntheticMarketConfig& cfg) {
    if (cfg.n_days < 1 || !(cfg.spot0 > 0.0) || !(cfg.iv0 > 0.0) || std::abs(cfg.rho) > 1.0 ||
        !(cfg.spot_vol >= 0.0) || !(cfg.iv_vol >= 0.0)) {
        throw ConfigError("synthesize_paths: invalid synthetic market configuration");
    }
    constexpr double kIvFloor = 0.01;
    const double dt = 1.0 / 252.0;
    const double sqrt_dt = std::sqrt(dt);
    // spot carries the risk-neutral drift so a delta-hedged book is
    // approximately drift-free
    const double drift = cfg.rate - cfg.div_yield;

    MarketPaths paths;
    paths.dates.reserve(cfg.n_days);
    Date d = cfg.start_date;
    while (!is_weekday(d)) ++d;
    for (int i = 0; i < cfg.n_days; ++i) {
        paths.dates.push_back(d);
        do {
            ++d;
        } while (!is_weekday(d));
    }

    Rng rng(cfg.seed);
    paths.spot.resize(cfg.n_days);
    paths.iv.resize(cfg.n_days);
    double s = cfg.spot0;
    double v = std::max(cfg.iv0, kIvFloor);
    const double rho_c = std::sqrt(1.0 - cfg.rho * cfg.rho);
    for (int i = 0; i < cfg.n_days; ++i) {
        paths.spot[i] = s;
        paths.iv[i] = v;
        const double z1 = rng.normal();
        const double z2 = cfg.rho * z1 + rho_c * rng.normal();
        s *= std::exp((drift - 0.5 * cfg.spot_vol * cfg.spot_vol) * dt + cfg.spot_vol * sqrt_dt * z1);
        v += cfg.iv_mean_reversion * (cfg.iv0 - v) * dt + cfg.iv_vol * sqrt_dt * z2;
        if (v < kIvFloor) v = 2.0 * kIvFloor - v;  // reflect
    }
    return paths;
}

std::vector<OptionQuote> synthesize_market(const SyntheticMarketConfig& cfg) {
    const MarketPaths paths = synthesize_paths(cfg);
    if (!(cfg.strike_grid > 0.0) || !(cfg.half_spread >= 0.0)) {
        throw ConfigError("synthesize_market: invalid lattice configuration");
    }

    // contracts issued while walking the calendar; quoted until near expiry
    std::set<ContractKey> live;
    std::vector<OptionQuote> quotes;
    for (int i = 0; i < cfg.n_days; ++i) {
        const Date today = paths.dates[i];
        const double s = paths.spot[i];
        const double iv = paths.iv[i];
        for (double mt : cfg.issue_moneyness) {
            for (int mat : cfg.issue_maturities_days) {
                const double k = std::round(s * mt / cfg.strike_grid) * cfg.strike_grid;
                if (k <= 0.0) continue;
                live.insert(ContractKey{k, today + mat, true});
            }
        }
        for (auto it = live.begin(); it != live.end();) {
            const int days_left = it->expiry - today;
            if (days_left < 2) {
                it = live.erase(it);
                continue;
            }
            const double ks = it->strike / s;
            if (ks >= 0.7 && ks <= 1.4) {
                MarketInputs m{s, it->strike, days_left / 365.0, cfg.rate, cfg.div_yield, iv};
                const double mid = bs_call_price(m);
                OptionQuote q;
                q.date = today;
                q.underlying = s;
                q.strike = it->strike;
                q.expiry = it->expiry;
                q.is_call = true;
                q.bid = mid * (1.0 - cfg.half_spread);
                q.ask = mid * (1.0 + cfg.half_spread);
                q.mid = mid;
                q.iv = iv;
                q.rate = cfg.rate;
                q.div_yield = cfg.div_yield;
                quotes.push_back(q);
            }
            ++it;
        }
    }
    return quotes;
}

// ---------------------------------------------------------------------------
// Serialization

void write_chain_csv(std::ostream& out, const std::vector<OptionQuote>& quotes) {
    out << "quote_date,underlying,strike,expiry,option_type,bid,ask,iv,rate,div_yield\n";
    out.precision(17);
    for (const auto& q : quotes) {
        out << format_date(q.date) << ',' << q.underlying << ',' << q.strike << ','
            << format_date(q.expiry) << ',' << (q.is_call ? "call" : "put") << ',' << q.bid << ','
            << q.ask << ',' << q.iv << ',' << q.rate << ',' << q.div_yield << '\n';
    }
}

void write_episodes_jsonl(std::ostream& out, const std::vector<Episode>& episodes) {
    for (const auto& ep : episodes) {
        nlohmann::json j;
        j["window_id"] = ep.window_id;
        j["strike"] = ep.contract.strike;
        j["expiry"] = format_date(ep.contract.expiry);
        j["is_call"] = ep.contract.is_call;
        nlohmann::json days = nlohmann::json::array();
        for (const auto& r : ep.days) {
            days.push_back({{"date", format_date(r.date)},
                            {"underlying", r.underlying},
                            {"option_mid", r.option_mid},
                            {"iv", r.iv},
                            {"rate", r.rate},
                            {"div_yield", r.div_yield}});
        }
        j["days"] = std::move(days);
        out << j.dump() << '\n';
    }
}

std::vector<Episode> read_episodes_jsonl(std::istream& in) {
    std::vector<Episode> episodes;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto j = nlohmann::json::parse(line);
        Episode ep;
        ep.window_id = j.at("window_id").get<std::string>();
        ep.contract.strike = j.at("strike").get<double>();
        ep.contract.expiry = parse_date(j.at("expiry").get<std::string>());
        ep.contract.is_call = j.at("is_call").get<bool>();
        for (const auto& dj : j.at("days")) {
            DailyRecord r;
            r.date = parse_date(dj.at("date").get<std::string>());
            r.underlying = dj.at("underlying").get<double>();
            r.option_mid = dj.at("option_mid").get<double>();
            r.iv = dj.at("iv").get<double>();
            r.rate = dj.at("rate").get<double>();
            r.div_yield = dj.at("div_yield").get<double>();
            ep.days.push_back(r);
        }
        episodes.push_back(std::move(ep));
    }
    return episodes;
}

void write_rejection_report(std::ostream& out, const ChainLoadResult& load,
                            const CleaningReport& cleaning) {
    out << "# rejection report\n";
    out << "parsed " << load.quotes.size() << " rows, rejected " << load.rejections.size()
        << " at load\n";
    std::map<std::string, long> load_counts;
    for (const auto& r : load.rejections) ++load_counts[r.reason];
    for (const auto& [reason, n] : load_counts) out << "load: " << reason << " = " << n << '\n';
    out << "cleaning input " << cleaning.input << ", kept " << cleaning.kept << '\n';
    for (const auto& [rule, n] : cleaning.removed_by_rule) {
        out << "clean: " << rule << " = " << n << '\n';
    }
    for (const auto& r : load.rejections) {
        out << "line " << r.line << ": " << r.reason << '\n';
    }
}

}  // namespace hedgelab
