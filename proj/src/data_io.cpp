#include "amliq/data_io.hpp"

#include "amliq/adi.hpp"
#include "amliq/export_io.hpp"
#include "amliq/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace amliq {

namespace {

// days-from-civil (proleptic Gregorian), the standard era-based formula
long civil_to_days(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = y - era * 400;
    const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<long>(era) * 146097 + doe - 719468;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int tbl[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return tbl[m - 1];
}

// weekday: 1970-01-01 (day 0) was a Thursday; Saturday = (days+4)%7 == 6
bool is_weekend(const Date& d) {
    const long wd = ((civil_to_days(d.year, d.month, d.day) % 7) + 7 + 4) % 7;
    return wd == 6 || wd == 0; // Saturday, Sunday
}

// next Mon-Fri date
Date next_trading_day(Date d) {
    do {
        ++d.day;
        if (d.day > days_in_month(d.year, d.month)) {
            d.day = 1;
            if (++d.month > 12) {
                d.month = 1;
                ++d.year;
            }
        }
    } while (is_weekend(d));
    return d;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, int lineno) {
    size_t used = 0;
    double v;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw MalformedRow("line " + std::to_string(lineno) + ": bad number '" + s + "'");
    }
    if (used != s.size())
        throw MalformedRow("line " + std::to_string(lineno) + ": trailing junk in '" + s + "'");
    return v;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// yields (lineno, content) for non-empty, non-comment lines
template <typename Fn>
void for_each_csv_line(const std::string& text, Fn&& fn) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') continue;
        fn(lineno, line);
    }
}

} // namespace

Date parse_date(const std::string& iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw MalformedRow("bad date '" + iso + "' (want YYYY-MM-DD)");
    for (size_t q : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (iso[q] < '0' || iso[q] > '9')
            throw MalformedRow("bad date '" + iso + "' (want YYYY-MM-DD)");
    Date d;
    d.year = std::stoi(iso.substr(0, 4));
    d.month = std::stoi(iso.substr(5, 2));
    d.day = std::stoi(iso.substr(8, 2));
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month))
        throw MalformedRow("impossible date '" + iso + "'");
    return d;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

long days_between(const Date& a, const Date& b) {
    return civil_to_days(b.year, b.month, b.day) - civil_to_days(a.year, a.month, a.day);
}

FuturesSeries load_futures_csv(const std::string& path) {
    const std::string text = read_file(path);
    FuturesSeries s;
    bool header_seen = false;
    for_each_csv_line(text, [&](int lineno, const std::string& line) {
        if (!header_seen) {
            if (line != "date,close")
                throw MalformedRow("line " + std::to_string(lineno) +
                                   ": expected header 'date,close'");
            header_seen = true;
            return;
        }
        const auto cols = split_csv_line(line);
        if (cols.size() != 2)
            throw MalformedRow("line " + std::to_string(lineno) + ": expected 2 columns");
        const Date d = parse_date(cols[0]);
        const double close = parse_number(cols[1], lineno);
        if (!(close > 0.0))
            throw NonPositivePrice("line " + std::to_string(lineno) +
                                   ": close must be positive");
        s.dates.push_back(d);
        s.closes.push_back(close);
    });
    if (!header_seen) throw MalformedRow("missing 'date,close' header");

    std::vector<size_t> order(s.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return s.dates[a] < s.dates[b]; });
    FuturesSeries sorted;
    sorted.dates.reserve(s.size());
    sorted.closes.reserve(s.size());
    for (size_t q : order) {
        if (!sorted.dates.empty() && sorted.dates.back() == s.dates[q])
            throw DuplicateDate("duplicate date " + format_date(s.dates[q]));
        sorted.dates.push_back(s.dates[q]);
        sorted.closes.push_back(s.closes[q]);
    }
    return sorted;
}

std::string serialize_futures_csv(const FuturesSeries& s) {
    std::string out = "date,close\n";
    for (size_t q = 0; q < s.size(); ++q)
        out += format_date(s.dates[q]) + "," + format_double(s.closes[q]) + "\n";
    return out;
}

void save_futures_csv(const FuturesSeries& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << serialize_futures_csv(s);
}

std::vector<OptionQuote> load_options_csv(const std::string& path, double min_volume) {
    const std::string text = read_file(path);
    std::vector<OptionQuote> quotes;
    bool header_seen = false;
    const std::string header = "date,strike,expiry,price,volume,underlying_close";
    for_each_csv_line(text, [&](int lineno, const std::string& line) {
        if (!header_seen) {
            if (line != header)
                throw MalformedRow("line " + std::to_string(lineno) + ": expected header '" +
                                   header + "'");
            header_seen = true;
            return;
        }
        const auto cols = split_csv_line(line);
        if (cols.size() != 6)
            throw MalformedRow("line " + std::to_string(lineno) + ": expected 6 columns");
        OptionQuote q;
        q.date = parse_date(cols[0]);
        q.strike = parse_number(cols[1], lineno);
        q.expiry = parse_date(cols[2]);
        q.price = parse_number(cols[3], lineno);
        q.volume = parse_number(cols[4], lineno);
        q.underlying_close = parse_number(cols[5], lineno);
        if (q.price < 0.0 || q.volume < 0.0 || !(q.strike > 0.0) ||
            !(q.underlying_close > 0.0) || !(q.expiry > q.date))
            throw MalformedRow("line " + std::to_string(lineno) + ": inadmissible quote");
        if (q.volume >= min_volume) quotes.push_back(q);
    });
    if (!header_seen) throw MalformedRow("missing options header");
    std::stable_sort(quotes.begin(), quotes.end(),
                     [](const OptionQuote& a, const OptionQuote& b) { return a.date < b.date; });
    return quotes;
}

std::string serialize_options_csv(const std::vector<OptionQuote>& quotes) {
    std::string out = "date,strike,expiry,price,volume,underlying_close\n";
    for (const OptionQuote& q : quotes)
        out += format_date(q.date) + "," + format_double(q.strike) + "," +
               format_date(q.expiry) + "," + format_double(q.price) + "," +
               format_double(q.volume) + "," + format_double(q.underlying_close) + "\n";
    return out;
}

void save_options_csv(const std::vector<OptionQuote>& quotes, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << serialize_options_csv(quotes);
}

std::vector<FuturesSeries> build_windows(const FuturesSeries& series, int window_len,
                                         int shift, int n_windows) {
    if (window_len <= 0 || n_windows <= 0 || shift < 0)
        throw NonPositiveInput("build_windows: window_len, n_windows > 0 and shift >= 0");
    const size_t needed =
        static_cast<size_t>(window_len) + static_cast<size_t>(shift) * (n_windows - 1);
    if (series.size() < needed)
        throw SeriesTooShort("build_windows: need " + std::to_string(needed) +
                             " rows, have " + std::to_string(series.size()));
    std::vector<FuturesSeries> out(static_cast<size_t>(n_windows));
    for (int w = 0; w < n_windows; ++w) {
        const size_t beg = static_cast<size_t>(shift) * w;
        FuturesSeries& win = out[static_cast<size_t>(w)];
        win.dates.assign(series.dates.begin() + beg,
                         series.dates.begin() + beg + window_len);
        win.closes.assign(series.closes.begin() + beg,
                          series.closes.begin() + beg + window_len);
    }
    return out;
}

FixtureData generate_fixture(const FixtureSpec& spec) {
    validate_params(spec.params);
    if (spec.n_days < 2) throw NonPositiveInput("fixture needs at least 2 days");

    SimulateOptions sopt;
    sopt.s0 = spec.s0;
    sopt.l0 = spec.l0;
    sopt.keep_paths = true;
    sopt.keep_l_paths = true;
    const PathBatch path = simulate_paths(spec.params, 1, spec.n_days, spec.seed,
                                          Measure::physical, sopt);
    const std::vector<double>& s_path = path.s_paths.front();
    const std::vector<double>& l_path = path.l_paths.front();

    FixtureData fx;
    Date d{2015, 1, 5}; // a Monday
    for (int t = 0; t <= spec.n_days; ++t) {
        if (t > 0) d = next_trading_day(d);
        fx.futures.dates.push_back(d);
        fx.futures.closes.push_back(std::round(s_path[static_cast<size_t>(t)] * 100.0) / 100.0);
    }

    std::uint64_t vol_state = spec.seed ^ 0x5eed0f1eULL;
    const int expiry_days = static_cast<int>(std::lround(spec.expiry_years * 365.0));
    for (int t = spec.quote_every; t <= spec.n_days; t += spec.quote_every) {
        const double spot = fx.futures.closes[static_cast<size_t>(t)];
        const double l_here = std::clamp(l_path[static_cast<size_t>(t)], 0.0, 3.0);
        for (int qd = 0; qd < spec.quotes_per_date; ++qd) {
            // strikes straddling the spot: ... 94%, 98%, 102%, 106% ...
            const double frac = 0.94 + 0.04 * qd;
            const double strike = std::round(spot * frac);

            ModelParams pq = spec.params;
            pq.K = strike;
            pq.T = spec.expiry_years;
            const Grid g = build_grid(100, 40, 400, pq, 3.0, 3.0);
            AdiOptions aopt;
            const PricingResult pr = price_holder(pq, g, aopt);
            const double model_price = pr.price_at(spot, l_here);

            OptionQuote q;
            q.date = fx.futures.dates[static_cast<size_t>(t)];
            q.strike = strike;
            Date ex = q.date;
            // expiry = quote date + expiry horizon in calendar days
            for (int adv = 0; adv < expiry_days; ++adv) {
                ++ex.day;
                if (ex.day > days_in_month(ex.year, ex.month)) {
                    ex.day = 1;
                    if (++ex.month > 12) {
                        ex.month = 1;
                        ++ex.year;
                    }
                }
            }
            if (is_weekend(ex)) ex = next_trading_day(ex);
            q.expiry = ex;
            q.price = std::round(model_price * 100.0) / 100.0;
            const double u =
                static_cast<double>(splitmix64(vol_state) >> 11) * 0x1.0p-53;
            q.volume = std::round(spec.volume_low + u * (spec.volume_high - spec.volume_low));
            q.underlying_close = spot;
            fx.quotes.push_back(q);
        }
    }
    return fx;
}

void write_fixture(const FixtureData& fx, const std::string& futures_path,
                   const std::string& options_path) {
    save_futures_csv(fx.futures, futures_path);
    save_options_csv(fx.quotes, options_path);
}

} // namespace amliq
