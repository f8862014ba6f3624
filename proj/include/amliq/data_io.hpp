#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amliq/errors.hpp"
#include "amliq/params.hpp"

namespace amliq {

// Calendar date; only what ordering and day arithmetic need.
struct Date {
    int year = 0, month = 0, day = 0;
    auto operator<=>(const Date&) const = default;
};
Date parse_date(const std::string& iso);       // YYYY-MM-DD, throws MalformedRow
std::string format_date(const Date& d);
long days_between(const Date& a, const Date& b); // b - a in calendar days

struct FuturesSeries {
    std::vector<Date> dates;
    std::vector<double> closes;
    [[nodiscard]] size_t size() const { return dates.size(); }
};

struct OptionQuote {
    Date date;
    double strike = 0.0;
    Date expiry;
    double price = 0.0;
    double volume = 0.0;
    double underlying_close = 0.0;
};

// Canonical CSV schemas: futures `date,close`, options
// `date,strike,expiry,price,volume,underlying_close`. ISO-8601 dates,
// shortest round-trip decimals, '#' comments ignored.
FuturesSeries load_futures_csv(const std::string& path);
std::string serialize_futures_csv(const FuturesSeries& s);
void save_futures_csv(const FuturesSeries& s, const std::string& path);

std::vector<OptionQuote> load_options_csv(const std::string& path, double min_volume = 1200.0);
std::string serialize_options_csv(const std::vector<OptionQuote>& quotes);
void save_options_csv(const std::vector<OptionQuote>& quotes, const std::string& path);

// Overlapping moving windows: window w starts at index shift*w, each
// window_len long. Throws SeriesTooShort.
std::vector<FuturesSeries> build_windows(const FuturesSeries& series,
                                         int window_len = 762, int shift = 5,
                                         int n_windows = 5);

// Synthetic fixture generation: futures from the liquidity model's physical
// dynamics, option quotes priced from the same model, so the full
// calibrate/evaluate pipeline runs without proprietary data.
struct FixtureSpec {
    ModelParams params{};      // true data-generating parameters
    double s0 = 3000.0;
    double l0 = 0.25;
    int n_days = 800;
    int quote_every = 21;      // quote dates spacing (trading days)
    int quotes_per_date = 4;   // strikes around the spot
    double expiry_years = 0.5;
    double volume_low = 800.0; // some quotes drop below the liquidity filter
    double volume_high = 5000.0;
    std::uint64_t seed = 20240601;
};
struct FixtureData {
    FuturesSeries futures;
    std::vector<OptionQuote> quotes; // includes rows below the volume filter
};
FixtureData generate_fixture(const FixtureSpec& spec);
void write_fixture(const FixtureData& fx, const std::string& futures_path,
                   const std::string& options_path);

} // namespace amliq
