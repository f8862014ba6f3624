#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "amliq/adi.hpp"
#include "amliq/data_io.hpp"
#include "amliq/export_io.hpp"
#include "amliq/grid.hpp"

using namespace amliq;

namespace {
std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = "amliq_test_" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

// weekday index with Monday = 0, counted from 2015-01-05 (a Monday)
int weekday_from_monday(const Date& d) {
    const long n = days_between(Date{2015, 1, 5}, d);
    return static_cast<int>(((n % 7) + 7) % 7);
}
} // namespace

TEST_CASE("date parsing, formatting and arithmetic") {
    const Date d = parse_date("2024-02-29");
    CHECK(d == Date{2024, 2, 29});
    CHECK(format_date(d) == "2024-02-29");
    CHECK(format_date(Date{2015, 1, 5}) == "2015-01-05");
    CHECK(parse_date(format_date(Date{1999, 12, 31})) == Date{1999, 12, 31});

    CHECK_THROWS_AS(parse_date("2023-02-29"), MalformedRow); // not a leap year
    CHECK_THROWS_AS(parse_date("2100-02-29"), MalformedRow); // century rule
    CHECK_NOTHROW(parse_date("2000-02-29"));                 // 400-year rule
    CHECK_THROWS_AS(parse_date("2023-13-01"), MalformedRow);
    CHECK_THROWS_AS(parse_date("2023-00-10"), MalformedRow);
    CHECK_THROWS_AS(parse_date("2023-04-31"), MalformedRow);
    CHECK_THROWS_AS(parse_date("2023-04-00"), MalformedRow);
    CHECK_THROWS_AS(parse_date("23-01-01"), MalformedRow);   // wrong width
    CHECK_THROWS_AS(parse_date("2023-1-01"), MalformedRow);
    CHECK_THROWS_AS(parse_date("2023/01/01"), MalformedRow);
    CHECK_THROWS_AS(parse_date("2O23-01-01"), MalformedRow); // letter O
    CHECK_THROWS_AS(parse_date(""), MalformedRow);

    CHECK(days_between(Date{2023, 1, 1}, Date{2024, 1, 1}) == 365);
    CHECK(days_between(Date{2024, 1, 1}, Date{2025, 1, 1}) == 366);
    CHECK(days_between(Date{2024, 2, 28}, Date{2024, 3, 1}) == 2);
    CHECK(days_between(Date{2023, 2, 28}, Date{2023, 3, 1}) == 1);
    CHECK(days_between(Date{2024, 1, 1}, Date{2023, 1, 1}) == -365);
    CHECK(days_between(Date{2015, 1, 5}, Date{2015, 1, 5}) == 0);

    CHECK(Date{2023, 12, 31} < Date{2024, 1, 1});
    CHECK(Date{2024, 3, 1} > Date{2024, 2, 29});
}

TEST_CASE("futures csv round trip is byte exact") {
    FuturesSeries s;
    s.dates = {Date{2024, 1, 2}, Date{2024, 1, 3}, Date{2024, 1, 4},
               Date{2024, 1, 5}, Date{2024, 1, 8}};
    s.closes = {100.1, 0.1 + 0.2, 2999.97, 1e-3, 12345.678901234567};

    const std::string text = serialize_futures_csv(s);
    CHECK(text.substr(0, 11) == "date,close\n");

    const std::string path = write_temp("fut_rt.csv", text);
    const FuturesSeries r = load_futures_csv(path);
    REQUIRE(r.size() == s.size());
    for (size_t q = 0; q < s.size(); ++q) {
        CHECK(r.dates[q] == s.dates[q]);
        CHECK(r.closes[q] == s.closes[q]); // shortest round-trip decimals
    }
    CHECK(serialize_futures_csv(r) == text);
    std::remove(path.c_str());
}

TEST_CASE("futures csv loading: sorting, comments, CRLF") {
    const std::string path = write_temp("fut_sort.csv",
                                        "# synthetic file\r\n"
                                        "date,close\r\n"
                                        "2024-01-04,12.5\r\n"
                                        "\r\n"
                                        "2024-01-02,10.25\r\n"
                                        "# interleaved comment\n"
                                        "2024-01-03,11\n");
    const FuturesSeries s = load_futures_csv(path);
    REQUIRE(s.size() == 3);
    CHECK(s.dates[0] == Date{2024, 1, 2});
    CHECK(s.dates[1] == Date{2024, 1, 3});
    CHECK(s.dates[2] == Date{2024, 1, 4});
    CHECK(s.closes[0] == 10.25);
    CHECK(s.closes[1] == 11.0);
    CHECK(s.closes[2] == 12.5);
    std::remove(path.c_str());
}

TEST_CASE("futures csv loading rejects bad input") {
    struct Bad {
        const char* name;
        const char* text;
    };
    const Bad malformed[] = {
        {"noheader.csv", "2024-01-02,10.5\n"},
        {"columns.csv", "date,close\n2024-01-02,10.5,extra\n"},
        {"onecol.csv", "date,close\n2024-01-02\n"},
        {"badnum.csv", "date,close\n2024-01-02,abc\n"},
        {"junk.csv", "date,close\n2024-01-02,1.5x\n"},
        {"baddate.csv", "date,close\n2024-02-30,10.5\n"},
        {"empty.csv", ""},
        {"commentsonly.csv", "# nothing here\n"},
    };
    for (const Bad& b : malformed) {
        const std::string path = write_temp(b.name, b.text);
        CHECK_THROWS_AS(load_futures_csv(path), MalformedRow);
        std::remove(path.c_str());
    }

    const std::string dup = write_temp("dup.csv",
                                       "date,close\n"
                                       "2024-01-02,10.5\n"
                                       "2024-01-03,10.6\n"
                                       "2024-01-02,10.7\n");
    CHECK_THROWS_AS(load_futures_csv(dup), DuplicateDate);
    std::remove(dup.c_str());

    const std::string zero = write_temp("zero.csv", "date,close\n2024-01-02,0\n");
    CHECK_THROWS_AS(load_futures_csv(zero), NonPositivePrice);
    std::remove(zero.c_str());
    const std::string neg = write_temp("neg.csv", "date,close\n2024-01-02,-3.5\n");
    CHECK_THROWS_AS(load_futures_csv(neg), NonPositivePrice);
    std::remove(neg.c_str());

    CHECK_THROWS_WITH_AS(load_futures_csv("amliq_test_does_not_exist.csv"),
                         doctest::Contains("cannot open"), Error);
}

TEST_CASE("options csv round trip, volume filter and date sort") {
    std::vector<OptionQuote> quotes(4);
    quotes[0] = {Date{2024, 3, 4}, 2800.0, Date{2024, 9, 4}, 55.25, 2400.0, 2950.13};
    quotes[1] = {Date{2024, 3, 4}, 3000.0, Date{2024, 9, 4}, 140.5, 800.0, 2950.13};
    quotes[2] = {Date{2024, 2, 5}, 2900.0, Date{2024, 8, 5}, 101.75, 1200.0, 2940.4};
    quotes[3] = {Date{2024, 3, 4}, 3100.0, Date{2024, 9, 4}, 230.0, 0.0, 2950.13};

    const std::string text = serialize_options_csv(quotes);
    CHECK(text.substr(0, text.find('\n')) ==
          "date,strike,expiry,price,volume,underlying_close");
    const std::string path = write_temp("opt_rt.csv", text);

    // min_volume = 0 keeps every row; loading sorts by quote date, stably
    const std::vector<OptionQuote> all = load_options_csv(path, 0.0);
    REQUIRE(all.size() == 4);
    CHECK(all[0].date == Date{2024, 2, 5});
    CHECK(all[1].strike == 2800.0); // original order preserved within a date
    CHECK(all[2].strike == 3000.0);
    CHECK(all[3].strike == 3100.0);
    CHECK(all[1].price == 55.25);
    CHECK(all[1].volume == 2400.0);
    CHECK(all[1].underlying_close == 2950.13);
    CHECK(all[1].expiry == Date{2024, 9, 4});

    // the default liquidity filter drops volume < 1200
    const std::vector<OptionQuote> liquid = load_options_csv(path);
    REQUIRE(liquid.size() == 2);
    CHECK(liquid[0].strike == 2900.0);
    CHECK(liquid[0].volume == 1200.0); // boundary volume is kept
    CHECK(liquid[1].strike == 2800.0);

    // serialize(load(serialize(x))) is stable once sorted
    const std::string again = serialize_options_csv(all);
    const std::string path2 = write_temp("opt_rt2.csv", again);
    CHECK(serialize_options_csv(load_options_csv(path2, 0.0)) == again);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("options csv rejects inadmissible quotes") {
    const std::string header = "date,strike,expiry,price,volume,underlying_close\n";
    struct Bad {
        const char* name;
        std::string row;
    };
    const Bad rows[] = {
        {"negprice.csv", "2024-03-04,2800,2024-09-04,-0.5,2400,2950\n"},
        {"negvol.csv", "2024-03-04,2800,2024-09-04,55,-1,2950\n"},
        {"zerostrike.csv", "2024-03-04,0,2024-09-04,55,2400,2950\n"},
        {"zerounder.csv", "2024-03-04,2800,2024-09-04,55,2400,0\n"},
        {"expiryeq.csv", "2024-03-04,2800,2024-03-04,55,2400,2950\n"},
        {"expirylt.csv", "2024-03-04,2800,2024-02-04,55,2400,2950\n"},
        {"fivecol.csv", "2024-03-04,2800,2024-09-04,55,2400\n"},
    };
    for (const Bad& b : rows) {
        const std::string path = write_temp(b.name, header + b.row);
        CHECK_THROWS_AS(load_options_csv(path, 0.0), MalformedRow);
        std::remove(path.c_str());
    }

    const std::string bad_header =
        write_temp("optheader.csv", "date,strike,expiry,price,volume\n");
    CHECK_THROWS_AS(load_options_csv(bad_header, 0.0), MalformedRow);
    std::remove(bad_header.c_str());

    // a zero-price quote is unusual but admissible (deep out of the money)
    const std::string zp = write_temp("zeroprice.csv",
                                      header + "2024-03-04,2800,2024-09-04,0,2400,2950\n");
    CHECK(load_options_csv(zp, 0.0).size() == 1);
    std::remove(zp.c_str());
}

TEST_CASE("build_windows slices overlapping estimation windows") {
    FuturesSeries s;
    for (int q = 0; q < 20; ++q) {
        s.dates.push_back(Date{2024, 1, 1 + q});
        s.closes.push_back(100.0 + q);
    }

    const std::vector<FuturesSeries> w = build_windows(s, 10, 2, 3);
    REQUIRE(w.size() == 3);
    for (int k = 0; k < 3; ++k) {
        REQUIRE(w[static_cast<size_t>(k)].size() == 10);
        CHECK(w[static_cast<size_t>(k)].dates[0] == Date{2024, 1, 1 + 2 * k});
        CHECK(w[static_cast<size_t>(k)].closes[0] == 100.0 + 2 * k);
        CHECK(w[static_cast<size_t>(k)].closes[9] == 109.0 + 2 * k);
    }

    // shift = 0 repeats the same window
    const std::vector<FuturesSeries> same = build_windows(s, 12, 0, 4);
    REQUIRE(same.size() == 4);
    CHECK(same[3].dates == same[0].dates);
    CHECK(same[3].closes == same[0].closes);

    CHECK_THROWS_WITH_AS(build_windows(s, 10, 5, 4),
                         doctest::Contains("need 25"), SeriesTooShort);
    CHECK_THROWS_WITH_AS(build_windows(s, 21, 0, 1),
                         doctest::Contains("have 20"), SeriesTooShort);
    CHECK_THROWS_AS(build_windows(s, 0, 2, 3), NonPositiveInput);
    CHECK_THROWS_AS(build_windows(s, 10, -1, 3), NonPositiveInput);
    CHECK_THROWS_AS(build_windows(s, 10, 2, 0), NonPositiveInput);
}

TEST_CASE("generate_fixture produces a deterministic, well-formed data set") {
    FixtureSpec spec;
    spec.s0 = 100.0;
    spec.l0 = 0.3;
    spec.n_days = 40;
    spec.quote_every = 20;
    spec.quotes_per_date = 2;
    spec.expiry_years = 0.25;
    spec.seed = 97;

    const FixtureData fx = generate_fixture(spec);

    REQUIRE(fx.futures.size() == 41);
    CHECK(fx.futures.dates.front() == Date{2015, 1, 5});
    for (size_t q = 0; q < fx.futures.size(); ++q) {
        if (q > 0) CHECK(fx.futures.dates[q - 1] < fx.futures.dates[q]);
        CHECK(weekday_from_monday(fx.futures.dates[q]) < 5); // trading days only
        const double c = fx.futures.closes[q];
        CHECK(c > 0.0);
        CHECK(c * 100.0 == std::round(c * 100.0)); // quoted in cents
    }
    // 40 / 20 = 2 quote dates, 2 strikes each
    REQUIRE(fx.quotes.size() == 4);
    for (const OptionQuote& q : fx.quotes) {
        CHECK(q.expiry > q.date);
        const long horizon = days_between(q.date, q.expiry);
        CHECK(horizon >= 91); // 0.25y = 91 calendar days, weekend-adjusted
        CHECK(horizon <= 93);
        CHECK(q.volume >= spec.volume_low);
        CHECK(q.volume <= spec.volume_high);
        CHECK(q.volume == std::round(q.volume));
        CHECK(q.price >= 0.0);
        CHECK(q.price * 100.0 == std::round(q.price * 100.0));
        CHECK(q.strike == std::round(q.strike));
        CHECK(q.strike > 0.0);
    }
    // strikes straddle the spot at 94% / 98%
    CHECK(fx.quotes[0].date == fx.futures.dates[20]);
    CHECK(fx.quotes[0].underlying_close == fx.futures.closes[20]);
    CHECK(fx.quotes[0].strike == std::round(0.94 * fx.futures.closes[20]));
    CHECK(fx.quotes[1].strike == std::round(0.98 * fx.futures.closes[20]));
    CHECK(fx.quotes[2].date == fx.futures.dates[40]);

    // an ITM put on the same date must not be cheaper than a more OTM one
    CHECK(fx.quotes[0].price <= fx.quotes[1].price);

    // same seed reproduces the files byte for byte; a different seed does not
    const FixtureData fx2 = generate_fixture(spec);
    CHECK(serialize_futures_csv(fx2.futures) == serialize_futures_csv(fx.futures));
    CHECK(serialize_options_csv(fx2.quotes) == serialize_options_csv(fx.quotes));
    FixtureSpec other = spec;
    other.seed = 98;
    CHECK(serialize_futures_csv(generate_fixture(other).futures) !=
          serialize_futures_csv(fx.futures));

    // written fixture loads back losslessly
    const std::string fpath = "amliq_test_fx_futures.csv";
    const std::string opath = "amliq_test_fx_options.csv";
    write_fixture(fx, fpath, opath);
    const FuturesSeries fr = load_futures_csv(fpath);
    REQUIRE(fr.size() == fx.futures.size());
    CHECK(fr.closes == fx.futures.closes);
    CHECK(load_options_csv(opath, 0.0).size() == fx.quotes.size());
    std::remove(fpath.c_str());
    std::remove(opath.c_str());

    FixtureSpec bad = spec;
    bad.n_days = 1;
    CHECK_THROWS_AS(generate_fixture(bad), NonPositiveInput);
}

TEST_CASE("surface csv round trip is bitwise on grid nodes") {
    ModelParams p;
    const Grid g = build_grid(12, 8, 40, p);
    const PricingResult h = price_holder(p, g);

    const std::string text = surface_csv(h.final_surface, g, p.T);
    const PriceSurface back = surface_from_csv(text, g);
    for (int i = 0; i < g.n_s; ++i)
        for (int j = 0; j < g.n_l; ++j)
            CHECK(back.at(i, j) == h.final_surface.at(i, j));

    PriceSurface wrong(g.n_s, g.n_l - 1, Side::holder, Style::american);
    CHECK_THROWS_AS(surface_csv(wrong, g, p.T), LengthMismatch);
}

TEST_CASE("surface csv parser validates header, shape and node coverage") {
    Grid g;
    g.n_s = 2;
    g.n_l = 2;
    g.n_t = 2;
    g.s_max = g.l_max = g.t_max = 1.0;
    g.delta_s = g.delta_l = g.delta_tau = 1.0;
    g.s_nodes = g.l_nodes = g.tau_nodes = {0.0, 1.0};

    const std::string good = "S,L,tau,V\n"
                             "0,0,1,1.5\n"
                             "0,1,1,2.5\n"
                             "# comments survive inside the table\n"
                             "1,0,1,3.5\n"
                             "1,1,1,4.5\n";
    const PriceSurface v = surface_from_csv(good, g);
    CHECK(v.at(0, 0) == 1.5);
    CHECK(v.at(1, 1) == 4.5);

    // a repeated node overwrites; coverage is still complete
    CHECK(surface_from_csv(good + "0,0,1,7\n", g).at(0, 0) == 7.0);

    CHECK_THROWS_AS(surface_from_csv("", g), MalformedRow);
    CHECK_THROWS_AS(surface_from_csv("S,L,V\n", g), MalformedRow);
    CHECK_THROWS_WITH_AS(
        surface_from_csv("S,L,tau,V\n0,0,1,1.5\n0,1,1,2.5\n1,0,1,3.5\n", g),
        doctest::Contains("missing"), MalformedRow);
    CHECK_THROWS_WITH_AS(surface_from_csv(good + "0.5,0,1,9\n", g),
                         doctest::Contains("not on the grid"), MalformedRow);
    CHECK_THROWS_AS(surface_from_csv(good + "0,0,1\n", g), MalformedRow);
    CHECK_THROWS_AS(surface_from_csv(good + "0,0,1,1.5,9\n", g), MalformedRow);
    CHECK_THROWS_AS(surface_from_csv(good + "0,0,1,oops\n", g), MalformedRow);
}

TEST_CASE("boundary and json exports have the advertised shape") {
    ModelParams p;
    const Grid g = build_grid(10, 6, 12, p);
    const PricingResult h = price_holder(p, g);

    const std::string bcsv = boundary_csv(h.boundary, g);
    CHECK(bcsv.substr(0, 16) == "L,tau,Sf,flagged");
    // header + one row per (tau, L) node
    size_t lines = 0;
    for (char ch : bcsv)
        if (ch == '\n') ++lines;
    CHECK(lines == 1 + static_cast<size_t>(g.n_t) * g.n_l);

    const std::string sj = surface_json(h.final_surface, g, p.T);
    CHECK(sj.find("\"n_s\": 10") != std::string::npos);
    CHECK(sj.find("\"n_l\": 6") != std::string::npos);
    CHECK(sj.find("\"values\"") != std::string::npos);
    const std::string bj = boundary_json(h.boundary, g);
    CHECK(bj.find("\"sf\"") != std::string::npos);
    CHECK(bj.find("\"flagged\"") != std::string::npos);

    const Grid g2 = build_grid(10, 6, 13, p);
    CHECK_THROWS_AS(boundary_csv(h.boundary, g2), LengthMismatch);
    CHECK_THROWS_AS(boundary_json(h.boundary, g2), LengthMismatch);
}

TEST_CASE("format_double emits shortest exact decimals") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(100.1) == "100.1");
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(-2.0) == "-2");

    const double awkward[] = {0.1,    1.0 / 3.0, 0.1 + 0.2, -4.9e-324, 1e308,
                              -1e-13, 2.5,       123456789.123456789};
    for (double x : awkward) {
        const std::string s = format_double(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
        const std::string s17 = format_double17(x);
        CHECK(std::strtod(s17.c_str(), nullptr) == x);
    }
}
