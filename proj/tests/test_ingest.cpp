#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "trendlens/error.hpp"
#include "trendlens/ingest.hpp"

using namespace trendlens;

namespace {

const std::filesystem::path kData = TRENDLENS_TEST_DATA;

CategoryMap map_from(const std::string& text) {
    std::istringstream in(text);
    return CategoryMap::parse(in);
}

const char* kMapText = R"(
[settings]
min_count_threshold = 450
[collapse]
aggravated assault = assault
grand theft auto = grand theft auto
larceny = larceny
narcotic sale = narcotic sale
arson = arson
misappropriation = misappropriation
[classes]
larceny = reclassified
assault = nonreclassified
grand theft auto = nonreclassified
narcotic sale = nonreclassified
arson = excluded
[exclude]
misappropriation
)";

std::string export_with(const std::vector<std::pair<std::string, int>>& counts) {
    std::string out = "date,ucr_code,description,latitude,longitude\n";
    for (const auto& [desc, n] : counts) {
        for (int i = 0; i < n; ++i) out += "2010-06-15,1," + desc + ",34.01,-118.49\n";
    }
    return out;
}

}  // namespace

TEST_CASE("collapse rules") {
    const auto map = map_from(kMapText);
    CHECK(collapse_category("aggravated assault with knife", map) == "assault");
    CHECK(collapse_category("AGGRAVATED   Assault with Knife", map) == "assault");
    CHECK(collapse_category("larceny", map) == "larceny");
    CHECK(collapse_category("zzz-unknown", map) == kUnmapped);
}

TEST_CASE("classify") {
    const auto map = map_from(kMapText);
    CHECK(classify("larceny", map) == CrimeClass::Reclassified);
    CHECK(classify("grand theft auto", map) == CrimeClass::NonReclassified);
    CHECK(classify("arson", map) == CrimeClass::Excluded);
    CHECK(classify("misappropriation", map) == CrimeClass::Excluded);
    CHECK(classify(kUnmapped, map) == CrimeClass::Excluded);
}

TEST_CASE("category map validation") {
    CHECK_THROWS_AS(map_from("[classes]\nfraud = reclassified\n"), ConfigError);
    CHECK_THROWS_AS(map_from("[collapse]\nfraud = fraud\n[classes]\nfraud = maybe\n"), ConfigError);
    CHECK_THROWS_AS(map_from("[settings]\nmin_count_threshold = -1\n"), ConfigError);
    CHECK_THROWS_AS(map_from("[bogus]\nx = y\n"), ConfigError);
}

TEST_CASE("threshold boundary is strict") {
    const auto map = map_from(kMapText);
    std::istringstream in(export_with({{"larceny", 449}, {"aggravated assault", 450}, {"narcotic sale", 456}}));
    const auto res = ingest(in, {}, map);
    std::set<std::string> kept;
    for (const auto& r : res.accepted) kept.insert(r.category);
    CHECK(kept == std::set<std::string>{"assault", "narcotic sale"});
    REQUIRE(res.report.dropped_below_threshold.size() == 1);
    CHECK(res.report.dropped_below_threshold[0] == std::pair<std::string, std::int64_t>{"larceny", 449});
    CHECK(res.report.accounted_rows() == res.report.input_rows);
}

TEST_CASE("raising the threshold never grows the accepted set") {
    const auto map = map_from(kMapText);
    const auto text = export_with({{"larceny", 120}, {"aggravated assault", 300}, {"narcotic sale", 80},
                                   {"arson", 40}, {"misappropriation", 5}, {"zzz", 3}});
    std::size_t previous = SIZE_MAX;
    for (std::int64_t th : {0, 50, 81, 121, 300, 301}) {
        std::istringstream in(text);
        const auto n = ingest(in, {}, map.with_threshold(th)).accepted.size();
        CHECK(n <= previous);
        previous = n;
    }
}

TEST_CASE("classes partition the parsed records") {
    const auto map = map_from(kMapText);
    std::mt19937 rng(3);
    const std::vector<std::string> descs{"larceny", "aggravated assault", "narcotic sale", "arson",
                                         "misappropriation", "grand theft auto", "mystery"};
    std::uniform_int_distribution<int> pick(0, static_cast<int>(descs.size()) - 1);
    std::vector<std::pair<std::string, int>> counts;
    for (int i = 0; i < 60; ++i) counts.emplace_back(descs[pick(rng)], 1 + pick(rng) * 40);
    std::istringstream a(export_with(counts));
    const auto parsed = parse_csv(a, {});
    std::istringstream b(export_with(counts));
    const auto res = ingest(b, {}, map);

    std::int64_t reclassified = 0;
    std::int64_t non = 0;
    for (const auto& r : res.accepted) {
        CHECK(r.crime_class != CrimeClass::Excluded);
        (r.crime_class == CrimeClass::Reclassified ? reclassified : non) += 1;
    }
    const auto excluded = res.report.dropped_excluded_rows + res.report.dropped_below_threshold_rows();
    CHECK(reclassified + non + excluded == static_cast<std::int64_t>(parsed.records.size()));
}

TEST_CASE("ingest is deterministic") {
    const auto map = map_from(kMapText);
    const auto text = export_with({{"larceny", 500}, {"arson", 3}, {"zzz", 2}});
    std::istringstream a(text);
    std::istringstream b(text);
    CHECK(ingest(a, {}, map).report.to_json().dump() == ingest(b, {}, map).report.to_json().dump());
}

TEST_CASE("parse_date") {
    CHECK(parse_date("2014-11-03") == Date{2014, 11, 3});
    CHECK(parse_date("11/04/2014") == Date{2014, 11, 4});
    CHECK(parse_date("2015-01-09T10:30:00") == Date{2015, 1, 9});
    CHECK(parse_date("1/9/2015 12:00:00 AM") == Date{2015, 1, 9});
    CHECK_FALSE(parse_date(""));
    CHECK_FALSE(parse_date("yesterday"));
    CHECK_FALSE(parse_date("2015-02-30"));
    CHECK_THROWS_AS(parse_date("03-11-2014"), DataError);
    CHECK_THROWS_AS(parse_date("11/04/14"), DataError);
}

TEST_CASE("small fixture: corrupt and out-of-window rows are counted") {
    const auto map = CategoryMap::load(kData / "mini_map.conf");
    const auto res = ingest(kData / "mini_export.csv", CsvSchema{}, map);
    CHECK(res.report.input_rows == 4);
    CHECK(res.report.rejected_corrupt == 1);
    CHECK(res.report.dropped_out_of_window == 1);
    CHECK(res.report.accepted == 2);
    REQUIRE(res.accepted.size() == 2);
    CHECK(res.accepted[0].category == "larceny");
    CHECK(res.accepted[0].crime_class == CrimeClass::Reclassified);
    CHECK(res.accepted[1].category == "assault");
    CHECK(res.report.accounted_rows() == res.report.input_rows);
}

TEST_CASE("missing schema column is a configuration error") {
    std::istringstream in("when,ucr_code,description,latitude,longitude\n");
    CHECK_THROWS_AS(parse_csv(in, {}), ConfigError);
}

TEST_CASE("record store round trip") {
    const auto map = CategoryMap::load(kData / "mini_map.conf");
    const auto res = ingest(kData / "mini_export.csv", CsvSchema{}, map);
    std::stringstream buf;
    write_records(buf, res.accepted);
    const auto text = buf.str();
    const auto back = read_records(buf);
    REQUIRE(back.size() == res.accepted.size());
    std::stringstream again;
    write_records(again, back);
    CHECK(again.str() == text);
}
