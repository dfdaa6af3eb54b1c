#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "support/synthetic.hpp"
#include "trendlens/error.hpp"
#include "trendlens/pipeline.hpp"
#include "trendlens/svg.hpp"

namespace fs = std::filesystem;
using namespace trendlens;
using nlohmann::json;

namespace {

const fs::path kConfigDir = fs::path(TRENDLENS_SOURCE_DIR) / "config";

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / fmt::format("trendlens_test_{}", name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[e.path().lexically_relative(root).generic_string()] = slurp(e.path());
    }
    return out;
}

AnalysisConfig synthetic_config(const fs::path& dir, const testing::SyntheticOptions& opts = {}) {
    testing::write_synthetic_export(dir / "export.csv", opts);
    AnalysisConfig c;
    c.input = dir / "export.csv";
    c.category_map = kConfigDir / "category_map.conf";
    c.geometry = kConfigDir / "neighborhoods.geojson";
    c.stations = kConfigDir / "stations.csv";
    c.out = dir / "out";
    c.seed = 11;
    c.mosum.seed = 11;
    c.segreg.seed = 11;
    c.mosum.bootstrap_replicates = 200;
    c.stability_runs = 5;
    c.validate();
    return c;
}

int run_cli(const std::string& args, const fs::path& log) {
    const auto cmd = fmt::format("\"{}\" {} >\"{}\" 2>&1", TRENDLENS_CLI, args, log.string());
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("report-all on a synthetic export") {
    const auto dir = scratch("report_all");
    const auto config = synthetic_config(dir);
    cmd_report_all(config);
    write_manifest(config);

    const auto welch = json::parse(slurp(config.out / "citywide" / "welch.json"));
    REQUIRE(welch.size() == 2);
    CHECK(welch[0]["class"] == "prop47");
    CHECK(welch[0]["significant"] == true);
    CHECK(welch[0]["percent_change"].get<double>() > 0.0);
    CHECK(welch[1]["class"] == "nonprop47");
    CHECK(welch[1]["significant"] == true);
    CHECK(welch[1]["percent_change"].get<double>() < 0.0);

    const auto report = json::parse(slurp(config.out / "ingest" / "report.json"));
    CHECK(report["rejected_corrupt"] == 5);
    CHECK(report["dropped_excluded"] == json::array({"arson"}));

    const auto stations = lines_of(slurp(config.out / "stations" / "welch.csv"));
    CHECK(stations.size() == 1 + 4 * 3 * 3);
    for (const auto& line : stations) {
        if (line.rfind("Expo/Bundy", 0) == 0) CHECK(line.find("insufficient data") != std::string::npos);
    }

    const auto cp = json::parse(slurp(config.out / "changepoint" / "prop47.json"));
    CHECK(cp["trace"].size() == 167);
    CHECK(cp["change_points"].size() == cp["interval_months"].size());

    const auto seg = json::parse(slurp(config.out / "segreg" / "prop47.json"));
    CHECK(seg.contains("Y"));
    CHECK(seg.contains("T"));
    CHECK(seg.contains("stability_Y"));

    const auto manifest = json::parse(slurp(config.out / "manifest.json"));
    CHECK(manifest["config_hash"] == hex64(config.hash()));
    std::string previous;
    for (const auto& a : manifest["artifacts"]) {
        const auto path = a["path"].get<std::string>();
        CHECK(path > previous);
        previous = path;
        const auto bytes = slurp(config.out / path);
        CHECK(a["size"] == bytes.size());
        CHECK(a["fnv1a"] == hex64(fnv1a(bytes)));
    }
    CHECK(manifest["artifacts"].size() == tree(config.out).size() - 1);

    SUBCASE("rerun is byte identical") {
        const auto first = tree(config.out);
        cmd_report_all(config);
        write_manifest(config);
        CHECK(tree(config.out) == first);
    }
}

TEST_CASE("a different output directory does not change any artifact") {
    const auto dir = scratch("relocate");
    auto config = synthetic_config(dir);
    cmd_citywide(config);
    write_manifest(config);
    const auto first = tree(config.out);
    config.out = dir / "elsewhere";
    cmd_citywide(config);
    write_manifest(config);
    CHECK(tree(config.out) == first);
}

TEST_CASE("empty class gives an N/A row and constant input gives no change points") {
    const auto dir = scratch("constant");
    testing::SyntheticOptions opts;
    opts.categories = {{"LARCENY", 30.0, 30.0}};
    opts.constant = true;
    opts.corrupt_rows = 0;
    const auto config = synthetic_config(dir, opts);

    cmd_citywide(config);
    const auto rows = lines_of(slurp(config.out / "citywide" / "welch.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].rfind("nonprop47,", 0) == 0);
    CHECK(rows[2].find("N/A") != std::string::npos);
    // constant larceny series: zero variance on both sides
    CHECK(rows[1].find("N/A") != std::string::npos);

    cmd_changepoint(config);
    for (const char* cls : {"prop47", "nonprop47"}) {
        const auto cp = json::parse(slurp(config.out / "changepoint" / fmt::format("{}.json", cls)));
        CHECK(cp["change_points"].empty());
    }
}

TEST_CASE("ingest cache is reused until the source changes") {
    const auto dir = scratch("cache");
    const auto config = synthetic_config(dir);
    const auto fresh = load_records(config);
    REQUIRE(!fresh.empty());

    // truncate the cached store; a hash match must reuse it as is
    const auto store = config.out / "ingest" / "records.csv";
    const auto header = lines_of(slurp(store)).front();
    std::ofstream(store, std::ios::binary | std::ios::trunc) << header << "\n";
    CHECK(load_records(config).empty());

    testing::SyntheticOptions other;
    other.seed = 99;
    testing::write_synthetic_export(config.input, other);
    CHECK(!load_records(config).empty());
}

TEST_CASE("config loading") {
    const auto dir = scratch("config");
    testing::write_synthetic_export(dir / "export.csv", {});
    fs::create_directories(dir / "conf");
    const json doc{{"input", "../export.csv"},
                   {"category_map", (kConfigDir / "category_map.conf").string()},
                   {"out", "../out"},
                   {"seed", 5},
                   {"stl", {{"trend_window", 23}}},
                   {"mosum", {{"bandwidth", 8}, {"eta", 1.0}, {"variance_rule", "max"}}},
                   {"segreg", {{"n_breakpoints", 1}}}};
    std::ofstream(dir / "conf" / "a.json") << doc.dump();
    const auto c = AnalysisConfig::load(dir / "conf" / "a.json");
    CHECK(c.input == (dir / "export.csv").lexically_normal());
    CHECK(c.out == (dir / "out").lexically_normal());
    CHECK(c.seed == 5);
    CHECK(c.mosum.seed == 5);
    CHECK(c.stl.resolved_trend_window() == 23);
    CHECK(c.mosum.bandwidth == 8);
    CHECK(c.mosum.variance_rule == VarianceRule::Max);
    CHECK(c.segreg.n_breakpoints == 1);
    CHECK_NOTHROW(c.validate());

    SUBCASE("hash ignores locations and tracks settings") {
        auto moved = c;
        moved.out = dir / "x";
        moved.input = dir / "conf" / "a.json";
        CHECK(moved.hash() == c.hash());
        auto changed = c;
        changed.mosum.eta = 2.0;
        CHECK(changed.hash() != c.hash());
    }
    SUBCASE("invalid documents") {
        CHECK_THROWS_AS(AnalysisConfig::from_json(json{{"mosum", {{"variance_rule", "median"}}}}, dir), ConfigError);
        CHECK_THROWS_AS(AnalysisConfig::from_json(json{{"seed", "abc"}}, dir), ConfigError);
        CHECK_THROWS_AS(AnalysisConfig::from_json(json{{"window", {{"first", "2006/01"}}}}, dir), ConfigError);
        std::ofstream(dir / "bad.json") << "{ not json";
        CHECK_THROWS_AS(AnalysisConfig::load(dir / "bad.json"), ConfigError);
        auto missing = c;
        missing.input = dir / "absent.csv";
        CHECK_THROWS_AS(missing.validate(), ConfigError);
        auto no_geo = c;
        CHECK_THROWS_AS(cmd_neighborhoods(no_geo), ConfigError);
    }
}

TEST_CASE("seed precedence") {
    ::unsetenv("TRENDLENS_SEED");
    CHECK(resolve_seed(std::nullopt, std::nullopt) == 0);
    ::setenv("TRENDLENS_SEED", "42", 1);
    CHECK(resolve_seed(std::nullopt, std::nullopt) == 42);
    CHECK(resolve_seed(std::nullopt, 7) == 7);
    CHECK(resolve_seed(3, 7) == 3);
    ::setenv("TRENDLENS_SEED", "4x", 1);
    CHECK_THROWS_AS(resolve_seed(std::nullopt, std::nullopt), ConfigError);
    ::unsetenv("TRENDLENS_SEED");
}

TEST_CASE("cli exit codes") {
    const auto dir = scratch("cli");
    testing::write_synthetic_export(dir / "export.csv", {});
    const auto log = dir / "log.txt";
    const auto map = (kConfigDir / "category_map.conf").string();
    const auto base = fmt::format("--input \"{}\" --category-map \"{}\" --out \"{}\" --seed 3",
                                  (dir / "export.csv").string(), map, (dir / "out").string());

    CHECK(run_cli("--help", log) == 0);
    CHECK(run_cli("", log) == 2);
    CHECK(run_cli("frobnicate", log) == 2);
    CHECK(run_cli("ingest --no-such-flag", log) == 2);
    CHECK(run_cli(fmt::format("ingest --input \"{}\" --category-map \"{}\"", (dir / "none.csv").string(), map), log) ==
          2);
    CHECK(run_cli("citywide " + base + " --eta -1", log) == 2);
    CHECK(run_cli("neighborhoods " + base, log) == 2);

    CHECK(run_cli("ingest " + base, log) == 0);
    CHECK(fs::is_regular_file(dir / "out" / "manifest.json"));
    CHECK(run_cli("citywide " + base, log) == 0);
    CHECK(run_cli("changepoint " + base + " --w-trend 13 --mosum-g 8 --eta 1 --epsilon 0.5", log) == 0);
    const auto cp = json::parse(slurp(dir / "out" / "changepoint" / "prop47.json"));
    CHECK(cp["trend_window"] == 13);
    CHECK(cp["config"]["bandwidth"] == 8);
    CHECK(cp["config"]["seed"] == 3);

    std::ofstream(dir / "ambiguous.csv") << "date,ucr_code,description,latitude,longitude\n"
                                         << "14-11-2014,100,LARCENY,34.01,-118.49\n";
    CHECK(run_cli(fmt::format("ingest --input \"{}\" --category-map \"{}\" --out \"{}\"",
                              (dir / "ambiguous.csv").string(), map, (dir / "out2").string()),
                  log) == 3);
}

TEST_CASE("svg rendering") {
    svg::Panel p;
    p.title = "a < b";
    p.lines.push_back({{0, 1, 2, 3, 4}, {1, 2, std::nan(""), 3, 4}, "#000", false});
    p.hlines.push_back({2.5, "#f00"});
    const auto doc = svg::render({p, p});
    CHECK(doc.rfind("<?xml", 0) == 0);
    CHECK(doc.find("</svg>\n") == doc.size() - 7);
    CHECK(doc.find("a &lt; b") != std::string::npos);
    std::size_t polylines = 0;
    for (auto pos = doc.find("<polyline"); pos != std::string::npos; pos = doc.find("<polyline", pos + 1)) ++polylines;
    CHECK(polylines == 4);
    CHECK(svg::render({p, p}) == doc);
}
