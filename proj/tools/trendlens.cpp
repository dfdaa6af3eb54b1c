#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "trendlens/error.hpp"
#include "trendlens/pipeline.hpp"

namespace fs = std::filesystem;
using namespace trendlens;

namespace {

struct Overrides {
    std::string config;
    std::string input;
    std::string category_map;
    std::string geometry;
    std::string stations;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> w_trend;
    std::optional<int> mosum_g;
    std::optional<double> eta;
    std::optional<double> epsilon;
    std::optional<int> breakpoints;
};

AnalysisConfig build_config(const Overrides& o) {
    auto config = o.config.empty() ? AnalysisConfig::from_json(nlohmann::json::object(), fs::current_path())
                                   : AnalysisConfig::load(o.config);
    if (!o.input.empty()) config.input = o.input;
    if (!o.category_map.empty()) config.category_map = o.category_map;
    if (!o.geometry.empty()) config.geometry = fs::path(o.geometry);
    if (!o.stations.empty()) config.stations = fs::path(o.stations);
    if (!o.out.empty()) config.out = o.out;
    if (o.seed) {
        config.seed = *o.seed;
        config.mosum.seed = *o.seed;
        config.segreg.seed = *o.seed;
    }
    if (o.w_trend) config.stl.trend_window = *o.w_trend;
    if (o.mosum_g) config.mosum.bandwidth = *o.mosum_g;
    if (o.eta) config.mosum.eta = *o.eta;
    if (o.epsilon) config.mosum.epsilon = *o.epsilon;
    if (o.breakpoints) {
        config.segreg.n_breakpoints = *o.breakpoints;
        config.segreg.initial.clear();
    }
    config.validate();
    return config;
}

int run(int argc, char** argv) {
    CLI::App app{"Monthly crime-count trend analysis"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    Overrides o;
    app.add_option("-c,--config", o.config, "JSON analysis config")->check(CLI::ExistingFile);
    app.add_option("--input", o.input, "incident CSV export");
    app.add_option("--category-map", o.category_map, "category map file");
    app.add_option("--geometry", o.geometry, "neighborhood GeoJSON");
    app.add_option("--stations", o.stations, "station CSV");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--seed", o.seed, "RNG seed (falls back to config, then TRENDLENS_SEED)");
    app.add_option("--w-trend", o.w_trend, "STL trend window (odd)");
    app.add_option("--mosum-g", o.mosum_g, "MOSUM bandwidth G in months");
    app.add_option("--eta", o.eta, "MOSUM minimum spacing as a multiple of G");
    app.add_option("--epsilon", o.epsilon, "MOSUM minimum exceedance width as a multiple of G");
    app.add_option("--breakpoints", o.breakpoints, "number of segmented-regression breakpoints");

    const std::map<std::string, std::function<void(const AnalysisConfig&)>> commands{
        {"ingest",
         [](const AnalysisConfig& c) {
             const auto report = cmd_ingest(c);
             std::cout << report.to_json().dump(2) << "\n";
         }},
        {"citywide", cmd_citywide},
        {"neighborhoods", cmd_neighborhoods},
        {"stations", cmd_stations},
        {"changepoint", cmd_changepoint},
        {"segreg", cmd_segreg},
        {"report-all", cmd_report_all},
    };
    const std::map<std::string, std::string> help{
        {"ingest", "parse, collapse and classify the export; cache accepted records"},
        {"citywide", "city-wide before/after Welch table and histograms"},
        {"neighborhoods", "per-neighborhood Welch table and STL panels"},
        {"stations", "per-station Welch tables over three epoch pairs"},
        {"changepoint", "STL trend slope and MOSUM change points"},
        {"segreg", "segmented regression on counts and trend with stability probe"},
        {"report-all", "run every command the config supports"},
    };
    for (const auto& [name, text] : help) app.add_subcommand(name, text);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::Config);
    }

    const auto* sub = app.get_subcommands().front();
    const auto config = build_config(o);
    commands.at(sub->get_name())(config);
    write_manifest(config);
    std::cerr << fmt::format("{}: outputs in {}\n", sub->get_name(), config.out.string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::Config);
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::Config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::Numerical);
    }
}
