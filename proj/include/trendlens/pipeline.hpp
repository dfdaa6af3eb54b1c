#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/ingest.hpp"
#include "trendlens/mosum.hpp"
#include "trendlens/segreg.hpp"
#include "trendlens/series.hpp"
#include "trendlens/stl.hpp"

namespace trendlens {

/// Relative paths are resolved against the directory of the config file.
struct AnalysisConfig {
    std::filesystem::path input;
    std::filesystem::path category_map;
    std::optional<std::filesystem::path> geometry;
    std::optional<std::filesystem::path> stations;
    std::filesystem::path out = "trendlens-out";
    std::uint64_t seed = 0;
    CsvSchema schema;
    DateWindow window;
    EpochCut prop47 = prop47_cut();
    EpochCut expo = expo_cut();
    double alpha = 0.05;
    StlConfig stl;
    MosumConfig mosum;
    SegregConfig segreg;
    int stability_runs = 20;

    static AnalysisConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
    static AnalysisConfig load(const std::filesystem::path& path);

    YearMonth first_month() const { return YearMonth::of(window.first); }
    YearMonth last_month() const { return YearMonth::of(window.last); }

    /// Throws ConfigError on missing inputs or invalid module settings.
    void validate() const;

    /// Output directory and file locations are left out so the hash tracks content only.
    nlohmann::json to_json() const;
    std::uint64_t hash() const;
};

/// Seed precedence: explicit flag, config file, TRENDLENS_SEED, 0.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> from_config);

std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t fnv1a_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

/// Accepted records, reusing the cached store under out/ingest when its source hash matches.
std::vector<IncidentRecord> load_records(const AnalysisConfig& config);

IngestReport cmd_ingest(const AnalysisConfig& config);
void cmd_citywide(const AnalysisConfig& config);
void cmd_neighborhoods(const AnalysisConfig& config);
void cmd_stations(const AnalysisConfig& config);
void cmd_changepoint(const AnalysisConfig& config);
void cmd_segreg(const AnalysisConfig& config);
void cmd_report_all(const AnalysisConfig& config);

/// Lists every file under out (except the manifest itself) with size and FNV-1a hash.
void write_manifest(const AnalysisConfig& config);

}  // namespace trendlens
