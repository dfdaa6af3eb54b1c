#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/month.hpp"

namespace trendlens {

enum class CrimeClass { Reclassified, NonReclassified, Excluded };

std::string_view to_string(CrimeClass c);
std::optional<CrimeClass> parse_crime_class(std::string_view text);

/// Reserved category for raw descriptions no collapse rule matches.
inline constexpr std::string_view kUnmapped = "Unmapped";

struct IncidentRecord {
    Date occurred_on;
    std::string ucr_code;
    std::string raw_category;
    std::string category;  // collapsed
    CrimeClass crime_class = CrimeClass::Excluded;
    double lat = 0.0;
    double lon = 0.0;
};

struct CollapseRule {
    std::string pattern;  // lower-case substring
    std::string category;
};

/// Raw-description collapse rules plus the collapsed-category classification.
///
/// Text format, one `key = value` per line, `#` comments:
///
///     [settings]
///     min_count_threshold = 450
///     [collapse]              # raw substring pattern = collapsed name, first match wins
///     aggravated assault = assault
///     [classes]               # collapsed name = reclassified | nonreclassified | excluded
///     assault = nonreclassified
///     [exclude]               # collapsed names dropped regardless of count
///     misappropriation
class CategoryMap {
public:
    CategoryMap() = default;
    CategoryMap(std::vector<CollapseRule> rules, std::map<std::string, CrimeClass> classes,
                std::vector<std::string> exclusions, std::int64_t min_count_threshold);

    static CategoryMap parse(std::istream& in);
    static CategoryMap load(const std::filesystem::path& path);

    /// First matching rule wins; unmatched input yields `kUnmapped`.
    std::string collapse(std::string_view raw_category) const;

    /// Unmapped, unclassified and exclusion-listed categories are Excluded.
    CrimeClass classify(std::string_view category) const;

    bool is_excluded_by_list(std::string_view category) const;

    const std::vector<CollapseRule>& rules() const { return rules_; }
    const std::map<std::string, CrimeClass>& classes() const { return classes_; }
    const std::vector<std::string>& exclusions() const { return exclusions_; }
    std::int64_t min_count_threshold() const { return min_count_threshold_; }

    CategoryMap with_threshold(std::int64_t threshold) const;

private:
    void validate() const;

    std::vector<CollapseRule> rules_;
    std::map<std::string, CrimeClass> classes_;
    std::vector<std::string> exclusions_;
    std::int64_t min_count_threshold_ = 450;
};

/// Column names of the raw export.
struct CsvSchema {
    std::string date = "date";
    std::string code = "ucr_code";
    std::string description = "description";
    std::string lat = "latitude";
    std::string lon = "longitude";

    static CsvSchema from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct DateWindow {
    Date first{2006, 1, 1};
    Date last{2019, 12, 31};

    bool contains(const Date& d) const { return first <= d && d <= last; }
};

struct IngestReport {
    std::int64_t input_rows = 0;
    std::int64_t accepted = 0;
    std::int64_t rejected_corrupt = 0;
    std::int64_t dropped_out_of_window = 0;
    std::vector<std::pair<std::string, std::int64_t>> dropped_below_threshold;
    std::vector<std::string> dropped_excluded;
    std::int64_t dropped_excluded_rows = 0;

    std::int64_t dropped_below_threshold_rows() const;
    /// accepted + rejected + every drop; equals input_rows.
    std::int64_t accounted_rows() const;

    nlohmann::json to_json() const;
};

/// Parses `YYYY-MM-DD[...]` or `MM/DD/YYYY[...]`. Returns nullopt for text
/// that is not a date or names an impossible calendar day; throws
/// DataError for numeric forms that cannot be read without guessing
/// (two-digit years, day-first dashes, ...).
std::optional<Date> parse_date(std::string_view text);

struct ParsedRecords {
    std::vector<IncidentRecord> records;  // category not yet collapsed
    IngestReport report;
};

/// Reads a raw export. Incomplete or corrupt rows are counted and skipped;
/// rows outside `window` are counted and dropped.
ParsedRecords parse_csv(std::istream& in, const CsvSchema& schema, const DateWindow& window = {});
ParsedRecords parse_csv(const std::filesystem::path& path, const CsvSchema& schema,
                        const DateWindow& window = {});

std::string collapse_category(std::string_view raw_category, const CategoryMap& map);
CrimeClass classify(std::string_view category, const CategoryMap& map);

struct ThresholdResult {
    std::vector<IncidentRecord> records;
    std::vector<std::pair<std::string, std::int64_t>> dropped;
};

/// Categories whose total count is strictly below the map threshold are
/// reclassified as Excluded. Only categories still classified as
/// Reclassified/NonReclassified are counted.
ThresholdResult apply_threshold(std::vector<IncidentRecord> records, const CategoryMap& map);

struct IngestResult {
    std::vector<IncidentRecord> accepted;  // Reclassified or NonReclassified only
    IngestReport report;
};

/// parse -> collapse -> classify -> threshold.
IngestResult ingest(std::istream& in, const CsvSchema& schema, const CategoryMap& map,
                    const DateWindow& window = {});
IngestResult ingest(const std::filesystem::path& path, const CsvSchema& schema,
                    const CategoryMap& map, const DateWindow& window = {});

/// Normalized record store used between CLI commands.
void write_records(std::ostream& out, const std::vector<IncidentRecord>& records);
std::vector<IncidentRecord> read_records(std::istream& in);

}  // namespace trendlens
