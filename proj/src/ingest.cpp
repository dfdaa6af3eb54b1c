#include "trendlens/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "trendlens/csv.hpp"
#include "trendlens/error.hpp"

namespace trendlens {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Collapses internal whitespace runs so "aggravated  assault" still matches.
std::string normalize_description(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : trim(s)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out.push_back(' ');
        space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

int to_int(std::string_view s) {
    int v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Splits the leading date token off any trailing time component.
std::string_view date_token(std::string_view s) {
    auto end = s.find_first_of(" T");
    return end == std::string_view::npos ? s : s.substr(0, end);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (trim(header[i]) == name) return i;
    }
    throw ConfigError(fmt::format("schema column '{}' not found in CSV header", name));
}

}  // namespace

std::string_view to_string(CrimeClass c) {
    switch (c) {
        case CrimeClass::Reclassified: return "reclassified";
        case CrimeClass::NonReclassified: return "nonreclassified";
        case CrimeClass::Excluded: return "excluded";
    }
    return "excluded";
}

std::optional<CrimeClass> parse_crime_class(std::string_view text) {
    const auto t = lower(trim(text));
    if (t == "reclassified" || t == "prop47") return CrimeClass::Reclassified;
    if (t == "nonreclassified" || t == "non-reclassified" || t == "nonprop47") return CrimeClass::NonReclassified;
    if (t == "excluded") return CrimeClass::Excluded;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// CategoryMap

CategoryMap::CategoryMap(std::vector<CollapseRule> rules, std::map<std::string, CrimeClass> classes,
                         std::vector<std::string> exclusions, std::int64_t min_count_threshold)
    : rules_(std::move(rules)),
      classes_(std::move(classes)),
      exclusions_(std::move(exclusions)),
      min_count_threshold_(min_count_threshold) {
    for (auto& r : rules_) r.pattern = normalize_description(r.pattern);
    validate();
}

void CategoryMap::validate() const {
    if (min_count_threshold_ < 0) throw ConfigError("min_count_threshold must be >= 0");
    std::set<std::string> produced;
    for (const auto& r : rules_) {
        if (r.pattern.empty()) throw ConfigError("collapse rule with empty pattern");
        produced.insert(r.category);
    }
    for (const auto& [name, cls] : classes_) {
        if (!produced.count(name)) {
            throw ConfigError(fmt::format("classified category '{}' is not produced by any collapse rule", name));
        }
    }
}

CategoryMap CategoryMap::parse(std::istream& in) {
    std::vector<CollapseRule> rules;
    std::map<std::string, CrimeClass> classes;
    std::vector<std::string> exclusions;
    std::int64_t threshold = 450;

    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto text = trim(line);
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') throw ConfigError(fmt::format("category map line {}: bad section", line_no));
            section = lower(trim(text.substr(1, text.size() - 2)));
            continue;
        }
        auto eq = text.find('=');
        auto key = trim(text.substr(0, eq));
        auto value = eq == std::string_view::npos ? std::string_view{} : trim(text.substr(eq + 1));
        if (section == "exclude") {
            exclusions.push_back(lower(key));
            continue;
        }
        if (eq == std::string_view::npos || key.empty() || value.empty()) {
            throw ConfigError(fmt::format("category map line {}: expected 'key = value'", line_no));
        }
        if (section == "settings") {
            if (key != "min_count_threshold" || !all_digits(value)) {
                throw ConfigError(fmt::format("category map line {}: unknown setting", line_no));
            }
            threshold = std::stoll(std::string(value));
        } else if (section == "collapse") {
            rules.push_back({std::string(key), lower(value)});
        } else if (section == "classes") {
            auto cls = parse_crime_class(value);
            if (!cls) throw ConfigError(fmt::format("category map line {}: unknown class '{}'", line_no, value));
            classes[lower(key)] = *cls;
        } else {
            throw ConfigError(fmt::format("category map line {}: entry outside a known section", line_no));
        }
    }
    return CategoryMap(std::move(rules), std::move(classes), std::move(exclusions), threshold);
}

CategoryMap CategoryMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open category map '{}'", path.string()));
    return parse(in);
}

std::string CategoryMap::collapse(std::string_view raw_category) const {
    const auto needle = normalize_description(raw_category);
    for (const auto& r : rules_) {
        if (needle.find(r.pattern) != std::string::npos) return r.category;
    }
    return std::string(kUnmapped);
}

bool CategoryMap::is_excluded_by_list(std::string_view category) const {
    const auto c = lower(category);
    return std::find(exclusions_.begin(), exclusions_.end(), c) != exclusions_.end();
}

CrimeClass CategoryMap::classify(std::string_view category) const {
    if (category == kUnmapped || is_excluded_by_list(category)) return CrimeClass::Excluded;
    auto it = classes_.find(lower(category));
    return it == classes_.end() ? CrimeClass::Excluded : it->second;
}

CategoryMap CategoryMap::with_threshold(std::int64_t threshold) const {
    return CategoryMap(rules_, classes_, exclusions_, threshold);
}

// ---------------------------------------------------------------------------
// Schema and report

CsvSchema CsvSchema::from_json(const nlohmann::json& j) {
    CsvSchema s;
    s.date = j.value("date", s.date);
    s.code = j.value("code", s.code);
    s.description = j.value("description", s.description);
    s.lat = j.value("lat", s.lat);
    s.lon = j.value("lon", s.lon);
    return s;
}

nlohmann::json CsvSchema::to_json() const {
    return {{"date", date}, {"code", code}, {"description", description}, {"lat", lat}, {"lon", lon}};
}

std::int64_t IngestReport::dropped_below_threshold_rows() const {
    std::int64_t n = 0;
    for (const auto& [name, count] : dropped_below_threshold) n += count;
    return n;
}

std::int64_t IngestReport::accounted_rows() const {
    return accepted + rejected_corrupt + dropped_out_of_window + dropped_below_threshold_rows() +
           dropped_excluded_rows;
}

nlohmann::json IngestReport::to_json() const {
    nlohmann::json below = nlohmann::json::array();
    for (const auto& [name, count] : dropped_below_threshold) below.push_back({{"category", name}, {"count", count}});
    return {
        {"input_rows", input_rows},
        {"accepted", accepted},
        {"rejected_corrupt", rejected_corrupt},
        {"dropped_out_of_window", dropped_out_of_window},
        {"dropped_below_threshold", below},
        {"dropped_excluded", dropped_excluded},
        {"dropped_excluded_rows", dropped_excluded_rows},
    };
}

// ---------------------------------------------------------------------------
// Parsing

std::optional<Date> parse_date(std::string_view text) {
    const auto token = date_token(trim(text));
    if (token.empty()) return std::nullopt;

    const char sep = token.find('/') != std::string_view::npos ? '/' : '-';
    const auto parts = split(token, sep);
    if (parts.size() != 3 || !std::all_of(parts.begin(), parts.end(), all_digits)) return std::nullopt;

    Date d;
    if (sep == '-' && parts[0].size() == 4 && parts[1].size() <= 2 && parts[2].size() <= 2) {
        d = {to_int(parts[0]), to_int(parts[1]), to_int(parts[2])};
    } else if (sep == '/' && parts[0].size() <= 2 && parts[1].size() <= 2 && parts[2].size() == 4) {
        d = {to_int(parts[2]), to_int(parts[0]), to_int(parts[1])};
    } else {
        throw DataError(fmt::format("ambiguous date '{}': expected YYYY-MM-DD or MM/DD/YYYY", token));
    }
    if (!is_valid_date(d)) return std::nullopt;
    return d;
}

ParsedRecords parse_csv(std::istream& in, const CsvSchema& schema, const DateWindow& window) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw ConfigError("CSV input is empty; a header row is required");
    if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0) header->front().erase(0, 3);

    const auto i_date = require_column(*header, schema.date);
    const auto i_code = require_column(*header, schema.code);
    const auto i_desc = require_column(*header, schema.description);
    const auto i_lat = require_column(*header, schema.lat);
    const auto i_lon = require_column(*header, schema.lon);

    ParsedRecords out;
    auto& rep = out.report;
    while (auto fields = reader.next()) {
        ++rep.input_rows;
        if (reader.malformed() || fields->size() != header->size()) {
            ++rep.rejected_corrupt;
            continue;
        }
        const auto& f = *fields;
        const auto date = parse_date(f[i_date]);
        const auto lat = parse_double(f[i_lat]);
        const auto lon = parse_double(f[i_lon]);
        const auto desc = trim(f[i_desc]);
        if (!date || !lat || !lon || desc.empty() || std::abs(*lat) > 90.0 || std::abs(*lon) > 180.0) {
            ++rep.rejected_corrupt;
            continue;
        }
        if (!window.contains(*date)) {
            ++rep.dropped_out_of_window;
            continue;
        }
        IncidentRecord r;
        r.occurred_on = *date;
        r.ucr_code = std::string(trim(f[i_code]));
        r.raw_category = std::string(desc);
        r.lat = *lat;
        r.lon = *lon;
        out.records.push_back(std::move(r));
    }
    rep.accepted = static_cast<std::int64_t>(out.records.size());
    return out;
}

ParsedRecords parse_csv(const std::filesystem::path& path, const CsvSchema& schema, const DateWindow& window) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot open input '{}'", path.string()));
    return parse_csv(in, schema, window);
}

std::string collapse_category(std::string_view raw_category, const CategoryMap& map) {
    return map.collapse(raw_category);
}

CrimeClass classify(std::string_view category, const CategoryMap& map) { return map.classify(category); }

ThresholdResult apply_threshold(std::vector<IncidentRecord> records, const CategoryMap& map) {
    std::map<std::string, std::int64_t> counts;
    for (const auto& r : records) {
        if (r.crime_class != CrimeClass::Excluded) ++counts[r.category];
    }
    ThresholdResult out;
    std::set<std::string> below;
    for (const auto& [name, count] : counts) {
        if (count < map.min_count_threshold()) {
            out.dropped.emplace_back(name, count);
            below.insert(name);
        }
    }
    for (auto& r : records) {
        if (below.count(r.category)) r.crime_class = CrimeClass::Excluded;
    }
    out.records = std::move(records);
    return out;
}

IngestResult ingest(std::istream& in, const CsvSchema& schema, const CategoryMap& map, const DateWindow& window) {
    auto parsed = parse_csv(in, schema, window);
    for (auto& r : parsed.records) {
        r.category = map.collapse(r.raw_category);
        r.crime_class = map.classify(r.category);
    }

    IngestResult out;
    out.report = parsed.report;
    std::set<std::string> excluded;
    for (const auto& r : parsed.records) {
        if (r.crime_class == CrimeClass::Excluded) excluded.insert(r.category);
    }

    auto thresholded = apply_threshold(std::move(parsed.records), map);
    std::set<std::string> below;
    for (const auto& [name, count] : thresholded.dropped) below.insert(name);

    std::int64_t excluded_rows = 0;
    for (auto& r : thresholded.records) {
        if (r.crime_class != CrimeClass::Excluded) {
            out.accepted.push_back(std::move(r));
        } else if (!below.count(r.category)) {
            ++excluded_rows;
        }
    }
    out.report.accepted = static_cast<std::int64_t>(out.accepted.size());
    out.report.dropped_below_threshold = std::move(thresholded.dropped);
    out.report.dropped_excluded.assign(excluded.begin(), excluded.end());
    out.report.dropped_excluded_rows = excluded_rows;
    return out;
}

IngestResult ingest(const std::filesystem::path& path, const CsvSchema& schema, const CategoryMap& map,
                    const DateWindow& window) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot open input '{}'", path.string()));
    return ingest(in, schema, map, window);
}

// ---------------------------------------------------------------------------
// Record store

void write_records(std::ostream& out, const std::vector<IncidentRecord>& records) {
    out << "date,ucr_code,raw_category,category,class,lat,lon\n";
    for (const auto& r : records) {
        out << csv::row({fmt::format("{:04d}-{:02d}-{:02d}", r.occurred_on.year, r.occurred_on.month,
                                     r.occurred_on.day),
                         r.ucr_code, r.raw_category, r.category, std::string(to_string(r.crime_class)),
                         fmt::format("{}", r.lat), fmt::format("{}", r.lon)});
    }
}

std::vector<IncidentRecord> read_records(std::istream& in) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header || header->size() != 7) throw DataError("record store has an unexpected header");
    std::vector<IncidentRecord> out;
    while (auto f = reader.next()) {
        if (f->size() != 7) throw DataError("record store row has the wrong field count");
        auto date = parse_date((*f)[0]);
        auto cls = parse_crime_class((*f)[4]);
        auto lat = parse_double((*f)[5]);
        auto lon = parse_double((*f)[6]);
        if (!date || !cls || !lat || !lon) throw DataError("record store row is corrupt");
        out.push_back({*date, (*f)[1], (*f)[2], (*f)[3], *cls, *lat, *lon});
    }
    return out;
}

}  // namespace trendlens
