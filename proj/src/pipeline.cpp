#include "trendlens/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "trendlens/csv.hpp"
#include "trendlens/error.hpp"
#include "trendlens/geo.hpp"
#include "trendlens/random.hpp"
#include "trendlens/svg.hpp"
#include "trendlens/welch.hpp"

namespace trendlens {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kHistogramBin = 10.0;
constexpr double kStationMinMean = 1.5;
constexpr const char* kManifest = "manifest.json";

struct ClassGroup {
    std::string name;
    std::function<bool(const IncidentRecord&)> keep;
};

const ClassGroup kAll{"all", nullptr};
const ClassGroup kProp47{"prop47", [](const IncidentRecord& r) { return r.crime_class == CrimeClass::Reclassified; }};
const ClassGroup kNonProp47{"nonprop47",
                            [](const IncidentRecord& r) { return r.crime_class == CrimeClass::NonReclassified; }};

std::string slug(std::string_view name) {
    std::string out;
    for (char c : name) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            out += static_cast<char>(std::tolower(u));
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out.empty() ? "unnamed" : out;
}

std::string date_string(const Date& d) { return fmt::format("{:04d}-{:02d}-{:02d}", d.year, d.month, d.day); }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read {}", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_artifact(const AnalysisConfig& config, const fs::path& rel, const std::string& content) {
    const auto path = config.out / rel;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw ConfigError(fmt::format("cannot create {}: {}", path.parent_path().string(), ec.message()));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
    out << content;
    if (!out) throw ConfigError(fmt::format("write failed for {}", path.string()));
}

void write_json(const AnalysisConfig& config, const fs::path& rel, const json& doc) {
    write_artifact(config, rel, doc.dump(2) + "\n");
}

// config parsing

fs::path resolve(const json& v, const fs::path& base) {
    fs::path p(v.get<std::string>());
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

YearMonth month_field(const json& v, std::string_view what) {
    const auto m = YearMonth::parse(v.get<std::string>());
    if (!m) throw ConfigError(fmt::format("{}: expected YYYY-MM, got '{}'", what, v.get<std::string>()));
    return *m;
}

Date date_field(const json& v, std::string_view what) {
    const auto d = parse_date(v.get<std::string>());
    if (!d) throw ConfigError(fmt::format("{}: expected YYYY-MM-DD, got '{}'", what, v.get<std::string>()));
    return *d;
}

EpochCut cut_field(const json& v, EpochCut fallback, std::string_view what) {
    if (v.is_string()) return {month_field(v, what), fallback.owner};
    EpochCut cut = fallback;
    if (v.contains("month")) cut.month = month_field(v.at("month"), what);
    if (v.contains("owner")) {
        const auto owner = v.at("owner").get<std::string>();
        if (owner == "later") {
            cut.owner = BoundaryOwner::Later;
        } else if (owner == "earlier") {
            cut.owner = BoundaryOwner::Earlier;
        } else {
            throw ConfigError(fmt::format("{}: owner must be 'later' or 'earlier'", what));
        }
    }
    return cut;
}

std::string_view owner_name(BoundaryOwner o) { return o == BoundaryOwner::Later ? "later" : "earlier"; }

VarianceRule variance_rule_field(const std::string& name) {
    if (name == "average") return VarianceRule::Average;
    if (name == "min") return VarianceRule::Min;
    if (name == "max") return VarianceRule::Max;
    throw ConfigError(fmt::format("mosum.variance_rule: unknown rule '{}'", name));
}

std::string_view variance_rule_name(VarianceRule r) {
    switch (r) {
        case VarianceRule::Average: return "average";
        case VarianceRule::Min: return "min";
        case VarianceRule::Max: return "max";
    }
    return "average";
}

void read_stl(const json& j, StlConfig& stl) {
    if (j.contains("period")) stl.period = j.at("period").get<int>();
    if (j.contains("seasonal_window")) {
        const auto& w = j.at("seasonal_window");
        if (w.is_string()) {
            if (w.get<std::string>() != "periodic") throw ConfigError("stl.seasonal_window: expected 'periodic' or int");
            stl.seasonal_window = SeasonalWindow::periodic();
        } else {
            stl.seasonal_window = SeasonalWindow::span(w.get<int>());
        }
    }
    if (j.contains("trend_window") && !j.at("trend_window").is_null()) {
        stl.trend_window = j.at("trend_window").get<int>();
    }
    if (j.contains("lowpass_window") && !j.at("lowpass_window").is_null()) {
        stl.lowpass_window = j.at("lowpass_window").get<int>();
    }
    if (j.contains("inner_iterations")) stl.inner_iterations = j.at("inner_iterations").get<int>();
    if (j.contains("outer_iterations")) stl.outer_iterations = j.at("outer_iterations").get<int>();
}

void read_mosum(const json& j, MosumConfig& m) {
    if (j.contains("bandwidth")) m.bandwidth = j.at("bandwidth").get<int>();
    if (j.contains("eta")) m.eta = j.at("eta").get<double>();
    if (j.contains("epsilon")) m.epsilon = j.at("epsilon").get<double>();
    if (j.contains("alpha")) m.alpha = j.at("alpha").get<double>();
    if (j.contains("variance_rule")) m.variance_rule = variance_rule_field(j.at("variance_rule").get<std::string>());
    if (j.contains("bootstrap_replicates")) m.bootstrap_replicates = j.at("bootstrap_replicates").get<int>();
}

void read_segreg(const json& j, SegregConfig& s) {
    if (j.contains("n_breakpoints")) s.n_breakpoints = j.at("n_breakpoints").get<int>();
    if (j.contains("initial")) s.initial = j.at("initial").get<std::vector<double>>();
    if (j.contains("max_iterations")) s.max_iterations = j.at("max_iterations").get<int>();
    if (j.contains("tolerance")) s.tolerance = j.at("tolerance").get<double>();
    if (j.contains("restarts")) s.restarts = j.at("restarts").get<int>();
    if (j.contains("jitter")) s.jitter = j.at("jitter").get<double>();
    if (j.contains("profile_seeds")) s.profile_seeds = j.at("profile_seeds").get<int>();
}

// series helpers

MonthlySeries class_series(const std::vector<IncidentRecord>& records, const ClassGroup& group,
                           const AnalysisConfig& config) {
    return aggregate_monthly(records, group.keep, config.first_month(), config.last_month(), group.name);
}

std::size_t class_count(const std::vector<IncidentRecord>& records, const ClassGroup& group) {
    if (!group.keep) return records.size();
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), group.keep));
}

std::vector<std::pair<double, std::string>> year_ticks(YearMonth start, std::size_t n) {
    std::vector<std::pair<double, std::string>> ticks;
    for (std::size_t i = 0; i < n; ++i) {
        const auto m = start + static_cast<std::int64_t>(i);
        if (m.month() == 1 && m.year() % 2 == 0) ticks.emplace_back(static_cast<double>(i), std::to_string(m.year()));
    }
    return ticks;
}

std::vector<double> positions(std::size_t n, double offset = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) + offset;
    return x;
}

std::string series_table(const std::vector<MonthlySeries>& columns) {
    std::vector<std::string> header{"month"};
    for (const auto& c : columns) header.push_back(c.label());
    std::string out = csv::row(header);
    for (std::size_t i = 0; i < columns.front().size(); ++i) {
        std::vector<std::string> row{columns.front().month_at(i).to_string()};
        for (const auto& c : columns) row.push_back(fmt::format("{}", c[i]));
        out += csv::row(row);
    }
    return out;
}

// Welch rows

struct WelchRow {
    std::vector<std::string> keys;
    WelchSummary before;
    WelchSummary after;
    std::optional<WelchResult> result;
    std::string note;
};

WelchRow welch_row(std::vector<std::string> keys, const MonthlySeries& before, const MonthlySeries& after,
                   double alpha, bool insufficient) {
    WelchRow row{std::move(keys), WelchSummary::of(before), WelchSummary::of(after), std::nullopt, {}};
    if (insufficient) {
        row.note = "insufficient data";
        return row;
    }
    try {
        row.result = welch_test(row.before, row.after, alpha, observed_direction(row.before, row.after));
    } catch (const DataError& e) {
        row.note = e.what();
    }
    return row;
}

std::string welch_table(const std::vector<std::string>& key_names, const std::vector<WelchRow>& rows) {
    auto header = key_names;
    for (const auto& h : WelchResult::csv_header()) header.push_back(h);
    header.emplace_back("note");
    std::string out = csv::row(header);
    for (const auto& r : rows) {
        auto fields = r.keys;
        if (r.result) {
            for (auto& f : r.result->csv_fields()) fields.push_back(std::move(f));
        } else {
            fields.push_back(fmt::format("{:.2f}", r.before.mean));
            fields.push_back(fmt::format("{:.2f}", r.before.sd));
            fields.push_back(fmt::format("{}", r.before.n));
            fields.push_back(fmt::format("{:.2f}", r.after.mean));
            fields.push_back(fmt::format("{:.2f}", r.after.sd));
            fields.push_back(fmt::format("{}", r.after.n));
            for (int k = 0; k < 4; ++k) fields.emplace_back("N/A");
        }
        fields.push_back(r.note);
        out += csv::row(fields);
    }
    return out;
}

json welch_json(const std::vector<std::string>& key_names, const std::vector<WelchRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        json j = r.result ? r.result->to_json() : json{{"before", {{"mean", r.before.mean}, {"sd", r.before.sd},
                                                                   {"n", r.before.n}}},
                                                       {"after", {{"mean", r.after.mean}, {"sd", r.after.sd},
                                                                  {"n", r.after.n}}},
                                                       {"status", "N/A"}};
        for (std::size_t k = 0; k < key_names.size(); ++k) j[key_names[k]] = r.keys[k];
        if (!r.note.empty()) j["note"] = r.note;
        arr.push_back(std::move(j));
    }
    return arr;
}

// histograms

struct Histogram {
    double origin = 0.0;
    std::vector<int> before;
    std::vector<int> after;
};

Histogram histogram(const std::vector<double>& before, const std::vector<double>& after) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto* v : {&before, &after}) {
        for (double x : *v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    Histogram h;
    if (!std::isfinite(lo)) return h;
    h.origin = std::floor(lo / kHistogramBin) * kHistogramBin;
    const auto bins = static_cast<std::size_t>(std::floor((hi - h.origin) / kHistogramBin)) + 1;
    h.before.assign(bins, 0);
    h.after.assign(bins, 0);
    const auto fill = [&](const std::vector<double>& v, std::vector<int>& counts) {
        for (double x : v) ++counts[static_cast<std::size_t>(std::floor((x - h.origin) / kHistogramBin))];
    };
    fill(before, h.before);
    fill(after, h.after);
    return h;
}

std::string histogram_csv(const Histogram& h) {
    std::string out = "bin_start,bin_end,before,after\n";
    for (std::size_t b = 0; b < h.before.size(); ++b) {
        const double lo = h.origin + kHistogramBin * static_cast<double>(b);
        out += fmt::format("{},{},{},{}\n", lo, lo + kHistogramBin, h.before[b], h.after[b]);
    }
    return out;
}

std::string histogram_svg(const Histogram& h, const std::string& title) {
    svg::Panel p;
    p.title = title;
    for (std::size_t b = 0; b < h.before.size(); ++b) {
        const double lo = h.origin + kHistogramBin * static_cast<double>(b);
        p.bars.push_back({lo, lo + kHistogramBin, static_cast<double>(h.before[b]), "#1f77b4", 0.5});
        p.bars.push_back({lo, lo + kHistogramBin, static_cast<double>(h.after[b]), "#ff7f0e", 0.5});
    }
    return svg::render({p});
}

std::string stl_svg(const MonthlySeries& y, const Decomposition& d, const std::string& title) {
    const auto x = positions(y.size());
    const auto ticks = year_ticks(y.start(), y.size());
    std::vector<svg::Panel> panels(4);
    const std::vector<std::pair<std::string, const std::vector<double>*>> parts{
        {title + ": data", &y.values()},
        {"trend", &d.trend.values()},
        {"seasonal", &d.seasonal.values()},
        {"remainder", &d.remainder.values()}};
    for (std::size_t k = 0; k < parts.size(); ++k) {
        panels[k].title = parts[k].first;
        panels[k].lines.push_back({x, *parts[k].second, "#1f77b4", false});
        panels[k].x_ticks = ticks;
    }
    return svg::render(panels, 800.0, 180.0);
}

std::string source_hash(const AnalysisConfig& config) {
    const json key{{"input", hex64(fnv1a_file(config.input))},
                   {"category_map", hex64(fnv1a_file(config.category_map))},
                   {"schema", config.schema.to_json()},
                   {"window", {date_string(config.window.first), date_string(config.window.last)}}};
    return hex64(fnv1a(key.dump()));
}

IngestResult run_ingest(const AnalysisConfig& config) {
    const auto map = CategoryMap::load(config.category_map);
    auto result = ingest(config.input, config.schema, map, config.window);
    std::ostringstream records;
    write_records(records, result.accepted);
    write_artifact(config, "ingest/records.csv", records.str());
    auto report = result.report.to_json();
    report["source_hash"] = source_hash(config);
    report["input"] = config.input.filename().string();
    write_json(config, "ingest/report.json", report);
    return result;
}

}  // namespace

// public API

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a_file(const fs::path& path) { return fnv1a(read_file(path)); }

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> from_config) {
    if (flag) return *flag;
    if (from_config) return *from_config;
    if (const char* env = std::getenv("TRENDLENS_SEED"); env && *env) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (*end != '\0') throw ConfigError(fmt::format("TRENDLENS_SEED is not an unsigned integer: '{}'", env));
        return v;
    }
    return 0;
}

AnalysisConfig AnalysisConfig::from_json(const json& doc, const fs::path& base_dir) {
    AnalysisConfig c;
    try {
        if (!doc.is_object()) throw ConfigError("config: top level must be an object");
        if (doc.contains("input")) c.input = resolve(doc.at("input"), base_dir);
        if (doc.contains("category_map")) c.category_map = resolve(doc.at("category_map"), base_dir);
        if (doc.contains("geometry") && !doc.at("geometry").is_null()) {
            c.geometry = resolve(doc.at("geometry"), base_dir);
        }
        if (doc.contains("stations") && !doc.at("stations").is_null()) {
            c.stations = resolve(doc.at("stations"), base_dir);
        }
        if (doc.contains("out")) c.out = resolve(doc.at("out"), base_dir);
        std::optional<std::uint64_t> seed;
        if (doc.contains("seed") && !doc.at("seed").is_null()) seed = doc.at("seed").get<std::uint64_t>();
        c.seed = resolve_seed(std::nullopt, seed);
        if (doc.contains("schema")) c.schema = CsvSchema::from_json(doc.at("schema"));
        if (doc.contains("window")) {
            const auto& w = doc.at("window");
            if (w.contains("first")) c.window.first = date_field(w.at("first"), "window.first");
            if (w.contains("last")) c.window.last = date_field(w.at("last"), "window.last");
        }
        if (doc.contains("epochs")) {
            const auto& e = doc.at("epochs");
            if (e.contains("prop47")) c.prop47 = cut_field(e.at("prop47"), c.prop47, "epochs.prop47");
            if (e.contains("expo")) c.expo = cut_field(e.at("expo"), c.expo, "epochs.expo");
        }
        if (doc.contains("alpha")) c.alpha = doc.at("alpha").get<double>();
        c.mosum.alpha = c.alpha;
        if (doc.contains("stl")) read_stl(doc.at("stl"), c.stl);
        if (doc.contains("mosum")) read_mosum(doc.at("mosum"), c.mosum);
        if (doc.contains("segreg")) read_segreg(doc.at("segreg"), c.segreg);
        if (doc.contains("stability_runs")) c.stability_runs = doc.at("stability_runs").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    }
    c.mosum.seed = c.seed;
    c.segreg.seed = c.seed;
    return c;
}

AnalysisConfig AnalysisConfig::load(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return from_json(doc, path.parent_path());
}

void AnalysisConfig::validate() const {
    const auto require = [](const fs::path& p, std::string_view what) {
        if (p.empty()) throw ConfigError(fmt::format("{} is not set", what));
        if (!fs::is_regular_file(p)) throw ConfigError(fmt::format("{} not found: {}", what, p.string()));
    };
    require(input, "input");
    require(category_map, "category map");
    if (geometry) require(*geometry, "geometry");
    if (stations) require(*stations, "stations");
    if (out.empty()) throw ConfigError("output directory is not set");
    if (!is_valid_date(window.first) || !is_valid_date(window.last) || window.last < window.first) {
        throw ConfigError("window: first must be a valid date on or before last");
    }
    const auto months = static_cast<std::size_t>(last_month() - first_month() + 1);
    for (const auto* cut : {&prop47, &expo}) {
        if (cut->first_after() <= first_month() || cut->first_after() > last_month()) {
            throw ConfigError(fmt::format("epoch cut {} leaves an empty side", cut->month.to_string()));
        }
    }
    if (!(prop47.first_after() < expo.first_after())) throw ConfigError("epochs: prop47 cut must precede expo cut");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
    if (stability_runs < 0) throw ConfigError("stability_runs must be >= 0");
    stl.validate();
    mosum.validate(months - 1);
    segreg.validate(months);
}

json AnalysisConfig::to_json() const {
    json stl_j{{"period", stl.period},
               {"seasonal_window", stl.seasonal_window.is_periodic() ? json("periodic")
                                                                     : json(stl.seasonal_window.cycles())},
               {"trend_window", stl.resolved_trend_window()},
               {"lowpass_window", stl.resolved_lowpass_window()},
               {"inner_iterations", stl.inner_iterations},
               {"outer_iterations", stl.outer_iterations}};
    auto mosum_j = mosum.to_json();
    mosum_j["variance_rule"] = variance_rule_name(mosum.variance_rule);
    return {{"seed", seed},
            {"schema", schema.to_json()},
            {"window", {{"first", date_string(window.first)}, {"last", date_string(window.last)}}},
            {"epochs",
             {{"prop47", {{"month", prop47.month.to_string()}, {"owner", owner_name(prop47.owner)}}},
              {"expo", {{"month", expo.month.to_string()}, {"owner", owner_name(expo.owner)}}}}},
            {"alpha", alpha},
            {"stl", stl_j},
            {"mosum", mosum_j},
            {"segreg", segreg.to_json()},
            {"stability_runs", stability_runs},
            {"geometry", geometry.has_value()},
            {"stations", stations.has_value()}};
}

std::uint64_t AnalysisConfig::hash() const { return fnv1a(to_json().dump()); }

std::vector<IncidentRecord> load_records(const AnalysisConfig& config) {
    const auto report_path = config.out / "ingest" / "report.json";
    const auto records_path = config.out / "ingest" / "records.csv";
    if (fs::is_regular_file(report_path) && fs::is_regular_file(records_path)) {
        try {
            const auto report = json::parse(read_file(report_path));
            if (report.value("source_hash", std::string{}) == source_hash(config)) {
                std::ifstream in(records_path, std::ios::binary);
                return read_records(in);
            }
        } catch (const json::exception&) {
            // stale or damaged cache; rebuild below
        }
    }
    return run_ingest(config).accepted;
}

IngestReport cmd_ingest(const AnalysisConfig& config) { return run_ingest(config).report; }

void cmd_citywide(const AnalysisConfig& config) {
    const auto records = load_records(config);
    const EpochSplit cut{{config.prop47}};
    std::vector<MonthlySeries> columns;
    std::vector<WelchRow> rows;
    for (const auto* group : {&kProp47, &kNonProp47}) {
        const auto series = class_series(records, *group, config);
        columns.push_back(series);
        const auto parts = split(series, cut);
        rows.push_back(welch_row({group->name}, parts[0], parts[1], config.alpha, class_count(records, *group) == 0));
        const auto h = histogram(parts[0].values(), parts[1].values());
        write_artifact(config, fmt::format("citywide/histogram_{}.csv", group->name), histogram_csv(h));
        write_artifact(config, fmt::format("citywide/histogram_{}.svg", group->name),
                       histogram_svg(h, fmt::format("{}: monthly counts before (blue) and after (orange) {}",
                                                    group->name, config.prop47.month.to_string())));
    }
    columns.push_back(class_series(records, kAll, config));
    write_artifact(config, "citywide/series.csv", series_table(columns));
    write_artifact(config, "citywide/welch.csv", welch_table({"class"}, rows));
    write_json(config, "citywide/welch.json", welch_json({"class"}, rows));
}

void cmd_neighborhoods(const AnalysisConfig& config) {
    if (!config.geometry) throw ConfigError("neighborhoods: no geometry file configured");
    const auto set = NeighborhoodSet::load(*config.geometry);
    const auto records = load_records(config);
    std::map<std::string, std::vector<IncidentRecord>> by_name;
    for (const auto& r : records) {
        if (auto name = assign_neighborhood(r, set)) by_name[*name].push_back(r);
    }
    const EpochSplit cut{{config.prop47}};
    std::vector<WelchRow> rows;
    json stl_notes = json::object();
    for (const auto& poly : set.polygons()) {
        const auto& subset = by_name[poly.name];
        for (const auto* group : {&kProp47, &kNonProp47}) {
            const auto series = class_series(subset, *group, config);
            const auto parts = split(series, cut);
            rows.push_back(welch_row({poly.name, group->name}, parts[0], parts[1], config.alpha,
                                     class_count(subset, *group) == 0));
            const auto stem = fmt::format("neighborhoods/stl_{}_{}", slug(poly.name), group->name);
            try {
                const auto d = stl_decompose(series, config.stl);
                std::ostringstream buf;
                d.write_csv(buf);
                write_artifact(config, stem + ".csv", buf.str());
                write_artifact(config, stem + ".svg", stl_svg(series, d, fmt::format("{} {}", poly.name, group->name)));
            } catch (const NumericalError& e) {
                stl_notes[fmt::format("{}/{}", poly.name, group->name)] = e.what();
            }
        }
    }
    write_artifact(config, "neighborhoods/welch.csv", welch_table({"neighborhood", "class"}, rows));
    json doc{{"rows", welch_json({"neighborhood", "class"}, rows)}, {"stl_failures", stl_notes}};
    write_json(config, "neighborhoods/welch.json", doc);
}

void cmd_stations(const AnalysisConfig& config) {
    if (!config.stations) throw ConfigError("stations: no station file configured");
    const auto stations = load_stations(*config.stations);
    const auto records = load_records(config);
    const EpochSplit both{{config.prop47, config.expo}};
    const EpochSplit expo_only{{config.expo}};
    std::vector<WelchRow> rows;
    for (const auto& station : stations) {
        const auto subset = within_radius(records, station);
        std::vector<MonthlySeries> columns;
        for (const auto* group : {&kAll, &kProp47, &kNonProp47}) {
            const auto series = class_series(subset, *group, config);
            columns.push_back(series);
            const auto three = split(series, both);
            const auto two = split(series, expo_only);
            const std::vector<std::tuple<std::string, const MonthlySeries*, const MonthlySeries*>> pairs{
                {"before_after_expo", &two[0], &two[1]},
                {"before_after_prop47_pre_expo", &three[0], &three[1]},
                {"between_after_expo", &three[1], &three[2]}};
            for (const auto& [label, before, after] : pairs) {
                const double top = std::max(summarize(*before).mean, summarize(*after).mean);
                rows.push_back(
                    welch_row({station.name, group->name, label}, *before, *after, config.alpha, top < kStationMinMean));
            }
        }
        write_artifact(config, fmt::format("stations/series_{}.csv", slug(station.name)), series_table(columns));
    }
    write_artifact(config, "stations/welch.csv", welch_table({"station", "class", "comparison"}, rows));
    write_json(config, "stations/welch.json", welch_json({"station", "class", "comparison"}, rows));
}

void cmd_changepoint(const AnalysisConfig& config) {
    const auto records = load_records(config);
    for (const auto* group : {&kProp47, &kNonProp47}) {
        const auto series = class_series(records, *group, config);
        const auto d = stl_decompose(series, config.stl);
        const auto s = slope(d.trend);
        const auto report = detect(s, config.mosum);

        json doc = report.to_json();
        doc["class"] = group->name;
        doc["trend_window"] = config.stl.resolved_trend_window();
        json months = json::array();
        for (auto cp : report.change_points) months.push_back(s.month_at(cp).to_string());
        doc["change_point_months"] = months;
        json interval_months = json::array();
        for (const auto& [lo, hi] : report.intervals) {
            interval_months.push_back({s.month_at(lo).to_string(), s.month_at(hi).to_string()});
        }
        doc["interval_months"] = interval_months;
        write_json(config, fmt::format("changepoint/{}.json", group->name), doc);

        svg::Panel top;
        top.title = fmt::format("{}: monthly counts and STL trend", group->name);
        top.lines.push_back({positions(series.size()), series.values(), "#999999", false});
        top.lines.push_back({positions(series.size()), d.trend.values(), "#1f77b4", false});
        top.x_ticks = year_ticks(series.start(), series.size());
        svg::Panel bottom;
        bottom.title = "MOSUM statistic of the trend slope";
        std::vector<double> trace(report.trace.size());
        for (std::size_t i = 0; i < trace.size(); ++i) trace[i] = report.trace[i].value_or(std::nan(""));
        // slope index i sits at series index i + 1
        bottom.lines.push_back({positions(trace.size(), 1.0), trace, "#1f77b4", false});
        bottom.hlines.push_back({report.threshold, "#d62728"});
        bottom.x_ticks = top.x_ticks;
        for (std::size_t k = 0; k < report.change_points.size(); ++k) {
            const double x = static_cast<double>(report.change_points[k]) + 1.0;
            top.vlines.push_back({x, "#d62728"});
            bottom.vlines.push_back({x, "#d62728"});
            bottom.intervals.push_back({static_cast<double>(report.intervals[k].first) + 1.0,
                                        static_cast<double>(report.intervals[k].second) + 1.0, report.threshold,
                                        "#d62728"});
        }
        write_artifact(config, fmt::format("changepoint/{}.svg", group->name), svg::render({top, bottom}));
    }
}

void cmd_segreg(const AnalysisConfig& config) {
    const auto records = load_records(config);
    for (const auto* group : {&kProp47, &kNonProp47}) {
        const auto series = class_series(records, *group, config);
        const auto d = stl_decompose(series, config.stl);
        json doc{{"class", group->name}, {"config", config.segreg.to_json()}};
        std::vector<svg::Panel> panels;
        for (const auto& [label, input] :
             std::vector<std::pair<std::string, const MonthlySeries*>>{{"Y", &series}, {"T", &d.trend}}) {
            svg::Panel p;
            p.title = fmt::format("{}: segmented fit on {}", group->name, label);
            p.x_ticks = year_ticks(input->start(), input->size());
            const auto x = positions(input->size());
            p.lines.push_back({x, input->values(), "#999999", false});
            try {
                const auto fit = fit_segmented(*input, config.segreg);
                doc[label] = fit.to_json(input->start());
                std::vector<double> yhat(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) yhat[i] = fit.predict(x[i]);
                p.lines.push_back({x, yhat, "#1f77b4", false});
                for (std::size_t k = 0; k < fit.breakpoints.size(); ++k) {
                    p.vlines.push_back({fit.breakpoints[k], "#d62728"});
                    if (std::isfinite(fit.intervals[k].first) && std::isfinite(fit.intervals[k].second)) {
                        p.intervals.push_back({fit.intervals[k].first, fit.intervals[k].second,
                                               fit.predict(fit.breakpoints[k]), "#d62728"});
                    }
                }
            } catch (const NumericalError& e) {
                doc[label] = {{"error", e.what()}};
            }
            if (config.stability_runs > 0) {
                doc["stability_" + label] = stability_probe(*input, config.segreg, config.stability_runs).to_json();
            }
            panels.push_back(std::move(p));
        }
        write_json(config, fmt::format("segreg/{}.json", group->name), doc);
        write_artifact(config, fmt::format("segreg/{}.svg", group->name), svg::render(panels));
    }
}

void cmd_report_all(const AnalysisConfig& config) {
    cmd_ingest(config);
    cmd_citywide(config);
    if (config.geometry) cmd_neighborhoods(config);
    if (config.stations) cmd_stations(config);
    cmd_changepoint(config);
    cmd_segreg(config);
}

void write_manifest(const AnalysisConfig& config) {
    std::vector<fs::path> files;
    if (fs::is_directory(config.out)) {
        for (const auto& entry : fs::recursive_directory_iterator(config.out)) {
            if (!entry.is_regular_file()) continue;
            const auto rel = entry.path().lexically_relative(config.out);
            if (rel == kManifest) continue;
            files.push_back(rel);
        }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
    json artifacts = json::array();
    for (const auto& rel : files) {
        const auto bytes = read_file(config.out / rel);
        artifacts.push_back({{"path", rel.generic_string()}, {"size", bytes.size()}, {"fnv1a", hex64(fnv1a(bytes))}});
    }
    write_json(config, kManifest, {{"config_hash", hex64(config.hash())}, {"artifacts", artifacts}});
}

}  // namespace trendlens
