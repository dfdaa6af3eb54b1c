#include "trendlens/geo.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "trendlens/csv.hpp"
#include "trendlens/error.hpp"

namespace trendlens {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Collinear-and-between test, tolerant to rounding at the 1e-12 degree level.
bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    const double len = std::hypot(b.lon - a.lon, b.lat - a.lat);
    if (std::abs(cross) > 1e-12 * std::max(len, 1.0)) return false;
    return p.lon >= std::min(a.lon, b.lon) - 1e-12 && p.lon <= std::max(a.lon, b.lon) + 1e-12 &&
           p.lat >= std::min(a.lat, b.lat) - 1e-12 && p.lat <= std::max(a.lat, b.lat) + 1e-12;
}

double to_double(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("station list: bad {} '{}'", what, s));
    }
}

}  // namespace

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
    const double dlat = (b.lat - a.lat) * kDeg;
    const double dlon = (b.lon - a.lon) * kDeg;
    const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * kDeg) * std::cos(b.lat * kDeg) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(s)));
}

GeoPoint destination(const GeoPoint& origin, double bearing_deg, double distance_m) {
    const double d = distance_m / kEarthRadiusM;
    const double th = bearing_deg * kDeg;
    const double la1 = origin.lat * kDeg;
    const double lo1 = origin.lon * kDeg;
    const double la2 = std::asin(std::sin(la1) * std::cos(d) + std::cos(la1) * std::sin(d) * std::cos(th));
    const double lo2 =
        lo1 + std::atan2(std::sin(th) * std::sin(d) * std::cos(la1), std::cos(d) - std::sin(la1) * std::sin(la2));
    return {la2 / kDeg, lo2 / kDeg};
}

std::vector<IncidentRecord> within_radius(const std::vector<IncidentRecord>& records, const StationFilter& filter) {
    if (!(filter.radius_m > 0.0)) throw ConfigError(fmt::format("station '{}': radius must be > 0", filter.name));
    std::vector<IncidentRecord> out;
    for (const auto& r : records) {
        if (filter.contains({r.lat, r.lon})) out.push_back(r);
    }
    return out;
}

std::vector<StationFilter> load_stations(std::istream& in) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header || header->size() != 4 || (*header)[0] != "name") {
        throw ConfigError("station list must have header name,lat,lon,radius_m");
    }
    std::vector<StationFilter> out;
    std::set<std::string> names;
    while (auto f = reader.next()) {
        if (f->size() == 1 && f->front().empty()) continue;
        if (f->size() != 4) throw ConfigError("station list row must have four fields");
        StationFilter s{(*f)[0], {to_double((*f)[1], "lat"), to_double((*f)[2], "lon")}, to_double((*f)[3], "radius")};
        if (!s.center.valid() || !(s.radius_m > 0.0)) throw ConfigError(fmt::format("station '{}' is invalid", s.name));
        if (!names.insert(s.name).second) throw ConfigError(fmt::format("duplicate station '{}'", s.name));
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<StationFilter> load_stations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open station list '{}'", path.string()));
    return load_stations(in);
}

double Polygon::signed_area() const {
    double a = 0.0;
    for (std::size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++) {
        a += vertices[j].lon * vertices[i].lat - vertices[i].lon * vertices[j].lat;
    }
    return 0.5 * a;
}

bool point_in_polygon(const GeoPoint& p, const Polygon& poly) {
    const auto& v = poly.vertices;
    bool inside = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if (on_segment(p, v[j], v[i])) return true;
        if ((v[i].lat > p.lat) != (v[j].lat > p.lat)) {
            const double x = v[j].lon + (p.lat - v[j].lat) * (v[i].lon - v[j].lon) / (v[i].lat - v[j].lat);
            if (p.lon < x) inside = !inside;
        }
    }
    return inside;
}

NeighborhoodSet::NeighborhoodSet(std::vector<Polygon> polygons) : polygons_(std::move(polygons)) {
    std::set<std::string> names;
    for (auto& poly : polygons_) {
        if (poly.vertices.size() >= 2) {
            const auto& f = poly.vertices.front();
            const auto& l = poly.vertices.back();
            if (f.lat == l.lat && f.lon == l.lon) poly.vertices.pop_back();
        }
        if (poly.vertices.size() < 3) throw ConfigError(fmt::format("polygon '{}' needs at least 3 vertices", poly.name));
        if (poly.signed_area() == 0.0) throw ConfigError(fmt::format("polygon '{}' has zero area", poly.name));
        if (!names.insert(poly.name).second) throw ConfigError(fmt::format("duplicate neighborhood '{}'", poly.name));
    }
}

NeighborhoodSet NeighborhoodSet::from_geojson(const nlohmann::json& doc) {
    try {
        if (doc.at("type") != "FeatureCollection") throw ConfigError("geometry file must be a GeoJSON FeatureCollection");
        std::vector<Polygon> polys;
        for (const auto& feature : doc.at("features")) {
            const auto& geom = feature.at("geometry");
            if (geom.at("type") != "Polygon") {
                throw ConfigError("geometry file: only Polygon features are supported");
            }
            Polygon poly;
            poly.name = feature.at("properties").at("name").get<std::string>();
            for (const auto& c : geom.at("coordinates").at(0)) {
                poly.vertices.push_back({c.at(1).get<double>(), c.at(0).get<double>()});
            }
            polys.push_back(std::move(poly));
        }
        return NeighborhoodSet(std::move(polys));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("geometry file is malformed: {}", e.what()));
    }
}

NeighborhoodSet NeighborhoodSet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open geometry file '{}'", path.string()));
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("geometry file '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return from_geojson(doc);
}

std::optional<std::string> NeighborhoodSet::assign(const GeoPoint& p) const {
    for (const auto& poly : polygons_) {
        if (point_in_polygon(p, poly)) return poly.name;
    }
    return std::nullopt;
}

std::optional<std::string> assign_neighborhood(const IncidentRecord& record, const NeighborhoodSet& set) {
    return set.assign({record.lat, record.lon});
}

}  // namespace trendlens
