#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendlens/ingest.hpp"

namespace trendlens {

inline constexpr double kEarthRadiusM = 6'371'000.0;

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    bool valid() const { return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0; }
};

/// Great-circle distance on a sphere of radius 6,371 km.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

/// Point `distance_m` away from `origin` along `bearing_deg` (0 = north).
GeoPoint destination(const GeoPoint& origin, double bearing_deg, double distance_m);

struct StationFilter {
    std::string name;
    GeoPoint center;
    double radius_m = 450.0;

    bool contains(const GeoPoint& p) const { return haversine_m(center, p) <= radius_m; }
};

/// Records within the filter radius, boundary inclusive.
std::vector<IncidentRecord> within_radius(const std::vector<IncidentRecord>& records, const StationFilter& filter);

/// CSV `name,lat,lon,radius_m`.
std::vector<StationFilter> load_stations(std::istream& in);
std::vector<StationFilter> load_stations(const std::filesystem::path& path);

/// Simple polygon, implicitly closed (first vertex != last).
struct Polygon {
    std::string name;
    std::vector<GeoPoint> vertices;

    double signed_area() const;  // planar, degrees^2
};

/// Even-odd test with points on an edge or vertex counted as inside.
bool point_in_polygon(const GeoPoint& p, const Polygon& poly);

class NeighborhoodSet {
public:
    explicit NeighborhoodSet(std::vector<Polygon> polygons);

    /// GeoJSON FeatureCollection of Polygon features named by
    /// `properties.name`; only outer rings are used.
    static NeighborhoodSet from_geojson(const nlohmann::json& doc);
    static NeighborhoodSet load(const std::filesystem::path& path);

    /// First polygon in declared order that contains the point.
    std::optional<std::string> assign(const GeoPoint& p) const;

    const std::vector<Polygon>& polygons() const { return polygons_; }

private:
    std::vector<Polygon> polygons_;
};

std::optional<std::string> assign_neighborhood(const IncidentRecord& record, const NeighborhoodSet& set);

}  // namespace trendlens
