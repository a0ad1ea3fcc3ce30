#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ewb/time.hpp"

namespace ewb {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wraps a longitude into the canonical [-180, 180) interval.
inline double canonical_lon(double lon) {
    double x = std::fmod(lon + 180.0, 360.0);
    if (x < 0) x += 360.0;
    return x - 180.0;
}

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

/// Uniform lat/lon grid. Latitude ascends with row index; longitudes wrap.
struct GridSpec {
    double lat0 = 0.0;  // latitude of row 0, degrees N
    double lon0 = 0.0;  // longitude of column 0, degrees E in [-180, 180)
    double dlat = 1.0;
    double dlon = 1.0;
    int nlat = 0;
    int nlon = 0;

    void validate() const {
        if (dlat <= 0 || dlon <= 0)
            throw std::invalid_argument("GridSpec: spacing must be positive");
        if (nlat <= 0 || nlon <= 0)
            throw std::invalid_argument("GridSpec: empty grid");
        if (static_cast<double>(nlat - 1) * dlat > 180.0 + 1e-9)
            throw std::invalid_argument("GridSpec: latitude span exceeds 180");
        if (lat0 < -90.0 - 1e-9 || lat0 + (nlat - 1) * dlat > 90.0 + 1e-9)
            throw std::invalid_argument("GridSpec: latitudes outside [-90,90]");
    }

    std::size_t size() const {
        return static_cast<std::size_t>(nlat) * static_cast<std::size_t>(nlon);
    }
    double lat(int i) const { return lat0 + i * dlat; }
    double lon(int j) const { return canonical_lon(lon0 + j * dlon); }
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * nlon + j;
    }

    /// True when the longitude axis covers the full circle, so column 0 and
    /// column nlon-1 are neighbours.
    bool is_global_lon() const {
        return std::abs(nlon * dlon - 360.0) < 1e-6;
    }

    bool same_geometry(const GridSpec& o, double tol = 1e-9) const {
        return nlat == o.nlat && nlon == o.nlon &&
               std::abs(lat0 - o.lat0) < tol && std::abs(lon0 - o.lon0) < tol &&
               std::abs(dlat - o.dlat) < tol && std::abs(dlon - o.dlon) < tol;
    }

    /// Nearest gridpoint to (lat, lon); nullopt when outside the grid by more
    /// than half a cell.
    std::optional<std::pair<int, int>> nearest(double lat_deg,
                                               double lon_deg) const {
        const int i = static_cast<int>(std::lround((lat_deg - lat0) / dlat));
        if (i < 0 || i >= nlat) return std::nullopt;
        double rel = lon_deg - lon0;
        rel -= 360.0 * std::floor(rel / 360.0);  // into [0, 360)
        int j = static_cast<int>(std::lround(rel / dlon));
        if (is_global_lon()) {
            j %= nlon;
        } else if (j == nlon && rel - (nlon - 1) * dlon <= dlon / 2 + 1e-9) {
            j = nlon - 1;
        }
        if (j < 0 || j >= nlon) return std::nullopt;
        return std::make_pair(i, j);
    }
};

/// Rectangular lat/lon bounds (lon_min <= lon_max, no antimeridian split).
struct Region {
    double lat_min = 0.0;
    double lat_max = 0.0;
    double lon_min = 0.0;
    double lon_max = 0.0;

    void validate() const {
        if (!(lat_min < lat_max))
            throw std::invalid_argument("Region: lat_min must be < lat_max");
        if (!(lon_min <= lon_max))
            throw std::invalid_argument("Region: lon_min must be <= lon_max");
    }

    bool contains(double lat, double lon) const {
        const double cl = canonical_lon(lon);
        return lat >= lat_min - 1e-9 && lat <= lat_max + 1e-9 &&
               ((cl >= lon_min - 1e-9 && cl <= lon_max + 1e-9) ||
                (cl + 360.0 >= lon_min - 1e-9 && cl + 360.0 <= lon_max + 1e-9));
    }
};

/// Great-circle distance, spherical Earth of radius 6371 km.
inline double haversine_km(double lat1, double lon1, double lat2, double lon2) {
    const double p1 = deg2rad(lat1);
    const double p2 = deg2rad(lat2);
    const double dp = deg2rad(lat2 - lat1);
    const double dl = deg2rad(lon2 - lon1);
    const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                     std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

inline double haversine_km(const LatLon& a, const LatLon& b) {
    return haversine_km(a.lat, a.lon, b.lat, b.lon);
}

/// Great-circle separation expressed in degrees of arc.
inline double gcd_degrees(double lat1, double lon1, double lat2, double lon2) {
    return rad2deg(haversine_km(lat1, lon1, lat2, lon2) / kEarthRadiusKm);
}

/// Area of the grid cell centred at the given latitude.
inline double cell_area_km2(double lat, const GridSpec& spec) {
    if (std::abs(lat) >= 90.0) return 0.0;
    const double c = std::cos(deg2rad(lat));
    if (c <= 0.0) return 0.0;
    return kEarthRadiusKm * kEarthRadiusKm * deg2rad(spec.dlat) *
           deg2rad(spec.dlon) * c;
}

/// Destination point a given arc distance (degrees) along an azimuth
/// (degrees clockwise from north) on the sphere.
inline LatLon destination_point(const LatLon& start, double azimuth_deg,
                                double arc_deg) {
    const double phi1 = deg2rad(start.lat);
    const double lam1 = deg2rad(start.lon);
    const double az = deg2rad(azimuth_deg);
    const double d = deg2rad(arc_deg);
    const double sinphi2 = std::sin(phi1) * std::cos(d) +
                           std::cos(phi1) * std::sin(d) * std::cos(az);
    const double phi2 = std::asin(std::clamp(sinphi2, -1.0, 1.0));
    const double y = std::sin(az) * std::sin(d) * std::cos(phi1);
    const double x = std::cos(d) - std::sin(phi1) * sinphi2;
    const double lam2 = lam1 + std::atan2(y, x);
    return {rad2deg(phi2), canonical_lon(rad2deg(lam2))};
}

/// Column grid spacing in km at a latitude row; row spacing is constant.
inline double dlat_km(const GridSpec& spec) {
    return kEarthRadiusKm * deg2rad(spec.dlat);
}
inline double dlon_km(const GridSpec& spec, double lat) {
    return kEarthRadiusKm * deg2rad(spec.dlon) * std::cos(deg2rad(lat));
}

// ---------------------------------------------------------------------------
// FieldCube

/// Gridded values of one physical variable on (time, level, lat, lon) axes.
/// Immutable after construction; all detector operations are pure functions.
struct FieldCube {
    GridSpec spec;
    std::vector<UtcSeconds> times;       // strictly increasing, uniform cadence
    std::vector<double> levels_hpa;      // empty => single implicit level
    std::vector<float> values;           // row-major (time, level, lat, lon)
    std::string variable;
    std::string units;
    std::optional<float> fill_value;

    int ntime() const { return static_cast<int>(times.size()); }
    int nlevel() const {
        return levels_hpa.empty() ? 1 : static_cast<int>(levels_hpa.size());
    }

    std::size_t idx(int t, int l, int i, int j) const {
        return ((static_cast<std::size_t>(t) * nlevel() + l) * spec.nlat + i) *
                   spec.nlon + j;
    }
    float at(int t, int l, int i, int j) const { return values[idx(t, l, i, j)]; }

    std::span<const float> slice(int t, int l = 0) const {
        return {values.data() + idx(t, l, 0, 0), spec.size()};
    }
    std::span<float> slice_mut(int t, int l = 0) {
        return {values.data() + idx(t, l, 0, 0), spec.size()};
    }

    UtcSeconds cadence_seconds() const {
        if (times.size() < 2) return 0;
        return times[1] - times[0];
    }

    void validate() const {
        spec.validate();
        if (times.empty()) throw std::invalid_argument("FieldCube: no times");
        const std::size_t expect = static_cast<std::size_t>(ntime()) *
                                   nlevel() * spec.size();
        if (values.size() != expect)
            throw std::invalid_argument("FieldCube: payload length mismatch");
        for (std::size_t k = 1; k < times.size(); ++k) {
            if (times[k] <= times[k - 1])
                throw std::invalid_argument("FieldCube: non-monotone time axis");
        }
        if (times.size() > 2) {
            const UtcSeconds step = times[1] - times[0];
            for (std::size_t k = 2; k < times.size(); ++k)
                if (times[k] - times[k - 1] != step)
                    throw std::invalid_argument(
                        "FieldCube: non-uniform time cadence");
        }
        for (std::size_t k = 1; k < levels_hpa.size(); ++k)
            if (levels_hpa[k] >= levels_hpa[k - 1])
                throw std::invalid_argument(
                    "FieldCube: levels must descend from the surface");
        if (!fill_value) {
            for (float v : values)
                if (std::isnan(v))
                    throw std::invalid_argument(
                        "FieldCube: NaN without declared fill value");
        }
    }

    /// Cube restricted to gridpoints whose centres fall inside the region.
    /// Handles regions that straddle the grid's longitude seam.
    FieldCube subset(const Region& region) const {
        region.validate();
        int i0 = spec.nlat, i1 = -1;
        for (int i = 0; i < spec.nlat; ++i) {
            const double la = spec.lat(i);
            if (la >= region.lat_min - 1e-9 && la <= region.lat_max + 1e-9) {
                i0 = std::min(i0, i);
                i1 = std::max(i1, i);
            }
        }
        std::vector<int> cols;
        for (int j = 0; j < spec.nlon; ++j)
            if (region.contains(spec.lat(std::max(0, i0)), spec.lon(j)))
                cols.push_back(j);
        if (i1 < i0 || cols.empty())
            throw std::runtime_error("subset: region contains no gridpoints");
        // Rotate a seam-straddling column set so that it is contiguous.
        if (cols.size() < static_cast<std::size_t>(spec.nlon)) {
            for (std::size_t k = 1; k < cols.size(); ++k) {
                if (cols[k] != cols[k - 1] + 1) {
                    std::rotate(cols.begin(), cols.begin() + k, cols.end());
                    break;
                }
            }
        }
        FieldCube out;
        out.spec = spec;
        out.spec.lat0 = spec.lat(i0);
        out.spec.lon0 = spec.lon(cols.front());
        out.spec.nlat = i1 - i0 + 1;
        out.spec.nlon = static_cast<int>(cols.size());
        out.times = times;
        out.levels_hpa = levels_hpa;
        out.variable = variable;
        out.units = units;
        out.fill_value = fill_value;
        out.values.resize(static_cast<std::size_t>(ntime()) * nlevel() *
                          out.spec.size());
        std::size_t w = 0;
        for (int t = 0; t < ntime(); ++t)
            for (int l = 0; l < nlevel(); ++l)
                for (int i = i0; i <= i1; ++i)
                    for (int j : cols) out.values[w++] = at(t, l, i, j);
        return out;
    }

    /// Cube restricted to times within [t0, t1].
    FieldCube subset_time(UtcSeconds t0, UtcSeconds t1) const {
        int k0 = -1, k1 = -1;
        for (int k = 0; k < ntime(); ++k) {
            if (times[k] >= t0 && times[k] <= t1) {
                if (k0 < 0) k0 = k;
                k1 = k;
            }
        }
        if (k0 < 0) throw std::runtime_error("subset_time: empty selection");
        FieldCube out;
        out.spec = spec;
        out.times.assign(times.begin() + k0, times.begin() + k1 + 1);
        out.levels_hpa = levels_hpa;
        out.variable = variable;
        out.units = units;
        out.fill_value = fill_value;
        out.values.assign(values.begin() + idx(k0, 0, 0, 0),
                          values.begin() + idx(k0, 0, 0, 0) +
                              static_cast<std::size_t>(k1 - k0 + 1) * nlevel() *
                                  spec.size());
        return out;
    }
};

// ---------------------------------------------------------------------------
// LandMask

struct LandMask {
    GridSpec spec;
    std::vector<std::uint8_t> mask;  // 1 = land

    bool land(int i, int j) const { return mask[spec.idx(i, j)] != 0; }

    /// Land status of an arbitrary point; off-grid points count as ocean.
    bool land_at(double lat, double lon) const {
        const auto ij = spec.nearest(lat, lon);
        if (!ij) return false;
        return land(ij->first, ij->second);
    }

    static LandMask from_cube(const FieldCube& cube, float threshold = 0.5f) {
        LandMask m;
        m.spec = cube.spec;
        m.mask.resize(cube.spec.size());
        const auto s = cube.slice(0, 0);
        for (std::size_t k = 0; k < s.size(); ++k)
            m.mask[k] = s[k] >= threshold ? 1 : 0;
        return m;
    }

    FieldCube to_cube() const {
        FieldCube c;
        c.spec = spec;
        c.times = {0};
        c.variable = "land_mask";
        c.units = "1";
        c.values.assign(mask.begin(), mask.end());
        return c;
    }
};

// ---------------------------------------------------------------------------
// Raster kernels

struct Components {
    std::vector<std::int32_t> labels;   // 0 = background, 1..count = components
    std::vector<std::int64_t> sizes;    // sizes[k] = cells of component k+1
    int count = 0;
};

/// Labels connected components of a boolean grid. Longitude wrap is treated
/// as adjacency when the grid spans the full circle.
inline Components connected_components(std::span<const std::uint8_t> mask,
                                       const GridSpec& spec,
                                       int connectivity = 8) {
    if (mask.size() != spec.size())
        throw std::invalid_argument("connected_components: mask shape mismatch");
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("connected_components: connectivity must be 4 or 8");
    const bool wrap = spec.is_global_lon();
    Components out;
    out.labels.assign(mask.size(), 0);
    std::vector<std::size_t> stack;
    for (int si = 0; si < spec.nlat; ++si) {
        for (int sj = 0; sj < spec.nlon; ++sj) {
            const std::size_t s = spec.idx(si, sj);
            if (!mask[s] || out.labels[s]) continue;
            const std::int32_t label = ++out.count;
            std::int64_t size = 0;
            stack.assign(1, s);
            out.labels[s] = label;
            while (!stack.empty()) {
                const std::size_t cur = stack.back();
                stack.pop_back();
                ++size;
                const int ci = static_cast<int>(cur / spec.nlon);
                const int cj = static_cast<int>(cur % spec.nlon);
                for (int di = -1; di <= 1; ++di) {
                    for (int dj = -1; dj <= 1; ++dj) {
                        if (di == 0 && dj == 0) continue;
                        if (connectivity == 4 && di != 0 && dj != 0) continue;
                        const int ni = ci + di;
                        if (ni < 0 || ni >= spec.nlat) continue;
                        int nj = cj + dj;
                        if (wrap) {
                            nj = (nj + spec.nlon) % spec.nlon;
                        } else if (nj < 0 || nj >= spec.nlon) {
                            continue;
                        }
                        const std::size_t n = spec.idx(ni, nj);
                        if (mask[n] && !out.labels[n]) {
                            out.labels[n] = label;
                            stack.push_back(n);
                        }
                    }
                }
            }
            out.sizes.push_back(size);
        }
    }
    return out;
}

/// 5-point Laplacian with grid spacing converted to km at each latitude row
/// (stencil sum divided by dlat_km * dlon_km(lat)). Boundary cells replicate
/// the edge value.
inline std::vector<float> laplacian(std::span<const float> field,
                                    const GridSpec& spec) {
    if (spec.nlat < 3 || spec.nlon < 3)
        throw std::invalid_argument("laplacian: grid too small");
    if (field.size() != spec.size())
        throw std::invalid_argument("laplacian: field shape mismatch");
    std::vector<float> out(field.size());
    const double dy = dlat_km(spec);
    for (int i = 0; i < spec.nlat; ++i) {
        const double dx = dlon_km(spec, spec.lat(i));
        const double denom = dy * dx;
        const int in = std::max(0, i - 1);
        const int is = std::min(spec.nlat - 1, i + 1);
        for (int j = 0; j < spec.nlon; ++j) {
            const int jw = std::max(0, j - 1);
            const int je = std::min(spec.nlon - 1, j + 1);
            const double sum = field[spec.idx(in, j)] + field[spec.idx(is, j)] +
                               field[spec.idx(i, jw)] + field[spec.idx(i, je)] -
                               4.0 * field[spec.idx(i, j)];
            out[spec.idx(i, j)] = static_cast<float>(sum / denom);
        }
    }
    return out;
}

/// Area-weighted centre of mass of a non-negative weight grid. Longitude is
/// averaged with a circular mean so masses straddling the antimeridian do
/// not cancel.
inline LatLon center_of_mass(std::span<const float> weights,
                             const GridSpec& spec) {
    if (weights.size() != spec.size())
        throw std::invalid_argument("center_of_mass: shape mismatch");
    double wsum = 0.0, lat_acc = 0.0, sin_acc = 0.0, cos_acc = 0.0;
    for (int i = 0; i < spec.nlat; ++i) {
        const double area = cell_area_km2(spec.lat(i), spec);
        for (int j = 0; j < spec.nlon; ++j) {
            const double w = weights[spec.idx(i, j)];
            if (w <= 0.0) continue;
            const double m = w * area;
            wsum += m;
            lat_acc += m * spec.lat(i);
            const double lam = deg2rad(spec.lon(j));
            sin_acc += m * std::sin(lam);
            cos_acc += m * std::cos(lam);
        }
    }
    if (wsum <= 0.0)
        throw std::invalid_argument("center_of_mass: empty mask");
    return {lat_acc / wsum, canonical_lon(rad2deg(std::atan2(sin_acc, cos_acc)))};
}

inline LatLon center_of_mass(std::span<const std::uint8_t> mask,
                             const GridSpec& spec) {
    std::vector<float> w(mask.begin(), mask.end());
    return center_of_mass(std::span<const float>(w), spec);
}

/// Drops land components smaller than min_cells (counting cells, not area).
/// Used to strip atoll-scale features before landfall detection.
inline LandMask remove_small_land_features(const LandMask& in, int min_cells) {
    const auto cc = connected_components(in.mask, in.spec, 8);
    LandMask out;
    out.spec = in.spec;
    out.mask.assign(in.mask.size(), 0);
    for (std::size_t k = 0; k < in.mask.size(); ++k) {
        const auto label = cc.labels[k];
        if (label > 0 && cc.sizes[label - 1] >= min_cells) out.mask[k] = 1;
    }
    return out;
}

}  // namespace ewb
