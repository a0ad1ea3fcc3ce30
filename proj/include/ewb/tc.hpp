#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ewb/grid.hpp"
#include "ewb/time.hpp"

namespace ewb {

/// Tracker thresholds; defaults follow common TempestExtremes-style practice.
struct TcParams {
    double max_center_pressure_hpa = 1020.0;
    double warm_core_thickness_drop_m = 6.0;   // required drop magnitude
    double warm_core_radius_gcd = 6.5;
    bool require_closed_contours = true;
    double min_pressure_gradient_pa = 200.0;
    double gradient_radius_gcd = 5.5;
    double max_distance_from_reference_gcd = 5.0;
    double min_candidate_separation_gcd = 1.0;
    double max_track_gap_hours = 48.0;
    int min_valid_wind_timesteps = 10;
    double valid_wind_threshold_ms = 10.0;
    double max_abs_latitude = 50.0;
    double peak_wind_radius_gcd = 2.0;
    // Candidate association cap for track stitching, per 6 h of separation.
    double assoc_distance_gcd_per_step = 5.0;
    int contour_rays = 8;
    double warm_core_anchor_radius_gcd = 1.0;
};

struct CandidateCenter {
    UtcSeconds time = 0;
    double lat = 0.0;
    double lon = 0.0;
    double mslp_hpa = 0.0;
    bool warm_core = false;
    double peak_wind_ms = 0.0;
};

struct Track {
    std::string storm_id;
    std::string source;  // "forecast" or "analysis"
    std::vector<CandidateCenter> points;

    int windy_timesteps(double threshold_ms) const {
        int n = 0;
        for (const auto& p : points) n += p.peak_wind_ms >= threshold_ms;
        return n;
    }
};

/// 2-D field handed to the candidate search (one valid time).
struct SurfaceFields {
    GridSpec spec;
    UtcSeconds time = 0;
    std::span<const float> mslp_hpa;
    std::span<const float> z300_m;
    std::span<const float> z500_m;
    std::span<const float> u10_ms;
    std::span<const float> v10_ms;
};

/// True when, along each of `rays` azimuths sampled at grid resolution out to
/// `radius_gcd`, the field changes from its centre value by at least `delta`
/// in the stated direction before the radius is exceeded. delta <= 0 is
/// vacuously true.
enum class ContourDirection { rise, drop };

inline bool closed_contour_check(std::span<const float> field,
                                 const GridSpec& spec, const LatLon& center,
                                 double delta, double radius_gcd,
                                 ContourDirection direction, int rays = 8) {
    if (field.size() != spec.size())
        throw std::invalid_argument("closed_contour_check: shape mismatch");
    const auto c_ij = spec.nearest(center.lat, center.lon);
    if (!c_ij) throw std::invalid_argument("closed_contour_check: center off grid");
    if (delta <= 0.0) return true;
    const double ref = field[spec.idx(c_ij->first, c_ij->second)];
    const double step = std::min(spec.dlat, spec.dlon);
    for (int r = 0; r < rays; ++r) {
        const double azimuth = 360.0 * r / rays;
        bool ok = false;
        for (double d = step; d <= radius_gcd + 1e-9; d += step) {
            const LatLon p = destination_point(center, azimuth, d);
            const auto ij = spec.nearest(p.lat, p.lon);
            if (!ij) break;  // ray left the grid before closing
            const double v = field[spec.idx(ij->first, ij->second)];
            if (direction == ContourDirection::rise ? v >= ref + delta
                                                    : v <= ref - delta) {
                ok = true;
                break;
            }
        }
        if (!ok) return false;
    }
    return true;
}

/// Peak 10-m wind speed over gridpoints within radius_gcd of the centre.
inline double peak_wind(std::span<const float> u10, std::span<const float> v10,
                        const GridSpec& spec, const LatLon& center,
                        double radius_gcd) {
    double best = 0.0;
    const int di = static_cast<int>(std::ceil(radius_gcd / spec.dlat)) + 1;
    const auto c_ij = spec.nearest(center.lat, center.lon);
    const int ci = c_ij ? c_ij->first : 0;
    const int i_lo = c_ij ? std::max(0, ci - di) : 0;
    const int i_hi = c_ij ? std::min(spec.nlat - 1, ci + di) : spec.nlat - 1;
    for (int i = i_lo; i <= i_hi; ++i) {
        for (int j = 0; j < spec.nlon; ++j) {
            if (gcd_degrees(center.lat, center.lon, spec.lat(i), spec.lon(j)) >
                radius_gcd)
                continue;
            const double s = std::hypot(u10[spec.idx(i, j)], v10[spec.idx(i, j)]);
            best = std::max(best, s);
        }
    }
    return best;
}

/// Candidate cyclone centres at one valid time: sea-level-pressure minima
/// passing the pressure cap, the closed-contour and warm-core tests, the
/// latitude band, the candidate-separation rule, and (when given) the
/// distance-from-reference filter.
inline std::vector<CandidateCenter> find_candidates(
    const SurfaceFields& f, const TcParams& params,
    const std::optional<LatLon>& reference_point = std::nullopt) {
    const GridSpec& spec = f.spec;
    if (f.mslp_hpa.size() != spec.size() || f.z300_m.size() != spec.size() ||
        f.z500_m.size() != spec.size() || f.u10_ms.size() != spec.size() ||
        f.v10_ms.size() != spec.size())
        throw std::invalid_argument("find_candidates: field shape mismatch");

    std::vector<float> thickness(spec.size());
    for (std::size_t k = 0; k < thickness.size(); ++k)
        thickness[k] = f.z300_m[k] - f.z500_m[k];

    std::vector<CandidateCenter> raw;
    for (int i = 0; i < spec.nlat; ++i) {
        const double lat = spec.lat(i);
        if (std::abs(lat) > params.max_abs_latitude) continue;
        for (int j = 0; j < spec.nlon; ++j) {
            const double p0 = f.mslp_hpa[spec.idx(i, j)];
            if (p0 > params.max_center_pressure_hpa) continue;
            // Local minimum: no neighbour below, at least one strictly above
            // (flat plateaus are not candidate centres).
            bool is_min = true;
            bool strictly_below_some = false;
            for (int di = -1; di <= 1 && is_min; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int ni = i + di;
                    int nj = j + dj;
                    if (ni < 0 || ni >= spec.nlat) continue;
                    if (spec.is_global_lon())
                        nj = (nj + spec.nlon) % spec.nlon;
                    else if (nj < 0 || nj >= spec.nlon)
                        continue;
                    const double pn = f.mslp_hpa[spec.idx(ni, nj)];
                    if (pn < p0) {
                        is_min = false;
                        break;
                    }
                    if (pn > p0) strictly_below_some = true;
                }
            }
            if (!is_min || !strictly_below_some) continue;
            const LatLon center{lat, spec.lon(j)};
            if (reference_point &&
                gcd_degrees(center.lat, center.lon, reference_point->lat,
                            reference_point->lon) >
                    params.max_distance_from_reference_gcd)
                continue;

            CandidateCenter cand;
            cand.time = f.time;
            cand.lat = center.lat;
            cand.lon = center.lon;
            cand.mslp_hpa = p0;

            if (params.require_closed_contours) {
                if (!closed_contour_check(f.mslp_hpa, spec, center,
                                          params.min_pressure_gradient_pa / 100.0,
                                          params.gradient_radius_gcd,
                                          ContourDirection::rise,
                                          params.contour_rays))
                    continue;
                // Warm core: anchor at the thickness maximum near the pressure
                // minimum, then require the closed drop around it.
                const int search = static_cast<int>(
                    std::ceil(params.warm_core_anchor_radius_gcd / spec.dlat)) + 1;
                LatLon anchor = center;
                double best = -std::numeric_limits<double>::infinity();
                for (int di = -search; di <= search; ++di) {
                    const int ni = i + di;
                    if (ni < 0 || ni >= spec.nlat) continue;
                    for (int dj = -search; dj <= search; ++dj) {
                        int nj = j + dj;
                        if (spec.is_global_lon())
                            nj = (nj + spec.nlon) % spec.nlon;
                        else if (nj < 0 || nj >= spec.nlon)
                            continue;
                        const LatLon p{spec.lat(ni), spec.lon(nj)};
                        if (gcd_degrees(center.lat, center.lon, p.lat, p.lon) >
                            params.warm_core_anchor_radius_gcd)
                            continue;
                        if (thickness[spec.idx(ni, nj)] > best) {
                            best = thickness[spec.idx(ni, nj)];
                            anchor = p;
                        }
                    }
                }
                cand.warm_core = closed_contour_check(
                    thickness, spec, anchor, params.warm_core_thickness_drop_m,
                    params.warm_core_radius_gcd, ContourDirection::drop,
                    params.contour_rays);
                if (!cand.warm_core) continue;
            } else {
                cand.warm_core = true;
            }
            cand.peak_wind_ms = peak_wind(f.u10_ms, f.v10_ms, spec, center,
                                          params.peak_wind_radius_gcd);
            raw.push_back(cand);
        }
    }

    // Separation rule: deeper minima win; order then restored to scan order.
    std::vector<std::size_t> order(raw.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (raw[a].mslp_hpa != raw[b].mslp_hpa) return raw[a].mslp_hpa < raw[b].mslp_hpa;
        if (raw[a].lat != raw[b].lat) return raw[a].lat < raw[b].lat;
        return raw[a].lon < raw[b].lon;
    });
    std::vector<bool> keep(raw.size(), false);
    std::vector<std::size_t> kept;
    for (std::size_t k : order) {
        bool ok = true;
        for (std::size_t other : kept) {
            if (gcd_degrees(raw[k].lat, raw[k].lon, raw[other].lat,
                            raw[other].lon) < params.min_candidate_separation_gcd) {
                ok = false;
                break;
            }
        }
        if (ok) {
            keep[k] = true;
            kept.push_back(k);
        }
    }
    std::vector<CandidateCenter> out;
    for (std::size_t k = 0; k < raw.size(); ++k)
        if (keep[k]) out.push_back(raw[k]);
    return out;
}

namespace detail {

inline LatLon interpolate_track_position(const Track& track, UtcSeconds t) {
    const auto& pts = track.points;
    if (t <= pts.front().time) return {pts.front().lat, pts.front().lon};
    if (t >= pts.back().time) return {pts.back().lat, pts.back().lon};
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        if (t >= pts[k].time && t <= pts[k + 1].time) {
            const double f = static_cast<double>(t - pts[k].time) /
                             static_cast<double>(pts[k + 1].time - pts[k].time);
            double dlon = canonical_lon(pts[k + 1].lon) - canonical_lon(pts[k].lon);
            if (dlon > 180.0) dlon -= 360.0;
            if (dlon < -180.0) dlon += 360.0;
            return {pts[k].lat + f * (pts[k + 1].lat - pts[k].lat),
                    canonical_lon(pts[k].lon + f * dlon)};
        }
    }
    return {pts.back().lat, pts.back().lon};
}

}  // namespace detail

/// Greedy nearest-candidate association in time order. Gaps up to
/// max_track_gap_hours are allowed; the association radius scales with the
/// gap. Candidates farther than max_distance_from_reference_gcd from the
/// time-interpolated reference track are excluded. Tracks that fail the
/// wind-validity rule are dropped.
inline std::vector<Track> stitch_tracks(
    std::vector<std::vector<CandidateCenter>> candidates_by_time,
    const TcParams& params, const Track* reference_track = nullptr,
    const std::string& source = "forecast") {
    // Canonical candidate order makes association independent of input order.
    for (auto& cands : candidates_by_time) {
        std::sort(cands.begin(), cands.end(),
                  [](const CandidateCenter& a, const CandidateCenter& b) {
                      if (a.time != b.time) return a.time < b.time;
                      if (a.lat != b.lat) return a.lat < b.lat;
                      if (a.lon != b.lon) return a.lon < b.lon;
                      return a.mslp_hpa < b.mslp_hpa;
                  });
    }
    std::sort(candidates_by_time.begin(), candidates_by_time.end(),
              [](const auto& a, const auto& b) {
                  if (a.empty() || b.empty()) return b.empty() && !a.empty();
                  return a.front().time < b.front().time;
              });

    std::vector<Track> tracks;
    for (const auto& cands : candidates_by_time) {
        if (cands.empty()) continue;
        const UtcSeconds t = cands.front().time;
        std::vector<const CandidateCenter*> pool;
        for (const auto& c : cands) {
            if (reference_track && !reference_track->points.empty()) {
                const LatLon ref =
                    detail::interpolate_track_position(*reference_track, t);
                if (gcd_degrees(c.lat, c.lon, ref.lat, ref.lon) >
                    params.max_distance_from_reference_gcd)
                    continue;
            }
            pool.push_back(&c);
        }
        std::vector<bool> taken(pool.size(), false);
        for (auto& track : tracks) {
            const auto& last = track.points.back();
            const double gap_h =
                static_cast<double>(t - last.time) / kSecondsPerHour;
            if (gap_h <= 0 || gap_h > params.max_track_gap_hours) continue;
            const double max_dist =
                params.assoc_distance_gcd_per_step * std::max(1.0, gap_h / 6.0);
            int best = -1;
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < pool.size(); ++k) {
                if (taken[k]) continue;
                const double d =
                    gcd_degrees(last.lat, last.lon, pool[k]->lat, pool[k]->lon);
                if (d > max_dist) continue;
                if (d < best_dist - 1e-12 ||
                    (std::abs(d - best_dist) <= 1e-12 && best >= 0 &&
                     pool[k]->mslp_hpa < pool[best]->mslp_hpa)) {
                    best = static_cast<int>(k);
                    best_dist = d;
                }
            }
            if (best >= 0) {
                taken[best] = true;
                track.points.push_back(*pool[best]);
            }
        }
        for (std::size_t k = 0; k < pool.size(); ++k) {
            if (taken[k]) continue;
            Track nt;
            nt.source = source;
            nt.points.push_back(*pool[k]);
            tracks.push_back(std::move(nt));
        }
    }

    std::vector<Track> valid;
    for (auto& track : tracks) {
        if (track.windy_timesteps(params.valid_wind_threshold_ms) <
            params.min_valid_wind_timesteps)
            continue;
        track.storm_id = source + "_" + std::to_string(valid.size() + 1);
        valid.push_back(std::move(track));
    }
    return valid;
}

// ---------------------------------------------------------------------------
// Track CSV (also the analysis-track input schema):
// storm_id,source,time,lat,lon,mslp_hpa,peak_wind_ms

inline void write_tracks_csv(std::ostream& os, std::span<const Track> tracks) {
    os << "storm_id,source,time,lat,lon,mslp_hpa,peak_wind_ms\n";
    char buf[160];
    for (const auto& track : tracks) {
        for (const auto& p : track.points) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.4f,%.4f,%.2f,%.2f\n",
                          track.storm_id.c_str(), track.source.c_str(),
                          format_iso8601(p.time).c_str(), p.lat, p.lon,
                          p.mslp_hpa, p.peak_wind_ms);
            os << buf;
        }
    }
}

inline std::vector<Track> read_tracks_csv(std::istream& is) {
    std::vector<Track> tracks;
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("track CSV: missing header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (std::size_t p = 0; p <= line.size(); ++p) {
            if (p == line.size() || line[p] == ',') {
                cols.push_back(line.substr(start, p - start));
                start = p + 1;
            }
        }
        if (cols.size() != 7)
            throw std::runtime_error("track CSV: expected 7 columns");
        CandidateCenter pt;
        pt.time = parse_iso8601(cols[2]);
        pt.lat = std::stod(cols[3]);
        pt.lon = std::stod(cols[4]);
        pt.mslp_hpa = std::stod(cols[5]);
        pt.peak_wind_ms = std::stod(cols[6]);
        pt.warm_core = true;
        if (tracks.empty() || tracks.back().storm_id != cols[0]) {
            Track t;
            t.storm_id = cols[0];
            t.source = cols[1];
            tracks.push_back(std::move(t));
        }
        tracks.back().points.push_back(pt);
    }
    for (const auto& t : tracks)
        for (std::size_t k = 1; k < t.points.size(); ++k)
            if (t.points[k].time <= t.points[k - 1].time)
                throw std::runtime_error("track CSV: non-increasing times in " +
                                         t.storm_id);
    return tracks;
}

/// Linear resampling of a track onto the given valid times (used to align
/// 3-hourly analysis tracks with 6-hourly model output). Times outside the
/// track's span are skipped.
inline Track resample_track(const Track& track,
                            std::span<const UtcSeconds> times) {
    Track out;
    out.storm_id = track.storm_id;
    out.source = track.source;
    if (track.points.empty()) return out;
    const auto& pts = track.points;
    for (const UtcSeconds t : times) {
        if (t < pts.front().time || t > pts.back().time) continue;
        std::size_t k = 0;
        while (k + 1 < pts.size() && pts[k + 1].time < t) ++k;
        if (pts[k].time == t || k + 1 == pts.size()) {
            out.points.push_back(pts[k]);
            out.points.back().time = t;
            continue;
        }
        const double f = static_cast<double>(t - pts[k].time) /
                         static_cast<double>(pts[k + 1].time - pts[k].time);
        CandidateCenter p;
        p.time = t;
        const LatLon pos = detail::interpolate_track_position(track, t);
        p.lat = pos.lat;
        p.lon = pos.lon;
        p.mslp_hpa = pts[k].mslp_hpa + f * (pts[k + 1].mslp_hpa - pts[k].mslp_hpa);
        p.peak_wind_ms =
            pts[k].peak_wind_ms + f * (pts[k + 1].peak_wind_ms - pts[k].peak_wind_ms);
        p.warm_core = true;
        out.points.push_back(p);
    }
    return out;
}

}  // namespace ewb
