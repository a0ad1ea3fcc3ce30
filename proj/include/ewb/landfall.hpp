#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ewb/grid.hpp"
#include "ewb/tc.hpp"
#include "ewb/time.hpp"

namespace ewb {

struct LandfallEvent {
    std::string storm_id;
    std::string source;
    int ordinal = 0;  // 1st, 2nd, ... landfall of this track
    UtcSeconds time = 0;
    double lat = 0.0;
    double lon = 0.0;
    double mslp_hpa = 0.0;
    double wind_ms = 0.0;
};

namespace detail {

struct SegPoint {
    double lat, lon;
};

inline SegPoint segment_lerp(const CandidateCenter& a, const CandidateCenter& b,
                             double f) {
    double dlon = canonical_lon(b.lon) - canonical_lon(a.lon);
    if (dlon > 180.0) dlon -= 360.0;
    if (dlon < -180.0) dlon += 360.0;
    return {a.lat + f * (b.lat - a.lat), canonical_lon(a.lon + f * dlon)};
}

}  // namespace detail

/// Ocean-to-land crossings of a track. Each segment is sampled at half the
/// land-mask cell size; a detected transition is refined by bisection so the
/// crossing fraction converges to the mask's cell boundary. Track time and
/// intensity are linearly interpolated to the crossing fraction.
inline std::vector<LandfallEvent> detect_landfalls(const Track& track,
                                                   const LandMask& landmask) {
    if (track.points.size() < 2)
        throw std::invalid_argument("detect_landfalls: track shorter than 2 points");
    std::vector<LandfallEvent> events;
    const double cell = std::min(landmask.spec.dlat, landmask.spec.dlon);
    bool on_land = landmask.land_at(track.points.front().lat,
                                    track.points.front().lon);
    for (std::size_t s = 0; s + 1 < track.points.size(); ++s) {
        const auto& a = track.points[s];
        const auto& b = track.points[s + 1];
        double dlon = canonical_lon(b.lon) - canonical_lon(a.lon);
        if (dlon > 180.0) dlon -= 360.0;
        if (dlon < -180.0) dlon += 360.0;
        const double span = std::max(std::abs(b.lat - a.lat), std::abs(dlon));
        const int n = std::max(1, static_cast<int>(std::ceil(span / (cell / 2))));
        double prev_f = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double f = static_cast<double>(k) / n;
            const auto p = detail::segment_lerp(a, b, f);
            const bool land = landmask.land_at(p.lat, p.lon);
            if (land && !on_land) {
                // Bisect [prev_f, f] down to a sliver of the segment.
                double lo = prev_f, hi = f;
                for (int it = 0; it < 40 && hi - lo > 1e-7; ++it) {
                    const double mid = (lo + hi) / 2;
                    const auto pm = detail::segment_lerp(a, b, mid);
                    if (landmask.land_at(pm.lat, pm.lon))
                        hi = mid;
                    else
                        lo = mid;
                }
                const double fc = hi;
                const auto pc = detail::segment_lerp(a, b, fc);
                LandfallEvent ev;
                ev.storm_id = track.storm_id;
                ev.source = track.source;
                ev.ordinal = static_cast<int>(events.size()) + 1;
                ev.time = a.time + static_cast<UtcSeconds>(
                                       std::llround(fc * (b.time - a.time)));
                ev.lat = pc.lat;
                ev.lon = pc.lon;
                ev.mslp_hpa = a.mslp_hpa + fc * (b.mslp_hpa - a.mslp_hpa);
                ev.wind_ms = a.peak_wind_ms + fc * (b.peak_wind_ms - a.peak_wind_ms);
                events.push_back(std::move(ev));
            }
            on_land = land;
            prev_f = f;
        }
    }
    return events;
}

enum class LandfallMode { first, next };

struct LandfallPair {
    LandfallEvent forecast;
    LandfallEvent target;
};

/// Applies the landfall filtering rules in order:
///  1. only the first landfall per track enters the comparison,
///  2. landfalls within 50 km of an earlier kept landfall are removed
///     (both lists),
///  3. forecast landfalls timestamped in [init, first_valid) are dropped,
///  4. forecast landfalls pair with a target landfall only when |dt| <= 24 h.
/// Mode `first` compares against the target's first landfall; mode `next`
/// pairs each forecast landfall with the earliest unmatched target landfall.
inline std::vector<LandfallPair> filter_landfalls(
    std::vector<LandfallEvent> forecast, std::vector<LandfallEvent> target,
    LandfallMode mode = LandfallMode::first,
    std::optional<UtcSeconds> init_time = std::nullopt,
    std::optional<UtcSeconds> track_first_valid = std::nullopt,
    double dedupe_km = 50.0, double match_window_hours = 24.0) {
    const auto by_time = [](const LandfallEvent& a, const LandfallEvent& b) {
        return a.time < b.time;
    };
    std::sort(forecast.begin(), forecast.end(), by_time);
    std::sort(target.begin(), target.end(), by_time);

    const auto first_per_track = [](std::vector<LandfallEvent>& events) {
        std::vector<LandfallEvent> kept;
        for (const auto& e : events) {
            bool seen = false;
            for (const auto& k : kept)
                if (k.storm_id == e.storm_id) {
                    seen = true;
                    break;
                }
            if (!seen) kept.push_back(e);
        }
        events = std::move(kept);
    };
    first_per_track(forecast);
    first_per_track(target);

    const auto dedupe = [&](std::vector<LandfallEvent>& events) {
        std::vector<LandfallEvent> kept;
        for (const auto& e : events) {
            bool close = false;
            for (const auto& k : kept)
                if (haversine_km(e.lat, e.lon, k.lat, k.lon) < dedupe_km) {
                    close = true;
                    break;
                }
            if (!close) kept.push_back(e);
        }
        events = std::move(kept);
    };
    dedupe(forecast);
    dedupe(target);

    if (init_time && track_first_valid) {
        std::erase_if(forecast, [&](const LandfallEvent& e) {
            return e.time >= *init_time && e.time < *track_first_valid;
        });
    }

    std::vector<LandfallPair> pairs;
    const auto window = static_cast<UtcSeconds>(match_window_hours * kSecondsPerHour);
    if (mode == LandfallMode::first) {
        if (!target.empty()) {
            const auto& tgt = target.front();
            for (const auto& f : forecast) {
                if (std::llabs(f.time - tgt.time) <= window) {
                    pairs.push_back({f, tgt});
                    break;
                }
            }
        }
    } else {
        std::vector<bool> used(target.size(), false);
        for (const auto& f : forecast) {
            for (std::size_t k = 0; k < target.size(); ++k) {
                if (used[k]) continue;
                if (std::llabs(f.time - target[k].time) <= window) {
                    used[k] = true;
                    pairs.push_back({f, target[k]});
                    break;
                }
            }
        }
    }
    return pairs;
}

struct LandfallMetrics {
    std::optional<double> pressure_mae_hpa;
    std::optional<double> wind_mae_ms;
    std::optional<double> time_me_hours;     // forecast - target, signed
    std::optional<double> displacement_km;
    int pairs = 0;
};

inline LandfallMetrics landfall_metrics(const std::vector<LandfallPair>& pairs) {
    LandfallMetrics m;
    if (pairs.empty()) return m;
    double p = 0, w = 0, t = 0, d = 0;
    for (const auto& pr : pairs) {
        p += std::abs(pr.forecast.mslp_hpa - pr.target.mslp_hpa);
        w += std::abs(pr.forecast.wind_ms - pr.target.wind_ms);
        t += static_cast<double>(pr.forecast.time - pr.target.time) / kSecondsPerHour;
        d += haversine_km(pr.forecast.lat, pr.forecast.lon, pr.target.lat,
                          pr.target.lon);
    }
    const double n = static_cast<double>(pairs.size());
    m.pressure_mae_hpa = p / n;
    m.wind_mae_ms = w / n;
    m.time_me_hours = t / n;
    m.displacement_km = d / n;
    m.pairs = static_cast<int>(pairs.size());
    return m;
}

inline void write_landfalls_csv(std::ostream& os,
                                std::span<const LandfallEvent> events) {
    os << "storm_id,source,ordinal,time,lat,lon,mslp_hpa,wind_ms\n";
    char buf[192];
    for (const auto& e : events) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%d,%s,%.4f,%.4f,%.2f,%.2f\n",
                      e.storm_id.c_str(), e.source.c_str(), e.ordinal,
                      format_iso8601(e.time).c_str(), e.lat, e.lon, e.mslp_hpa,
                      e.wind_ms);
        os << buf;
    }
}

}  // namespace ewb
