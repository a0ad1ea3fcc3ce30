#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ewb/grid.hpp"
#include "ewb/time.hpp"

namespace ewb {

/// Weighted quantile by cumulative-weight linear interpolation: samples are
/// sorted, each assigned the normalized midpoint of its weight interval, and
/// the quantile read off by interpolation (clamped beyond the extremes).
inline double weighted_quantile(std::vector<double> values,
                                std::vector<double> weights, double p) {
    if (values.empty() || values.size() != weights.size())
        throw std::invalid_argument("weighted_quantile: bad inputs");
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("weighted_quantile: p outside (0,1)");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("weighted_quantile: negative weight");
        total += w;
    }
    if (total <= 0.0)
        throw std::invalid_argument("weighted_quantile: zero total weight");
    double cum = 0.0;
    double prev_q = 0.0, prev_v = values[order.front()];
    bool first = true;
    for (std::size_t k : order) {
        const double w = weights[k];
        if (w == 0.0) continue;
        const double q = (cum + w / 2.0) / total;
        const double v = values[k];
        if (first) {
            if (p <= q) return v;
            first = false;
        } else if (p <= q) {
            const double f = (p - prev_q) / (q - prev_q);
            return prev_v + f * (v - prev_v);
        }
        prev_q = q;
        prev_v = v;
        cum += w;
    }
    return prev_v;
}

// ---------------------------------------------------------------------------
// PercentileClimatology

/// Per-gridpoint percentile of a multi-year history, bucketed by 365-day
/// day-of-year x synoptic hour (6-hourly: 1460 buckets). Feb 29 folds onto
/// Feb 28.
struct PercentileClimatology {
    GridSpec spec;
    double percentile = 0.0;
    std::vector<float> values;  // (doy*4 + hour_idx)-major, then (lat, lon)

    static constexpr int kBuckets = 365 * 4;

    std::size_t idx(int doy, int hour_idx, int i, int j) const {
        const int b = (doy - 1) * 4 + hour_idx;
        return (static_cast<std::size_t>(b) * spec.nlat + i) * spec.nlon + j;
    }
    float value(int doy, int hour_idx, int i, int j) const {
        return values[idx(doy, hour_idx, i, j)];
    }
    float value_at(UtcSeconds t, int i, int j) const {
        return value(day_of_year_365(t), synoptic_hour_index(t), i, j);
    }

    /// Serializes with the day-of-year axis standing in for time (a nominal
    /// non-leap year provides the 1460 six-hourly timestamps).
    FieldCube to_cube(const std::string& variable = "climatology") const {
        FieldCube c;
        c.spec = spec;
        c.variable = variable;
        c.units = "K";
        const UtcSeconds base = utc_from_parts(2001, 1, 1);
        c.times.reserve(kBuckets);
        for (int b = 0; b < kBuckets; ++b)
            c.times.push_back(base + static_cast<UtcSeconds>(b) * 6 * kSecondsPerHour);
        c.values = values;
        return c;
    }

    static PercentileClimatology from_cube(const FieldCube& cube,
                                           double percentile) {
        if (cube.ntime() != kBuckets || cube.nlevel() != 1)
            throw std::invalid_argument(
                "PercentileClimatology: cube must carry 1460 six-hourly entries");
        PercentileClimatology p;
        p.spec = cube.spec;
        p.percentile = percentile;
        p.values = cube.values;
        return p;
    }

    /// Constant climatology, handy for synthetic cases.
    static PercentileClimatology constant(const GridSpec& spec, double percentile,
                                          float value) {
        PercentileClimatology p;
        p.spec = spec;
        p.percentile = percentile;
        p.values.assign(static_cast<std::size_t>(kBuckets) * spec.size(), value);
        return p;
    }
};

/// Builds the percentile climatology from a 6-hourly history. Samples within
/// +-half_window_days of the target day-of-year enter with triangular decay
/// weight w(d) = max(0, 1 - |d|/half_window_days), at matching synoptic hour.
inline PercentileClimatology build_percentile_climatology(
    const FieldCube& history, double percentile, int half_window_days = 21) {
    history.validate();
    if (!(percentile > 0.0 && percentile < 1.0))
        throw std::invalid_argument("percentile outside (0,1)");
    if (history.nlevel() != 1)
        throw std::invalid_argument("climatology history must be a surface cube");
    if (history.cadence_seconds() != 6 * kSecondsPerHour)
        throw std::invalid_argument("climatology history must be 6-hourly");
    if (history.times.back() - history.times.front() < 730 * kSecondsPerDay)
        throw std::invalid_argument("climatology history must cover >= 2 years");

    const int nt = history.ntime();
    std::vector<int> doy(nt), hidx(nt);
    for (int t = 0; t < nt; ++t) {
        doy[t] = day_of_year_365(history.times[t]);
        hidx[t] = synoptic_hour_index(history.times[t]);
    }

    PercentileClimatology clim;
    clim.spec = history.spec;
    clim.percentile = percentile;
    clim.values.resize(static_cast<std::size_t>(PercentileClimatology::kBuckets) *
                       history.spec.size());

    // Bucket the time axis once; each bucket then reduces per gridpoint.
    std::vector<double> vals, wts;
    for (int target_doy = 1; target_doy <= 365; ++target_doy) {
        for (int h = 0; h < 4; ++h) {
            std::vector<std::pair<int, double>> picks;
            for (int t = 0; t < nt; ++t) {
                if (hidx[t] != h) continue;
                const int d = doy_distance(doy[t], target_doy);
                if (d >= half_window_days) continue;
                picks.emplace_back(t, 1.0 - static_cast<double>(d) / half_window_days);
            }
            if (picks.empty())
                throw std::invalid_argument(
                    "climatology history leaves empty day-of-year buckets");
            const std::size_t base =
                clim.idx(target_doy, h, 0, 0);
            for (int i = 0; i < history.spec.nlat; ++i) {
                for (int j = 0; j < history.spec.nlon; ++j) {
                    vals.clear();
                    wts.clear();
                    for (const auto& [t, w] : picks) {
                        vals.push_back(history.at(t, 0, i, j));
                        wts.push_back(w);
                    }
                    clim.values[base + history.spec.idx(i, j)] =
                        static_cast<float>(weighted_quantile(vals, wts, percentile));
                }
            }
        }
    }
    return clim;
}

// ---------------------------------------------------------------------------
// Daily qualification and run lengths

/// Per-gridpoint, per-UTC-day boolean qualification table.
struct DailyFlags {
    GridSpec spec;
    std::vector<std::int64_t> days;      // consecutive UTC day indices
    std::vector<std::uint8_t> flags;     // day-major (day, lat, lon)

    bool at(int d, int i, int j) const {
        return flags[(static_cast<std::size_t>(d) * spec.nlat + i) * spec.nlon + j] != 0;
    }
    int nday() const { return static_cast<int>(days.size()); }
};

namespace detail {

template <typename SampleQualifies>
DailyFlags daily_flags(const FieldCube& temp, bool any_sample,
                       SampleQualifies&& qualifies) {
    temp.validate();
    if (temp.cadence_seconds() != 6 * kSecondsPerHour)
        throw std::invalid_argument("detector: temperature cadence must be 6-hourly");
    DailyFlags out;
    out.spec = temp.spec;
    const std::int64_t d0 = utc_day_index(temp.times.front());
    const std::int64_t d1 = utc_day_index(temp.times.back());
    for (std::int64_t d = d0; d <= d1; ++d) out.days.push_back(d);
    out.flags.assign(out.days.size() * temp.spec.size(), any_sample ? 0 : 1);
    for (int t = 0; t < temp.ntime(); ++t) {
        const int d = static_cast<int>(utc_day_index(temp.times[t]) - d0);
        for (int i = 0; i < temp.spec.nlat; ++i) {
            for (int j = 0; j < temp.spec.nlon; ++j) {
                const bool q = qualifies(t, i, j);
                auto& f = out.flags[(static_cast<std::size_t>(d) * temp.spec.nlat + i) *
                                        temp.spec.nlon + j];
                if (any_sample) {
                    if (q) f = 1;
                } else {
                    if (!q) f = 0;
                }
            }
        }
    }
    return out;
}

}  // namespace detail

/// A day qualifies when any 6-hourly sample exceeds the 85th-percentile value
/// for its (day-of-year, synoptic hour) bucket.
inline DailyFlags heatwave_daily_flags(const FieldCube& temp,
                                       const PercentileClimatology& clim85) {
    if (!temp.spec.same_geometry(clim85.spec))
        throw std::invalid_argument("heatwave: climatology not co-gridded");
    return detail::daily_flags(temp, true, [&](int t, int i, int j) {
        return temp.at(t, 0, i, j) > clim85.value_at(temp.times[t], i, j);
    });
}

/// A day qualifies when any sample is both below freezing (273.15 K) and
/// below the 15th-percentile climatology.
inline DailyFlags freeze_daily_flags(const FieldCube& temp,
                                     const PercentileClimatology& clim15,
                                     double freezing_k = 273.15) {
    if (!temp.spec.same_geometry(clim15.spec))
        throw std::invalid_argument("freeze: climatology not co-gridded");
    return detail::daily_flags(temp, true, [&](int t, int i, int j) {
        const float v = temp.at(t, 0, i, j);
        return v < freezing_k && v < clim15.value_at(temp.times[t], i, j);
    });
}

/// A day qualifies when every sample stays inside [clim16, clim84].
inline DailyFlags marginal_daily_flags(const FieldCube& temp,
                                       const PercentileClimatology& clim16,
                                       const PercentileClimatology& clim84) {
    if (!temp.spec.same_geometry(clim16.spec) ||
        !temp.spec.same_geometry(clim84.spec))
        throw std::invalid_argument("marginal: climatology not co-gridded");
    return detail::daily_flags(temp, false, [&](int t, int i, int j) {
        const float v = temp.at(t, 0, i, j);
        return v >= clim16.value_at(temp.times[t], i, j) &&
               v <= clim84.value_at(temp.times[t], i, j);
    });
}

/// Longest run per gridpoint, in days. Qualifying days separated by a single
/// non-qualifying day (a 24 h gap) chain together; the bridged day counts
/// toward the run length. Two consecutive non-qualifying days break the run.
struct RunGrid {
    GridSpec spec;
    std::vector<int> run_days;
    std::vector<std::int64_t> run_first_day;  // UTC day index of run start
    std::vector<std::int64_t> run_last_day;

    int at(int i, int j) const { return run_days[spec.idx(i, j)]; }
};

inline RunGrid longest_runs(const DailyFlags& dq, int max_gap_days = 1) {
    RunGrid out;
    out.spec = dq.spec;
    out.run_days.assign(dq.spec.size(), 0);
    out.run_first_day.assign(dq.spec.size(), 0);
    out.run_last_day.assign(dq.spec.size(), 0);
    for (int i = 0; i < dq.spec.nlat; ++i) {
        for (int j = 0; j < dq.spec.nlon; ++j) {
            int best = 0;
            std::int64_t best_first = 0, best_last = 0;
            int chain_start = -1, last_q = -1;
            for (int d = 0; d <= dq.nday(); ++d) {
                const bool q = d < dq.nday() && dq.at(d, i, j);
                if (q) {
                    if (chain_start < 0 || d - last_q > max_gap_days + 1) chain_start = d;
                    last_q = d;
                    const int len = last_q - chain_start + 1;
                    if (len > best) {
                        best = len;
                        best_first = dq.days[chain_start];
                        best_last = dq.days[last_q];
                    }
                } else if (last_q >= 0 && d - last_q > max_gap_days) {
                    chain_start = -1;
                }
            }
            const auto k = dq.spec.idx(i, j);
            out.run_days[k] = best;
            out.run_first_day[k] = best_first;
            out.run_last_day[k] = best_last;
        }
    }
    return out;
}

inline RunGrid detect_heatwave_days(const FieldCube& temp,
                                    const PercentileClimatology& clim85) {
    return longest_runs(heatwave_daily_flags(temp, clim85));
}

inline RunGrid detect_freeze_days(const FieldCube& temp,
                                  const PercentileClimatology& clim15) {
    return longest_runs(freeze_daily_flags(temp, clim15));
}

// ---------------------------------------------------------------------------
// Bounding-box growth

namespace detail {

struct IndexWindow {
    int i0, i1, j0, j1;  // inclusive, j in the grid's unwrapped frame
};

inline IndexWindow index_window(const GridSpec& spec, const Region& region,
                                double seed_lon) {
    IndexWindow w{spec.nlat, -1, spec.nlon, -1};
    for (int i = 0; i < spec.nlat; ++i) {
        const double la = spec.lat(i);
        if (la >= region.lat_min - 1e-9 && la <= region.lat_max + 1e-9) {
            w.i0 = std::min(w.i0, i);
            w.i1 = std::max(w.i1, i);
        }
    }
    // Work in an unwrapped longitude frame anchored near the seed.
    double off = std::round((seed_lon - spec.lon0) / 360.0) * 360.0;
    for (int j = 0; j < spec.nlon; ++j) {
        const double lo = spec.lon0 + j * spec.dlon + off;
        if (lo >= region.lon_min - 1e-9 && lo <= region.lon_max + 1e-9) {
            w.j0 = std::min(w.j0, j);
            w.j1 = std::max(w.j1, j);
        }
    }
    if (w.i1 < w.i0 || w.j1 < w.j0)
        throw std::runtime_error("bounding box contains no gridpoints");
    return w;
}

}  // namespace detail

/// Grows a 1-degree seed box outward: each iteration (edge order N, S, E, W,
/// evaluated against the iteration-start box) extends every edge whose
/// boundary row/column has >= 50% qualifying gridpoints by 1 degree, until no
/// edge extends. The fraction counts land points only when a mask is given.
/// Growth starts only when a majority of the seed box qualifies.
inline Region grow_bounding_box(const LatLon& seed, const RunGrid& runs,
                                int min_run = 3,
                                const LandMask* landmask = nullptr) {
    const GridSpec& spec = runs.spec;
    const auto seed_ij = spec.nearest(seed.lat, seed.lon);
    if (!seed_ij) throw std::invalid_argument("grow_bounding_box: seed off grid");
    if (runs.at(seed_ij->first, seed_ij->second) < min_run)
        throw std::invalid_argument("grow_bounding_box: seed does not qualify");
    if (landmask && !landmask->spec.same_geometry(spec))
        throw std::invalid_argument("grow_bounding_box: landmask not co-gridded");

    const auto qualifies = [&](int i, int j) {
        return runs.run_days[spec.idx(i, j)] >= min_run;
    };
    const auto counts = [&](int i, int j) {
        return !landmask || landmask->land(i, j);
    };
    const auto edge_fraction_ok = [&](int i_lo, int i_hi, int j_lo, int j_hi) {
        int total = 0, good = 0;
        for (int i = i_lo; i <= i_hi; ++i) {
            for (int j = j_lo; j <= j_hi; ++j) {
                const int jj = ((j % spec.nlon) + spec.nlon) % spec.nlon;
                if (!counts(i, jj)) continue;
                ++total;
                if (qualifies(i, jj)) ++good;
            }
        }
        return total > 0 && 2 * good >= total;
    };

    Region region{seed.lat - 0.5, seed.lat + 0.5, seed.lon - 0.5, seed.lon + 0.5};
    const double grid_lat_min = spec.lat(0);
    const double grid_lat_max = spec.lat(spec.nlat - 1);

    // Growth starts only when a strict majority of the seed box qualifies;
    // otherwise the 1-degree seed box is returned as-is.
    auto window = detail::index_window(spec, region, seed.lon);
    {
        int total = 0, good = 0;
        for (int i = window.i0; i <= window.i1; ++i)
            for (int j = window.j0; j <= window.j1; ++j) {
                const int jj = ((j % spec.nlon) + spec.nlon) % spec.nlon;
                if (!counts(i, jj)) continue;
                ++total;
                if (qualifies(i, jj)) ++good;
            }
        if (total == 0 || 2 * good <= total) return region;
    }

    const bool global_lon = spec.is_global_lon();
    for (;;) {
        window = detail::index_window(spec, region, seed.lon);
        const bool east_open =
            (global_lon ? region.lon_max - region.lon_min < 360.0
                        : window.j1 < spec.nlon - 1);
        const bool west_open =
            (global_lon ? region.lon_max - region.lon_min < 360.0
                        : window.j0 > 0);
        bool grew = false;
        // North
        if (region.lat_max < grid_lat_max &&
            edge_fraction_ok(window.i1, window.i1, window.j0, window.j1)) {
            region.lat_max = std::min(region.lat_max + 1.0, grid_lat_max);
            grew = true;
        }
        // South
        if (region.lat_min > grid_lat_min &&
            edge_fraction_ok(window.i0, window.i0, window.j0, window.j1)) {
            region.lat_min = std::max(region.lat_min - 1.0, grid_lat_min);
            grew = true;
        }
        // East
        if (east_open && edge_fraction_ok(window.i0, window.i1, window.j1, window.j1)) {
            region.lon_max += 1.0;
            grew = true;
        }
        // West
        if (west_open && edge_fraction_ok(window.i0, window.i1, window.j0, window.j0)) {
            region.lon_min -= 1.0;
            grew = true;
        }
        if (region.lon_max - region.lon_min > 360.0) {
            const double mid = (region.lon_max + region.lon_min) / 2;
            region.lon_min = mid - 180.0;
            region.lon_max = mid + 180.0;
        }
        if (!grew) break;
    }
    if (!global_lon) {
        const double lon_lo = spec.lon0 +
            std::round((seed.lon - spec.lon0) / 360.0) * 360.0;
        const double lon_hi = lon_lo + (spec.nlon - 1) * spec.dlon;
        region.lon_min = std::max(region.lon_min, lon_lo - spec.dlon / 2);
        region.lon_max = std::min(region.lon_max, lon_hi + spec.dlon / 2);
    }
    return region;
}

// ---------------------------------------------------------------------------
// Marginal-temperature regions

enum class EventType {
    heat_wave,
    freeze,
    marginal_temp,
    severe,
    marginal_severe,
    atmospheric_river,
    tropical_cyclone,
};

inline std::string to_string(EventType t) {
    switch (t) {
        case EventType::heat_wave: return "heat_wave";
        case EventType::freeze: return "freeze";
        case EventType::marginal_temp: return "marginal_temp";
        case EventType::severe: return "severe";
        case EventType::marginal_severe: return "marginal_severe";
        case EventType::atmospheric_river: return "atmospheric_river";
        case EventType::tropical_cyclone: return "tropical_cyclone";
    }
    throw std::logic_error("unknown event type");
}

inline EventType event_type_from_string(const std::string& s) {
    for (auto t : {EventType::heat_wave, EventType::freeze,
                   EventType::marginal_temp, EventType::severe,
                   EventType::marginal_severe, EventType::atmospheric_river,
                   EventType::tropical_cyclone})
        if (to_string(t) == s) return t;
    throw std::invalid_argument("unknown event type: " + s);
}

struct EventCase {
    std::string id;
    EventType type = EventType::marginal_temp;
    Region region;
    UtcSeconds start = 0;
    UtcSeconds end = 0;
    GridSpec spec;                    // geometry of qualifying_days
    std::vector<int> qualifying_days; // per-gridpoint longest run, case bbox
};

struct MarginalParams {
    int min_days = 5;
    double min_area_km2 = 200000.0;
    double antarctica_lat_cut = -60.0;  // points poleward are excluded
};

/// Finds land regions where temperature stays inside the 16th-84th percentile
/// band for at least min_days, keeping connected components whose summed cell
/// area exceeds min_area_km2.
inline std::vector<EventCase> detect_marginal_regions(
    const FieldCube& temp, const PercentileClimatology& clim16,
    const PercentileClimatology& clim84, const LandMask* landmask = nullptr,
    const MarginalParams& params = {}) {
    const auto flags = marginal_daily_flags(temp, clim16, clim84);
    // A band violation resets the run outright: no gap allowance here.
    const auto runs = longest_runs(flags, 0);
    const GridSpec& spec = temp.spec;

    std::vector<std::uint8_t> persistent(spec.size(), 0);
    for (int i = 0; i < spec.nlat; ++i) {
        if (spec.lat(i) < params.antarctica_lat_cut) continue;
        for (int j = 0; j < spec.nlon; ++j) {
            if (landmask && !landmask->land(i, j)) continue;
            if (runs.at(i, j) >= params.min_days) persistent[spec.idx(i, j)] = 1;
        }
    }

    const auto cc = connected_components(persistent, spec, 8);
    std::vector<double> area(cc.count, 0.0);
    for (int i = 0; i < spec.nlat; ++i)
        for (int j = 0; j < spec.nlon; ++j) {
            const auto label = cc.labels[spec.idx(i, j)];
            if (label > 0) area[label - 1] += cell_area_km2(spec.lat(i), spec);
        }

    std::vector<EventCase> cases;
    for (int label = 1; label <= cc.count; ++label) {
        if (area[label - 1] <= params.min_area_km2) continue;
        int i0 = spec.nlat, i1 = -1, j0 = spec.nlon, j1 = -1;
        std::int64_t first_day = std::numeric_limits<std::int64_t>::max();
        std::int64_t last_day = std::numeric_limits<std::int64_t>::min();
        for (int i = 0; i < spec.nlat; ++i)
            for (int j = 0; j < spec.nlon; ++j) {
                const auto k = spec.idx(i, j);
                if (cc.labels[k] != label) continue;
                i0 = std::min(i0, i);
                i1 = std::max(i1, i);
                j0 = std::min(j0, j);
                j1 = std::max(j1, j);
                first_day = std::min(first_day, runs.run_first_day[k]);
                last_day = std::max(last_day, runs.run_last_day[k]);
            }
        EventCase ec;
        ec.id = "marginal_" + std::to_string(cases.size() + 1);
        ec.type = EventType::marginal_temp;
        ec.region = Region{spec.lat(i0) - spec.dlat / 2, spec.lat(i1) + spec.dlat / 2,
                           spec.lon(j0) - spec.dlon / 2, spec.lon(j1) + spec.dlon / 2};
        ec.start = first_day * kSecondsPerDay;
        ec.end = (last_day + 1) * kSecondsPerDay;
        ec.spec = spec;
        ec.spec.lat0 = spec.lat(i0);
        ec.spec.lon0 = spec.lon(j0);
        ec.spec.nlat = i1 - i0 + 1;
        ec.spec.nlon = j1 - j0 + 1;
        ec.qualifying_days.resize(ec.spec.size());
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j)
                ec.qualifying_days[ec.spec.idx(i - i0, j - j0)] =
                    cc.labels[spec.idx(i, j)] == label ? runs.at(i, j) : 0;
        cases.push_back(std::move(ec));
    }
    return cases;
}

}  // namespace ewb
