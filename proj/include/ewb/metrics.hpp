#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ewb/grid.hpp"
#include "ewb/time.hpp"

namespace ewb {

inline double mae(std::span<const double> f, std::span<const double> o) {
    if (f.empty() || f.size() != o.size())
        throw std::invalid_argument("mae: empty or mismatched inputs");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += std::abs(f[i] - o[i]);
    return acc / static_cast<double>(f.size());
}

inline double rmse(std::span<const double> f, std::span<const double> o) {
    if (f.empty() || f.size() != o.size())
        throw std::invalid_argument("rmse: empty or mismatched inputs");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        acc += (f[i] - o[i]) * (f[i] - o[i]);
    return std::sqrt(acc / static_cast<double>(f.size()));
}

/// Intersection over union of boolean masks; undefined when both are empty.
inline std::optional<double> iou(std::span<const std::uint8_t> a,
                                 std::span<const std::uint8_t> b) {
    if (a.size() != b.size()) throw std::invalid_argument("iou: shape mismatch");
    std::int64_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const bool pa = a[k] != 0, pb = b[k] != 0;
        inter += pa && pb;
        uni += pa || pb;
    }
    if (uni == 0) return std::nullopt;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

struct Displacement {
    double degrees_planar = 0.0;  // sqrt(dlat^2 + dlon^2), lon wrapped
    double km_haversine = 0.0;
};

inline Displacement spatial_displacement(const LatLon& pred, const LatLon& obs) {
    double dlon = canonical_lon(pred.lon) - canonical_lon(obs.lon);
    if (dlon > 180.0) dlon -= 360.0;
    if (dlon < -180.0) dlon += 360.0;
    const double dlat = pred.lat - obs.lat;
    return {std::sqrt(dlat * dlat + dlon * dlon),
            haversine_km(pred.lat, pred.lon, obs.lat, obs.lon)};
}

/// Lead = predicted start day - actual start day; negative means the event
/// was signalled early.
inline int lead_time_days(UtcSeconds predicted_start, UtcSeconds actual_start) {
    return static_cast<int>(utc_day_index(predicted_start) -
                            utc_day_index(actual_start));
}

// ---------------------------------------------------------------------------
// Relaxed regional MAE family

enum class Extreme { maximum, minimum };

struct RelaxedMae {
    std::optional<double> value;
    int points = 0;           // gridpoints contributing
    bool truncated = false;   // some relaxation window hit the cube boundary
};

/// Per gridpoint: |extreme of forecast samples within +-relax_hours of the
/// observed extreme's valid time - observed extreme|, averaged over (land)
/// gridpoints. Gridpoints weigh equally by default; area_weighted switches
/// to cell-area weights.
inline RelaxedMae rmae_extreme(const FieldCube& forecast, const FieldCube& obs,
                               Extreme which, double relax_hours = 24.0,
                               const LandMask* landmask = nullptr,
                               bool area_weighted = false) {
    if (!forecast.spec.same_geometry(obs.spec))
        throw std::invalid_argument("rmae: cubes not co-gridded");
    if (landmask && !landmask->spec.same_geometry(obs.spec))
        throw std::invalid_argument("rmae: landmask not co-gridded");
    const double sign = which == Extreme::maximum ? 1.0 : -1.0;
    RelaxedMae out;
    double acc = 0.0, wsum = 0.0;
    const auto relax = static_cast<UtcSeconds>(relax_hours * kSecondsPerHour);
    for (int i = 0; i < obs.spec.nlat; ++i) {
        const double w = area_weighted ? cell_area_km2(obs.spec.lat(i), obs.spec)
                                       : 1.0;
        for (int j = 0; j < obs.spec.nlon; ++j) {
            if (landmask && !landmask->land(i, j)) continue;
            double o_best = -std::numeric_limits<double>::infinity();
            UtcSeconds o_t = obs.times.front();
            for (int t = 0; t < obs.ntime(); ++t) {
                const double v = sign * obs.at(t, 0, i, j);
                if (v > o_best) {
                    o_best = v;
                    o_t = obs.times[t];
                }
            }
            double f_best = -std::numeric_limits<double>::infinity();
            bool any = false;
            for (int t = 0; t < forecast.ntime(); ++t) {
                if (forecast.times[t] < o_t - relax || forecast.times[t] > o_t + relax)
                    continue;
                any = true;
                f_best = std::max(f_best, sign * forecast.at(t, 0, i, j));
            }
            if (!any) continue;
            if (o_t - relax < forecast.times.front() ||
                o_t + relax > forecast.times.back())
                out.truncated = true;
            acc += w * std::abs(f_best - o_best);
            wsum += w;
            ++out.points;
        }
    }
    if (out.points > 0 && wsum > 0) out.value = acc / wsum;
    return out;
}

inline RelaxedMae rmae_max(const FieldCube& forecast, const FieldCube& obs,
                           double relax_hours = 24.0,
                           const LandMask* landmask = nullptr) {
    return rmae_extreme(forecast, obs, Extreme::maximum, relax_hours, landmask);
}

/// Per gridpoint: the event maximum of daily-minimum temperature, compared
/// with +-relax_days of alignment freedom on the forecast around the observed
/// peak day.
inline RelaxedMae rmae_maxdailymin(const FieldCube& forecast,
                                   const FieldCube& obs, int relax_days = 1,
                                   const LandMask* landmask = nullptr,
                                   bool area_weighted = false) {
    if (!forecast.spec.same_geometry(obs.spec))
        throw std::invalid_argument("rmae: cubes not co-gridded");
    const auto daily_min = [](const FieldCube& c, int i, int j,
                              std::vector<std::int64_t>& days,
                              std::vector<double>& mins) {
        days.clear();
        mins.clear();
        for (int t = 0; t < c.ntime(); ++t) {
            const std::int64_t d = utc_day_index(c.times[t]);
            if (days.empty() || days.back() != d) {
                days.push_back(d);
                mins.push_back(c.at(t, 0, i, j));
            } else {
                mins.back() = std::min(mins.back(),
                                       static_cast<double>(c.at(t, 0, i, j)));
            }
        }
    };
    RelaxedMae out;
    double acc = 0.0, wsum = 0.0;
    std::vector<std::int64_t> od, fd;
    std::vector<double> om, fm;
    for (int i = 0; i < obs.spec.nlat; ++i) {
        const double w = area_weighted ? cell_area_km2(obs.spec.lat(i), obs.spec)
                                       : 1.0;
        for (int j = 0; j < obs.spec.nlon; ++j) {
            if (landmask && !landmask->land(i, j)) continue;
            daily_min(obs, i, j, od, om);
            daily_min(forecast, i, j, fd, fm);
            if (om.empty() || fm.empty()) continue;
            std::size_t peak = 0;
            for (std::size_t d = 1; d < om.size(); ++d)
                if (om[d] > om[peak]) peak = d;
            const std::int64_t peak_day = od[peak];
            double f_best = -std::numeric_limits<double>::infinity();
            bool any = false;
            for (std::size_t d = 0; d < fm.size(); ++d) {
                if (std::abs(fd[d] - peak_day) > relax_days) continue;
                any = true;
                f_best = std::max(f_best, fm[d]);
            }
            if (!any) continue;
            if (peak_day - relax_days < fd.front() || peak_day + relax_days > fd.back())
                out.truncated = true;
            acc += w * std::abs(f_best - om[peak]);
            wsum += w;
            ++out.points;
        }
    }
    if (out.points > 0 && wsum > 0) out.value = acc / wsum;
    return out;
}

// ---------------------------------------------------------------------------
// MetricRecord tables

/// One row of a result table. Undefined metrics carry no value; they are
/// never encoded as sentinel numbers.
struct MetricRecord {
    std::string model;
    std::string case_id;
    UtcSeconds init_time = 0;
    int lead_hours = 0;
    std::string metric;
    std::optional<double> value;
    std::string units;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void check_finite(const MetricRecord& r) {
    if (r.value && !std::isfinite(*r.value))
        throw std::invalid_argument(
            "metric '" + r.metric +
            "' carries a non-finite value; undefined metrics must be flagged");
}

}  // namespace detail

inline void write_records_csv(std::ostream& os,
                              std::span<const MetricRecord> records) {
    os << "model,case,init_time,lead_hours,metric,value,units,undefined\n";
    for (const auto& r : records) {
        detail::check_finite(r);
        os << r.model << ',' << r.case_id << ',' << format_iso8601(r.init_time)
           << ',' << r.lead_hours << ',' << r.metric << ',';
        if (r.value) os << detail::format_double(*r.value);
        os << ',' << r.units << ',' << (r.value ? "false" : "true") << '\n';
    }
}

inline void write_records_jsonl(std::ostream& os,
                                std::span<const MetricRecord> records) {
    for (const auto& r : records) {
        detail::check_finite(r);
        nlohmann::ordered_json j;
        j["model"] = r.model;
        j["case"] = r.case_id;
        j["init_time"] = format_iso8601(r.init_time);
        j["lead_hours"] = r.lead_hours;
        j["metric"] = r.metric;
        if (r.value)
            j["value"] = *r.value;
        else
            j["value"] = nullptr;
        j["units"] = r.units;
        j["undefined"] = !r.value.has_value();
        os << j.dump() << '\n';
    }
}

inline std::vector<MetricRecord> read_records_csv(std::istream& is) {
    std::vector<MetricRecord> out;
    std::string line;
    if (!std::getline(is, line)) return out;
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
        if (cols.size() != 8)
            throw std::runtime_error("metric CSV: expected 8 columns");
        MetricRecord r;
        r.model = cols[0];
        r.case_id = cols[1];
        r.init_time = parse_iso8601(cols[2]);
        r.lead_hours = std::stoi(cols[3]);
        r.metric = cols[4];
        if (!cols[5].empty()) r.value = std::stod(cols[5]);
        r.units = cols[6];
        if (cols[7] == "true" && r.value)
            throw std::runtime_error("metric CSV: undefined row carries a value");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace ewb
