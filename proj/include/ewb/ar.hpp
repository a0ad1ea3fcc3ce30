#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ewb/grid.hpp"
#include "ewb/metrics.hpp"
#include "ewb/time.hpp"

namespace ewb {

inline constexpr double kGravity = 9.80665;  // m/s^2

/// Column-integrated vapor transport at one valid time.
struct IvtField {
    GridSpec spec;
    UtcSeconds time = 0;
    std::vector<float> ivt;    // magnitude, kg m^-1 s^-1
    std::vector<float> ivt_u;
    std::vector<float> ivt_v;
};

struct ArParams {
    double ivt_threshold = 400.0;        // kg m^-1 s^-1
    double laplacian_threshold = 2.5;    // field units per km^2, |.| tested
    int laplacian_search_radius = 8;     // grid points, Euclidean
    int min_points = 500;
    double tropics_exclusion_lat = 20.0; // objects with |lat of centre| below are dropped
};

struct ArObject {
    int id = 0;
    UtcSeconds time = 0;
    std::vector<std::uint8_t> members;       // full-grid mask
    std::vector<std::uint8_t> land_members;  // members & land
    std::int64_t size = 0;
    std::int64_t land_size = 0;
    LatLon center;
    std::optional<LatLon> land_center;
};

/// IVT components from specific humidity and winds: (1/g) |integral q*u dp|
/// by the trapezoidal rule over pressure in Pa, surface level first.
inline std::vector<IvtField> compute_ivt(const FieldCube& q, const FieldCube& u,
                                         const FieldCube& v) {
    q.validate();
    u.validate();
    v.validate();
    if (!q.spec.same_geometry(u.spec) || !q.spec.same_geometry(v.spec) ||
        q.times != u.times || q.times != v.times ||
        q.levels_hpa != u.levels_hpa || q.levels_hpa != v.levels_hpa)
        throw std::invalid_argument("compute_ivt: mismatched cube axes");
    if (q.levels_hpa.size() < 3)
        throw std::invalid_argument("compute_ivt: need at least 3 levels");

    // Integrate from the lowest provided level up to 200 hPa.
    std::vector<int> levels;
    for (int l = 0; l < q.nlevel(); ++l)
        if (q.levels_hpa[l] >= 200.0 - 1e-9) levels.push_back(l);
    if (levels.size() < 2)
        throw std::invalid_argument("compute_ivt: no usable levels above 200 hPa");

    std::vector<IvtField> out;
    out.reserve(q.ntime());
    for (int t = 0; t < q.ntime(); ++t) {
        IvtField f;
        f.spec = q.spec;
        f.time = q.times[t];
        f.ivt.resize(q.spec.size());
        f.ivt_u.resize(q.spec.size());
        f.ivt_v.resize(q.spec.size());
        for (int i = 0; i < q.spec.nlat; ++i) {
            for (int j = 0; j < q.spec.nlon; ++j) {
                double su = 0.0, sv = 0.0;
                for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
                    const int la = levels[k], lb = levels[k + 1];
                    const double dp = (q.levels_hpa[la] - q.levels_hpa[lb]) * 100.0;
                    const double qu0 = static_cast<double>(q.at(t, la, i, j)) * u.at(t, la, i, j);
                    const double qu1 = static_cast<double>(q.at(t, lb, i, j)) * u.at(t, lb, i, j);
                    const double qv0 = static_cast<double>(q.at(t, la, i, j)) * v.at(t, la, i, j);
                    const double qv1 = static_cast<double>(q.at(t, lb, i, j)) * v.at(t, lb, i, j);
                    su += 0.5 * (qu0 + qu1) * dp;
                    sv += 0.5 * (qv0 + qv1) * dp;
                }
                const double iu = std::abs(su) / kGravity;
                const double iv = std::abs(sv) / kGravity;
                const auto k = q.spec.idx(i, j);
                f.ivt_u[k] = static_cast<float>(iu);
                f.ivt_v[k] = static_cast<float>(iv);
                f.ivt[k] = static_cast<float>(std::hypot(iu, iv));
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

namespace detail {

/// Dilates a boolean grid by a Euclidean disc of the given radius (in grid
/// points), wrapping longitude on global grids. Row prefix sums give O(r)
/// work per cell.
inline std::vector<std::uint8_t> dilate_disc(std::span<const std::uint8_t> mask,
                                             const GridSpec& spec, int radius) {
    const bool wrap = spec.is_global_lon();
    const int n = spec.nlon;
    std::vector<std::int32_t> prefix(static_cast<std::size_t>(spec.nlat) * (n + 1));
    for (int i = 0; i < spec.nlat; ++i) {
        auto* row = prefix.data() + static_cast<std::size_t>(i) * (n + 1);
        row[0] = 0;
        for (int j = 0; j < n; ++j)
            row[j + 1] = row[j] + (mask[spec.idx(i, j)] ? 1 : 0);
    }
    const auto row_any = [&](int i, int j_lo, int j_hi) {
        const auto* row = prefix.data() + static_cast<std::size_t>(i) * (n + 1);
        const int total = row[n];
        if (!wrap) {
            j_lo = std::max(j_lo, 0);
            j_hi = std::min(j_hi, n - 1);
            if (j_lo > j_hi) return false;
            return row[j_hi + 1] - row[j_lo] > 0;
        }
        if (j_hi - j_lo + 1 >= n) return total > 0;
        j_lo = ((j_lo % n) + n) % n;
        j_hi = ((j_hi % n) + n) % n;
        if (j_lo <= j_hi) return row[j_hi + 1] - row[j_lo] > 0;
        return (row[n] - row[j_lo]) + row[j_hi + 1] > 0;
    };
    std::vector<std::uint8_t> out(mask.size(), 0);
    std::vector<int> half(radius + 1);
    for (int di = 0; di <= radius; ++di)
        half[di] = static_cast<int>(std::floor(
            std::sqrt(static_cast<double>(radius) * radius - static_cast<double>(di) * di)));
    for (int i = 0; i < spec.nlat; ++i) {
        for (int j = 0; j < spec.nlon; ++j) {
            bool hit = false;
            for (int di = -radius; di <= radius && !hit; ++di) {
                const int ii = i + di;
                if (ii < 0 || ii >= spec.nlat) continue;
                const int w = half[std::abs(di)];
                hit = row_any(ii, j - w, j + w);
            }
            if (hit) out[spec.idx(i, j)] = 1;
        }
    }
    return out;
}

}  // namespace detail

/// AR objects at one valid time. A gridpoint is a candidate when its IVT
/// meets the threshold and some point within the search radius carries a
/// Laplacian magnitude at or above the Laplacian threshold. Candidates form
/// 8-connected components; small components and components whose centre of
/// mass sits equatorward of the latitude filter are dropped.
inline std::vector<ArObject> detect_ar_objects(const IvtField& ivt,
                                               const ArParams& params,
                                               const LandMask& landmask) {
    if (!landmask.spec.same_geometry(ivt.spec))
        throw std::invalid_argument("detect_ar_objects: landmask not co-gridded");
    const GridSpec& spec = ivt.spec;
    const auto lap = laplacian(ivt.ivt, spec);
    std::vector<std::uint8_t> high_lap(spec.size(), 0);
    for (std::size_t k = 0; k < lap.size(); ++k)
        if (std::abs(lap[k]) >= params.laplacian_threshold) high_lap[k] = 1;
    const auto near_lap =
        detail::dilate_disc(high_lap, spec, params.laplacian_search_radius);

    std::vector<std::uint8_t> candidate(spec.size(), 0);
    for (std::size_t k = 0; k < candidate.size(); ++k)
        if (ivt.ivt[k] >= params.ivt_threshold && near_lap[k]) candidate[k] = 1;

    const auto cc = connected_components(candidate, spec, 8);
    std::vector<ArObject> out;
    for (int label = 1; label <= cc.count; ++label) {
        if (cc.sizes[label - 1] < params.min_points) continue;
        ArObject obj;
        obj.time = ivt.time;
        obj.members.assign(spec.size(), 0);
        obj.land_members.assign(spec.size(), 0);
        for (std::size_t k = 0; k < candidate.size(); ++k) {
            if (cc.labels[k] != label) continue;
            obj.members[k] = 1;
            ++obj.size;
            if (landmask.mask[k]) {
                obj.land_members[k] = 1;
                ++obj.land_size;
            }
        }
        obj.center = center_of_mass(std::span<const std::uint8_t>(obj.members), spec);
        if (std::abs(obj.center.lat) < params.tropics_exclusion_lat) continue;
        if (obj.land_size > 0)
            obj.land_center =
                center_of_mass(std::span<const std::uint8_t>(obj.land_members), spec);
        obj.id = static_cast<int>(out.size()) + 1;
        out.push_back(std::move(obj));
    }
    return out;
}

/// True when any object's land intersection touches the region (or any land
/// at all when no region is given).
inline bool ar_intersects_land(const std::vector<ArObject>& objects,
                               const GridSpec& spec,
                               const Region* region = nullptr) {
    for (const auto& obj : objects) {
        if (obj.land_size == 0) continue;
        if (!region) return true;
        for (int i = 0; i < spec.nlat; ++i)
            for (int j = 0; j < spec.nlon; ++j)
                if (obj.land_members[spec.idx(i, j)] &&
                    region->contains(spec.lat(i), spec.lon(j)))
                    return true;
    }
    return false;
}

/// Lead time of an AR: target first land-intersection time minus forecast
/// initialization, reported when the forecast shows a land-intersecting AR
/// at any valid time. No detection on either side yields no signal.
inline std::optional<double> ar_landfall_lead_time(
    UtcSeconds init_time, const GridSpec& spec,
    const std::vector<std::pair<UtcSeconds, std::vector<ArObject>>>& forecast_by_time,
    const std::vector<std::pair<UtcSeconds, std::vector<ArObject>>>& target_by_time,
    const Region* region = nullptr) {
    if (target_by_time.empty())
        throw std::invalid_argument("ar_landfall_lead_time: empty target sequence");
    std::optional<UtcSeconds> target_first;
    for (const auto& [t, objs] : target_by_time) {
        if (ar_intersects_land(objs, spec, region)) {
            target_first = t;
            break;
        }
    }
    if (!target_first) return std::nullopt;
    for (const auto& [t, objs] : forecast_by_time) {
        if (ar_intersects_land(objs, spec, region))
            return static_cast<double>(*target_first - init_time) / kSecondsPerHour;
    }
    return std::nullopt;
}

struct ArComparison {
    std::optional<double> displacement_km;
    std::optional<double> iou;
};

/// Displacement between land-intersection centres of mass plus IOU of the
/// land-intersection masks. Undefined when either side has no land overlap.
inline ArComparison ar_displacement_and_iou(const ArObject& forecast,
                                            const ArObject& target,
                                            const GridSpec& spec) {
    ArComparison out;
    if (!forecast.land_center || !target.land_center) return out;
    out.displacement_km = haversine_km(*forecast.land_center, *target.land_center);
    out.iou = iou(forecast.land_members, target.land_members);
    (void)spec;
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: one JSON object per line, members run-length encoded over
// the flattened row-major grid.

inline void write_ar_objects_jsonl(std::ostream& os,
                                   const std::vector<ArObject>& objects,
                                   const GridSpec& spec) {
    for (const auto& obj : objects) {
        nlohmann::ordered_json j;
        j["time"] = format_iso8601(obj.time);
        j["size"] = obj.size;
        j["center"] = {obj.center.lat, obj.center.lon};
        if (obj.land_center)
            j["land_center"] = {obj.land_center->lat, obj.land_center->lon};
        else
            j["land_center"] = nullptr;
        int i0 = spec.nlat, i1 = -1, j0 = spec.nlon, j1 = -1;
        for (int i = 0; i < spec.nlat; ++i)
            for (int jj = 0; jj < spec.nlon; ++jj)
                if (obj.members[spec.idx(i, jj)]) {
                    i0 = std::min(i0, i);
                    i1 = std::max(i1, i);
                    j0 = std::min(j0, jj);
                    j1 = std::max(j1, jj);
                }
        j["bbox"] = {spec.lat(i0) - spec.dlat / 2, spec.lat(i1) + spec.dlat / 2,
                     spec.lon(j0) - spec.dlon / 2, spec.lon(j1) + spec.dlon / 2};
        auto rle = nlohmann::ordered_json::array();
        std::size_t k = 0;
        while (k < obj.members.size()) {
            if (!obj.members[k]) {
                ++k;
                continue;
            }
            std::size_t start = k;
            while (k < obj.members.size() && obj.members[k]) ++k;
            rle.push_back({start, k - start});
        }
        j["member_rle"] = std::move(rle);
        os << j.dump() << '\n';
    }
}

}  // namespace ewb
