#pragma once

// Brute-force reference implementations used only by the test suites. These
// deliberately share nothing with the library code paths they check beyond
// the basic grid geometry types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "ewb/ar.hpp"
#include "ewb/convective.hpp"
#include "ewb/grid.hpp"

namespace oracle {

/// Stack-based flood fill, one component at a time.
inline ewb::Components flood_fill_components(
    std::span<const std::uint8_t> mask, const ewb::GridSpec& spec,
    int connectivity) {
    const bool wrap = spec.is_global_lon();
    ewb::Components out;
    out.labels.assign(mask.size(), 0);
    std::vector<std::pair<int, int>> todo;
    for (int si = 0; si < spec.nlat; ++si) {
        for (int sj = 0; sj < spec.nlon; ++sj) {
            if (!mask[spec.idx(si, sj)] || out.labels[spec.idx(si, sj)]) continue;
            ++out.count;
            std::int64_t size = 0;
            todo.assign(1, {si, sj});
            out.labels[spec.idx(si, sj)] = out.count;
            while (!todo.empty()) {
                auto [i, j] = todo.back();
                todo.pop_back();
                ++size;
                const int offs4[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
                const int offs8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                         {0, 1},   {1, -1}, {1, 0},  {1, 1}};
                const auto* offs = connectivity == 4 ? offs4 : offs8;
                const int n_offs = connectivity == 4 ? 4 : 8;
                for (int k = 0; k < n_offs; ++k) {
                    const int ni = i + offs[k][0];
                    int nj = j + offs[k][1];
                    if (ni < 0 || ni >= spec.nlat) continue;
                    if (wrap)
                        nj = (nj + spec.nlon) % spec.nlon;
                    else if (nj < 0 || nj >= spec.nlon)
                        continue;
                    if (mask[spec.idx(ni, nj)] && !out.labels[spec.idx(ni, nj)]) {
                        out.labels[spec.idx(ni, nj)] = out.count;
                        todo.push_back({ni, nj});
                    }
                }
            }
            out.sizes.push_back(size);
        }
    }
    return out;
}

/// Direct 5-point stencil divided by dlat_km * dlon_km(lat), replicate edges.
inline std::vector<double> laplacian_direct(std::span<const float> f,
                                            const ewb::GridSpec& spec) {
    std::vector<double> out(f.size());
    const double dy = ewb::kEarthRadiusKm * ewb::deg2rad(spec.dlat);
    for (int i = 0; i < spec.nlat; ++i) {
        const double dx = ewb::kEarthRadiusKm * ewb::deg2rad(spec.dlon) *
                          std::cos(ewb::deg2rad(spec.lat(i)));
        for (int j = 0; j < spec.nlon; ++j) {
            auto v = [&](int ii, int jj) {
                ii = std::clamp(ii, 0, spec.nlat - 1);
                jj = std::clamp(jj, 0, spec.nlon - 1);
                return static_cast<double>(f[spec.idx(ii, jj)]);
            };
            out[spec.idx(i, j)] = (v(i - 1, j) + v(i + 1, j) + v(i, j - 1) +
                                   v(i, j + 1) - 4.0 * v(i, j)) /
                                  (dy * dx);
        }
    }
    return out;
}

/// Point-by-point AR candidate evaluation: IVT threshold plus existence of a
/// high-Laplacian point within the search radius, then flood-fill grouping,
/// the size floor, and the latitude filter.
inline std::vector<std::vector<std::uint8_t>> ar_objects_bruteforce(
    const ewb::IvtField& ivt, const ewb::ArParams& params) {
    const ewb::GridSpec& spec = ivt.spec;
    const auto lap = laplacian_direct(ivt.ivt, spec);
    const bool wrap = spec.is_global_lon();
    std::vector<std::uint8_t> candidate(spec.size(), 0);
    const int r = params.laplacian_search_radius;
    for (int i = 0; i < spec.nlat; ++i) {
        for (int j = 0; j < spec.nlon; ++j) {
            if (ivt.ivt[spec.idx(i, j)] < params.ivt_threshold) continue;
            bool near = false;
            for (int di = -r; di <= r && !near; ++di) {
                const int ii = i + di;
                if (ii < 0 || ii >= spec.nlat) continue;
                for (int dj = -r; dj <= r; ++dj) {
                    if (di * di + dj * dj > r * r) continue;
                    int jj = j + dj;
                    if (wrap)
                        jj = (jj + spec.nlon) % spec.nlon;
                    else if (jj < 0 || jj >= spec.nlon)
                        continue;
                    if (std::abs(lap[spec.idx(ii, jj)]) >=
                        params.laplacian_threshold) {
                        near = true;
                        break;
                    }
                }
            }
            if (near) candidate[spec.idx(i, j)] = 1;
        }
    }
    const auto cc = flood_fill_components(candidate, spec, 8);
    std::vector<std::vector<std::uint8_t>> objects;
    for (int label = 1; label <= cc.count; ++label) {
        if (cc.sizes[label - 1] < params.min_points) continue;
        std::vector<std::uint8_t> members(spec.size(), 0);
        double wsum = 0.0, lat_acc = 0.0, sin_acc = 0.0, cos_acc = 0.0;
        for (int i = 0; i < spec.nlat; ++i) {
            for (int j = 0; j < spec.nlon; ++j) {
                if (cc.labels[spec.idx(i, j)] != label) continue;
                members[spec.idx(i, j)] = 1;
                const double a = ewb::cell_area_km2(spec.lat(i), spec);
                wsum += a;
                lat_acc += a * spec.lat(i);
                sin_acc += a * std::sin(ewb::deg2rad(spec.lon(j)));
                cos_acc += a * std::cos(ewb::deg2rad(spec.lon(j)));
            }
        }
        const double com_lat = lat_acc / wsum;
        if (std::abs(com_lat) < params.tropics_exclusion_lat) continue;
        objects.push_back(std::move(members));
    }
    return objects;
}

/// Dense parcel ascent for MLCAPE, 0.25 hPa Euler steps. Shares the
/// thermodynamic formulas but none of the integration code.
inline double mlcape_dense(const ewb::SoundingProfile& profile,
                           double mixed_layer_hpa = 100.0,
                           double step = 0.25) {
    const double p_sfc = profile.pressure_hpa.front();
    const double p_top = profile.pressure_hpa.back();
    double t_sum = 0, r_sum = 0;
    int n = 0;
    for (double p = p_sfc; p >= std::max(p_top, p_sfc - mixed_layer_hpa) - 1e-9;
         p -= step) {
        t_sum += profile.temp_at(p);
        r_sum += profile.mixing_ratio_at(p);
        ++n;
    }
    double tp = t_sum / n;
    const double rp = r_sum / n;
    double cape = 0.0;
    bool saturated = rp >= ewb::saturation_mixing_ratio(tp, p_sfc);
    double prev_excess =
        ewb::virtual_temperature(tp, rp) -
        ewb::virtual_temperature(profile.temp_at(p_sfc),
                                 profile.mixing_ratio_at(p_sfc));
    for (double p = p_sfc; p - step >= p_top - 1e-9; p -= step) {
        const double pn = p - step;
        if (!saturated) {
            tp *= std::pow(pn / p, ewb::kKappa);
            if (rp >= ewb::saturation_mixing_ratio(tp, pn)) saturated = true;
        } else {
            const double rs = ewb::saturation_mixing_ratio(tp, p);
            const double dtdp =
                (ewb::kRd * tp + ewb::kLv * rs) /
                (ewb::kCp +
                 ewb::kLv * ewb::kLv * rs * ewb::kEpsilon / (ewb::kRd * tp * tp)) /
                p;
            tp -= step * dtdp;
        }
        const double r_now = saturated ? ewb::saturation_mixing_ratio(tp, pn) : rp;
        const double excess =
            ewb::virtual_temperature(tp, r_now) -
            ewb::virtual_temperature(profile.temp_at(pn),
                                     profile.mixing_ratio_at(pn));
        const double mean = 0.5 * (excess + prev_excess);
        if (mean > 0) cape += ewb::kRd * mean * std::log(p / pn);
        prev_excess = excess;
    }
    return std::max(0.0, cape);
}

/// Direct kernel-sum PPH: sums truncated Gaussian contributions per point.
inline std::vector<double> pph_direct(const ewb::ReportSet& reports,
                                      const ewb::GridSpec& spec,
                                      const ewb::PphParams& params) {
    std::vector<double> deposit(spec.size(), 0.0);
    for (const auto& r : reports) {
        if (r.type == ewb::ReportType::wind) continue;
        const auto ij = spec.nearest(r.lat, r.lon);
        if (!ij) continue;
        deposit[spec.idx(ij->first, ij->second)] += params.weight_tornado_hail;
    }
    const int radius = static_cast<int>(
        std::ceil(params.truncate_sigmas * params.sigma_gridpoints));
    std::vector<double> out(spec.size(), 0.0);
    const double s2 = params.sigma_gridpoints * params.sigma_gridpoints;
    for (int i = 0; i < spec.nlat; ++i)
        for (int j = 0; j < spec.nlon; ++j) {
            if (deposit[spec.idx(i, j)] == 0.0) continue;
            for (int di = -radius; di <= radius; ++di)
                for (int dj = -radius; dj <= radius; ++dj) {
                    const int ii = i + di;
                    const int jj = j + dj;
                    if (ii < 0 || ii >= spec.nlat || jj < 0 || jj >= spec.nlon)
                        continue;
                    out[spec.idx(ii, jj)] += deposit[spec.idx(i, j)] *
                                             std::exp(-0.5 * di * di / s2) *
                                             std::exp(-0.5 * dj * dj / s2);
                }
        }
    for (auto& v : out) v = std::min(1.0, params.peak_scale * v);
    return out;
}

/// Run-length oracle: merges qualifying days separated by at most one
/// non-qualifying day and reports the longest first-to-last span.
inline int longest_merged_run(const std::vector<int>& qualifying_days) {
    int best = 0;
    for (std::size_t a = 0; a < qualifying_days.size(); ++a) {
        int last = qualifying_days[a];
        for (std::size_t b = a; b < qualifying_days.size(); ++b) {
            if (qualifying_days[b] - last > 2) break;
            last = qualifying_days[b];
            best = std::max(best, last - qualifying_days[a] + 1);
        }
    }
    return best;
}

/// Weighted quantile by explicit cumulative-midpoint interpolation.
inline double weighted_quantile_direct(std::vector<double> v,
                                       std::vector<double> w, double p) {
    std::vector<std::size_t> ord(v.size());
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<double> q, vals;
    double cum = 0.0;
    for (auto k : ord) {
        if (w[k] == 0.0) continue;
        q.push_back((cum + w[k] / 2) / total);
        vals.push_back(v[k]);
        cum += w[k];
    }
    if (p <= q.front()) return vals.front();
    if (p >= q.back()) return vals.back();
    for (std::size_t k = 0; k + 1 < q.size(); ++k)
        if (p >= q[k] && p <= q[k + 1])
            return vals[k] + (p - q[k]) / (q[k + 1] - q[k]) * (vals[k + 1] - vals[k]);
    return vals.back();
}

}  // namespace oracle
