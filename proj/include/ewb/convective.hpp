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

// Thermodynamic constants (dry air / water vapor).
inline constexpr double kRd = 287.04;        // J kg^-1 K^-1
inline constexpr double kCp = 1005.0;        // J kg^-1 K^-1
inline constexpr double kKappa = kRd / kCp;
inline constexpr double kEpsilon = 0.622;
inline constexpr double kLv = 2.501e6;       // J kg^-1

/// Bolton saturation vapor pressure, hPa.
inline double saturation_vapor_pressure_hpa(double temp_k) {
    const double tc = temp_k - 273.15;
    return 6.112 * std::exp(17.67 * tc / (tc + 243.5));
}

inline double mixing_ratio_from_vapor_pressure(double e_hpa, double p_hpa) {
    return kEpsilon * e_hpa / (p_hpa - e_hpa);
}

inline double saturation_mixing_ratio(double temp_k, double p_hpa) {
    return mixing_ratio_from_vapor_pressure(saturation_vapor_pressure_hpa(temp_k),
                                            p_hpa);
}

inline double virtual_temperature(double temp_k, double mixing_ratio) {
    return temp_k * (1.0 + mixing_ratio / kEpsilon) / (1.0 + mixing_ratio);
}

/// Pseudoadiabatic temperature tendency along a saturated ascent, K per hPa.
inline double moist_lapse_dt_dp(double temp_k, double p_hpa) {
    const double rs = saturation_mixing_ratio(temp_k, p_hpa);
    const double num = kRd * temp_k + kLv * rs;
    const double den = kCp + kLv * kLv * rs * kEpsilon / (kRd * temp_k * temp_k);
    return num / den / p_hpa;
}

struct SoundingProfile {
    std::vector<double> pressure_hpa;   // strictly decreasing from surface
    std::vector<double> temperature_k;
    std::vector<double> mixing_ratio;   // kg/kg, derived on construction

    static SoundingProfile from_dewpoint(std::vector<double> p,
                                         std::vector<double> t,
                                         const std::vector<double>& td) {
        SoundingProfile s;
        s.pressure_hpa = std::move(p);
        s.temperature_k = std::move(t);
        s.mixing_ratio.resize(td.size());
        for (std::size_t k = 0; k < td.size(); ++k)
            s.mixing_ratio[k] = mixing_ratio_from_vapor_pressure(
                saturation_vapor_pressure_hpa(td[k]), s.pressure_hpa[k]);
        s.validate();
        return s;
    }

    static SoundingProfile from_specific_humidity(std::vector<double> p,
                                                  std::vector<double> t,
                                                  const std::vector<double>& q) {
        SoundingProfile s;
        s.pressure_hpa = std::move(p);
        s.temperature_k = std::move(t);
        s.mixing_ratio.resize(q.size());
        for (std::size_t k = 0; k < q.size(); ++k)
            s.mixing_ratio[k] = q[k] / (1.0 - q[k]);
        s.validate();
        return s;
    }

    void validate() const {
        if (pressure_hpa.size() < 5)
            throw std::invalid_argument("sounding: need at least 5 levels");
        if (pressure_hpa.size() != temperature_k.size() ||
            pressure_hpa.size() != mixing_ratio.size())
            throw std::invalid_argument("sounding: ragged level arrays");
        for (std::size_t k = 1; k < pressure_hpa.size(); ++k)
            if (pressure_hpa[k] >= pressure_hpa[k - 1])
                throw std::invalid_argument("sounding: pressure must decrease");
    }

    // Linear interpolation in ln(p).
    double temp_at(double p_hpa) const { return interp(temperature_k, p_hpa); }
    double mixing_ratio_at(double p_hpa) const {
        return interp(mixing_ratio, p_hpa);
    }

  private:
    double interp(const std::vector<double>& field, double p_hpa) const {
        if (p_hpa >= pressure_hpa.front()) return field.front();
        if (p_hpa <= pressure_hpa.back()) return field.back();
        for (std::size_t k = 0; k + 1 < pressure_hpa.size(); ++k) {
            if (p_hpa <= pressure_hpa[k] && p_hpa >= pressure_hpa[k + 1]) {
                const double f = (std::log(pressure_hpa[k]) - std::log(p_hpa)) /
                                 (std::log(pressure_hpa[k]) -
                                  std::log(pressure_hpa[k + 1]));
                return field[k] + f * (field[k + 1] - field[k]);
            }
        }
        return field.back();
    }
};

/// Mixed-layer CAPE. The parcel carries the mass-weighted mean temperature
/// and moisture of the lowest mixed_layer_hpa, starts at surface pressure,
/// rises dry-adiabatically to saturation and pseudoadiabatically above, and
/// accumulates Rd * max(0, Tv_parcel - Tv_env) dln(p) with no CIN gating.
inline double compute_mlcape(const SoundingProfile& profile,
                             double mixed_layer_hpa = 100.0,
                             double step_hpa = 1.0) {
    profile.validate();
    const double p_sfc = profile.pressure_hpa.front();
    const double p_top = profile.pressure_hpa.back();
    if (p_sfc <= 500.0)
        throw std::invalid_argument("compute_mlcape: surface pressure too low");

    // Mass-weighted parcel over the mixed layer (uniform dp sampling).
    const double p_bottom = p_sfc;
    const double p_ml_top = std::max(p_top, p_sfc - mixed_layer_hpa);
    double t_sum = 0.0, r_sum = 0.0;
    int n = 0;
    for (double p = p_bottom; p >= p_ml_top - 1e-9; p -= step_hpa) {
        t_sum += profile.temp_at(p);
        r_sum += profile.mixing_ratio_at(p);
        ++n;
    }
    double t_parcel = t_sum / n;
    double r_parcel = r_sum / n;

    double cape = 0.0;
    bool saturated = r_parcel >= saturation_mixing_ratio(t_parcel, p_sfc);
    double p = p_sfc;
    double tv_p_prev = virtual_temperature(t_parcel, r_parcel);
    double tv_e_prev = virtual_temperature(profile.temp_at(p),
                                           profile.mixing_ratio_at(p));
    while (p - step_hpa >= p_top - 1e-9) {
        const double p_next = p - step_hpa;
        if (!saturated) {
            t_parcel *= std::pow(p_next / p, kKappa);
            if (r_parcel >= saturation_mixing_ratio(t_parcel, p_next))
                saturated = true;
        } else {
            // RK2 (midpoint) step of the pseudoadiabatic ODE in hPa space.
            const double k1 = moist_lapse_dt_dp(t_parcel, p);
            const double t_mid = t_parcel - 0.5 * step_hpa * k1;
            const double k2 = moist_lapse_dt_dp(t_mid, p - 0.5 * step_hpa);
            t_parcel -= step_hpa * k2;
        }
        const double r_now =
            saturated ? saturation_mixing_ratio(t_parcel, p_next) : r_parcel;
        const double tv_p = virtual_temperature(t_parcel, r_now);
        const double tv_e = virtual_temperature(profile.temp_at(p_next),
                                                profile.mixing_ratio_at(p_next));
        const double mean_excess = 0.5 * ((tv_p - tv_e) + (tv_p_prev - tv_e_prev));
        if (mean_excess > 0.0) cape += kRd * mean_excess * std::log(p / p_next);
        tv_p_prev = tv_p;
        tv_e_prev = tv_e;
        p = p_next;
    }
    return std::max(0.0, cape);
}

/// Magnitude of the wind vector difference between the surface and 500 hPa.
inline double compute_bulk_shear(double u_sfc, double v_sfc, double u500,
                                 double v500) {
    return std::hypot(u500 - u_sfc, v500 - v_sfc);
}

/// Craven-Brooks Significant Severe composite: MLCAPE * bulk shear. Values
/// at or above 15,000 m^3/s^3 mark the severe region.
inline double compute_cbss(double mlcape_jkg, double shear_ms) {
    if (mlcape_jkg < 0 || shear_ms < 0)
        throw std::invalid_argument("compute_cbss: negative inputs");
    return mlcape_jkg * shear_ms;
}

inline constexpr double kCbssSevereThreshold = 15000.0;

// ---------------------------------------------------------------------------
// Storm reports

enum class ReportType { tornado, hail, wind };

inline std::string to_string(ReportType t) {
    switch (t) {
        case ReportType::tornado: return "tornado";
        case ReportType::hail: return "hail";
        case ReportType::wind: return "wind";
    }
    throw std::logic_error("unknown report type");
}

inline ReportType report_type_from_string(const std::string& s) {
    if (s == "tornado") return ReportType::tornado;
    if (s == "hail") return ReportType::hail;
    if (s == "wind") return ReportType::wind;
    throw std::invalid_argument("unknown report type: " + s);
}

struct Report {
    UtcSeconds time = 0;
    double lat = 0.0;
    double lon = 0.0;
    ReportType type = ReportType::tornado;
    std::optional<double> magnitude;
};

using ReportSet = std::vector<Report>;

inline void write_reports_csv(std::ostream& os, const ReportSet& reports) {
    os << "time,lat,lon,type,magnitude\n";
    char buf[160];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%s,",
                      format_iso8601(r.time).c_str(), r.lat, r.lon,
                      to_string(r.type).c_str());
        os << buf;
        if (r.magnitude) {
            std::snprintf(buf, sizeof(buf), "%.2f", *r.magnitude);
            os << buf;
        }
        os << '\n';
    }
}

inline ReportSet read_reports_csv(std::istream& is) {
    ReportSet out;
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("report CSV: missing header");
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
        if (cols.size() != 5)
            throw std::runtime_error("report CSV: expected 5 columns");
        Report r;
        r.time = parse_iso8601(cols[0]);
        r.lat = std::stod(cols[1]);
        r.lon = std::stod(cols[2]);
        r.type = report_type_from_string(cols[3]);
        if (!cols[4].empty()) r.magnitude = std::stod(cols[4]);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Practically Perfect Hindcast

struct PphParams {
    double sigma_gridpoints = 1.5;
    double weight_tornado_hail = 10.0;
    double peak_scale = 0.6;   // single unweighted deposit peaks here pre-clip
    double truncate_sigmas = 6.0;
};

struct PphField {
    GridSpec spec;
    std::vector<float> prob;      // clipped to [0, 1]
    std::vector<float> raw;       // pre-clip weighted kernel sum
    double sigma = 0.0;

    float at(int i, int j) const { return prob[spec.idx(i, j)]; }
};

/// Gaussian-kernel probability field from tornado and hail reports (wind
/// reports are excluded). Deposits land on the nearest gridpoint; the kernel
/// is separable with per-axis truncation at truncate_sigmas.
inline PphField compute_pph(const ReportSet& reports, const GridSpec& spec,
                            const PphParams& params = {}) {
    if (params.sigma_gridpoints <= 0)
        throw std::invalid_argument("compute_pph: sigma must be positive");
    PphField out;
    out.spec = spec;
    out.sigma = params.sigma_gridpoints;
    std::vector<double> deposit(spec.size(), 0.0);
    for (const auto& r : reports) {
        if (r.type == ReportType::wind) continue;
        const auto ij = spec.nearest(r.lat, r.lon);
        if (!ij) continue;
        deposit[spec.idx(ij->first, ij->second)] += params.weight_tornado_hail;
    }
    const int radius =
        static_cast<int>(std::ceil(params.truncate_sigmas * params.sigma_gridpoints));
    std::vector<double> kernel(radius + 1);
    for (int d = 0; d <= radius; ++d)
        kernel[d] = std::exp(-0.5 * d * d /
                             (params.sigma_gridpoints * params.sigma_gridpoints));

    // Two separable passes; zero padding at the grid boundary.
    std::vector<double> tmp(spec.size(), 0.0);
    for (int i = 0; i < spec.nlat; ++i) {
        for (int j = 0; j < spec.nlon; ++j) {
            const double v = deposit[spec.idx(i, j)];
            if (v == 0.0) continue;
            for (int d = -radius; d <= radius; ++d) {
                const int jj = j + d;
                if (jj < 0 || jj >= spec.nlon) continue;
                tmp[spec.idx(i, jj)] += v * kernel[std::abs(d)];
            }
        }
    }
    std::vector<double> full(spec.size(), 0.0);
    for (int i = 0; i < spec.nlat; ++i) {
        for (int j = 0; j < spec.nlon; ++j) {
            const double v = tmp[spec.idx(i, j)];
            if (v == 0.0) continue;
            for (int d = -radius; d <= radius; ++d) {
                const int ii = i + d;
                if (ii < 0 || ii >= spec.nlat) continue;
                full[spec.idx(ii, j)] += v * kernel[std::abs(d)];
            }
        }
    }
    out.raw.resize(spec.size());
    out.prob.resize(spec.size());
    for (std::size_t k = 0; k < full.size(); ++k) {
        const double scaled = params.peak_scale * full[k];
        out.raw[k] = static_cast<float>(scaled);
        out.prob[k] = static_cast<float>(std::clamp(scaled, 0.0, 1.0));
    }
    return out;
}

/// Tight bounds of {pph >= contour}; nullopt when nothing reaches it.
inline std::optional<Region> pph_bounding_box(const PphField& pph,
                                              double contour = 0.01) {
    const GridSpec& spec = pph.spec;
    int i0 = spec.nlat, i1 = -1, j0 = spec.nlon, j1 = -1;
    for (int i = 0; i < spec.nlat; ++i)
        for (int j = 0; j < spec.nlon; ++j)
            if (pph.at(i, j) >= contour) {
                i0 = std::min(i0, i);
                i1 = std::max(i1, i);
                j0 = std::min(j0, j);
                j1 = std::max(j1, j);
            }
    if (i1 < 0) return std::nullopt;
    return Region{spec.lat(i0), spec.lat(i1), spec.lon(j0), spec.lon(j1)};
}

// ---------------------------------------------------------------------------
// Contingency metrics

struct Contingency {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::optional<double> csi;
    std::optional<double> far;
};

inline Contingency region_contingency(std::span<const std::uint8_t> pred,
                                      std::span<const std::uint8_t> target,
                                      const GridSpec& spec,
                                      const Region* region = nullptr) {
    if (pred.size() != target.size() || pred.size() != spec.size())
        throw std::invalid_argument("region_contingency: shape mismatch");
    Contingency c;
    for (int i = 0; i < spec.nlat; ++i) {
        for (int j = 0; j < spec.nlon; ++j) {
            if (region && !region->contains(spec.lat(i), spec.lon(j))) continue;
            const bool p = pred[spec.idx(i, j)] != 0;
            const bool t = target[spec.idx(i, j)] != 0;
            c.tp += p && t;
            c.fp += p && !t;
            c.fn += !p && t;
            c.tn += !p && !t;
        }
    }
    if (c.tp + c.fn + c.fp > 0)
        c.csi = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn + c.fp);
    if (c.tp + c.fp > 0)
        c.far = static_cast<double>(c.fp) / static_cast<double>(c.tp + c.fp);
    return c;
}

struct HitsMisses {
    int hits = 0;
    int misses = 0;
};

/// A report scores a hit when its nearest gridpoint lies inside the predicted
/// mask. Wind reports are excluded, mirroring the PPH convention.
inline HitsMisses report_hits_misses(std::span<const std::uint8_t> pred_mask,
                                     const GridSpec& spec,
                                     const ReportSet& reports) {
    if (pred_mask.size() != spec.size())
        throw std::invalid_argument("report_hits_misses: shape mismatch");
    HitsMisses hm;
    for (const auto& r : reports) {
        if (r.type == ReportType::wind) continue;
        const auto ij = spec.nearest(r.lat, r.lon);
        if (ij && pred_mask[spec.idx(ij->first, ij->second)])
            ++hm.hits;
        else
            ++hm.misses;
    }
    return hm;
}

/// Longest lead (in days) at which the CBSS region covers at least `coverage`
/// of the PPH region, with every shorter lead also covered. Leads must be
/// sorted descending. No qualifying lead yields no signal.
inline std::optional<double> early_signal(
    const std::vector<std::pair<double, std::vector<std::uint8_t>>>& cbss_by_lead,
    const PphField& pph, double pph_threshold = 0.01, double coverage = 0.5) {
    const GridSpec& spec = pph.spec;
    std::int64_t pph_count = 0;
    for (std::size_t k = 0; k < pph.prob.size(); ++k)
        if (pph.prob[k] >= pph_threshold) ++pph_count;
    if (pph_count == 0)
        throw std::invalid_argument("early_signal: empty PPH region");
    for (std::size_t k = 1; k < cbss_by_lead.size(); ++k)
        if (cbss_by_lead[k].first >= cbss_by_lead[k - 1].first)
            throw std::invalid_argument("early_signal: leads must descend");

    std::optional<double> best;
    for (auto it = cbss_by_lead.rbegin(); it != cbss_by_lead.rend(); ++it) {
        const auto& [lead, mask] = *it;
        if (mask.size() != spec.size())
            throw std::invalid_argument("early_signal: mask shape mismatch");
        std::int64_t overlap = 0;
        for (std::size_t k = 0; k < mask.size(); ++k)
            if (mask[k] && pph.prob[k] >= pph_threshold) ++overlap;
        if (static_cast<double>(overlap) / static_cast<double>(pph_count) >=
            coverage)
            best = lead;
        else
            break;
    }
    return best;
}

}  // namespace ewb
