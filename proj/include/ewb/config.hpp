#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ewb/ar.hpp"
#include "ewb/convective.hpp"
#include "ewb/tc.hpp"

namespace ewb {

/// Flat key=value overrides, merged from (lowest to highest precedence) a
/// config file, per-case parameters, and --set flags. Keys are dotted paths
/// like "ar.ivt_threshold"; values are stored as strings and parsed on read.
class ParamOverrides {
  public:
    ParamOverrides() = default;

    static ParamOverrides from_json_file(const std::filesystem::path& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open config " + path.string());
        nlohmann::json j;
        f >> j;
        ParamOverrides p;
        for (const auto& [key, value] : j.items()) {
            if (value.is_string())
                p.values_[key] = value.get<std::string>();
            else
                p.values_[key] = value.dump();
        }
        return p;
    }

    void set(const std::string& key, const std::string& value) {
        values_[key] = value;
    }

    /// "key=value" form used by --set flags.
    void set_pair(const std::string& pair) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got: " + pair);
        set(pair.substr(0, eq), pair.substr(eq + 1));
    }

    void merge(const ParamOverrides& higher) {
        for (const auto& [k, v] : higher.values_) values_[k] = v;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    double get(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return std::stod(it->second);
    }
    int get(const std::string& key, int fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return std::stoi(it->second);
    }
    bool get(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return it->second == "true" || it->second == "1";
    }
    std::string get(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    const std::map<std::string, std::string>& raw() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

inline ArParams make_ar_params(const ParamOverrides& p) {
    ArParams a;
    a.ivt_threshold = p.get("ar.ivt_threshold", a.ivt_threshold);
    a.laplacian_threshold = p.get("ar.laplacian_threshold", a.laplacian_threshold);
    a.laplacian_search_radius =
        p.get("ar.laplacian_search_radius", a.laplacian_search_radius);
    a.min_points = p.get("ar.min_points", a.min_points);
    a.tropics_exclusion_lat =
        p.get("ar.tropics_exclusion_lat", a.tropics_exclusion_lat);
    return a;
}

inline TcParams make_tc_params(const ParamOverrides& p) {
    TcParams t;
    t.max_center_pressure_hpa =
        p.get("tc.max_center_pressure_hpa", t.max_center_pressure_hpa);
    t.warm_core_thickness_drop_m =
        p.get("tc.warm_core_thickness_drop_m", t.warm_core_thickness_drop_m);
    t.warm_core_radius_gcd = p.get("tc.warm_core_radius_gcd", t.warm_core_radius_gcd);
    t.require_closed_contours =
        p.get("tc.require_closed_contours", t.require_closed_contours);
    t.min_pressure_gradient_pa =
        p.get("tc.min_pressure_gradient_pa", t.min_pressure_gradient_pa);
    t.gradient_radius_gcd = p.get("tc.gradient_radius_gcd", t.gradient_radius_gcd);
    t.max_distance_from_reference_gcd = p.get("tc.max_distance_from_reference_gcd",
                                              t.max_distance_from_reference_gcd);
    t.min_candidate_separation_gcd = p.get("tc.min_candidate_separation_gcd",
                                           t.min_candidate_separation_gcd);
    t.max_track_gap_hours = p.get("tc.max_track_gap_hours", t.max_track_gap_hours);
    t.min_valid_wind_timesteps =
        p.get("tc.min_valid_wind_timesteps", t.min_valid_wind_timesteps);
    t.valid_wind_threshold_ms =
        p.get("tc.valid_wind_threshold_ms", t.valid_wind_threshold_ms);
    t.max_abs_latitude = p.get("tc.max_abs_latitude", t.max_abs_latitude);
    t.peak_wind_radius_gcd = p.get("tc.peak_wind_radius_gcd", t.peak_wind_radius_gcd);
    t.assoc_distance_gcd_per_step =
        p.get("tc.assoc_distance_gcd_per_step", t.assoc_distance_gcd_per_step);
    return t;
}

inline PphParams make_pph_params(const ParamOverrides& p) {
    PphParams s;
    s.sigma_gridpoints = p.get("pph.sigma_gridpoints", s.sigma_gridpoints);
    s.weight_tornado_hail = p.get("pph.weight_tornado_hail", s.weight_tornado_hail);
    s.peak_scale = p.get("pph.peak_scale", s.peak_scale);
    return s;
}

}  // namespace ewb
