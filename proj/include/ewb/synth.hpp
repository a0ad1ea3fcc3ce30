#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ewb/catalog.hpp"
#include "ewb/container.hpp"
#include "ewb/convective.hpp"
#include "ewb/grid.hpp"
#include "ewb/time.hpp"

namespace ewb::synth {

namespace fs = std::filesystem;

// Synthetic inputs in the toolkit's own file formats, each paired with a
// ground-truth JSON holding the analytically known answers. Deterministic
// given the seed.

inline void write_truth(const fs::path& dir, const nlohmann::ordered_json& j) {
    fs::create_directories(dir);
    std::ofstream f(dir / "truth.json");
    f << j.dump(2) << "\n";
}

inline FieldCube constant_cube(const GridSpec& spec, UtcSeconds t0, int n_times,
                               const std::string& variable,
                               const std::string& units, float value,
                               UtcSeconds cadence = 6 * kSecondsPerHour) {
    FieldCube c;
    c.spec = spec;
    c.variable = variable;
    c.units = units;
    for (int t = 0; t < n_times; ++t) c.times.push_back(t0 + t * cadence);
    c.values.assign(static_cast<std::size_t>(n_times) * spec.size(), value);
    return c;
}

/// Half-plane land mask: land where the cell-centre longitude compares true.
inline LandMask half_plane_land(const GridSpec& spec, double coast_lon,
                                bool land_east) {
    LandMask m;
    m.spec = spec;
    m.mask.assign(spec.size(), 0);
    for (int i = 0; i < spec.nlat; ++i)
        for (int j = 0; j < spec.nlon; ++j) {
            const bool east = spec.lon(j) >= coast_lon;
            if (east == land_east) m.mask[spec.idx(i, j)] = 1;
        }
    return m;
}

inline void write_constant_climatology(const GridSpec& spec, double percentile,
                                       float value, const fs::path& dir,
                                       const std::string& name) {
    const auto clim = PercentileClimatology::constant(spec, percentile, value);
    write_cube(clim.to_cube(name), dir, name);
}

// ---------------------------------------------------------------------------
// Vortex

struct VortexSpec {
    GridSpec grid{.lat0 = 5.0, .lon0 = -80.0, .dlat = 0.25, .dlon = 0.25,
                  .nlat = 101, .nlon = 101};
    UtcSeconds t0 = utc_from_parts(2022, 9, 1);
    LatLon start{12.0, -60.0};
    double dlat_per_step = 0.3;
    double dlon_per_step = -1.25;
    int steps = 12;
    double center_pressure_hpa = 1000.0;
    double depression_hpa = 15.0;
    double sigma_deg = 2.0;
    double peak_wind_ms = 25.0;
    double thickness_bump_m = 60.0;
};

/// Writes mslp/z300/z500/u10/v10 cubes for a vortex translating along a
/// straight line, plus the truth file listing its centres.
inline nlohmann::ordered_json generate_vortex(const VortexSpec& v,
                                              const fs::path& dir) {
    const GridSpec& spec = v.grid;
    const auto make = [&](const std::string& var, const std::string& units) {
        FieldCube c;
        c.spec = spec;
        c.variable = var;
        c.units = units;
        for (int s = 0; s < v.steps; ++s)
            c.times.push_back(v.t0 + s * 6 * kSecondsPerHour);
        c.values.resize(static_cast<std::size_t>(v.steps) * spec.size());
        return c;
    };
    auto mslp = make("mslp", "hPa");
    auto z300 = make("z300", "m");
    auto z500 = make("z500", "m");
    auto u10 = make("u10", "m/s");
    auto v10 = make("v10", "m/s");

    nlohmann::ordered_json centers = nlohmann::ordered_json::array();
    const double ambient = v.center_pressure_hpa + v.depression_hpa;
    for (int s = 0; s < v.steps; ++s) {
        const LatLon c{v.start.lat + v.dlat_per_step * s,
                       v.start.lon + v.dlon_per_step * s};
        centers.push_back({format_iso8601(v.t0 + s * 6 * kSecondsPerHour), c.lat,
                           c.lon});
        for (int i = 0; i < spec.nlat; ++i) {
            for (int j = 0; j < spec.nlon; ++j) {
                const double dy = spec.lat(i) - c.lat;
                double dx = canonical_lon(spec.lon(j)) - canonical_lon(c.lon);
                if (dx > 180.0) dx -= 360.0;
                if (dx < -180.0) dx += 360.0;
                dx *= std::cos(deg2rad(c.lat));
                const double r2 = dx * dx + dy * dy;
                const double r = std::sqrt(r2);
                const auto k = mslp.idx(s, 0, i, j);
                mslp.values[k] = static_cast<float>(
                    ambient -
                    v.depression_hpa * std::exp(-r2 / (v.sigma_deg * v.sigma_deg)));
                z500.values[k] = 5700.0f;
                z300.values[k] = static_cast<float>(
                    5700.0 + 4400.0 + v.thickness_bump_m * std::exp(-r2 / 9.0));
                const double vt =
                    r < 1e-9 ? 0.0
                             : v.peak_wind_ms * r * std::exp(0.5 * (1.0 - r2));
                u10.values[k] = static_cast<float>(r < 1e-9 ? 0.0 : -vt * dy / r);
                v10.values[k] = static_cast<float>(r < 1e-9 ? 0.0 : vt * dx / r);
            }
        }
    }
    for (const auto* c : {&mslp, &z300, &z500, &u10, &v10})
        write_cube(*c, dir, c->variable);
    nlohmann::ordered_json truth;
    truth["kind"] = "vortex";
    truth["centers"] = std::move(centers);
    return truth;
}

// ---------------------------------------------------------------------------
// AR plume

struct ArPlumeSpec {
    GridSpec grid{.lat0 = 25.0, .lon0 = -150.0, .dlat = 0.25, .dlon = 0.25,
                  .nlat = 81, .nlon = 161};
    UtcSeconds t0 = utc_from_parts(2021, 10, 20);
    int steps = 8;
    int spine_row = 52;          // 38N on the default grid
    int length_cells = 100;
    int cells_per_step = 10;     // eastward advance per 6 h
    double amplitude = 600.0;
    double halfwidth_cells = 4.0;
    double ridge_amplitude = 1200.0;
    double coast_lon = -120.0;   // land east of this longitude
};

/// Writes ivt_u/ivt_v cubes of a zonal filament advancing east toward a
/// meridional coastline, plus the land mask and truth (first land contact).
inline nlohmann::ordered_json generate_ar_plume(const ArPlumeSpec& a,
                                                const fs::path& dir) {
    const GridSpec& spec = a.grid;
    FieldCube ivt_u;
    ivt_u.spec = spec;
    ivt_u.variable = "ivt_u";
    ivt_u.units = "kg/m/s";
    for (int s = 0; s < a.steps; ++s)
        ivt_u.times.push_back(a.t0 + s * 6 * kSecondsPerHour);
    ivt_u.values.assign(static_cast<std::size_t>(a.steps) * spec.size(), 0.0f);

    int coast_col = spec.nlon;
    for (int j = 0; j < spec.nlon; ++j)
        if (spec.lon(j) >= a.coast_lon) {
            coast_col = j;
            break;
        }

    std::optional<int> first_land_step;
    for (int s = 0; s < a.steps; ++s) {
        const int col_lo = a.cells_per_step * s;
        const int col_hi = std::min(spec.nlon - 1, col_lo + a.length_cells - 1);
        for (int i = 0; i < spec.nlat; ++i) {
            const double di = i - a.spine_row;
            double v = a.amplitude *
                       std::exp(-di * di / (2 * a.halfwidth_cells * a.halfwidth_cells));
            if (i == a.spine_row) v += a.ridge_amplitude;
            if (v < 300.0) continue;
            for (int j = col_lo; j <= col_hi; ++j)
                ivt_u.values[ivt_u.idx(s, 0, i, j)] = static_cast<float>(v);
        }
        if (!first_land_step && col_hi >= coast_col) first_land_step = s;
    }
    auto ivt_v = ivt_u;
    ivt_v.variable = "ivt_v";
    std::fill(ivt_v.values.begin(), ivt_v.values.end(), 0.0f);
    write_cube(ivt_u, dir, "ivt_u");
    write_cube(ivt_v, dir, "ivt_v");
    write_cube(half_plane_land(spec, a.coast_lon, true).to_cube(), dir,
               "landmask");

    nlohmann::ordered_json truth;
    truth["kind"] = "ar_plume";
    if (first_land_step) {
        truth["first_land_time"] =
            format_iso8601(a.t0 + *first_land_step * 6 * kSecondsPerHour);
        truth["first_land_lead_hours"] = *first_land_step * 6;
    } else {
        truth["first_land_time"] = nullptr;
    }
    return truth;
}

// ---------------------------------------------------------------------------
// Heat series

struct HeatSeriesSpec {
    GridSpec grid{.lat0 = 40.0, .lon0 = -105.0, .dlat = 0.5, .dlon = 0.5,
                  .nlat = 12, .nlon = 12};
    UtcSeconds t0 = utc_from_parts(2021, 6, 21);
    int days = 10;
    int event_start_day = 3;  // offset from t0
    int event_run_days = 5;
    double background_k = 295.0;
    double event_peak_k = 306.0;
    double climatology_k = 300.0;
};

/// Writes a 6-hourly t2m cube whose afternoon samples exceed the (constant)
/// 85th-percentile climatology on the event days, plus the climatology and
/// an all-land mask.
inline nlohmann::ordered_json generate_heat_series(const HeatSeriesSpec& h,
                                                   const fs::path& dir) {
    FieldCube t2m;
    t2m.spec = h.grid;
    t2m.variable = "t2m";
    t2m.units = "K";
    const int n = h.days * 4;
    for (int t = 0; t < n; ++t)
        t2m.times.push_back(h.t0 + t * 6 * kSecondsPerHour);
    t2m.values.resize(static_cast<std::size_t>(n) * h.grid.size());
    for (int t = 0; t < n; ++t) {
        const int day = t / 4, hour = t % 4;
        const bool event = day >= h.event_start_day &&
                           day < h.event_start_day + h.event_run_days &&
                           (hour == 2 || hour == 3);
        const float v = static_cast<float>(event ? h.event_peak_k : h.background_k);
        std::fill(t2m.slice_mut(t).begin(), t2m.slice_mut(t).end(), v);
    }
    write_cube(t2m, dir, "t2m");
    write_constant_climatology(h.grid, 0.85,
                               static_cast<float>(h.climatology_k), dir,
                               "clim85");
    LandMask all_land;
    all_land.spec = h.grid;
    all_land.mask.assign(h.grid.size(), 1);
    write_cube(all_land.to_cube(), dir, "landmask");

    nlohmann::ordered_json truth;
    truth["kind"] = "heat_series";
    truth["start_day"] =
        format_iso8601(h.t0 + h.event_start_day * kSecondsPerDay);
    truth["run_days"] = h.event_run_days;
    return truth;
}

// ---------------------------------------------------------------------------
// Sounding and reports

inline nlohmann::ordered_json generate_sounding(const fs::path& dir,
                                                unsigned seed = 1) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> sfc(299.0, 305.0);
    std::uniform_real_distribution<double> dew(2.0, 5.0);
    const double t0 = sfc(rng);
    const double dd = dew(rng);
    fs::create_directories(dir);
    std::ofstream f(dir / "sounding.csv");
    f << "pressure_hpa,temperature_k,dewpoint_k\n";
    std::vector<double> p, t, td;
    for (double pp = 1000.0; pp >= 150.0; pp -= 25.0) {
        const double temp = pp >= 880.0 ? t0 - (1000 - pp) * 0.02
                                        : t0 - 2.4 - (880 - pp) * 0.066;
        const double dp = pp >= 880.0 ? temp - dd : temp - 20.0;
        p.push_back(pp);
        t.push_back(temp);
        td.push_back(dp);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.1f,%.3f,%.3f\n", pp, temp, dp);
        f << buf;
    }
    const auto prof = SoundingProfile::from_dewpoint(p, t, td);
    nlohmann::ordered_json truth;
    truth["kind"] = "sounding";
    truth["mlcape_jkg"] = compute_mlcape(prof);
    return truth;
}

struct ReportsSpec {
    int count = 12;
    Region region{33.0, 38.0, -102.0, -96.0};
    UtcSeconds t0 = utc_from_parts(2021, 5, 20, 18);
    UtcSeconds window_seconds = 6 * kSecondsPerHour;
    unsigned seed = 1;
    bool include_wind = true;
};

inline nlohmann::ordered_json generate_reports(const ReportsSpec& r,
                                               const fs::path& dir,
                                               const std::string& name = "reports") {
    std::mt19937 rng(r.seed);
    std::uniform_real_distribution<double> lat(r.region.lat_min, r.region.lat_max);
    std::uniform_real_distribution<double> lon(r.region.lon_min, r.region.lon_max);
    std::uniform_int_distribution<UtcSeconds> dt(0, r.window_seconds);
    ReportSet reports;
    int tornado = 0, hail = 0, wind = 0;
    for (int k = 0; k < r.count; ++k) {
        Report rep;
        rep.time = r.t0 + dt(rng);
        rep.lat = lat(rng);
        rep.lon = lon(rng);
        const int kind = r.include_wind ? k % 3 : k % 2;
        rep.type = kind == 0 ? ReportType::tornado
                             : (kind == 1 ? ReportType::hail : ReportType::wind);
        (rep.type == ReportType::tornado
             ? tornado
             : rep.type == ReportType::hail ? hail : wind)++;
        reports.push_back(rep);
    }
    std::sort(reports.begin(), reports.end(),
              [](const Report& a, const Report& b) { return a.time < b.time; });
    fs::create_directories(dir);
    std::ofstream f(dir / (name + ".csv"));
    write_reports_csv(f, reports);
    nlohmann::ordered_json truth;
    truth["kind"] = "reports";
    truth["count"] = r.count;
    truth["tornado"] = tornado;
    truth["hail"] = hail;
    truth["wind"] = wind;
    return truth;
}

// ---------------------------------------------------------------------------
// Self-verification workspace: for every event type, a case whose forecast
// files are identical to its target files, so every error metric must come
// out zero (and ratio scores one).

struct SelfVerifyLayout {
    fs::path root;
    std::string model = "demo";

    fs::path catalog() const { return root / "catalog"; }
    fs::path targets(const std::string& case_id) const {
        return root / "targets" / case_id;
    }
    fs::path forecasts(const std::string& case_id, UtcSeconds init) const {
        return root / "forecasts" / model / case_id / format_compact(init);
    }
};

inline void copy_tree(const fs::path& from, const fs::path& to) {
    fs::create_directories(to);
    for (const auto& entry : fs::directory_iterator(from))
        fs::copy_file(entry.path(), to / entry.path().filename(),
                      fs::copy_options::overwrite_existing);
}

inline nlohmann::ordered_json build_selfverify_workspace(const fs::path& root,
                                                         const std::string& model) {
    const SelfVerifyLayout lay{root, model};
    nlohmann::ordered_json truths;

    // Heat wave.
    {
        HeatSeriesSpec h;
        const auto truth = generate_heat_series(h, lay.targets("hw_synth"));
        CaseStudy c;
        c.id = "hw_synth";
        c.type = EventType::heat_wave;
        c.region = {h.grid.lat0, h.grid.lat(h.grid.nlat - 1), h.grid.lon0,
                    h.grid.lon(h.grid.nlon - 1)};
        c.start = h.t0 + h.event_start_day * kSecondsPerDay;
        c.end = h.t0 + (h.event_start_day + h.event_run_days + 1) * kSecondsPerDay;
        c.seed = LatLon{42.5, -102.5};
        c.region_label = "north_america";
        c.save(lay.catalog());
        const UtcSeconds init = h.t0;
        const auto fdir = lay.forecasts(c.id, init);
        fs::create_directories(fdir);
        for (const auto& name : {"t2m"}) {
            fs::copy_file(lay.targets(c.id) / (std::string(name) + ".json"),
                          fdir / (std::string(name) + ".json"),
                          fs::copy_options::overwrite_existing);
            fs::copy_file(lay.targets(c.id) / (std::string(name) + ".f32"),
                          fdir / (std::string(name) + ".f32"),
                          fs::copy_options::overwrite_existing);
        }
        truths["hw_synth"] = truth;
    }

    // Freeze: cold snap below both freezing and the 15th percentile.
    {
        const GridSpec grid{.lat0 = 44.0, .lon0 = 10.0, .dlat = 0.5, .dlon = 0.5,
                            .nlat = 12, .nlon = 12};
        const auto t0 = utc_from_parts(2021, 12, 1);
        const int days = 10, start_day = 3, run = 5;
        FieldCube t2m;
        t2m.spec = grid;
        t2m.variable = "t2m";
        t2m.units = "K";
        for (int t = 0; t < days * 4; ++t)
            t2m.times.push_back(t0 + t * 6 * kSecondsPerHour);
        t2m.values.resize(static_cast<std::size_t>(days * 4) * grid.size());
        for (int t = 0; t < days * 4; ++t) {
            const int day = t / 4, hour = t % 4;
            const bool event =
                day >= start_day && day < start_day + run && hour < 2;
            std::fill(t2m.slice_mut(t).begin(), t2m.slice_mut(t).end(),
                      event ? 268.0f : 280.0f);
        }
        const auto tdir = lay.targets("fz_synth");
        write_cube(t2m, tdir, "t2m");
        write_constant_climatology(grid, 0.15, 272.0f, tdir, "clim15");
        LandMask all_land;
        all_land.spec = grid;
        all_land.mask.assign(grid.size(), 1);
        write_cube(all_land.to_cube(), tdir, "landmask");

        CaseStudy c;
        c.id = "fz_synth";
        c.type = EventType::freeze;
        c.region = {grid.lat0, grid.lat(grid.nlat - 1), grid.lon0,
                    grid.lon(grid.nlon - 1)};
        c.start = t0 + start_day * kSecondsPerDay;
        c.end = t0 + (start_day + run + 1) * kSecondsPerDay;
        c.region_label = "europe";
        c.save(lay.catalog());
        copy_tree(tdir, lay.forecasts(c.id, t0));
        fs::remove(lay.forecasts(c.id, t0) / "landmask.json");
        fs::remove(lay.forecasts(c.id, t0) / "landmask.f32");
        fs::remove(lay.forecasts(c.id, t0) / "clim15.json");
        fs::remove(lay.forecasts(c.id, t0) / "clim15.f32");
        nlohmann::ordered_json truth;
        truth["kind"] = "freeze_series";
        truth["start_day"] = format_iso8601(t0 + start_day * kSecondsPerDay);
        truth["run_days"] = run;
        truths["fz_synth"] = truth;
    }

    // Marginal temperature: in-band everywhere for the whole window.
    {
        const GridSpec grid{.lat0 = 40.0, .lon0 = -105.0, .dlat = 0.5,
                            .dlon = 0.5, .nlat = 12, .nlon = 12};
        const auto t0 = utc_from_parts(2021, 3, 1);
        const auto t2m = constant_cube(grid, t0, 8 * 4, "t2m", "K", 300.0f);
        const auto tdir = lay.targets("mt_synth");
        write_cube(t2m, tdir, "t2m");
        write_constant_climatology(grid, 0.16, 290.0f, tdir, "clim16");
        write_constant_climatology(grid, 0.84, 310.0f, tdir, "clim84");
        LandMask all_land;
        all_land.spec = grid;
        all_land.mask.assign(grid.size(), 1);
        write_cube(all_land.to_cube(), tdir, "landmask");
        CaseStudy c;
        c.id = "mt_synth";
        c.type = EventType::marginal_temp;
        c.region = {grid.lat0, grid.lat(grid.nlat - 1), grid.lon0,
                    grid.lon(grid.nlon - 1)};
        c.start = t0 + kSecondsPerDay;
        c.end = t0 + 7 * kSecondsPerDay;
        c.region_label = "north_america";
        c.save(lay.catalog());
        const auto fdir = lay.forecasts(c.id, t0);
        fs::create_directories(fdir);
        for (const char* ext : {".json", ".f32"})
            fs::copy_file(tdir / (std::string("t2m") + ext),
                          fdir / (std::string("t2m") + ext),
                          fs::copy_options::overwrite_existing);
        nlohmann::ordered_json truth;
        truth["kind"] = "marginal_series";
        truths["mt_synth"] = truth;
    }

    // Severe and marginal-severe: CBSS constructed to cover the PPH region.
    for (const bool marginal : {false, true}) {
        const std::string id = marginal ? "ms_synth" : "sv_synth";
        const GridSpec grid{.lat0 = 30.0, .lon0 = -105.0, .dlat = 0.25,
                            .dlon = 0.25, .nlat = 48, .nlon = 48};
        const auto day0 = utc_from_parts(2021, 5, 20);
        ReportSet reports;
        const int n_reports = marginal ? 3 : 6;
        for (int k = 0; k < n_reports; ++k) {
            Report r;
            r.time = day0 + (18 + k % 4) * kSecondsPerHour;
            r.lat = 35.0 + 0.3 * (k % 3);
            r.lon = -99.5 + 0.4 * (k % 2) - 0.2 * k;
            r.type = marginal ? ReportType::hail
                              : (k % 2 == 0 ? ReportType::tornado
                                            : ReportType::hail);
            reports.push_back(r);
        }
        const auto tdir = lay.targets(id);
        fs::create_directories(tdir);
        {
            std::ofstream f(tdir / "reports.csv");
            write_reports_csv(f, reports);
        }
        // CBSS field covering exactly the PPH >= 0.01 region on the day.
        const auto pph = compute_pph(reports, grid);
        FieldCube cbss;
        cbss.spec = grid;
        cbss.variable = "cbss";
        cbss.units = "m3/s3";
        for (int t = 0; t < 4; ++t)
            cbss.times.push_back(day0 + t * 6 * kSecondsPerHour);
        cbss.values.assign(static_cast<std::size_t>(4) * grid.size(), 0.0f);
        for (int t = 0; t < 4; ++t)
            for (std::size_t k = 0; k < grid.size(); ++k)
                if (pph.prob[k] >= 0.01f)
                    cbss.values[t * grid.size() + k] = 20000.0f;

        CaseStudy c;
        c.id = id;
        c.type = marginal ? EventType::marginal_severe : EventType::severe;
        c.region = {grid.lat0, grid.lat(grid.nlat - 1), grid.lon0,
                    grid.lon(grid.nlon - 1)};
        c.start = day0;
        c.end = day0 + kSecondsPerDay;
        c.region_label = "north_america";
        c.save(lay.catalog());
        const int n_inits = marginal ? 1 : 3;
        for (int lead_days = 1; lead_days <= n_inits; ++lead_days)
            write_cube(cbss, lay.forecasts(id, day0 - lead_days * kSecondsPerDay),
                       "cbss");
        nlohmann::ordered_json truth;
        truth["kind"] = marginal ? "marginal_severe" : "severe";
        truth["reports"] = n_reports;
        if (!marginal) truth["early_signal_days"] = 3.0;
        truths[id] = truth;
    }

    // Atmospheric river.
    {
        ArPlumeSpec a;
        const auto truth = generate_ar_plume(a, lay.targets("ar_synth"));
        CaseStudy c;
        c.id = "ar_synth";
        c.type = EventType::atmospheric_river;
        c.region = {a.grid.lat0, a.grid.lat(a.grid.nlat - 1), a.grid.lon0,
                    a.grid.lon(a.grid.nlon - 1)};
        c.start = a.t0;
        c.end = a.t0 + a.steps * 6 * kSecondsPerHour;
        c.region_label = "north_america";
        c.save(lay.catalog());
        const auto fdir = lay.forecasts(c.id, a.t0);
        fs::create_directories(fdir);
        for (const auto name : {"ivt_u", "ivt_v"})
            for (const char* ext : {".json", ".f32"})
                fs::copy_file(lay.targets(c.id) / (std::string(name) + ext),
                              fdir / (std::string(name) + ext),
                              fs::copy_options::overwrite_existing);
        truths["ar_synth"] = truth;
    }

    // Tropical cyclone.
    {
        VortexSpec v;
        const auto truth = generate_vortex(v, lay.targets("tc_synth"));
        write_cube(half_plane_land(v.grid, -72.0, false).to_cube(),
                   lay.targets("tc_synth"), "landmask");
        CaseStudy c;
        c.id = "tc_synth";
        c.type = EventType::tropical_cyclone;
        c.region = {v.grid.lat0, v.grid.lat(v.grid.nlat - 1), v.grid.lon0,
                    v.grid.lon(v.grid.nlon - 1)};
        c.start = v.t0;
        c.end = v.t0 + v.steps * 6 * kSecondsPerHour;
        c.region_label = "western_hemisphere";
        c.save(lay.catalog());
        const auto fdir = lay.forecasts(c.id, v.t0);
        fs::create_directories(fdir);
        for (const auto name : {"mslp", "z300", "z500", "u10", "v10"})
            for (const char* ext : {".json", ".f32"})
                fs::copy_file(lay.targets(c.id) / (std::string(name) + ext),
                              fdir / (std::string(name) + ext),
                              fs::copy_options::overwrite_existing);
        truths["tc_synth"] = truth;
    }

    write_truth(root, truths);
    return truths;
}

}  // namespace ewb::synth
