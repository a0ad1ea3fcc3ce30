#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ewb/ar.hpp"
#include "ewb/catalog.hpp"
#include "ewb/climatology.hpp"
#include "ewb/config.hpp"
#include "ewb/container.hpp"
#include "ewb/convective.hpp"
#include "ewb/landfall.hpp"
#include "ewb/metrics.hpp"
#include "ewb/tc.hpp"

namespace ewb {

namespace fs = std::filesystem;

/// Raised when a case cannot be evaluated for lack of inputs; the harness
/// turns it into a diagnostic record and a partial exit code.
struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline FieldCube require_cube(const fs::path& path) {
    if (!fs::exists(path))
        throw MissingInput("missing input: " + path.string());
    return load_cube(path);
}

inline std::optional<FieldCube> maybe_cube(const fs::path& path) {
    if (!fs::exists(path)) return std::nullopt;
    return load_cube(path);
}

inline std::optional<LandMask> maybe_landmask(const fs::path& dir) {
    const auto p = dir / "landmask.json";
    if (!fs::exists(p)) return std::nullopt;
    return LandMask::from_cube(load_cube(p));
}

/// Init-time directories under forecasts/<model>/<case>/, sorted by time.
inline std::vector<std::pair<UtcSeconds, fs::path>> list_init_dirs(
    const fs::path& case_dir) {
    std::vector<std::pair<UtcSeconds, fs::path>> inits;
    if (!fs::is_directory(case_dir)) return inits;
    for (const auto& entry : fs::directory_iterator(case_dir)) {
        if (!entry.is_directory()) continue;
        const auto name = entry.path().filename().string();
        // Compact form YYYYMMDDTHHMMSSZ.
        if (name.size() != 16 || name[8] != 'T') continue;
        const std::string iso = name.substr(0, 4) + "-" + name.substr(4, 2) +
                                "-" + name.substr(6, 2) + "T" +
                                name.substr(9, 2) + ":" + name.substr(11, 2) +
                                ":" + name.substr(13, 2) + "Z";
        inits.emplace_back(parse_iso8601(iso), entry.path());
    }
    std::sort(inits.begin(), inits.end());
    return inits;
}

inline int lead_hours_of(UtcSeconds at, UtcSeconds init) {
    return static_cast<int>((at - init) / kSecondsPerHour);
}

/// First day of the first merged run (gap tolerance one day) of at least
/// min_days days on which a strict majority of counted gridpoints qualify.
inline std::optional<UtcSeconds> event_start_day(const DailyFlags& flags,
                                                 const LandMask* landmask,
                                                 int min_days = 3) {
    std::vector<std::int64_t> majority_days;
    for (int d = 0; d < flags.nday(); ++d) {
        int total = 0, good = 0;
        for (int i = 0; i < flags.spec.nlat; ++i)
            for (int j = 0; j < flags.spec.nlon; ++j) {
                if (landmask && !landmask->land(i, j)) continue;
                ++total;
                if (flags.at(d, i, j)) ++good;
            }
        if (total > 0 && 2 * good > total) majority_days.push_back(flags.days[d]);
    }
    // Merged runs over the majority-day sequence.
    for (std::size_t a = 0; a < majority_days.size(); ++a) {
        std::int64_t last = majority_days[a];
        for (std::size_t b = a; b < majority_days.size(); ++b) {
            if (majority_days[b] - last > 2) break;
            last = majority_days[b];
            if (last - majority_days[a] + 1 >= min_days)
                return majority_days[a] * kSecondsPerDay;
        }
    }
    return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-event-type evaluation

class CaseEvaluator {
  public:
    CaseEvaluator(const CaseStudy& c, std::string model, fs::path forecasts_dir,
                  fs::path targets_dir, const ParamOverrides& global)
        : case_(c), model_(std::move(model)),
          forecasts_dir_(std::move(forecasts_dir)),
          targets_dir_(std::move(targets_dir)) {
        params_ = global;
        params_.merge(c.parameters);
    }

    /// Evaluates every init time found for this (model, case). Missing
    /// inputs yield one diagnostic record instead of results.
    std::vector<MetricRecord> run() {
        records_.clear();
        incomplete_ = false;
        try {
            switch (case_.type) {
                case EventType::heat_wave:
                case EventType::freeze:
                case EventType::marginal_temp:
                    evaluate_temperature();
                    break;
                case EventType::severe:
                case EventType::marginal_severe:
                    evaluate_severe();
                    break;
                case EventType::atmospheric_river:
                    evaluate_ar();
                    break;
                case EventType::tropical_cyclone:
                    evaluate_tc();
                    break;
            }
        } catch (const MissingInput& e) {
            records_.clear();
            emit(0, 0, "skipped_missing_input", std::nullopt, "");
            diagnostic_ = e.what();
            incomplete_ = true;
        }
        return records_;
    }

    bool incomplete() const { return incomplete_; }
    const std::string& diagnostic() const { return diagnostic_; }

  private:
    void emit(UtcSeconds init, int lead_hours, const std::string& metric,
              std::optional<double> value, const std::string& units) {
        records_.push_back({model_, case_.id, init, lead_hours, metric, value,
                            units});
    }

    fs::path target_dir() const { return targets_dir_ / case_.id; }
    fs::path model_case_dir() const {
        return forecasts_dir_ / model_ / case_.id;
    }

    // --- temperature family ------------------------------------------------

    void evaluate_temperature() {
        const auto tdir = target_dir();
        auto obs = detail::require_cube(tdir / "t2m.json")
                       .subset(case_.region)
                       .subset_time(case_.start, case_.end);
        std::optional<LandMask> landmask;
        if (auto lm = detail::maybe_landmask(tdir)) {
            FieldCube lm_cube = lm->to_cube().subset(case_.region);
            landmask = LandMask::from_cube(lm_cube);
        }

        PercentileClimatology clim_low, clim_high;
        const bool is_heat = case_.type == EventType::heat_wave;
        const bool is_freeze = case_.type == EventType::freeze;
        if (is_heat)
            clim_high = PercentileClimatology::from_cube(
                detail::require_cube(tdir / "clim85.json").subset(case_.region),
                0.85);
        else if (is_freeze)
            clim_low = PercentileClimatology::from_cube(
                detail::require_cube(tdir / "clim15.json").subset(case_.region),
                0.15);
        else {
            clim_low = PercentileClimatology::from_cube(
                detail::require_cube(tdir / "clim16.json").subset(case_.region),
                0.16);
            clim_high = PercentileClimatology::from_cube(
                detail::require_cube(tdir / "clim84.json").subset(case_.region),
                0.84);
        }

        std::optional<UtcSeconds> actual_start;
        if (is_heat)
            actual_start = detail::event_start_day(
                heatwave_daily_flags(obs, clim_high),
                landmask ? &*landmask : nullptr);
        else if (is_freeze)
            actual_start = detail::event_start_day(
                freeze_daily_flags(obs, clim_low),
                landmask ? &*landmask : nullptr);

        const auto inits = detail::list_init_dirs(model_case_dir());
        if (inits.empty()) throw MissingInput("no forecast inits for " + case_.id);
        const double relax_hours = params_.get("metrics.relax_hours", 24.0);
        const int relax_days = params_.get("metrics.relax_days", 1);
        const bool area_weighted = params_.get("metrics.area_weighted", false);

        for (const auto& [init, dir] : inits) {
            auto fc_full = detail::require_cube(dir / "t2m.json").subset(case_.region);
            const int lead = detail::lead_hours_of(case_.start, init);
            FieldCube fc;
            try {
                fc = fc_full.subset_time(case_.start, case_.end);
            } catch (const std::runtime_error&) {
                emit(init, lead, "incomplete", std::nullopt, "");
                incomplete_ = true;
                continue;
            }
            // Pointwise scores over common valid times.
            std::vector<double> f, o;
            std::size_t matched_times = 0;
            for (int tf = 0; tf < fc.ntime(); ++tf) {
                const auto it = std::find(obs.times.begin(), obs.times.end(),
                                          fc.times[tf]);
                if (it == obs.times.end()) continue;
                ++matched_times;
                const int to = static_cast<int>(it - obs.times.begin());
                for (int i = 0; i < obs.spec.nlat; ++i)
                    for (int j = 0; j < obs.spec.nlon; ++j) {
                        if (landmask && !landmask->land(i, j)) continue;
                        f.push_back(fc.at(tf, 0, i, j));
                        o.push_back(obs.at(to, 0, i, j));
                    }
            }
            if (matched_times * 2 < obs.times.size()) {
                emit(init, lead, "incomplete", std::nullopt, "");
                incomplete_ = true;
                continue;
            }
            emit(init, lead, "mae", mae(f, o), "K");
            emit(init, lead, "rmse", rmse(f, o), "K");

            const LandMask* lm = landmask ? &*landmask : nullptr;
            const auto extreme = rmae_extreme(
                fc, obs, is_freeze ? Extreme::minimum : Extreme::maximum,
                relax_hours, lm, area_weighted);
            emit(init, lead, is_freeze ? "rmae_min" : "rmae_max", extreme.value,
                 "K");
            const auto mdm =
                rmae_maxdailymin(fc, obs, relax_days, lm, area_weighted);
            emit(init, lead, "rmae_maxdailymin", mdm.value, "K");

            if (is_heat || is_freeze) {
                std::optional<double> lead_days;
                const auto flags = is_heat
                                       ? heatwave_daily_flags(fc, clim_high)
                                       : freeze_daily_flags(fc, clim_low);
                const auto predicted = detail::event_start_day(flags, lm);
                if (predicted && actual_start)
                    lead_days = lead_time_days(*predicted, *actual_start);
                emit(init, lead, "lead_time_days", lead_days, "days");
            }
        }
    }

    // --- severe convection --------------------------------------------------

    FieldCube load_cbss(const fs::path& dir) const {
        if (auto direct = detail::maybe_cube(dir / "cbss.json")) return *direct;
        // Derive from MLCAPE and bulk shear components.
        auto mlcape = detail::require_cube(dir / "mlcape.json");
        auto u10 = detail::require_cube(dir / "u10.json");
        auto v10 = detail::require_cube(dir / "v10.json");
        auto u500 = detail::require_cube(dir / "u500.json");
        auto v500 = detail::require_cube(dir / "v500.json");
        for (const auto* c : {&u10, &v10, &u500, &v500})
            if (!c->spec.same_geometry(mlcape.spec) || c->times != mlcape.times)
                throw std::runtime_error(
                    "cbss inputs are not co-gridded in " + dir.string());
        FieldCube cbss = mlcape;
        cbss.variable = "cbss";
        cbss.units = "m3/s3";
        for (std::size_t k = 0; k < cbss.values.size(); ++k) {
            const double shear = compute_bulk_shear(u10.values[k], v10.values[k],
                                                    u500.values[k], v500.values[k]);
            cbss.values[k] =
                static_cast<float>(compute_cbss(std::max(0.0f, mlcape.values[k]),
                                                shear));
        }
        return cbss;
    }

    void evaluate_severe() {
        const auto tdir = target_dir();
        const auto reports_path = tdir / "reports.csv";
        if (!fs::exists(reports_path))
            throw MissingInput("missing input: " + reports_path.string());
        std::ifstream rf(reports_path);
        auto reports = read_reports_csv(rf);
        std::erase_if(reports, [&](const Report& r) {
            return r.time < case_.start || r.time > case_.end ||
                   !case_.region.contains(r.lat, r.lon);
        });

        const auto inits = detail::list_init_dirs(model_case_dir());
        if (inits.empty()) throw MissingInput("no forecast inits for " + case_.id);

        const double cbss_threshold =
            params_.get("convective.cbss_threshold", kCbssSevereThreshold);
        const double pph_threshold =
            params_.get("convective.pph_csi_threshold", 0.01);
        const double coverage = params_.get("convective.coverage", 0.5);
        const auto pph_params = make_pph_params(params_);

        std::optional<PphField> pph;
        std::vector<std::pair<double, std::vector<std::uint8_t>>> cbss_by_lead;

        for (const auto& [init, dir] : inits) {
            auto cbss = load_cbss(dir).subset(case_.region);
            try {
                cbss = cbss.subset_time(case_.start, case_.end);
            } catch (const std::runtime_error&) {
                emit(init, detail::lead_hours_of(case_.start, init), "incomplete",
                     std::nullopt, "");
                incomplete_ = true;
                continue;
            }
            if (!pph) pph = compute_pph(reports, cbss.spec, pph_params);

            // Window maximum per gridpoint defines the predicted risk area.
            std::vector<std::uint8_t> pred(cbss.spec.size(), 0);
            for (int t = 0; t < cbss.ntime(); ++t) {
                const auto s = cbss.slice(t);
                for (std::size_t k = 0; k < s.size(); ++k)
                    if (s[k] >= cbss_threshold) pred[k] = 1;
            }
            std::vector<std::uint8_t> target(pph->prob.size(), 0);
            for (std::size_t k = 0; k < target.size(); ++k)
                if (pph->prob[k] >= pph_threshold) target[k] = 1;

            const int lead = detail::lead_hours_of(case_.start, init);
            const auto c = region_contingency(pred, target, cbss.spec);
            emit(init, lead, "csi", c.csi, "1");
            emit(init, lead, "far", c.far, "1");
            const auto hm = report_hits_misses(pred, cbss.spec, reports);
            emit(init, lead, "hits", static_cast<double>(hm.hits), "count");
            emit(init, lead, "misses", static_cast<double>(hm.misses), "count");
            cbss_by_lead.emplace_back(
                static_cast<double>(case_.start - init) / kSecondsPerDay,
                std::move(pred));
        }

        if (case_.type == EventType::severe && pph && !cbss_by_lead.empty()) {
            std::sort(cbss_by_lead.begin(), cbss_by_lead.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
            std::optional<double> signal;
            bool ok = true;
            try {
                signal = early_signal(cbss_by_lead, *pph, pph_threshold, coverage);
            } catch (const std::invalid_argument&) {
                ok = false;
            }
            if (ok)
                emit(inits.front().first,
                     detail::lead_hours_of(case_.start, inits.front().first),
                     "early_signal_days", signal, "days");
        }
    }

    // --- atmospheric rivers --------------------------------------------------

    std::vector<std::pair<UtcSeconds, std::vector<ArObject>>> ar_objects_from(
        const fs::path& dir, const ArParams& ar_params, const LandMask& landmask) {
        std::vector<IvtField> fields;
        if (fs::exists(dir / "ivt_u.json")) {
            auto iu = detail::require_cube(dir / "ivt_u.json").subset(case_.region);
            auto iv = detail::require_cube(dir / "ivt_v.json").subset(case_.region);
            for (int t = 0; t < iu.ntime(); ++t) {
                if (iu.times[t] < case_.start || iu.times[t] > case_.end) continue;
                IvtField f;
                f.spec = iu.spec;
                f.time = iu.times[t];
                f.ivt_u.assign(iu.slice(t).begin(), iu.slice(t).end());
                f.ivt_v.assign(iv.slice(t).begin(), iv.slice(t).end());
                f.ivt.resize(f.ivt_u.size());
                for (std::size_t k = 0; k < f.ivt.size(); ++k)
                    f.ivt[k] = static_cast<float>(
                        std::hypot(f.ivt_u[k], f.ivt_v[k]));
                fields.push_back(std::move(f));
            }
        } else {
            auto q = detail::require_cube(dir / "q.json").subset(case_.region);
            auto u = detail::require_cube(dir / "u.json").subset(case_.region);
            auto v = detail::require_cube(dir / "v.json").subset(case_.region);
            for (auto& f : compute_ivt(q, u, v))
                if (f.time >= case_.start && f.time <= case_.end)
                    fields.push_back(std::move(f));
        }
        std::vector<std::pair<UtcSeconds, std::vector<ArObject>>> out;
        for (const auto& f : fields)
            out.emplace_back(f.time, detect_ar_objects(f, ar_params, landmask));
        return out;
    }

    void evaluate_ar() {
        const auto tdir = target_dir();
        auto landmask_full = detail::maybe_landmask(tdir);
        if (!landmask_full)
            throw MissingInput("missing input: " +
                               (tdir / "landmask.json").string());
        const LandMask landmask =
            LandMask::from_cube(landmask_full->to_cube().subset(case_.region));
        const auto ar_params = make_ar_params(params_);

        const auto target_objs = ar_objects_from(tdir, ar_params, landmask);
        if (target_objs.empty())
            throw MissingInput("no target IVT fields for " + case_.id);
        const GridSpec spec = landmask.spec;

        const auto inits = detail::list_init_dirs(model_case_dir());
        if (inits.empty()) throw MissingInput("no forecast inits for " + case_.id);
        for (const auto& [init, dir] : inits) {
            const auto fc_objs = ar_objects_from(dir, ar_params, landmask);
            const auto lead = ar_landfall_lead_time(init, spec, fc_objs, target_objs);
            emit(init, 0, "ar_lead_hours", lead, "hours");

            for (const auto& [t, objs] : fc_objs) {
                const auto tgt_it = std::find_if(
                    target_objs.begin(), target_objs.end(),
                    [&](const auto& p) { return p.first == t; });
                if (tgt_it == target_objs.end()) continue;
                const ArObject* fbest = nullptr;
                for (const auto& o : objs)
                    if (o.land_size > 0 && (!fbest || o.land_size > fbest->land_size))
                        fbest = &o;
                const ArObject* tbest = nullptr;
                for (const auto& o : tgt_it->second)
                    if (o.land_size > 0 && (!tbest || o.land_size > tbest->land_size))
                        tbest = &o;
                if (!fbest || !tbest) continue;
                const auto cmp = ar_displacement_and_iou(*fbest, *tbest, spec);
                const int lead_h = detail::lead_hours_of(t, init);
                emit(init, lead_h, "ar_displacement_km", cmp.displacement_km, "km");
                emit(init, lead_h, "ar_iou", cmp.iou, "1");
            }
        }
    }

    // --- tropical cyclones ---------------------------------------------------

    void evaluate_tc() {
        const auto tdir = target_dir();
        auto landmask_opt = detail::maybe_landmask(tdir);
        if (!landmask_opt)
            throw MissingInput("missing input: " +
                               (tdir / "landmask.json").string());
        const int min_feature = params_.get("landfall.min_feature_cells", 4);
        const LandMask landmask =
            remove_small_land_features(*landmask_opt, min_feature);
        const auto tc_params = make_tc_params(params_);

        // Analysis track: a CSV when provided, otherwise derived from target
        // fields with the same tracker.
        std::vector<Track> analysis;
        if (fs::exists(tdir / "track.csv")) {
            std::ifstream f(tdir / "track.csv");
            analysis = read_tracks_csv(f);
        } else {
            analysis = track_from_fields(tdir, tc_params, nullptr);
        }
        if (analysis.empty())
            throw MissingInput("no analysis track for " + case_.id);
        const Track& reference = analysis.front();

        std::vector<LandfallEvent> target_landfalls =
            detect_landfalls(reference, landmask);

        const auto mode = params_.get("landfall.mode", std::string("first")) ==
                                  std::string("next")
                              ? LandfallMode::next
                              : LandfallMode::first;
        const auto inits = detail::list_init_dirs(model_case_dir());
        if (inits.empty()) throw MissingInput("no forecast inits for " + case_.id);

        for (const auto& [init, dir] : inits) {
            std::vector<UtcSeconds> valid_times;
            const auto tracks =
                track_from_fields(dir, tc_params, &reference, &valid_times);
            int lead = 0;
            if (!target_landfalls.empty())
                lead = detail::lead_hours_of(target_landfalls.front().time, init);

            std::vector<LandfallEvent> fc_landfalls;
            for (const auto& track : tracks) {
                auto events = detect_landfalls(track, landmask);
                // Landfalls before the track's first valid time are spin-up
                // artefacts relative to this initialization.
                std::erase_if(events, [&](const LandfallEvent& e) {
                    return e.time >= init && e.time < track.points.front().time;
                });
                fc_landfalls.insert(fc_landfalls.end(), events.begin(),
                                    events.end());
            }
            if (tracks.empty()) {
                emit(init, lead, "landfall_displacement_km", std::nullopt, "km");
                emit(init, lead, "landfall_time_me_hours", std::nullopt, "hours");
                emit(init, lead, "landfall_pressure_mae_hpa", std::nullopt, "hPa");
                emit(init, lead, "landfall_wind_mae_ms", std::nullopt, "m/s");
                continue;
            }
            // Upscale the analysis to the forecast valid times before pairing.
            std::vector<LandfallEvent> tgt = target_landfalls;
            const auto resampled = resample_track(reference, valid_times);
            if (resampled.points.size() >= 2)
                tgt = detect_landfalls(resampled, landmask);
            const auto pairs = filter_landfalls(fc_landfalls, tgt, mode);
            const auto m = landfall_metrics(pairs);
            emit(init, lead, "landfall_displacement_km", m.displacement_km, "km");
            emit(init, lead, "landfall_time_me_hours", m.time_me_hours, "hours");
            emit(init, lead, "landfall_pressure_mae_hpa", m.pressure_mae_hpa, "hPa");
            emit(init, lead, "landfall_wind_mae_ms", m.wind_mae_ms, "m/s");
        }
    }

    std::vector<Track> track_from_fields(const fs::path& dir,
                                         const TcParams& tc_params,
                                         const Track* reference,
                                         std::vector<UtcSeconds>* valid_times = nullptr) {
        auto mslp = detail::require_cube(dir / "mslp.json");
        auto z300 = detail::require_cube(dir / "z300.json");
        auto z500 = detail::require_cube(dir / "z500.json");
        auto u10 = detail::require_cube(dir / "u10.json");
        auto v10 = detail::require_cube(dir / "v10.json");
        std::vector<std::vector<CandidateCenter>> by_time;
        for (int t = 0; t < mslp.ntime(); ++t) {
            if (mslp.times[t] < case_.start || mslp.times[t] > case_.end) continue;
            if (valid_times) valid_times->push_back(mslp.times[t]);
            SurfaceFields f{mslp.spec, mslp.times[t], mslp.slice(t),
                            z300.slice(t), z500.slice(t), u10.slice(t),
                            v10.slice(t)};
            std::optional<LatLon> ref_point;
            if (reference && !reference->points.empty())
                ref_point = tc_detail_interp(*reference, mslp.times[t]);
            by_time.push_back(find_candidates(f, tc_params, ref_point));
        }
        const std::string source = reference ? "forecast" : "analysis";
        return stitch_tracks(by_time, tc_params, reference, source);
    }

    static LatLon tc_detail_interp(const Track& track, UtcSeconds t) {
        return detail::interpolate_track_position(track, t);
    }

    const CaseStudy case_;
    const std::string model_;
    const fs::path forecasts_dir_;
    const fs::path targets_dir_;
    ParamOverrides params_;
    std::vector<MetricRecord> records_;
    std::string diagnostic_;
    bool incomplete_ = false;
};

// ---------------------------------------------------------------------------
// Run driver

struct RunResult {
    std::vector<MetricRecord> records;
    RunManifest manifest;
    std::vector<std::string> diagnostics;  // why cases were skipped
    int exit_code = 0;  // 0 ok, 2 partial (skipped/incomplete cases)
};

inline RunResult run_evaluation(const fs::path& catalog_dir,
                                const fs::path& forecasts_dir,
                                const fs::path& targets_dir,
                                const fs::path& output_dir,
                                const ParamOverrides& overrides) {
    RunResult result;
    const auto cases = load_catalog(catalog_dir);

    std::vector<std::string> models;
    if (fs::is_directory(forecasts_dir))
        for (const auto& entry : fs::directory_iterator(forecasts_dir))
            if (entry.is_directory())
                models.push_back(entry.path().filename().string());
    std::sort(models.begin(), models.end());
    if (models.empty())
        throw std::runtime_error("no model directories under " +
                                 forecasts_dir.string());

    for (const auto& model : models) {
        for (const auto& c : cases) {
            CaseEvaluator ev(c, model, forecasts_dir, targets_dir, overrides);
            auto records = ev.run();
            if (ev.incomplete()) {
                result.exit_code = 2;
                if (!ev.diagnostic().empty())
                    result.diagnostics.push_back(model + "/" + c.id + ": " +
                                                 ev.diagnostic());
            }
            result.records.insert(result.records.end(), records.begin(),
                                  records.end());
        }
    }

    // Canonical record order keeps replays byte-identical.
    std::sort(result.records.begin(), result.records.end(),
              [](const MetricRecord& a, const MetricRecord& b) {
                  return std::tie(a.model, a.case_id, a.init_time, a.metric,
                                  a.lead_hours) <
                         std::tie(b.model, b.case_id, b.init_time, b.metric,
                                  b.lead_hours);
              });

    fs::create_directories(output_dir);
    {
        std::ofstream f(output_dir / "records.csv", std::ios::binary);
        write_records_csv(f, result.records);
    }
    {
        std::ofstream f(output_dir / "records.jsonl", std::ios::binary);
        write_records_jsonl(f, result.records);
    }

    result.manifest.models = models;
    for (const auto& c : cases) result.manifest.case_ids.push_back(c.id);
    result.manifest.catalog_dir = catalog_dir.string();
    result.manifest.forecasts_dir = forecasts_dir.string();
    result.manifest.targets_dir = targets_dir.string();
    result.manifest.output_dir = output_dir.string();
    result.manifest.parameters = overrides.raw();
    result.manifest.outputs = {"records.csv", "records.jsonl"};
    result.manifest.save(output_dir / "manifest.json");
    return result;
}

inline RunResult replay_manifest(const fs::path& manifest_path) {
    const auto m = RunManifest::load(manifest_path);
    ParamOverrides overrides;
    for (const auto& [k, v] : m.parameters) overrides.set(k, v);
    return run_evaluation(m.catalog_dir, m.forecasts_dir, m.targets_dir,
                          m.output_dir, overrides);
}

// ---------------------------------------------------------------------------
// Aggregation

struct AggregateRow {
    std::vector<std::string> keys;
    std::optional<double> mean;
    int count_defined = 0;
    int count_undefined = 0;
};

/// Group means over records. group_by may contain "model", "case",
/// "event_type", "region", "lead"; "metric" is always part of the key.
/// Undefined records are excluded from means but counted.
inline std::vector<AggregateRow> aggregate(
    std::span<const MetricRecord> records, std::vector<std::string> group_by,
    const std::vector<CaseStudy>* catalog = nullptr) {
    const std::set<std::string> allowed{"model", "case", "event_type", "region",
                                        "lead", "metric"};
    for (const auto& g : group_by)
        if (!allowed.count(g))
            throw std::invalid_argument("aggregate: unknown group key: " + g);
    if (std::find(group_by.begin(), group_by.end(), "metric") == group_by.end())
        group_by.push_back("metric");

    std::map<std::string, std::pair<EventType, std::string>> case_info;
    if (catalog)
        for (const auto& c : *catalog)
            case_info[c.id] = {c.type, c.region_label};

    const auto key_of = [&](const MetricRecord& r) {
        std::vector<std::string> key;
        for (const auto& g : group_by) {
            if (g == "model") key.push_back(r.model);
            else if (g == "case") key.push_back(r.case_id);
            else if (g == "lead") key.push_back(std::to_string(r.lead_hours));
            else if (g == "metric") key.push_back(r.metric);
            else {
                const auto it = case_info.find(r.case_id);
                if (it == case_info.end()) {
                    key.push_back("unknown");
                } else if (g == "event_type") {
                    key.push_back(to_string(it->second.first));
                } else {
                    key.push_back(it->second.second.empty() ? "unlabeled"
                                                            : it->second.second);
                }
            }
        }
        return key;
    };

    std::map<std::vector<std::string>, AggregateRow> groups;
    for (const auto& r : records) {
        auto key = key_of(r);
        auto& row = groups[key];
        row.keys = key;
        if (r.value) {
            row.mean = row.mean.value_or(0.0) + *r.value;
            ++row.count_defined;
        } else {
            ++row.count_undefined;
        }
    }
    std::vector<AggregateRow> out;
    for (auto& [key, row] : groups) {
        if (row.count_defined > 0) *row.mean /= row.count_defined;
        out.push_back(std::move(row));
    }
    return out;
}

inline void write_aggregate_csv(std::ostream& os,
                                std::span<const std::string> group_by,
                                std::span<const AggregateRow> rows) {
    bool has_metric = false;
    for (const auto& g : group_by) has_metric |= g == "metric";
    for (const auto& g : group_by) os << g << ',';
    if (!has_metric) os << "metric,";
    os << "mean,count,undefined\n";
    for (const auto& row : rows) {
        for (const auto& k : row.keys) os << k << ',';
        if (row.mean) os << detail::format_double(*row.mean);
        os << ',' << row.count_defined << ',' << row.count_undefined << '\n';
    }
}

}  // namespace ewb
