// Command-line front end: event detectors, trackers, landfall and PPH tools,
// synthetic-data generation, and the batch evaluation harness.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ewb/ar.hpp"
#include "ewb/catalog.hpp"
#include "ewb/climatology.hpp"
#include "ewb/config.hpp"
#include "ewb/container.hpp"
#include "ewb/convective.hpp"
#include "ewb/evaluate.hpp"
#include "ewb/landfall.hpp"
#include "ewb/metrics.hpp"
#include "ewb/synth.hpp"
#include "ewb/tc.hpp"

namespace fs = std::filesystem;
using namespace ewb;

namespace {

struct GlobalOpts {
    std::string config_file;
    std::vector<std::string> sets;

    ParamOverrides resolve() const {
        ParamOverrides p;
        if (!config_file.empty())
            p = ParamOverrides::from_json_file(config_file);
        for (const auto& s : sets) p.set_pair(s);
        return p;
    }
};

FieldCube runs_to_cube(const RunGrid& runs, UtcSeconds stamp) {
    FieldCube c;
    c.spec = runs.spec;
    c.times = {stamp};
    c.variable = "run_days";
    c.units = "days";
    c.values.assign(runs.run_days.begin(), runs.run_days.end());
    return c;
}

std::optional<LandMask> load_landmask(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return LandMask::from_cube(load_cube(path));
}

int run_detect(const std::string& kind, const std::string& temp_path,
               const std::string& clim_a, const std::string& clim_b,
               const std::string& landmask_path, const std::string& seed_str,
               const std::string& out_dir, const ParamOverrides& params) {
    const auto temp = load_cube(temp_path);
    const auto landmask = load_landmask(landmask_path);
    fs::create_directories(out_dir);

    std::optional<LatLon> seed;
    if (!seed_str.empty()) {
        const auto comma = seed_str.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("--seed expects lat,lon");
        seed = LatLon{std::stod(seed_str.substr(0, comma)),
                      std::stod(seed_str.substr(comma + 1))};
    }

    if (kind == "marginal") {
        const auto clim16 = PercentileClimatology::from_cube(load_cube(clim_a), 0.16);
        const auto clim84 = PercentileClimatology::from_cube(load_cube(clim_b), 0.84);
        MarginalParams mp;
        mp.min_days = params.get("marginal.min_days", mp.min_days);
        mp.min_area_km2 = params.get("marginal.min_area_km2", mp.min_area_km2);
        const auto cases = detect_marginal_regions(
            temp, clim16, clim84, landmask ? &*landmask : nullptr, mp);
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& ec : cases) {
            j.push_back({{"id", ec.id},
                         {"lat_min", ec.region.lat_min},
                         {"lat_max", ec.region.lat_max},
                         {"lon_min", ec.region.lon_min},
                         {"lon_max", ec.region.lon_max},
                         {"start", format_iso8601(ec.start)},
                         {"end", format_iso8601(ec.end)}});
        }
        std::ofstream f(fs::path(out_dir) / "marginal_cases.json");
        f << j.dump(2) << "\n";
        std::cout << cases.size() << " marginal region(s) detected\n";
        return 0;
    }

    RunGrid runs;
    if (kind == "heat") {
        const auto clim85 = PercentileClimatology::from_cube(load_cube(clim_a), 0.85);
        runs = detect_heatwave_days(temp, clim85);
    } else {
        const auto clim15 = PercentileClimatology::from_cube(load_cube(clim_a), 0.15);
        runs = detect_freeze_days(temp, clim15);
    }
    write_cube(runs_to_cube(runs, temp.times.front()), out_dir, "run_days");
    if (seed) {
        const auto region = grow_bounding_box(*seed, runs, 3,
                                              landmask ? &*landmask : nullptr);
        nlohmann::ordered_json j{{"lat_min", region.lat_min},
                                 {"lat_max", region.lat_max},
                                 {"lon_min", region.lon_min},
                                 {"lon_max", region.lon_max}};
        std::ofstream f(fs::path(out_dir) / "region.json");
        f << j.dump(2) << "\n";
        std::cout << "bounding box: [" << region.lat_min << ", "
                  << region.lat_max << "] x [" << region.lon_min << ", "
                  << region.lon_max << "]\n";
    }
    return 0;
}

int run_track_ar(const std::string& ivt_u_path, const std::string& ivt_v_path,
                 const std::string& q_path, const std::string& u_path,
                 const std::string& v_path, const std::string& landmask_path,
                 const std::string& out_path, const ParamOverrides& params) {
    const auto ar_params = make_ar_params(params);
    std::vector<IvtField> fields;
    if (!ivt_u_path.empty()) {
        const auto iu = load_cube(ivt_u_path);
        const auto iv = load_cube(ivt_v_path);
        for (int t = 0; t < iu.ntime(); ++t) {
            IvtField f;
            f.spec = iu.spec;
            f.time = iu.times[t];
            f.ivt_u.assign(iu.slice(t).begin(), iu.slice(t).end());
            f.ivt_v.assign(iv.slice(t).begin(), iv.slice(t).end());
            f.ivt.resize(f.ivt_u.size());
            for (std::size_t k = 0; k < f.ivt.size(); ++k)
                f.ivt[k] = static_cast<float>(std::hypot(f.ivt_u[k], f.ivt_v[k]));
            fields.push_back(std::move(f));
        }
    } else {
        fields = compute_ivt(load_cube(q_path), load_cube(u_path),
                             load_cube(v_path));
    }
    const auto landmask = load_landmask(landmask_path);
    LandMask mask;
    if (landmask) {
        mask = *landmask;
    } else {
        mask.spec = fields.front().spec;
        mask.mask.assign(mask.spec.size(), 0);
    }
    std::ofstream out(out_path);
    int total = 0;
    for (const auto& f : fields) {
        const auto objects = detect_ar_objects(f, ar_params, mask);
        write_ar_objects_jsonl(out, objects, f.spec);
        total += static_cast<int>(objects.size());
    }
    std::cout << total << " AR object(s) across " << fields.size()
              << " timestep(s)\n";
    return 0;
}

int run_track_tc(const std::string& mslp_path, const std::string& z300_path,
                 const std::string& z500_path, const std::string& u10_path,
                 const std::string& v10_path, const std::string& reference_path,
                 const std::string& out_path, const ParamOverrides& params) {
    const auto tc_params = make_tc_params(params);
    const auto mslp = load_cube(mslp_path);
    const auto z300 = load_cube(z300_path);
    const auto z500 = load_cube(z500_path);
    const auto u10 = load_cube(u10_path);
    const auto v10 = load_cube(v10_path);

    std::optional<Track> reference;
    if (!reference_path.empty()) {
        std::ifstream f(reference_path);
        auto tracks = read_tracks_csv(f);
        if (!tracks.empty()) reference = tracks.front();
    }

    std::vector<std::vector<CandidateCenter>> by_time;
    for (int t = 0; t < mslp.ntime(); ++t) {
        SurfaceFields f{mslp.spec, mslp.times[t], mslp.slice(t), z300.slice(t),
                        z500.slice(t), u10.slice(t), v10.slice(t)};
        std::optional<LatLon> ref_point;
        if (reference)
            ref_point = detail::interpolate_track_position(*reference,
                                                           mslp.times[t]);
        by_time.push_back(find_candidates(f, tc_params, ref_point));
    }
    const auto tracks = stitch_tracks(by_time, tc_params,
                                      reference ? &*reference : nullptr);
    std::ofstream out(out_path);
    write_tracks_csv(out, tracks);
    std::cout << tracks.size() << " valid track(s)\n";
    return 0;
}

int run_landfall(const std::string& track_path, const std::string& landmask_path,
                 const std::string& out_path, const ParamOverrides& params) {
    std::ifstream tf(track_path);
    const auto tracks = read_tracks_csv(tf);
    auto mask = LandMask::from_cube(load_cube(landmask_path));
    mask = remove_small_land_features(
        mask, params.get("landfall.min_feature_cells", 4));
    std::vector<LandfallEvent> events;
    for (const auto& track : tracks) {
        const auto ev = detect_landfalls(track, mask);
        events.insert(events.end(), ev.begin(), ev.end());
    }
    std::ofstream out(out_path);
    write_landfalls_csv(out, events);
    std::cout << events.size() << " landfall(s)\n";
    return 0;
}

int run_pph(const std::string& reports_path, const std::string& grid_str,
            const std::string& out_dir, const ParamOverrides& params) {
    std::ifstream rf(reports_path);
    const auto reports = read_reports_csv(rf);
    GridSpec spec;
    if (std::sscanf(grid_str.c_str(), "%lf,%lf,%lf,%lf,%d,%d", &spec.lat0,
                    &spec.lon0, &spec.dlat, &spec.dlon, &spec.nlat,
                    &spec.nlon) != 6)
        throw std::runtime_error(
            "--grid expects lat0,lon0,dlat,dlon,nlat,nlon");
    spec.validate();
    const auto pph = compute_pph(reports, spec, make_pph_params(params));
    FieldCube cube;
    cube.spec = spec;
    cube.times = {reports.empty() ? 0 : reports.front().time};
    cube.variable = "pph";
    cube.units = "1";
    cube.values = pph.prob;
    write_cube(cube, out_dir, "pph");
    const auto box = pph_bounding_box(pph, params.get("convective.pph_contour", 0.01));
    if (box) {
        std::cout << "pph bounding box: [" << box->lat_min << ", "
                  << box->lat_max << "] x [" << box->lon_min << ", "
                  << box->lon_max << "]\n";
    } else {
        std::cout << "pph bounding box: empty\n";
    }
    return 0;
}

int run_synth(const std::string& kind, const std::string& out_dir,
              unsigned seed, const std::string& model, int count) {
    const fs::path out(out_dir);
    nlohmann::ordered_json truth;
    if (kind == "vortex") {
        truth = synth::generate_vortex({}, out);
    } else if (kind == "ar_plume") {
        truth = synth::generate_ar_plume({}, out);
    } else if (kind == "heat_series") {
        truth = synth::generate_heat_series({}, out);
    } else if (kind == "sounding") {
        truth = synth::generate_sounding(out, seed);
    } else if (kind == "reports") {
        synth::ReportsSpec spec;
        spec.count = count;
        spec.seed = seed;
        truth = synth::generate_reports(spec, out);
    } else if (kind == "selfverify") {
        truth = synth::build_selfverify_workspace(out, model);
        std::cout << "self-verification workspace at " << out.string() << "\n";
        return 0;
    } else {
        throw std::runtime_error("unknown synth kind: " + kind);
    }
    synth::write_truth(out, truth);
    std::cout << "wrote " << kind << " to " << out.string() << "\n";
    return 0;
}

int run_evaluate(const std::string& catalog, const std::string& forecasts,
                 const std::string& targets, const std::string& out,
                 const std::string& replay, const ParamOverrides& params) {
    RunResult result;
    if (!replay.empty()) {
        result = replay_manifest(replay);
    } else {
        result = run_evaluation(catalog, forecasts, targets, out, params);
    }
    int defined = 0, undefined = 0;
    for (const auto& r : result.records) (r.value ? defined : undefined)++;
    std::cout << result.records.size() << " record(s): " << defined
              << " defined, " << undefined << " undefined\n";
    for (const auto& d : result.diagnostics) std::cerr << "skipped " << d << "\n";
    if (result.exit_code == 2) std::cout << "partial: some cases skipped\n";
    return result.exit_code;
}

int run_aggregate(const std::string& records_path, const std::string& catalog_dir,
                  const std::string& group_by_str, const std::string& out_path) {
    std::ifstream rf(records_path);
    if (!rf) throw std::runtime_error("cannot open " + records_path);
    const auto records = read_records_csv(rf);
    std::vector<std::string> group_by;
    std::size_t start = 0;
    for (std::size_t p = 0; p <= group_by_str.size(); ++p) {
        if (p == group_by_str.size() || group_by_str[p] == ',') {
            if (p > start) group_by.push_back(group_by_str.substr(start, p - start));
            start = p + 1;
        }
    }
    std::vector<CaseStudy> catalog;
    if (!catalog_dir.empty()) catalog = load_catalog(catalog_dir);
    const auto rows = aggregate(records, group_by,
                                catalog.empty() ? nullptr : &catalog);
    bool has_metric = false;
    for (const auto& g : group_by) has_metric |= g == "metric";
    if (!has_metric) group_by.push_back("metric");
    std::ofstream out(out_path);
    write_aggregate_csv(out, group_by, rows);
    std::cout << rows.size() << " group(s) -> " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"extreme-weather event detection and forecast verification"};
    app.require_subcommand(1);

    GlobalOpts global;
    app.add_option("--config", global.config_file,
                   "JSON config file of key=value parameter overrides");
    app.add_option("--set", global.sets, "parameter override key=value");

    // detect heat|freeze|marginal
    auto* detect = app.add_subcommand("detect", "detect temperature events");
    detect->require_subcommand(1);
    struct {
        std::string temp, clim_a, clim_b, landmask, seed, out = "detect_out";
    } det;
    for (const auto kind : {"heat", "freeze", "marginal"}) {
        auto* sub = detect->add_subcommand(kind);
        sub->add_option("--temp", det.temp)->required();
        if (std::string(kind) == "heat")
            sub->add_option("--clim85", det.clim_a)->required();
        else if (std::string(kind) == "freeze")
            sub->add_option("--clim15", det.clim_a)->required();
        else {
            sub->add_option("--clim16", det.clim_a)->required();
            sub->add_option("--clim84", det.clim_b)->required();
        }
        sub->add_option("--landmask", det.landmask);
        if (std::string(kind) != "marginal")
            sub->add_option("--seed", det.seed, "seed point lat,lon");
        sub->add_option("--out", det.out);
    }

    // track ar|tc
    auto* track = app.add_subcommand("track", "run object trackers");
    track->require_subcommand(1);
    struct {
        std::string ivt_u, ivt_v, q, u, v, landmask, out = "ar_objects.jsonl";
    } ar_opt;
    auto* track_ar = track->add_subcommand("ar");
    track_ar->add_option("--ivt-u", ar_opt.ivt_u);
    track_ar->add_option("--ivt-v", ar_opt.ivt_v);
    track_ar->add_option("--q", ar_opt.q);
    track_ar->add_option("--u", ar_opt.u);
    track_ar->add_option("--v", ar_opt.v);
    track_ar->add_option("--landmask", ar_opt.landmask);
    track_ar->add_option("--out", ar_opt.out);
    struct {
        std::string mslp, z300, z500, u10, v10, reference, out = "tracks.csv";
    } tc_opt;
    auto* track_tc = track->add_subcommand("tc");
    track_tc->add_option("--mslp", tc_opt.mslp)->required();
    track_tc->add_option("--z300", tc_opt.z300)->required();
    track_tc->add_option("--z500", tc_opt.z500)->required();
    track_tc->add_option("--u10", tc_opt.u10)->required();
    track_tc->add_option("--v10", tc_opt.v10)->required();
    track_tc->add_option("--reference", tc_opt.reference);
    track_tc->add_option("--out", tc_opt.out);

    // landfall
    struct {
        std::string track, landmask, out = "landfalls.csv";
    } lf_opt;
    auto* landfall = app.add_subcommand("landfall", "detect track landfalls");
    landfall->add_option("--track", lf_opt.track)->required();
    landfall->add_option("--landmask", lf_opt.landmask)->required();
    landfall->add_option("--out", lf_opt.out);

    // pph
    struct {
        std::string reports, grid, out = "pph_out";
    } pph_opt;
    auto* pph = app.add_subcommand("pph", "practically perfect hindcast");
    pph->add_option("--reports", pph_opt.reports)->required();
    pph->add_option("--grid", pph_opt.grid,
                    "lat0,lon0,dlat,dlon,nlat,nlon")->required();
    pph->add_option("--out", pph_opt.out);

    // synth
    struct {
        std::string kind, out = "synth_out", model = "demo";
        unsigned seed = 1;
        int count = 12;
    } synth_opt;
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic inputs");
    synth_cmd
        ->add_option("kind", synth_opt.kind,
                     "vortex|ar_plume|heat_series|sounding|reports|selfverify")
        ->required();
    synth_cmd->add_option("--out", synth_opt.out);
    synth_cmd->add_option("--seed", synth_opt.seed);
    synth_cmd->add_option("--model", synth_opt.model);
    synth_cmd->add_option("--count", synth_opt.count);

    // evaluate
    struct {
        std::string catalog, forecasts, targets, out = "eval_out", replay;
    } ev_opt;
    auto* evaluate = app.add_subcommand("evaluate", "run the case catalog");
    evaluate->add_option("--catalog", ev_opt.catalog);
    evaluate->add_option("--forecasts", ev_opt.forecasts);
    evaluate->add_option("--targets", ev_opt.targets);
    evaluate->add_option("--out", ev_opt.out);
    evaluate->add_option("--replay", ev_opt.replay,
                         "re-run a saved manifest.json");

    // aggregate
    struct {
        std::string records, catalog, group_by = "model,metric",
                             out = "summary.csv";
    } ag_opt;
    auto* agg = app.add_subcommand("aggregate", "summarize metric records");
    agg->add_option("--records", ag_opt.records)->required();
    agg->add_option("--catalog", ag_opt.catalog);
    agg->add_option("--group-by", ag_opt.group_by);
    agg->add_option("--out", ag_opt.out);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto params = global.resolve();
        if (detect->parsed()) {
            const std::string kind =
                detect->get_subcommands().front()->get_name();
            return run_detect(kind, det.temp, det.clim_a, det.clim_b,
                              det.landmask, det.seed, det.out, params);
        }
        if (track->parsed()) {
            if (track->get_subcommands().front()->get_name() == "ar")
                return run_track_ar(ar_opt.ivt_u, ar_opt.ivt_v, ar_opt.q,
                                    ar_opt.u, ar_opt.v, ar_opt.landmask,
                                    ar_opt.out, params);
            return run_track_tc(tc_opt.mslp, tc_opt.z300, tc_opt.z500,
                                tc_opt.u10, tc_opt.v10, tc_opt.reference,
                                tc_opt.out, params);
        }
        if (landfall->parsed())
            return run_landfall(lf_opt.track, lf_opt.landmask, lf_opt.out,
                                params);
        if (pph->parsed())
            return run_pph(pph_opt.reports, pph_opt.grid, pph_opt.out, params);
        if (synth_cmd->parsed())
            return run_synth(synth_opt.kind, synth_opt.out, synth_opt.seed,
                             synth_opt.model, synth_opt.count);
        if (evaluate->parsed())
            return run_evaluate(ev_opt.catalog, ev_opt.forecasts, ev_opt.targets,
                                ev_opt.out, ev_opt.replay, params);
        if (agg->parsed())
            return run_aggregate(ag_opt.records, ag_opt.catalog,
                                 ag_opt.group_by, ag_opt.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
