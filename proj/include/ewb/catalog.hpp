#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ewb/climatology.hpp"
#include "ewb/config.hpp"
#include "ewb/grid.hpp"
#include "ewb/time.hpp"

namespace ewb {

/// One benchmark case: what happened, where, when, and which target data
/// verify it. Serialized as one JSON document per case; a directory of these
/// forms a catalog.
struct CaseStudy {
    std::string id;
    EventType type = EventType::heat_wave;
    Region region;
    UtcSeconds start = 0;
    UtcSeconds end = 0;
    std::optional<LatLon> seed;
    std::string region_label;  // pooling key for aggregation (e.g. basin)
    ParamOverrides parameters;

    static CaseStudy from_json(const nlohmann::json& j) {
        CaseStudy c;
        c.id = j.at("case_id").get<std::string>();
        c.type = event_type_from_string(j.at("event_type").get<std::string>());
        const auto& r = j.at("region");
        c.region = {r.at("lat_min").get<double>(), r.at("lat_max").get<double>(),
                    r.at("lon_min").get<double>(), r.at("lon_max").get<double>()};
        c.region.validate();
        c.start = parse_iso8601(j.at("start").get<std::string>());
        c.end = parse_iso8601(j.at("end").get<std::string>());
        if (c.end < c.start)
            throw std::invalid_argument("case " + c.id + ": end before start");
        if (j.contains("seed"))
            c.seed = LatLon{j.at("seed").at("lat").get<double>(),
                            j.at("seed").at("lon").get<double>()};
        if (j.contains("region_label"))
            c.region_label = j.at("region_label").get<std::string>();
        if (j.contains("parameters"))
            for (const auto& [k, v] : j.at("parameters").items())
                c.parameters.set(k, v.is_string() ? v.get<std::string>() : v.dump());
        return c;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["case_id"] = id;
        j["event_type"] = to_string(type);
        j["region"] = {{"lat_min", region.lat_min},
                       {"lat_max", region.lat_max},
                       {"lon_min", region.lon_min},
                       {"lon_max", region.lon_max}};
        j["start"] = format_iso8601(start);
        j["end"] = format_iso8601(end);
        if (seed) j["seed"] = {{"lat", seed->lat}, {"lon", seed->lon}};
        if (!region_label.empty()) j["region_label"] = region_label;
        if (!parameters.raw().empty()) {
            nlohmann::ordered_json params;
            for (const auto& [k, v] : parameters.raw()) params[k] = v;
            j["parameters"] = std::move(params);
        }
        return j;
    }

    void save(const std::filesystem::path& catalog_dir) const {
        std::filesystem::create_directories(catalog_dir);
        std::ofstream f(catalog_dir / (id + ".json"));
        f << to_json().dump(2) << "\n";
    }
};

inline CaseStudy load_case(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open case " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed case " + path.string() + ": " +
                                 e.what());
    }
    return CaseStudy::from_json(j);
}

inline std::vector<CaseStudy> load_catalog(const std::filesystem::path& dir) {
    std::vector<CaseStudy> cases;
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("catalog directory not found: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        cases.push_back(load_case(entry.path()));
    }
    std::sort(cases.begin(), cases.end(),
              [](const CaseStudy& a, const CaseStudy& b) { return a.id < b.id; });
    return cases;
}

/// Everything needed to replay an evaluation run byte-for-byte.
struct RunManifest {
    std::string version = "0.1.0";
    std::vector<std::string> models;
    std::vector<std::string> case_ids;
    std::string catalog_dir;
    std::string forecasts_dir;
    std::string targets_dir;
    std::string output_dir;
    std::map<std::string, std::string> parameters;
    std::vector<std::string> outputs;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["version"] = version;
        j["models"] = models;
        j["case_ids"] = case_ids;
        j["catalog_dir"] = catalog_dir;
        j["forecasts_dir"] = forecasts_dir;
        j["targets_dir"] = targets_dir;
        j["output_dir"] = output_dir;
        nlohmann::ordered_json params;
        for (const auto& [k, v] : parameters) params[k] = v;
        j["parameters"] = std::move(params);
        j["outputs"] = outputs;
        return j;
    }

    static RunManifest from_json(const nlohmann::json& j) {
        RunManifest m;
        m.version = j.at("version").get<std::string>();
        m.models = j.at("models").get<std::vector<std::string>>();
        m.case_ids = j.at("case_ids").get<std::vector<std::string>>();
        m.catalog_dir = j.at("catalog_dir").get<std::string>();
        m.forecasts_dir = j.at("forecasts_dir").get<std::string>();
        m.targets_dir = j.at("targets_dir").get<std::string>();
        m.output_dir = j.at("output_dir").get<std::string>();
        for (const auto& [k, v] : j.at("parameters").items())
            m.parameters[k] = v.get<std::string>();
        m.outputs = j.at("outputs").get<std::vector<std::string>>();
        return m;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream f(path);
        f << to_json().dump(2) << "\n";
    }

    static RunManifest load(const std::filesystem::path& path) {
        std::ifstream f(path);
        if (!f)
            throw std::runtime_error("cannot open manifest " + path.string());
        nlohmann::json j;
        f >> j;
        return from_json(j);
    }
};

}  // namespace ewb
