#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ewb/grid.hpp"
#include "ewb/time.hpp"

namespace ewb {

// EWB-container format: a JSON header `<name>.json` next to a little-endian
// float32 payload `<name>.f32` in row-major (time, level, lat, lon) order.
// The header schema is fixed; readers fail on any missing required field and
// writers emit exactly the documented keys.

namespace detail {

inline std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return ((v & 0xff) << 24) | ((v & 0xff00) << 8) | ((v >> 8) & 0xff00) |
           (v >> 24);
}

inline void require_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key))
        throw std::runtime_error(std::string("container header: missing required field '") +
                                 key + "'");
}

}  // namespace detail

inline FieldCube load_cube(const std::filesystem::path& header_path) {
    std::ifstream hf(header_path);
    if (!hf) throw std::runtime_error("cannot open " + header_path.string());
    nlohmann::json j;
    try {
        hf >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed container header " +
                                 header_path.string() + ": " + e.what());
    }
    for (const char* key : {"variable", "units", "nlat", "nlon", "ntime",
                            "nlevel", "lat0", "lon0", "dlat", "dlon", "times",
                            "levels_hPa", "payload"})
        detail::require_field(j, key);

    FieldCube cube;
    cube.variable = j.at("variable").get<std::string>();
    cube.units = j.at("units").get<std::string>();
    cube.spec.nlat = j.at("nlat").get<int>();
    cube.spec.nlon = j.at("nlon").get<int>();
    cube.spec.lat0 = j.at("lat0").get<double>();
    cube.spec.lon0 = canonical_lon(j.at("lon0").get<double>());
    cube.spec.dlat = j.at("dlat").get<double>();
    cube.spec.dlon = j.at("dlon").get<double>();
    const int ntime = j.at("ntime").get<int>();
    const int nlevel = j.at("nlevel").get<int>();
    for (const auto& t : j.at("times"))
        cube.times.push_back(parse_iso8601(t.get<std::string>()));
    for (const auto& l : j.at("levels_hPa"))
        cube.levels_hpa.push_back(l.get<double>());
    if (j.contains("fill_value"))
        cube.fill_value = j.at("fill_value").get<float>();

    if (static_cast<int>(cube.times.size()) != ntime)
        throw std::runtime_error("container header: times length != ntime");
    if (!cube.levels_hpa.empty() &&
        static_cast<int>(cube.levels_hpa.size()) != nlevel)
        throw std::runtime_error("container header: levels_hPa length != nlevel");
    if (cube.levels_hpa.empty() && nlevel != 1)
        throw std::runtime_error("container header: nlevel > 1 without levels_hPa");

    const std::filesystem::path payload =
        header_path.parent_path() / j.at("payload").get<std::string>();
    std::ifstream pf(payload, std::ios::binary);
    if (!pf) throw std::runtime_error("cannot open payload " + payload.string());
    pf.seekg(0, std::ios::end);
    const std::size_t bytes = static_cast<std::size_t>(pf.tellg());
    pf.seekg(0);
    const std::size_t expect = static_cast<std::size_t>(ntime) * nlevel *
                               cube.spec.size() * sizeof(float);
    if (bytes != expect)
        throw std::runtime_error("container payload length mismatch: " +
                                 payload.string());
    cube.values.resize(bytes / sizeof(float));
    pf.read(reinterpret_cast<char*>(cube.values.data()),
            static_cast<std::streamsize>(bytes));
    if constexpr (std::endian::native != std::endian::little) {
        for (auto& v : cube.values) {
            std::uint32_t u;
            std::memcpy(&u, &v, 4);
            u = detail::to_le(u);
            std::memcpy(&v, &u, 4);
        }
    }
    cube.validate();
    return cube;
}

/// Writes `<dir>/<name>.json` + `<dir>/<name>.f32`; returns the header path.
inline std::filesystem::path write_cube(const FieldCube& cube,
                                        const std::filesystem::path& dir,
                                        const std::string& name) {
    cube.validate();
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json j;
    j["variable"] = cube.variable;
    j["units"] = cube.units;
    j["nlat"] = cube.spec.nlat;
    j["nlon"] = cube.spec.nlon;
    j["ntime"] = cube.ntime();
    j["nlevel"] = cube.nlevel();
    j["lat0"] = cube.spec.lat0;
    j["lon0"] = cube.spec.lon0;
    j["dlat"] = cube.spec.dlat;
    j["dlon"] = cube.spec.dlon;
    auto times = nlohmann::ordered_json::array();
    for (const auto t : cube.times) times.push_back(format_iso8601(t));
    j["times"] = std::move(times);
    j["levels_hPa"] = cube.levels_hpa;
    if (cube.fill_value) j["fill_value"] = *cube.fill_value;
    j["payload"] = name + ".f32";

    const auto header_path = dir / (name + ".json");
    {
        std::ofstream hf(header_path, std::ios::binary);
        if (!hf) throw std::runtime_error("cannot write " + header_path.string());
        hf << j.dump(2) << "\n";
    }
    {
        const auto payload_path = dir / (name + ".f32");
        std::ofstream pf(payload_path, std::ios::binary);
        if (!pf)
            throw std::runtime_error("cannot write " + payload_path.string());
        if constexpr (std::endian::native == std::endian::little) {
            pf.write(reinterpret_cast<const char*>(cube.values.data()),
                     static_cast<std::streamsize>(cube.values.size() * 4));
        } else {
            for (float v : cube.values) {
                std::uint32_t u;
                std::memcpy(&u, &v, 4);
                u = detail::to_le(u);
                pf.write(reinterpret_cast<const char*>(&u), 4);
            }
        }
    }
    return header_path;
}

}  // namespace ewb
