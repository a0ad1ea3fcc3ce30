#include <catch2/catch.hpp>

#include <sstream>

#include "ewb/landfall.hpp"

using namespace ewb;

namespace {

/// Mask with land east of coast_lon (cell centres at or east of it).
LandMask meridian_coast(double coast_lon, double cell = 0.1) {
    GridSpec spec{.lat0 = 10.0, .lon0 = -75.0, .dlat = cell, .dlon = cell,
                  .nlat = static_cast<int>(std::lround(20.0 / cell)) + 1,
                  .nlon = static_cast<int>(std::lround(15.0 / cell)) + 1};
    LandMask m;
    m.spec = spec;
    m.mask.assign(spec.size(), 0);
    for (int i = 0; i < spec.nlat; ++i)
        for (int j = 0; j < spec.nlon; ++j)
            if (spec.lon(j) >= coast_lon) m.mask[spec.idx(i, j)] = 1;
    return m;
}

CandidateCenter pt(UtcSeconds t, double lat, double lon, double mslp = 1000.0,
                   double wind = 30.0) {
    CandidateCenter c;
    c.time = t;
    c.lat = lat;
    c.lon = lon;
    c.mslp_hpa = mslp;
    c.peak_wind_ms = wind;
    return c;
}

Track two_point_track(UtcSeconds t0, double lat, double lon_a, double lon_b,
                      double mslp_a = 1000.0, double mslp_b = 990.0) {
    Track t;
    t.storm_id = "storm";
    t.source = "forecast";
    t.points.push_back(pt(t0, lat, lon_a, mslp_a, 30.0));
    t.points.push_back(pt(t0 + 6 * kSecondsPerHour, lat, lon_b, mslp_b, 40.0));
    return t;
}

LandfallEvent event(UtcSeconds t, double lat, double lon, double mslp = 990.0,
                    double wind = 40.0, const std::string& id = "s1") {
    LandfallEvent e;
    e.storm_id = id;
    e.source = "forecast";
    e.ordinal = 1;
    e.time = t;
    e.lat = lat;
    e.lon = lon;
    e.mslp_hpa = mslp;
    e.wind_ms = wind;
    return e;
}

}  // namespace

TEST_CASE("landfall at an analytically known coastline crossing") {
    // Coast midway between mask cell centres, so the nearest-cell boundary
    // sits exactly at -69.525. Segment spans 6 degrees: crossing at f = 0.5.
    const double coast = -69.525;
    const auto mask = meridian_coast(-69.5, 0.05);
    const auto t0 = utc_from_parts(2022, 9, 10);
    const auto track = two_point_track(t0, 20.0, coast - 3.0, coast + 3.0);
    const auto events = detect_landfalls(track, mask);
    REQUIRE(events.size() == 1);
    const auto& e = events[0];
    const double frac = static_cast<double>(e.time - t0) / (6.0 * kSecondsPerHour);
    CHECK(frac == Approx(0.5).margin(0.01));
    CHECK(e.lon == Approx(coast).margin(0.05));
    CHECK(e.lat == Approx(20.0).margin(1e-6));
    // Intensity interpolates with the same fraction.
    CHECK(e.mslp_hpa == Approx(1000.0 + frac * (990.0 - 1000.0)).margin(1e-6));
    CHECK(e.wind_ms == Approx(30.0 + frac * 10.0).margin(1e-6));
    CHECK(e.ordinal == 1);

    // Dense-sampling oracle at 10x the mask resolution.
    double oracle_frac = -1.0;
    const int n = 10 * 6 * 20;  // 0.005 degree steps over 6 degrees
    for (int k = 1; k <= n; ++k) {
        const double f = static_cast<double>(k) / n;
        if (mask.land_at(20.0, coast - 3.0 + 6.0 * f)) {
            oracle_frac = f;
            break;
        }
    }
    REQUIRE(oracle_frac > 0);
    CHECK(frac == Approx(oracle_frac).margin(0.05 / 6.0));
}

TEST_CASE("track entirely over ocean yields no landfalls") {
    const auto mask = meridian_coast(-69.5);
    const auto t0 = utc_from_parts(2022, 9, 10);
    const auto track = two_point_track(t0, 20.0, -74.0, -71.0);
    CHECK(detect_landfalls(track, mask).empty());
}

TEST_CASE("reversed track leaving land yields no landfalls") {
    const auto mask = meridian_coast(-69.5);
    const auto t0 = utc_from_parts(2022, 9, 10);
    const auto track = two_point_track(t0, 20.0, -67.0, -73.0);
    CHECK(detect_landfalls(track, mask).empty());
}

TEST_CASE("island strictly inside a segment is detected once") {
    GridSpec spec{.lat0 = 15.0, .lon0 = -75.0, .dlat = 0.1, .dlon = 0.1,
                  .nlat = 101, .nlon = 101};
    LandMask mask;
    mask.spec = spec;
    mask.mask.assign(spec.size(), 0);
    for (int i = 0; i < spec.nlat; ++i)
        for (int j = 0; j < spec.nlon; ++j)
            if (std::abs(spec.lat(i) - 20.0) <= 0.3 &&
                spec.lon(j) >= -70.3 && spec.lon(j) <= -69.7)
                mask.mask[spec.idx(i, j)] = 1;
    const auto t0 = utc_from_parts(2022, 9, 10);
    const auto track = two_point_track(t0, 20.0, -72.0, -68.0);
    const auto events = detect_landfalls(track, mask);
    REQUIRE(events.size() == 1);
    CHECK(events[0].lon == Approx(-70.3).margin(0.15));
    CHECK(events[0].time > t0);
    CHECK(events[0].time < t0 + 6 * kSecondsPerHour);
}

TEST_CASE("multiple crossings gain increasing ordinals") {
    GridSpec spec{.lat0 = 15.0, .lon0 = -75.0, .dlat = 0.1, .dlon = 0.1,
                  .nlat = 101, .nlon = 151};
    LandMask mask;
    mask.spec = spec;
    mask.mask.assign(spec.size(), 0);
    for (int i = 0; i < spec.nlat; ++i)
        for (int j = 0; j < spec.nlon; ++j) {
            const double lo = spec.lon(j);
            if ((lo >= -72.0 && lo <= -71.0) || (lo >= -66.0 && lo <= -65.0))
                mask.mask[spec.idx(i, j)] = 1;
        }
    Track t;
    t.storm_id = "s";
    t.source = "forecast";
    const auto t0 = utc_from_parts(2022, 9, 10);
    for (int s = 0; s < 4; ++s)
        t.points.push_back(pt(t0 + s * 6 * kSecondsPerHour, 20.0, -74.0 + 3.0 * s));
    const auto events = detect_landfalls(t, mask);
    REQUIRE(events.size() == 2);
    CHECK(events[0].ordinal == 1);
    CHECK(events[1].ordinal == 2);
    CHECK(events[0].lon < events[1].lon);
}

TEST_CASE("densifying the track does not move the crossing") {
    const auto mask = meridian_coast(-69.5);
    const auto t0 = utc_from_parts(2022, 9, 10);
    const auto track = two_point_track(t0, 20.0, -72.5, -66.5);
    Track dense;
    dense.storm_id = track.storm_id;
    dense.source = track.source;
    for (int k = 0; k <= 6; ++k) {
        const double f = k / 6.0;
        dense.points.push_back(pt(
            t0 + static_cast<UtcSeconds>(f * 6 * kSecondsPerHour), 20.0,
            -72.5 + f * 6.0, 1000.0 - 10.0 * f, 30.0 + 10.0 * f));
    }
    const auto a = detect_landfalls(track, mask);
    const auto b = detect_landfalls(dense, mask);
    REQUIRE(a.size() == 1);
    REQUIRE(b.size() == 1);
    CHECK(a[0].lon == Approx(b[0].lon).margin(0.1));
    CHECK(std::abs(a[0].time - b[0].time) <= 6 * 60);
}

TEST_CASE("short tracks are rejected") {
    const auto mask = meridian_coast(-69.5);
    Track t;
    t.storm_id = "s";
    t.source = "forecast";
    t.points.push_back(pt(0, 20.0, -70.0));
    CHECK_THROWS_AS(detect_landfalls(t, mask), std::invalid_argument);
}

TEST_CASE("landfall filter rules") {
    const auto t0 = utc_from_parts(2022, 9, 10);
    const auto h = [&](double hours) {
        return t0 + static_cast<UtcSeconds>(hours * kSecondsPerHour);
    };

    SECTION("rule 1: only the first landfall per track enters") {
        std::vector<LandfallEvent> fc{event(h(0), 20.0, -70.0, 990, 40, "a"),
                                      event(h(12), 24.0, -70.0, 985, 45, "a")};
        std::vector<LandfallEvent> tg{event(h(1), 20.1, -70.0, 991, 39, "obs")};
        const auto pairs = filter_landfalls(fc, tg, LandfallMode::first);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].forecast.time == h(0));
    }

    SECTION("rule 2: a second landfall 20 km away is removed") {
        // Different tracks, so rule 1 keeps both; rule 2 drops the later one.
        std::vector<LandfallEvent> fc{
            event(h(0), 20.0, -70.0, 990, 40, "a"),
            event(h(3), 20.18, -70.0, 992, 35, "b")};  // ~20 km north
        std::vector<LandfallEvent> tg{event(h(1), 20.0, -70.0, 991, 39, "obs"),
                                      event(h(30), 25.0, -70.0, 980, 50, "obs2")};
        const auto pairs = filter_landfalls(fc, tg, LandfallMode::next);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].forecast.storm_id == "a");
    }

    SECTION("rule 3: landfalls before the track's first valid time drop") {
        std::vector<LandfallEvent> fc{event(h(2), 20.0, -70.0)};
        std::vector<LandfallEvent> tg{event(h(3), 20.0, -70.0, 991, 39, "obs")};
        const auto pairs = filter_landfalls(fc, tg, LandfallMode::first, h(0), h(6));
        CHECK(pairs.empty());
        // At or after first_valid the landfall survives (half-open interval).
        const auto pairs2 =
            filter_landfalls(fc, tg, LandfallMode::first, h(0), h(2));
        CHECK(pairs2.size() == 1);
    }

    SECTION("rule 4: 30 h separation stays unmatched, 6 h matches") {
        std::vector<LandfallEvent> tg{event(h(0), 20.0, -70.0, 991, 39, "obs")};
        CHECK(filter_landfalls({event(h(30), 20.0, -70.0)}, tg,
                               LandfallMode::first)
                  .empty());
        CHECK(filter_landfalls({event(h(6), 20.0, -70.0)}, tg,
                               LandfallMode::first)
                  .size() == 1);
    }

    SECTION("pairs are one-to-one") {
        std::vector<LandfallEvent> fc{event(h(0), 20.0, -70.0, 990, 40, "a"),
                                      event(h(4), 28.0, -60.0, 992, 35, "b")};
        std::vector<LandfallEvent> tg{event(h(2), 20.0, -70.0, 991, 39, "obs")};
        const auto pairs = filter_landfalls(fc, tg, LandfallMode::next);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].forecast.storm_id == "a");
    }
}

TEST_CASE("landfall metrics") {
    const auto t0 = utc_from_parts(2022, 9, 10);
    SECTION("identical events score zero") {
        const auto e = event(t0, 20.0, -70.0);
        const auto m = landfall_metrics({{e, e}});
        CHECK(m.pressure_mae_hpa.value() == 0.0);
        CHECK(m.wind_mae_ms.value() == 0.0);
        CHECK(m.time_me_hours.value() == 0.0);
        CHECK(m.displacement_km.value() == 0.0);
    }
    SECTION("six hours late and one degree east at the equator") {
        const auto f = event(t0 + 6 * kSecondsPerHour, 0.0, -69.0);
        const auto o = event(t0, 0.0, -70.0);
        const auto m = landfall_metrics({{f, o}});
        CHECK(m.time_me_hours.value() == Approx(6.0));
        CHECK(m.displacement_km.value() ==
              Approx(kEarthRadiusKm * kPi / 180.0).epsilon(1e-4));
    }
    SECTION("pressure MAE over two pairs") {
        auto f1 = event(t0, 20.0, -70.0);
        f1.mslp_hpa = 990.0;
        auto o1 = f1;
        o1.mslp_hpa = 980.0;
        auto f2 = event(t0, 21.0, -70.0);
        f2.mslp_hpa = 1000.0;
        auto o2 = f2;
        o2.mslp_hpa = 1005.0;
        const auto m = landfall_metrics({{f1, o1}, {f2, o2}});
        CHECK(m.pressure_mae_hpa.value() == Approx(7.5));
    }
    SECTION("empty pairs are undefined") {
        const auto m = landfall_metrics({});
        CHECK_FALSE(m.pressure_mae_hpa.has_value());
        CHECK_FALSE(m.displacement_km.has_value());
        CHECK(m.pairs == 0);
    }
}

TEST_CASE("landfall CSV schema") {
    std::vector<LandfallEvent> events{
        event(utc_from_parts(2022, 9, 10, 15), 20.25, -69.5)};
    std::ostringstream os;
    write_landfalls_csv(os, events);
    const auto text = os.str();
    CHECK(text.rfind("storm_id,source,ordinal,time,lat,lon,mslp_hpa,wind_ms\n",
                     0) == 0);
    CHECK(text.find("s1,forecast,1,2022-09-10T15:00:00Z,20.2500,-69.5000,"
                    "990.00,40.00") != std::string::npos);
}

TEST_CASE("interpolated landfall time stays within its segment") {
    const auto mask = meridian_coast(-69.5);
    const auto t0 = utc_from_parts(2022, 9, 10);
    for (double start : {-73.7, -72.2, -70.9}) {
        Track t;
        t.storm_id = "s";
        t.source = "forecast";
        for (int s = 0; s < 5; ++s)
            t.points.push_back(pt(t0 + s * 6 * kSecondsPerHour, 20.0,
                                  start + 1.3 * s));
        for (const auto& e : detect_landfalls(t, mask)) {
            CHECK(e.time >= t0);
            CHECK(e.time <= t0 + 4 * 6 * kSecondsPerHour);
        }
    }
}
