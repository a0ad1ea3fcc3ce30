#include <catch2/catch.hpp>

#include <random>
#include <sstream>

#include "ewb/metrics.hpp"

using namespace ewb;

namespace {

template <typename Fn>
FieldCube series_cube(const GridSpec& spec, UtcSeconds start, int n, Fn fn) {
    FieldCube c;
    c.spec = spec;
    c.variable = "t2m";
    c.units = "K";
    for (int t = 0; t < n; ++t)
        c.times.push_back(start + static_cast<UtcSeconds>(t) * 6 * kSecondsPerHour);
    c.values.resize(static_cast<std::size_t>(n) * spec.size());
    for (int t = 0; t < n; ++t)
        for (int i = 0; i < spec.nlat; ++i)
            for (int j = 0; j < spec.nlon; ++j)
                c.values[c.idx(t, 0, i, j)] = static_cast<float>(fn(t));
    return c;
}

const GridSpec kPoint{.lat0 = 40, .lon0 = -100, .dlat = 1, .dlon = 1,
                      .nlat = 1, .nlon = 1};

}  // namespace

TEST_CASE("mae and rmse basics") {
    const std::vector<double> f{1.0, 3.0}, o{2.0, 1.0};
    CHECK(mae(f, o) == Approx(1.5));
    CHECK(mae(o, f) == Approx(1.5));
    CHECK(mae(f, f) == 0.0);
    CHECK(rmse(f, f) == 0.0);
    const std::vector<double> a{4.0}, b{1.0};
    CHECK(rmse(a, b) == Approx(3.0));
    CHECK_THROWS_AS(mae({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(rmse({}, {}), std::invalid_argument);
}

TEST_CASE("rmse dominates mae and both are shift invariant") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> val(-10.0, 10.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> f(12), o(12), fs(12), os(12);
        const double shift = val(rng);
        for (int k = 0; k < 12; ++k) {
            f[k] = val(rng);
            o[k] = val(rng);
            fs[k] = f[k] + shift;
            os[k] = o[k] + shift;
        }
        CHECK(rmse(f, o) >= mae(f, o) - 1e-12);
        CHECK(mae(fs, os) == Approx(mae(f, o)).margin(1e-9));
        CHECK(rmse(fs, os) == Approx(rmse(f, o)).margin(1e-9));
    }
}

TEST_CASE("iou basics") {
    const std::vector<std::uint8_t> a{1, 1, 0, 0}, b{1, 0, 1, 0}, z{0, 0, 0, 0};
    CHECK(iou(a, a).value() == 1.0);
    CHECK(iou(a, b).value() == Approx(1.0 / 3.0));
    CHECK(iou(a, b) == iou(b, a));
    CHECK_FALSE(iou(z, z).has_value());
    const std::vector<std::uint8_t> c{1, 1, 0, 0}, d{0, 0, 1, 1};
    CHECK(iou(c, d).value() == 0.0);
}

TEST_CASE("iou counting matches brute force on random masks") {
    std::mt19937 rng(9);
    std::bernoulli_distribution coin(0.4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint8_t> a(64), b(64);
        int inter = 0, uni = 0;
        for (int k = 0; k < 64; ++k) {
            a[k] = coin(rng);
            b[k] = coin(rng);
            inter += a[k] && b[k];
            uni += a[k] || b[k];
        }
        const auto got = iou(a, b);
        if (uni == 0) {
            CHECK_FALSE(got.has_value());
        } else {
            CHECK(got.value() == Approx(double(inter) / uni));
        }
    }
}

TEST_CASE("spatial displacement") {
    const auto same = spatial_displacement({10, 20}, {10, 20});
    CHECK(same.degrees_planar == 0.0);
    CHECK(same.km_haversine == 0.0);
    // 3-4-5 in planar degrees.
    CHECK(spatial_displacement({13, 24}, {10, 20}).degrees_planar == Approx(5.0));
    // One degree of longitude at 60N: planar 1 degree, R cos(60) pi/180 km.
    const auto d = spatial_displacement({60, 1}, {60, 0});
    CHECK(d.degrees_planar == Approx(1.0));
    CHECK(d.km_haversine ==
          Approx(kEarthRadiusKm * 0.5 * kPi / 180.0).epsilon(1e-4));
    // Wrapping: 359 and 1 are two degrees apart.
    CHECK(spatial_displacement({0, 359}, {0, 1}).degrees_planar == Approx(2.0));
}

TEST_CASE("lead time in days") {
    const auto d = [](int day) { return utc_from_parts(2021, 6, day, 12); };
    CHECK(lead_time_days(d(27), d(27)) == 0);
    CHECK(lead_time_days(d(25), d(27)) == -2);
    CHECK(lead_time_days(d(28), d(27)) == 1);
}

TEST_CASE("relaxed RMAE of the event maximum") {
    // 5-day diurnal series, peak amplitude 310 at day 2 12Z.
    const auto start = utc_from_parts(2021, 7, 1);
    const auto diurnal = [](int t) {
        return 300.0 + 10.0 * std::exp(-0.5 * std::pow((t - 10) / 2.0, 2));
    };
    const auto obs = series_cube(kPoint, start, 20, diurnal);

    SECTION("forecast equal to observation scores zero") {
        CHECK(rmae_max(obs, obs).value.value() == Approx(0.0).margin(1e-12));
    }

    SECTION("a +12 h phase shift is absorbed by the relaxation") {
        const auto fc = series_cube(kPoint, start, 20,
                                    [&](int t) { return diurnal(t - 2); });
        CHECK(rmae_max(fc, obs).value.value() == Approx(0.0).margin(1e-6));
    }

    SECTION("a +36 h shift pays the off-peak amplitude gap") {
        // Forecast: peak moved 6 samples later; within the +-24 h window the
        // best forecast value is exactly 2 K below the observed peak.
        std::vector<double> fvals(20, 300.0);
        fvals[16] = 310.0;  // peak at +36 h
        fvals[14] = 308.0;  // best value inside the window
        const auto fc = series_cube(kPoint, start, 20,
                                    [&](int t) { return fvals[t]; });
        CHECK(rmae_max(fc, obs).value.value() == Approx(2.0).margin(1e-6));
    }

    SECTION("relaxation window truncated at the cube edge is flagged") {
        const auto early_peak = series_cube(kPoint, start, 20, [](int t) {
            return t == 1 ? 310.0 : 300.0;
        });
        const auto res = rmae_max(early_peak, early_peak);
        CHECK(res.value.value() == Approx(0.0));
        CHECK(res.truncated);
    }
}

TEST_CASE("relaxed RMAE is invariant to peak-preserving shifts within the window") {
    const auto start = utc_from_parts(2021, 7, 1);
    const auto sine = [](int t) {
        return 300.0 + 5.0 * std::sin(2.0 * kPi * t / 4.0);
    };
    const auto obs = series_cube(kPoint, start, 28, sine);
    for (int shift : {-4, -2, 0, 2, 4}) {  // all within +-24 h
        const auto fc = series_cube(kPoint, start, 28,
                                    [&](int t) { return sine(t - shift); });
        CHECK(rmae_max(fc, obs).value.value() == Approx(0.0).margin(1e-6));
    }
}

TEST_CASE("RMAE of the highest daily minimum") {
    const auto start = utc_from_parts(2021, 7, 1);
    // Nights at 290 + day index, days at 305: daily minima rise by day.
    const auto obs = series_cube(kPoint, start, 5 * 4, [](int t) {
        const int day = t / 4, hour = t % 4;
        return (hour == 0 || hour == 3) ? 290.0 + day : 305.0;
    });
    SECTION("identical cubes score zero") {
        CHECK(rmae_maxdailymin(obs, obs).value.value() == 0.0);
    }
    SECTION("uniformly warmer nights score the offset") {
        const auto fc = series_cube(kPoint, start, 5 * 4, [](int t) {
            const int day = t / 4, hour = t % 4;
            return (hour == 0 || hour == 3) ? 293.0 + day : 305.0;
        });
        CHECK(rmae_maxdailymin(fc, obs).value.value() == Approx(3.0));
    }
    SECTION("single-day event reduces to the plain difference") {
        const auto o1 = series_cube(kPoint, start, 4, [](int) { return 290.0; });
        const auto f1 = series_cube(kPoint, start, 4, [](int) { return 291.5; });
        CHECK(rmae_maxdailymin(f1, o1).value.value() == Approx(1.5));
    }
}

TEST_CASE("metric record CSV round trip and undefined handling") {
    std::vector<MetricRecord> records;
    records.push_back({"modelA", "case1", utc_from_parts(2021, 6, 25), 24,
                       "rmae_max", 1.25, "K"});
    records.push_back({"modelA", "case1", utc_from_parts(2021, 6, 25), 48,
                       "iou", std::nullopt, "1"});
    std::ostringstream os;
    write_records_csv(os, records);
    const std::string text = os.str();
    CHECK(text.find("model,case,init_time,lead_hours,metric,value,units,undefined") == 0);
    CHECK(text.find(",iou,,1,true") != std::string::npos);

    std::istringstream is(text);
    const auto back = read_records_csv(is);
    REQUIRE(back.size() == 2);
    CHECK(back[0].value.value() == 1.25);
    CHECK_FALSE(back[1].value.has_value());
    CHECK(back[1].metric == "iou");

    std::ostringstream os2;
    write_records_jsonl(os2, records);
    CHECK(os2.str().find("\"undefined\":true") != std::string::npos);
}

TEST_CASE("non-finite metric values are rejected at the table boundary") {
    std::vector<MetricRecord> bad;
    bad.push_back({"m", "c", 0, 0, "mae",
                   std::numeric_limits<double>::quiet_NaN(), "K"});
    std::ostringstream os;
    CHECK_THROWS_AS(write_records_csv(os, bad), std::invalid_argument);
    CHECK_THROWS_AS(write_records_jsonl(os, bad), std::invalid_argument);
}

TEST_CASE("area-weighted RMAE leans toward wider equatorward cells") {
    GridSpec spec{.lat0 = 10, .lon0 = 0, .dlat = 40, .dlon = 1,
                  .nlat = 2, .nlon = 1};  // rows at 10N and 50N
    const auto start = utc_from_parts(2021, 7, 1);
    FieldCube obs, fc;
    for (auto* c : {&obs, &fc}) {
        c->spec = spec;
        c->variable = "t2m";
        c->units = "K";
        for (int t = 0; t < 8; ++t)
            c->times.push_back(start + t * 6 * kSecondsPerHour);
        c->values.assign(8 * spec.size(), 300.0f);
    }
    // Forecast errors: 1 K at 10N, 3 K at 50N.
    for (int t = 0; t < 8; ++t) {
        fc.values[fc.idx(t, 0, 0, 0)] = 301.0f;
        fc.values[fc.idx(t, 0, 1, 0)] = 303.0f;
    }
    const double flat = rmae_max(fc, obs).value.value();
    CHECK(flat == Approx(2.0));
    const double weighted =
        rmae_extreme(fc, obs, Extreme::maximum, 24.0, nullptr, true)
            .value.value();
    const double a10 = cell_area_km2(10.0, spec);
    const double a50 = cell_area_km2(50.0, spec);
    CHECK(weighted == Approx((a10 * 1.0 + a50 * 3.0) / (a10 + a50)));
    CHECK(weighted < flat);
}

TEST_CASE("ocean gridpoints do not influence land-only scores") {
    GridSpec spec{.lat0 = 40, .lon0 = -100, .dlat = 1, .dlon = 1,
                  .nlat = 2, .nlon = 2};
    LandMask mask;
    mask.spec = spec;
    mask.mask = {1, 1, 0, 0};  // bottom row land, top row ocean
    const auto start = utc_from_parts(2021, 7, 1);
    const auto cube = [&](double land_val, double ocean_val) {
        FieldCube c;
        c.spec = spec;
        c.variable = "t2m";
        c.units = "K";
        for (int t = 0; t < 12; ++t)
            c.times.push_back(start + t * 6 * kSecondsPerHour);
        c.values.resize(12 * spec.size());
        for (int t = 0; t < 12; ++t)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    c.values[c.idx(t, 0, i, j)] = static_cast<float>(
                        (i == 0 ? land_val : ocean_val) + t);
        return c;
    };
    const auto obs = cube(300.0, 280.0);
    const auto fc = cube(301.0, 280.0);
    auto fc_wild = fc;
    for (int t = 0; t < 12; ++t)
        for (int j = 0; j < 2; ++j)
            fc_wild.values[fc_wild.idx(t, 0, 1, j)] = 999.0f;  // ocean row only
    CHECK(rmae_max(fc, obs, 24.0, &mask).value.value() ==
          rmae_max(fc_wild, obs, 24.0, &mask).value.value());
    CHECK(rmae_maxdailymin(fc, obs, 1, &mask).value.value() ==
          rmae_maxdailymin(fc_wild, obs, 1, &mask).value.value());
}
