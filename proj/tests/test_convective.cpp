#include <catch2/catch.hpp>

#include <random>
#include <sstream>

#include "ewb/convective.hpp"
#include "oracles.hpp"

using namespace ewb;

namespace {

/// Environment whose dry parcel carries a constant fractional virtual
/// temperature excess alpha above the mixed layer: CAPE ~= g*alpha*depth.
/// The mixed layer (down to 900 hPa inclusive) follows one dry adiabat; the
/// reduced branch starts just below it at 899 hPa.
SoundingProfile constant_buoyancy_profile(double alpha) {
    std::vector<double> p, t, q;
    const double theta = 300.0;
    double mean_factor = 0.0;
    int n = 0;
    for (double pp = 1000.0; pp >= 900.0; pp -= 1.0) {
        mean_factor += std::pow(pp / 1000.0, kKappa);
        ++n;
    }
    mean_factor /= n;
    const auto add = [&](double pp, double temp) {
        p.push_back(pp);
        t.push_back(temp);
        q.push_back(0.0);
    };
    for (double pp = 1000.0; pp >= 900.0; pp -= 25.0)
        add(pp, theta * std::pow(pp / 1000.0, kKappa));
    for (double pp = 899.0; pp >= 150.0; pp -= 25.0)
        add(pp, theta * mean_factor * std::pow(pp / 1000.0, kKappa) /
                    (1.0 + alpha));
    return SoundingProfile::from_specific_humidity(p, t, q);
}

SoundingProfile severe_day_profile() {
    // Warm, moist boundary layer under a steep lapse aloft.
    std::vector<double> p{1000, 950, 900, 850, 800, 750, 700, 650, 600,
                          550,  500, 450, 400, 350, 300, 250, 200, 150};
    std::vector<double> t, td;
    for (double pp : p) {
        const double temp = pp >= 850 ? 304.0 - (1000 - pp) * 0.03
                                      : 299.5 - (850 - pp) * 0.075;
        t.push_back(temp);
        td.push_back(pp >= 850 ? temp - 2.0 : temp - 20.0);
    }
    return SoundingProfile::from_dewpoint(p, t, td);
}

}  // namespace

TEST_CASE("thermodynamic helpers") {
    CHECK(saturation_vapor_pressure_hpa(273.15) == Approx(6.112));
    CHECK(saturation_mixing_ratio(293.15, 1000.0) == Approx(0.0146).margin(0.001));
    CHECK(virtual_temperature(300.0, 0.0) == 300.0);
    CHECK(virtual_temperature(300.0, 0.015) > 300.0);
}

TEST_CASE("isothermal dry profile has exactly zero MLCAPE") {
    std::vector<double> p{1000, 900, 800, 700, 600, 500, 400, 300, 200};
    std::vector<double> t(p.size(), 285.0), q(p.size(), 0.0);
    const auto prof = SoundingProfile::from_specific_humidity(p, t, q);
    CHECK(compute_mlcape(prof) == 0.0);
}

TEST_CASE("constant-buoyancy construction integrates to b times depth") {
    const double alpha = 0.01;
    const auto prof = constant_buoyancy_profile(alpha);
    // Expected: integral of g*alpha dz over the reduced branch, with dz from
    // the hydrostatic relation in the environment.
    double depth = 0.0;
    const double p_top = prof.pressure_hpa.back();
    for (double pp = 899.0; pp - 1.0 >= p_top - 1e-9; pp -= 1.0) {
        const double tv = prof.temp_at(pp - 0.5);
        depth += kRd * tv / 9.80665 * std::log(pp / (pp - 1.0));
    }
    const double expected = 9.80665 * alpha * depth;
    const double got = compute_mlcape(prof);
    CHECK(got == Approx(expected).epsilon(0.05));
    CHECK(got > 0.0);
}

TEST_CASE("MLCAPE agrees with the dense parcel-ascent oracle") {
    std::mt19937 rng(123);
    std::uniform_real_distribution<double> sfc_t(297.0, 306.0);
    std::uniform_real_distribution<double> dew_dep(1.0, 6.0);
    std::uniform_real_distribution<double> lapse(0.055, 0.075);
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<double> p, t, td;
        const double t0 = sfc_t(rng);
        const double gamma = lapse(rng);
        for (double pp = 1000.0; pp >= 150.0; pp -= 50.0) {
            p.push_back(pp);
            const double temp = pp >= 880.0
                                    ? t0 - (1000 - pp) * 0.02
                                    : t0 - (1000 - 880) * 0.02 - (880 - pp) * gamma;
            t.push_back(temp);
            td.push_back(pp >= 880.0 ? temp - dew_dep(rng) : temp - 20.0);
        }
        const auto prof = SoundingProfile::from_dewpoint(p, t, td);
        const double got = compute_mlcape(prof);
        const double want = oracle::mlcape_dense(prof);
        CHECK(std::abs(got - want) <= std::max(0.02 * want, 20.0));
    }
}

TEST_CASE("a benchmark severe sounding verifies against the dense oracle") {
    const auto prof = severe_day_profile();
    const double got = compute_mlcape(prof);
    const double want = oracle::mlcape_dense(prof);
    CHECK(got > 500.0);  // genuinely unstable environment
    CHECK(std::abs(got - want) <= std::max(0.02 * want, 20.0));
}

TEST_CASE("surface warming never decreases MLCAPE") {
    const auto base = severe_day_profile();
    for (double delta : {0.5, 1.0, 2.0}) {
        auto warmed = base;
        for (std::size_t k = 0; k < warmed.pressure_hpa.size(); ++k)
            if (warmed.pressure_hpa[k] >= base.pressure_hpa.front() - 100.0)
                warmed.temperature_k[k] += delta;
        CHECK(compute_mlcape(warmed) >= compute_mlcape(base) - 1e-6);
    }
}

TEST_CASE("sounding validation") {
    CHECK_THROWS_AS(SoundingProfile::from_specific_humidity(
                        {1000, 900, 800}, {280, 275, 270}, {0, 0, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(SoundingProfile::from_specific_humidity(
                        {1000, 900, 900, 800, 700}, {280, 275, 272, 270, 265},
                        {0, 0, 0, 0, 0}),
                    std::invalid_argument);
    std::vector<double> p{480, 400, 350, 300, 250};
    const auto shallow = SoundingProfile::from_specific_humidity(
        p, {260, 255, 250, 245, 240}, {0, 0, 0, 0, 0});
    CHECK_THROWS_AS(compute_mlcape(shallow), std::invalid_argument);
}

TEST_CASE("bulk shear") {
    CHECK(compute_bulk_shear(5.0, -3.0, 5.0, -3.0) == 0.0);
    CHECK(compute_bulk_shear(0.0, 0.0, 20.0, 0.0) == Approx(20.0));
    CHECK(compute_bulk_shear(1.0, 1.0, 4.0, 5.0) == Approx(5.0));
}

TEST_CASE("CBSS product and threshold") {
    CHECK(compute_cbss(0.0, 25.0) == 0.0);
    CHECK(compute_cbss(1500.0, 10.0) == Approx(15000.0));
    CHECK(compute_cbss(1500.0, 10.0) >= kCbssSevereThreshold);  // inclusive
    CHECK(compute_cbss(2000.0, 25.0) == Approx(50000.0));
    CHECK_THROWS_AS(compute_cbss(-1.0, 5.0), std::invalid_argument);
    // Bilinear scaling.
    CHECK(compute_cbss(2.0 * 800.0, 12.0) == Approx(2.0 * compute_cbss(800.0, 12.0)));
    CHECK(compute_cbss(800.0, 3.0 * 12.0) == Approx(3.0 * compute_cbss(800.0, 12.0)));
}

namespace {

const GridSpec kPphSpec{.lat0 = 30.0, .lon0 = -105.0, .dlat = 0.25,
                        .dlon = 0.25, .nlat = 64, .nlon = 64};

Report report(double lat, double lon, ReportType type) {
    Report r;
    r.time = utc_from_parts(2021, 5, 20, 21);
    r.lat = lat;
    r.lon = lon;
    r.type = type;
    return r;
}

}  // namespace

TEST_CASE("PPH with no reports is all zero") {
    const auto pph = compute_pph({}, kPphSpec);
    for (float v : pph.prob) CHECK(v == 0.0f);
}

TEST_CASE("single tornado report peaks at its gridpoint") {
    const auto pph =
        compute_pph({report(37.0, -97.0, ReportType::tornado)}, kPphSpec);
    const auto ij = kPphSpec.nearest(37.0, -97.0);
    REQUIRE(ij.has_value());
    const float peak = pph.at(ij->first, ij->second);
    for (float v : pph.prob) CHECK(v <= peak);
    // Radially symmetric decay in the four axis directions; the clipped
    // probabilities saturate near the peak, so strict decay is asserted on
    // the raw kernel sum.
    const auto raw = [&](int i, int j) { return pph.raw[kPphSpec.idx(i, j)]; };
    for (int d : {1, 2, 3}) {
        const float n = pph.at(ij->first + d, ij->second);
        CHECK(n == pph.at(ij->first - d, ij->second));
        CHECK(n == pph.at(ij->first, ij->second + d));
        CHECK(n == pph.at(ij->first, ij->second - d));
        CHECK(raw(ij->first + d, ij->second) <
              raw(ij->first + d - 1, ij->second));
    }
    // Zero beyond the truncation radius.
    const int r = static_cast<int>(std::ceil(6.0 * 1.5));
    CHECK(pph.at(ij->first + r + 1, ij->second) == 0.0f);
}

TEST_CASE("wind reports are excluded from PPH") {
    const auto pph = compute_pph({report(37.0, -97.0, ReportType::wind)}, kPphSpec);
    for (float v : pph.prob) CHECK(v == 0.0f);
}

TEST_CASE("coincident reports share support with larger raw amplitude") {
    const ReportSet one{report(37.0, -97.0, ReportType::hail)};
    const ReportSet two{report(37.0, -97.0, ReportType::hail),
                        report(37.0, -97.0, ReportType::hail)};
    const auto a = compute_pph(one, kPphSpec);
    const auto b = compute_pph(two, kPphSpec);
    for (std::size_t k = 0; k < a.prob.size(); ++k) {
        CHECK((a.prob[k] > 0) == (b.prob[k] > 0));
        CHECK(b.raw[k] == Approx(2.0 * a.raw[k]).margin(1e-6));
    }
}

TEST_CASE("PPH matches the direct kernel-sum oracle") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> lat(32.0, 44.0);
    std::uniform_real_distribution<double> lon(-103.0, -91.0);
    ReportSet reports;
    for (int k = 0; k < 12; ++k)
        reports.push_back(report(lat(rng), lon(rng),
                                 k % 3 == 0 ? ReportType::hail
                                            : ReportType::tornado));
    reports.push_back(report(37.0, -97.0, ReportType::wind));
    const PphParams params;
    const auto got = compute_pph(reports, kPphSpec, params);
    const auto want = oracle::pph_direct(reports, kPphSpec, params);
    for (std::size_t k = 0; k < got.prob.size(); ++k)
        CHECK(got.prob[k] == Approx(want[k]).margin(1e-5));
}

TEST_CASE("PPH translation equivariance away from boundaries") {
    ReportSet base{report(37.0, -97.0, ReportType::tornado),
                   report(38.0, -96.0, ReportType::hail)};
    ReportSet shifted;
    for (auto r : base) {
        r.lat += kPphSpec.dlat;
        shifted.push_back(r);
    }
    const auto a = compute_pph(base, kPphSpec);
    const auto b = compute_pph(shifted, kPphSpec);
    for (int i = 12; i < kPphSpec.nlat - 13; ++i)
        for (int j = 12; j < kPphSpec.nlon - 13; ++j)
            CHECK(b.at(i + 1, j) == a.at(i, j));
}

TEST_CASE("PPH bounding box") {
    SECTION("all-zero field has no box") {
        CHECK_FALSE(pph_bounding_box(compute_pph({}, kPphSpec)).has_value());
    }
    SECTION("single kernel box spans the analytic 0.01 radius") {
        const auto pph =
            compute_pph({report(37.0, -97.0, ReportType::tornado)}, kPphSpec);
        const auto box = pph_bounding_box(pph, 0.01);
        REQUIRE(box.has_value());
        // Deposit 10 * peak scale 0.6 => amplitude 6 pre-clip; the 0.01
        // contour sits at sigma * sqrt(2 ln 600) cells.
        const double radius_cells = 1.5 * std::sqrt(2.0 * std::log(600.0));
        const int cells = static_cast<int>(std::floor(radius_cells));
        const auto ij = kPphSpec.nearest(37.0, -97.0);
        const double want_lat_min = kPphSpec.lat(ij->first - cells);
        const double want_lat_max = kPphSpec.lat(ij->first + cells);
        CHECK(box->lat_min == Approx(want_lat_min).margin(1e-9));
        CHECK(box->lat_max == Approx(want_lat_max).margin(1e-9));
        CHECK(box->lon_min == Approx(kPphSpec.lon(ij->second - cells)).margin(1e-9));
        CHECK(box->lon_max == Approx(kPphSpec.lon(ij->second + cells)).margin(1e-9));
    }
    SECTION("two distant kernels share one box") {
        const auto pph = compute_pph({report(33.0, -102.0, ReportType::tornado),
                                      report(43.0, -92.0, ReportType::hail)},
                                     kPphSpec);
        const auto box = pph_bounding_box(pph, 0.01);
        REQUIRE(box.has_value());
        CHECK(box->lat_min < 33.0);
        CHECK(box->lat_max > 43.0);
    }
}

TEST_CASE("region contingency") {
    GridSpec spec{.lat0 = 0, .lon0 = 0, .dlat = 1, .dlon = 1, .nlat = 4, .nlon = 4};
    std::vector<std::uint8_t> target(spec.size(), 0);
    for (int k = 0; k < 4; ++k) target[k] = 1;

    SECTION("identical masks") {
        const auto c = region_contingency(target, target, spec);
        CHECK(c.csi.value() == 1.0);
        CHECK(c.far.value() == 0.0);
        CHECK(c.tp == 4);
        CHECK(c.tn == 12);
    }
    SECTION("prediction twice the target size") {
        std::vector<std::uint8_t> pred(spec.size(), 0);
        for (int k = 0; k < 8; ++k) pred[k] = 1;
        const auto c = region_contingency(pred, target, spec);
        CHECK(c.csi.value() == Approx(0.5));
        CHECK(c.far.value() == Approx(0.5));
    }
    SECTION("disjoint masks") {
        std::vector<std::uint8_t> pred(spec.size(), 0);
        for (int k = 8; k < 12; ++k) pred[k] = 1;
        const auto c = region_contingency(pred, target, spec);
        CHECK(c.csi.value() == 0.0);
        CHECK(c.far.value() == 1.0);
    }
    SECTION("empty prediction leaves FAR undefined") {
        std::vector<std::uint8_t> pred(spec.size(), 0);
        const auto c = region_contingency(pred, target, spec);
        CHECK_FALSE(c.far.has_value());
        CHECK(c.csi.value() == 0.0);
    }
}

TEST_CASE("contingency matches brute-force counts on random masks") {
    std::mt19937 rng(61);
    std::bernoulli_distribution coin(0.35);
    GridSpec spec{.lat0 = 0, .lon0 = 0, .dlat = 1, .dlon = 1, .nlat = 8, .nlon = 8};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint8_t> pred(spec.size()), target(spec.size());
        std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t k = 0; k < pred.size(); ++k) {
            pred[k] = coin(rng);
            target[k] = coin(rng);
            tp += pred[k] && target[k];
            fp += pred[k] && !target[k];
            fn += !pred[k] && target[k];
            tn += !pred[k] && !target[k];
        }
        const auto c = region_contingency(pred, target, spec);
        CHECK(c.tp == tp);
        CHECK(c.fp == fp);
        CHECK(c.fn == fn);
        CHECK(c.tn == tn);
        if (tp + fn + fp > 0)
            CHECK(c.csi.value() == Approx(double(tp) / double(tp + fn + fp)));
    }
}

TEST_CASE("report hits and misses") {
    GridSpec spec{.lat0 = 30.0, .lon0 = -105.0, .dlat = 1, .dlon = 1,
                  .nlat = 10, .nlon = 10};
    std::vector<std::uint8_t> mask(spec.size(), 0);
    const ReportSet reports{report(33.0, -100.0, ReportType::tornado),
                            report(34.0, -101.0, ReportType::hail),
                            report(36.0, -98.0, ReportType::tornado)};
    SECTION("empty mask misses everything") {
        const auto hm = report_hits_misses(mask, spec, reports);
        CHECK(hm.hits == 0);
        CHECK(hm.misses == 3);
    }
    SECTION("full mask hits everything") {
        std::fill(mask.begin(), mask.end(), 1);
        const auto hm = report_hits_misses(mask, spec, reports);
        CHECK(hm.hits == 3);
        CHECK(hm.misses == 0);
    }
    SECTION("boundary cell membership decides") {
        const auto ij = spec.nearest(33.0, -100.0);
        mask[spec.idx(ij->first, ij->second)] = 1;
        const auto hm = report_hits_misses(mask, spec, reports);
        CHECK(hm.hits == 1);
        CHECK(hm.misses == 2);
    }
    SECTION("wind reports are ignored") {
        std::fill(mask.begin(), mask.end(), 1);
        ReportSet with_wind = reports;
        with_wind.push_back(report(33.0, -100.0, ReportType::wind));
        const auto hm = report_hits_misses(mask, spec, with_wind);
        CHECK(hm.hits == 3);
    }
}

TEST_CASE("early signal lead") {
    GridSpec spec{.lat0 = 30.0, .lon0 = -105.0, .dlat = 1, .dlon = 1,
                  .nlat = 8, .nlon = 8};
    const auto pph = compute_pph({report(33.0, -102.0, ReportType::tornado)},
                                 spec, {.sigma_gridpoints = 1.0});
    std::vector<std::uint8_t> full(spec.size(), 1), empty(spec.size(), 0);

    SECTION("coverage at all leads returns the longest") {
        std::vector<std::pair<double, std::vector<std::uint8_t>>> by_lead{
            {5, full}, {4, full}, {3, full}, {2, full}, {1, full}};
        CHECK(early_signal(by_lead, pph).value() == 5.0);
    }
    SECTION("never satisfied gives no signal") {
        std::vector<std::pair<double, std::vector<std::uint8_t>>> by_lead{
            {3, empty}, {2, empty}, {1, empty}};
        CHECK_FALSE(early_signal(by_lead, pph).has_value());
    }
    SECTION("satisfied only at short leads returns the break point") {
        std::vector<std::pair<double, std::vector<std::uint8_t>>> by_lead{
            {5, empty}, {4, empty}, {3, full}, {2, full}, {1, full}};
        CHECK(early_signal(by_lead, pph).value() == 3.0);
    }
    SECTION("a hole in the sequence caps the answer") {
        std::vector<std::pair<double, std::vector<std::uint8_t>>> by_lead{
            {5, full}, {4, empty}, {3, full}, {2, full}, {1, full}};
        CHECK(early_signal(by_lead, pph).value() == 3.0);
    }
    SECTION("empty PPH region is an error") {
        const auto zero = compute_pph({}, spec);
        std::vector<std::pair<double, std::vector<std::uint8_t>>> by_lead{{1, full}};
        CHECK_THROWS_AS(early_signal(by_lead, zero), std::invalid_argument);
    }
}

TEST_CASE("report CSV round trip") {
    ReportSet reports{report(33.25, -100.5, ReportType::tornado),
                      report(34.0, -101.25, ReportType::hail)};
    reports[1].magnitude = 2.5;
    std::ostringstream os;
    write_reports_csv(os, reports);
    CHECK(os.str().rfind("time,lat,lon,type,magnitude\n", 0) == 0);
    std::istringstream is(os.str());
    const auto back = read_reports_csv(is);
    REQUIRE(back.size() == 2);
    CHECK(back[0].type == ReportType::tornado);
    CHECK_FALSE(back[0].magnitude.has_value());
    CHECK(back[1].magnitude.value() == Approx(2.5));
    CHECK(back[1].lat == Approx(34.0));
}
