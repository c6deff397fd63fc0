#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "snn_sim/energy.hpp"
#include "snn_sim/errors.hpp"

using namespace snn_sim;

namespace {

std::vector<FrequencyPoint> inverse_latency(const std::vector<double>& f, double c, double floor_s,
                                            double spikes = 0.0) {
    std::vector<FrequencyPoint> pts;
    for (double x : f) {
        pts.push_back({x, c / x + floor_s, spikes});
    }
    return pts;
}

const std::vector<double> kRates{3e6, 6e6, 15e6, 30e6, 60e6, 100e6};

}  // namespace

TEST_CASE("power per neuron") {
    EnergyModelParams p;
    p.p_static = 3e-9;
    p.e_edge = 1e-15;
    CHECK(power_per_neuron(0.0, p) == 3e-9);
    const double d1 = power_per_neuron(10e6, p) - p.p_static;
    const double d2 = power_per_neuron(20e6, p) - p.p_static;
    CHECK(d2 == doctest::Approx(2.0 * d1));
    CHECK(power_per_neuron(20e6, p) > power_per_neuron(10e6, p));
    CHECK_THROWS_AS((void)power_per_neuron(-1.0, p), ConfigurationError);
    p.e_edge = -1.0;
    CHECK_THROWS_AS((void)power_per_neuron(1.0, p), ConfigurationError);
}

TEST_CASE("1.15 fJ per edge at 100 MHz is 0.230 uW") {
    EnergyModelParams p;
    p.e_edge = 1.15e-15;
    CHECK(power_per_neuron(100e6, p) == doctest::Approx(0.230e-6).epsilon(1e-12));
    // A reference shared by N neurons removes most of the second oscillator.
    p.reference_share = 1.0 / 100.0;
    CHECK(power_per_neuron(100e6, p) == doctest::Approx(1.15e-15 * 100e6 * 1.01));
}

TEST_CASE("energy decomposes exactly into its parts") {
    EnergyModelParams p;
    p.p_static = 2.7e-8;
    p.e_edge = 1.3e-15;
    p.e_spike = 4e-14;
    for (double f : kRates) {
        const double lat = 80.0 / f + 5e-6;
        const double spikes = 2.25;
        const double e = energy_per_neuron(f, lat, spikes, p);
        const double residual = e - p.p_static * lat - 2.0 * p.e_edge * f * lat - p.e_spike * spikes;
        CHECK(std::abs(residual) <= 4.0 * std::numeric_limits<double>::epsilon() * e);
    }
}

TEST_CASE("static power only: argmin is the fastest frequency") {
    EnergyModelParams p;
    p.p_static = 1e-8;
    const EnergyReport r = energy_sweep(inverse_latency(kRates, 80.0, 0.0), p, 1);
    REQUIRE(r.argmin.has_value());
    CHECK(r.rows[*r.argmin].frequency_hz == 100e6);
    for (const auto& row : r.rows) {
        CHECK(*row.energy_per_neuron_j == doctest::Approx(1e-8 * *row.latency_s));
    }
}

TEST_CASE("latency c/f: closed form, and a latency floor makes the optimum interior") {
    EnergyModelParams p;
    p.p_static = 3.5e-8;
    p.e_edge = 1.1e-15;
    const double c = 80.0;
    const EnergyReport r = energy_sweep(inverse_latency(kRates, c, 0.0), p, 1);
    for (const auto& row : r.rows) {
        const double closed = p.p_static * c / row.frequency_hz + 2.0 * p.e_edge * c;
        CHECK(*row.energy_per_neuron_j == doctest::Approx(closed).epsilon(1e-12));
    }
    CHECK(r.rows[*r.argmin].frequency_hz == 100e6);

    // With a floor L0 the optimum is sqrt(p c / (2 e L0)).
    const double floor_s = 5e-6;
    const EnergyReport f = energy_sweep(inverse_latency(kRates, c, floor_s), p, 1);
    const double f_star = std::sqrt(p.p_static * c / (2.0 * p.e_edge * floor_s));
    const double best = f.rows[*f.argmin].frequency_hz;
    CHECK(best > kRates.front());
    CHECK(best < kRates.back());
    for (double x : kRates) {
        CHECK(std::abs(std::log(best / f_star)) <= std::abs(std::log(x / f_star)) + 1e-12);
    }
}

TEST_CASE("two-anchor fit reproduces both anchors") {
    const auto pts = inverse_latency(kRates, 80.0, 5e-6, 2.0);
    EnergyModelParams base;
    base.e_spike = 1e-15;
    const EnergyAnchor a{pts[0], 0.646e-12};
    const EnergyAnchor b{pts[2], 0.488e-12};
    const EnergyModelParams fit = fit_two_anchors(a, b, base);
    CHECK(fit.e_spike == base.e_spike);
    CHECK(energy_per_neuron(3e6, *pts[0].latency_s, 2.0, fit) == doctest::Approx(0.646e-12).epsilon(1e-12));
    CHECK(energy_per_neuron(15e6, *pts[2].latency_s, 2.0, fit) == doctest::Approx(0.488e-12).epsilon(1e-12));
    const EnergyReport r = energy_sweep(pts, fit, 1);
    CHECK(r.rows[*r.argmin].frequency_hz == 15e6);

    CHECK_THROWS_AS((void)fit_two_anchors(a, a, base), CalibrationError);
    FrequencyPoint unreached{6e6, std::nullopt, 0.0};
    CHECK_THROWS_AS((void)fit_two_anchors(a, {unreached, 1e-12}, base), CalibrationError);
    // Higher energy at the faster anchor with no floor needs negative static power.
    const auto nofloor = inverse_latency(kRates, 80.0, 0.0);
    CHECK_THROWS_AS((void)fit_two_anchors({nofloor[0], 1e-12}, {nofloor[2], 5e-12}), CalibrationError);
}

TEST_CASE("unreached rows are flagged and excluded; all unreached is a failed report") {
    EnergyModelParams p;
    p.p_static = 1e-8;
    p.e_edge = 1e-15;
    auto pts = inverse_latency(kRates, 80.0, 5e-6);
    pts[5].latency_s.reset();
    pts[4].latency_s.reset();
    const EnergyReport r = energy_sweep(pts, p, 10);
    CHECK_FALSE(r.rows[5].reached_target());
    CHECK_FALSE(r.rows[5].energy_per_neuron_j.has_value());
    CHECK(*r.argmin < 4);

    for (auto& x : pts) {
        x.latency_s.reset();
    }
    const EnergyReport none = energy_sweep(pts, p, 10);
    CHECK(none.failed());
    CHECK(none.rows.size() == 6);
    CHECK_THROWS_AS((void)energy_per_inference(none, 10), ConfigurationError);
}

TEST_CASE("argmin is stable under rescaling and energy per inference is linear") {
    EnergyModelParams p;
    p.p_static = 3e-8;
    p.e_edge = 1.2e-15;
    p.e_spike = 2e-15;
    const auto pts = inverse_latency(kRates, 80.0, 5e-6, 3.0);
    const EnergyReport r = energy_sweep(pts, p, 1);
    EnergyModelParams scaled = p;
    scaled.p_static *= 7.5;
    scaled.e_edge *= 7.5;
    scaled.e_spike *= 7.5;
    CHECK(*energy_sweep(pts, scaled, 1).argmin == *r.argmin);

    const double one = energy_per_inference(r, 1);
    CHECK(one == *r.rows[*r.argmin].energy_per_neuron_j);
    CHECK(energy_per_inference(r, 138) == doctest::Approx(138.0 * one));
    CHECK(*energy_sweep(pts, p, 138).rows[0].energy_per_inference_j ==
          doctest::Approx(138.0 * *r.rows[0].energy_per_neuron_j));
}

TEST_CASE("energy CSV layout") {
    EnergyModelParams p;
    p.p_static = 1e-8;
    auto pts = inverse_latency({3e6, 6e6}, 80.0, 0.0);
    pts[1].latency_s.reset();
    std::ostringstream out;
    write_energy_csv(out, energy_sweep(pts, p, 2));
    std::istringstream in(out.str());
    std::string header;
    std::string row0;
    std::string row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    CHECK(header == "frequency_hz,power_w,latency_s,energy_per_neuron_j,energy_per_inference_j,reached_target");
    CHECK(row0.substr(0, 8) == "3000000,");
    CHECK(row0.back() == '1');
    CHECK(row1 == "6000000,1e-08,,,,0");
}
