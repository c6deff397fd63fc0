#pragma once

// Parametric energy model of the time-domain neuron.
//
//   P(f) = p_static + (1 + reference_share) * e_edge * f
//   E    = P(f) * latency + e_spike * spikes
//
// f is the oscillator frequency; the signal oscillator and (a share of) the
// reference oscillator each toggle once per cycle. reference_share = 1
// charges a full reference per neuron; 1/N models one reference shared by N
// neurons.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "snn_sim/network.hpp"

namespace snn_sim {

struct EnergyModelParams {
    double p_static = 0.0;  // W per neuron
    double e_edge = 0.0;    // J per oscillator edge
    double e_spike = 0.0;   // J per spike (generator + counter reset)
    double reference_share = 1.0;
    // Frequency (Hz) -> supply (V). Documentation only, not used in the math.
    std::vector<std::pair<double, double>> f_to_supply;

    void validate() const;
};

[[nodiscard]] double power_per_neuron(double frequency_hz, const EnergyModelParams& params);

// Per-frequency input to the sweep, usually taken from latency_sweep.
struct FrequencyPoint {
    double frequency_hz = 0.0;
    std::optional<double> latency_s;  // empty: target not reached
    double spikes_per_neuron = 0.0;
};

struct EnergyRow {
    double frequency_hz = 0.0;
    double power_w = 0.0;
    std::optional<double> latency_s;
    std::optional<double> energy_per_neuron_j;
    std::optional<double> energy_per_inference_j;

    [[nodiscard]] bool reached_target() const { return latency_s.has_value(); }
};

struct EnergyReport {
    std::vector<EnergyRow> rows;
    std::size_t neuron_count = 1;
    // Row index of the lowest energy among rows that reached the target.
    std::optional<std::size_t> argmin;

    [[nodiscard]] bool failed() const { return !argmin.has_value(); }
};

[[nodiscard]] double energy_per_neuron(double frequency_hz, double latency_s, double spikes,
                                       const EnergyModelParams& params);

// Rows that did not reach the target are kept and flagged, and never win
// the argmin. If none reached it, the report is marked failed.
[[nodiscard]] EnergyReport energy_sweep(const std::vector<FrequencyPoint>& points,
                                        const EnergyModelParams& params, std::size_t neuron_count);

// Whole-network energy at the report's optimum frequency. Throws
// ConfigurationError for a failed sweep.
[[nodiscard]] double energy_per_inference(const EnergyReport& report, std::size_t neuron_count);
[[nodiscard]] double energy_per_inference(const NetworkSpec& spec, const EnergyReport& report);

// Two-point calibration: solves p_static and e_edge so that two reached
// frequency points hit the given per-neuron energies exactly (e_spike and
// reference_share are taken from `base`). Throws CalibrationError when the
// system is singular or the solution is negative.
struct EnergyAnchor {
    FrequencyPoint point;
    double energy_j = 0.0;
};
[[nodiscard]] EnergyModelParams fit_two_anchors(const EnergyAnchor& a, const EnergyAnchor& b,
                                                const EnergyModelParams& base = {});

// frequency_hz, power_w, latency_s, energy_per_neuron_j,
// energy_per_inference_j, reached_target
void write_energy_csv(std::ostream& out, const EnergyReport& report);

}  // namespace snn_sim
