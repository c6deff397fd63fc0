#include "snn_sim/energy.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>

#include "snn_sim/errors.hpp"

namespace snn_sim {

void EnergyModelParams::validate() const {
    if (!(p_static >= 0.0) || !(e_edge >= 0.0) || !(e_spike >= 0.0) || !(reference_share >= 0.0)) {
        throw ConfigurationError("energy model parameters must be >= 0");
    }
}

double power_per_neuron(double frequency_hz, const EnergyModelParams& params) {
    if (!(frequency_hz >= 0.0)) {
        throw ConfigurationError("frequency must be >= 0");
    }
    params.validate();
    return params.p_static + (1.0 + params.reference_share) * params.e_edge * frequency_hz;
}

double energy_per_neuron(double frequency_hz, double latency_s, double spikes,
                         const EnergyModelParams& params) {
    return power_per_neuron(frequency_hz, params) * latency_s + params.e_spike * spikes;
}

EnergyReport energy_sweep(const std::vector<FrequencyPoint>& points, const EnergyModelParams& params,
                          std::size_t neuron_count) {
    params.validate();
    EnergyReport report;
    report.neuron_count = neuron_count;
    const auto n = static_cast<double>(neuron_count);
    for (const auto& p : points) {
        EnergyRow row;
        row.frequency_hz = p.frequency_hz;
        row.power_w = power_per_neuron(p.frequency_hz, params);
        if (p.latency_s) {
            row.latency_s = p.latency_s;
            row.energy_per_neuron_j =
                energy_per_neuron(p.frequency_hz, *p.latency_s, p.spikes_per_neuron, params);
            row.energy_per_inference_j = n * *row.energy_per_neuron_j;
            if (!report.argmin ||
                *row.energy_per_neuron_j < *report.rows[*report.argmin].energy_per_neuron_j) {
                report.argmin = report.rows.size();
            }
        }
        report.rows.push_back(row);
    }
    return report;
}

double energy_per_inference(const EnergyReport& report, std::size_t neuron_count) {
    if (report.failed()) {
        throw ConfigurationError("energy sweep has no frequency that reached the target");
    }
    return static_cast<double>(neuron_count) * *report.rows[*report.argmin].energy_per_neuron_j;
}

double energy_per_inference(const NetworkSpec& spec, const EnergyReport& report) {
    return energy_per_inference(report, spec.neuron_count());
}

EnergyModelParams fit_two_anchors(const EnergyAnchor& a, const EnergyAnchor& b,
                                  const EnergyModelParams& base) {
    if (!a.point.latency_s || !b.point.latency_s) {
        throw CalibrationError("energy anchors need frequencies that reached the target");
    }
    // E_i - e_spike*S_i = p_static*L_i + (1+r)*e_edge*f_i*L_i
    const double k = 1.0 + base.reference_share;
    const double l1 = *a.point.latency_s;
    const double l2 = *b.point.latency_s;
    const double a11 = l1;
    const double a12 = k * a.point.frequency_hz * l1;
    const double a21 = l2;
    const double a22 = k * b.point.frequency_hz * l2;
    const double r1 = a.energy_j - base.e_spike * a.point.spikes_per_neuron;
    const double r2 = b.energy_j - base.e_spike * b.point.spikes_per_neuron;
    const double det = a11 * a22 - a12 * a21;
    if (det == 0.0 || !std::isfinite(det)) {
        throw CalibrationError("energy anchors are degenerate (same frequency or zero latency)");
    }
    EnergyModelParams fit = base;
    fit.p_static = (r1 * a22 - a12 * r2) / det;
    fit.e_edge = (a11 * r2 - a21 * r1) / det;
    if (fit.p_static < 0.0 || fit.e_edge < 0.0) {
        throw CalibrationError(fmt::format(
            "energy anchors imply negative parameters (p_static={}, e_edge={})", fit.p_static,
            fit.e_edge));
    }
    return fit;
}

void write_energy_csv(std::ostream& out, const EnergyReport& report) {
    out << "frequency_hz,power_w,latency_s,energy_per_neuron_j,energy_per_inference_j,reached_target\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
    for (const auto& row : report.rows) {
        out << fmt::format("{},{},{},{},{},{}\n", row.frequency_hz, row.power_w, opt(row.latency_s),
                           opt(row.energy_per_neuron_j), opt(row.energy_per_inference_j),
                           row.reached_target() ? 1 : 0);
    }
}

}  // namespace snn_sim
