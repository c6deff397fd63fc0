#pragma once

// Integrate-and-fire neuron variants.
//
// Three models share one stepping interface:
//   - IdealIF:       v += drive, spike when v >= threshold.
//   - VoltageDomain: capacitor charged by a current mirror whose output
//                    current drops as the membrane voltage rises (channel
//                    length modulation), clamped to [0, V_DD].
//   - TimeDomain:    a signal oscillator whose frequency follows the drive
//                    and a fixed reference oscillator. The membrane potential
//                    is their phase difference; rising edges are counted and
//                    a spike fires when the counts differ by one. The spike
//                    adds 1 to the reference count, which subtracts exactly
//                    one cycle (2*pi) of phase difference.
//
// "drive" is the weighted input delivered during one timestep, in threshold
// units after conversion.
//
// Phases are stored in cycles (1 cycle = 2*pi rad); the *_rad accessors
// convert.

#include <array>
#include <cstdint>
#include <variant>

namespace snn_sim {

enum class ResetMode { SubtractThreshold, ResetToZero };

struct IdealIFParams {
    double threshold = 1.0;
    ResetMode reset_mode = ResetMode::SubtractThreshold;

    void validate() const;
};

struct VoltageDomainParams {
    double threshold_voltage = 0.5;  // V
    double supply_voltage = 1.0;     // V_DD, V
    double lambda_clm = 0.0;         // 1/V
    double gain = 0.5;               // V per unit drive at v_mem = 0
    double leak_rate = 0.0;          // 1/s
    ResetMode reset_mode = ResetMode::ResetToZero;

    void validate() const;
    // Drive units needed to reach threshold from rest when lambda_clm = 0.
    [[nodiscard]] double equivalent_threshold() const { return threshold_voltage / gain; }
};

inline constexpr int kMaxCdcDelaySteps = 8;

struct TimeDomainParams {
    double f_ref = 50e6;   // Hz, reference oscillator
    double k_ico = 1.0;    // cycles of extra signal phase per unit drive
    double f_min = 0.0;    // Hz
    double f_max = 100e6;  // Hz
    int counter_bits = 16;
    // Steps of latency before the signal-domain count is visible to the
    // spike generator (clock-domain crossing). 0 = ideal transfer.
    int cdc_delay_steps = 0;

    void validate() const;
    [[nodiscard]] std::uint64_t counter_mask() const;
};

using NeuronModelParams = std::variant<IdealIFParams, VoltageDomainParams, TimeDomainParams>;

struct IdealState {
    double v_mem = 0.0;
};

struct VoltageState {
    double v_mem = 0.0;  // V
};

struct TimeDomainState {
    double phase_clk = 0.0;  // cycles
    double phase_ref = 0.0;  // cycles
    std::uint64_t cnt_clk = 0;
    std::uint64_t cnt_ref = 0;
    std::array<std::uint64_t, kMaxCdcDelaySteps> clk_in_flight{};

    [[nodiscard]] double phi_clk_rad() const;
    [[nodiscard]] double phi_ref_rad() const;
};

using NeuronState = std::variant<IdealState, VoltageState, TimeDomainState>;

struct StepOutcome {
    NeuronState state;
    bool spike = false;
};

[[nodiscard]] NeuronState initial_state(const NeuronModelParams& params);

// Checked, value-semantic stepping. These throw ModelStateError when the
// state variant does not match the parameter set.
[[nodiscard]] StepOutcome step_ideal(NeuronState state, double drive, const IdealIFParams& params);
[[nodiscard]] StepOutcome step_voltage_domain(NeuronState state, double drive, double dt,
                                              const VoltageDomainParams& params);
[[nodiscard]] StepOutcome step_time_domain(NeuronState state, double drive, double dt,
                                           const TimeDomainParams& params);
[[nodiscard]] StepOutcome step(NeuronState state, double drive, double dt,
                               const NeuronModelParams& params);

// Highest sustainable spike rate: one spike needs one full cycle of phase
// lead over the reference, so the ceiling is the frequency headroom.
[[nodiscard]] double max_firing_rate(const TimeDomainParams& params);

// Charging increment of the voltage-domain neuron at membrane voltage v.
[[nodiscard]] double voltage_domain_increment(double v_mem, double drive,
                                              const VoltageDomainParams& params);

// In-place kernels for the engine's inner loop. Parameters are assumed
// validated; no variant checks.

inline bool advance(IdealState& s, double drive, const IdealIFParams& p) noexcept {
    s.v_mem += drive;
    if (s.v_mem >= p.threshold) {
        s.v_mem = p.reset_mode == ResetMode::SubtractThreshold ? s.v_mem - p.threshold : 0.0;
        return true;
    }
    return false;
}

bool advance(VoltageState& s, double drive, double dt, const VoltageDomainParams& p) noexcept;
bool advance(TimeDomainState& s, double drive, double dt, const TimeDomainParams& p) noexcept;

}  // namespace snn_sim
