#include "snn_sim/neuron_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "snn_sim/errors.hpp"

namespace snn_sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <typename Expected>
Expected& expect_state(NeuronState& state, const char* model) {
    auto* s = std::get_if<Expected>(&state);
    if (s == nullptr) {
        throw ModelStateError(std::string("neuron state does not belong to the ") + model +
                              " model");
    }
    return *s;
}

// Two's-complement reading of a wrapped counter difference.
std::int64_t signed_difference(std::uint64_t a, std::uint64_t b, int bits, std::uint64_t mask) {
    const std::uint64_t d = (a - b) & mask;
    if (bits >= 64) {
        return static_cast<std::int64_t>(d);
    }
    const std::uint64_t half = std::uint64_t{1} << (bits - 1);
    return d >= half ? static_cast<std::int64_t>(d) - static_cast<std::int64_t>(mask) - 1
                     : static_cast<std::int64_t>(d);
}

}  // namespace

void IdealIFParams::validate() const {
    if (!(threshold > 0.0)) {
        throw ConfigurationError("ideal neuron threshold must be > 0");
    }
}

void VoltageDomainParams::validate() const {
    if (!(threshold_voltage > 0.0) || !(threshold_voltage <= supply_voltage)) {
        throw ConfigurationError("voltage-domain neuron needs 0 < threshold_voltage <= V_DD");
    }
    if (!(lambda_clm >= 0.0)) {
        throw ConfigurationError("lambda_clm must be >= 0");
    }
    if (!(gain > 0.0)) {
        throw ConfigurationError("voltage-domain gain must be > 0");
    }
    if (!(leak_rate >= 0.0)) {
        throw ConfigurationError("leak_rate must be >= 0");
    }
}

void TimeDomainParams::validate() const {
    if (!(f_min >= 0.0) || !(f_min <= f_ref) || !(f_ref <= f_max)) {
        throw ConfigurationError("time-domain neuron needs 0 <= f_min <= f_ref <= f_max");
    }
    if (!(k_ico > 0.0) || !std::isfinite(k_ico)) {
        throw ConfigurationError("k_ico must be finite and > 0");
    }
    if (counter_bits < 2 || counter_bits > 64) {
        throw ConfigurationError("counter_bits must be in [2, 64]");
    }
    if (cdc_delay_steps < 0 || cdc_delay_steps > kMaxCdcDelaySteps) {
        throw ConfigurationError("cdc_delay_steps must be in [0, " +
                                 std::to_string(kMaxCdcDelaySteps) + "]");
    }
}

std::uint64_t TimeDomainParams::counter_mask() const {
    return counter_bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << counter_bits) - 1;
}

double TimeDomainState::phi_clk_rad() const { return phase_clk * kTwoPi; }
double TimeDomainState::phi_ref_rad() const { return phase_ref * kTwoPi; }

NeuronState initial_state(const NeuronModelParams& params) {
    return std::visit(
        [](const auto& p) -> NeuronState {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, IdealIFParams>) {
                return IdealState{};
            } else if constexpr (std::is_same_v<P, VoltageDomainParams>) {
                return VoltageState{};
            } else {
                return TimeDomainState{};
            }
        },
        params);
}

double voltage_domain_increment(double v_mem, double drive, const VoltageDomainParams& p) {
    const double lv = p.lambda_clm;
    return p.gain * drive * (1.0 + lv * (p.supply_voltage - v_mem)) / (1.0 + lv * p.supply_voltage);
}

bool advance(VoltageState& s, double drive, double dt, const VoltageDomainParams& p) noexcept {
    if (p.leak_rate > 0.0) {
        s.v_mem *= 1.0 - p.leak_rate * dt;
    }
    s.v_mem = std::clamp(s.v_mem + voltage_domain_increment(s.v_mem, drive, p), 0.0,
                         p.supply_voltage);
    if (s.v_mem >= p.threshold_voltage) {
        s.v_mem = p.reset_mode == ResetMode::ResetToZero ? 0.0 : s.v_mem - p.threshold_voltage;
        return true;
    }
    return false;
}

bool advance(TimeDomainState& s, double drive, double dt, const TimeDomainParams& p) noexcept {
    const std::uint64_t mask = p.counter_mask();
    const double f_sig = std::clamp(p.f_ref + p.k_ico * drive / dt, p.f_min, p.f_max);

    const double ref_edges_before = std::floor(s.phase_ref);
    s.phase_clk += f_sig * dt;
    s.phase_ref += p.f_ref * dt;

    s.cnt_clk = static_cast<std::uint64_t>(std::floor(s.phase_clk)) & mask;
    const auto new_ref_edges =
        static_cast<std::uint64_t>(std::floor(s.phase_ref) - ref_edges_before);
    s.cnt_ref = (s.cnt_ref + new_ref_edges) & mask;

    // The spike generator runs in the reference domain and sees the signal
    // count through the synchronizer.
    std::uint64_t observed = s.cnt_clk;
    if (p.cdc_delay_steps > 0) {
        const int d = p.cdc_delay_steps;
        observed = s.clk_in_flight[static_cast<std::size_t>(d - 1)];
        for (int i = d - 1; i > 0; --i) {
            s.clk_in_flight[static_cast<std::size_t>(i)] =
                s.clk_in_flight[static_cast<std::size_t>(i - 1)];
        }
        s.clk_in_flight[0] = s.cnt_clk;
    }

    if (signed_difference(observed, s.cnt_ref, p.counter_bits, mask) >= 1) {
        s.cnt_ref = (s.cnt_ref + 1) & mask;
        return true;
    }
    return false;
}

StepOutcome step_ideal(NeuronState state, double drive, const IdealIFParams& params) {
    auto& s = expect_state<IdealState>(state, "ideal");
    params.validate();
    const bool spike = advance(s, drive, params);
    return {state, spike};
}

StepOutcome step_voltage_domain(NeuronState state, double drive, double dt,
                                const VoltageDomainParams& params) {
    auto& s = expect_state<VoltageState>(state, "voltage-domain");
    params.validate();
    if (!(s.v_mem >= 0.0 && s.v_mem <= params.supply_voltage)) {
        throw ModelStateError("voltage-domain membrane potential outside [0, V_DD]");
    }
    if (params.leak_rate > 0.0 && !(dt > 0.0)) {
        throw ConfigurationError("dt must be > 0");
    }
    const bool spike = advance(s, drive, dt, params);
    return {state, spike};
}

StepOutcome step_time_domain(NeuronState state, double drive, double dt,
                             const TimeDomainParams& params) {
    auto& s = expect_state<TimeDomainState>(state, "time-domain");
    params.validate();
    if (!(dt > 0.0)) {
        throw ConfigurationError("dt must be > 0");
    }
    const bool spike = advance(s, drive, dt, params);
    return {state, spike};
}

StepOutcome step(NeuronState state, double drive, double dt, const NeuronModelParams& params) {
    return std::visit(
        [&](const auto& p) -> StepOutcome {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, IdealIFParams>) {
                return step_ideal(std::move(state), drive, p);
            } else if constexpr (std::is_same_v<P, VoltageDomainParams>) {
                return step_voltage_domain(std::move(state), drive, dt, p);
            } else {
                return step_time_domain(std::move(state), drive, dt, p);
            }
        },
        params);
}

double max_firing_rate(const TimeDomainParams& params) { return params.f_max - params.f_ref; }

}  // namespace snn_sim
