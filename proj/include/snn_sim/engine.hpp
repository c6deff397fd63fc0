#pragma once

// Time-stepped SNN inference over a converted network.
//
// Every step, the encoded input drives the first layer and each layer's
// spikes are weight-multiplied into the next layer's drive within the same
// step (no per-layer pipeline delay).
//
// Rate scaling: a neuron whose normalized ANN activation is a fires on
// average a / pulse_steps times per step. For the ideal and voltage-domain
// models pulse_steps is 1 (one step = one max-rate period). For the
// time-domain model one max-rate period spans 1 / (max_firing_rate * dt)
// steps. The input current and biases are then delivered at 1 / pulse_steps
// per step, and each spike's charge is spread evenly over pulse_steps steps
// (the synaptic current pulse lasts one max-rate period), so the
// instantaneous oscillator frequency stays inside its range for activations
// up to 1.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "snn_sim/dataset.hpp"
#include "snn_sim/network.hpp"
#include "snn_sim/neuron_models.hpp"

namespace snn_sim {

enum class InputEncoding { ConstantCurrent, PoissonRate };
enum class DecisionRule { SpikeCountArgmax, PotentialArgmax };

struct SimConfig {
    double dt = 1.0;  // seconds (one algorithmic step for ideal/voltage runs)
    std::size_t max_steps = 300;
    NeuronModelParams neuron_model = IdealIFParams{};
    InputEncoding input_encoding = InputEncoding::ConstantCurrent;
    DecisionRule decision_rule = DecisionRule::SpikeCountArgmax;
    std::uint64_t seed = 0;
    // Steps per synaptic pulse; 0 derives it from the neuron model.
    std::size_t pulse_steps = 0;

    void validate() const;
    [[nodiscard]] std::size_t resolved_pulse_steps() const;
};

// Time-domain configuration for a given maximum oscillator frequency:
// reference at f_max / 2, f_min = 0, dt = 1 / (steps_per_period * f_max),
// k_ico = 1 cycle per unit drive. max_steps covers rate_periods max-rate
// periods, so runs at different f_max have identical step statistics.
[[nodiscard]] SimConfig time_domain_config(double f_max_hz, std::size_t rate_periods,
                                           std::size_t steps_per_period = 10,
                                           const SimConfig& base = {});

struct InferenceTrace {
    std::size_t class_count = 0;
    std::size_t steps = 0;
    // Cumulative output spike counts, (steps + 1) x class_count; row 0 is
    // before the first step.
    std::vector<std::uint32_t> output_counts;
    // Accumulated output drive without reset, after the last step.
    std::vector<double> output_potential;
    // Decision after each step prefix, steps + 1 entries.
    std::vector<std::uint16_t> predicted;
    // First step from which the decision never changes again.
    std::size_t steps_to_stable_decision = 0;
    std::vector<std::uint64_t> layer_spikes;
    // Network-wide spikes up to each step, steps + 1 entries.
    std::vector<std::uint64_t> cumulative_spikes;

    [[nodiscard]] std::span<const std::uint32_t> counts_at(std::size_t step) const {
        return {output_counts.data() + step * class_count, class_count};
    }
    [[nodiscard]] std::size_t predicted_class() const { return predicted.back(); }
};

// Immutable, precomputed form of a normalized network. Safe to share
// between threads.
class CompiledNetwork {
public:
    explicit CompiledNetwork(const NetworkSpec& spec);

    [[nodiscard]] const NetworkSpec& spec() const { return spec_; }
    [[nodiscard]] std::size_t layer_count() const { return fan_out_.size(); }
    [[nodiscard]] std::size_t neuron_count() const { return neuron_count_; }

    struct LayerData {
        Shape3 in_shape;
        Shape3 out_shape;
        FanOut fan_out;
        std::vector<double> bias;  // per output neuron
    };
    [[nodiscard]] const LayerData& layer(std::size_t l) const { return fan_out_[l]; }

private:
    NetworkSpec spec_;
    std::vector<LayerData> fan_out_;
    std::size_t neuron_count_ = 0;
};

// `stream` selects the random stream for Poisson encoding (the image index
// in dataset runs), so results do not depend on evaluation order.
[[nodiscard]] InferenceTrace run_inference(const CompiledNetwork& net, std::span<const float> input,
                                           const SimConfig& config, std::uint64_t stream = 0);
[[nodiscard]] InferenceTrace run_inference(const NetworkSpec& spec, std::span<const float> input,
                                           const SimConfig& config);

struct EvaluationResult {
    double dt = 0.0;
    std::size_t image_count = 0;
    std::size_t neuron_count = 0;
    double error_rate = 0.0;
    // Index k = error using decisions after k steps (k = 0..max_steps).
    std::vector<double> error_vs_step;
    // (k * dt, error_vs_step[k])
    std::vector<std::pair<double, double>> error_vs_time;
    // Mean network spikes per image after k steps.
    std::vector<double> mean_spikes_vs_step;
    std::vector<std::uint16_t> predictions;
};

// threads = 0 uses the hardware concurrency. Results are independent of
// the thread count.
[[nodiscard]] EvaluationResult evaluate(const NetworkSpec& spec, const Dataset& dataset,
                                        const SimConfig& config, unsigned threads = 1);

struct LatencySweepOptions {
    double target_error = 0.02;
    std::size_t rate_periods = 300;
    std::size_t steps_per_period = 10;
    // Fixed time added to every time-to-target (input settling, readout);
    // does not scale with the oscillator frequency.
    double latency_floor_s = 0.0;
    SimConfig base{};
    unsigned threads = 1;
};

struct LatencyPoint {
    double rate_hz = 0.0;
    double dt = 0.0;
    std::size_t max_steps = 0;
    double final_error = 0.0;
    std::optional<std::size_t> steps_to_target;
    std::optional<double> latency_s;
    // Mean spikes per neuron up to the target step (or the whole run).
    double spikes_per_neuron = 0.0;
    std::vector<double> error_vs_step;

    [[nodiscard]] bool reached() const { return latency_s.has_value(); }
};

// One time-domain evaluation per maximum frequency (ascending).
[[nodiscard]] std::vector<LatencyPoint> latency_sweep(const NetworkSpec& spec, const Dataset& dataset,
                                                      std::span<const double> rates_hz,
                                                      const LatencySweepOptions& options);

// Earliest k with errors[k] <= target.
[[nodiscard]] std::optional<std::size_t> first_step_at_or_below(std::span<const double> errors,
                                                                double target);

// Worker count: the request (0 = hardware), capped by SNN_SIM_THREADS.
[[nodiscard]] unsigned resolve_threads(unsigned requested);

}  // namespace snn_sim
