#include "snn_sim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>

#include "snn_sim/errors.hpp"

namespace snn_sim {

namespace {

// Uniform kernel signature over the three models.
inline bool kernel(IdealState& s, double drive, double, const IdealIFParams& p) {
    return advance(s, drive, p);
}
inline bool kernel(VoltageState& s, double drive, double dt, const VoltageDomainParams& p) {
    return advance(s, drive, dt, p);
}
inline bool kernel(TimeDomainState& s, double drive, double dt, const TimeDomainParams& p) {
    return advance(s, drive, dt, p);
}

template <typename Params>
struct StateFor;
template <>
struct StateFor<IdealIFParams> {
    using type = IdealState;
};
template <>
struct StateFor<VoltageDomainParams> {
    using type = VoltageState;
};
template <>
struct StateFor<TimeDomainParams> {
    using type = TimeDomainState;
};

std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

template <typename Counts>
std::uint16_t first_argmax(const Counts& values) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < values.size(); ++c) {
        if (values[c] > values[best]) {
            best = c;
        }
    }
    return static_cast<std::uint16_t>(best);
}

void add_fan_out(const FanOut& fan, std::span<const std::uint32_t> sources, double scale,
                 std::vector<double>& acc) {
    for (std::uint32_t i : sources) {
        for (std::size_t k = fan.offsets[i]; k < fan.offsets[i + 1]; ++k) {
            acc[fan.targets[k]] += scale * fan.weights[k];
        }
    }
}

template <typename Params>
InferenceTrace simulate(const CompiledNetwork& net, std::span<const float> input,
                        const SimConfig& cfg, const Params& params, std::uint64_t stream) {
    using State = typename StateFor<Params>::type;
    const std::size_t n_layers = net.layer_count();
    const std::size_t pulse = cfg.resolved_pulse_steps();
    const double rate_scale = 1.0 / static_cast<double>(pulse);
    const std::size_t steps = cfg.max_steps;
    const std::size_t classes = net.spec().class_count;

    std::vector<std::vector<State>> states(n_layers);
    std::vector<std::vector<double>> const_drive(n_layers);
    std::vector<std::vector<double>> pulse_drive(n_layers);
    // Spikes that arrived at layer l during the last `pulse` steps.
    std::vector<std::vector<std::vector<std::uint32_t>>> in_flight(
        n_layers, std::vector<std::vector<std::uint32_t>>(pulse));
    std::vector<std::vector<std::uint32_t>> spikes(n_layers);

    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& layer = net.layer(l);
        const std::size_t n = layer.out_shape.size();
        states[l].assign(n, State{});
        pulse_drive[l].assign(n, 0.0);
        const_drive[l].resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const_drive[l][j] = layer.bias[j] * rate_scale;
        }
    }

    const auto& first = net.layer(0);
    std::vector<double> input_rate(input.begin(), input.end());
    if (cfg.input_encoding == InputEncoding::ConstantCurrent) {
        for (std::size_t i = 0; i < input_rate.size(); ++i) {
            const double x = input_rate[i] * rate_scale;
            if (x == 0.0) {
                continue;
            }
            for (std::size_t k = first.fan_out.offsets[i]; k < first.fan_out.offsets[i + 1]; ++k) {
                const_drive[0][first.fan_out.targets[k]] += x * first.fan_out.weights[k];
            }
        }
    }
    std::mt19937_64 rng(mix(cfg.seed ^ mix(stream)));
    std::vector<std::uint32_t> input_spikes;

    InferenceTrace trace;
    trace.class_count = classes;
    trace.steps = steps;
    trace.output_counts.assign((steps + 1) * classes, 0);
    trace.output_potential.assign(classes, 0.0);
    trace.predicted.assign(steps + 1, 0);
    trace.layer_spikes.assign(n_layers, 0);
    trace.cumulative_spikes.assign(steps + 1, 0);

    std::vector<std::uint32_t> counts(classes, 0);
    std::uint64_t total_spikes = 0;

    for (std::size_t t = 1; t <= steps; ++t) {
        input_spikes.clear();
        if (cfg.input_encoding == InputEncoding::PoissonRate) {
            for (std::size_t i = 0; i < input_rate.size(); ++i) {
                const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                if (u < input_rate[i] * rate_scale) {
                    input_spikes.push_back(static_cast<std::uint32_t>(i));
                }
            }
        }

        const std::size_t slot = t % pulse;
        for (std::size_t l = 0; l < n_layers; ++l) {
            const auto& layer = net.layer(l);
            const auto& arriving = l == 0 ? input_spikes : spikes[l - 1];
            auto& drive = pulse_drive[l];
            auto& expired = in_flight[l][slot];
            if (pulse == 1) {
                std::fill(drive.begin(), drive.end(), 0.0);
            } else if (!expired.empty()) {
                add_fan_out(layer.fan_out, expired, -rate_scale, drive);
            }
            expired.assign(arriving.begin(), arriving.end());
            add_fan_out(layer.fan_out, arriving, rate_scale, drive);

            auto& out = spikes[l];
            out.clear();
            auto& st = states[l];
            const auto& cd = const_drive[l];
            const bool output_layer = l + 1 == n_layers;
            for (std::size_t j = 0; j < st.size(); ++j) {
                const double d = cd[j] + drive[j];
                if (kernel(st[j], d, cfg.dt, params)) {
                    out.push_back(static_cast<std::uint32_t>(j));
                }
                if (output_layer) {
                    trace.output_potential[j] += d;
                }
            }
            trace.layer_spikes[l] += out.size();
            total_spikes += out.size();
        }

        for (std::uint32_t c : spikes[n_layers - 1]) {
            ++counts[c];
        }
        std::copy(counts.begin(), counts.end(), trace.output_counts.begin() +
                                                    static_cast<std::ptrdiff_t>(t * classes));
        trace.predicted[t] = cfg.decision_rule == DecisionRule::SpikeCountArgmax
                                 ? first_argmax(counts)
                                 : first_argmax(trace.output_potential);
        trace.cumulative_spikes[t] = total_spikes;
    }

    std::size_t stable = steps;
    while (stable > 0 && trace.predicted[stable - 1] == trace.predicted[steps]) {
        --stable;
    }
    trace.steps_to_stable_decision = stable;
    return trace;
}

}  // namespace

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigurationError("dt must be finite and > 0");
    }
    if (max_steps < 1) {
        throw ConfigurationError("max_steps must be >= 1");
    }
    std::visit([](const auto& p) { p.validate(); }, neuron_model);
}

std::size_t SimConfig::resolved_pulse_steps() const {
    if (pulse_steps > 0) {
        return pulse_steps;
    }
    if (const auto* td = std::get_if<TimeDomainParams>(&neuron_model)) {
        const double rate = max_firing_rate(*td);
        if (rate > 0.0 && std::isfinite(rate)) {
            return static_cast<std::size_t>(std::max(1.0, std::round(1.0 / (rate * dt))));
        }
    }
    return 1;
}

SimConfig time_domain_config(double f_max_hz, std::size_t rate_periods, std::size_t steps_per_period,
                             const SimConfig& base) {
    if (!(f_max_hz > 0.0) || steps_per_period == 0) {
        throw ConfigurationError("time-domain config needs f_max > 0 and steps_per_period >= 1");
    }
    SimConfig cfg = base;
    TimeDomainParams td;
    if (const auto* b = std::get_if<TimeDomainParams>(&base.neuron_model)) {
        td = *b;
    }
    td.f_max = f_max_hz;
    td.f_ref = 0.5 * f_max_hz;
    td.f_min = 0.0;
    cfg.neuron_model = td;
    cfg.dt = 1.0 / (static_cast<double>(steps_per_period) * f_max_hz);
    cfg.pulse_steps = 0;
    cfg.max_steps = rate_periods * cfg.resolved_pulse_steps();
    return cfg;
}

CompiledNetwork::CompiledNetwork(const NetworkSpec& spec) : spec_(spec) {
    spec_.validate();
    if (!spec_.normalized) {
        throw ConfigurationError("network is not normalized; run conversion first");
    }
    for (const auto& l : spec_.layers) {
        if (l.threshold != 1.0) {
            throw ConfigurationError("layer '" + l.name + "' threshold is not 1 after conversion");
        }
    }
    Shape3 shape = spec_.input_shape3();
    for (const auto& layer : spec_.layers) {
        LayerData d;
        d.in_shape = shape;
        d.out_shape = layer.output_shape(shape);
        d.fan_out = build_fan_out(layer, shape);
        d.bias.assign(d.out_shape.size(), 0.0);
        if (layer.has_weights()) {
            const std::size_t plane = d.out_shape.height * d.out_shape.width;
            for (std::size_t j = 0; j < d.bias.size(); ++j) {
                d.bias[j] = static_cast<double>(layer.bias[j / plane]);
            }
        }
        neuron_count_ += d.out_shape.size();
        shape = d.out_shape;
        fan_out_.push_back(std::move(d));
    }
}

InferenceTrace run_inference(const CompiledNetwork& net, std::span<const float> input,
                             const SimConfig& config, std::uint64_t stream) {
    config.validate();
    if (input.size() != net.spec().input_size()) {
        throw ShapeMismatchError("input has " + std::to_string(input.size()) +
                                 " values, network expects " + std::to_string(net.spec().input_size()));
    }
    return std::visit([&](const auto& p) { return simulate(net, input, config, p, stream); },
                      config.neuron_model);
}

InferenceTrace run_inference(const NetworkSpec& spec, std::span<const float> input,
                             const SimConfig& config) {
    return run_inference(CompiledNetwork(spec), input, config, 0);
}

unsigned resolve_threads(unsigned requested) {
    unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    if (const char* cap = std::getenv("SNN_SIM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(cap, &end, 10);
        if (end != cap && v > 0) {
            n = std::min(n, static_cast<unsigned>(v));
        }
    }
    return n;
}

EvaluationResult evaluate(const NetworkSpec& spec, const Dataset& dataset, const SimConfig& config,
                          unsigned threads) {
    if (dataset.size() == 0) {
        throw DataError("dataset is empty");
    }
    if (dataset.labels.size() != dataset.size()) {
        throw DataError("evaluation needs one label per image");
    }
    config.validate();
    const CompiledNetwork net(spec);
    if (dataset.image_size() != spec.input_size()) {
        throw ShapeMismatchError("dataset images have " + std::to_string(dataset.image_size()) +
                                 " pixels, network expects " + std::to_string(spec.input_size()));
    }
    const std::size_t steps = config.max_steps;
    const std::size_t n = dataset.size();

    EvaluationResult result;
    result.dt = config.dt;
    result.image_count = n;
    result.neuron_count = net.neuron_count();
    result.predictions.assign(n, 0);

    const unsigned workers = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(n));
    std::vector<std::vector<std::uint64_t>> errors(workers, std::vector<std::uint64_t>(steps + 1, 0));
    std::vector<std::vector<std::uint64_t>> spikes(workers, std::vector<std::uint64_t>(steps + 1, 0));
    std::atomic<std::size_t> next{0};

    auto work = [&](unsigned w) {
        for (std::size_t i = next++; i < n; i = next++) {
            const InferenceTrace trace = run_inference(net, dataset.image(i), config, i);
            const std::uint8_t label = dataset.labels[i];
            for (std::size_t k = 0; k <= steps; ++k) {
                errors[w][k] += trace.predicted[k] != label ? 1 : 0;
                spikes[w][k] += trace.cumulative_spikes[k];
            }
            result.predictions[i] = trace.predicted_class();
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work, w);
        }
    }

    result.error_vs_step.assign(steps + 1, 0.0);
    result.mean_spikes_vs_step.assign(steps + 1, 0.0);
    result.error_vs_time.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        std::uint64_t e = 0;
        std::uint64_t s = 0;
        for (unsigned w = 0; w < workers; ++w) {
            e += errors[w][k];
            s += spikes[w][k];
        }
        result.error_vs_step[k] = static_cast<double>(e) / static_cast<double>(n);
        result.mean_spikes_vs_step[k] = static_cast<double>(s) / static_cast<double>(n);
        result.error_vs_time[k] = {static_cast<double>(k) * config.dt, result.error_vs_step[k]};
    }
    result.error_rate = result.error_vs_step[steps];
    return result;
}

std::optional<std::size_t> first_step_at_or_below(std::span<const double> errors, double target) {
    for (std::size_t k = 0; k < errors.size(); ++k) {
        if (errors[k] <= target) {
            return k;
        }
    }
    return std::nullopt;
}

std::vector<LatencyPoint> latency_sweep(const NetworkSpec& spec, const Dataset& dataset,
                                        std::span<const double> rates_hz,
                                        const LatencySweepOptions& options) {
    if (!std::is_sorted(rates_hz.begin(), rates_hz.end())) {
        throw ConfigurationError("firing rates must be sorted ascending");
    }
    std::vector<LatencyPoint> points;
    for (double rate : rates_hz) {
        const SimConfig cfg =
            time_domain_config(rate, options.rate_periods, options.steps_per_period, options.base);
        EvaluationResult r = evaluate(spec, dataset, cfg, options.threads);

        LatencyPoint p;
        p.rate_hz = rate;
        p.dt = cfg.dt;
        p.max_steps = cfg.max_steps;
        p.final_error = r.error_rate;
        p.steps_to_target = first_step_at_or_below(r.error_vs_step, options.target_error);
        const std::size_t upto = p.steps_to_target.value_or(cfg.max_steps);
        if (p.steps_to_target) {
            p.latency_s = static_cast<double>(*p.steps_to_target) * cfg.dt + options.latency_floor_s;
        }
        p.spikes_per_neuron =
            r.mean_spikes_vs_step[upto] / static_cast<double>(std::max<std::size_t>(1, r.neuron_count));
        p.error_vs_step = std::move(r.error_vs_step);
        points.push_back(std::move(p));
    }
    return points;
}

}  // namespace snn_sim
