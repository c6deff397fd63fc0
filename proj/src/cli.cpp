#include "snn_sim/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "snn_sim/conversion.hpp"
#include "snn_sim/dataset.hpp"
#include "snn_sim/energy.hpp"
#include "snn_sim/engine.hpp"
#include "snn_sim/errors.hpp"
#include "snn_sim/weights_io.hpp"

namespace snn_sim::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) { return fmt::format("{}", v); }

std::vector<std::uint8_t> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
}

// Parameters are stored as option name -> string or list of strings, so a
// manifest can be turned back into a command line.
class RunManifest {
public:
    explicit RunManifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

    void param(const std::string& name, const std::string& value) { params_[name] = value; }
    void param(const std::string& name, double value) { params_[name] = num(value); }
    void param(const std::string& name, std::size_t value) { params_[name] = std::to_string(value); }
    void param(const std::string& name, const std::vector<std::string>& values) {
        params_[name] = values;
    }
    void param(const std::string& name, const std::vector<double>& values) {
        json a = json::array();
        for (double v : values) {
            a.push_back(num(v));
        }
        params_[name] = a;
    }

    void input(const fs::path& path) {
        const auto bytes = slurp(path);
        inputs_.push_back({{"path", path.string()}, {"bytes", bytes.size()}, {"crc32", crc32_of(bytes)}});
    }
    void output(const fs::path& path) { outputs_.push_back(path.string()); }
    json& results() { return results_; }

    void write(const fs::path& path) const {
        json m;
        m["tool"] = "snn_sim";
        m["version"] = kToolVersion;
        m["subcommand"] = subcommand_;
        m["parameters"] = params_;
        m["seed"] = params_.contains("seed") ? params_["seed"] : json(nullptr);
        m["inputs"] = inputs_;
        m["outputs"] = outputs_;
        m["results"] = results_;
        write_text(path, m.dump(2) + "\n");
    }

private:
    std::string subcommand_;
    json params_ = json::object();
    json inputs_ = json::array();
    json outputs_ = json::array();
    json results_ = json::object();
};

fs::path manifest_path_for(const fs::path& output) {
    fs::path p = output;
    return p.replace_extension(".run.json");
}

struct DataOptions {
    std::string images;
    std::string labels;
    std::size_t count = 0;

    void add_to(CLI::App* app, bool labels_required) {
        app->add_option("--images", images, "IDX image file (plain or .gz)")->required();
        auto* l = app->add_option("--labels", labels, "IDX label file (plain or .gz)");
        if (labels_required) {
            l->required();
        }
        app->add_option("--count", count, "Use only the first N samples (0 = all)")
            ->capture_default_str();
    }

    Dataset load(RunManifest& run) const {
        run.param("images", images);
        run.input(images);
        Dataset d;
        if (labels.empty()) {
            d = read_idx_images(images);
        } else {
            run.param("labels", labels);
            run.input(labels);
            d = read_idx_dataset(images, labels);
        }
        run.param("count", count);
        return d.head(count);
    }
};

struct SimOptions {
    std::size_t steps = 300;
    std::string encoding = "constant";
    std::string decision = "spikes";
    std::uint64_t seed = 0;

    void add_to(CLI::App* app) {
        app->add_option("--steps", steps,
                        "Simulation length in maximum-rate periods (one step each for the ideal and "
                        "voltage-domain models)")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app->add_option("--encoding", encoding, "Input encoding")
            ->capture_default_str()
            ->check(CLI::IsMember({"constant", "poisson"}));
        app->add_option("--decision", decision, "Output decision rule")
            ->capture_default_str()
            ->check(CLI::IsMember({"spikes", "potential"}));
        app->add_option("--seed", seed, "Seed for Poisson encoding")->capture_default_str();
    }

    SimConfig base(RunManifest& run) const {
        run.param("steps", steps);
        run.param("encoding", encoding);
        run.param("decision", decision);
        run.param("seed", std::to_string(seed));
        SimConfig cfg;
        cfg.max_steps = steps;
        cfg.input_encoding =
            encoding == "poisson" ? InputEncoding::PoissonRate : InputEncoding::ConstantCurrent;
        cfg.decision_rule =
            decision == "potential" ? DecisionRule::PotentialArgmax : DecisionRule::SpikeCountArgmax;
        cfg.seed = seed;
        return cfg;
    }
};

struct TimeDomainOptions {
    std::size_t steps_per_period = 10;
    int counter_bits = 16;
    int cdc_delay = 0;

    void add_to(CLI::App* app) {
        app->add_option("--steps-per-period", steps_per_period,
                        "Integration steps per oscillator period at f_max")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app->add_option("--counter-bits", counter_bits, "Edge counter width")
            ->capture_default_str()
            ->check(CLI::Range(2, 64));
        app->add_option("--cdc-delay", cdc_delay, "Synchronizer delay in steps")
            ->capture_default_str()
            ->check(CLI::Range(0, kMaxCdcDelaySteps));
    }

    TimeDomainParams params(RunManifest& run) const {
        run.param("steps-per-period", steps_per_period);
        run.param("counter-bits", std::to_string(counter_bits));
        run.param("cdc-delay", std::to_string(cdc_delay));
        TimeDomainParams td;
        td.counter_bits = counter_bits;
        td.cdc_delay_steps = cdc_delay;
        return td;
    }
};

// Loads a bundle for simulation, normalizing it with its stored
// activation statistics if it has not been converted yet.
NetworkSpec load_for_simulation(const std::string& path, RunManifest& run) {
    run.param("bundle", path);
    run.input(path);
    WeightsBundle b = load_bundle(path);
    if (b.spec.normalized) {
        run.results()["normalized_on_load"] = false;
        return b.spec;
    }
    if (!b.stats) {
        throw ConfigurationError("bundle '" + path +
                                 "' is not normalized and has no activation stats; run convert first");
    }
    run.results()["normalized_on_load"] = true;
    return normalize(b.spec, *b.stats);
}

double ann_error_rate(const NetworkSpec& spec, const Dataset& data) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        wrong += argmax(ann_forward(spec, data.image(i))) != data.labels[i] ? 1 : 0;
    }
    return static_cast<double>(wrong) / static_cast<double>(data.size());
}

// ---- convert ----

struct ConvertCommand {
    std::string weights;
    std::string calibration;
    std::size_t calibration_count = 0;
    double percentile = kDefaultPercentile;
    std::string output;

    void add_to(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* sub = app.add_subcommand("convert", "Normalize a trained bundle for spiking inference");
        sub->add_option("--weights", weights, "Input bundle manifest (.json)")->required();
        sub->add_option("--calibration-images", calibration, "IDX images used for activation statistics")
            ->required();
        sub->add_option("--calibration-count", calibration_count, "Use only the first N images (0 = all)")
            ->capture_default_str();
        sub->add_option("--percentile", percentile, "Activation percentile in (0, 1]")
            ->capture_default_str()
            ->check(CLI::Range(1e-9, 1.0));
        sub->add_option("--output", output, "Output bundle manifest (.json); the blob goes next to it")
            ->required();
        sub->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        RunManifest run("convert");
        run.param("weights", weights);
        run.input(weights);
        run.param("calibration-images", calibration);
        run.input(calibration);
        run.param("calibration-count", calibration_count);
        run.param("percentile", percentile);
        run.param("output", output);

        const WeightsBundle in = load_bundle(weights);
        const Dataset calib = read_idx_images(calibration).head(calibration_count);
        const auto views = calib.image_views();
        WeightsBundle result;
        result.stats = collect_stats(in.spec, views, percentile);
        result.spec = normalize(in.spec, *result.stats);
        result.datasets = in.datasets;
        result.datasets["calibration_images"] = calibration;

        const fs::path manifest = output;
        const fs::path blob = blob_path_for(manifest);
        if (manifest.has_parent_path()) {
            fs::create_directories(manifest.parent_path());
        }
        save_bundle(result, manifest, blob);
        run.output(manifest);
        run.output(blob);
        run.results()["scale_factors"] = result.stats->values;
        run.results()["calibration_images"] = calib.size();
        run.write(manifest_path_for(manifest));

        out << fmt::format("converted {} -> {} ({} calibration images, percentile {})\n", weights,
                           output, calib.size(), percentile);
        for (std::size_t i = 0; i < result.stats->values.size(); ++i) {
            out << fmt::format("  layer {} scale {}\n", i, result.stats->values[i]);
        }
        return kExitOk;
    }
};

// ---- evaluate ----

struct EvaluateCommand {
    std::string bundle;
    DataOptions data;
    SimOptions sim;
    TimeDomainOptions td;
    std::string model = "ideal";
    std::string reset = "subtract";
    double dt = 1.0;
    double vth = 0.5;
    double vdd = 1.0;
    double lambda = 2.0;
    std::optional<double> gain;
    double leak = 0.0;
    double f_max = 100e6;
    std::string output;
    unsigned threads = 0;

    void add_to(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* sub = app.add_subcommand("evaluate", "Error rate versus simulation time for one neuron model");
        sub->add_option("--bundle", bundle, "Bundle manifest (.json)")->required();
        data.add_to(sub, true);
        sim.add_to(sub);
        sub->add_option("--model", model, "Neuron model")
            ->capture_default_str()
            ->check(CLI::IsMember({"ideal", "voltage", "time"}));
        sub->add_option("--reset", reset, "Ideal-neuron reset")
            ->capture_default_str()
            ->check(CLI::IsMember({"subtract", "zero"}));
        sub->add_option("--dt", dt, "Step length in seconds (ideal and voltage-domain)")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        sub->add_option("--vth", vth, "Voltage-domain threshold voltage")->capture_default_str();
        sub->add_option("--vdd", vdd, "Voltage-domain supply voltage")->capture_default_str();
        sub->add_option("--lambda", lambda, "Channel-length modulation coefficient (1/V)")
            ->capture_default_str();
        sub->add_option("--gain", gain, "Voltage-domain charging gain at 0 V (default: --vth)");
        sub->add_option("--leak", leak, "Voltage-domain leak rate (1/s)")->capture_default_str();
        sub->add_option("--f-max", f_max, "Time-domain maximum oscillator frequency (Hz)")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        td.add_to(sub);
        sub->add_option("--output", output, "Output CSV (step,time_s,error_rate)")->required();
        sub->add_option("--threads", threads, "Worker threads (0 = all cores; capped by SNN_SIM_THREADS)");
        sub->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    SimConfig config(RunManifest& run) const {
        SimConfig cfg = sim.base(run);
        run.param("model", model);
        if (model == "ideal") {
            run.param("reset", reset);
            run.param("dt", dt);
            IdealIFParams p;
            p.reset_mode = reset == "zero" ? ResetMode::ResetToZero : ResetMode::SubtractThreshold;
            cfg.neuron_model = p;
            cfg.dt = dt;
        } else if (model == "voltage") {
            VoltageDomainParams p;
            p.threshold_voltage = vth;
            p.supply_voltage = vdd;
            p.lambda_clm = lambda;
            p.gain = gain.value_or(vth);
            p.leak_rate = leak;
            run.param("dt", dt);
            run.param("vth", vth);
            run.param("vdd", vdd);
            run.param("lambda", lambda);
            run.param("gain", p.gain);
            run.param("leak", leak);
            cfg.neuron_model = p;
            cfg.dt = dt;
        } else {
            cfg.neuron_model = td.params(run);
            run.param("f-max", f_max);
            cfg = time_domain_config(f_max, sim.steps, td.steps_per_period, cfg);
        }
        cfg.validate();
        return cfg;
    }

    int run(std::ostream& out) const {
        RunManifest run("evaluate");
        const NetworkSpec spec = load_for_simulation(bundle, run);
        const Dataset test = data.load(run);
        const SimConfig cfg = config(run);
        run.param("output", output);

        const EvaluationResult r = evaluate(spec, test, cfg, threads);
        const double ann = ann_error_rate(spec, test);

        std::string csv = "step,time_s,error_rate\n";
        for (std::size_t k = 0; k < r.error_vs_step.size(); ++k) {
            csv += fmt::format("{},{},{}\n", k, r.error_vs_time[k].first, r.error_vs_step[k]);
        }
        write_text(output, csv);
        run.output(output);
        run.results()["final_error_rate"] = r.error_rate;
        run.results()["ann_error_rate"] = ann;
        run.results()["images"] = r.image_count;
        run.results()["simulation_steps"] = cfg.max_steps;
        run.results()["dt_s"] = cfg.dt;
        run.write(manifest_path_for(output));

        out << fmt::format("model={} images={} steps={} dt={} final_error_rate={} ann_error_rate={}\n",
                           model, r.image_count, cfg.max_steps, cfg.dt, r.error_rate, ann);
        return kExitOk;
    }
};

// ---- sweep ----

struct Anchor {
    double frequency_hz = 0.0;
    double energy_j = 0.0;
};

Anchor parse_anchor(const std::string& s) {
    const auto colon = s.find(':');
    try {
        if (colon != std::string::npos) {
            std::size_t used_f = 0;
            std::size_t used_e = 0;
            const std::string f = s.substr(0, colon);
            const std::string e = s.substr(colon + 1);
            Anchor a{std::stod(f, &used_f), std::stod(e, &used_e)};
            if (used_f == f.size() && used_e == e.size()) {
                return a;
            }
        }
    } catch (const std::exception&) {
    }
    throw ConfigurationError("anchor '" + s + "' is not FREQUENCY_HZ:ENERGY_J");
}

struct SweepCommand {
    std::string bundle;
    DataOptions data;
    SimOptions sim;
    TimeDomainOptions td;
    std::vector<double> rates{3e6, 6e6, 15e6, 30e6, 60e6, 100e6};
    std::optional<double> target_error;
    double target_margin = 0.02;
    std::optional<double> p_static;
    std::optional<double> e_edge;
    double e_spike = 0.0;
    double reference_share = 1.0;
    double latency_floor = 5e-6;
    std::vector<std::string> anchors{"3e6:0.646e-12", "15e6:0.488e-12"};
    std::string out_dir = ".";
    unsigned threads = 0;

    void add_to(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* sub = app.add_subcommand(
            "sweep", "Latency to a target error and energy per inference across oscillator frequencies");
        sub->add_option("--bundle", bundle, "Bundle manifest (.json)")->required();
        data.add_to(sub, true);
        sim.add_to(sub);
        td.add_to(sub);
        sub->add_option("--rates", rates, "Maximum oscillator frequencies in Hz, ascending")
            ->delimiter(',')
            ->capture_default_str();
        sub->add_option("--target-error", target_error,
                        "Absolute target error rate (default: ideal-model final error + --target-margin)");
        sub->add_option("--target-margin", target_margin, "Margin over the ideal-model final error")
            ->capture_default_str();
        sub->add_option("--p-static", p_static, "Static power per neuron in W (skips the anchor fit)");
        sub->add_option("--e-edge", e_edge, "Energy per oscillator edge in J (skips the anchor fit)");
        sub->add_option("--e-spike", e_spike, "Energy per spike in J")->capture_default_str();
        sub->add_option("--reference-share", reference_share,
                        "Reference oscillator share per neuron (1 = dedicated, 1/N = shared by N)")
            ->capture_default_str();
        sub->add_option("--latency-floor", latency_floor,
                        "Frequency-independent latency added to every time-to-target (s)")
            ->capture_default_str();
        sub->add_option("--anchor", anchors,
                        "Two FREQUENCY_HZ:ENERGY_J points the energy model is fit to")
            ->capture_default_str()
            ->expected(2);
        sub->add_option("--out-dir", out_dir, "Directory for latency.csv, energy.csv, summary.json")
            ->capture_default_str();
        sub->add_option("--threads", threads, "Worker threads (0 = all cores; capped by SNN_SIM_THREADS)");
        sub->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        RunManifest run("sweep");
        const NetworkSpec spec = load_for_simulation(bundle, run);
        const Dataset test = data.load(run);
        SimConfig base = sim.base(run);
        base.neuron_model = td.params(run);
        run.param("rates", rates);
        run.param("target-margin", target_margin);
        run.param("e-spike", e_spike);
        run.param("reference-share", reference_share);
        run.param("latency-floor", latency_floor);
        run.param("out-dir", out_dir);
        if (p_static.has_value() != e_edge.has_value()) {
            throw ConfigurationError("--p-static and --e-edge must be given together");
        }

        double target = 0.0;
        if (target_error) {
            run.param("target-error", *target_error);
            target = *target_error;
        } else {
            SimConfig ideal = base;
            ideal.neuron_model = IdealIFParams{};
            ideal.dt = 1.0;
            const double ideal_final = evaluate(spec, test, ideal, threads).error_rate;
            run.results()["ideal_final_error_rate"] = ideal_final;
            target = ideal_final + target_margin;
        }
        run.results()["target_error"] = target;

        LatencySweepOptions opts;
        opts.target_error = target;
        opts.rate_periods = sim.steps;
        opts.steps_per_period = td.steps_per_period;
        opts.latency_floor_s = latency_floor;
        opts.base = base;
        opts.threads = threads;
        const auto points = latency_sweep(spec, test, rates, opts);

        std::vector<FrequencyPoint> freq;
        for (const auto& p : points) {
            freq.push_back({p.rate_hz, p.latency_s, p.spikes_per_neuron});
        }

        EnergyModelParams energy;
        energy.e_spike = e_spike;
        energy.reference_share = reference_share;
        json anchor_check = json::array();
        if (p_static) {
            run.param("p-static", *p_static);
            run.param("e-edge", *e_edge);
            energy.p_static = *p_static;
            energy.e_edge = *e_edge;
        } else {
            run.param("anchor", anchors);
            if (anchors.size() != 2) {
                throw ConfigurationError("exactly two --anchor values are needed");
            }
            std::vector<EnergyAnchor> fit_points;
            for (const auto& text : anchors) {
                const Anchor a = parse_anchor(text);
                fit_points.push_back({anchor_point(a.frequency_hz, freq, spec, test, opts), a.energy_j});
            }
            energy = fit_two_anchors(fit_points[0], fit_points[1], energy);
            for (const auto& fp : fit_points) {
                const double model = energy_per_neuron(fp.point.frequency_hz, *fp.point.latency_s,
                                                       fp.point.spikes_per_neuron, energy);
                anchor_check.push_back({{"frequency_hz", fp.point.frequency_hz},
                                        {"target_j", fp.energy_j},
                                        {"model_j", model},
                                        {"relative_error", std::abs(model - fp.energy_j) / fp.energy_j}});
            }
        }

        const EnergyReport report = energy_sweep(freq, energy, spec.neuron_count());

        const fs::path dir = out_dir;
        fs::create_directories(dir);
        std::string latency_csv =
            "rate_hz,dt_s,max_steps,steps_to_target,latency_s,final_error,spikes_per_neuron,reached_target\n";
        json unreached = json::array();
        for (const auto& p : points) {
            latency_csv += fmt::format("{},{},{},{},{},{},{},{}\n", p.rate_hz, p.dt, p.max_steps,
                                       p.steps_to_target ? std::to_string(*p.steps_to_target) : "",
                                       p.latency_s ? num(*p.latency_s) : "", p.final_error,
                                       p.spikes_per_neuron, p.reached() ? 1 : 0);
            if (!p.reached()) {
                unreached.push_back(p.rate_hz);
            }
        }
        write_text(dir / "latency.csv", latency_csv);
        std::ostringstream energy_csv;
        write_energy_csv(energy_csv, report);
        write_text(dir / "energy.csv", energy_csv.str());

        json summary;
        summary["target_error"] = target;
        summary["neuron_count"] = report.neuron_count;
        summary["unreached_rates_hz"] = unreached;
        summary["energy_model"] = {{"p_static_w", energy.p_static},
                                   {"e_edge_j", energy.e_edge},
                                   {"e_spike_j", energy.e_spike},
                                   {"reference_share", energy.reference_share},
                                   {"latency_floor_s", latency_floor}};
        summary["anchor_check"] = anchor_check;
        if (report.argmin) {
            const EnergyRow& best = report.rows[*report.argmin];
            summary["argmin_frequency_hz"] = best.frequency_hz;
            summary["energy_per_neuron_j"] = *best.energy_per_neuron_j;
            summary["energy_per_inference_j"] = *best.energy_per_inference_j;
        } else {
            summary["argmin_frequency_hz"] = nullptr;
        }
        write_text(dir / "summary.json", summary.dump(2) + "\n");

        run.output(dir / "latency.csv");
        run.output(dir / "energy.csv");
        run.output(dir / "summary.json");
        run.results()["summary"] = summary;
        run.write(dir / "run_manifest.json");

        out << fmt::format("target_error={} neuron_count={}\n", target, report.neuron_count);
        for (const auto& row : report.rows) {
            out << fmt::format("  f={:g} Hz latency={} energy/neuron={}{}\n", row.frequency_hz,
                               row.latency_s ? num(*row.latency_s) : "-",
                               row.energy_per_neuron_j ? num(*row.energy_per_neuron_j) : "-",
                               row.reached_target() ? "" : " (target not reached)");
        }
        if (report.argmin) {
            const EnergyRow& best = report.rows[*report.argmin];
            out << fmt::format("argmin f={:g} Hz energy/neuron={} energy/inference={}\n",
                               best.frequency_hz, *best.energy_per_neuron_j, *best.energy_per_inference_j);
        } else {
            out << "no frequency reached the target\n";
        }
        return unreached.empty() ? kExitOk : kExitTargetUnreached;
    }

    // Sweep point for an anchor frequency, simulated separately if it is not
    // one of the swept rates.
    static FrequencyPoint anchor_point(double f, const std::vector<FrequencyPoint>& swept,
                                       const NetworkSpec& spec, const Dataset& test,
                                       const LatencySweepOptions& opts) {
        for (const auto& p : swept) {
            if (std::abs(p.frequency_hz - f) <= 1e-9 * f) {
                return p;
            }
        }
        const double rate[] = {f};
        const auto extra = latency_sweep(spec, test, rate, opts);
        return {f, extra[0].latency_s, extra[0].spikes_per_neuron};
    }
};

// ---- info ----

struct InfoCommand {
    std::string bundle;
    std::string images;
    std::string labels;
    std::string output;

    void add_to(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* sub = app.add_subcommand("info", "Describe a bundle and/or a dataset");
        sub->add_option("--bundle", bundle, "Bundle manifest (.json)");
        sub->add_option("--images", images, "IDX image file");
        sub->add_option("--labels", labels, "IDX label file");
        sub->add_option("--output", output, "Also write the description as JSON");
        sub->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        RunManifest run("info");
        json info;
        info["version"] = kToolVersion;
        out << "snn_sim " << kToolVersion << "\n";
        if (!bundle.empty()) {
            run.param("bundle", bundle);
            run.input(bundle);
            const WeightsBundle b = load_bundle(bundle);
            const NetworkSpec& spec = b.spec;
            const auto shapes = spec.layer_shapes();
            out << fmt::format("bundle {}: input {} classes {} neurons {} normalized {}\n", bundle,
                               fmt::join(spec.input_shape, "x"), spec.class_count, spec.neuron_count(),
                               spec.normalized);
            json layers = json::array();
            for (std::size_t i = 0; i < spec.layers.size(); ++i) {
                const Layer& l = spec.layers[i];
                const Shape3 s = shapes[i];
                out << fmt::format("  {:<8} {:<10} {:<8} out {}x{}x{} params {} threshold {}\n",
                                   to_string(l.kind), l.name, l.activation, s.channels, s.height,
                                   s.width, l.weights.size() + l.bias.size(), l.threshold);
                layers.push_back({{"kind", to_string(l.kind)},
                                  {"name", l.name},
                                  {"activation", l.activation},
                                  {"output_shape", {s.channels, s.height, s.width}},
                                  {"parameters", l.weights.size() + l.bias.size()},
                                  {"threshold", l.threshold}});
            }
            info["bundle"] = {{"path", bundle},
                              {"input_shape", spec.input_shape},
                              {"class_count", spec.class_count},
                              {"neuron_count", spec.neuron_count()},
                              {"normalized", spec.normalized},
                              {"layers", layers}};
            if (b.stats) {
                out << fmt::format("  activation stats (percentile {}): {}\n", b.stats->percentile,
                                   fmt::join(b.stats->values, ", "));
                info["bundle"]["activation_stats"] = {{"percentile", b.stats->percentile},
                                                      {"values", b.stats->values}};
            }
            for (const auto& [key, path] : b.datasets) {
                out << fmt::format("  dataset {}: {}\n", key, path);
            }
            if (!b.datasets.empty()) {
                info["bundle"]["datasets"] = b.datasets;
            }
        }
        if (!images.empty()) {
            run.param("images", images);
            run.input(images);
            Dataset d = read_idx_images(images);
            json di = {{"path", images}, {"count", d.size()}, {"rows", d.rows}, {"cols", d.cols}};
            out << fmt::format("images {}: {} x {}x{}\n", images, d.size(), d.rows, d.cols);
            if (!labels.empty()) {
                run.param("labels", labels);
                run.input(labels);
                d = read_idx_dataset(images, labels);
                std::vector<std::size_t> hist(10, 0);
                for (auto l : d.labels) {
                    if (l >= hist.size()) {
                        hist.resize(l + 1u, 0);
                    }
                    ++hist[l];
                }
                out << fmt::format("labels {}: per class {}\n", labels, fmt::join(hist, " "));
                di["labels"] = labels;
                di["class_histogram"] = hist;
            }
            info["dataset"] = di;
        }
        if (!output.empty()) {
            run.param("output", output);
            write_text(output, info.dump(2) + "\n");
            run.output(output);
            run.write(manifest_path_for(output));
        }
        return kExitOk;
    }
};

// ---- replay ----

std::vector<std::string> args_from_manifest(const fs::path& path) {
    const auto bytes = slurp(path);
    json m;
    try {
        m = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw DataError("run manifest '" + path.string() + "' is not valid JSON: " + e.what());
    }
    if (!m.contains("subcommand") || !m.contains("parameters")) {
        throw DataError("'" + path.string() + "' is not a run manifest");
    }
    std::vector<std::string> args{m["subcommand"].get<std::string>()};
    for (const auto& [name, value] : m["parameters"].items()) {
        args.push_back("--" + name);
        if (value.is_array()) {
            for (const auto& v : value) {
                args.push_back(v.get<std::string>());
            }
        } else {
            args.push_back(value.get<std::string>());
        }
    }
    return args;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Behavioral simulator for spiking-network inference with ideal, voltage-domain and "
                 "time-domain neurons",
                 "snn_sim"};
    app.set_version_flag("--version", kToolVersion);
    app.set_config("--config", "", "Read options from a TOML/INI file ([evaluate], [sweep], ... sections)");
    app.require_subcommand(1);

    std::function<int()> action;
    ConvertCommand convert;
    EvaluateCommand evaluate_cmd;
    SweepCommand sweep;
    InfoCommand info;
    convert.add_to(app, action, out);
    evaluate_cmd.add_to(app, action, out);
    sweep.add_to(app, action, out);
    info.add_to(app, action, out);

    std::string replay_path;
    auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a run manifest");
    replay->add_option("manifest", replay_path, "Run manifest (.run.json or run_manifest.json)")->required();
    replay->callback([&] {
        action = [&] { return dispatch(args_from_manifest(replay_path), out, err); };
    });

    std::vector<std::string> argv_store{"snn_sim"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) {
        argv.push_back(a.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }
    return action ? action() : kExitUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const ConfigurationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UnsupportedNetworkError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace snn_sim::cli
