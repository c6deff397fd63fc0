#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "snn_sim/cli.hpp"
#include "snn_sim/conversion.hpp"
#include "snn_sim/dataset.hpp"
#include "snn_sim/energy.hpp"
#include "snn_sim/engine.hpp"
#include "snn_sim/errors.hpp"
#include "snn_sim/neuron_models.hpp"
#include "snn_sim/weights_io.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace snn_sim;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Spike train of a single neuron driven by `drives`.
template <typename Params>
py::array_t<bool> spike_train(const Params& params, const DoubleArray& drives, double dt) {
    params.validate();
    const auto d = drives.unchecked<1>();
    py::array_t<bool> out(std::vector<py::ssize_t>{d.shape(0)});
    bool* o = out.mutable_data();
    NeuronState state = initial_state(params);
    for (py::ssize_t t = 0; t < d.shape(0); ++t) {
        StepOutcome r = step(std::move(state), d(t), dt, params);
        o[t] = r.spike;
        state = std::move(r.state);
    }
    return out;
}

Dataset dataset_from(const FloatArray& images, const py::array_t<std::uint8_t>& labels) {
    if (images.ndim() != 3) {
        throw ShapeMismatchError("images must have shape (count, rows, cols)");
    }
    Dataset ds;
    ds.rows = static_cast<std::size_t>(images.shape(1));
    ds.cols = static_cast<std::size_t>(images.shape(2));
    ds.pixels.assign(images.data(), images.data() + images.size());
    ds.labels.assign(labels.data(), labels.data() + labels.size());
    return ds;
}

py::array_t<float> images_array(const Dataset& ds) {
    py::array_t<float> a({ds.size(), ds.rows, ds.cols});
    std::copy(ds.pixels.begin(), ds.pixels.end(), a.mutable_data());
    return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Integrate-and-fire SNN simulator core";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigurationError>(m, "ConfigurationError", base.ptr());
    py::register_exception<CalibrationError>(m, "CalibrationError", base.ptr());
    auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", data.ptr());

    py::enum_<ResetMode>(m, "ResetMode")
        .value("SUBTRACT_THRESHOLD", ResetMode::SubtractThreshold)
        .value("RESET_TO_ZERO", ResetMode::ResetToZero);

    py::class_<IdealIFParams>(m, "IdealIFParams")
        .def(py::init<>())
        .def(py::init<double, ResetMode>(), "threshold"_a = 1.0, "reset_mode"_a = ResetMode::SubtractThreshold)
        .def_readwrite("threshold", &IdealIFParams::threshold)
        .def_readwrite("reset_mode", &IdealIFParams::reset_mode);

    py::class_<VoltageDomainParams>(m, "VoltageDomainParams")
        .def(py::init<>())
        .def_readwrite("threshold_voltage", &VoltageDomainParams::threshold_voltage)
        .def_readwrite("supply_voltage", &VoltageDomainParams::supply_voltage)
        .def_readwrite("lambda_clm", &VoltageDomainParams::lambda_clm)
        .def_readwrite("gain", &VoltageDomainParams::gain)
        .def_readwrite("leak_rate", &VoltageDomainParams::leak_rate)
        .def_readwrite("reset_mode", &VoltageDomainParams::reset_mode);

    py::class_<TimeDomainParams>(m, "TimeDomainParams")
        .def(py::init<>())
        .def_readwrite("f_ref", &TimeDomainParams::f_ref)
        .def_readwrite("k_ico", &TimeDomainParams::k_ico)
        .def_readwrite("f_min", &TimeDomainParams::f_min)
        .def_readwrite("f_max", &TimeDomainParams::f_max)
        .def_readwrite("counter_bits", &TimeDomainParams::counter_bits)
        .def_readwrite("cdc_delay_steps", &TimeDomainParams::cdc_delay_steps);

    m.def("spike_train", &spike_train<IdealIFParams>, "params"_a, "drives"_a, "dt"_a = 1.0);
    m.def("spike_train", &spike_train<VoltageDomainParams>, "params"_a, "drives"_a, "dt"_a = 1.0);
    m.def("spike_train", &spike_train<TimeDomainParams>, "params"_a, "drives"_a, "dt"_a);
    m.def("voltage_domain_increment", &voltage_domain_increment, "v_mem"_a, "drive"_a, "params"_a);
    m.def("max_firing_rate", &max_firing_rate, "params"_a);

    py::class_<ActivationStats>(m, "ActivationStats")
        .def_readonly("percentile", &ActivationStats::percentile)
        .def_readonly("values", &ActivationStats::values);

    py::class_<NetworkSpec>(m, "NetworkSpec")
        .def_readonly("input_shape", &NetworkSpec::input_shape)
        .def_readonly("class_count", &NetworkSpec::class_count)
        .def_readonly("normalized", &NetworkSpec::normalized)
        .def_property_readonly("neuron_count", &NetworkSpec::neuron_count)
        .def_property_readonly("layer_count", [](const NetworkSpec& s) { return s.layers.size(); })
        .def("layer_kinds", [](const NetworkSpec& s) {
            std::vector<std::string> k;
            for (const auto& l : s.layers) {
                k.push_back(to_string(l.kind));
            }
            return k;
        });

    py::class_<WeightsBundle>(m, "WeightsBundle")
        .def_readonly("spec", &WeightsBundle::spec)
        .def_readonly("stats", &WeightsBundle::stats);

    m.def("load_bundle", py::overload_cast<const std::filesystem::path&>(&load_bundle), "manifest"_a);
    m.def("save_bundle", &save_bundle, "bundle"_a, "manifest"_a, "blob"_a);

    m.def(
        "ann_forward",
        [](const NetworkSpec& spec, const FloatArray& x) {
            return ann_forward(spec, std::span<const float>(x.data(), static_cast<std::size_t>(x.size())));
        },
        "spec"_a, "input"_a);

    m.def(
        "convert",
        [](const WeightsBundle& b, const FloatArray& calibration, double percentile) {
            const Dataset ds = dataset_from(calibration, py::array_t<std::uint8_t>());
            const auto views = ds.image_views();
            WeightsBundle out;
            out.stats = collect_stats(b.spec, views, percentile);
            out.spec = normalize(b.spec, *out.stats);
            return out;
        },
        "bundle"_a, "calibration_images"_a, "percentile"_a = kDefaultPercentile);

    m.def(
        "read_idx",
        [](const std::filesystem::path& images, std::optional<std::filesystem::path> labels) {
            Dataset ds = labels ? read_idx_dataset(images, *labels) : read_idx_images(images);
            py::array_t<std::uint8_t> l(ds.labels.size());
            std::copy(ds.labels.begin(), ds.labels.end(), l.mutable_data());
            return py::make_tuple(images_array(ds), l);
        },
        "images"_a, "labels"_a = py::none());

    m.def(
        "evaluate",
        [](const NetworkSpec& spec, const FloatArray& images, const py::array_t<std::uint8_t>& labels,
           const std::string& model, std::size_t steps, double f_max, std::uint64_t seed, bool poisson,
           unsigned threads) {
            SimConfig cfg;
            cfg.max_steps = steps;
            cfg.seed = seed;
            cfg.input_encoding = poisson ? InputEncoding::PoissonRate : InputEncoding::ConstantCurrent;
            if (model == "time") {
                cfg = time_domain_config(f_max, steps, 10, cfg);
            } else if (model == "voltage") {
                VoltageDomainParams v;
                v.lambda_clm = 2.0;
                v.gain = v.threshold_voltage;
                cfg.neuron_model = v;
            } else if (model != "ideal") {
                throw ConfigurationError("model must be ideal, voltage or time");
            }
            const Dataset ds = dataset_from(images, labels);
            EvaluationResult r;
            {
                py::gil_scoped_release release;
                r = evaluate(spec, ds, cfg, threads);
            }
            py::dict d;
            d["error_rate"] = r.error_rate;
            d["dt"] = r.dt;
            d["error_vs_step"] = r.error_vs_step;
            d["mean_spikes_vs_step"] = r.mean_spikes_vs_step;
            d["predictions"] = r.predictions;
            return d;
        },
        "spec"_a, "images"_a, "labels"_a, "model"_a = "ideal", "steps"_a = 300, "f_max"_a = 100e6,
        "seed"_a = 0, "poisson"_a = false, "threads"_a = 1);

    py::class_<EnergyModelParams>(m, "EnergyModelParams")
        .def(py::init<>())
        .def_readwrite("p_static", &EnergyModelParams::p_static)
        .def_readwrite("e_edge", &EnergyModelParams::e_edge)
        .def_readwrite("e_spike", &EnergyModelParams::e_spike)
        .def_readwrite("reference_share", &EnergyModelParams::reference_share);

    m.def("power_per_neuron", &power_per_neuron, "frequency_hz"_a, "params"_a);
    m.def("energy_per_neuron", &energy_per_neuron, "frequency_hz"_a, "latency_s"_a, "spikes"_a, "params"_a);
    m.def(
        "fit_two_anchors",
        [](double f_a, double lat_a, double e_a, double f_b, double lat_b, double e_b, double spikes,
           const EnergyModelParams& base) {
            return fit_two_anchors({{f_a, lat_a, spikes}, e_a}, {{f_b, lat_b, spikes}, e_b}, base);
        },
        "f_a"_a, "latency_a"_a, "energy_a"_a, "f_b"_a, "latency_b"_a, "energy_b"_a, "spikes"_a = 0.0,
        "base"_a = EnergyModelParams{});

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        "args"_a);

    m.attr("__version__") = cli::kToolVersion;
}
