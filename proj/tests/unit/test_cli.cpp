#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "helpers.hpp"
#include "snn_sim/cli.hpp"

using namespace snn_sim;
using test_support::mnist;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

std::vector<std::string> eval_args(const std::filesystem::path& bundle, const std::filesystem::path& out,
                                   std::vector<std::string> extra = {}) {
    std::vector<std::string> a{"evaluate",
                               "--bundle",
                               bundle.string(),
                               "--images",
                               mnist("test-images.idx3.gz").string(),
                               "--labels",
                               mnist("test-labels.idx1.gz").string(),
                               "--count",
                               "60",
                               "--steps",
                               "80",
                               "--output",
                               out.string()};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
}

}  // namespace

TEST_CASE("cli: help, version and usage errors") {
    CHECK(run_cli({"--help"}).code == cli::kExitOk);
    CHECK(run_cli({"--version"}).out.find(cli::kToolVersion) != std::string::npos);
    CHECK(run_cli({}).code == cli::kExitUsage);
    CHECK(run_cli({"evaluate"}).code == cli::kExitUsage);
    CHECK(run_cli({"frobnicate"}).code == cli::kExitUsage);
}

TEST_CASE("cli convert: manifest written, second pass scales are 1, missing file is a data error") {
    const auto dir = test_support::scratch("cli_convert");
    const auto calib = mnist("calib-images.idx3.gz").string();
    Result r = run_cli({"convert", "--weights", test_support::fixture_manifest().string(),
                    "--calibration-images", calib, "--output", (dir / "a.json").string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(std::filesystem::exists(dir / "a.bin"));
    const auto run = read_json(dir / "a.run.json");
    CHECK(run["subcommand"] == "convert");
    CHECK(run["inputs"].size() == 2);
    CHECK(run["parameters"]["percentile"] == "0.999");
    CHECK(read_json(dir / "a.json")["datasets"]["calibration_images"] == calib);

    r = run_cli({"convert", "--weights", (dir / "a.json").string(), "--calibration-images", calib, "--output",
             (dir / "b.json").string()});
    REQUIRE(r.code == cli::kExitOk);
    for (double s : read_json(dir / "b.run.json")["results"]["scale_factors"]) {
        CHECK(std::abs(s - 1.0) <= 1e-6);
    }

    r = run_cli({"convert", "--weights", test_support::fixture_manifest().string(), "--calibration-images",
             (dir / "missing.idx3").string(), "--output", (dir / "c.json").string()});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("missing.idx3") != std::string::npos);
}

TEST_CASE("cli evaluate: byte-identical reruns, replay, invalid parameters") {
    const auto dir = test_support::scratch("cli_eval");
    const auto bundle = test_support::fixture_manifest();
    const auto extra = std::vector<std::string>{"--encoding", "poisson", "--seed", "17"};
    REQUIRE(run_cli(eval_args(bundle, dir / "a.csv", extra)).code == cli::kExitOk);
    REQUIRE(run_cli(eval_args(bundle, dir / "b.csv", extra)).code == cli::kExitOk);
    const auto a = test_support::read_bytes(dir / "a.csv");
    CHECK(a == test_support::read_bytes(dir / "b.csv"));

    std::istringstream lines(std::string(a.begin(), a.end()));
    std::string header;
    std::getline(lines, header);
    CHECK(header == "step,time_s,error_rate");
    std::size_t rows = 0;
    for (std::string l; std::getline(lines, l);) {
        ++rows;
    }
    CHECK(rows == 81);

    const auto manifest_before = test_support::read_bytes(dir / "a.run.json");
    std::filesystem::remove(dir / "a.csv");
    REQUIRE(run_cli({"replay", (dir / "a.run.json").string()}).code == cli::kExitOk);
    CHECK(test_support::read_bytes(dir / "a.csv") == a);
    CHECK(test_support::read_bytes(dir / "a.run.json") == manifest_before);

    CHECK(run_cli(eval_args(bundle, dir / "c.csv", {"--model", "voltage", "--vth", "2.0"})).code ==
          cli::kExitUsage);
    CHECK(run_cli(eval_args(bundle, dir / "c.csv", {"--model", "quantum"})).code == cli::kExitUsage);
}

TEST_CASE("cli evaluate: time-domain run uses the scaled step") {
    const auto dir = test_support::scratch("cli_eval_td");
    const auto r = run_cli(eval_args(test_support::fixture_manifest(), dir / "t.csv",
                                 {"--model", "time", "--f-max", "50e6"}));
    REQUIRE(r.code == cli::kExitOk);
    const auto run = read_json(dir / "t.run.json");
    CHECK(run["results"]["simulation_steps"] == 80 * 20);
    CHECK(run["results"]["dt_s"].get<double>() == doctest::Approx(2e-9));
}

TEST_CASE("cli config file supplies options") {
    const auto dir = test_support::scratch("cli_config");
    {
        std::ofstream cfg(dir / "run.toml");
        cfg << "[evaluate]\n"
            << "bundle = \"" << test_support::fixture_manifest().string() << "\"\n"
            << "images = \"" << mnist("test-images.idx3.gz").string() << "\"\n"
            << "labels = \"" << mnist("test-labels.idx1.gz").string() << "\"\n"
            << "count = 20\nsteps = 30\n";
    }
    const auto r = run_cli({"--config", (dir / "run.toml").string(), "evaluate", "--output", (dir / "e.csv").string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(read_json(dir / "e.run.json")["parameters"]["count"] == "20");
}

TEST_CASE("cli sweep: single rate, explicit energy params, unreachable target") {
    const auto dir = test_support::scratch("cli_sweep");
    std::vector<std::string> base{"sweep",  "--bundle", test_support::fixture_manifest().string(),
                                  "--images", mnist("test-images.idx3.gz").string(),
                                  "--labels", mnist("test-labels.idx1.gz").string(),
                                  "--count",  "30",
                                  "--steps",  "40",
                                  "--rates",  "10e6",
                                  "--p-static", "1e-8",
                                  "--e-edge", "1e-15"};
    auto ok = base;
    ok.insert(ok.end(), {"--target-error", "0.5", "--out-dir", (dir / "ok").string()});
    REQUIRE(run_cli(ok).code == cli::kExitOk);
    const auto summary = read_json(dir / "ok/summary.json");
    CHECK(summary["argmin_frequency_hz"].get<double>() == 10e6);
    CHECK(std::filesystem::exists(dir / "ok/latency.csv"));
    CHECK(std::filesystem::exists(dir / "ok/run_manifest.json"));

    auto miss = base;
    miss.insert(miss.end(), {"--target-error", "-1", "--out-dir", (dir / "miss").string()});
    CHECK(run_cli(miss).code == cli::kExitTargetUnreached);
    CHECK(read_json(dir / "miss/summary.json")["argmin_frequency_hz"].is_null());

    auto half = base;
    half.resize(half.size() - 2);  // drop --e-edge
    half.insert(half.end(), {"--target-error", "0.5", "--out-dir", (dir / "bad").string()});
    CHECK(run_cli(half).code == cli::kExitUsage);
}

TEST_CASE("cli info") {
    const auto dir = test_support::scratch("cli_info");
    const auto r = run_cli({"info", "--bundle", test_support::fixture_manifest().string(), "--images",
                        mnist("test-images.idx3.gz").string(), "--output", (dir / "info.json").string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(r.out.find("neurons 138") != std::string::npos);
    CHECK(read_json(dir / "info.json")["dataset"]["count"] == 1000);
    CHECK(std::filesystem::exists(dir / "info.run.json"));
}
