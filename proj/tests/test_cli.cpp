#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "experiment.hpp"

using namespace qdgeo;
using namespace qdgeo::cli;

namespace {

constexpr double kPi = std::numbers::pi;

const fs::path kConfigs = QDGEO_CONFIG_DIR;
const fs::path kWork = QDGEO_WORK_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh(const std::string& name) {
  const fs::path dir = kWork / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path p = kWork / (name + ".ini");
  std::ofstream(p) << text;
  return p;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(const fs::path& config, const fs::path& out_dir, std::optional<double> dt = std::nullopt) {
  std::ostringstream o, e;
  const int code = cmd_run(RunRequest{config, out_dir, dt, false}, o, e);
  return {code, o.str(), e.str()};
}

Outcome validate(const fs::path& config) {
  std::ostringstream o, e;
  const int code = cmd_validate(RunRequest{config, kWork / "unused", std::nullopt, false}, o, e);
  return {code, o.str(), e.str()};
}

Outcome sweep(const SweepRequest& req) {
  std::ostringstream o, e;
  const int code = cmd_sweep(req, o, e);
  return {code, o.str(), e.str()};
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw std::runtime_error("no column " + name);
  }
  double max_of(const std::string& name) const {
    double m = -1e300;
    for (const auto& r : rows) m = std::max(m, r[column(name)]);
    return m;
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  for (std::string cell; std::getline(s, cell, ',');) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Csv read_csv(const fs::path& p) {
  std::ifstream in(p);
  Csv csv;
  std::string line;
  std::getline(in, line);
  csv.header = split(line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    for (const auto& cell : split(line)) row.push_back(cell.empty() ? NAN : std::stod(cell));
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kGate1 = R"(
[model]
kind = two_level

[sequence]
kind = gate1
rabi = 0.02
gamma = pi/2
)";

}  // namespace

TEST_CASE("numbers") {
  CHECK(parse_number("0.02") == 0.02);
  CHECK(parse_number(" -1e-3 ") == -1e-3);
  CHECK(parse_number("+4") == 4.0);
  CHECK(parse_number("pi") == kPi);
  CHECK(parse_number("pi/8") == doctest::Approx(kPi / 8));
  CHECK(parse_number("-pi/4") == doctest::Approx(-kPi / 4));
  CHECK(parse_number("3*pi/4") == doctest::Approx(3 * kPi / 4));
  CHECK(parse_number("0.5 * pi") == doctest::Approx(kPi / 2));
  for (const char* bad : {"", "abc", "1.0.0", "pi/0", "2pi", "1e999", "0.02 ; note"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_number(bad), ConfigError);
  }
}

TEST_CASE("config schema") {
  std::istringstream ok(kGate1);
  const Experiment ex = load_experiment(parse_config(ok));
  CHECK(ex.model.kind == "two_level");
  CHECK(*ex.sequence.gamma == doctest::Approx(kPi / 2));
  CHECK(ex.output.trajectory == "trajectory.csv");

  auto rejects = [](const std::string& text) {
    std::istringstream in(text);
    CHECK_THROWS_AS(load_experiment(parse_config(in)), ConfigError);
  };
  rejects("kind = two_level\n");
  rejects("[model]\nkind = two_level\n");
  rejects("[model]\nkind = three_level\n[sequence]\nkind = gate1\nrabi = 0.02\ngamma = 1\n");
  rejects(std::string(kGate1) + "detuning = 0.04\n");
  rejects(std::string(kGate1) + "phi0 = 0.1\n");
  rejects(std::string(kGate1) + "[extra]\na = 1\n");
  rejects(std::string(kGate1) + "[integrator]\ndt = -1\n");
  rejects(std::string(kGate1) + "[integrator]\nsteps_per_segment = 2.5\n");
  rejects(std::string(kGate1) + "[run]\ninitial_state = EE\n");
  rejects(std::string(kGate1) + "[output]\nreport = ../x.json\n");
  rejects("[model]\nkind = raman\nrabi_plus = 0.02\n[sequence]\nkind = free\nduration = 10\n");
  rejects("[model]\nkind = two_level\n[sequence]\nkind = raman_not\ngamma_loop = 0.03\n");
  rejects("[model]\nkind = two_level\n[sequence]\nkind = segments\nrepeats = 2\n");
  rejects("[model]\nkind = two_level\n[sequence]\nkind = segments\nsegment1 = 0.02 0 0\n");
  rejects("[model]\nkind = two_level\n[model]\nkind = two_level\n");

  std::istringstream seg("[model]\nkind = two_level\n[sequence]\nkind = segments\n"
                         "segment2 = 0.02 pi 0.04 20\nsegment1 = 0.02 0 0.04 10\nrepeats = 3\ntarget = identity\n");
  const Experiment s = load_experiment(parse_config(seg));
  REQUIRE(s.sequence.segments.size() == 2);
  CHECK(s.sequence.segments[0].duration == 10.0);
  CHECK(s.sequence.segments[1].phase == doctest::Approx(kPi));
  CHECK(s.sequence.repeats == 3);
}

TEST_CASE("sweep parameter must exist") {
  std::istringstream in(kGate1);
  ConfigMap c = parse_config(in);
  set_value(c, "sequence.gamma", "1.0");
  CHECK(c["sequence"]["gamma"] == "1.0");
  CHECK_THROWS_AS(set_value(c, "sequence.detuning", "1.0"), ConfigError);
  CHECK_THROWS_AS(set_value(c, "gamma", "1.0"), ConfigError);
}

TEST_CASE("sha256 digests") {
  const fs::path p = write_config("abc", "");
  std::ofstream(p, std::ios::binary) << "abc";
  CHECK(sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("fig3 NOT gate config") {
  const fs::path dir = fresh("fig3");
  const Outcome r = run(kConfigs / "fig3_not_gate.ini", dir);
  REQUIRE(r.code == 0);
  const Csv csv = read_csv(dir / "trajectory.csv");
  CHECK(csv.header == std::vector<std::string>{"t_fs", "pop_0", "pop_1", "nx", "ny", "nz", "energy_exp",
                                               "dyn_phase_accum"});
  CHECK(csv.rows.front()[csv.column("pop_0")] == 1.0);
  CHECK(csv.rows.back()[csv.column("pop_1")] >= 0.99);
  const double t = csv.rows.back()[0];
  CHECK(t >= 95.0);
  CHECK(t <= 130.0);
  const auto report = read_json(dir / "report.json");
  CHECK(report["fidelity"].get<double>() >= 0.99);
  CHECK(report["gate_time"].get<double>() == doctest::Approx(t));
  CHECK(report["total_phase"].is_null());
}

TEST_CASE("fig4 phase gate config") {
  const fs::path dir = fresh("fig4");
  REQUIRE(run(kConfigs / "fig4_phase_gate.ini", dir).code == 0);
  const auto report = read_json(dir / "report.json");
  CHECK(std::abs(std::abs(report["geom_phase"].get<double>()) - kPi / 4) <= 1e-3);
  CHECK(std::abs(report["dyn_phase"].get<double>()) <= 1e-6);
  CHECK(report["fidelity"].get<double>() >= 0.999);
  const double aa = report["aa_phase"].get<double>();
  const double omega = report["solid_angle"].get<double>();
  CHECK(std::abs(std::remainder(aa + 0.5 * omega, 2 * kPi)) <= 1e-3);
  const Csv csv = read_csv(dir / "trajectory.csv");
  CHECK(csv.max_of("pop_1") >= 0.999);  // the loop passes through |G>
  CHECK(csv.rows.back()[csv.column("pop_0")] >= 0.999);
}

TEST_CASE("fig5 Raman config") {
  const fs::path dir = fresh("fig5");
  REQUIRE(run(kConfigs / "fig5_raman.ini", dir).code == 0);
  const Csv csv = read_csv(dir / "trajectory.csv");
  CHECK(csv.header.size() == 6);  // no Bloch columns for three levels
  CHECK(csv.max_of("pop_2") <= 0.05);
  CHECK(csv.max_of("pop_1") >= 0.95);

  const Outcome v = validate(kConfigs / "fig5_raman.ini");
  CHECK(v.code == 0);
  CHECK(v.out.find("Delta/Omega = 10\n") != std::string::npos);
  CHECK(v.out.find("warning") == std::string::npos);
}

TEST_CASE("fig6 Raman NOT config") {
  const fs::path dir = fresh("fig6");
  REQUIRE(run(kConfigs / "fig6_raman_not.ini", dir).code == 0);
  const auto report = read_json(dir / "report.json");
  CHECK(report["loop_count"].get<unsigned>() == 59);
  CHECK(report["gamma_loop"].get<double>() == doctest::Approx(0.0270254).epsilon(1e-5));
  CHECK(report["population_transfer"].get<double>() >= 0.99);
  CHECK(report["sequence"]["repeats"].get<unsigned>() == 59);
}

TEST_CASE("biexciton conditional phase config") {
  const fs::path dir = fresh("biexciton");
  REQUIRE(run(kConfigs / "biexciton_cphase.ini", dir).code == 0);
  const auto report = read_json(dir / "report.json");
  CHECK(report["product_state_fidelity"].get<double>() >= 0.98);
  CHECK(report["leakage"].get<double>() <= 4 * 0.05 * 0.05);
  CHECK(read_csv(dir / "trajectory.csv").header.size() == 7);

  const Outcome v = validate(kConfigs / "biexciton_cphase.ini");
  CHECK(v.code == 0);
  CHECK(v.out.find("Omega/delta = 0.05") != std::string::npos);
}

TEST_CASE("reruns are byte-identical and manifests match the files") {
  for (const char* name : {"fig3_not_gate", "fig4_phase_gate", "fig5_raman", "biexciton_cphase"}) {
    CAPTURE(name);
    const fs::path a = fresh(std::string("det_a_") + name), b = fresh(std::string("det_b_") + name);
    REQUIRE(run(kConfigs / (std::string(name) + ".ini"), a).code == 0);
    REQUIRE(run(kConfigs / (std::string(name) + ".ini"), b).code == 0);
    for (const char* f : {"trajectory.csv", "report.json"}) {
      CHECK(slurp(a / f) == slurp(b / f));
    }
    const auto manifest = read_json(a / "manifest.json");
    CHECK(manifest["status"] == "ok");
    CHECK(manifest["version"] == version());
    CHECK(manifest["config"]["model"]["kind"].is_string());
    CHECK(manifest["runtime_s"].get<double>() >= 0.0);
    REQUIRE(manifest["outputs"].size() == 2);
    for (const auto& [file, entry] : manifest["outputs"].items()) {
      CHECK(entry["sha256"] == sha256_file(a / file));
      CHECK(entry["bytes"].get<std::uintmax_t>() == fs::file_size(a / file));
    }
  }
}

TEST_CASE("dt override is echoed and changes the run") {
  const fs::path cfg = write_config("gate1", kGate1);
  const fs::path a = fresh("dt_a"), b = fresh("dt_b");
  REQUIRE(run(cfg, a).code == 0);
  REQUIRE(run(cfg, b, 0.01).code == 0);
  CHECK(read_json(b / "manifest.json")["config"]["integrator"]["dt"] == "0.01");
  CHECK(slurp(a / "trajectory.csv") != slurp(b / "trajectory.csv"));
  CHECK(read_json(b / "report.json")["fidelity"].get<double>() >= 0.999);
}

TEST_CASE("exit codes") {
  CHECK(run(kWork / "missing.ini", fresh("missing")).code == 2);
  CHECK(run(write_config("bad", "[model]\nkind = two_level\n"), fresh("bad")).code == 2);

  const std::string biex = slurp(kConfigs / "biexciton_cphase.ini");
  auto with = [&](const std::string& from, const std::string& to) {
    std::string s = biex;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  const fs::path zero_delta = write_config("zero_delta", with("delta = 0.2", "delta = 0"));
  const Outcome v0 = validate(zero_delta);
  CHECK(v0.code == 3);
  CHECK(v0.err.find("singular shift") != std::string::npos);
  CHECK(run(zero_delta, fresh("zero_delta")).code == 3);

  const fs::path strong = write_config("strong", with("rabi = 0.01", "rabi = 0.1"));
  const Outcome vs = validate(strong);
  CHECK(vs.code == 0);
  CHECK(vs.out.find("Omega/delta = 0.5") != std::string::npos);
  CHECK(vs.out.find("warning:") != std::string::npos);
  CHECK(run(strong, fresh("strong")).code == 3);

  // Zero detuning is the resonant case of gate 2, not a rotation gate.
  const fs::path resonant =
      write_config("resonant", "[model]\nkind = two_level\n[sequence]\nkind = gate1\nrabi = 0.02\ndetuning = 0\n");
  CHECK(validate(resonant).code == 3);

  const fs::path coarse = write_config("coarse", std::string(kGate1) + "[integrator]\ndt = 20\n");
  const Outcome c = run(coarse, fresh("coarse"));
  CHECK(c.code == 4);
  CHECK(c.err.find("norm drift") != std::string::npos);
}

TEST_CASE("command line") {
  const std::string bin = QDSIM_BINARY;
  const std::string cfg = (kConfigs / "fig4_phase_gate.ini").string();
  CHECK(shell(bin + " --version") == 0);
  CHECK(shell(bin) == 2);
  CHECK(shell(bin + " fly") == 2);
  CHECK(shell(bin + " run") == 2);
  CHECK(shell(bin + " run --config " + cfg + " --dt abc") == 2);
  CHECK(shell(bin + " sweep --config " + cfg + " --param sequence.phi0 --jobs 0") == 2);
  CHECK(shell(bin + " validate --config " + cfg) == 0);
  CHECK(shell(bin + " run --quiet --config " + cfg + " --out-dir " + (kWork / "cli_run").string()) == 0);
  CHECK(fs::exists(kWork / "cli_run" / "manifest.json"));
}

TEST_CASE("sweep over Delta/Omega") {
  SweepRequest req;
  req.run = RunRequest{kConfigs / "fig5_raman.ini", fresh("sweep_ratio"), std::nullopt, true};
  req.parameter = "model.detuning_ratio";
  req.values = {"5", "10", "20"};
  req.jobs = 3;
  REQUIRE(sweep(req).code == 0);
  const Csv csv = read_csv(req.run.out_dir / "summary.csv");
  CHECK(csv.header == std::vector<std::string>{"value", "fidelity", "leakage", "gamma_loop", "transfer", "gate_time"});
  REQUIRE(csv.rows.size() == 3);
  const std::size_t leak = csv.column("leakage");
  CHECK(csv.rows[0][leak] > csv.rows[1][leak]);
  CHECK(csv.rows[1][leak] > csv.rows[2][leak]);
  CHECK(csv.rows[1][leak] <= 0.05);

  const auto manifest = read_json(req.run.out_dir / "manifest.json");
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["points"].size() == 3);
  CHECK(manifest["summary"]["sha256"] == sha256_file(req.run.out_dir / "summary.csv"));
  for (const auto& p : manifest["points"]) {
    for (const auto& [file, entry] : p["outputs"].items()) {
      CHECK(entry["sha256"] == sha256_file(req.run.out_dir / p["dir"].get<std::string>() / file));
    }
  }

  // Concurrency does not change the results.
  SweepRequest serial = req;
  serial.run.out_dir = fresh("sweep_ratio_serial");
  serial.jobs = 1;
  REQUIRE(sweep(serial).code == 0);
  CHECK(slurp(serial.run.out_dir / "summary.csv") == slurp(req.run.out_dir / "summary.csv"));
}

TEST_CASE("sweep over the gate 1 angle") {
  SweepRequest req;
  req.run = RunRequest{write_config("gate1_sweep", kGate1), fresh("sweep_gamma"), std::nullopt, true};
  req.parameter = "sequence.gamma";
  req.range = "0.3:2.8";
  req.points = 5;
  req.jobs = 2;
  REQUIRE(sweep(req).code == 0);
  const Csv csv = read_csv(req.run.out_dir / "summary.csv");
  REQUIRE(csv.rows.size() == 5);
  CHECK(csv.rows.front()[0] == 0.3);
  CHECK(csv.rows.back()[0] == 2.8);
  for (const auto& row : csv.rows) {
    CAPTURE(row[0]);
    CHECK(row[csv.column("fidelity")] >= 0.999);
    CHECK(std::isnan(row[csv.column("leakage")]));
  }
}

TEST_CASE("single-point sweep reproduces run") {
  const fs::path cfg = kConfigs / "fig4_phase_gate.ini";
  const fs::path direct = fresh("single_run");
  REQUIRE(run(cfg, direct).code == 0);
  SweepRequest req;
  req.run = RunRequest{cfg, fresh("single_sweep"), std::nullopt, true};
  req.parameter = "sequence.phi0";
  req.values = {"pi/8"};
  REQUIRE(sweep(req).code == 0);
  for (const char* f : {"trajectory.csv", "report.json"}) {
    CHECK(slurp(direct / f) == slurp(req.run.out_dir / "point_000" / f));
  }
}

TEST_CASE("failing sweep point leaves a partial manifest") {
  SweepRequest req;
  req.run = RunRequest{write_config("gate1_fail", kGate1), fresh("sweep_fail"), std::nullopt, true};
  req.parameter = "sequence.gamma";
  req.values = {"1.0", "0"};  // gamma = 0 has no gate-1 realization
  const Outcome r = sweep(req);
  CHECK(r.code == 3);
  const auto manifest = read_json(req.run.out_dir / "manifest.json");
  CHECK(manifest["status"] == "failed");
  CHECK(manifest["error"]["index"] == 1);
  REQUIRE(manifest["points"].size() == 1);
  CHECK(manifest["points"][0]["value"] == "1.0");
  CHECK_FALSE(fs::exists(req.run.out_dir / "summary.csv"));

  SweepRequest missing = req;
  missing.parameter = "sequence.detuning";
  CHECK(sweep(missing).code == 2);
  SweepRequest no_grid = req;
  no_grid.values.clear();
  CHECK(sweep(no_grid).code == 2);
}
