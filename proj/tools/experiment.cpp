#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#ifndef QDGEO_VERSION
#define QDGEO_VERSION "0.0.0"
#endif

namespace qdgeo::cli {

namespace {

using json = nlohmann::ordered_json;
using core::Operator;
using pulses::PulseSegment;
using pulses::PulseSequence;

constexpr double kPi = std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> plain_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
  return v;
}

unsigned long parse_count(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  unsigned long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", what, text));
  }
  return v;
}

// Typed access to one section; remembers which keys were consumed.
class Section {
 public:
  Section(const ConfigMap& config, std::string name) : name_(std::move(name)) {
    if (auto it = config.find(name_); it != config.end()) entries_ = &it->second;
  }

  bool present() const { return entries_ != nullptr; }
  bool has(const std::string& key) const { return entries_ && entries_->count(key); }

  std::optional<std::string> text(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return entries_->at(key);
  }

  std::optional<double> number(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    try {
      return parse_number(*t);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("[{}] {}: {}", name_, key, e.what()));
    }
  }

  double require(const std::string& key) {
    auto v = number(key);
    if (!v) throw ConfigError(fmt::format("[{}] missing required key '{}'", name_, key));
    return *v;
  }

  void mark(const std::string& key) { used_.insert(key); }

  /// Rejects keys that were never asked for.
  void finish(const std::string& context) const {
    if (!entries_) return;
    for (const auto& [key, value] : *entries_) {
      if (!used_.count(key)) {
        throw ConfigError(fmt::format("[{}] key '{}' is not valid {}", name_, key, context));
      }
    }
  }

  const std::string& name() const { return name_; }
  const std::map<std::string, std::string>* entries() const { return entries_; }

 private:
  std::string name_;
  const std::map<std::string, std::string>* entries_ = nullptr;
  std::set<std::string> used_;
};

const std::set<std::string> kModelKinds{"two_level", "two_level_lab", "raman", "raman_effective", "biexciton",
                                        "two_photon_effective"};
const std::set<std::string> kSequenceKinds{"gate1", "gate2", "free", "segments", "raman_not", "raman_phase",
                                           "two_qubit_phase"};

bool is_raman(const std::string& kind) { return kind == "raman" || kind == "raman_effective"; }
bool is_biexciton(const std::string& kind) { return kind == "biexciton" || kind == "two_photon_effective"; }

std::vector<std::string> basis_labels(const std::string& kind) {
  if (kind == "raman") return {"E+", "E-", "G"};
  if (kind == "raman_effective") return {"E+", "E-"};
  if (kind == "biexciton") return {"GG", "GE", "EG", "EE"};
  if (kind == "two_photon_effective") return {"EE", "GG"};
  return {"E", "G"};
}

ModelSpec load_model(const ConfigMap& config) {
  Section s(config, "model");
  if (!s.present()) throw ConfigError("missing [model] section");
  ModelSpec m;
  m.kind = trim(s.text("kind").value_or(""));
  if (!kModelKinds.count(m.kind)) throw ConfigError(fmt::format("[model] unknown kind '{}'", m.kind));

  if (m.kind == "two_level_lab") m.omega0 = s.require("omega0");
  if (is_biexciton(m.kind)) {
    m.omega0 = s.require("omega0");
    m.delta = s.require("delta");
    m.rabi = s.require("rabi");
  }
  if (is_raman(m.kind)) {
    m.rabi_plus = s.require("rabi_plus");
    m.rabi_minus = s.number("rabi_minus").value_or(m.rabi_plus);
    const auto det = s.number("detuning");
    const auto ratio = s.number("detuning_ratio");
    if (det.has_value() == ratio.has_value()) {
      throw ConfigError("[model] raman needs exactly one of 'detuning' and 'detuning_ratio'");
    }
    m.detuning = det ? *det : *ratio * std::max(m.rabi_plus, m.rabi_minus);
  }
  s.finish(fmt::format("for model kind '{}'", m.kind));
  return m;
}

TargetSpec parse_target(const std::string& text) {
  std::istringstream in(text);
  std::string kind, angle, extra;
  in >> kind >> angle >> extra;
  if (kind == "identity" && angle.empty()) return {"identity", 0.0};
  if ((kind == "gate1" || kind == "gate2") && !angle.empty() && extra.empty()) return {kind, parse_number(angle)};
  throw ConfigError(fmt::format("[sequence] target: expected 'identity', 'gate1 <gamma>' or 'gate2 <gamma>', got '{}'",
                                text));
}

SequenceSpec load_sequence(const ConfigMap& config, const ModelSpec& model) {
  Section s(config, "sequence");
  if (!s.present()) throw ConfigError("missing [sequence] section");
  SequenceSpec q;
  q.kind = trim(s.text("kind").value_or(""));
  if (!kSequenceKinds.count(q.kind)) throw ConfigError(fmt::format("[sequence] unknown kind '{}'", q.kind));

  auto one_of = [&](const char* a, const char* b, std::optional<double>& va, std::optional<double>& vb) {
    va = s.number(a);
    vb = s.number(b);
    if (va.has_value() == vb.has_value()) {
      throw ConfigError(fmt::format("[sequence] {} needs exactly one of '{}' and '{}'", q.kind, a, b));
    }
  };
  auto repeats = [&] {
    if (auto t = s.text("repeats")) {
      q.repeats = static_cast<unsigned>(parse_count(*t, "[sequence] repeats"));
      if (q.repeats == 0) throw ConfigError("[sequence] repeats must be >= 1");
    }
  };
  auto target = [&] {
    if (auto t = s.text("target")) {
      if (trim(*t) != "none") q.target = parse_target(trim(*t));
    }
  };

  if (q.kind == "gate1") {
    q.rabi = s.number("rabi");
    one_of("detuning", "gamma", q.detuning, q.gamma);
    q.base_phase = s.number("base_phase").value_or(0.0);
    repeats();
    target();
  } else if (q.kind == "gate2") {
    q.rabi = s.number("rabi");
    one_of("phi0", "gamma_tilde", q.phi0, q.gamma_tilde);
    q.base_phase = s.number("base_phase").value_or(0.0);
    repeats();
    target();
  } else if (q.kind == "free") {
    q.rabi = s.number("rabi");
    q.duration = s.require("duration");
    q.phase = s.number("phase").value_or(0.0);
    q.detuning = s.number("detuning").value_or(0.0);
    target();
  } else if (q.kind == "segments") {
    static const std::regex key_re(R"(segment([0-9]+))");
    std::map<unsigned long, SegmentSpec> by_index;
    if (const auto* entries = s.entries()) {
      for (const auto& [key, value] : *entries) {
        std::smatch m;
        if (!std::regex_match(key, m, key_re)) continue;
        s.mark(key);
        std::istringstream in(value);
        std::vector<double> v;
        for (std::string tok; in >> tok;) v.push_back(parse_number(tok));
        if (v.size() != 4) {
          throw ConfigError(fmt::format("[sequence] {}: expected 'rabi phase detuning duration', got '{}'", key, value));
        }
        by_index[std::stoul(m[1].str())] = SegmentSpec{v[0], v[1], v[2], v[3]};
      }
    }
    if (by_index.empty()) throw ConfigError("[sequence] segments needs at least one segmentN line");
    for (const auto& [i, seg] : by_index) q.segments.push_back(seg);
    repeats();
    target();
  } else if (q.kind == "raman_not") {
    if (model.kind != "raman") throw ConfigError("[sequence] raman_not needs model kind 'raman'");
    one_of("gamma_loop", "two_photon_detuning", q.gamma_loop, q.two_photon_detuning);
  } else if (q.kind == "raman_phase") {
    if (model.kind != "raman") throw ConfigError("[sequence] raman_phase needs model kind 'raman'");
    q.gamma_tilde = s.require("gamma_tilde");
  } else if (q.kind == "two_qubit_phase") {
    if (model.kind != "biexciton") throw ConfigError("[sequence] two_qubit_phase needs model kind 'biexciton'");
    q.gamma_tilde = s.require("gamma_tilde");
  }
  s.finish(fmt::format("for sequence kind '{}'", q.kind));
  return q;
}

sim::RunSettings load_settings(const ConfigMap& config) {
  Section s(config, "integrator");
  sim::RunSettings r;
  if (auto dt = s.number("dt")) {
    if (!(*dt > 0.0) || !std::isfinite(*dt)) throw ConfigError(fmt::format("[integrator] dt must be positive, got {}", *dt));
    r.dt = *dt;
  }
  if (auto t = s.text("steps_per_segment")) {
    r.steps_per_segment = parse_count(*t, "[integrator] steps_per_segment");
    if (r.steps_per_segment == 0) throw ConfigError("[integrator] steps_per_segment must be >= 1");
  }
  if (auto t = s.text("samples_per_segment")) {
    r.samples_per_segment = parse_count(*t, "[integrator] samples_per_segment");
    if (r.samples_per_segment == 0) throw ConfigError("[integrator] samples_per_segment must be >= 1");
  }
  if (auto v = s.number("max_phase_step")) {
    if (!(*v > 0.0)) throw ConfigError("[integrator] max_phase_step must be positive");
    r.max_phase_step = *v;
  }
  s.finish("in [integrator]");
  return r;
}

std::size_t load_initial_state(const ConfigMap& config, const ModelSpec& model, const SequenceSpec& seq) {
  Section s(config, "run");
  std::size_t index = 0;
  if (auto t = s.text("initial_state")) {
    const std::string v = trim(*t);
    const auto labels = basis_labels(model.kind);
    const auto it = std::find(labels.begin(), labels.end(), v);
    if (it != labels.end()) {
      index = static_cast<std::size_t>(it - labels.begin());
    } else {
      index = parse_count(v, "[run] initial_state");
      if (index >= labels.size()) {
        throw ConfigError(fmt::format("[run] initial_state {} out of range for model '{}'", index, model.kind));
      }
    }
    if (index != 0 && (seq.kind == "raman_not" || seq.kind == "raman_phase" || seq.kind == "two_qubit_phase")) {
      throw ConfigError(fmt::format("[run] initial_state is fixed for sequence kind '{}'", seq.kind));
    }
  }
  s.finish("in [run]");
  return index;
}

OutputSpec load_output(const ConfigMap& config) {
  Section s(config, "output");
  OutputSpec o;
  auto name = [&](const char* key, std::string& field) {
    if (auto t = s.text(key)) {
      const fs::path p(trim(*t));
      if (p.empty() || p.has_parent_path() || p.is_absolute()) {
        throw ConfigError(fmt::format("[output] {} must be a plain file name, got '{}'", key, *t));
      }
      field = p.string();
    }
  };
  name("trajectory", o.trajectory);
  name("report", o.report);
  name("manifest", o.manifest);
  s.finish("in [output]");
  if (o.trajectory == o.report || o.trajectory == o.manifest || o.report == o.manifest) {
    throw ConfigError("[output] file names must differ");
  }
  return o;
}

// Segment-level Rabi frequency: the effective coupling for the eliminated
// models, the plain Rabi frequency for a bare two-level dot.
double sequence_rabi(const Experiment& ex) {
  if (ex.sequence.rabi) return *ex.sequence.rabi;
  const ModelSpec& m = ex.model;
  if (is_raman(m.kind)) {
    if (m.detuning == 0.0) throw ModelError("Raman detuning Delta = 0: singular detuning");
    return m.rabi_plus * m.rabi_minus / std::abs(m.detuning);
  }
  if (is_biexciton(m.kind)) {
    if (m.delta == 0.0) throw ModelError("biexcitonic shift delta = 0: singular shift");
    return m.rabi * m.rabi / std::abs(m.delta);
  }
  throw ConfigError(fmt::format("[sequence] rabi is required for model kind '{}'", m.kind));
}

std::unique_ptr<sim::HamiltonianModel> make_model(const ModelSpec& m) {
  if (m.kind == "two_level") return std::make_unique<sim::RotatingTwoLevel>();
  if (m.kind == "two_level_lab") return std::make_unique<sim::LabTwoLevel>(m.omega0);
  if (m.kind == "raman" || m.kind == "raman_effective") {
    if (!(m.rabi_plus > 0.0)) throw ModelError(fmt::format("rabi_plus must be positive, got {}", m.rabi_plus));
    const double ratio = m.rabi_minus / m.rabi_plus;
    if (m.kind == "raman") return std::make_unique<sim::RamanThreeLevel>(m.detuning, ratio);
    return std::make_unique<sim::RamanEffective>(m.detuning, ratio);
  }
  if (m.kind == "biexciton") return std::make_unique<sim::BiexcitonRotating>(m.omega0, m.delta);
  return std::make_unique<sim::TwoPhotonEffective>(m.omega0, m.delta);
}

Operator rz(double theta) {
  return Operator(2, {{std::exp(-0.5 * kI * theta), 0.0}, {0.0, std::exp(0.5 * kI * theta)}});
}

struct Plan {
  PulseSequence sequence;
  std::optional<Operator> target;
};

Plan make_plan(const Experiment& ex) {
  const SequenceSpec& q = ex.sequence;
  std::optional<Operator> target;
  std::optional<PulseSequence> seq;
  if (q.kind == "gate1") {
    const double rabi = sequence_rabi(ex);
    double gamma = 0.0;
    if (q.gamma) {
      const auto d = gates::synthesize_gate1(*q.gamma, rabi);
      seq = pulses::gate1_sequence(rabi, d.detuning, q.base_phase);
      gamma = *q.gamma;
    } else {
      seq = pulses::gate1_sequence(rabi, *q.detuning, q.base_phase);
      gamma = geometry::swept_angle_gamma(rabi, *q.detuning);
    }
    target = rz(q.base_phase) * gates::target_gate1(q.repeats * gamma) * rz(q.base_phase).adjoint();
  } else if (q.kind == "gate2") {
    const double phi0 = q.phi0 ? *q.phi0 : 0.5 * *q.gamma_tilde;
    seq = pulses::gate2_sequence(sequence_rabi(ex), phi0, q.base_phase);
    target = rz(q.base_phase) * gates::target_gate2(2.0 * q.repeats * phi0) * rz(q.base_phase).adjoint();
  } else if (q.kind == "free") {
    seq = PulseSequence({PulseSegment(sequence_rabi(ex), q.phase, *q.detuning, *q.duration)});
  } else if (q.kind == "segments") {
    std::vector<PulseSegment> segs;
    for (const auto& s : q.segments) segs.emplace_back(s.rabi, s.phase, s.detuning, s.duration);
    seq = PulseSequence(std::move(segs));
  } else {
    throw ConfigError(fmt::format("sequence kind '{}' has no explicit pulse plan", q.kind));
  }
  if (q.repeats > 1) seq = pulses::repeat_sequence(*seq, q.repeats);
  if (q.target) {
    const TargetSpec& t = *q.target;
    if (t.kind == "identity") target = Operator::identity(2);
    if (t.kind == "gate1") target = gates::target_gate1(t.angle);
    if (t.kind == "gate2") target = gates::target_gate2(t.angle);
  }
  return Plan{*seq, target};
}

models::RamanParams raman_params(const Experiment& ex) {
  models::RamanParams p{ex.model.rabi_plus, ex.model.rabi_minus, ex.model.detuning};
  if (ex.sequence.two_photon_detuning) p.two_photon_detuning = *ex.sequence.two_photon_detuning;
  return p;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json matrix_json(const Operator& u) {
  json re = json::array(), im = json::array();
  for (std::size_t r = 0; r < u.dim(); ++r) {
    json rr = json::array(), ii = json::array();
    for (std::size_t c = 0; c < u.dim(); ++c) {
      rr.push_back(u(r, c).real());
      ii.push_back(u(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
  }
  return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

json sequence_json(const PulseSequence& seq) {
  json segs = json::array();
  for (const auto& s : seq.segments()) {
    segs.push_back(json{{"rabi", s.rabi()},
                        {"phase", s.phase()},
                        {"detuning", s.detuning()},
                        {"duration", s.duration()},
                        {"rotation_angle", s.rotation_angle()}});
  }
  return json{{"repeats", seq.repeats()}, {"segments", std::move(segs)}};
}

json config_json(const ConfigMap& config) {
  json out = json::object();
  for (const auto& [section, entries] : config) {
    json sec = json::object();
    for (const auto& [k, v] : entries) sec[k] = v;
    out[section] = std::move(sec);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

// Writes the trajectory and the report; returns file name -> digest entries.
json write_outputs(const Experiment& ex, const gates::GateReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / ex.output.trajectory, trajectory_csv(report.trajectory));
  write_text(dir / ex.output.report, report_json(report, ex.output.trajectory).dump(2) + "\n");
  json files = json::object();
  for (const auto& name : {ex.output.trajectory, ex.output.report}) {
    files[name] = json{{"sha256", sha256_file(dir / name)}, {"bytes", fs::file_size(dir / name)}};
  }
  return files;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ConfigMap load_with_overrides(const RunRequest& req) {
  ConfigMap config = read_config(req.config);
  if (req.dt) {
    if (!(*req.dt > 0.0)) throw ConfigError(fmt::format("--dt must be positive, got {}", *req.dt));
    config["integrator"]["dt"] = num(*req.dt);
  }
  return config;
}

void print_summary(const gates::GateReport& r, std::ostream& out) {
  out << fmt::format("model {}: gate time {:.6g} fs, {} loop(s)\n", r.model, r.gate_time, r.loop_count);
  if (r.fidelity) out << fmt::format("fidelity {:.9f}\n", *r.fidelity);
  out << fmt::format("population transfer {:.9f}\n", r.population_transfer);
  if (r.leakage) out << fmt::format("leakage {:.3e}\n", *r.leakage);
  if (r.geom_phase) out << fmt::format("geometric phase {:.9f} rad\n", *r.geom_phase);
  if (r.gamma_loop) out << fmt::format("gamma per loop {:.9f} rad\n", *r.gamma_loop);
  if (r.conditional_phase) out << fmt::format("conditional phase {:.6f} rad\n", *r.conditional_phase);
  if (r.product_state_fidelity) out << fmt::format("product state fidelity {:.9f}\n", *r.product_state_fidelity);
  for (const auto& w : r.warnings) out << "warning: " << w << "\n";
}

}  // namespace

// ---------------------------------------------------------------------------

ConfigMap parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  ConfigMap out;
  for (const auto& [section, node] : tree) {
    if (node.empty()) throw ConfigError(fmt::format("key '{}' outside of a section", section));
    auto& entries = out[section];
    for (const auto& [key, value] : node) entries[key] = trim(value.data());
  }
  static const std::set<std::string> known{"model", "sequence", "integrator", "run", "output"};
  for (const auto& [section, entries] : out) {
    if (!known.count(section)) throw ConfigError(fmt::format("unknown section [{}]", section));
  }
  return out;
}

ConfigMap read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  return parse_config(in);
}

void set_value(ConfigMap& config, const std::string& dotted, const std::string& value) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) throw ConfigError(fmt::format("parameter '{}' must look like section.key", dotted));
  const std::string section = dotted.substr(0, dot), key = dotted.substr(dot + 1);
  auto it = config.find(section);
  if (it == config.end() || !it->second.count(key)) {
    throw ConfigError(fmt::format("parameter '{}' not present in config", dotted));
  }
  it->second[key] = value;
}

double parse_number(const std::string& text) {
  const std::string s = trim(text);
  if (auto v = plain_number(s)) {
    if (!std::isfinite(*v)) throw ConfigError(fmt::format("non-finite number '{}'", text));
    return *v;
  }
  static const std::regex pi_re(R"(([+-]?)(?:([^*/\s]+)\s*\*\s*)?pi(?:\s*/\s*([^*/\s]+))?)");
  std::smatch m;
  if (std::regex_match(s, m, pi_re)) {
    double v = kPi;
    if (m[2].matched) {
      const auto k = plain_number(m[2].str());
      if (!k) throw ConfigError(fmt::format("cannot parse number '{}'", text));
      v *= *k;
    }
    if (m[3].matched) {
      const auto d = plain_number(m[3].str());
      if (!d || *d == 0.0) throw ConfigError(fmt::format("cannot parse number '{}'", text));
      v /= *d;
    }
    return m[1].str() == "-" ? -v : v;
  }
  throw ConfigError(fmt::format("cannot parse number '{}'", text));
}

Experiment load_experiment(const ConfigMap& config) {
  Experiment ex;
  ex.config = config;
  ex.model = load_model(config);
  ex.sequence = load_sequence(config, ex.model);
  ex.settings = load_settings(config);
  ex.initial_state = load_initial_state(config, ex.model, ex.sequence);
  ex.output = load_output(config);
  return ex;
}

Validation validate_experiment(const Experiment& ex) {
  Validation v;
  const ModelSpec& m = ex.model;
  v.lines.push_back(fmt::format("model {}, sequence {}", m.kind, ex.sequence.kind));
  if (is_raman(m.kind)) {
    const models::RamanParams p = raman_params(ex);
    p.validate();
    const auto eff = models::build_raman_effective(p);
    v.lines.push_back(fmt::format("Delta/Omega = {:.4g}", 1.0 / p.validity_ratio()));
    v.lines.push_back(fmt::format("Omega+ Omega- / Delta = {:.6g} rad/fs", eff.effective_rabi));
    if (eff.warning) v.warnings.push_back(*eff.warning);
    if (ex.sequence.kind == "raman_not" && 1.0 / p.validity_ratio() < 80.0) {
      v.warnings.push_back(fmt::format(
          "Delta/Omega = {:.4g} < 80: leakage into |G> accumulates over the loop iteration", 1.0 / p.validity_ratio()));
    }
    if ((ex.sequence.kind == "raman_not" || ex.sequence.kind == "raman_phase") && 1.0 / p.validity_ratio() < 5.0) {
      v.warnings.push_back("Delta/Omega < 5: Raman gates refuse to run");
    }
  }
  if (is_biexciton(m.kind)) {
    const auto p = models::BiexcitonParams::resonant(m.omega0, m.delta, m.rabi);
    const auto eff = models::build_two_photon_effective(p);
    v.lines.push_back(fmt::format("Omega/delta = {:.4g}", p.validity_ratio()));
    v.lines.push_back(fmt::format("Omega_eff = 2 Omega^2 / delta = {:.6g} rad/fs", eff.effective_rabi));
    if (eff.warning) v.warnings.push_back(*eff.warning);
  }
  if (m.kind == "two_level_lab") {
    if (!(m.omega0 > 0.0)) throw ModelError(fmt::format("omega0 must be positive, got {}", m.omega0));
  }
  const std::string& k = ex.sequence.kind;
  if (k != "raman_not" && k != "raman_phase" && k != "two_qubit_phase") {
    (void)make_model(m);
    const Plan plan = make_plan(ex);
    v.lines.push_back(fmt::format("{} segment(s) x {} repeat(s), duration {:.6g} fs", plan.sequence.segments().size(),
                                  plan.sequence.repeats(), plan.sequence.total_duration()));
    if (k == "gate1") {
      const auto& s = plan.sequence.segments().front();
      v.lines.push_back(fmt::format("gamma = {:.9g} rad", geometry::swept_angle_gamma(s.rabi(), s.detuning())));
    }
    if (m.kind == "two_level_lab") {
      const double rabi = plan.sequence.segments().front().rabi();
      if (rabi > 0.0) {
        v.lines.push_back(fmt::format("omega0/Omega = {:.4g}", m.omega0 / rabi));
        if (m.omega0 / rabi < 10.0) v.warnings.push_back("omega0/Omega < 10: counter-rotating terms are not negligible");
      }
    }
  }
  if (k == "two_qubit_phase" && m.rabi / m.delta > 0.1) {
    v.warnings.push_back("two-qubit gate refuses to run for Omega/delta > 0.1");
  }
  return v;
}

gates::GateReport execute(const Experiment& ex) {
  const std::string& k = ex.sequence.kind;
  if (k == "raman_not" || k == "raman_phase") {
    gates::RamanOptions opts;
    opts.settings = ex.settings;
    gates::RamanTarget target;
    if (k == "raman_not") {
      opts.gamma_loop_target = ex.sequence.gamma_loop;
    } else {
      target = gates::RamanTarget{gates::RamanTarget::Kind::Phase, *ex.sequence.gamma_tilde};
    }
    return gates::raman_gate(raman_params(ex), target, opts);
  }
  gates::RunOptions opts{ex.settings, ex.initial_state};
  if (k == "two_qubit_phase") {
    const auto p = models::BiexcitonParams::resonant(ex.model.omega0, ex.model.delta, ex.model.rabi);
    return gates::two_qubit_phase_gate(p, *ex.sequence.gamma_tilde, opts);
  }
  const auto model = make_model(ex.model);
  const Plan plan = make_plan(ex);
  return gates::run_gate(plan.sequence, *model, plan.target, opts);
}

std::string trajectory_csv(const geometry::Trajectory& traj) {
  const std::size_t d = traj.dim();
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "t_fs");
  for (std::size_t i = 0; i < d; ++i) fmt::format_to(out, ",pop_{}", i);
  if (d == 2) fmt::format_to(out, ",nx,ny,nz");
  fmt::format_to(out, ",energy_exp,dyn_phase_accum\n");
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const auto& s = traj.samples[k];
    fmt::format_to(out, "{:.17g}", s.t);
    for (std::size_t i = 0; i < d; ++i) fmt::format_to(out, ",{:.17g}", traj.states[k].population(i));
    if (d == 2) fmt::format_to(out, ",{:.17g},{:.17g},{:.17g}", s.n[0], s.n[1], s.n[2]);
    fmt::format_to(out, ",{:.17g},{:.17g}\n", s.energy, s.dyn_phase_accum);
  }
  return fmt::to_string(buf);
}

json report_json(const gates::GateReport& r, const std::string& trajectory_file) {
  json j;
  j["model"] = r.model;
  j["realized"] = matrix_json(r.realized);
  j["target"] = r.target ? matrix_json(*r.target) : json(nullptr);
  j["fidelity"] = opt(r.fidelity);
  j["total_phase"] = opt(r.total_phase);
  j["dyn_phase"] = opt(r.dyn_phase);
  j["aa_phase"] = opt(r.aa_phase);
  j["geom_phase"] = opt(r.geom_phase);
  j["solid_angle"] = opt(r.solid_angle);
  j["sequence"] = r.sequence ? sequence_json(*r.sequence) : json(nullptr);
  j["gate_time"] = r.gate_time;
  j["loop_count"] = r.loop_count;
  j["initial_state"] = r.initial_state;
  j["trajectory"] = json{{"file", trajectory_file}, {"samples", r.trajectory.samples.size()},
                         {"dim", r.trajectory.dim()}};
  j["population_transfer"] = r.population_transfer;
  j["leakage"] = opt(r.leakage);
  j["gamma_loop"] = opt(r.gamma_loop);
  j["conditional_phase"] = opt(r.conditional_phase);
  j["sector_phase"] = opt(r.sector_phase);
  j["product_state_fidelity"] = opt(r.product_state_fidelity);
  j["ground_phase"] = opt(r.ground_phase);
  j["warnings"] = r.warnings;
  return j;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  std::vector<char> chunk(1 << 16);
  while (in) {
    in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), chunk.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw Error("sha256 final failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const ModelError*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  return 1;
}

std::string version() { return QDGEO_VERSION; }

int cmd_run(const RunRequest& req, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Experiment ex = load_experiment(load_with_overrides(req));
    const gates::GateReport report = execute(ex);
    json files = write_outputs(ex, report, req.out_dir);
    json manifest{{"tool", "qdsim"},       {"version", version()},
                  {"command", "run"},      {"config_file", req.config.string()},
                  {"config", config_json(ex.config)}, {"runtime_s", seconds_since(t0)},
                  {"status", "ok"},        {"outputs", std::move(files)}};
    write_text(req.out_dir / ex.output.manifest, manifest.dump(2) + "\n");
    if (!req.quiet) {
      print_summary(report, out);
      out << fmt::format("wrote {}\n", req.out_dir.string());
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_validate(const RunRequest& req, std::ostream& out, std::ostream& err) {
  try {
    const Experiment ex = load_experiment(load_with_overrides(req));
    const Validation v = validate_experiment(ex);
    if (!req.quiet) {
      for (const auto& line : v.lines) out << line << "\n";
    }
    for (const auto& w : v.warnings) out << "warning: " << w << "\n";
    if (!req.quiet) out << "OK\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

namespace {

struct PointResult {
  std::string text;
  double value = 0.0;
  fs::path dir;
  json files;
  gates::GateReport report;
  bool done = false;
};

std::vector<std::string> sweep_values(const SweepRequest& req) {
  if (!req.values.empty() && req.range) throw ConfigError("give either --values or --range, not both");
  if (!req.values.empty()) return req.values;
  if (!req.range) throw ConfigError("sweep needs --range a:b or --values");
  const auto colon = req.range->find(':');
  if (colon == std::string::npos) throw ConfigError(fmt::format("--range must look like a:b, got '{}'", *req.range));
  const double a = parse_number(req.range->substr(0, colon));
  const double b = parse_number(req.range->substr(colon + 1));
  if (req.points == 0) throw ConfigError("--points must be >= 1");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < req.points; ++i) {
    const double v = req.points == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(req.points - 1);
    out.push_back(num(v));
  }
  return out;
}

std::string cell(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

int cmd_sweep(const SweepRequest& req, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> texts;
  ConfigMap base;
  try {
    if (req.jobs == 0) throw ConfigError("--jobs must be >= 1");
    texts = sweep_values(req);
    base = load_with_overrides(req.run);
    ConfigMap probe = base;
    set_value(probe, req.parameter, texts.front());
    (void)load_experiment(probe);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }

  std::vector<PointResult> results(texts.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex failure_mutex;
  std::optional<std::size_t> failed_index;
  std::string failure_message;
  int failure_code = 0;

  auto worker = [&] {
    for (std::size_t i = next++; i < texts.size() && !abort; i = next++) {
      PointResult& pr = results[i];
      pr.text = texts[i];
      pr.dir = req.run.out_dir / fmt::format("point_{:03d}", i);
      const auto p0 = std::chrono::steady_clock::now();
      try {
        pr.value = parse_number(texts[i]);
        ConfigMap config = base;
        set_value(config, req.parameter, texts[i]);
        const Experiment ex = load_experiment(config);
        pr.report = execute(ex);
        pr.files = write_outputs(ex, pr.report, pr.dir);
        json manifest{{"tool", "qdsim"},
                      {"version", version()},
                      {"command", "sweep-point"},
                      {"config_file", req.run.config.string()},
                      {"config", config_json(ex.config)},
                      {"runtime_s", seconds_since(p0)},
                      {"status", "ok"},
                      {"outputs", pr.files}};
        write_text(pr.dir / ex.output.manifest, manifest.dump(2) + "\n");
        pr.done = true;
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failed_index) {
          failed_index = i;
          failure_message = e.what();
          failure_code = exit_code_for(e);
        }
        abort = true;
      }
    }
  };

  const std::size_t n_threads = std::min(req.jobs, texts.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Single-threaded reduction.
  try {
    fs::create_directories(req.run.out_dir);
    json points = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
      const PointResult& pr = results[i];
      if (!pr.done) continue;
      points.push_back(json{{"index", i}, {"value", pr.text}, {"dir", pr.dir.filename().string()},
                            {"outputs", pr.files}});
    }
    json manifest{{"tool", "qdsim"},
                  {"version", version()},
                  {"command", "sweep"},
                  {"config_file", req.run.config.string()},
                  {"config", config_json(base)},
                  {"parameter", req.parameter},
                  {"values", texts}};
    if (failed_index) {
      manifest["status"] = "failed";
      manifest["error"] = json{{"index", *failed_index}, {"value", texts[*failed_index]},
                               {"message", failure_message}, {"exit_code", failure_code}};
      manifest["points"] = std::move(points);
      manifest["runtime_s"] = seconds_since(t0);
      write_text(req.run.out_dir / "manifest.json", manifest.dump(2) + "\n");
      err << fmt::format("error: sweep point {} ({} = {}): {}\n", *failed_index, req.parameter, texts[*failed_index],
                         failure_message);
      return failure_code;
    }

    std::string summary = "value,fidelity,leakage,gamma_loop,transfer,gate_time\n";
    for (const auto& pr : results) {
      const auto& r = pr.report;
      summary += fmt::format("{},{},{},{},{},{}\n", num(pr.value), cell(r.fidelity), cell(r.leakage),
                             cell(r.gamma_loop), num(r.population_transfer), num(r.gate_time));
    }
    const fs::path summary_path = req.run.out_dir / "summary.csv";
    write_text(summary_path, summary);
    manifest["status"] = "ok";
    manifest["points"] = std::move(points);
    manifest["summary"] = json{{"file", "summary.csv"}, {"sha256", sha256_file(summary_path)},
                               {"bytes", fs::file_size(summary_path)}};
    manifest["runtime_s"] = seconds_since(t0);
    write_text(req.run.out_dir / "manifest.json", manifest.dump(2) + "\n");
    if (!req.run.quiet) {
      out << summary;
      out << fmt::format("wrote {} point(s) to {}\n", results.size(), req.run.out_dir.string());
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace qdgeo::cli
