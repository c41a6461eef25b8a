#include "onebit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "onebit/bounds.hpp"
#include "onebit/digest.hpp"

namespace onebit {

const char* to_string(PriorFamily f) {
  switch (f) {
    case PriorFamily::Student:
      return "student";
    case PriorFamily::FactorGamma:
      return "factor-gamma";
    case PriorFamily::FactorInverseGamma:
      return "factor-inverse-gamma";
  }
  return "unknown";
}

PriorFamily parse_prior_family(const std::string& s) {
  if (s == "student") return PriorFamily::Student;
  if (s == "factor-gamma") return PriorFamily::FactorGamma;
  if (s == "factor-inverse-gamma") return PriorFamily::FactorInverseGamma;
  throw ContractViolation("unknown prior family '" + s + "'");
}

void ExperimentConfig::validate() const {
  require(d1 >= 1 && d2 >= 1, "dimensions must be positive");
  require(r >= 0 && r <= std::min(d1, d2), "rank must lie in [0, min(d1, d2)]");
  require(n >= 1, "n must be at least 1");
  require(B > 0.0, "B must be positive");
  require(!kappa || *kappa >= 0.0, "kappa must be nonnegative");
  FractionalExponent{alpha};
  require(replications >= 1, "replications must be at least 1");
  require(workers >= 1, "workers must be at least 1");
  require(pi.kind == PiKind::Uniform || pi.strength >= 1.0, "tilt strength must be >= 1");
  require(!prior.tau || *prior.tau > 0.0, "tau must be positive");
  require(!prior.K || *prior.K >= 1, "K must be at least 1");
  require(prior.K_cap >= 1, "K cap must be at least 1");
  require(prior.a > 0.0, "a must be positive");
  require(!prior.b || *prior.b > 0.0, "b must be positive");
  mala.validate();
}

double ExperimentConfig::resolved_tau() const { return prior.tau ? *prior.tau : 1.0 / double(n); }

int ExperimentConfig::resolved_K() const {
  return prior.K ? *prior.K : std::min({d1, d2, prior.K_cap});
}

double ExperimentConfig::resolved_b() const {
  return prior.b ? *prior.b : b_default(n, d1, d2, resolved_K(), B);
}

StudentPriorConfig ExperimentConfig::student_prior() const { return {resolved_tau()}; }

FactorPriorConfig ExperimentConfig::factor_prior() const {
  FactorPriorConfig f;
  f.K = resolved_K();
  f.a = prior.a;
  f.b = resolved_b();
  f.family = prior.family == PriorFamily::FactorGamma ? VarianceFamily::Gamma
                                                      : VarianceFamily::InverseGamma;
  return f;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ContractViolation("config key '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ContractViolation("config key '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ContractViolation("config key '" + key + "' expects an unsigned integer, got '" + v +
                            "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ContractViolation("config key '" + key + "' expects true/false, got '" + v + "'");
}

template <typename T, typename Parse>
std::vector<T> to_list(const std::string& v, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t k = 0; k < xs.size(); ++k) os << (k ? "," : "") << xs[k];
  return os.str();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::optional<int> burn_in;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ContractViolation("config line " + std::to_string(lineno) + " has no '='");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string v = trim(t.substr(eq + 1));
    const bool is_auto = v == "auto";

    if (key == "experiment.d1") c.d1 = int(to_long(key, v));
    else if (key == "experiment.d2") c.d2 = int(to_long(key, v));
    else if (key == "experiment.r") c.r = int(to_long(key, v));
    else if (key == "experiment.n") c.n = to_long(key, v);
    else if (key == "experiment.alpha") c.alpha = to_double(key, v);
    else if (key == "experiment.B") c.B = to_double(key, v);
    else if (key == "experiment.kappa") c.kappa = is_auto ? std::nullopt : std::optional(to_double(key, v));
    else if (key == "experiment.replications") c.replications = int(to_long(key, v));
    else if (key == "experiment.master_seed") c.master_seed = to_u64(key, v);
    else if (key == "experiment.workers") c.workers = int(to_long(key, v));
    else if (key == "prior.family") c.prior.family = parse_prior_family(v);
    else if (key == "prior.tau") c.prior.tau = is_auto ? std::nullopt : std::optional(to_double(key, v));
    else if (key == "prior.kernel") {
      if (v == "scale-mixture") c.prior.kernel = StudentKernel::ScaleMixture;
      else if (v == "full-mala") c.prior.kernel = StudentKernel::FullMala;
      else throw ContractViolation("unknown Student kernel '" + v + "'");
    }
    else if (key == "prior.K") c.prior.K = is_auto ? std::nullopt : std::optional(int(to_long(key, v)));
    else if (key == "prior.K_cap") c.prior.K_cap = int(to_long(key, v));
    else if (key == "prior.a") c.prior.a = to_double(key, v);
    else if (key == "prior.b") c.prior.b = is_auto ? std::nullopt : std::optional(to_double(key, v));
    else if (key == "sampling.pi") {
      if (v == "uniform") c.pi.kind = PiKind::Uniform;
      else if (v == "tilted") c.pi.kind = PiKind::Tilted;
      else throw ContractViolation("unknown sampling.pi '" + v + "'");
    }
    else if (key == "sampling.strength") c.pi.strength = to_double(key, v);
    else if (key == "mala.step_size") c.mala.step_size = to_double(key, v);
    else if (key == "mala.n_steps") c.mala.n_steps = int(to_long(key, v));
    else if (key == "mala.burn_in") burn_in = is_auto ? std::nullopt : std::optional(int(to_long(key, v)));
    else if (key == "mala.thin") c.mala.thin = int(to_long(key, v));
    else if (key == "mala.adapt") c.mala.adapt = to_bool(key, v);
    else if (key == "mala.unadjusted") c.mala.unadjusted = to_bool(key, v);
    else if (key == "sweep.n_grid") c.n_grid = to_list<long>(v, [&](const std::string& s) { return to_long(key, s); });
    else if (key == "sweep.r_grid") c.r_grid = to_list<int>(v, [&](const std::string& s) { return int(to_long(key, s)); });
    else if (key == "sweep.r_fixed_n") c.r_fixed_n = to_long(key, v);
    else throw ContractViolation("unknown config key '" + key + "'");
  }
  c.mala.burn_in = burn_in ? *burn_in : c.mala.n_steps / 5;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string serialize(const ExperimentConfig& c, bool with_run_identity) {
  std::ostringstream os;
  auto opt = [](const auto& o) { return o ? fmt(double(*o)) : std::string("auto"); };
  os << "experiment.d1 = " << c.d1 << '\n'
     << "experiment.d2 = " << c.d2 << '\n'
     << "experiment.r = " << c.r << '\n'
     << "experiment.n = " << c.n << '\n'
     << "experiment.alpha = " << fmt(c.alpha) << '\n'
     << "experiment.B = " << fmt(c.B) << '\n'
     << "experiment.kappa = " << opt(c.kappa) << '\n'
     << "experiment.replications = " << c.replications << '\n';
  if (with_run_identity) {
    os << "experiment.master_seed = " << c.master_seed << '\n'
       << "experiment.workers = " << c.workers << '\n';
  }
  os << "prior.family = " << to_string(c.prior.family) << '\n'
     << "prior.tau = " << opt(c.prior.tau) << '\n'
     << "prior.kernel = "
     << (c.prior.kernel == StudentKernel::ScaleMixture ? "scale-mixture" : "full-mala") << '\n'
     << "prior.K = " << opt(c.prior.K) << '\n'
     << "prior.K_cap = " << c.prior.K_cap << '\n'
     << "prior.a = " << fmt(c.prior.a) << '\n'
     << "prior.b = " << opt(c.prior.b) << '\n'
     << "sampling.pi = " << (c.pi.kind == PiKind::Uniform ? "uniform" : "tilted") << '\n'
     << "sampling.strength = " << fmt(c.pi.strength) << '\n'
     << "mala.step_size = " << fmt(c.mala.step_size) << '\n'
     << "mala.n_steps = " << c.mala.n_steps << '\n'
     << "mala.burn_in = " << c.mala.burn_in << '\n'
     << "mala.thin = " << c.mala.thin << '\n'
     << "mala.adapt = " << (c.mala.adapt ? "true" : "false") << '\n'
     << "mala.unadjusted = " << (c.mala.unadjusted ? "true" : "false") << '\n'
     << "sweep.n_grid = " << join(c.n_grid) << '\n'
     << "sweep.r_grid = " << join(c.r_grid) << '\n'
     << "sweep.r_fixed_n = " << c.r_fixed_n << '\n';
  return os.str();
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) { return serialize(cfg, true); }

std::string config_digest(const ExperimentConfig& cfg) {
  Fnv1a h;
  h.text(serialize(cfg, false));
  return h.hex();
}

std::uint64_t split_seed(std::uint64_t master_seed, std::uint64_t index) {
  return master_seed * 10007ULL + index;
}

}  // namespace onebit
