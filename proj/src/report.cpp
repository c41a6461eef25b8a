#include "onebit/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace onebit {

const char* const kRunsCsvHeader =
    "config_digest,seed,n,d1,d2,r,alpha,prior,epsilon_n,frob_sq_mean_est,post_avg_frob_sq,"
    "post_avg_hellinger,post_avg_renyi,thr_renyi,thr_hellinger,thr_frobenius,prob_floor,"
    "accept_rate";

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

double threshold_of(const RunResult& r, BoundSide side) {
  const auto it = r.thresholds.find(side);
  return it == r.thresholds.end() ? 0.0 : it->second;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

nlohmann::json check_json(const BoundCheckResult& c) {
  nlohmann::json j;
  j["side"] = to_string(c.side);
  j["epsilon_n"] = c.epsilon_n;
  j["threshold"] = c.threshold;
  // JSON has no infinities; a vacuous floor is written as null.
  j["probability_floor"] = std::isfinite(c.probability_floor)
                               ? nlohmann::json(c.probability_floor)
                               : nlohmann::json(nullptr);
  j["empirical_fraction"] = c.empirical_fraction;
  j["trivially_satisfied"] = c.trivially_satisfied;
  j["pass"] = c.pass;
  return j;
}

}  // namespace

void write_runs_csv(const std::vector<RunResult>& runs, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kRunsCsvHeader << '\n';
  for (const auto& r : runs) {
    out << r.config_digest << ',' << r.seed << ',' << r.n << ',' << r.d1 << ',' << r.d2 << ','
        << r.r << ',' << g17(r.alpha) << ',' << r.prior << ',' << g17(r.epsilon_n) << ','
        << g17(r.frob_sq_mean_est) << ',' << g17(r.post_avg_frob_sq.value) << ','
        << g17(r.post_avg_hellinger.value) << ',' << g17(r.post_avg_renyi.value) << ','
        << g17(threshold_of(r, BoundSide::RenyiTheorem)) << ','
        << g17(threshold_of(r, BoundSide::HellingerCorollary)) << ','
        << g17(threshold_of(r, BoundSide::FrobeniusTheorem)) << ',' << g17(r.prob_floor) << ','
        << g17(r.accept_rate) << '\n';
  }
  finish(out, path);
}

std::vector<RunResult> read_runs_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRunsCsvHeader) {
    throw std::runtime_error(path.string() + ": header does not match the runs.csv schema");
  }
  std::vector<RunResult> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 18) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected 18 fields");
    }
    try {
      RunResult r;
      r.config_digest = f[0];
      r.seed = std::stoull(f[1]);
      r.n = std::stol(f[2]);
      r.d1 = std::stoi(f[3]);
      r.d2 = std::stoi(f[4]);
      r.r = std::stoi(f[5]);
      r.alpha = std::stod(f[6]);
      r.prior = f[7];
      r.epsilon_n = std::stod(f[8]);
      r.frob_sq_mean_est = std::stod(f[9]);
      r.post_avg_frob_sq.value = std::stod(f[10]);
      r.post_avg_hellinger.value = std::stod(f[11]);
      r.post_avg_renyi.value = std::stod(f[12]);
      r.thresholds[BoundSide::RenyiTheorem] = std::stod(f[13]);
      r.thresholds[BoundSide::HellingerCorollary] = std::stod(f[14]);
      r.thresholds[BoundSide::FrobeniusTheorem] = std::stod(f[15]);
      r.prob_floor = std::stod(f[16]);
      r.accept_rate = std::stod(f[17]);
      const double tf = r.thresholds[BoundSide::FrobeniusTheorem];
      r.constants.C1 = tf > 0.0 ? r.thresholds[BoundSide::HellingerCorollary] / tf : 1.0;
      r.constants.C_kappa = 1.0;
      r.jensen_ok = true;
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": malformed field");
    }
  }
  return rows;
}

std::string summary_json(const SweepReport& report) {
  nlohmann::json j;
  j["runs"] = report.rows.size();
  j["monotone_inversions"] = report.monotone_inversions;

  nlohmann::json slopes = nlohmann::json::object();
  for (const auto& [name, s] : report.slope_estimates) {
    slopes[name] = {{"slope", s.slope}, {"stderr", s.stderr_}, {"intercept", s.intercept},
                    {"points", s.points}};
  }
  j["slopes"] = slopes;

  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : report.points) {
    nlohmann::json pj;
    pj["axis"] = p.axis;
    pj["n"] = p.n;
    pj["r"] = p.r;
    pj["median_post_avg_frob_sq"] = p.median_post_avg_frob_sq;
    pj["median_frob_sq_mean_est"] = p.median_frob_sq_mean_est;
    pj["median_post_avg_hellinger"] = p.median_post_avg_hellinger;
    pj["median_post_avg_renyi"] = p.median_post_avg_renyi;
    pj["epsilon_n"] = p.epsilon_n;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : p.checks) checks.push_back(check_json(c));
    pj["checks"] = checks;
    points.push_back(pj);
  }
  j["points"] = points;

  // Pointwise checks are only known for runs evaluated in this process.
  long runs_checked = 0, samples = 0, transfer = 0, sandwich = 0, jensen = 0;
  for (const auto& r : report.rows) {
    if (r.transfer_samples_checked == 0) continue;
    ++runs_checked;
    samples += r.transfer_samples_checked;
    transfer += r.transfer_violations;
    sandwich += r.sandwich_violations;
    if (!r.jensen_ok) ++jensen;
  }
  j["pointwise_checks"] = {{"runs_checked", runs_checked},
                           {"samples_checked", samples},
                           {"transfer_violations", transfer},
                           {"sandwich_violations", sandwich},
                           {"jensen_violations", jensen}};
  return j.dump(2) + "\n";
}

void emit_report(const SweepReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  write_runs_csv(report.rows, dir / "runs.csv");
  const auto path = dir / "summary.json";
  auto out = open_out(path);
  out << summary_json(report);
  finish(out, path);
}

}  // namespace onebit
