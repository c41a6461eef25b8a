#include "onebit/data_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace onebit {

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

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::string where(const std::filesystem::path& path, int lineno) {
  return path.string() + ":" + std::to_string(lineno) + ": ";
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

void write_observations_csv(const ObservationSet& data, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "i,j,y\n";
  for (const auto& o : data.observations()) out << o.i + 1 << ',' << o.j + 1 << ',' << o.y << '\n';
  if (!out.flush()) throw std::runtime_error("write failed for " + path.string());
}

ObservationSet read_observations_csv(const std::filesystem::path& path, int d1, int d2) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || strip(line) != "i,j,y") {
    throw std::runtime_error(path.string() + ": expected header 'i,j,y'");
  }
  ObservationSet data;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    int i = 0, j = 0, y = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(line);
    if (!(ss >> i >> c1 >> j >> c2 >> y) || c1 != ',' || c2 != ',' || !(ss >> std::ws).eof()) {
      throw std::runtime_error(where(path, lineno) + "malformed observation '" + line + "'");
    }
    if (i < 1 || j < 1 || (d1 > 0 && i > d1) || (d2 > 0 && j > d2)) {
      throw std::runtime_error(where(path, lineno) + "index out of range");
    }
    if (y != 1 && y != -1) throw std::runtime_error(where(path, lineno) + "label must be -1 or 1");
    data.add({i - 1, j - 1, y});
  }
  return data;
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << g17(m(i, j));
    out << '\n';
  }
  if (!out.flush()) throw std::runtime_error("write failed for " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(item, &used));
        if (strip(item.substr(used)).size() != 0) throw std::invalid_argument(item);
      } catch (const std::logic_error&) {
        throw std::runtime_error(where(path, lineno) + "malformed number '" + item + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error(where(path, lineno) + "ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": empty matrix file");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  return m;
}

SamplingDistribution read_pi_csv(const std::filesystem::path& path) {
  Matrix p = read_matrix_csv(path);
  try {
    return SamplingDistribution(std::move(p));
  } catch (const ContractViolation& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_chain_csv(const Chain& chain, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "sample";
  for (int i = 0; i < chain.d1; ++i)
    for (int j = 0; j < chain.d2; ++j) out << ",m_" << i + 1 << '_' << j + 1;
  out << '\n';
  for (std::size_t s = 0; s < chain.samples.size(); ++s) {
    out << s;
    const Matrix& m = chain.samples[s];
    for (int i = 0; i < chain.d1; ++i)
      for (int j = 0; j < chain.d2; ++j) out << ',' << g17(m(i, j));
    out << '\n';
  }
  if (!out.flush()) throw std::runtime_error("write failed for " + path.string());
}

void write_chain_diagnostics_json(const Chain& chain, const std::filesystem::path& path) {
  nlohmann::json j;
  j["seed"] = chain.seed;
  j["target"] = chain.target_descriptor;
  j["accept_rate"] = chain.accept_rate;
  j["steps_run"] = chain.diagnostics.steps_run;
  j["samples_kept"] = chain.samples.size();
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : chain.diagnostics.blocks) {
    blocks.push_back({{"name", b.name},
                      {"accept_rate", b.accept_rate},
                      {"final_step", b.final_step},
                      {"step_trajectory", b.step_trajectory},
                      {"nonfinite_proposals", b.nonfinite_proposals}});
  }
  j["blocks"] = blocks;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out.flush()) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace onebit
