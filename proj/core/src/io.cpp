#include "matchq/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace matchq {

using nlohmann::json;

Params params_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("parameter JSON: ") + err.what());
  }
  Params p;
  try {
    p.lambda1 = doc.at("lambda1").get<double>();
    p.lambda2 = doc.at("lambda2").get<double>();
    p.theta1 = doc.at("theta1").get<double>();
    p.theta2 = doc.at("theta2").get<double>();
    p.m = doc.at("m").get<int>();
    p.n = doc.at("n").get<int>();
  } catch (const json::exception& err) {
    throw std::invalid_argument(std::string("parameter JSON: ") + err.what());
  }
  p.validate();
  return p;
}

Params load_params_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open parameter file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return params_from_json_text(buffer.str());
}

std::string params_to_json_text(const Params& p) {
  json doc;
  doc["lambda1"] = p.lambda1;
  doc["lambda2"] = p.lambda2;
  doc["theta1"] = p.theta1;
  doc["theta2"] = p.theta2;
  doc["m"] = p.m;
  doc["n"] = p.n;
  return doc.dump(2);
}

std::vector<std::string> window_state_labels(const Params& p, std::int64_t k_neg,
                                             std::int64_t k_pos) {
  std::vector<std::string> labels;
  labels.reserve((k_neg + k_pos + 1) * p.phase_count());
  for (std::int64_t level = -k_neg; level <= k_pos; ++level)
    for (int phase = 0; phase < p.phase_count(); ++phase) {
      const StateCoords s = to_coords({level, phase}, p);
      labels.push_back("(" + std::to_string(s.i) + "," + std::to_string(s.j) + ")");
    }
  return labels;
}

std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != m.cols())
    throw std::invalid_argument("matrix_to_csv: label count mismatch");
  std::ostringstream out;
  out.precision(17);
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (c) out << ',';
    out << labels[c];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace matchq
