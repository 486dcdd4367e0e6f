#include "gpmix/trace_io.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace gpmix {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) out.push_back(vector_to_json(m.row(i)));
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j, int cols_hint) {
  const int rows = static_cast<int>(j.size());
  Eigen::MatrixXd m(rows, rows > 0 ? static_cast<int>(j[0].size()) : cols_hint);
  for (int i = 0; i < rows; ++i) m.row(i) = vector_from_json(j[i]);
  return m;
}

json hyper_to_json(const ExpertHyper& h) {
  return json{{"s2", h.output_scale}, {"l", vector_to_json(h.length_scales)}, {"t2", h.noise_var}};
}

ExpertHyper hyper_from_json(const json& j) {
  ExpertHyper h;
  h.output_scale = j.at("s2").get<double>();
  h.length_scales = vector_from_json(j.at("l"));
  h.noise_var = j.at("t2").get<double>();
  return h;
}

}  // namespace

void write_trace(const ChainTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);

  json header{{"format", "gpmix-trace"},
              {"version", 1},
              {"model", trace.model},
              {"dataset", trace.dataset_name},
              {"seed", trace.seed},
              {"iterations", trace.total_iterations},
              {"burn_in", trace.burn_in},
              {"thin", trace.thin},
              {"X", matrix_to_json(trace.X)},
              {"y", vector_to_json(trace.y)},
              {"x_min", vector_to_json(trace.transform.x_min)},
              {"x_max", vector_to_json(trace.transform.x_max)},
              {"y_mean", trace.transform.y_mean},
              {"y_sd", trace.transform.y_sd}};
  if (trace.fixed_noise_var) header["fixed_noise_var"] = *trace.fixed_noise_var;
  out << header.dump() << "\n";

  const bool is_rg = trace.model == "rg";
  for (const auto& rec : trace.records) {
    json j{{"iter", rec.iter}, {"r", rec.r}, {"istar", rec.truncation_level}};
    if (is_rg) {
      j["rg_beta"] = rec.rg_beta;
    } else {
      j["alpha"] = rec.alpha;
      j["beta"] = rec.beta_count;
      j["v"] = rec.v;
      json hs = json::array();
      for (const auto& h : rec.h) hs.push_back(vector_to_json(h));
      j["h"] = hs;
    }
    json experts = json::array();
    for (const auto& e : rec.experts) experts.push_back(hyper_to_json(e));
    j["experts"] = experts;
    j["s"] = rec.s;
    out << j.dump() << "\n";
  }
}

ChainTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  ChainTrace trace;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  bool is_rg = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!have_header) {
        if (j.at("format").get<std::string>() != "gpmix-trace") {
          throw std::runtime_error("unrecognized trace format");
        }
        trace.model = j.at("model").get<std::string>();
        is_rg = trace.model == "rg";
        trace.dataset_name = j.value("dataset", "");
        trace.seed = j.value("seed", 0ULL);
        trace.total_iterations = j.at("iterations").get<int>();
        trace.burn_in = j.at("burn_in").get<int>();
        trace.thin = j.at("thin").get<int>();
        if (j.contains("fixed_noise_var")) {
          trace.fixed_noise_var = j["fixed_noise_var"].get<double>();
        }
        trace.X = matrix_from_json(j.at("X"), 0);
        trace.y = vector_from_json(j.at("y"));
        trace.transform.x_min = vector_from_json(j.at("x_min"));
        trace.transform.x_max = vector_from_json(j.at("x_max"));
        trace.transform.y_mean = j.at("y_mean").get<double>();
        trace.transform.y_sd = j.at("y_sd").get<double>();
        have_header = true;
        continue;
      }
      TraceRecord rec;
      rec.iter = j.at("iter").get<int>();
      rec.r = j.at("r").get<double>();
      rec.truncation_level = j.at("istar").get<int>();
      if (is_rg) {
        rec.rg_beta = j.at("rg_beta").get<double>();
      } else {
        rec.alpha = j.at("alpha").get<int>();
        rec.beta_count = j.at("beta").get<int>();
        rec.v = j.at("v").get<std::vector<double>>();
        for (const auto& h : j.at("h")) rec.h.push_back(vector_from_json(h));
      }
      for (const auto& e : j.at("experts")) rec.experts.push_back(hyper_from_json(e));
      rec.s = j.at("s").get<std::vector<int>>();
      trace.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw std::runtime_error(path + ": missing trace header");
  return trace;
}

}  // namespace gpmix
