#pragma once

// File formats: checkpoint JSON, training config JSON, loss history CSV and
// evaluation report JSON.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdr/error.hpp"
#include "sdr/evaluation.hpp"
#include "sdr/training.hpp"

namespace sdr {

inline constexpr int kFormatVersion = 1;

/// 17 significant digits: enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

/// Writes via a temporary sibling and rename, so readers never see a
/// partially written file.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace detail {

inline void append_array(std::string& out, const double* data, Eigen::Index n) {
  out += '[';
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i) out += ',';
    out += format_double(data[i]);
  }
  out += ']';
}

inline std::vector<double> to_vector(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline std::string checkpoint_to_json(const Checkpoint& c) {
  const MlpParams& p = c.params;
  std::string out = "{\n";
  out += "  \"format_version\": " + std::to_string(kFormatVersion) + ",\n";
  out += "  \"problem_id\": \"" + c.problem_id + "\",\n";
  out += "  \"problem_dim\": " + std::to_string(c.problem_dim) + ",\n";
  out += "  \"surrogate\": \"" + c.surrogate + "\",\n";
  out += "  \"seed\": " + std::to_string(c.seed) + ",\n";
  out += "  \"iteration\": " + std::to_string(c.iteration) + ",\n";
  out += "  \"activation\": \"tanh\",\n";
  out += "  \"layer_sizes\": [";
  for (std::size_t i = 0; i < p.layer_sizes.size(); ++i) out += (i ? "," : "") + std::to_string(p.layer_sizes[i]);
  out += "],\n  \"weights\": [";
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    out += l ? ",\n    " : "\n    ";
    // Eigen stores column-major; emit row-major.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = p.weights[l];
    detail::append_array(out, rm.data(), rm.size());
  }
  out += "],\n  \"biases\": [";
  for (std::size_t l = 0; l < p.biases.size(); ++l) {
    out += l ? ",\n    " : "\n    ";
    detail::append_array(out, p.biases[l].data(), p.biases[l].size());
  }
  out += "],\n  \"adam_t\": " + std::to_string(c.adam.t) + ",\n";
  out += "  \"adam_beta1\": " + format_double(c.adam.beta1) + ",\n";
  out += "  \"adam_beta2\": " + format_double(c.adam.beta2) + ",\n";
  out += "  \"adam_eps\": " + format_double(c.adam.eps) + ",\n";
  out += "  \"adam_m\": ";
  detail::append_array(out, c.adam.m.data(), c.adam.m.size());
  out += ",\n  \"adam_v\": ";
  detail::append_array(out, c.adam.v.data(), c.adam.v.size());
  out += "\n}\n";
  return out;
}

inline Checkpoint checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  Checkpoint c;
  try {
    c.problem_id = j.at("problem_id").get<std::string>();
    c.problem_dim = j.value("problem_dim", default_dimension(c.problem_id, 0));
    c.surrogate = j.value("surrogate", std::string("network"));
    c.seed = j.value("seed", std::uint64_t{0});
    c.iteration = j.value("iteration", 0L);
    if (j.value("activation", std::string("tanh")) != "tanh")
      throw FormatError("unsupported activation " + j.at("activation").dump());
    if (c.surrogate != "network" && c.surrogate != "exact")
      throw FormatError("unknown surrogate kind '" + c.surrogate + "'");
    if (c.surrogate == "exact") return c;

    const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    c.params = zero_params(sizes);
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() != c.params.weights.size() || biases.size() != c.params.biases.size())
      throw FormatError("checkpoint layer count does not match layer_sizes");
    for (std::size_t l = 0; l < c.params.weights.size(); ++l) {
      const auto w = weights[l].get<std::vector<double>>();
      const auto b = biases[l].get<std::vector<double>>();
      auto& W = c.params.weights[l];
      if (static_cast<Eigen::Index>(w.size()) != W.size() || static_cast<Eigen::Index>(b.size()) != c.params.biases[l].size())
        throw FormatError("checkpoint layer " + std::to_string(l) + " has the wrong number of entries");
      for (Eigen::Index r = 0; r < W.rows(); ++r)
        for (Eigen::Index k = 0; k < W.cols(); ++k) W(r, k) = w[static_cast<std::size_t>(r * W.cols() + k)];
      c.params.biases[l] = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    }
    c.params.validate();

    c.adam = AdamState(c.params.parameter_count());
    c.adam.t = j.value("adam_t", c.iteration);
    c.adam.beta1 = j.value("adam_beta1", 0.9);
    c.adam.beta2 = j.value("adam_beta2", 0.999);
    c.adam.eps = j.value("adam_eps", 1e-8);
    if (j.contains("adam_m")) {
      const auto m = detail::to_vector(j, "adam_m");
      const auto v = detail::to_vector(j, "adam_v");
      if (m.size() != c.params.parameter_count() || v.size() != c.params.parameter_count())
        throw FormatError("Adam moments do not match the parameter count");
      c.adam.m = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
      c.adam.v = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const NumericalError& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_text_atomic(path, checkpoint_to_json(c));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_text(path));
}

// ---------------------------------------------------------------------------
// Training config

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    const auto& problem = j.at("problem");
    c.problem_id = problem.at("id").get<std::string>();
    c.d = problem.value("dim", default_dimension(c.problem_id));
    c.quadrature_nodes = problem.value("quadrature_nodes", c.quadrature_nodes);
    c.layer_sizes = j.at("network").at("layer_sizes").get<std::vector<int>>();
    const auto& t = j.at("train");
    c.iterations = t.value("iterations", c.iterations);
    c.batch_size = t.value("batch_size", c.batch_size);
    c.lr_initial = t.value("lr_initial", c.lr_initial);
    c.lr_decay_factor = t.value("lr_decay_factor", c.lr_decay_factor);
    c.lr_decay_every = t.value("lr_decay_every", c.lr_decay_every);
    if (t.contains("penalty_beta")) c.penalty_beta = t.at("penalty_beta").get<double>();
    c.seed = t.value("seed", c.seed);
    c.deterministic = t.value("deterministic", c.deterministic);
    c.checkpoint_every = t.value("checkpoint_every", c.checkpoint_every);
    if (j.contains("eval")) {
      c.eval_every = j["eval"].value("every", c.eval_every);
      c.eval_samples = j["eval"].value("samples", c.eval_samples);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid config: ") + e.what());
  }
  return c;
}

inline nlohmann::json config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["problem"] = {{"id", c.problem_id}, {"dim", c.d}, {"quadrature_nodes", c.quadrature_nodes}};
  j["network"] = {{"layer_sizes", c.layer_sizes}};
  j["train"] = {{"iterations", c.iterations},         {"batch_size", c.batch_size},
                {"lr_initial", c.lr_initial},         {"lr_decay_factor", c.lr_decay_factor},
                {"lr_decay_every", c.lr_decay_every}, {"seed", c.seed},
                {"deterministic", c.deterministic},   {"checkpoint_every", c.checkpoint_every}};
  if (c.penalty_beta) j["train"]["penalty_beta"] = *c.penalty_beta;
  j["eval"] = {{"every", c.eval_every}, {"samples", c.eval_samples}};
  return j;
}

inline TrainConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return config_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Loss history CSV: iteration,loss,lr,rel_l2_error (error column empty when
// not measured).

inline std::string history_to_csv(const LossHistory& h) {
  std::string out = "iteration,loss,lr,rel_l2_error\n";
  for (const auto& r : h.records()) {
    out += std::to_string(r.iteration) + ',' + format_double(r.loss) + ',' + format_double(r.lr) + ',';
    if (r.rel_l2_error) out += format_double(*r.rel_l2_error);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const EvalReport& r) {
  return {{"format_version", kFormatVersion},
          {"problem_id", r.problem_id},
          {"n_samples", r.n_samples},
          {"rel_l2_error", r.rel_l2_error},
          {"numerator", r.numerator},
          {"numerator_se", r.numerator_se},
          {"denominator", r.denominator},
          {"denominator_se", r.denominator_se},
          {"wall_seconds", r.wall_seconds},
          {"stream_seed", r.stream_seed},
          {"stream_id", r.stream_id}};
}

}  // namespace sdr
