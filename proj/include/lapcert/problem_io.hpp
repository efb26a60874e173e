#pragma once

// Problem-spec files and JSON reports.
//
// Problem spec:
//   {
//     "model": "exp1d" | {"type": "linear", "A": MATRIX} | {"type": "exp"} | {"type": "quad"},
//     "y": [..],
//     "gamma": MATRIX,        // noise covariance
//     "prior_cov": MATRIX
//   }
//   MATRIX = {"rows": r, "cols": c, "data": [row-major values]}
//
// With a built-in name, y / gamma / prior_cov are optional overrides.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lapcert/builtin_models.hpp"
#include "lapcert/hellinger_metrics.hpp"
#include "lapcert/map_laplace.hpp"

namespace lapcert::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw SpecError("'" + field + "' must be an object with rows, cols and data");
  const auto rows = j.at("rows").get<long>();
  const auto cols = j.at("cols").get<long>();
  const auto& data = j.at("data");
  if (rows < 1 || cols < 1) throw SpecError("'" + field + "': rows and cols must be positive");
  if (!data.is_array() || static_cast<long>(data.size()) != rows * cols)
    throw SpecError("'" + field + "': data must hold rows*cols = " + std::to_string(rows * cols) + " numbers");
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long k = 0; k < cols; ++k) {
      const auto& v = data[static_cast<std::size_t>(i * cols + k)];
      if (!v.is_number()) throw SpecError("'" + field + "': data entries must be numbers");
      m(i, k) = v.get<double>();
    }
  return m;
}

inline json matrix_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw SpecError("'" + field + "' must be a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw SpecError("'" + field + "' must contain numbers only");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

/// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw SpecError("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                    e.what());
  }
}

inline ForwardProblem problem_from_json(const json& j) {
  if (!j.is_object()) throw SpecError("problem spec must be a JSON object");
  if (!j.contains("model")) throw SpecError("problem spec needs a 'model' field");
  try {
    const json& model = j.at("model");
    if (model.is_string()) {
      BuiltinOptions opts;
      if (j.contains("y")) opts.y = vector_from_json(j.at("y"), "y");
      ForwardProblem base = builtin_model(model.get<std::string>(), opts);
      if (!j.contains("gamma") && !j.contains("prior_cov")) return base;
      const Matrix gamma = j.contains("gamma") ? matrix_from_json(j.at("gamma"), "gamma") : base.noise_cov();
      const Matrix prior = j.contains("prior_cov") ? matrix_from_json(j.at("prior_cov"), "prior_cov") : base.prior_cov();
      return ForwardProblem(base.model(), gamma, prior, base.data());
    }
    if (!model.is_object() || !model.contains("type"))
      throw SpecError("'model' must be a built-in name or an object with a 'type'");
    for (const char* key : {"y", "gamma", "prior_cov"})
      if (!j.contains(key)) throw SpecError(std::string("problem spec needs '") + key + "'");
    const Vector y = vector_from_json(j.at("y"), "y");
    const Matrix gamma = matrix_from_json(j.at("gamma"), "gamma");
    const Matrix prior = matrix_from_json(j.at("prior_cov"), "prior_cov");
    const std::string type = model.at("type").get<std::string>();
    if (type == "linear") {
      if (!model.contains("A")) throw SpecError("linear model needs 'A'");
      return ForwardProblem(linear_model(matrix_from_json(model.at("A"), "A")), gamma, prior, y);
    }
    if (type == "exp") return ForwardProblem(exp_model(prior.rows()), gamma, prior, y);
    if (type == "quad") return ForwardProblem(quad_model(prior.rows()), gamma, prior, y);
    throw SpecError("unknown model type '" + type + "'");
  } catch (const json::exception& e) {
    throw SpecError(std::string("problem spec: ") + e.what());
  } catch (const UnknownModel& e) {
    throw SpecError(e.what());
  } catch (const DimensionMismatch& e) {
    throw SpecError(std::string("problem spec: ") + e.what());
  } catch (const NotPositiveDefinite& e) {
    throw SpecError(std::string("problem spec: ") + e.what());
  } catch (const NotSymmetric& e) {
    throw SpecError(std::string("problem spec: ") + e.what());
  }
}

inline ForwardProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open problem spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return problem_from_json(parse_json_text(ss.str()));
}

inline json engine_to_json(const IntegrationEngine& e) {
  json j{{"kind", to_string(e.kind())}};
  if (e.kind() == EngineKind::GaussHermite) {
    j["order"] = e.order();
  } else {
    j["samples"] = e.samples();
    j["seed"] = e.seed();
  }
  return j;
}

inline json map_to_json(const MapResult& r) {
  return json{{"u_map", vector_to_json(r.u_map)},
              {"i_at_map", r.i_at_map},
              {"iterations", r.iterations},
              {"grad_norm", r.grad_norm},
              {"converged", r.converged},
              {"hess_i_at_map", matrix_to_json(r.hess_i_at_map.matrix())},
              {"hess_phi_at_map", matrix_to_json(r.hess_phi_at_map.matrix())},
              {"multistart",
               {{"runs", r.multistart.runs},
                {"converged_runs", r.multistart.converged_runs},
                {"objective_spread", r.multistart.objective_spread},
                {"disagreement", r.multistart.disagreement}}}};
}

inline json certificate_to_json(const BoundCertificate& c) {
  return json{{"K", c.k_value}, {"bound", c.hellinger_bound}, {"valid", c.valid}, {"lhs", c.lhs}, {"rhs", c.rhs}};
}

/// Tightness ratio bound / d_H; null when d_H is zero.
inline json tightness(double bound, double d_h) { return d_h > 0.0 ? json(bound / d_h) : json(nullptr); }

inline json certification_to_json(const CertificationReport& c) {
  return json{{"d_hellinger", c.hellinger.distance},
              {"d_hellinger_stderr", c.hellinger.standard_error},
              {"prop61", certificate_to_json(c.prop61)},
              {"cor63", certificate_to_json(c.cor63)},
              {"tightness",
               {{"prop61", tightness(c.prop61.hellinger_bound, c.hellinger.distance)},
                {"cor63", tightness(c.cor63.hellinger_bound, c.hellinger.distance)}}},
              {"log_det_hess_i", c.integrals.log_det_hess_i},
              {"log_det_identity_plus", c.integrals.log_det_identity_plus}};
}

}  // namespace lapcert::io
