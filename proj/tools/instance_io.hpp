#pragma once

// JSON serialization of generated instances ("format_version": 1, matrices
// row-major as {"rows", "cols", "data"}) and shortest round-trip number
// formatting for CSV output.

#include "ialm/problems.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>

namespace ialm::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const json& j, const std::string& name) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw std::invalid_argument("matrix '" + name + "' needs rows, cols and data");
  }
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() ||
      data.size() != static_cast<std::size_t>(rows * cols)) {
    throw std::invalid_argument("matrix '" + name + "' has inconsistent shape");
  }
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Index i = 0; i < rows; ++i) {
    for (Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[k++].get<double>();
  }
  return m;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Vector vector_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw std::invalid_argument("vector '" + name + "' must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

inline json to_json(const LcqpInstance& inst) {
  return {{"format_version", kFormatVersion},
          {"kind", "lcqp"},
          {"m", inst.m},
          {"n", inst.n},
          {"rho", inst.rho},
          {"seed", inst.seed},
          {"q", matrix_to_json(inst.q)},
          {"c", vector_to_json(inst.c)},
          {"a", matrix_to_json(inst.a)},
          {"b", vector_to_json(inst.b)},
          {"lower", vector_to_json(inst.lower)},
          {"upper", vector_to_json(inst.upper)},
          {"x_hat", vector_to_json(inst.x_hat)}};
}

inline json to_json(const EvInstance& inst) {
  return {{"format_version", kFormatVersion},
          {"kind", "ev"},
          {"n", inst.n},
          {"seed", inst.seed},
          {"q", matrix_to_json(inst.q)},
          {"b", matrix_to_json(inst.b)},
          {"x0", vector_to_json(inst.x0)}};
}

inline json to_json(const ClusteringInstance& inst) {
  return {{"format_version", kFormatVersion},
          {"kind", "cluster"},
          {"r", inst.r},
          {"s", inst.s},
          {"d", matrix_to_json(inst.d)}};
}

inline void check_version(const json& j) {
  if (!j.contains("format_version") || j.at("format_version").get<int>() != kFormatVersion) {
    throw std::invalid_argument("unsupported or missing format_version (expected 1)");
  }
}

inline LcqpInstance lcqp_from_json(const json& j) {
  check_version(j);
  LcqpInstance inst;
  inst.q = matrix_from_json(j.at("q"), "q");
  inst.c = vector_from_json(j.at("c"), "c");
  inst.a = matrix_from_json(j.at("a"), "a");
  inst.b = vector_from_json(j.at("b"), "b");
  inst.lower = vector_from_json(j.at("lower"), "lower");
  inst.upper = vector_from_json(j.at("upper"), "upper");
  if (j.contains("x_hat")) inst.x_hat = vector_from_json(j.at("x_hat"), "x_hat");
  inst.m = inst.a.rows();
  inst.n = inst.a.cols();
  inst.rho = j.at("rho").get<double>();
  inst.seed = j.value("seed", std::uint64_t{0});
  const Index n = inst.n;
  if (inst.q.rows() != n || inst.q.cols() != n || inst.c.size() != n || inst.b.size() != inst.m ||
      inst.lower.size() != n || inst.upper.size() != n) {
    throw std::invalid_argument("lcqp instance has inconsistent dimensions");
  }
  if (!(inst.rho > 0.0)) throw std::invalid_argument("lcqp instance needs rho > 0");
  return inst;
}

inline EvInstance ev_from_json(const json& j) {
  check_version(j);
  EvInstance inst;
  inst.q = matrix_from_json(j.at("q"), "q");
  inst.b = matrix_from_json(j.at("b"), "b");
  inst.x0 = vector_from_json(j.at("x0"), "x0");
  inst.n = inst.q.rows();
  inst.seed = j.value("seed", std::uint64_t{0});
  if (inst.q.cols() != inst.n || inst.b.rows() != inst.n || inst.b.cols() != inst.n ||
      inst.x0.size() != inst.n) {
    throw std::invalid_argument("ev instance has inconsistent dimensions");
  }
  const Vector q_eig = detail::symmetric_eigenvalues(inst.q);
  inst.q_lambda_min = q_eig[0];
  inst.q_norm = std::max(std::abs(q_eig[0]), std::abs(q_eig[inst.n - 1]));
  inst.b_norm = detail::symmetric_norm(inst.b);
  return inst;
}

inline ClusteringInstance clustering_from_json(const json& j) {
  check_version(j);
  ClusteringInstance inst;
  inst.d = matrix_from_json(j.at("d"), "d");
  inst.r = j.at("r").get<Index>();
  inst.s = j.at("s").get<double>();
  if (inst.d.rows() != inst.d.cols() || inst.d.rows() < 2 || inst.r < 1 || !(inst.s > 0.0)) {
    throw std::invalid_argument("cluster instance has invalid d, r or s");
  }
  const Vector ev = detail::symmetric_eigenvalues(inst.d);
  inst.d_lambda_min = ev[0];
  inst.d_norm = std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
  return inst;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ialm::io
