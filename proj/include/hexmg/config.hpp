#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hexmg/errors.hpp"
#include "hexmg/material.hpp"
#include "hexmg/mesh.hpp"

namespace hexmg {

enum class SolverKind { NewtonCg, Lbfgs };

/// One (order, refinement) study case, parsed from "PxR" tokens.
struct StudyCase {
  int order = 1;
  int refinement = 1;

  std::string id() const {
    return "p" + std::to_string(order) + "r" + std::to_string(refinement);
  }
  bool operator==(const StudyCase&) const = default;
};

/// Flat key-value problem description; every field has a default and unknown
/// keys are rejected at parse time.
struct ProblemConfig {
  std::string case_id = "case";

  // Geometry.
  std::array<double, 3> extents{1.0, 1.0, 1.0};
  std::array<int, 3> cells{1, 1, 1};
  int order = 2;
  int geometry_order = 0;     // 0: same as `order`
  int quadrature_points = 0;  // 0: order + 1

  // Material: Young/Poisson unless mu is set explicitly.
  double youngs_modulus = 1.0;
  double poisson_ratio = 0.3;
  double mu = 0.0;
  double lambda = 0.0;
  JacobianStorage storage = JacobianStorage::Current;

  // Loading.
  std::vector<Face> fixed_faces{Face::XMinus};
  std::string traction_face = "none";
  std::array<double, 3> traction{0.0, 0.0, 0.0};
  std::array<double, 3> body_force{0.0, 0.0, 0.0};

  // Solver.
  SolverKind solver = SolverKind::NewtonCg;
  int load_steps = 1;
  double newton_rtol = 1e-8;
  double newton_atol = 1e-10;
  int newton_max_iterations = 50;
  double linear_rtol = 1e-3;
  int linear_max_iterations = 500;
  bool line_search = true;
  int lbfgs_memory = 5;
  int precond_refresh = 10;
  int mg_pre_smooth = 1;
  int mg_post_smooth = 1;

  // Execution & output.
  int threads = 1;
  bool deterministic = false;
  bool write_vtk = false;

  // Accuracy study.
  std::vector<StudyCase> study_cases;
  StudyCase study_reference{3, 3};

  // Performance study.
  std::vector<int> perf_orders{1, 2, 3};
  std::vector<long> perf_target_dofs{3000, 20000};
  std::vector<std::string> perf_representations{"matrix-free", "assembled"};
  int perf_repeats = 20;

  NeoHookean material() const {
    if (mu != 0.0) return make_neo_hookean(mu, lambda);
    return lame_from_young_poisson(youngs_modulus, poisson_ratio);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, int line, const std::string& key) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw ConfigError("expected a number, got '" + v + "'", line, key);
  }
}

inline int parse_int(const std::string& v, int line, const std::string& key) {
  try {
    size_t pos = 0;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw ConfigError("expected an integer, got '" + v + "'", line, key);
  }
}

inline bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected a boolean, got '" + v + "'", line, key);
}

inline Face parse_face(const std::string& v, int line, const std::string& key) {
  if (v == "-x") return Face::XMinus;
  if (v == "+x") return Face::XPlus;
  if (v == "-y") return Face::YMinus;
  if (v == "+y") return Face::YPlus;
  if (v == "-z") return Face::ZMinus;
  if (v == "+z") return Face::ZPlus;
  throw ConfigError("expected a face (+x -x +y -y +z -z), got '" + v + "'", line, key);
}

inline std::vector<std::string> split_ws(const std::string& v) {
  std::istringstream is(v);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline StudyCase parse_case(const std::string& tok, int line, const std::string& key) {
  size_t x = tok.find('x');
  if (x == std::string::npos)
    throw ConfigError("expected ORDERxREFINEMENT, got '" + tok + "'", line, key);
  StudyCase c;
  c.order = parse_int(tok.substr(0, x), line, key);
  c.refinement = parse_int(tok.substr(x + 1), line, key);
  if (c.order < 1 || c.refinement < 1)
    throw ConfigError("case '" + tok + "' must have order and refinement >= 1", line, key);
  return c;
}

}  // namespace detail

inline ProblemConfig parse_problem_config(std::istream& in) {
  ProblemConfig cfg;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", line_no, line);
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);

    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_int;

    if (key == "case_id") cfg.case_id = value;
    else if (key == "length_x") cfg.extents[0] = parse_double(value, line_no, key);
    else if (key == "length_y") cfg.extents[1] = parse_double(value, line_no, key);
    else if (key == "length_z") cfg.extents[2] = parse_double(value, line_no, key);
    else if (key == "cells_x") cfg.cells[0] = parse_int(value, line_no, key);
    else if (key == "cells_y") cfg.cells[1] = parse_int(value, line_no, key);
    else if (key == "cells_z") cfg.cells[2] = parse_int(value, line_no, key);
    else if (key == "order") cfg.order = parse_int(value, line_no, key);
    else if (key == "geometry_order") cfg.geometry_order = parse_int(value, line_no, key);
    else if (key == "quadrature_points") cfg.quadrature_points = parse_int(value, line_no, key);
    else if (key == "youngs_modulus") cfg.youngs_modulus = parse_double(value, line_no, key);
    else if (key == "poisson_ratio") cfg.poisson_ratio = parse_double(value, line_no, key);
    else if (key == "mu") cfg.mu = parse_double(value, line_no, key);
    else if (key == "lambda") cfg.lambda = parse_double(value, line_no, key);
    else if (key == "jacobian_storage") {
      if (value == "current") cfg.storage = JacobianStorage::Current;
      else if (value == "initial-native") cfg.storage = JacobianStorage::InitialNative;
      else if (value == "initial-tuned") cfg.storage = JacobianStorage::InitialTuned;
      else if (value == "initial-ad") cfg.storage = JacobianStorage::InitialAD;
      else throw ConfigError("unknown jacobian storage '" + value + "'", line_no, key);
    } else if (key == "fixed_faces") {
      cfg.fixed_faces.clear();
      for (const auto& tok : detail::split_ws(value))
        cfg.fixed_faces.push_back(detail::parse_face(tok, line_no, key));
    } else if (key == "traction_face") {
      if (value != "none") detail::parse_face(value, line_no, key);
      cfg.traction_face = value;
    }
    else if (key == "traction_x") cfg.traction[0] = parse_double(value, line_no, key);
    else if (key == "traction_y") cfg.traction[1] = parse_double(value, line_no, key);
    else if (key == "traction_z") cfg.traction[2] = parse_double(value, line_no, key);
    else if (key == "body_force_x") cfg.body_force[0] = parse_double(value, line_no, key);
    else if (key == "body_force_y") cfg.body_force[1] = parse_double(value, line_no, key);
    else if (key == "body_force_z") cfg.body_force[2] = parse_double(value, line_no, key);
    else if (key == "solver") {
      if (value == "newton-cg") cfg.solver = SolverKind::NewtonCg;
      else if (value == "lbfgs") cfg.solver = SolverKind::Lbfgs;
      else throw ConfigError("unknown solver '" + value + "'", line_no, key);
    }
    else if (key == "load_steps") cfg.load_steps = parse_int(value, line_no, key);
    else if (key == "newton_rtol") cfg.newton_rtol = parse_double(value, line_no, key);
    else if (key == "newton_atol") cfg.newton_atol = parse_double(value, line_no, key);
    else if (key == "newton_max_iterations")
      cfg.newton_max_iterations = parse_int(value, line_no, key);
    else if (key == "linear_rtol") cfg.linear_rtol = parse_double(value, line_no, key);
    else if (key == "linear_max_iterations")
      cfg.linear_max_iterations = parse_int(value, line_no, key);
    else if (key == "line_search") {
      if (value == "critical-point") cfg.line_search = true;
      else if (value == "none") cfg.line_search = false;
      else throw ConfigError("unknown line search '" + value + "'", line_no, key);
    }
    else if (key == "lbfgs_memory") cfg.lbfgs_memory = parse_int(value, line_no, key);
    else if (key == "precond_refresh") cfg.precond_refresh = parse_int(value, line_no, key);
    else if (key == "mg_pre_smooth") cfg.mg_pre_smooth = parse_int(value, line_no, key);
    else if (key == "mg_post_smooth") cfg.mg_post_smooth = parse_int(value, line_no, key);
    else if (key == "threads") cfg.threads = parse_int(value, line_no, key);
    else if (key == "deterministic") cfg.deterministic = parse_bool(value, line_no, key);
    else if (key == "write_vtk") cfg.write_vtk = parse_bool(value, line_no, key);
    else if (key == "study_cases") {
      cfg.study_cases.clear();
      for (const auto& tok : detail::split_ws(value))
        cfg.study_cases.push_back(detail::parse_case(tok, line_no, key));
    }
    else if (key == "study_reference")
      cfg.study_reference = detail::parse_case(value, line_no, key);
    else if (key == "perf_orders") {
      cfg.perf_orders.clear();
      for (const auto& tok : detail::split_ws(value))
        cfg.perf_orders.push_back(parse_int(tok, line_no, key));
    } else if (key == "perf_target_dofs") {
      cfg.perf_target_dofs.clear();
      for (const auto& tok : detail::split_ws(value))
        cfg.perf_target_dofs.push_back(parse_int(tok, line_no, key));
    } else if (key == "perf_representations") {
      cfg.perf_representations.clear();
      for (const auto& tok : detail::split_ws(value)) {
        if (tok != "matrix-free" && tok != "assembled")
          throw ConfigError("unknown representation '" + tok + "'", line_no, key);
        cfg.perf_representations.push_back(tok);
      }
    }
    else if (key == "perf_repeats") cfg.perf_repeats = parse_int(value, line_no, key);
    else throw ConfigError("unknown key", line_no, key);
  }
  return cfg;
}

inline ProblemConfig load_problem_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_problem_config(in);
}

}  // namespace hexmg
