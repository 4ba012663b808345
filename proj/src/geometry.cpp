#include "swarmopt/geometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "json_util.hpp"
#include "swarmopt/errors.hpp"
#include "swarmopt/lp.hpp"

namespace swarmopt {

using detail::json;

namespace {

constexpr double kContainmentSlack = 1e-9;

std::string at(int vehicle, int index, const char* what) {
  return " (vehicle " + std::to_string(vehicle) + ", " + what + " " + std::to_string(index) + ")";
}

QuadParams parse_quad(const json& j) {
  QuadParams q;
  if (j.is_null()) return q;
  q.mass = detail::get_or(j, "mass_kg", q.mass);
  q.inertia = detail::vec3_or(j, "inertia_kgm2", q.inertia);
  q.arm_length = detail::get_or(j, "arm_length_m", q.arm_length);
  q.thrust_coeff = detail::get_or(j, "thrust_coeff", q.thrust_coeff);
  q.torque_coeff = detail::get_or(j, "torque_coeff", q.torque_coeff);
  q.omega_min = detail::get_or(j, "omega_min_rad_s", q.omega_min);
  q.omega_max = detail::get_or(j, "omega_max_rad_s", q.omega_max);
  q.gravity = detail::get_or(j, "gravity_mps2", q.gravity);
  q.drag = detail::get_or(j, "drag_Ns_per_m", q.drag);
  q.motor_time_constant = detail::get_or(j, "motor_time_constant_s", q.motor_time_constant);
  if (auto it = j.find("controller"); it != j.end()) {
    const json& c = *it;
    q.controller.position = detail::vec3_or(c, "position", q.controller.position);
    q.controller.velocity = detail::vec3_or(c, "velocity", q.controller.velocity);
    q.controller.attitude = detail::vec3_or(c, "attitude", q.controller.attitude);
    q.controller.rate = detail::vec3_or(c, "rate", q.controller.rate);
  }
  return q;
}

Polytope parse_polytope(const json& j, const std::string& where) {
  const json& rows = detail::require(j, "A", where);
  const json& rhs = detail::require(j, "b", where);
  if (!rows.is_array() || !rhs.is_array() || rows.size() != rhs.size()) {
    throw ParseError(where + ": 'A' and 'b' must be arrays of equal length");
  }
  const int d = static_cast<int>(rows.size());
  Eigen::Matrix<double, Eigen::Dynamic, 3> A(d, 3);
  Eigen::VectorXd b(d);
  for (int i = 0; i < d; ++i) {
    A.row(i) = detail::to_vec3(rows[i], where + ".A").transpose();
    b(i) = rhs[i].get<double>();
  }
  Eigen::VectorXi mask = Eigen::VectorXi::Ones(d);
  if (auto it = j.find("passage_mask"); it != j.end()) {
    if (!it->is_array() || static_cast<int>(it->size()) != d) {
      throw ParseError(where + ": 'passage_mask' must have one entry per face");
    }
    for (int i = 0; i < d; ++i) mask(i) = (*it)[i].get<int>() != 0 ? 1 : 0;
  }
  for (int i = 0; i < d; ++i) {
    if (A.row(i).norm() < 1e-12) throw ValidationError(where + ": face " + std::to_string(i) + " has a zero normal");
  }
  return Polytope::from_halfspaces(A, b, mask);
}

}  // namespace

Polytope Polytope::from_halfspaces(const Eigen::Matrix<double, Eigen::Dynamic, 3>& A,
                                   const Eigen::VectorXd& b, const Eigen::VectorXi& mask) {
  if (A.rows() != b.size()) throw DimensionError("Polytope: A and b row counts differ");
  Polytope p;
  p.A = A;
  p.b = b;
  for (int i = 0; i < A.rows(); ++i) {
    const double norm = A.row(i).norm();
    if (norm > 0.0) {
      p.A.row(i) /= norm;
      p.b(i) /= norm;
    }
  }
  p.obstacle_mask = mask.size() == 0 ? Eigen::VectorXi::Ones(A.rows()) : mask;
  if (p.obstacle_mask.size() != A.rows()) throw DimensionError("Polytope: mask size differs from face count");
  return p;
}

Polytope Polytope::box(const Vec3& lower, const Vec3& upper) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> A(6, 3);
  Eigen::VectorXd b(6);
  A << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  b << upper.x(), -lower.x(), upper.y(), -lower.y(), upper.z(), -lower.z();
  return from_halfspaces(A, b);
}

double Polytope::max_violation(const Vec3& r) const {
  return (A * r - b).maxCoeff();
}

Polytope intersect(const Polytope& lhs, const Polytope& rhs) {
  Polytope out;
  out.A.resize(lhs.faces() + rhs.faces(), 3);
  out.A << lhs.A, rhs.A;
  out.b.resize(lhs.faces() + rhs.faces());
  out.b << lhs.b, rhs.b;
  out.obstacle_mask.resize(lhs.faces() + rhs.faces());
  out.obstacle_mask << lhs.obstacle_mask, rhs.obstacle_mask;
  return out;
}

bool is_bounded(const Polytope& polytope) {
  const Eigen::MatrixXd A = polytope.A;
  for (int axis = 0; axis < 3; ++axis) {
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(3);
      c(axis) = sign;
      const lp::Result r = lp::maximize(c, A, polytope.b);
      if (r.status != lp::Status::Optimal) return false;
    }
  }
  return true;
}

InteriorPoint interior_point(const Polytope& polytope) {
  if (polytope.faces() == 0) throw ValidationError("polytope is unbounded (no faces)");
  if (!is_bounded(polytope)) {
    // Distinguish emptiness from unboundedness for the message.
    const lp::Result feas = lp::maximize(Eigen::VectorXd::Zero(3), Eigen::MatrixXd(polytope.A), polytope.b);
    if (feas.status == lp::Status::Infeasible) throw ValidationError("polytope is empty");
    throw ValidationError("polytope is unbounded");
  }
  // maximize r subject to a_i . c + r |a_i| <= b_i.
  const int d = polytope.faces();
  Eigen::MatrixXd A(d, 4);
  for (int i = 0; i < d; ++i) {
    A.block(i, 0, 1, 3) = polytope.A.row(i);
    A(i, 3) = polytope.A.row(i).norm();
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(4);
  c(3) = 1.0;
  const lp::Result r = lp::maximize(c, A, polytope.b);
  if (r.status != lp::Status::Optimal) throw ValidationError("polytope is empty");
  if (r.x(3) <= kContainmentSlack) throw ValidationError("polytope is empty (no interior)");
  return InteriorPoint{r.x.head<3>(), r.x(3)};
}

std::vector<std::pair<int, int>> FormationSchedule::intervals(int segments) const {
  std::vector<std::pair<int, int>> out;
  int begin = 0;
  for (int e : segment_ends) {
    out.emplace_back(begin, e);
    begin = e;
  }
  out.emplace_back(begin, segments);
  return out;
}

void validate(const Environment& env) {
  if (env.vehicles < 1) throw ValidationError("vehicles must be at least 1");
  if (static_cast<int>(env.corridors.size()) != env.vehicles) {
    throw ValidationError("corridors: expected one corridor per vehicle");
  }
  if (!(env.d_min > 0.0)) throw ValidationError("d_min_m must be positive");
  env.quad.validate();

  const int m = env.segments();
  if (m < 1) throw ValidationError("corridor of vehicle 0 has no polytopes");
  for (int i = 0; i < env.vehicles; ++i) {
    const auto& corridor = env.corridors[i];
    if (static_cast<int>(corridor.size()) != m) {
      throw ValidationError("corridor segment count mismatch" + at(i, static_cast<int>(corridor.size()), "segments"));
    }
    for (int j = 0; j < m; ++j) {
      if (corridor[j].faces() < 4) throw ValidationError("polytope has fewer than 4 faces" + at(i, j, "segment"));
      try {
        interior_point(corridor[j]);
      } catch (const ValidationError& e) {
        throw ValidationError(std::string(e.what()) + at(i, j, "segment"));
      }
      if (j + 1 < m) {
        try {
          interior_point(intersect(corridor[j], corridor[j + 1]));
        } catch (const ValidationError&) {
          throw ValidationError("consecutive polytopes do not intersect" + at(i, j, "segment"));
        }
      }
    }
  }

  if (static_cast<int>(env.starts.size()) != env.vehicles || static_cast<int>(env.ends.size()) != env.vehicles) {
    throw ValidationError("starts/ends: expected one pose per vehicle");
  }
  for (int i = 0; i < env.vehicles; ++i) {
    if (!env.corridors[i].front().contains(env.starts[i].position, kContainmentSlack)) {
      throw ValidationError("start outside first polytope" + at(i, 0, "segment"));
    }
    if (!env.corridors[i].back().contains(env.ends[i].position, kContainmentSlack)) {
      throw ValidationError("end outside last polytope" + at(i, m - 1, "segment"));
    }
  }

  const FormationSchedule& f = env.formation;
  const int nf = f.count();
  int previous = 0;
  for (int k = 0; k < nf; ++k) {
    const int e = f.segment_ends[k];
    if (e <= previous || e >= m) {
      throw ValidationError("formation.segment_indices must be strictly increasing within [1, m-1] (formation " +
                            std::to_string(k) + ")");
    }
    previous = e;
  }
  if (static_cast<int>(f.waypoints.size()) != env.vehicles) {
    throw ValidationError("formation.waypoints: expected one list per vehicle");
  }
  for (int i = 0; i < env.vehicles; ++i) {
    if (static_cast<int>(f.waypoints[i].size()) != nf) {
      throw ValidationError("formation.waypoints: expected one waypoint per formation" + at(i, 0, "formation"));
    }
    for (int k = 0; k < nf; ++k) {
      const int e = f.segment_ends[k];
      const Vec3& w = f.waypoints[i][k].position;
      if (!env.corridors[i][e - 1].contains(w, kContainmentSlack) ||
          !env.corridors[i][e].contains(w, kContainmentSlack)) {
        throw ValidationError("waypoint outside polytope" + at(i, k, "formation"));
      }
    }
  }
  for (int k = 0; k < nf; ++k) {
    for (int i = 0; i < env.vehicles; ++i) {
      for (int j = i + 1; j < env.vehicles; ++j) {
        if ((f.waypoints[i][k].position - f.waypoints[j][k].position).norm() < env.d_min) {
          throw ValidationError("formation waypoints closer than d_min (formation " + std::to_string(k) +
                                ", vehicles " + std::to_string(i) + " and " + std::to_string(j) + ")");
        }
      }
    }
  }
  if (static_cast<int>(f.scale_bounds.size()) != nf + 2 || static_cast<int>(f.yaw_refs.size()) != nf + 2) {
    throw ValidationError("formation.scale_bounds_m and yaw_refs_rad need N_f + 2 entries");
  }
  for (double s : f.scale_bounds) {
    if (!(s > 0.0)) throw ValidationError("formation.scale_bounds_m must be positive");
  }
}

Environment parse_environment(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("environment: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("environment: top level must be an object");

  Environment env;
  try {
    env.vehicles = detail::require(doc, "vehicles", "environment").get<int>();
    env.d_min = detail::get_or(doc, "d_min_m", env.d_min);

    const json& corridors = detail::require(doc, "corridors", "environment");
    if (!corridors.is_array()) throw ParseError("corridors: expected an array per vehicle");
    for (std::size_t i = 0; i < corridors.size(); ++i) {
      std::vector<Polytope> seq;
      for (std::size_t j = 0; j < corridors[i].size(); ++j) {
        seq.push_back(parse_polytope(corridors[i][j], "corridors[" + std::to_string(i) + "][" + std::to_string(j) + "]"));
      }
      env.corridors.push_back(std::move(seq));
    }
    for (const json& p : detail::require(doc, "starts", "environment")) env.starts.push_back(detail::to_pose(p, "starts"));
    for (const json& p : detail::require(doc, "ends", "environment")) env.ends.push_back(detail::to_pose(p, "ends"));

    const int m = env.segments();
    if (auto it = doc.find("formation"); it != doc.end() && !it->is_null()) {
      const json& f = *it;
      env.formation.segment_ends = detail::get_or(f, "segment_indices", std::vector<int>{});
      if (auto w = f.find("waypoints"); w != f.end()) {
        for (const json& per_vehicle : *w) {
          std::vector<Pose> poses;
          for (const json& p : per_vehicle) poses.push_back(detail::to_pose(p, "formation.waypoints"));
          env.formation.waypoints.push_back(std::move(poses));
        }
      }
      env.formation.scale_bounds = detail::get_or(f, "scale_bounds_m", std::vector<double>{});
      env.formation.yaw_refs = detail::get_or(f, "yaw_refs_rad", std::vector<double>{});
    }
    (void)m;
    if (env.formation.waypoints.empty()) env.formation.waypoints.assign(std::max(env.vehicles, 0), {});

    // Defaults for the formation-control parameters: the largest distance of
    // any vehicle from the formation centroid, and zero rotation.
    const int nf = env.formation.count();
    if (env.formation.scale_bounds.empty() && static_cast<int>(env.starts.size()) == env.vehicles &&
        static_cast<int>(env.ends.size()) == env.vehicles && env.vehicles > 0) {
      auto radius = [&](auto&& position_of) {
        Vec3 c = Vec3::Zero();
        for (int i = 0; i < env.vehicles; ++i) c += position_of(i);
        c /= env.vehicles;
        double r = 0.0;
        for (int i = 0; i < env.vehicles; ++i) r = std::max(r, (position_of(i) - c).norm());
        return std::max(r, 0.5 * env.d_min);
      };
      env.formation.scale_bounds.push_back(radius([&](int i) { return env.starts[i].position; }));
      for (int k = 0; k < nf; ++k) {
        if (static_cast<int>(env.formation.waypoints.size()) != env.vehicles ||
            static_cast<int>(env.formation.waypoints[0].size()) != nf) {
          break;
        }
        env.formation.scale_bounds.push_back(radius([&](int i) { return env.formation.waypoints[i][k].position; }));
      }
      env.formation.scale_bounds.push_back(radius([&](int i) { return env.ends[i].position; }));
    }
    if (env.formation.yaw_refs.empty()) env.formation.yaw_refs.assign(nf + 2, 0.0);

    env.quad = parse_quad(doc.value("quad_params", json()));
  } catch (const json::exception& e) {
    throw ParseError(std::string("environment: ") + e.what());
  }

  validate(env);
  return env;
}

Environment load_environment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open environment file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_environment(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace swarmopt
