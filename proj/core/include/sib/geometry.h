#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace sib::geom {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend constexpr bool operator==(Vec3, Vec3) = default;

  constexpr double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(Vec3 o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  constexpr double norm_sq() const { return dot(*this); }
  double norm() const { return std::sqrt(norm_sq()); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }

// Wraps an angle into [-pi, pi).
double normalize_yaw(double yaw);

struct Pose {
  Vec3 position;
  double yaw = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

enum class FormationKind { Line, Circle, Square, Triangle, Cube, Pyramid, Sphere };

std::string_view to_string(FormationKind kind);
// Case-insensitive; throws Error{InvalidSpec} for unknown names.
FormationKind formation_kind_from_string(std::string_view name);

struct FormationSpec {
  FormationKind kind = FormationKind::Line;
  int n = 1;
  // Spacing (Line), radius (Circle, Sphere), side (Square, Triangle),
  // edge (Cube) or base side (Pyramid).
  double size_param = 1.0;
  double height = 0.0;  // Pyramid only
  double altitude = 0.0;
};

struct Formation {
  std::vector<Pose> slots;

  std::size_t size() const { return slots.size(); }
  friend bool operator==(const Formation&, const Formation&) = default;
};

Formation generate(const FormationSpec& spec);

Vec3 centroid(const Formation& f);
Formation translate(const Formation& f, Vec3 offset);
// Scales about the centroid. Throws Error{InvalidFactor} unless factor > 0.
Formation scale(const Formation& f, double factor);
// Rotates about the vertical axis through the centroid; slot yaws follow.
Formation rotate(const Formation& f, double yaw_angle);

struct Assignment {
  std::vector<std::size_t> slot_of;  // drone index -> slot index
  double total_cost = 0.0;           // sum of squared distances
};

inline constexpr std::size_t kMaxAssignmentSize = 256;

// Minimum total squared distance matching. Among optimal matchings the
// lexicographically smallest slot_of is returned.
Assignment assign(std::span<const Vec3> current, const Formation& target);

nlohmann::json to_json(const Formation& f);
Formation formation_from_json(const nlohmann::json& j);

}  // namespace sib::geom
