#include "sib/geometry.h"

#include <algorithm>
#include <cctype>
#include <string>

#include <nlohmann/json.hpp>

#include "sib/error.h"

namespace sib {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::InvalidFactor: return "InvalidFactor";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::DuplicateDroneId: return "DuplicateDroneId";
    case Errc::Unresolvable: return "Unresolvable";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::SchemaError: return "SchemaError";
    case Errc::InvalidName: return "InvalidName";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::NotFound: return "NotFound";
    case Errc::AlreadyRunning: return "AlreadyRunning";
    case Errc::NotRunning: return "NotRunning";
    case Errc::NotPrompting: return "NotPrompting";
    case Errc::InvalidCount: return "InvalidCount";
    case Errc::UnknownDrone: return "UnknownDrone";
    case Errc::NotAirborne: return "NotAirborne";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::BindFailure: return "BindFailure";
  }
  return "Unknown";
}

}  // namespace sib

namespace sib::geom {
namespace {

constexpr double kGoldenRatio = 1.6180339887498948482;

Vec3 lerp(Vec3 a, Vec3 b, double t) { return a + (b - a) * t; }

// Point at arc length s along a closed polygon.
Vec3 along_perimeter(const std::vector<Vec3>& vertices, double s) {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec3 a = vertices[i];
    const Vec3 b = vertices[(i + 1) % vertices.size()];
    const double len = distance(a, b);
    if (s < len) return lerp(a, b, s / len);
    s -= len;
  }
  return vertices.front();
}

std::vector<Pose> perimeter_slots(const std::vector<Vec3>& vertices, int n) {
  double perimeter = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    perimeter += distance(vertices[i], vertices[(i + 1) % vertices.size()]);
  }
  std::vector<Pose> slots;
  slots.reserve(static_cast<std::size_t>(n));
  const std::size_t sides = vertices.size();
  for (int k = 0; k < n; ++k) {
    // Land exactly on a vertex whenever k*P/n is a whole number of sides.
    if ((static_cast<long long>(k) * static_cast<long long>(sides)) % n == 0) {
      const auto vertex = static_cast<std::size_t>(static_cast<long long>(k) * sides / n);
      slots.push_back({vertices[vertex % sides], 0.0});
    } else {
      slots.push_back({along_perimeter(vertices, perimeter * k / n), 0.0});
    }
  }
  return slots;
}

int cube_side(int n) {
  int m = 1;
  while (static_cast<long long>(m) * m * m < n) ++m;
  return m;
}

int pyramid_layers(int n) {
  long long layers = 1;
  while (layers * (layers + 1) * (2 * layers + 1) / 6 < n) ++layers;
  return static_cast<int>(layers);
}

void validate(const FormationSpec& spec) {
  if (spec.n < 1) throw Error(Errc::InvalidSpec, "formation needs n >= 1");
  if (!(spec.size_param > 0.0) || !std::isfinite(spec.size_param)) {
    throw Error(Errc::InvalidSpec, "formation size must be positive and finite");
  }
  if (!std::isfinite(spec.altitude)) throw Error(Errc::InvalidSpec, "altitude must be finite");
  if (spec.kind == FormationKind::Pyramid &&
      (!(spec.height > 0.0) || !std::isfinite(spec.height))) {
    throw Error(Errc::InvalidSpec, "pyramid height must be positive and finite");
  }
}

}  // namespace

double normalize_yaw(double yaw) {
  double wrapped = yaw - kTwoPi * std::floor((yaw + kPi) / kTwoPi);
  if (wrapped >= kPi) wrapped -= kTwoPi;
  if (wrapped < -kPi) wrapped = -kPi;
  return wrapped;
}

std::string_view to_string(FormationKind kind) {
  switch (kind) {
    case FormationKind::Line: return "line";
    case FormationKind::Circle: return "circle";
    case FormationKind::Square: return "square";
    case FormationKind::Triangle: return "triangle";
    case FormationKind::Cube: return "cube";
    case FormationKind::Pyramid: return "pyramid";
    case FormationKind::Sphere: return "sphere";
  }
  return "line";
}

FormationKind formation_kind_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto kind : {FormationKind::Line, FormationKind::Circle, FormationKind::Square,
                    FormationKind::Triangle, FormationKind::Cube, FormationKind::Pyramid,
                    FormationKind::Sphere}) {
    if (to_string(kind) == lower) return kind;
  }
  throw Error(Errc::InvalidSpec, "unknown formation kind '" + std::string(name) + "'");
}

Formation generate(const FormationSpec& spec) {
  validate(spec);
  const int n = spec.n;
  const double size = spec.size_param;
  const Vec3 origin{0.0, 0.0, spec.altitude};

  Formation out;
  out.slots.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    out.slots.push_back({origin, 0.0});
    return out;
  }

  switch (spec.kind) {
    case FormationKind::Line:
      for (int k = 0; k < n; ++k) out.slots.push_back({origin + Vec3{k * size, 0.0, 0.0}, 0.0});
      break;

    case FormationKind::Circle:
      for (int k = 0; k < n; ++k) {
        const double angle = kTwoPi * k / n;
        out.slots.push_back({origin + Vec3{size * std::cos(angle), size * std::sin(angle), 0.0}, 0.0});
      }
      break;

    case FormationKind::Square: {
      const double h = size / 2.0;
      const std::vector<Vec3> corners{origin + Vec3{-h, -h, 0.0}, origin + Vec3{h, -h, 0.0},
                                      origin + Vec3{h, h, 0.0}, origin + Vec3{-h, h, 0.0}};
      out.slots = perimeter_slots(corners, n);
      break;
    }

    case FormationKind::Triangle: {
      // Equilateral, centroid at the origin, apex on +y.
      const double circumradius = size / std::sqrt(3.0);
      const std::vector<Vec3> corners{origin + Vec3{0.0, circumradius, 0.0},
                                      origin + Vec3{-size / 2.0, -circumradius / 2.0, 0.0},
                                      origin + Vec3{size / 2.0, -circumradius / 2.0, 0.0}};
      out.slots = perimeter_slots(corners, n);
      break;
    }

    case FormationKind::Cube: {
      const int m = cube_side(n);
      const double step = size / (m - 1);
      for (int k = 0; k < n; ++k) {
        const int ix = k % m;
        const int iy = (k / m) % m;
        const int iz = k / (m * m);
        out.slots.push_back({origin + Vec3{ix * step, iy * step, iz * step}, 0.0});
      }
      break;
    }

    case FormationKind::Pyramid: {
      const int layers = pyramid_layers(n);
      const double step = layers > 1 ? size / (layers - 1) : 0.0;
      const double rise = layers > 1 ? spec.height / (layers - 1) : 0.0;
      for (int layer = 0; layer < layers && static_cast<int>(out.slots.size()) < n; ++layer) {
        const int side = layers - layer;
        const double half = (side - 1) / 2.0;
        for (int k = 0; k < side * side && static_cast<int>(out.slots.size()) < n; ++k) {
          const double x = (k % side - half) * step;
          const double y = (k / side - half) * step;
          out.slots.push_back({origin + Vec3{x, y, layer * rise}, 0.0});
        }
      }
      break;
    }

    case FormationKind::Sphere: {
      const double azimuth_step = kTwoPi * (1.0 - 1.0 / kGoldenRatio);
      for (int k = 0; k < n; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / n;
        const double ring = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double azimuth = azimuth_step * k;
        const Vec3 unit{ring * std::cos(azimuth), ring * std::sin(azimuth), z};
        out.slots.push_back({origin + unit * size, 0.0});
      }
      break;
    }
  }
  return out;
}

Vec3 centroid(const Formation& f) {
  Vec3 sum;
  for (const auto& slot : f.slots) sum = sum + slot.position;
  return f.slots.empty() ? sum : sum * (1.0 / static_cast<double>(f.slots.size()));
}

Formation translate(const Formation& f, Vec3 offset) {
  Formation out = f;
  for (auto& slot : out.slots) slot.position = slot.position + offset;
  return out;
}

Formation scale(const Formation& f, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(Errc::InvalidFactor, "scale factor must be positive and finite");
  }
  const Vec3 c = centroid(f);
  Formation out = f;
  for (auto& slot : out.slots) slot.position = c + (slot.position - c) * factor;
  return out;
}

Formation rotate(const Formation& f, double yaw_angle) {
  const Vec3 c = centroid(f);
  const double cs = std::cos(yaw_angle);
  const double sn = std::sin(yaw_angle);
  Formation out = f;
  for (auto& slot : out.slots) {
    const Vec3 d = slot.position - c;
    slot.position = c + Vec3{cs * d.x - sn * d.y, sn * d.x + cs * d.y, d.z};
    slot.yaw = normalize_yaw(slot.yaw + yaw_angle);
  }
  return out;
}

nlohmann::json to_json(const Formation& f) {
  auto slots = nlohmann::json::array();
  for (const auto& s : f.slots) {
    slots.push_back({{"x", s.position.x}, {"y", s.position.y}, {"z", s.position.z}, {"yaw", s.yaw}});
  }
  return {{"slots", std::move(slots)}};
}

Formation formation_from_json(const nlohmann::json& j) {
  Formation f;
  try {
    for (const auto& s : j.at("slots")) {
      f.slots.push_back({{s.at("x").get<double>(), s.at("y").get<double>(), s.at("z").get<double>()},
                         s.value("yaw", 0.0)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidSpec, std::string("malformed formation document: ") + e.what());
  }
  return f;
}

}  // namespace sib::geom
