#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sib/error.h"
#include "sib/geometry.h"

namespace {

using namespace sib::geom;

constexpr double kTol = 1e-9;

void expect_near(Vec3 a, Vec3 b, double tol = kTol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

Formation spec(FormationKind k, int n, double size, double alt = 0.0, double height = 0.0) {
  return generate({k, n, size, height, alt});
}

std::vector<double> pairwise(const Formation& f) {
  std::vector<double> d;
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = i + 1; j < f.size(); ++j) d.push_back(distance(f.slots[i].position, f.slots[j].position));
  }
  return d;
}

TEST(Generate, CircleFourAtAltitudeOne) {
  const auto f = spec(FormationKind::Circle, 4, 1.0, 1.0);
  ASSERT_EQ(f.size(), 4u);
  expect_near(f.slots[0].position, {1, 0, 1});
  expect_near(f.slots[1].position, {0, 1, 1});
  expect_near(f.slots[2].position, {-1, 0, 1});
  expect_near(f.slots[3].position, {0, -1, 1});
}

TEST(Generate, LineThree) {
  const auto f = spec(FormationKind::Line, 3, 1.0);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f.slots[0].position, (Vec3{0, 0, 0}));
  EXPECT_EQ(f.slots[1].position, (Vec3{1, 0, 0}));
  EXPECT_EQ(f.slots[2].position, (Vec3{2, 0, 0}));
}

TEST(Generate, CubeEightIsUnitCube) {
  const auto f = spec(FormationKind::Cube, 8, 1.0);
  ASSERT_EQ(f.size(), 8u);
  int k = 0;
  for (int z = 0; z < 2; ++z) {
    for (int y = 0; y < 2; ++y) {
      for (int x = 0; x < 2; ++x) expect_near(f.slots[static_cast<std::size_t>(k++)].position, {double(x), double(y), double(z)});
    }
  }
}

TEST(Generate, SphereFiftyOnRadiusTwo) {
  const auto f = spec(FormationKind::Sphere, 50, 2.0);
  ASSERT_EQ(f.size(), 50u);
  for (const auto& s : f.slots) EXPECT_NEAR(s.position.norm(), 2.0, kTol);
  // Regression value from a brute-force scan of the Fibonacci lattice.
  double min_d = 1e9;
  for (double d : pairwise(f)) min_d = std::min(min_d, d);
  EXPECT_NEAR(min_d, 0.8736805768956529, 1e-9);
}

TEST(Generate, SquareFourAreCorners) {
  const auto f = spec(FormationKind::Square, 4, 2.0);
  expect_near(f.slots[0].position, {-1, -1, 0});
  expect_near(f.slots[1].position, {1, -1, 0});
  expect_near(f.slots[2].position, {1, 1, 0});
  expect_near(f.slots[3].position, {-1, 1, 0});
}

TEST(Generate, TriangleThreeAreVertices) {
  const double s = 3.0;
  const auto f = spec(FormationKind::Triangle, 3, s);
  const double r = s / std::sqrt(3.0);
  // Top vertex first, then counter-clockwise.
  expect_near(f.slots[0].position, {0, r, 0});
  expect_near(f.slots[1].position, {-s / 2, -r / 2, 0});
  expect_near(f.slots[2].position, {s / 2, -r / 2, 0});
  for (double d : pairwise(f)) EXPECT_NEAR(d, s, kTol);
}

TEST(Generate, PyramidLayers) {
  // 5 = 4 + 1: a 2x2 base and the apex at `height`.
  const auto f = spec(FormationKind::Pyramid, 5, 2.0, 0.5, 3.0);
  ASSERT_EQ(f.size(), 5u);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(f.slots[static_cast<std::size_t>(i)].position.z, 0.5, kTol);
  expect_near(f.slots[4].position, {0, 0, 3.5});
}

TEST(Generate, SingleSlot) {
  for (auto k : {FormationKind::Line, FormationKind::Circle, FormationKind::Square, FormationKind::Triangle,
                 FormationKind::Cube, FormationKind::Pyramid, FormationKind::Sphere}) {
    const auto f = generate({k, 1, 2.0, 1.0, 0.7});
    ASSERT_EQ(f.size(), 1u);
    expect_near(f.slots[0].position, {0, 0, 0.7});
  }
}

TEST(Generate, InvalidSpecs) {
  EXPECT_THROW(generate({FormationKind::Line, 0, 1.0}), sib::Error);
  EXPECT_THROW(generate({FormationKind::Circle, 3, 0.0}), sib::Error);
  EXPECT_THROW(generate({FormationKind::Circle, 3, -1.0}), sib::Error);
  EXPECT_THROW(generate({FormationKind::Pyramid, 5, 1.0, 0.0}), sib::Error);
  try {
    generate({FormationKind::Line, 0, 1.0});
  } catch (const sib::Error& e) {
    EXPECT_EQ(e.code(), sib::Errc::InvalidSpec);
  }
}

TEST(Generate, InvariantsForAllKindsUpToTwelve) {
  for (auto k : {FormationKind::Line, FormationKind::Circle, FormationKind::Square, FormationKind::Triangle,
                 FormationKind::Cube, FormationKind::Pyramid, FormationKind::Sphere}) {
    for (int n = 1; n <= 12; ++n) {
      const auto f = generate({k, n, 1.5, 1.0, 0.0});
      ASSERT_EQ(f.size(), static_cast<std::size_t>(n));
      for (const auto& s : f.slots) {
        EXPECT_TRUE(s.position.finite());
        EXPECT_EQ(s.yaw, 0.0);
      }
      for (double d : pairwise(f)) EXPECT_GT(d, 0.0) << to_string(k) << " n=" << n;
      // A single drone sits at the center instead of on the radius.
      if ((k == FormationKind::Circle || k == FormationKind::Sphere) && n > 1) {
        for (const auto& s : f.slots) EXPECT_NEAR(s.position.norm(), 1.5, kTol);
      }
    }
  }
}

TEST(Generate, KindNames) {
  EXPECT_EQ(formation_kind_from_string("Circle"), FormationKind::Circle);
  EXPECT_EQ(formation_kind_from_string("PYRAMID"), FormationKind::Pyramid);
  EXPECT_EQ(to_string(FormationKind::Sphere), "sphere");
  EXPECT_THROW(formation_kind_from_string("hexagon"), sib::Error);
}

TEST(Translate, Examples) {
  const auto f = spec(FormationKind::Sphere, 9, 1.0);
  EXPECT_EQ(translate(f, {0, 0, 0}), f);
  const auto line = translate(spec(FormationKind::Line, 2, 1.0), {1, 2, 0});
  EXPECT_EQ(line.slots[0].position, (Vec3{1, 2, 0}));
  EXPECT_EQ(line.slots[1].position, (Vec3{2, 2, 0}));
  const auto g = spec(FormationKind::Line, 5, 1.0);
  EXPECT_EQ(translate(translate(g, {3, -4, 2}), {-3, 4, -2}), g);
}

TEST(Scale, Examples) {
  const auto f = spec(FormationKind::Cube, 8, 1.0);
  EXPECT_EQ(scale(f, 1.0), f);
  const auto c = scale(spec(FormationKind::Circle, 4, 1.0), 2.0);
  for (const auto& s : c.slots) EXPECT_NEAR(s.position.norm(), 2.0, kTol);
  const auto before = pairwise(f);
  const auto after = pairwise(scale(f, 2.0));
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], 2.0 * before[i], kTol);
  expect_near(centroid(scale(f, 3.0)), centroid(f));
}

TEST(Scale, RejectsNonPositiveFactor) {
  const auto f = spec(FormationKind::Line, 3, 1.0);
  for (double bad : {0.0, -1.0}) {
    try {
      scale(f, bad);
      FAIL() << "expected InvalidFactor";
    } catch (const sib::Error& e) {
      EXPECT_EQ(e.code(), sib::Errc::InvalidFactor);
    }
  }
}

TEST(Rotate, Examples) {
  const auto f = spec(FormationKind::Triangle, 5, 2.0, 1.0);
  EXPECT_EQ(rotate(f, 0.0), f);
  const auto sq = spec(FormationKind::Square, 4, 2.0);
  const auto r = rotate(sq, kPi / 2);
  // Slot k lands where slot k+1 was.
  for (std::size_t k = 0; k < 4; ++k) expect_near(r.slots[k].position, sq.slots[(k + 1) % 4].position);
  const auto full = rotate(f, 2 * kPi);
  for (std::size_t k = 0; k < f.size(); ++k) {
    expect_near(full.slots[k].position, f.slots[k].position);
    EXPECT_NEAR(normalize_yaw(full.slots[k].yaw - f.slots[k].yaw), 0.0, kTol);
  }
}

TEST(Rotate, YawFollowsAndIsNormalized) {
  const auto f = rotate(spec(FormationKind::Line, 2, 1.0), 3.0);
  EXPECT_NEAR(f.slots[0].yaw, 3.0, kTol);
  const auto g = rotate(f, 1.0);
  EXPECT_NEAR(g.slots[0].yaw, 4.0 - 2 * kPi, kTol);
  EXPECT_GE(g.slots[0].yaw, -kPi);
  EXPECT_LT(g.slots[0].yaw, kPi);
  EXPECT_EQ(normalize_yaw(kPi), -kPi);
}

TEST(Transform, IsometryProperties) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> kind(0, 6), count(2, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto f = generate({static_cast<FormationKind>(kind(rng)), count(rng), 0.5 + std::fabs(u(rng)), 1.0, u(rng)});
    const double angle = u(rng);
    const Vec3 v{u(rng), u(rng), u(rng)};
    const double s = 0.1 + std::fabs(u(rng)) / 2;
    const auto d0 = pairwise(f);
    const auto dr = pairwise(rotate(f, angle));
    const auto dt = pairwise(translate(f, v));
    const auto ds = pairwise(scale(f, s));
    for (std::size_t i = 0; i < d0.size(); ++i) {
      ASSERT_NEAR(dr[i], d0[i], kTol);
      ASSERT_NEAR(dt[i], d0[i], kTol);
      ASSERT_NEAR(ds[i], s * d0[i], kTol * std::max(1.0, s * d0[i]));
    }
    const auto back = rotate(rotate(f, angle), -angle);
    for (std::size_t k = 0; k < f.size(); ++k) expect_near(back.slots[k].position, f.slots[k].position);
  }
}

TEST(FormationJson, Roundtrip) {
  const auto f = rotate(spec(FormationKind::Pyramid, 7, 2.0, 1.0, 1.5), 0.3);
  const auto j = to_json(f);
  ASSERT_TRUE(j.contains("slots"));
  EXPECT_EQ(j["slots"].size(), 7u);
  for (const auto* k : {"x", "y", "z", "yaw"}) EXPECT_TRUE(j["slots"][0].contains(k));
  EXPECT_EQ(formation_from_json(j), f);
}

}  // namespace
