#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "liftnet/boundary.hpp"
#include "liftnet/error.hpp"

using namespace liftnet;

namespace {

// Source of mass 1 at the top middle, sink at the bottom middle.
BoundaryData vertical_pair() {
  return build_boundary_data(Domain::unit_square(), {{2.5, 1.0, AtomSign::Source}, {0.5, 1.0, AtomSign::Sink}});
}

}  // namespace

TEST_CASE("arclength parameterization") {
  const Domain d = Domain::unit_square();
  CHECK(d.perimeter() == 4.0);
  CHECK((d.point_of_arclength(0.0) - Vec2(0, 0)).norm() < 1e-15);
  CHECK((d.point_of_arclength(2.5) - Vec2(0.5, 1)).norm() < 1e-15);
  CHECK(d.arclength_of_point(Vec2(1, 0)) == doctest::Approx(1.0));
  for (double t = 0.0; t < 4.0; t += 0.037)
    CHECK(d.arclength_of_point(d.point_of_arclength(t)) == doctest::Approx(t).epsilon(1e-12));
  CHECK_THROWS_AS(d.arclength_of_point(Vec2(0.5, 0.5)), Error);
  const Domain r = Domain::rectangle(2.0, 0.5);
  CHECK(r.perimeter() == 5.0);
  CHECK((r.point_of_arclength(2.25) - Vec2(2.0, 0.25)).norm() < 1e-15);
  CHECK((r.point_of_arclength(2.75) - Vec2(1.75, 0.5)).norm() < 1e-15);
}

TEST_CASE("two-atom boundary image") {
  const BoundaryData b = vertical_pair();
  CHECK(b.top() == 1.0);
  // running sum: 0, then -1 after the sink, 0 after the source; shifted by +1
  CHECK(b.cumulative(0.2) == 1.0);
  CHECK(b.cumulative(0.5) == 0.0);  // right-continuous at the atom
  CHECK(b.cumulative(1.0) == 0.0);
  CHECK(b.cumulative(2.49) == 0.0);
  CHECK(b.cumulative(2.5) == 1.0);
  CHECK(b.cumulative(3.9) == 1.0);
  const std::vector<double> jumps(b.jump_positions().begin(), b.jump_positions().end());
  for (double t : jumps) CHECK((std::abs(t - 0.5) < 1e-12 || std::abs(t - 2.5) < 1e-12));
  CHECK(boundary_trace(b, Vec2(1.0, 0.0), 0.5) == 0);
  CHECK(boundary_trace(b, Vec2(0.0, 0.0), 0.5) == 1);
  CHECK(boundary_trace(b, Vec2(0.0, 0.0), 1.0) == 0);
}

TEST_CASE("unbalanced measures are rejected") {
  try {
    build_boundary_data(Domain::unit_square(), {{0.5, 1.0, AtomSign::Source}, {2.5, 0.7, AtomSign::Sink}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnbalancedMeasures);
    CHECK(std::string(e.what()).find("unbalanced measures") != std::string::npos);
  }
}

TEST_CASE("coincident source and sink merge") {
  const BoundaryData b = build_boundary_data(
      Domain::unit_square(), {{0.5, 1.0, AtomSign::Source}, {0.5, 1.0, AtomSign::Sink}, {1.5, 0.5, AtomSign::Source},
                              {3.5, 0.5, AtomSign::Sink}});
  CHECK(b.atoms().size() == 2);
  CHECK(b.top() == doctest::Approx(0.5));
}

TEST_CASE("halves and thirds take five values") {
  // two sources of 1/2 followed by three sinks of 1/3
  const BoundaryData b = build_boundary_data(
      Domain::unit_square(), {{0.3, 0.5, AtomSign::Source}, {0.9, 0.5, AtomSign::Source}, {1.6, 1.0 / 3, AtomSign::Sink},
                              {2.4, 1.0 / 3, AtomSign::Sink}, {3.2, 1.0 / 3, AtomSign::Sink}});
  std::set<long> values;
  for (double t = 0.0; t < 4.0; t += 0.01) values.insert(std::lround(b.cumulative(t) * 6.0));
  CHECK(values == std::set<long>{0, 2, 3, 4, 6});
  CHECK(b.top() == doctest::Approx(1.0));
}

TEST_CASE("interleaved atoms shift the running sum up to zero") {
  const BoundaryData b = build_boundary_data(
      Domain::unit_square(), {{0.3, 1.0 / 3, AtomSign::Sink}, {0.9, 0.5, AtomSign::Source}, {1.6, 1.0 / 3, AtomSign::Sink},
                              {2.4, 0.5, AtomSign::Source}, {3.2, 1.0 / 3, AtomSign::Sink}});
  // running sum 0, -1/3, 1/6, -1/6, 1/3, 0 shifted by 1/3
  CHECK(b.top() == doctest::Approx(2.0 / 3));
  CHECK(b.cumulative(0.1) == doctest::Approx(1.0 / 3));
  CHECK(b.cumulative(0.5) == doctest::Approx(0.0));
  CHECK(b.cumulative(1.0) == doctest::Approx(0.5));
  CHECK(b.cumulative(2.0) == doctest::Approx(1.0 / 6));
  CHECK(b.cumulative(3.0) == doctest::Approx(2.0 / 3));
}

TEST_CASE("trace is monotone in s and its support has the cumulative length") {
  const BoundaryData b = build_boundary_data(
      Domain::unit_square(), {{0.3, 1.0 / 3, AtomSign::Sink}, {0.9, 0.5, AtomSign::Source}, {1.6, 1.0 / 3, AtomSign::Sink},
                              {2.4, 0.5, AtomSign::Source}, {3.2, 1.0 / 3, AtomSign::Sink}});
  const Domain& d = b.domain();
  for (double t = 0.0; t < 4.0; t += 0.13) {
    const Vec2 x = d.point_of_arclength(t);
    const int n = 6000;
    int prev = 1, ones = 0;
    for (int i = 0; i < n; ++i) {
      const int v = boundary_trace(b, x, (i + 0.5) * b.top() / n);
      CHECK(v <= prev);
      prev = v;
      ones += v;
    }
    CHECK(ones * b.top() / n == doctest::Approx(b.cumulative(t)).epsilon(1e-3));
    CHECK(boundary_trace(b, x, b.top()) == 0);
  }
}

TEST_CASE("atom at a corner belongs to the outgoing edge") {
  const Domain d = Domain::unit_square();
  CHECK(d.arclength_of_point(Vec2(1, 1)) == doctest::Approx(2.0));
  CHECK(d.arclength_of_point(Vec2(0, 0)) == doctest::Approx(0.0));
}
