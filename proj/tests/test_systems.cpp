#include <doctest.h>

#include <cmath>

#include "ergo/error.hpp"
#include "ergo/systems.hpp"

using namespace ergo;

namespace {

struct Fixture {
  ExplorationSpace space = ExplorationSpace::unit(1);
  BasisSet basis{space, 6};
  CoeffVector phi = info_coeffs(basis, InfoDistribution::uniform(space));
  ControlBounds bounds{5.0, 2.0};
};

}  // namespace

TEST_CASE("plant derivative") {
  const ControlBounds b{5.0, 2.0};
  const PlantState rest = plant_deriv(PlantState{0, 0}, 0, 0, b);
  CHECK(rest.x1 == 0.0);
  CHECK(rest.x2 == 0.0);
  const PlantState r = plant_deriv(PlantState{0.2, 0.5}, 1.0, -0.4, b);
  CHECK(r.x1 == doctest::Approx(0.5));
  CHECK(r.x2 == doctest::Approx(0.6));
  CHECK(plant_deriv(PlantState{}, b.u_max, -0.4 * b.u_max, b).x2 == doctest::Approx(0.6 * b.u_max));
}

TEST_CASE("inputs outside their boxes are clamped and counted") {
  const ControlBounds b{5.0, 2.0};
  clamp_stats() = ClampStats{};
  CHECK(plant_deriv(PlantState{}, 9.0, -7.0, b).x2 == doctest::Approx(3.0));
  CHECK(clamp_stats().control_clamps == 1);
  CHECK(clamp_stats().disturbance_clamps == 1);
  CHECK(clamp_control(-5.0, b) == -5.0);
  CHECK(clamp_stats().control_clamps == 1);
}

TEST_CASE("bounds validation") {
  CHECK_NOTHROW(ControlBounds::from_ratio(5.0).validate());
  CHECK(ControlBounds::from_ratio(5.0).d_max == doctest::Approx(2.0));
  CHECK_THROWS_AS((ControlBounds{0.0, 0.0}.validate()), InvalidArgument);
  CHECK_THROWS_AS((ControlBounds{1.0, 2.0}.validate()), InvalidArgument);
}

TEST_CASE("exploration map selects position") {
  CHECK(exploration_map(PlantState{0.3, -1.2}) == 0.3);
  CHECK(exploration_map(PlantState{0.0, 5.0}) == 0.0);
  CHECK(exploration_map(PlantState{1.0, 0.0}) == 1.0);
}

TEST_CASE("one Euler step") {
  Fixture f;
  FullState s = initial_state(PlantState{0.2, 0.5}, f.basis);
  const FullState n = euler_step(s, 1.0, -0.4, 0.01, f.bounds, f.basis, f.phi);
  CHECK(n.x.x1 == doctest::Approx(0.205).epsilon(1e-14));
  CHECK(n.x.x2 == doctest::Approx(0.506).epsilon(1e-14));
  CHECK(n.t == doctest::Approx(0.01));
  CHECK(std::abs(n.z[0]) < 1e-14);
  // z advances with the pre-step position 0.2, not 0.205.
  const double m = 0.2;
  CHECK(n.z[1] == doctest::Approx(f.basis.eval(std::size_t{1}, std::span<const double>(&m, 1)) * 0.01).epsilon(1e-14));
}

TEST_CASE("Euler step rejects misaligned or invalid inputs") {
  Fixture f;
  FullState s = initial_state(PlantState{0.5, 0}, f.basis);
  CHECK_THROWS_AS(euler_step(s, 0, 0, 0.0, f.bounds, f.basis, f.phi), InvalidArgument);
  s.z = AugmentedState::zeros(3);
  CHECK_THROWS_AS(euler_step(s, 0, 0, 0.01, f.bounds, f.basis, f.phi), InvalidArgument);
}

TEST_CASE("z_0 stays zero for a normalized density") {
  const auto space = ExplorationSpace::unit(1);
  const BasisSet basis(space, 5);
  const CoeffVector phi = info_coeffs(basis, InfoDistribution::bimodal(space));
  FullState s = initial_state(PlantState{0.1, 0.0}, basis);
  for (int i = 0; i < 3000; ++i) s = euler_step(s, std::sin(0.01 * i) * 3.0, 0.0, 0.01, ControlBounds{}, basis, phi);
  CHECK(std::abs(s.z[0]) < 1e-10);
}

TEST_CASE("Euler error shrinks linearly with the step") {
  // Constant acceleration a from rest: x1(t) = a t^2 / 2 exactly.
  Fixture f;
  const double a = 1.5, horizon = 1.0;
  double prev = 0.0;
  for (int n : {100, 200, 400}) {
    FullState s = initial_state(PlantState{0.0, 0.0}, f.basis);
    const double dt = horizon / n;
    for (int i = 0; i < n; ++i) s = euler_step(s, a, 0.0, dt, f.bounds, f.basis, f.phi);
    const double err = std::abs(s.x.x1 - 0.5 * a * horizon * horizon);
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(2.0).epsilon(1e-6));
    prev = err;
  }
}
