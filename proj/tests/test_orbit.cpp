#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "swarm/orbit.hpp"
#include "swarm/rng.hpp"

using namespace swarm;
using orbit::Mat6;
using orbit::OrbitParams;

namespace {

// Independent oracle: matrix exponential by scaling-and-squaring with a
// Taylor series. ||A dt|| is tiny for our omegas, so this converges fast.
Mat6 expm(const Mat6& a) {
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  Mat6 scaled = a;
  while (norm > 0.5) {
    scaled *= 0.5;
    norm *= 0.5;
    ++squarings;
  }
  Mat6 term = Mat6::Identity();
  Mat6 sum = Mat6::Identity();
  for (int k = 1; k <= 30; ++k) {
    term = term * scaled / double(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

OrbitParams table_omega() {
  OrbitParams p;
  p.omega = 7.27e-5;
  return p;
}

}  // namespace

TEST_CASE("cw matrices follow the appendix pattern") {
  const OrbitParams orb = table_omega();
  const auto m = orbit::cw_matrices(orb);
  const double w = orb.omega;

  CHECK(m.A(1, 0) == doctest::Approx(3.0 * w * w).epsilon(1e-12));
  CHECK(m.A(1, 3) == doctest::Approx(2.0 * w).epsilon(1e-12));
  CHECK(m.A(3, 1) == doctest::Approx(-2.0 * w).epsilon(1e-12));
  CHECK(m.A(5, 4) == doctest::Approx(-w * w).epsilon(1e-12));
  // Velocity couplings.
  CHECK(m.A(0, 1) == 1.0);
  CHECK(m.A(2, 3) == 1.0);
  CHECK(m.A(4, 5) == 1.0);
  // Input selector hits only the velocity rows.
  for (int c = 0; c < 3; ++c) {
    CHECK(m.B(0, c) == 0.0);
    CHECK(m.B(2, c) == 0.0);
    CHECK(m.B(4, c) == 0.0);
  }
  CHECK(m.B(1, 0) == 1.0);
  CHECK(m.B(3, 1) == 1.0);
  CHECK(m.B(5, 2) == 1.0);
}

TEST_CASE("omega zero reduces to a double integrator") {
  OrbitParams orb;
  orb.omega = 1.0;  // placeholder; we want the A of omega -> 0
  orb.omega = 1e-300;
  const auto m = orbit::cw_matrices(orb);
  int nonzero = 0;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      if (std::abs(m.A(r, c)) > 1e-200) ++nonzero;
    }
  }
  CHECK(nonzero == 3);  // only the unit velocity couplings survive
}

TEST_CASE("derived geo omega matches the published constant") {
  const OrbitParams orb = OrbitParams::geo();
  CHECK(orb.omega == doctest::Approx(7.2921e-5).epsilon(1e-4));
  // Within 0.5% of the rounded table value.
  CHECK(std::abs(orb.omega - 7.27e-5) / 7.27e-5 < 0.005);
}

TEST_CASE("state transition identity and zero cases") {
  const auto tr = orbit::state_transition(OrbitParams::geo(), 0.0);
  CHECK((tr.phi - Mat6::Identity()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(tr.gamma.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("out-of-plane block closes after a full period") {
  const OrbitParams orb = table_omega();
  const double period = 2.0 * M_PI / orb.omega;
  const auto tr = orbit::state_transition(orb, period);
  CHECK(tr.phi(4, 4) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(tr.phi(5, 5) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(tr.phi(4, 5) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(tr.phi(5, 4) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("z harmonic half period flips sign") {
  const OrbitParams orb = OrbitParams::geo();
  orbit::LvlhState s;
  s.v[4] = 1.0;  // z = 1 km
  const double half = M_PI / orb.omega;
  const auto out = orbit::propagate(s, orbit::ControlAccel{}, half, orb);
  CHECK(out.z() == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(out.zdot()) < 1e-12);
}

TEST_CASE("phi matches the matrix exponential oracle") {
  const OrbitParams orb = OrbitParams::geo();
  const auto m = orbit::cw_matrices(orb);
  for (double dt : {0.5, 1.0, 60.0, 5000.0}) {
    const auto tr = orbit::state_transition(orb, dt);
    const Mat6 oracle = expm(Mat6(m.A * dt));
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 6; ++c) {
        const double scale = std::max(std::abs(oracle(r, c)), 1.0);
        CHECK(std::abs(tr.phi(r, c) - oracle(r, c)) / scale < 1e-10);
      }
    }
  }
}

TEST_CASE("propagate matches the rk4 oracle") {
  const OrbitParams orb = OrbitParams::geo();
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    orbit::LvlhState s;
    for (int i = 0; i < 6; ++i) {
      s.v[i] = rng.gaussian() * (i % 2 == 0 ? 100.0 : 0.05);
    }
    orbit::ControlAccel a;
    a.a = 2e-3 * orbit::Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const auto exact = orbit::propagate(s, a, 1.0, orb);
    const auto rk = orbit::integrate_oracle(s, a, 1.0, orb, 10);
    for (int i = 0; i < 6; ++i) {
      const double tol = i % 2 == 0 ? 1e-8 : 1e-11;
      CHECK(std::abs(exact.v[i] - rk.v[i]) < tol);
    }
  }
}

TEST_CASE("ballistic long-horizon agreement with the oracle") {
  const OrbitParams orb = OrbitParams::geo();
  orbit::LvlhState exact, rk;
  exact.v << 1.0, 0.0, -2.0, 1e-3, 0.5, 0.0;
  rk = exact;
  for (int t = 0; t < 1000; ++t) {
    exact = orbit::propagate(exact, orbit::ControlAccel{}, 1.0, orb);
    rk = orbit::integrate_oracle(rk, orbit::ControlAccel{}, 1.0, orb, 10);
  }
  for (int i : {0, 2, 4}) CHECK(std::abs(exact.v[i] - rk.v[i]) < 1e-8);
}

TEST_CASE("rk4 self-convergence is fourth order") {
  const OrbitParams orb = OrbitParams::geo();
  orbit::LvlhState s;
  s.v << 5.0, 0.01, -3.0, 0.02, 2.0, -0.01;
  orbit::ControlAccel a;
  a.a << 1e-3, -2e-3, 5e-4;
  const double dt = 100.0;
  const auto exact = orbit::propagate(s, a, dt, orb);
  double prev_err = -1.0;
  for (int sub : {1, 2, 4}) {
    const auto rk = orbit::integrate_oracle(s, a, dt, orb, sub);
    const double err = (rk.v - exact.v).norm();
    if (prev_err > 0.0 && err > 1e-15) {
      CHECK(prev_err / err > 10.0);  // ~16x per doubling
    }
    prev_err = err;
  }
}

TEST_CASE("semigroup, invertibility, and out-of-plane energy") {
  const OrbitParams orb = OrbitParams::geo();
  Rng rng(19);
  orbit::LvlhState s;
  for (int i = 0; i < 6; ++i) s.v[i] = rng.gaussian();
  orbit::ControlAccel a;
  a.a << 1e-3, 2e-3, -1e-3;

  // Semigroup for the homogeneous part (zero-order-hold control does not
  // compose across splits, so check it ballistic).
  const auto one = orbit::propagate(
      orbit::propagate(s, orbit::ControlAccel{}, 30.0, orb),
      orbit::ControlAccel{}, 70.0, orb);
  const auto two = orbit::propagate(s, orbit::ControlAccel{}, 100.0, orb);
  CHECK((one.v - two.v).norm() / two.v.norm() < 1e-9);

  // Invertibility: phi(dt) composed with the backward flow is the identity.
  // state_transition rejects negative dt, so exp(-A dt) stands in for
  // phi(-dt).
  const auto fwd = orbit::state_transition(orb, 42.0);
  const Mat6 bwd = expm(Mat6(-orbit::cw_matrices(orb).A * 42.0));
  CHECK((Mat6(fwd.phi * bwd) - Mat6::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS(orbit::state_transition(orb, -1.0));

  // Energy-like invariant of the decoupled z oscillator.
  orbit::LvlhState z;
  z.v[4] = 1.5;
  z.v[5] = -0.25;
  const double w2 = orb.omega * orb.omega;
  const double e0 = w2 * z.z() * z.z() + z.zdot() * z.zdot();
  const auto z1 = orbit::propagate(z, orbit::ControlAccel{}, 1.0, orb);
  const double e1 = w2 * z1.z() * z1.z() + z1.zdot() * z1.zdot();
  CHECK(std::abs(e1 - e0) / e0 < 1e-10);
}

TEST_CASE("origin is an equilibrium") {
  const auto out = orbit::propagate(orbit::LvlhState{}, orbit::ControlAccel{},
                                    1000.0, OrbitParams::geo());
  CHECK(out.v.cwiseAbs().maxCoeff() == 0.0);
}
