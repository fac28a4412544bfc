#include "swarm/orbit.hpp"

#include <cmath>
#include <stdexcept>

namespace swarm::orbit {

namespace {

// sin(x) - x without cancellation for small x.
double sin_minus_x(double x) {
  if (std::abs(x) > 0.01) return std::sin(x) - x;
  // series: -x^3/6 + x^5/120 - x^7/5040
  const double x2 = x * x;
  return x * x2 * (-1.0 / 6.0 + x2 * (1.0 / 120.0 - x2 / 5040.0));
}

// 1 - cos(x), exact via half-angle.
double one_minus_cos(double x) {
  const double s = std::sin(0.5 * x);
  return 2.0 * s * s;
}

}  // namespace

bool OrbitParams::valid() const {
  return std::isfinite(mu) && mu > 0.0 && std::isfinite(a0) && a0 > 0.0 &&
         std::isfinite(omega) && omega > 0.0;
}

CwMatrices cw_matrices(const OrbitParams& orbit) {
  const double w = orbit.omega;
  if (!std::isfinite(w) || w < 0.0) {
    throw std::invalid_argument("cw_matrices: angular velocity must be finite and >= 0");
  }
  CwMatrices m;
  m.A.setZero();
  m.A(0, 1) = 1.0;
  m.A(1, 0) = 3.0 * w * w;
  m.A(1, 3) = 2.0 * w;
  m.A(2, 3) = 1.0;
  m.A(3, 1) = -2.0 * w;
  m.A(4, 5) = 1.0;
  m.A(5, 4) = -w * w;
  m.B.setZero();
  m.B(1, 0) = 1.0;
  m.B(3, 1) = 1.0;
  m.B(5, 2) = 1.0;
  return m;
}

DiscreteTransition state_transition(const OrbitParams& orbit, double dt) {
  if (!orbit.valid()) throw std::invalid_argument("state_transition: invalid orbit");
  if (!(dt >= 0.0)) throw std::invalid_argument("state_transition: dt must be >= 0");

  const double w = orbit.omega;
  const double x = w * dt;
  const double s = std::sin(x);
  const double c = std::cos(x);
  const double omc = one_minus_cos(x);  // 1 - cos
  const double smx = sin_minus_x(x);    // sin - x

  DiscreteTransition tr;
  tr.dt = dt;
  Mat6& p = tr.phi;
  p.setZero();

  // In-plane block, state order [x, xdot, y, ydot].
  p(0, 0) = 4.0 - 3.0 * c;
  p(0, 1) = s / w;
  p(0, 3) = 2.0 * omc / w;
  p(1, 0) = 3.0 * w * s;
  p(1, 1) = c;
  p(1, 3) = 2.0 * s;
  p(2, 0) = 6.0 * smx;       // 6(sin x - x)
  p(2, 1) = -2.0 * omc / w;
  p(2, 2) = 1.0;
  p(2, 3) = (4.0 * smx + x) / w;  // (4 sin x - 3x)/w
  p(3, 0) = -6.0 * w * omc;
  p(3, 1) = -2.0 * s;
  p(3, 3) = 1.0 - 4.0 * omc;  // 4 cos - 3

  // Out-of-plane harmonic block [z, zdot].
  p(4, 4) = c;
  p(4, 5) = s / w;
  p(5, 4) = -w * s;
  p(5, 5) = c;

  // gamma = \int_0^dt phi(tau) dtau * B; only columns 1, 3, 5 of phi matter.
  const double w2 = w * w;
  Mat63& g = tr.gamma;
  g.setZero();
  // column 0: integral of phi(:,1)
  g(0, 0) = omc / w2;
  g(1, 0) = s / w;
  g(2, 0) = 2.0 * (smx / w2);             // int -2(1-c)/w = 2(s - x)/w^2
  g(3, 0) = -2.0 * omc / w;
  // column 1: integral of phi(:,3)
  g(0, 1) = -2.0 * smx / w2;              // int 2(1-c)/w = -2(s - x)/w^2
  g(1, 1) = 2.0 * omc / w;
  g(2, 1) = 4.0 * omc / w2 - 1.5 * dt * dt;
  g(3, 1) = (4.0 * smx + x) / w;          // int (4c-3) = 4s/w - 3t
  // column 2: integral of phi(:,5)
  g(4, 2) = omc / w2;
  g(5, 2) = s / w;
  return tr;
}

LvlhState propagate(const LvlhState& state, const ControlAccel& accel,
                    const DiscreteTransition& tr) {
  if (!state.finite() || !accel.a.allFinite()) {
    throw std::invalid_argument("propagate: non-finite input");
  }
  LvlhState out;
  out.v = tr.phi * state.v + tr.gamma * accel.a;
  return out;
}

LvlhState propagate(const LvlhState& state, const ControlAccel& accel,
                    double dt, const OrbitParams& orbit) {
  return propagate(state, accel, state_transition(orbit, dt));
}

LvlhState integrate_oracle(const LvlhState& state, const ControlAccel& accel,
                           double dt, const OrbitParams& orbit, int substeps) {
  if (substeps < 1) throw std::invalid_argument("integrate_oracle: substeps >= 1");
  const CwMatrices m = cw_matrices(orbit);
  const double h = dt / substeps;
  Vec6 x = state.v;
  const Vec6 u = m.B * accel.a;
  for (int i = 0; i < substeps; ++i) {
    const Vec6 k1 = m.A * x + u;
    const Vec6 k2 = m.A * (x + 0.5 * h * k1) + u;
    const Vec6 k3 = m.A * (x + 0.5 * h * k2) + u;
    const Vec6 k4 = m.A * (x + h * k3) + u;
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  LvlhState out;
  out.v = x;
  return out;
}

}  // namespace swarm::orbit
