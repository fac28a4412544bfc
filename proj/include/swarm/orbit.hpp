#ifndef SWARM_ORBIT_HPP_
#define SWARM_ORBIT_HPP_

#include <Eigen/Dense>

namespace swarm::orbit {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec3 = Eigen::Vector3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

// Circular reference orbit. Units: km, s, rad.
struct OrbitParams {
  double mu = 398600.4418;  // km^3/s^2
  double a0 = 42164.0;      // km
  double omega = 0.0;       // rad/s; derived from mu/a0 when zero

  static OrbitParams geo() {
    OrbitParams p;
    p.omega = std::sqrt(p.mu / (p.a0 * p.a0 * p.a0));
    return p;
  }
  static OrbitParams from_radius(double mu, double a0) {
    OrbitParams p;
    p.mu = mu;
    p.a0 = a0;
    p.omega = std::sqrt(mu / (a0 * a0 * a0));
    return p;
  }
  bool valid() const;
};

// Relative state in the LVLH frame, ordered [x, xdot, y, ydot, z, zdot].
// x radial, y along-track, z cross-track. Positions km, velocities km/s.
struct LvlhState {
  Vec6 v = Vec6::Zero();

  double x() const { return v[0]; }
  double xdot() const { return v[1]; }
  double y() const { return v[2]; }
  double ydot() const { return v[3]; }
  double z() const { return v[4]; }
  double zdot() const { return v[5]; }

  Vec3 position() const { return Vec3(v[0], v[2], v[4]); }
  Vec3 velocity() const { return Vec3(v[1], v[3], v[5]); }
  void set_position(const Vec3& p) { v[0] = p[0]; v[2] = p[1]; v[4] = p[2]; }
  void set_velocity(const Vec3& w) { v[1] = w[0]; v[3] = w[1]; v[5] = w[2]; }
  bool finite() const { return v.allFinite(); }
};

// Thrust acceleration, km/s^2.
struct ControlAccel {
  Vec3 a = Vec3::Zero();
};

// Continuous-time system matrices of the linearized relative dynamics.
struct CwMatrices {
  Mat6 A;
  Mat63 B;
};

// Exact discretization over a fixed step: X' = phi X + gamma a.
struct DiscreteTransition {
  Mat6 phi;
  Mat63 gamma;
  double dt = 0.0;
};

// System matrices under the [x, xdot, y, ydot, z, zdot] ordering.
CwMatrices cw_matrices(const OrbitParams& orbit);

// Closed-form state-transition matrix and zero-order-hold control influence.
DiscreteTransition state_transition(const OrbitParams& orbit, double dt);

// One zero-order-hold step of the relative dynamics.
LvlhState propagate(const LvlhState& state, const ControlAccel& accel,
                    double dt, const OrbitParams& orbit);
LvlhState propagate(const LvlhState& state, const ControlAccel& accel,
                    const DiscreteTransition& tr);

// Classic RK4 integration of the continuous dynamics; test oracle for the
// closed-form path.
LvlhState integrate_oracle(const LvlhState& state, const ControlAccel& accel,
                           double dt, const OrbitParams& orbit, int substeps);

}  // namespace swarm::orbit

#endif  // SWARM_ORBIT_HPP_
