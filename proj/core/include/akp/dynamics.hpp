#pragma once

#include <stdexcept>
#include <vector>

#include "akp/linalg.hpp"
#include "akp/potential.hpp"

namespace akp {

struct State {
    double t = 0;
    Vec x, v;
};

struct PolarState {
    double r = 0, rdot = 0;
    Vec s, sdot;                      // |s| = 1, <s, sdot> = 0
    double theta = 0, thetadot = 0;   // filled when d = 2
};

PolarState to_polar(const State& st);
State to_cartesian(const PolarState& ps, double t);

/// h = |v|^2 / 2 - U(x), constant along solutions.
double energy(const Potential& pot, const State& st);

struct PolarRhs {
    double rddot = 0;
    Vec sddot;
};

/// Second derivatives (r'', s'') of the polar form of the equation of motion.
PolarRhs polar_rhs(const Potential& pot, const PolarState& ps);

enum class Termination { horizon, collision, error };

/// One accepted integrator step with its continuous-extension coefficients.
struct DenseStep {
    double t0 = 0, h = 0;
    std::vector<double> c1, c2, c3, c4, c5;
};

struct Trajectory {
    std::vector<State> states;       // accepted steps, plus requested sample times
    std::vector<DenseStep> dense;
    Termination cause = Termination::horizon;
    double h0 = 0;                   // energy at the initial state
    double max_drift = 0;            // max |h(t) - h0| over accepted states
    bool has_dense = false;

    const State& back() const { return states.back(); }
    /// Dense-output interpolation (cartesian runs only).
    State at(double t) const;
};

struct IntegrateOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double r_min = 1e-6;             // collision threshold, triggers with inward r'
    std::size_t max_steps = 50000000;
    bool sundman = false;            // integrate in rescaled time dt = r^((2+alpha)/2) dtau
    std::vector<double> sample_times;
    bool dense = true;
};

/// Adaptive embedded Runge-Kutta integration of x'' = grad U(x) from s0 up to
/// the horizon (horizon > s0.t). Collision truncates with cause recorded.
Trajectory integrate(const Potential& pot, const State& s0, double horizon,
                     const IntegrateOptions& opts = {});

/// Backward branch: integrates from s0 down to horizon < s0.t and returns the
/// states in increasing time order.
Trajectory integrate_back(const Potential& pot, const State& s0, double horizon,
                          const IntegrateOptions& opts = {});

/// d = 2 polar-coordinate formulation of the same flow (states returned in
/// Cartesian form). Used to cross-check the Cartesian integration.
Trajectory integrate_polar(const Potential& pot, const State& s0, double horizon,
                           const IntegrateOptions& opts = {});

/// States at the requested times, integrated with exact-time stepping.
std::vector<State> integrate_times(const Potential& pot, const State& s0,
                                   const std::vector<double>& times,
                                   const IntegrateOptions& opts = {});

struct MonitorSample {
    double t = 0;
    double I = 0, Idot = 0, Iddot = 0;
    double Gamma = 0, Gammadot = 0;
    double h = 0;
};

struct MonitorSeries {
    std::vector<MonitorSample> samples;
};

MonitorSample monitor_at(const Potential& pot, const State& st);
MonitorSeries monitors(const Potential& pot, const Trajectory& traj);

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CollisionAsymptotics {
    double t0 = 0;               // collision instant estimate
    double fit_exponent = 0;     // r ~ (kappa |t - t0|)^fit_exponent
    double kappa = 0;
    double beta = 0;             // limit of U(s(t))
    Vec limit_direction;         // nearest critical direction of U
    double direction_distance = 0;
    double consistency = 0;      // |beta - (2 kappa / (2+alpha))^2 / 2| / beta
};

/// Least-squares Sundman fit of log r against log |t - t0| on the collision
/// tail, with t0 refined by golden section on the fit residual.
CollisionAsymptotics fit_collision(const Potential& pot, const Trajectory& traj);

}  // namespace akp
