#pragma once

#include <numbers>
#include <stdexcept>

#include "akp/paths.hpp"
#include "akp/potential.hpp"

namespace akp {

struct MinimizeOptions {
    int nodes = 256;               // segments; the grid has nodes+1 points
    int max_iters = 4000;
    double grad_tol = 1e-8;        // scaled RMS gradient threshold
    double barrier_radius = 1e-3;  // soft floor on |node| during line search
    int restarts = 3;              // random-perturbation restarts on top of the seed
    unsigned seed = 0;
    double energy_tol = 1e-4;

    // free-time outer search
    double t_lo = 0, t_hi = 0;     // 0: bracket chosen from the endpoint geometry
    int bracket_samples = 14;
    double golden_tol = 1e-7;      // relative tolerance on T
};

struct MinimizeResult {
    Path path;
    double value = 0;            // action, or A_h for free-time problems
    double grad_norm = 0;
    double energy_of_path = 0;   // mean of per-segment discrete energies
    double el_residual = 0;      // scaled interior force-balance residual
    double min_radius = 0;
    bool collision_suspect = false;
    double T = 0;
    int restarts_used = 0;
    bool converged = false;
};

struct BracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConstraintError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Quasi-Newton minimization of the discrete fixed-time action over the
/// interior nodes of an N-segment path from p to q on [0, T], multi-start.
MinimizeResult minimize_fixed_time(const Potential& pot, const Vec& p, const Vec& q,
                                   double T, const MinimizeOptions& opts = {});

/// Free-time minimization of A_h: outer bracketing plus golden section on
/// f(T) = min_paths A_h(.; 0, T), inner solves warm-started across T.
MinimizeResult free_time_minimize(const Potential& pot, const Vec& p, const Vec& q,
                                  double h, const MinimizeOptions& opts = {});

enum class PhiBoundKind { radial, sphere_arc, from_origin };

struct PhiBoundArgs {
    double r1 = 0, r2 = 0;                // radial: aligned endpoints r1 < r2
    double radius = 1;                    // sphere_arc: common radius
    double angle = std::numbers::pi;      // sphere_arc: geodesic angle
};

/// Closed-form upper bounds for the action potential phi_h from the explicit
/// test paths (radial ray, sphere arc, t^(2/(2+alpha)) ejection).
double phi_h_bound(const Potential& pot, PhiBoundKind kind, double h,
                   const PhiBoundArgs& args = {});

/// Planar free-time minimization restricted to the topological class with
/// lifted endpoint angles (theta_minus, theta_plus).
MinimizeResult minimize_constrained(const Potential& pot, double r1, double theta_minus,
                                    double r2, double theta_plus, double h,
                                    const MinimizeOptions& opts = {});

/// Warm-started variants used by continuation drivers: the seed path is
/// resampled onto the working grid and sets the duration bracket center.
MinimizeResult free_time_minimize_seeded(const Potential& pot, const Vec& p,
                                         const Vec& q, double h, const Path& seed,
                                         const MinimizeOptions& opts = {});

MinimizeResult minimize_constrained_seeded(const Potential& pot, double r1,
                                           double theta_minus, double r2,
                                           double theta_plus, double h,
                                           const Path& seed,
                                           const MinimizeOptions& opts = {});

}  // namespace akp
