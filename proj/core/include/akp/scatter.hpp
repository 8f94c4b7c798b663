#pragma once

#include <string>

#include "akp/dynamics.hpp"
#include "akp/minimize.hpp"

namespace akp {

struct ContinuationSchedule {
    std::vector<double> radii;  // strictly increasing, at least 3

    static ContinuationSchedule geometric(double r1 = 10, double ratio = 2,
                                          int count = 6);
    void validate() const;
};

struct ScatterOptions {
    MinimizeOptions minimize;
    double stage_tol = 1e-4;            // scaled stage-agreement threshold
    double escape_angle_tol = 1e-2;     // acceptance on measured escape angles
    double rho_tol = 1e-2;              // relative stabilization of rho_n
    double escape_horizon_cap = 2e6;
    double origin_offset = 1e-3;        // start radius used when x0 = 0
    bool assume_alpha_bar_ok = false;   // acknowledges the external threshold
};

struct EscapeData {
    Vec s_plus;
    double radial_rate = 0;        // fitted r(t)/t slope on the outer half
    double direction_residual = 0; // sup over the tail of |s(t) - s_plus|
    double tail_bound = 0;         // Lemma-2.4-style bound at the tail start
    bool gamma_monotone = false;
};

/// (2/alpha) sqrt(2 h r0^alpha + 2 Umax) / (2h)^((2+alpha)/4) * (t1-t0)^(-alpha/2),
/// an upper bound for the remaining direction variation after t1.
double sdot_tail_bound(const Potential& pot, double h, double r0, double t0, double t1);

EscapeData escape_fit(const Potential& pot, const Trajectory& traj, double h);

struct StageDiagnostics {
    double radius = 0;
    double T = 0;
    double rho = 0;             // closest approach (time-shifted in bi-hyperbolic runs)
    double value = 0;           // A_h of the stage minimizer
    double energy = 0;
    double agreement = -1;      // scaled sup distance to the previous stage
    bool collision_suspect = false;
    double duration_bound = 0;  // (R - rho)^2 / Phi with Phi from phi_h_bound
    bool duration_bound_ok = true;
};

struct ContinuationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A collision-suspect minimizer in a regime where the theory guarantees
/// collision-free minimizers.
struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HyperbolicSolution {
    MinimizeResult final_stage;
    Trajectory trajectory;   // shooting-refined orbit continued to the escape horizon
    EscapeData escape;
    ContinuationSchedule schedule;
    std::vector<StageDiagnostics> stages;
    double target_angle_error = 0;  // |s(end) - s_target|
    bool accepted = false;
    std::string warnings;
};

/// Theorem-1.5-style construction: free-time minimizers to R_n s_target,
/// warm-started up the radius ladder, accepted on stage-to-stage agreement
/// plus escape diagnostics of the shooting-refined orbit.
HyperbolicSolution hyperbolic_solve(const Potential& pot, const Vec& x0,
                                    const Vec& s_target, double h,
                                    const ContinuationSchedule& schedule =
                                        ContinuationSchedule::geometric(),
                                    const ScatterOptions& opts = {});

struct BihyperbolicSolution {
    MinimizeResult final_stage;
    Trajectory forward, backward;  // halves from the time-shifted closest approach
    EscapeData escape_plus, escape_minus;
    ContinuationSchedule schedule;
    std::vector<StageDiagnostics> stages;
    double theta_plus_measured = 0, theta_minus_measured = 0;
    double rho = 0;
    int case_matched = 0;  // Prop-6.2-style case after symmetry normalization, 0 if none
    bool accepted = false;
    std::string warnings;
};

/// Planar collision-free-regime case matching for lifted angle pairs, after
/// joint 2 pi shifts and reflections across the coordinate axes. Returns the
/// matched case index 1..3, or 0 when no case applies.
int match_collision_free_case(double theta_minus, double theta_plus);

/// Theorems-1.6/1.8-style construction: winding-constrained free-time
/// minimizers between radius-R_n endpoints, time-shifted so the closest
/// approach sits at t = 0; accepted when rho_n stabilizes, stages agree, and
/// both measured escape angles hit the targets.
BihyperbolicSolution bihyperbolic_solve(const Potential& pot, double theta_minus,
                                        double theta_plus, double h,
                                        const ContinuationSchedule& schedule =
                                            ContinuationSchedule::geometric(),
                                        const ScatterOptions& opts = {});

}  // namespace akp
