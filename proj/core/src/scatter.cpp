#include "akp/scatter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace akp {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double a) {
    return std::remainder(a, 2 * kPi);
}

}  // namespace

ContinuationSchedule ContinuationSchedule::geometric(double r1, double ratio, int count) {
    ContinuationSchedule s;
    double r = r1;
    for (int i = 0; i < count; i++) {
        s.radii.push_back(r);
        r *= ratio;
    }
    return s;
}

void ContinuationSchedule::validate() const {
    if (radii.size() < 3)
        throw std::invalid_argument("schedule: need at least 3 stages");
    for (std::size_t i = 0; i + 1 < radii.size(); i++)
        if (!(radii[i] < radii[i + 1]))
            throw std::invalid_argument("schedule: radii must increase strictly");
}

double sdot_tail_bound(const Potential& pot, double h, double r0, double t0,
                       double t1) {
    const double alpha = pot.alpha();
    return 2 / alpha *
           std::sqrt(2 * h * std::pow(r0, alpha) + 2 * pot.u_max()) /
           std::pow(2 * h, (2 + alpha) / 4) * std::pow(t1 - t0, -alpha / 2);
}

EscapeData escape_fit(const Potential& pot, const Trajectory& traj, double h) {
    const auto& st = traj.states;
    if (st.size() < 16)
        throw FitError("escape_fit: too few samples");
    std::size_t imin = 0;
    double rmin = 1e300, rmax = 0;
    std::vector<double> radius(st.size());
    for (std::size_t i = 0; i < st.size(); i++) {
        radius[i] = norm(st[i].x);
        if (radius[i] < rmin) {
            rmin = radius[i];
            imin = i;
        }
        rmax = std::max(rmax, radius[i]);
    }
    if (rmax < 10 * rmin)
        throw FitError("escape_fit: trajectory does not reach 10x the closest approach");

    EscapeData out;
    out.s_plus = normalized(st.back().x);

    // linear fit of r against t on the outer half (by time from the minimum)
    double t_mid = 0.5 * (st[imin].t + st.back().t);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = imin; i < st.size(); i++) {
        if (st[i].t < t_mid) continue;
        sx += st[i].t;
        sy += radius[i];
        sxx += st[i].t * st[i].t;
        sxy += st[i].t * radius[i];
        n++;
    }
    out.radial_rate = (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);

    // direction residual over the outer half, and the tail bound from the
    // first outgoing sample
    for (std::size_t i = imin; i < st.size(); i++) {
        if (st[i].t < t_mid) continue;
        out.direction_residual =
            std::max(out.direction_residual,
                     dist(normalized(st[i].x), out.s_plus));
    }
    std::size_t iout = imin;
    while (iout < st.size() && dot(st[iout].x, st[iout].v) < 0) iout++;
    if (iout >= st.size()) iout = imin;
    out.tail_bound =
        sdot_tail_bound(pot, h, radius[iout], st[iout].t, std::max(t_mid, st[iout].t + 1e-9));

    out.gamma_monotone = true;
    double prev = 1e300;
    for (std::size_t i = iout; i < st.size(); i++) {
        auto m = monitor_at(pot, st[i]);
        if (m.Gamma > prev + 1e-9 * (1 + std::abs(prev))) out.gamma_monotone = false;
        prev = m.Gamma;
    }
    return out;
}

// ----------------------------------------------------------------------------
// Shooting refinement of variational stages
// ----------------------------------------------------------------------------

namespace {

Vec initial_velocity_guess(const Path& path, const Potential& pot) {
    double dt = path.times[1] - path.times[0];
    Vec v = (1.0 / dt) * (path.nodes[1] - path.nodes[0]);
    Vec g = pot.grad(path.nodes[0]);
    axpy(-0.5 * dt, g, v);
    return v;
}

/// Newton shooting on the initial velocity for the two-point problem
/// x(0) = p, x(T) = q; returns the refined trajectory over [0, T].
Trajectory refine_bvp(const Potential& pot, const Vec& p, const Vec& q, double T,
                      Vec v0, double target_tol) {
    const std::size_t d = p.size();
    IntegrateOptions io;  // dense output kept: stage comparisons interpolate
    auto shoot = [&](const Vec& v) {
        State s0{0, p, v};
        return integrate(pot, s0, T, io);
    };
    Trajectory traj = shoot(v0);
    for (int it = 0; it < 25; it++) {
        if (traj.cause != Termination::horizon)
            throw ContinuationFailure("refine_bvp: trajectory truncated while shooting");
        Vec miss = traj.back().x - q;
        double err = norm(miss);
        if (err <= target_tol) return traj;
        // finite-difference Jacobian d x(T) / d v0
        std::vector<double> J(d * d);
        double step = 1e-7 * std::max(1.0, norm(v0));
        for (std::size_t j = 0; j < d; j++) {
            Vec vpt = v0;
            vpt[j] += step;
            Trajectory tp = shoot(vpt);
            if (tp.cause != Termination::horizon)
                throw ContinuationFailure("refine_bvp: perturbed shot truncated");
            for (std::size_t i = 0; i < d; i++)
                J[i * d + j] = (tp.back().x[i] - traj.back().x[i]) / step;
        }
        // solve J dv = -miss (gaussian elimination, d <= 3)
        Vec dv = miss;
        {
            std::vector<double> A = J;
            for (std::size_t c = 0; c < d; c++) {
                std::size_t piv = c;
                for (std::size_t r = c + 1; r < d; r++)
                    if (std::abs(A[r * d + c]) > std::abs(A[piv * d + c])) piv = r;
                if (std::abs(A[piv * d + c]) < 1e-30)
                    throw ContinuationFailure("refine_bvp: singular shooting Jacobian");
                std::swap_ranges(A.begin() + piv * d, A.begin() + (piv + 1) * d,
                                 A.begin() + c * d);
                std::swap(dv[piv], dv[c]);
                for (std::size_t r = 0; r < d; r++) {
                    if (r == c) continue;
                    double f = A[r * d + c] / A[c * d + c];
                    for (std::size_t k = c; k < d; k++) A[r * d + k] -= f * A[c * d + k];
                    dv[r] -= f * dv[c];
                }
            }
            for (std::size_t c = 0; c < d; c++) dv[c] /= -A[c * d + c];
        }
        // damped update
        double lam = 1.0;
        for (int bt = 0; bt < 8; bt++) {
            Vec vt = v0;
            axpy(lam, dv, vt);
            Trajectory tt = shoot(vt);
            if (tt.cause == Termination::horizon && dist(tt.back().x, q) < err) {
                v0 = vt;
                traj = std::move(tt);
                break;
            }
            lam *= 0.5;
            if (bt == 7)
                throw ContinuationFailure("refine_bvp: shooting stalled");
        }
    }
    throw ContinuationFailure("refine_bvp: no convergence in 25 Newton steps");
}

/// Scaled sup distance between two refined trajectories on [t0, t1].
double stage_agreement(const Trajectory& a, const Trajectory& b, double t0, double t1) {
    double worst = 0;
    const int samples = 160;
    for (int k = 0; k <= samples; k++) {
        double t = t0 + (t1 - t0) * k / samples;
        Vec xa = a.at(t).x, xb = b.at(t).x;
        double scale = 1 + std::max(norm(xa), norm(xb));
        worst = std::max(worst, dist(xa, xb) / scale);
    }
    return worst;
}

/// Horizon at which the Lemma-2.4 bound drops below the angle tolerance.
double escape_horizon(const Potential& pot, double h, double r0, double t0,
                      double tol, double cap) {
    const double alpha = pot.alpha();
    double c = 2 / alpha * std::sqrt(2 * h * std::pow(r0, alpha) + 2 * pot.u_max()) /
               std::pow(2 * h, (2 + alpha) / 4);
    double t = t0 + std::pow(c / tol, 2 / alpha);
    return std::min(t, cap);
}

Path radial_extension(const Path& base, const Vec& to, double h) {
    Path out = base;
    Vec from = base.nodes.back();
    double len = dist(from, to);
    if (len < 1e-12) return out;
    double speed = std::sqrt(2 * h);
    int steps = 16;
    for (int k = 1; k <= steps; k++) {
        double u = double(k) / steps;
        out.times.push_back(base.times.back() + len / speed * u);
        Vec x = from;
        axpy(u, to - from, x);
        out.nodes.push_back(x);
    }
    return out;
}

}  // namespace

// ----------------------------------------------------------------------------
// hyperbolic_solve
// ----------------------------------------------------------------------------

HyperbolicSolution hyperbolic_solve(const Potential& pot, const Vec& x0,
                                    const Vec& s_target, double h,
                                    const ContinuationSchedule& schedule,
                                    const ScatterOptions& opts) {
    if (!(h > 0))
        throw std::invalid_argument("hyperbolic_solve: h must be positive");
    if (std::abs(norm(s_target) - 1) > 1e-9)
        throw std::invalid_argument("hyperbolic_solve: target direction must be a unit vector");
    schedule.validate();

    HyperbolicSolution sol;
    sol.schedule = schedule;
    Vec start = x0;
    if (dot(x0, x0) == 0) {
        // origin starts are interpreted as a limit along the ejection test path
        start = opts.origin_offset * s_target;
        sol.warnings += "x0 = 0 lifted to an offset start along the target ray\n";
    }
    double r0 = norm(start);
    if (schedule.radii.front() <= 2 * r0)
        throw std::invalid_argument("hyperbolic_solve: schedule starts inside |x0|");

    std::vector<MinimizeResult> results;
    std::vector<Trajectory> refined;
    for (std::size_t n = 0; n < schedule.radii.size(); n++) {
        double R = schedule.radii[n];
        Vec endpoint = R * s_target;
        MinimizeResult res;
        if (n == 0) {
            res = free_time_minimize(pot, start, endpoint, h, opts.minimize);
        } else {
            Path seed = radial_extension(results.back().path, endpoint, h);
            res = free_time_minimize_seeded(pot, start, endpoint, h, seed, opts.minimize);
        }

        StageDiagnostics diag;
        diag.radius = R;
        diag.T = res.T;
        diag.rho = res.min_radius;
        diag.value = res.value;
        diag.energy = res.energy_of_path;
        diag.collision_suspect = res.collision_suspect;
        {
            PhiBoundArgs arc;
            arc.radius = std::max(r0, 1e-6);
            double c1 = phi_h_bound(pot, PhiBoundKind::sphere_arc, h, arc);
            PhiBoundArgs rad;
            rad.r1 = std::max(r0, 1e-6);
            rad.r2 = R;
            double phi = c1 + phi_h_bound(pot, PhiBoundKind::radial, h, rad);
            diag.duration_bound = (R - diag.rho) * (R - diag.rho) / phi;
            diag.duration_bound_ok = res.T >= diag.duration_bound - 1e-9;
        }

        Vec v0 = initial_velocity_guess(res.path, pot);
        refined.push_back(refine_bvp(pot, start, endpoint, res.T, v0, 1e-9 * R));
        if (n > 0) {
            double t_shared = 0.5 * results.back().T;
            diag.agreement = stage_agreement(refined[n - 1], refined[n], 0, t_shared);
        }
        results.push_back(std::move(res));
        sol.stages.push_back(diag);
    }

    bool cauchy = sol.stages.back().agreement >= 0 &&
                  sol.stages.back().agreement <= opts.stage_tol;
    if (!cauchy) {
        std::ostringstream os;
        os << "stage agreement did not reach " << opts.stage_tol << ":";
        for (const auto& d : sol.stages) os << " " << d.agreement;
        sol.warnings += os.str() + "\n";
    }

    // continue the refined final stage out to the escape horizon
    const Trajectory& last = refined.back();
    double t_esc = escape_horizon(pot, h, r0, 0, opts.escape_angle_tol / 2,
                                  opts.escape_horizon_cap);
    IntegrateOptions io;
    io.dense = false;
    State s0{0, start, refined.back().states.front().v};
    sol.trajectory = integrate(pot, s0, std::max(t_esc, last.back().t * 2), io);
    sol.escape = escape_fit(pot, sol.trajectory, h);
    sol.target_angle_error = dist(sol.escape.s_plus, s_target);

    double rate_err = std::abs(sol.escape.radial_rate - std::sqrt(2 * h)) /
                      std::sqrt(2 * h);
    double final_bound = sdot_tail_bound(pot, h, r0, 0, last.back().t);
    sol.accepted = cauchy && rate_err <= 0.01 &&
                   sol.target_angle_error <= final_bound + opts.escape_angle_tol;
    sol.final_stage = std::move(results.back());
    return sol;
}

// ----------------------------------------------------------------------------
// bihyperbolic_solve
// ----------------------------------------------------------------------------

namespace {

bool in_case_i(double tm, double tp) {
    return tm >= 0 && tm <= kPi && tp >= -kPi && tp <= 2 * kPi;
}
bool in_case_ii(double tm, double tp) {
    return std::abs(tm) <= 1e-12 && tp >= -2 * kPi && tp <= 2 * kPi;
}
bool in_case_iii(double tm, double tp) {
    return std::abs(tm - kPi) <= 1e-12 && tp >= -kPi && tp <= 3 * kPi;
}

}  // namespace

int match_collision_free_case(double tm, double tp) {
    for (int k = -2; k <= 2; k++) {
        double a = tm + 2 * kPi * k, b = tp + 2 * kPi * k;
        for (int g = 0; g < 4; g++) {
            double am = a, bp = b;
            if (g & 1) {  // real-axis reflection
                am = -am;
                bp = -bp;
            }
            if (g & 2) {  // imaginary-axis reflection
                am = kPi - am;
                bp = kPi - bp;
            }
            if (in_case_ii(am, bp)) return 2;
            if (in_case_iii(am, bp)) return 3;
            if (in_case_i(am, bp)) return 1;
        }
    }
    return 0;
}

/// Time of the closest approach via the parabola through the three samples
/// around the discrete minimum of the radius.
template <typename GetT, typename GetR>
double parabola_min_time(std::size_t count, GetT time_of, GetR radius_of) {
    std::size_t imin = 0;
    double rmin = 1e300;
    for (std::size_t i = 0; i < count; i++) {
        double r = radius_of(i);
        if (r < rmin) {
            rmin = r;
            imin = i;
        }
    }
    if (imin == 0 || imin + 1 == count) return time_of(imin);
    double t0 = time_of(imin - 1), t1 = time_of(imin), t2 = time_of(imin + 1);
    double f0 = radius_of(imin - 1), f1 = rmin, f2 = radius_of(imin + 1);
    double d1 = (f1 - f0) / (t1 - t0), d2 = (f2 - f1) / (t2 - t1);
    if (d2 - d1 <= 0) return t1;
    double tstar = (0.5 * (t0 + t1) * d2 - 0.5 * (t1 + t2) * d1) / (d2 - d1);
    return std::clamp(tstar, t0, t2);
}

double path_min_time(const Path& path) {
    return parabola_min_time(
        path.nodes.size(), [&](std::size_t i) { return path.times[i]; },
        [&](std::size_t i) { return norm(path.nodes[i]); });
}

double trajectory_min_time(const Trajectory& traj) {
    return parabola_min_time(
        traj.states.size(), [&](std::size_t i) { return traj.states[i].t; },
        [&](std::size_t i) { return norm(traj.states[i].x); });
}

}  // namespace

BihyperbolicSolution bihyperbolic_solve(const Potential& pot, double theta_minus,
                                        double theta_plus, double h,
                                        const ContinuationSchedule& schedule,
                                        const ScatterOptions& opts) {
    if (pot.dim() != 2)
        throw std::invalid_argument("bihyperbolic_solve: planar problems only");
    if (!(std::abs(theta_plus - theta_minus) > kPi))
        throw std::invalid_argument(
            "bihyperbolic_solve: need |theta_plus - theta_minus| > pi");
    if (!(h > 0))
        throw std::invalid_argument("bihyperbolic_solve: h must be positive");
    schedule.validate();

    BihyperbolicSolution sol;
    sol.schedule = schedule;
    bool guarded = false;  // theory guarantees collision-free minimizers
    if (pot.is_gutzwiller()) {
        auto rep = pot.check_conditions();
        sol.case_matched = match_collision_free_case(theta_minus, theta_plus);
        if (rep.u4 == Verdict::holds && sol.case_matched > 0) {
            guarded = true;
        } else {
            sol.warnings +=
                "weight-ratio condition or angle-case unmatched; proceeding in the "
                "nondegenerate-minimum regime";
            if (!opts.assume_alpha_bar_ok)
                sol.warnings += " (alpha may lie below the required threshold)";
            sol.warnings += "\n";
        }
    } else {
        sol.warnings += opts.assume_alpha_bar_ok
                            ? ""
                            : "general potential: alpha may lie below the required "
                              "threshold\n";
    }

    auto time_reverse = [](const Path& p) {
        Path r;
        for (std::size_t i = p.times.size(); i-- > 0;) {
            r.times.push_back(p.times.back() - p.times[i]);
            r.nodes.push_back(p.nodes[i]);
        }
        return r;
    };

    std::vector<MinimizeResult> results;
    std::vector<Trajectory> refined;   // shooting-refined stage orbits on [0, T_n]
    std::vector<double> tmins;         // closest-approach time on each refined orbit
    std::vector<double> rhos;
    for (std::size_t n = 0; n < schedule.radii.size(); n++) {
        double R = schedule.radii[n];
        MinimizeResult res;
        if (n == 0) {
            res = minimize_constrained(pot, R, theta_minus, R, theta_plus, h,
                                       opts.minimize);
        } else {
            // previous stage extended radially at both ends to the new radius
            Vec pminus{R * std::cos(theta_minus), R * std::sin(theta_minus)};
            Vec pplus{R * std::cos(theta_plus), R * std::sin(theta_plus)};
            Path ext = radial_extension(results.back().path, pplus, h);
            Path full = time_reverse(radial_extension(time_reverse(ext), pminus, h));
            res = minimize_constrained_seeded(pot, R, theta_minus, R, theta_plus, h,
                                              full, opts.minimize);
        }
        if (res.collision_suspect && guarded)
            throw SolverFailure(
                "bihyperbolic_solve: collision-suspect minimizer in a regime where "
                "minimizers are collision-free");

        Vec v0 = initial_velocity_guess(res.path, pot);
        Trajectory ref = refine_bvp(pot, res.path.nodes.front(), res.path.nodes.back(),
                                    res.T, v0, 1e-9 * R);
        double tmin = trajectory_min_time(ref);
        double rho = norm(ref.at(tmin).x);

        // shift the discrete grid so the closest approach sits at t = 0
        double tmin_path = path_min_time(res.path);
        for (auto& t : res.path.times) t -= tmin_path;

        StageDiagnostics diag;
        diag.radius = R;
        diag.T = res.T;
        diag.rho = rho;
        diag.value = res.value;
        diag.energy = res.energy_of_path;
        diag.collision_suspect = res.collision_suspect;
        {
            PhiBoundArgs rad;
            rad.r1 = 1.0;
            rad.r2 = R;
            double phi = 2 * (phi_h_bound(pot, PhiBoundKind::from_origin, h) +
                              phi_h_bound(pot, PhiBoundKind::radial, h, rad));
            double tplus = res.T - tmin;
            diag.duration_bound = (R - rho) * (R - rho) / phi;
            diag.duration_bound_ok = tplus >= diag.duration_bound - 1e-9;
        }
        if (n > 0) {
            // scaled sup distance of the refined orbits on the shared window
            // centered at the closest approach
            const Trajectory& prev = refined.back();
            double w_lo = -0.5 * tmins.back(), w_hi = 0.5 * (prev.back().t - tmins.back());
            double worst = 0;
            for (int k = 0; k <= 160; k++) {
                double t = w_lo + (w_hi - w_lo) * k / 160;
                Vec xa = prev.at(t + tmins.back()).x;
                Vec xb = ref.at(t + tmin).x;
                worst = std::max(worst,
                                 dist(xa, xb) / (1 + std::max(norm(xa), norm(xb))));
            }
            diag.agreement = worst;
        }
        rhos.push_back(rho);
        tmins.push_back(tmin);
        refined.push_back(std::move(ref));
        results.push_back(std::move(res));
        sol.stages.push_back(diag);
    }

    // coercivity guard: rho growing across every stage means the construction lost
    bool rho_grows = true;
    for (std::size_t i = 0; i + 1 < rhos.size(); i++)
        rho_grows &= rhos[i + 1] > rhos[i] * 1.2 + 0.1;
    if (rho_grows)
        throw ContinuationFailure("bihyperbolic_solve: rho_n grows on every stage, "
                                  "lost coercivity");

    bool rho_stable = true;
    for (std::size_t i = rhos.size() - 3; i + 1 < rhos.size(); i++)
        rho_stable &= std::abs(rhos[i + 1] - rhos[i]) <= opts.rho_tol * (1 + rhos[i]);
    sol.rho = rhos.back();

    // split the refined final orbit at the closest approach and continue both
    // halves to the escape horizon
    State center = refined.back().at(tmins.back());
    center.t = 0;
    double rmin = norm(center.x);
    double t_esc = escape_horizon(pot, h, std::max(rmin, 0.1), 0,
                                  opts.escape_angle_tol / 2, opts.escape_horizon_cap);
    IntegrateOptions io;
    io.dense = false;
    sol.forward = integrate(pot, center, t_esc, io);
    State mirrored{0, center.x, -1.0 * center.v};
    sol.backward = integrate(pot, mirrored, t_esc, io);

    sol.escape_plus = escape_fit(pot, sol.forward, h);
    sol.escape_minus = escape_fit(pot, sol.backward, h);
    sol.theta_plus_measured = std::atan2(sol.escape_plus.s_plus[1],
                                         sol.escape_plus.s_plus[0]);
    sol.theta_minus_measured = std::atan2(sol.escape_minus.s_plus[1],
                                          sol.escape_minus.s_plus[0]);

    double err_plus = std::abs(wrap_pi(sol.theta_plus_measured - theta_plus));
    double err_minus = std::abs(wrap_pi(sol.theta_minus_measured - theta_minus));
    bool cauchy = sol.stages.back().agreement >= 0 &&
                  sol.stages.back().agreement <= opts.stage_tol;
    sol.accepted = rho_stable && cauchy && err_plus <= opts.escape_angle_tol &&
                   err_minus <= opts.escape_angle_tol;
    if (!sol.accepted) {
        std::ostringstream os;
        os << "acceptance: rho_stable=" << rho_stable << " cauchy=" << cauchy
           << " err_plus=" << err_plus << " err_minus=" << err_minus;
        sol.warnings += os.str() + "\n";
    }
    sol.final_stage = std::move(results.back());
    return sol;
}

}  // namespace akp
