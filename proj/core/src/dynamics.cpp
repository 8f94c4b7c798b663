#include "akp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace akp {

namespace {

constexpr double kUnitTol = 1e-10;

}  // namespace

PolarState to_polar(const State& st) {
    PolarState ps;
    ps.r = norm(st.x);
    if (ps.r == 0)
        throw std::domain_error("to_polar: state at the origin");
    ps.s = (1.0 / ps.r) * st.x;
    ps.rdot = dot(st.v, ps.s);
    ps.sdot = st.v;
    for (std::size_t i = 0; i < ps.sdot.size(); i++)
        ps.sdot[i] = (st.v[i] - ps.rdot * ps.s[i]) / ps.r;
    if (st.x.size() == 2) {
        ps.theta = std::atan2(ps.s[1], ps.s[0]);
        ps.thetadot = ps.s[0] * ps.sdot[1] - ps.s[1] * ps.sdot[0];
    }
    return ps;
}

State to_cartesian(const PolarState& ps, double t) {
    State st;
    st.t = t;
    st.x = ps.r * ps.s;
    st.v = ps.rdot * ps.s;
    axpy(ps.r, ps.sdot, st.v);
    return st;
}

double energy(const Potential& pot, const State& st) {
    return 0.5 * dot(st.v, st.v) - pot.value(st.x);
}

PolarRhs polar_rhs(const Potential& pot, const PolarState& ps) {
    if (!(ps.r > 0))
        throw std::domain_error("polar_rhs: radius must be positive");
    if (std::abs(norm(ps.s) - 1.0) > kUnitTol)
        throw std::domain_error("polar_rhs: direction must be a unit vector");
    if (std::abs(dot(ps.s, ps.sdot)) > kUnitTol * (1 + norm(ps.sdot)))
        throw std::domain_error("polar_rhs: sdot must be tangent");
    double sd2 = dot(ps.sdot, ps.sdot);
    double alpha = pot.alpha();
    double gs = dot(pot.grad(ps.s), ps.s);  // = -alpha U(s)
    PolarRhs out;
    out.rddot = ps.r * sd2 + std::pow(ps.r, -(alpha + 1)) * gs;
    Vec tg = pot.sphere_grad(ps.s);
    out.sddot = std::pow(ps.r, -(alpha + 2)) * tg;
    axpy(-2 * ps.rdot / ps.r, ps.sdot, out.sddot);
    axpy(-sd2, ps.s, out.sddot);
    return out;
}

// ----------------------------------------------------------------------------
// Dormand-Prince 5(4) with dense output and PI step control
// ----------------------------------------------------------------------------

namespace {

struct Dopri5 {
    using Rhs = std::function<void(double, const double*, double*)>;

    explicit Dopri5(std::size_t n, Rhs rhs) : n(n), rhs(std::move(rhs)) {
        for (auto* k : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &ytmp, &ynew, &yerr})
            k->assign(n, 0.0);
    }

    std::size_t n;
    Rhs rhs;
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, yerr;

    void stages(double t, const std::vector<double>& y, double h) {
        // k1 must hold f(t, y) on entry (FSAL)
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                                a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        for (std::size_t i = 0; i < n; i++) ytmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + h / 5, ytmp.data(), k2.data());
        for (std::size_t i = 0; i < n; i++)
            ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + 3 * h / 10, ytmp.data(), k3.data());
        for (std::size_t i = 0; i < n; i++)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + 4 * h / 5, ytmp.data(), k4.data());
        for (std::size_t i = 0; i < n; i++)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + 8 * h / 9, ytmp.data(), k5.data());
        for (std::size_t i = 0; i < n; i++)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                  a65 * k5[i]);
        rhs(t + h, ytmp.data(), k6.data());
        for (std::size_t i = 0; i < n; i++)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                  b6 * k6[i]);
        rhs(t + h, ynew.data(), k7.data());
        for (std::size_t i = 0; i < n; i++)
            yerr[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                           e6 * k6[i] + e7 * k7[i]);
    }

    double error_norm(const std::vector<double>& y, double atol, double rtol) const {
        double s = 0;
        for (std::size_t i = 0; i < n; i++) {
            double sk = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            double q = yerr[i] / sk;
            s += q * q;
        }
        return std::sqrt(s / double(n));
    }

    DenseStep make_dense(double t, const std::vector<double>& y, double h) const {
        static constexpr double d1 = -12715105075.0 / 11282082432.0,
                                d3 = 87487479700.0 / 32700410799.0,
                                d4 = -10690763975.0 / 1880347072.0,
                                d5 = 701980252875.0 / 199316789632.0,
                                d6 = -1453857185.0 / 822651844.0,
                                d7 = 69997945.0 / 29380423.0;
        DenseStep ds;
        ds.t0 = t;
        ds.h = h;
        ds.c1.resize(n);
        ds.c2.resize(n);
        ds.c3.resize(n);
        ds.c4.resize(n);
        ds.c5.resize(n);
        for (std::size_t i = 0; i < n; i++) {
            double ydiff = ynew[i] - y[i];
            double bspl = h * k1[i] - ydiff;
            ds.c1[i] = y[i];
            ds.c2[i] = ydiff;
            ds.c3[i] = bspl;
            ds.c4[i] = ydiff - h * k7[i] - bspl;
            ds.c5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                            d6 * k6[i] + d7 * k7[i]);
        }
        return ds;
    }

    double initial_step(double t, const std::vector<double>& y, double atol,
                        double rtol, double span) {
        double dnf = 0, dny = 0;
        for (std::size_t i = 0; i < n; i++) {
            double sk = atol + rtol * std::abs(y[i]);
            double a = k1[i] / sk, b = y[i] / sk;
            dnf += a * a;
            dny += b * b;
        }
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
        h = std::min(h, span);
        for (std::size_t i = 0; i < n; i++) ytmp[i] = y[i] + h * k1[i];
        rhs(t + h, ytmp.data(), k2.data());
        double der2 = 0;
        for (std::size_t i = 0; i < n; i++) {
            double sk = atol + rtol * std::abs(y[i]);
            double q = (k2[i] - k1[i]) / sk;
            der2 += q * q;
        }
        der2 = std::sqrt(der2) / h;
        double der12 = std::max(der2, std::sqrt(dnf));
        double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3)
                                   : std::pow(0.01 / der12, 0.2);
        return std::min({100 * h, h1, span});
    }
};

std::vector<double> dense_eval(const DenseStep& ds, double t) {
    double th = (t - ds.t0) / ds.h, th1 = 1 - th;
    std::vector<double> y(ds.c1.size());
    for (std::size_t i = 0; i < y.size(); i++)
        y[i] = ds.c1[i] +
               th * (ds.c2[i] + th1 * (ds.c3[i] + th * (ds.c4[i] + th1 * ds.c5[i])));
    return y;
}

struct DriverConfig {
    std::size_t dim = 0;                  // spatial dimension d
    std::function<State(const std::vector<double>&, double)> unpack;
    std::function<double(const std::vector<double>&)> time_of;  // physical time
    bool monotone_time = true;            // physical time equals integration time
};

/// Shared stepping loop: records accepted states, hits sample times exactly
/// (monotone-time formulations), truncates at collisions.
Trajectory drive(const Potential& pot, Dopri5& stepper, std::vector<double> y,
                 double t_begin, double t_end, const IntegrateOptions& opts,
                 const DriverConfig& cfg) {
    Trajectory traj;
    traj.has_dense = opts.dense && cfg.monotone_time;

    std::vector<double> hits = opts.sample_times;
    std::sort(hits.begin(), hits.end());
    std::size_t next_hit = 0;
    auto skip_hits_until = [&](double t) {
        while (next_hit < hits.size() && hits[next_hit] <= t + 1e-14) next_hit++;
    };

    double t = t_begin;
    auto record = [&](double tt, const std::vector<double>& yy) {
        State st = cfg.unpack(yy, tt);
        double h = energy(pot, st);
        if (traj.states.empty()) traj.h0 = h;
        traj.max_drift = std::max(traj.max_drift, std::abs(h - traj.h0));
        traj.states.push_back(std::move(st));
    };

    stepper.rhs(t, y.data(), stepper.k1.data());
    record(t, y);
    if (cfg.monotone_time) skip_hits_until(t);

    double atol = opts.abs_tol, rtol = opts.rel_tol;
    double h = stepper.initial_step(t, y, atol, rtol, t_end - t_begin);
    double facold = 1e-4;
    const double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;

    auto radius_of = [&](const std::vector<double>& yy) {
        double r2 = 0;
        for (std::size_t i = 0; i < cfg.dim; i++) r2 += yy[i] * yy[i];
        return std::sqrt(r2);
    };
    auto inward = [&](const std::vector<double>& yy) {
        double xv = 0;
        for (std::size_t i = 0; i < cfg.dim; i++) xv += yy[i] * yy[cfg.dim + i];
        return xv < 0;
    };
    // polar formulation keeps r as the first component
    auto small_r = [&](const std::vector<double>& yy) {
        if (cfg.dim > 0) return radius_of(yy) < opts.r_min && inward(yy);
        return yy[0] < opts.r_min && yy[2] < 0;
    };

    for (std::size_t step = 0; step < opts.max_steps; step++) {
        if (t >= t_end - 1e-14 * std::max(1.0, std::abs(t_end))) {
            traj.cause = Termination::horizon;
            return traj;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            // exhausted step size: classify by proximity to the singularity
            State last = cfg.unpack(y, cfg.monotone_time ? t : cfg.time_of(y));
            traj.cause = norm(last.x) < 100 * opts.r_min ? Termination::collision
                                                         : Termination::error;
            return traj;
        }
        bool forced_hit = false;
        double t_stop = t_end;
        if (cfg.monotone_time && next_hit < hits.size() && hits[next_hit] < t_end)
            t_stop = hits[next_hit];
        double h_used = h;
        if (t + h >= t_stop) {
            h_used = t_stop - t;
            forced_hit = true;
        }

        stepper.stages(t, y, h_used);
        double err = stepper.error_norm(y, atol, rtol);
        if (err <= 1.0) {
            DenseStep ds = stepper.make_dense(t, y, h_used);  // also used to refine collisions
            double t_new = forced_hit ? t_stop : t + h_used;
            bool collided = small_r(stepper.ynew);
            if (collided && cfg.dim > 0) {
                // refine the r = r_min crossing inside the step
                double lo = 0, hi = 1;
                for (int it = 0; it < 60; it++) {
                    double mid = 0.5 * (lo + hi);
                    auto ym = dense_eval(ds, t + mid * h_used);
                    (radius_of(ym) > opts.r_min ? lo : hi) = mid;
                }
                t_new = t + hi * h_used;
                auto ym = dense_eval(ds, t_new);
                y = ym;
                record(cfg.monotone_time ? t_new : cfg.time_of(y), y);
                traj.cause = Termination::collision;
                return traj;
            }
            y = stepper.ynew;
            std::swap(stepper.k1, stepper.k7);  // FSAL
            t = t_new;
            if (traj.has_dense) traj.dense.push_back(std::move(ds));
            record(cfg.monotone_time ? t : cfg.time_of(y), y);
            if (cfg.monotone_time) skip_hits_until(t);
            if (collided) {
                traj.cause = Termination::collision;
                return traj;
            }
            double fac11 = std::pow(err, expo1);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(0.1, std::min(5.0, fac / safe));
            facold = std::max(err, 1e-4);
            double adapted = h_used / fac;
            // a step clipped to an output time must not shrink the controller step
            h = forced_hit ? std::max(h, adapted) : adapted;
        } else {
            double fac11 = std::pow(err, expo1);
            double adapted = h_used / std::min(5.0, fac11 / safe);
            h = std::min(h, adapted);
            // k1 unchanged, still f(t, y)
        }
    }
    traj.cause = Termination::error;
    return traj;
}

}  // namespace

State Trajectory::at(double t) const {
    if (!has_dense || dense.empty())
        throw std::runtime_error("trajectory: dense output not available");
    if (t <= states.front().t) return states.front();
    if (t >= states.back().t) return states.back();
    // dense steps are contiguous in time
    std::size_t lo = 0, hi = dense.size();
    while (lo + 1 < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (dense[mid].t0 <= t)
            lo = mid;
        else
            hi = mid;
    }
    auto y = dense_eval(dense[lo], t);
    std::size_t d = y.size() / 2;
    State st;
    st.t = t;
    st.x.assign(y.begin(), y.begin() + d);
    st.v.assign(y.begin() + d, y.end());
    return st;
}

Trajectory integrate(const Potential& pot, const State& s0, double horizon,
                     const IntegrateOptions& opts) {
    if (dot(s0.x, s0.x) == 0)
        throw std::domain_error("integrate: initial state at the origin");
    if (!(horizon > s0.t))
        throw std::invalid_argument("integrate: horizon must exceed the initial time");
    const std::size_t d = s0.x.size();
    const double alpha = pot.alpha();

    if (!opts.sundman) {
        Dopri5 stepper(2 * d, [&pot, d](double, const double* y, double* dy) {
            Vec x(y, y + d);
            Vec g = pot.grad(x);
            for (std::size_t i = 0; i < d; i++) {
                dy[i] = y[d + i];
                dy[d + i] = g[i];
            }
        });
        DriverConfig cfg;
        cfg.dim = d;
        cfg.monotone_time = true;
        cfg.unpack = [d](const std::vector<double>& y, double t) {
            State st;
            st.t = t;
            st.x.assign(y.begin(), y.begin() + d);
            st.v.assign(y.begin() + d, y.end());
            return st;
        };
        std::vector<double> y(2 * d);
        std::copy(s0.x.begin(), s0.x.end(), y.begin());
        std::copy(s0.v.begin(), s0.v.end(), y.begin() + d);
        return drive(pot, stepper, y, s0.t, horizon, opts, cfg);
    }

    // Sundman-rescaled clock near collisions: dt = r^((2+alpha)/2) dtau.
    // State (x, v, t); tau spans are generous since tau grows ~ log near collision.
    Dopri5 stepper(2 * d + 1, [&pot, d, alpha](double, const double* y, double* dy) {
        Vec x(y, y + d);
        double r = norm(x);
        double g = std::pow(r, (2 + alpha) / 2);
        Vec gr = pot.grad(x);
        for (std::size_t i = 0; i < d; i++) {
            dy[i] = g * y[d + i];
            dy[d + i] = g * gr[i];
        }
        dy[2 * d] = g;
    });
    DriverConfig cfg;
    cfg.dim = d;
    cfg.monotone_time = false;
    cfg.time_of = [d](const std::vector<double>& y) { return y[2 * d]; };
    cfg.unpack = [d](const std::vector<double>& y, double t) {
        State st;
        st.t = t;
        st.x.assign(y.begin(), y.begin() + d);
        st.v.assign(y.begin() + d, y.begin() + 2 * d);
        return st;
    };
    std::vector<double> y(2 * d + 1);
    std::copy(s0.x.begin(), s0.x.end(), y.begin());
    std::copy(s0.v.begin(), s0.v.end(), y.begin() + d);
    y[2 * d] = s0.t;

    // run in tau until the physical horizon: wrap the driver with a t-based stop
    // by integrating in chunks and checking the physical time.
    IntegrateOptions o = opts;
    o.dense = false;
    o.sample_times.clear();
    Trajectory total;
    total.has_dense = false;
    double tau = 0;
    for (int chunk = 0; chunk < 100000; chunk++) {
        double tau_span = 10.0;
        Trajectory part = drive(pot, stepper, y, tau, tau + tau_span, o, cfg);
        if (total.states.empty()) {
            total = part;
        } else {
            total.states.insert(total.states.end(), part.states.begin() + 1,
                                part.states.end());
            total.max_drift = std::max(total.max_drift, part.max_drift);
            total.cause = part.cause;
        }
        if (part.cause != Termination::horizon)
            return total;
        if (total.states.back().t >= horizon)
            return total;
        const State& last = total.states.back();
        std::copy(last.x.begin(), last.x.end(), y.begin());
        std::copy(last.v.begin(), last.v.end(), y.begin() + d);
        y[2 * d] = last.t;
        tau += tau_span;
    }
    total.cause = Termination::error;
    return total;
}

Trajectory integrate_back(const Potential& pot, const State& s0, double horizon,
                          const IntegrateOptions& opts) {
    if (!(horizon < s0.t))
        throw std::invalid_argument("integrate_back: horizon must precede the state");
    State refl{-s0.t, s0.x, -1.0 * s0.v};
    IntegrateOptions o = opts;
    o.sample_times.clear();
    for (double t : opts.sample_times) o.sample_times.push_back(-t);
    Trajectory fwd = integrate(pot, refl, -horizon, o);
    Trajectory out;
    out.cause = fwd.cause;
    out.h0 = fwd.h0;
    out.max_drift = fwd.max_drift;
    out.has_dense = false;
    out.states.reserve(fwd.states.size());
    for (auto it = fwd.states.rbegin(); it != fwd.states.rend(); ++it)
        out.states.push_back(State{-it->t, it->x, -1.0 * it->v});
    return out;
}

Trajectory integrate_polar(const Potential& pot, const State& s0, double horizon,
                           const IntegrateOptions& opts) {
    if (s0.x.size() != 2)
        throw std::domain_error("integrate_polar: planar states only");
    PolarState ps = to_polar(s0);
    double alpha = pot.alpha();
    // y = (r, theta, rdot, thetadot)
    Dopri5 stepper(4, [&pot, alpha](double, const double* y, double* dy) {
        double r = y[0], th = y[1], rd = y[2], td = y[3];
        double u = pot.theta_value(th), up = pot.theta_deriv(th);
        dy[0] = rd;
        dy[1] = td;
        dy[2] = r * td * td - alpha * u * std::pow(r, -(alpha + 1));
        dy[3] = -2 * rd * td / r + up * std::pow(r, -(alpha + 2));
    });
    DriverConfig cfg;
    cfg.dim = 0;  // collision check uses y[0] directly
    cfg.monotone_time = true;
    cfg.unpack = [](const std::vector<double>& y, double t) {
        double r = y[0], th = y[1], rd = y[2], td = y[3];
        State st;
        st.t = t;
        st.x = {r * std::cos(th), r * std::sin(th)};
        st.v = {rd * std::cos(th) - r * td * std::sin(th),
                rd * std::sin(th) + r * td * std::cos(th)};
        return st;
    };
    IntegrateOptions o = opts;
    o.dense = false;
    std::vector<double> y{ps.r, ps.theta, ps.rdot, ps.thetadot};
    return drive(pot, stepper, y, s0.t, horizon, o, cfg);
}

std::vector<State> integrate_times(const Potential& pot, const State& s0,
                                   const std::vector<double>& times,
                                   const IntegrateOptions& opts) {
    IntegrateOptions o = opts;
    o.sample_times = times;
    double horizon = *std::max_element(times.begin(), times.end());
    Trajectory tr = integrate(pot, s0, horizon, o);
    std::vector<State> out;
    for (double t : times) {
        auto it = std::lower_bound(tr.states.begin(), tr.states.end(), t,
                                   [](const State& s, double tt) { return s.t < tt - 1e-12; });
        if (it == tr.states.end() || std::abs(it->t - t) > 1e-9)
            throw std::runtime_error("integrate_times: requested time not reached");
        out.push_back(*it);
    }
    return out;
}

MonitorSample monitor_at(const Potential& pot, const State& st) {
    const double alpha = pot.alpha();
    MonitorSample m;
    m.t = st.t;
    double r = norm(st.x);
    double u = pot.value(st.x);
    m.h = 0.5 * dot(st.v, st.v) - u;
    m.I = r * r;
    m.Idot = 2 * dot(st.v, st.x);
    m.Iddot = 4 * m.h + 2 * (2 - alpha) * u;
    double rdot = dot(st.v, st.x) / r;
    m.Gamma = 0.5 * std::pow(r, alpha) * (2 * m.h - rdot * rdot);
    // |sdot|^2 with s = x/r
    double sd2 = 0;
    for (std::size_t i = 0; i < st.x.size(); i++) {
        double sd = (st.v[i] - rdot * st.x[i] / r) / r;
        sd2 += sd * sd;
    }
    m.Gammadot = -(2 - alpha) / 2 * std::pow(r, alpha + 1) * rdot * sd2;
    return m;
}

MonitorSeries monitors(const Potential& pot, const Trajectory& traj) {
    MonitorSeries ms;
    ms.samples.reserve(traj.states.size());
    for (const auto& st : traj.states)
        ms.samples.push_back(monitor_at(pot, st));
    return ms;
}

// ----------------------------------------------------------------------------
// Collision asymptotics
// ----------------------------------------------------------------------------

namespace {

/// Residual of the least-squares line log r = p log(t0 - t) + c.
double sundman_fit(const std::vector<double>& ts, const std::vector<double>& rs,
                   double t0, double* slope, double* intercept) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = ts.size();
    for (std::size_t i = 0; i < n; i++) {
        double x = std::log(t0 - ts[i]), y = std::log(rs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double den = n * sxx - sx * sx;
    double p = (n * sxy - sx * sy) / den;
    double c = (sy - p * sx) / n;
    double rss = 0;
    for (std::size_t i = 0; i < n; i++) {
        double e = std::log(rs[i]) - (p * std::log(t0 - ts[i]) + c);
        rss += e * e;
    }
    if (slope) *slope = p;
    if (intercept) *intercept = c;
    return rss;
}

}  // namespace

CollisionAsymptotics fit_collision(const Potential& pot, const Trajectory& traj) {
    if (traj.cause != Termination::collision)
        throw FitError("fit_collision: trajectory did not terminate in a collision");
    std::vector<double> ts, rs;
    std::vector<Vec> ss;
    for (const auto& st : traj.states) {
        double r = norm(st.x);
        if (r < 0.1) {
            ts.push_back(st.t);
            rs.push_back(r);
            ss.push_back((1.0 / r) * st.x);
        }
    }
    if (ts.size() < 50)
        throw FitError("fit_collision: need at least 50 samples with r < 0.1");

    const double alpha = pot.alpha();
    double t_end = ts.back(), r_end = rs.back();
    double beta_hat = pot.value(ss.back());
    double kappa_hat = (2 + alpha) / 2 * std::sqrt(2 * beta_hat);
    double delta_hat = std::pow(r_end, (2 + alpha) / 2) / kappa_hat;

    // golden-section refinement of the collision instant on the fit residual
    double lo = t_end + 0.05 * delta_hat, hi = t_end + 5 * delta_hat;
    const double gr = (std::sqrt(5.0) - 1) / 2;
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = sundman_fit(ts, rs, c, nullptr, nullptr);
    double fd = sundman_fit(ts, rs, d, nullptr, nullptr);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); it++) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = sundman_fit(ts, rs, c, nullptr, nullptr);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = sundman_fit(ts, rs, d, nullptr, nullptr);
        }
    }
    CollisionAsymptotics out;
    out.t0 = 0.5 * (a + b);
    double slope, intercept;
    sundman_fit(ts, rs, out.t0, &slope, &intercept);
    out.fit_exponent = slope;
    out.kappa = std::exp(intercept / slope);

    // beta from the U(s(t)) limit over the innermost samples
    std::size_t m = std::min<std::size_t>(10, ss.size());
    double beta = 0;
    for (std::size_t i = ss.size() - m; i < ss.size(); i++)
        beta += pot.value(ss[i]);
    out.beta = beta / m;

    double beta_pred = 0.5 * std::pow(2 * out.kappa / (2 + alpha), 2);
    out.consistency = std::abs(out.beta - beta_pred) / out.beta;

    out.limit_direction = pot.critical_structure().nearest(ss.back(), &out.direction_distance);
    return out;
}

}  // namespace akp
