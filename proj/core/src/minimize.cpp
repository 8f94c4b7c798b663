#include "akp/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <thread>

namespace akp {

namespace {

constexpr double kGx[4] = {0.06943184420297371, 0.33000947820757187,
                           0.6699905217924281, 0.9305681557970262};
constexpr double kGw[4] = {0.17392742256872692, 0.32607257743127305,
                           0.32607257743127305, 0.17392742256872692};

// ----------------------------------------------------------------------------
// Discrete action problem on a uniform grid
// ----------------------------------------------------------------------------

/// Interior node positions are packed as z = (x_1, ..., x_{N-1}) with the
/// endpoints pinned. The objective is the exact action of the discretized
/// functional (piecewise-linear kinetic term, 4-point Gauss potential), plus a
/// soft log-barrier inside barrier_radius used only while searching.
struct DiscreteProblem {
    const Potential& pot;
    Vec p, q;
    double T = 1;
    int N = 16;
    double barrier_radius = 1e-3;
    double barrier_mu = 1e-6;
    bool enforce_lift = false;
    double lift_minus = 0, lift_plus = 0;

    int d() const { return int(p.size()); }
    std::size_t size() const { return std::size_t(N - 1) * p.size(); }

    const double* node(const std::vector<double>& z, int i) const {
        // i in [0, N]; endpoints map to p/q
        if (i == 0) return p.data();
        if (i == N) return q.data();
        return z.data() + std::size_t(i - 1) * p.size();
    }

    Path to_path(const std::vector<double>& z) const {
        Path path;
        path.times.resize(N + 1);
        path.nodes.resize(N + 1);
        for (int i = 0; i <= N; i++) {
            path.times[i] = T * i / N;
            const double* xi = node(z, i);
            path.nodes[i].assign(xi, xi + d());
        }
        return path;
    }

    /// Raw discrete action and its exact gradient, no barrier.
    double action(const std::vector<double>& z, std::vector<double>* grad) const {
        const int dd = d();
        const double dt = T / N;
        if (grad) std::fill(grad->begin(), grad->end(), 0.0);
        double a = 0;
        Vec pt(dd), g(dd);
        for (int i = 0; i < N; i++) {
            const double* xa = node(z, i);
            const double* xb = node(z, i + 1);
            double kin = 0;
            for (int k = 0; k < dd; k++) {
                double dx = xb[k] - xa[k];
                kin += dx * dx;
            }
            a += kin / (2 * dt);
            if (grad) {
                for (int k = 0; k < dd; k++) {
                    double dx = (xb[k] - xa[k]) / dt;
                    if (i > 0) (*grad)[std::size_t(i - 1) * dd + k] -= dx;
                    if (i + 1 < N) (*grad)[std::size_t(i) * dd + k] += dx;
                }
            }
            for (int gq = 0; gq < 4; gq++) {
                for (int k = 0; k < dd; k++)
                    pt[k] = xa[k] + kGx[gq] * (xb[k] - xa[k]);
                a += dt * kGw[gq] * pot.value(pt);
                if (grad) {
                    g = pot.grad(pt);
                    double wl = dt * kGw[gq] * (1 - kGx[gq]);
                    double wr = dt * kGw[gq] * kGx[gq];
                    for (int k = 0; k < dd; k++) {
                        if (i > 0) (*grad)[std::size_t(i - 1) * dd + k] += wl * g[k];
                        if (i + 1 < N) (*grad)[std::size_t(i) * dd + k] += wr * g[k];
                    }
                }
            }
        }
        return a;
    }

    bool lift_ok(const std::vector<double>& z) const {
        if (!enforce_lift) return true;
        try {
            Path path = to_path(z);
            return in_class(path, lift_minus, lift_plus, 0.5);
        } catch (const LiftError&) {
            return false;
        }
    }

    /// Search objective: action + barrier; +inf for infeasible iterates.
    double eval(const std::vector<double>& z, std::vector<double>* grad) const {
        const int dd = d();
        for (int i = 1; i < N; i++) {
            const double* xi = node(z, i);
            double r2 = 0;
            for (int k = 0; k < dd; k++) r2 += xi[k] * xi[k];
            if (r2 < 0.0625 * barrier_radius * barrier_radius)
                return std::numeric_limits<double>::infinity();
        }
        if (!lift_ok(z)) return std::numeric_limits<double>::infinity();
        double a = action(z, grad);
        for (int i = 1; i < N; i++) {
            const double* xi = node(z, i);
            double r = 0;
            for (int k = 0; k < dd; k++) r += xi[k] * xi[k];
            r = std::sqrt(r);
            if (r < barrier_radius) {
                double l = std::log(barrier_radius / r);
                a += barrier_mu * l * l;
                if (grad) {
                    double c = -2 * barrier_mu * l / (r * r);
                    for (int k = 0; k < dd; k++)
                        (*grad)[std::size_t(i - 1) * dd + k] += c * xi[k];
                }
            }
        }
        return a;
    }

    /// Block-tridiagonal Hessian of the search objective at z: diagonal blocks
    /// D_i and upper off-diagonal blocks E_i, each d x d row-major.
    void hessian(const std::vector<double>& z, std::vector<std::vector<double>>& D,
                 std::vector<std::vector<double>>& E) const {
        const int dd = d();
        const double dt = T / N;
        const std::size_t nb = std::size_t(N - 1);
        D.assign(nb, std::vector<double>(std::size_t(dd) * dd, 0.0));
        E.assign(nb > 0 ? nb - 1 : 0, std::vector<double>(std::size_t(dd) * dd, 0.0));
        for (std::size_t b = 0; b < nb; b++)
            for (int k = 0; k < dd; k++)
                D[b][std::size_t(k) * dd + k] = 2.0 / dt;
        for (std::size_t b = 0; b + 1 < nb; b++)
            for (int k = 0; k < dd; k++)
                E[b][std::size_t(k) * dd + k] = -1.0 / dt;
        Vec pt(dd);
        for (int i = 0; i < N; i++) {
            const double* xa = node(z, i);
            const double* xb = node(z, i + 1);
            for (int gq = 0; gq < 4; gq++) {
                for (int k = 0; k < dd; k++)
                    pt[k] = xa[k] + kGx[gq] * (xb[k] - xa[k]);
                auto hu = pot.hess(pt);
                double w = dt * kGw[gq];
                double wl = w * (1 - kGx[gq]) * (1 - kGx[gq]);
                double wr = w * kGx[gq] * kGx[gq];
                double wc = w * kGx[gq] * (1 - kGx[gq]);
                for (std::size_t e = 0; e < hu.size(); e++) {
                    if (i > 0) D[i - 1][e] += wl * hu[e];
                    if (i + 1 < N) D[i][e] += wr * hu[e];
                    if (i > 0 && i + 1 < N) E[i - 1][e] += wc * hu[e];
                }
            }
        }
        // soft-barrier curvature
        for (int i = 1; i < N; i++) {
            const double* xi = node(z, i);
            double r2 = 0;
            for (int k = 0; k < dd; k++) r2 += xi[k] * xi[k];
            double r = std::sqrt(r2);
            if (r < barrier_radius) {
                double l = std::log(barrier_radius / r);
                double ci = -2 * barrier_mu * l / r2;
                double cx = 2 * barrier_mu * (1 + 2 * l) / (r2 * r2);
                for (int a = 0; a < dd; a++) {
                    D[i - 1][std::size_t(a) * dd + a] += ci;
                    for (int b2 = 0; b2 < dd; b2++)
                        D[i - 1][std::size_t(a) * dd + b2] += cx * xi[a] * xi[b2];
                }
            }
        }
    }

    /// Max interior force-balance residual scaled by dt * (1 + |grad U|).
    double el_residual(const std::vector<double>& z) const {
        std::vector<double> g(size());
        action(z, &g);
        const int dd = d();
        const double dt = T / N;
        double worst = 0;
        Vec xi(dd);
        for (int i = 1; i < N; i++) {
            double gn = 0;
            for (int k = 0; k < dd; k++) {
                double c = g[std::size_t(i - 1) * dd + k];
                gn += c * c;
            }
            const double* x = node(z, i);
            xi.assign(x, x + dd);
            double scale = dt * (1 + norm(pot.grad(xi)));
            worst = std::max(worst, std::sqrt(gn) / scale);
        }
        return worst;
    }

    /// Mean of the per-segment discrete energies 0.5 |v_i|^2 - Ubar_i.
    double path_energy(const std::vector<double>& z) const {
        const int dd = d();
        const double dt = T / N;
        double sum = 0;
        Vec pt(dd);
        for (int i = 0; i < N; i++) {
            const double* xa = node(z, i);
            const double* xb = node(z, i + 1);
            double v2 = 0;
            for (int k = 0; k < dd; k++) {
                double dx = (xb[k] - xa[k]) / dt;
                v2 += dx * dx;
            }
            double ubar = 0;
            for (int gq = 0; gq < 4; gq++) {
                for (int k = 0; k < dd; k++)
                    pt[k] = xa[k] + kGx[gq] * (xb[k] - xa[k]);
                ubar += kGw[gq] * pot.value(pt);
            }
            sum += 0.5 * v2 - ubar;
        }
        return sum / N;
    }
};

// ----------------------------------------------------------------------------
// Small dense helpers and the block-tridiagonal Newton solve
// ----------------------------------------------------------------------------

/// Gaussian elimination with partial pivoting, A (n x n) row-major, B n x m.
bool dense_solve(int n, std::vector<double> A, std::vector<double>& B, int m) {
    for (int c = 0; c < n; c++) {
        int piv = c;
        for (int r = c + 1; r < n; r++)
            if (std::abs(A[std::size_t(r) * n + c]) > std::abs(A[std::size_t(piv) * n + c]))
                piv = r;
        if (std::abs(A[std::size_t(piv) * n + c]) < 1e-300) return false;
        if (piv != c) {
            for (int k = 0; k < n; k++)
                std::swap(A[std::size_t(piv) * n + k], A[std::size_t(c) * n + k]);
            for (int k = 0; k < m; k++)
                std::swap(B[std::size_t(piv) * m + k], B[std::size_t(c) * m + k]);
        }
        double inv = 1.0 / A[std::size_t(c) * n + c];
        for (int r = 0; r < n; r++) {
            if (r == c) continue;
            double f = A[std::size_t(r) * n + c] * inv;
            if (f == 0) continue;
            for (int k = c; k < n; k++)
                A[std::size_t(r) * n + k] -= f * A[std::size_t(c) * n + k];
            for (int k = 0; k < m; k++)
                B[std::size_t(r) * m + k] -= f * B[std::size_t(c) * m + k];
        }
    }
    for (int r = 0; r < n; r++) {
        double inv = 1.0 / A[std::size_t(r) * n + r];
        for (int k = 0; k < m; k++) B[std::size_t(r) * m + k] *= inv;
    }
    return true;
}

void mat_mul(int n, const std::vector<double>& A, const std::vector<double>& B,
             std::vector<double>& C, bool transpose_a) {
    C.assign(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; i++)
        for (int k = 0; k < n; k++) {
            double a = transpose_a ? A[std::size_t(k) * n + i] : A[std::size_t(i) * n + k];
            for (int j = 0; j < n; j++)
                C[std::size_t(i) * n + j] += a * B[std::size_t(k) * n + j];
        }
}

/// Solves the symmetric block-tridiagonal system (H + lambda I) dz = -g.
bool block_tridiag_solve(int d, std::vector<std::vector<double>> D,
                         const std::vector<std::vector<double>>& E, double lambda,
                         std::vector<double> g, std::vector<double>& dz) {
    const std::size_t nb = D.size();
    for (auto& blk : D)
        for (int k = 0; k < d; k++) blk[std::size_t(k) * d + k] += lambda;
    for (auto& c : g) c = -c;

    std::vector<std::vector<double>> W(nb);  // C_i^{-1} E_i
    std::vector<double> tmp, prod;
    // forward sweep
    for (std::size_t i = 0; i < nb; i++) {
        if (i > 0) {
            // D_i -= E_{i-1}^T W_{i-1};  b_i -= E_{i-1}^T btilde_{i-1}
            mat_mul(d, E[i - 1], W[i - 1], prod, true);
            for (std::size_t e = 0; e < prod.size(); e++) D[i][e] -= prod[e];
            for (int r = 0; r < d; r++) {
                double s = 0;
                for (int k = 0; k < d; k++)
                    s += E[i - 1][std::size_t(k) * d + r] * g[(i - 1) * d + k];
                g[i * d + r] -= s;
            }
        }
        // btilde_i = C_i^{-1} b_i; W_i = C_i^{-1} E_i
        std::vector<double> rhs(g.begin() + i * d, g.begin() + (i + 1) * d);
        if (!dense_solve(d, D[i], rhs, 1)) return false;
        std::copy(rhs.begin(), rhs.end(), g.begin() + i * d);
        if (i + 1 < nb) {
            std::vector<double> cols = E[i];
            if (!dense_solve(d, D[i], cols, d)) return false;
            W[i] = std::move(cols);
        }
    }
    // back substitution
    dz = g;
    for (std::size_t i = nb - 1; i-- > 0;) {
        for (int r = 0; r < d; r++) {
            double s = 0;
            for (int k = 0; k < d; k++)
                s += W[i][std::size_t(r) * d + k] * dz[(i + 1) * d + k];
            dz[i * d + r] -= s;
        }
    }
    return true;
}

// ----------------------------------------------------------------------------
// L-BFGS with backtracking line search; infeasible points report +inf
// ----------------------------------------------------------------------------

struct LbfgsOutcome {
    double f = 0;
    double gnorm = 0;
    int iters = 0;
    bool converged = false;
};

/// grad_tol is an RMS threshold on the gradient, pre-multiplied by the
/// problem's natural scale (dt for discrete actions, so the stop criterion
/// targets the force-balance residual rather than the raw gradient).
LbfgsOutcome lbfgs(const std::function<double(const std::vector<double>&,
                                              std::vector<double>*)>& fg,
                   std::vector<double>& x, int max_iters, double grad_tol) {
    const std::size_t n = x.size();
    const int m = 8;
    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;
    std::vector<double> g(n), g_new(n), dir(n), x_new(n), alpha_buf(m);

    double f = fg(x, &g);
    LbfgsOutcome out;
    if (!std::isfinite(f))
        throw std::runtime_error("minimize: infeasible initial seed");

    auto rms = [n](const std::vector<double>& v) {
        double s = 0;
        for (double c : v) s += c * c;
        return std::sqrt(s / double(n));
    };

    for (int it = 0; it < max_iters; it++) {
        double gn = rms(g);
        if (gn <= grad_tol * (1 + std::abs(f))) {
            out.converged = true;
            out.f = f;
            out.gnorm = gn;
            out.iters = it;
            return out;
        }
        // two-loop recursion
        dir = g;
        int k = int(s_hist.size());
        for (int i = k - 1; i >= 0; i--) {
            double a = rho_hist[i] * dot(s_hist[i], dir);
            alpha_buf[i % m] = a;
            axpy(-a, y_hist[i], dir);
        }
        if (k > 0) {
            double gamma = dot(s_hist[k - 1], y_hist[k - 1]) /
                           dot(y_hist[k - 1], y_hist[k - 1]);
            for (auto& c : dir) c *= gamma;
        }
        for (int i = 0; i < k; i++) {
            double b = rho_hist[i] * dot(y_hist[i], dir);
            axpy(alpha_buf[i % m] - b, s_hist[i], dir);
        }
        for (auto& c : dir) c = -c;

        double slope = dot(g, dir);
        if (slope >= 0) {  // fall back to steepest descent
            for (std::size_t i = 0; i < n; i++) dir[i] = -g[i];
            slope = -dot(g, g);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        double step = 1.0, f_new = 0;
        bool ok = false;
        for (int ls = 0; ls < 60; ls++) {
            for (std::size_t i = 0; i < n; i++) x_new[i] = x[i] + step * dir[i];
            f_new = fg(x_new, &g_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) {
            out.f = f;
            out.gnorm = gn;
            out.iters = it;
            return out;  // stuck line search; report current point
        }
        // history update
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; i++) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        double sy = dot(s, y);
        if (sy > 1e-14 * norm(s) * norm(y)) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (int(s_hist.size()) > m) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        x = x_new;
        f = f_new;
        g = g_new;
        out.iters = it + 1;
    }
    out.f = f;
    out.gnorm = rms(g);
    return out;
}

/// Levenberg-damped Newton polish on the discrete action; quadratic local
/// convergence to the force-balance tolerance that L-BFGS approaches slowly.
LbfgsOutcome newton_polish(const DiscreteProblem& prob, std::vector<double>& z,
                           int max_iters, double grad_tol) {
    const int dd = prob.d();
    const std::size_t n = z.size();
    std::vector<double> g(n), dz, z_trial(n);
    std::vector<std::vector<double>> D, E;
    LbfgsOutcome out;
    double lambda = 0;
    auto rms = [n](const std::vector<double>& v) {
        double s = 0;
        for (double c : v) s += c * c;
        return std::sqrt(s / double(n));
    };
    double f = prob.eval(z, &g);
    for (int it = 0; it < max_iters; it++) {
        out.iters = it;
        out.f = f;
        out.gnorm = rms(g);
        if (out.gnorm <= grad_tol * (1 + std::abs(f))) {
            out.converged = true;
            return out;
        }
        prob.hessian(z, D, E);
        bool moved = false;
        for (int attempt = 0; attempt < 40; attempt++) {
            if (!block_tridiag_solve(dd, D, E, lambda, g, dz)) {
                lambda = std::max(10 * lambda, 1e-10);
                continue;
            }
            double slope = dot(g, dz);
            if (slope > 0) {  // not a descent direction; damp harder
                lambda = std::max(10 * lambda, 1e-10);
                continue;
            }
            for (std::size_t i = 0; i < n; i++) z_trial[i] = z[i] + dz[i];
            std::vector<double> g_trial(n);
            double f_trial = prob.eval(z_trial, &g_trial);
            if (std::isfinite(f_trial) && f_trial <= f + 1e-4 * slope + 1e-14 * std::abs(f)) {
                z = z_trial;
                f = f_trial;
                g = std::move(g_trial);
                lambda /= 4;
                if (lambda < 1e-14) lambda = 0;
                moved = true;
                break;
            }
            lambda = std::max(10 * lambda, 1e-10);
        }
        if (!moved) {
            out.f = f;
            out.gnorm = rms(g);
            return out;
        }
    }
    out.f = f;
    out.gnorm = rms(g);
    return out;
}

// ----------------------------------------------------------------------------
// Seeds and restarts
// ----------------------------------------------------------------------------

std::vector<double> straight_seed(const DiscreteProblem& prob) {
    std::vector<double> z(prob.size());
    const int dd = prob.d();
    // bow the chord away from the origin when it passes too close
    Vec mid(dd, 0.0), dev(dd, 0.0);
    double scale = std::max({norm(prob.p), norm(prob.q), 1.0});
    bool bow = segment_min_radius(prob.p, prob.q) < 0.02 * scale;
    if (bow) {
        // perpendicular to the chord, deterministic orientation
        Vec ab = prob.q - prob.p;
        double n = norm(ab);
        if (n == 0) {
            dev[0] = 0.3 * scale;
        } else if (dd == 2) {
            dev = {-ab[1] / n * 0.3 * scale, ab[0] / n * 0.3 * scale};
        } else {
            dev[0] = -ab[1] / n * 0.3 * scale;
            dev[1] = ab[0] / n * 0.3 * scale;
        }
    }
    for (int i = 1; i < prob.N; i++) {
        double u = double(i) / prob.N;
        for (int k = 0; k < dd; k++)
            z[std::size_t(i - 1) * dd + k] = prob.p[k] + u * (prob.q[k] - prob.p[k]) +
                                             (bow ? std::sin(std::numbers::pi * u) * dev[k] : 0.0);
    }
    return z;
}

void perturb(std::vector<double>& z, const DiscreteProblem& prob, unsigned seed,
             double relative_amplitude) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd(0, 1);
    const int dd = prob.d();
    double scale = std::max({norm(prob.p), norm(prob.q), 1.0});
    // a few smooth modes, vanishing at the endpoints
    for (int mode = 1; mode <= 3; mode++) {
        Vec amp(dd);
        for (int k = 0; k < dd; k++) amp[k] = nd(rng) * relative_amplitude * scale / mode;
        for (int i = 1; i < prob.N; i++) {
            double u = double(i) / prob.N;
            double w = std::sin(std::numbers::pi * mode * u);
            for (int k = 0; k < dd; k++) z[std::size_t(i - 1) * dd + k] += w * amp[k];
        }
    }
}

struct Candidate {
    std::vector<double> z;
    LbfgsOutcome opt;
    double value = 0;
    double el = 0;
    int index = 0;
};

MinimizeResult finish(const Potential& pot, const DiscreteProblem& prob,
                      const Candidate& c, double grad_tol) {
    MinimizeResult res;
    res.path = prob.to_path(c.z);
    res.value = akp::action(pot, res.path).value;
    res.grad_norm = c.opt.gnorm;
    res.el_residual = c.el;
    res.min_radius = res.path.min_radius();
    res.collision_suspect = res.min_radius <= prob.barrier_radius;
    res.T = prob.T;
    res.energy_of_path = prob.path_energy(c.z);
    res.converged = c.opt.converged;
    res.restarts_used = c.index;
    (void)grad_tol;
    return res;
}

/// Multi-start solve of a fixed problem; deterministic tie-break on
/// (value, el_residual, seed index).
Candidate solve_multistart(const DiscreteProblem& prob, const MinimizeOptions& opts,
                           const std::vector<double>& seed_z, int max_iters) {
    int total = 1 + std::max(0, opts.restarts);
    double tol = opts.grad_tol * prob.T / prob.N;
    std::vector<std::future<Candidate>> futs;
    for (int r = 0; r < total; r++) {
        futs.push_back(std::async(std::launch::async, [&, r, tol]() {
            Candidate c;
            c.index = r;
            c.z = seed_z;
            if (r > 0) {
                // shrink the perturbation until the start is feasible
                double amp = 0.02 * r;
                for (int attempt = 0; attempt < 8; attempt++) {
                    c.z = seed_z;
                    perturb(c.z, prob, opts.seed + 77 * r, amp);
                    if (std::isfinite(prob.eval(c.z, nullptr))) break;
                    amp *= 0.4;
                    c.z = seed_z;
                }
                if (!std::isfinite(prob.eval(c.z, nullptr))) c.z = seed_z;
            }
            auto fg = [&prob](const std::vector<double>& z, std::vector<double>* g) {
                return prob.eval(z, g);
            };
            c.opt = lbfgs(fg, c.z, max_iters, std::max(tol, 1e-5 * prob.T / prob.N));
            LbfgsOutcome polish = newton_polish(prob, c.z, 50, tol);
            if (polish.gnorm <= c.opt.gnorm || polish.converged) c.opt = polish;
            c.value = prob.action(c.z, nullptr);
            c.el = prob.el_residual(c.z);
            return c;
        }));
    }
    Candidate best;
    bool first = true;
    for (auto& f : futs) {
        Candidate c = f.get();
        if (first || c.value < best.value - 1e-15 ||
            (c.value == best.value && (c.el < best.el ||
                                       (c.el == best.el && c.index < best.index)))) {
            best = std::move(c);
            first = false;
        }
    }
    return best;
}

}  // namespace

// ----------------------------------------------------------------------------
// Public operations
// ----------------------------------------------------------------------------

MinimizeResult minimize_fixed_time(const Potential& pot, const Vec& p, const Vec& q,
                                   double T, const MinimizeOptions& opts) {
    if (!(T > 0))
        throw std::invalid_argument("minimize_fixed_time: T must be positive");
    if (dot(p, p) == 0 && dot(q, q) == 0)
        throw std::invalid_argument("minimize_fixed_time: endpoints both at the origin");
    if (opts.nodes < 8)
        throw std::invalid_argument("minimize_fixed_time: need at least 8 segments");

    DiscreteProblem prob{pot, p, q, T, opts.nodes, opts.barrier_radius};
    auto seed = straight_seed(prob);
    Candidate best = solve_multistart(prob, opts, seed, opts.max_iters);
    return finish(pot, prob, best, opts.grad_tol);
}

namespace {

struct FreeTimeCore {
    const Potential& pot;
    DiscreteProblem prob;  // T mutated across the outer search
    const MinimizeOptions& opts;
    double h;
    std::vector<double> warm;

    double f_of_T(double T, int iters) {
        prob.T = T;
        auto fg = [this](const std::vector<double>& z, std::vector<double>* g) {
            return prob.eval(z, g);
        };
        lbfgs(fg, warm, iters, 1e-4 * T / prob.N);
        newton_polish(prob, warm, 30, opts.grad_tol * 10 * T / prob.N);
        return prob.action(warm, nullptr) + h * T;
    }
};

}  // namespace

static MinimizeResult free_time_run(const Potential& pot, DiscreteProblem prob,
                                    double h, const MinimizeOptions& opts,
                                    std::vector<double> seed, double t_ref) {
    FreeTimeCore core{pot, std::move(prob), opts, h, std::move(seed)};

    double t_lo = opts.t_lo > 0 ? opts.t_lo : t_ref / 15;
    double t_hi = opts.t_hi > 0 ? opts.t_hi : t_ref * 15;
    const int warm_iters = std::max(200, opts.max_iters / 8);

    // bracket f(T) on a log grid, expanding when the minimum sits on an edge
    std::vector<double> ts, fs;
    auto build = [&]() {
        ts.clear();
        fs.clear();
        int n = std::max(5, opts.bracket_samples);
        for (int i = 0; i < n; i++) {
            double T = t_lo * std::pow(t_hi / t_lo, double(i) / (n - 1));
            ts.push_back(T);
            fs.push_back(core.f_of_T(T, warm_iters));
        }
    };
    build();
    int tries = 0;
    while (true) {
        auto it = std::min_element(fs.begin(), fs.end());
        std::size_t i = std::size_t(it - fs.begin());
        if (i > 0 && i + 1 < fs.size()) break;
        if (++tries > 3) {
            std::ostringstream os;
            os << "free_time_minimize: no interior bracket for f(T); samples:";
            for (std::size_t k = 0; k < ts.size(); k++)
                os << " f(" << ts[k] << ")=" << fs[k];
            throw BracketError(os.str());
        }
        if (i == 0)
            t_lo /= 8;
        else
            t_hi *= 8;
        build();
    }
    auto it = std::min_element(fs.begin(), fs.end());
    std::size_t i = std::size_t(it - fs.begin());
    double a = ts[i - 1], b = ts[i + 1];

    // golden section on T, warm-starting the inner solves
    const double gr = (std::sqrt(5.0) - 1) / 2;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = core.f_of_T(c, warm_iters);
    double fd = core.f_of_T(d, warm_iters);
    while (b - a > opts.golden_tol * b) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = core.f_of_T(c, warm_iters);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = core.f_of_T(d, warm_iters);
        }
    }
    double t_star = 0.5 * (a + b);

    // full-rigor polish at the optimum, multi-start
    core.prob.T = t_star;
    Candidate best = solve_multistart(core.prob, opts, core.warm, opts.max_iters);
    MinimizeResult res = finish(pot, core.prob, best, opts.grad_tol);
    res.value += h * t_star;
    res.converged = res.converged && std::abs(res.energy_of_path - h) <= opts.energy_tol;
    return res;
}

MinimizeResult free_time_minimize(const Potential& pot, const Vec& p, const Vec& q,
                                  double h, const MinimizeOptions& opts) {
    if (!(h > 0))
        throw std::invalid_argument("free_time_minimize: h must be positive");
    if (dist(p, q) == 0)
        throw std::invalid_argument("free_time_minimize: endpoints must differ");
    DiscreteProblem prob{pot, p, q, 1.0, opts.nodes, opts.barrier_radius};
    double t_ref = std::max(dist(p, q), 0.5 * (norm(p) + norm(q))) / std::sqrt(2 * h);
    auto seed = straight_seed(prob);
    return free_time_run(pot, std::move(prob), h, opts, std::move(seed), t_ref);
}

namespace {

/// Interior nodes resampled from a seed path at uniform time fractions.
std::vector<double> resample_seed(const DiscreteProblem& prob, const Path& seed) {
    std::vector<double> z(prob.size());
    const int dd = prob.d();
    for (int i = 1; i < prob.N; i++) {
        double t = seed.t_minus() + seed.duration() * i / prob.N;
        Vec x = seed.at(t);
        for (int k = 0; k < dd; k++) z[std::size_t(i - 1) * dd + k] = x[k];
    }
    return z;
}

}  // namespace

MinimizeResult free_time_minimize_seeded(const Potential& pot, const Vec& p,
                                         const Vec& q, double h, const Path& seed,
                                         const MinimizeOptions& opts) {
    if (!(h > 0))
        throw std::invalid_argument("free_time_minimize: h must be positive");
    DiscreteProblem prob{pot, p, q, 1.0, opts.nodes, opts.barrier_radius};
    std::vector<double> z = resample_seed(prob, seed);
    if (!std::isfinite(prob.eval(z, nullptr)))
        z = straight_seed(prob);
    MinimizeOptions o = opts;
    if (o.t_lo <= 0) o.t_lo = seed.duration() / 4;
    if (o.t_hi <= 0) o.t_hi = seed.duration() * 4;
    return free_time_run(pot, std::move(prob), h, o, std::move(z), seed.duration());
}

MinimizeResult minimize_constrained_seeded(const Potential& pot, double r1,
                                           double theta_minus, double r2,
                                           double theta_plus, double h,
                                           const Path& seed,
                                           const MinimizeOptions& opts) {
    if (pot.dim() != 2)
        throw std::domain_error("minimize_constrained: planar problems only");
    Vec p{r1 * std::cos(theta_minus), r1 * std::sin(theta_minus)};
    Vec q{r2 * std::cos(theta_plus), r2 * std::sin(theta_plus)};
    MinimizeOptions o = opts;
    for (int refine = 0;; refine++) {
        DiscreteProblem prob{pot, p, q, 1.0, o.nodes, o.barrier_radius};
        prob.enforce_lift = true;
        prob.lift_minus = theta_minus;
        prob.lift_plus = theta_plus;
        std::vector<double> z = resample_seed(prob, seed);
        if (!std::isfinite(prob.eval(z, nullptr)))
            throw ConstraintError("minimize_constrained: seed leaves the class");
        MinimizeResult res;
        try {
            res = free_time_run(pot, std::move(prob), h, o, std::move(z),
                                seed.duration());
        } catch (const BracketError&) {
            if (refine >= 2) throw;
            o.nodes *= 2;
            continue;
        }
        try {
            if (in_class(res.path, theta_minus, theta_plus, 1e-6)) return res;
        } catch (const LiftError&) {
        }
        if (refine >= 2)
            throw ConstraintError(
                "minimize_constrained: lift constraint violated after refinement");
        o.nodes *= 2;
    }
}

double phi_h_bound(const Potential& pot, PhiBoundKind kind, double h,
                   const PhiBoundArgs& args) {
    if (!(h > 0))
        throw std::invalid_argument("phi_h_bound: h must be positive");
    const double alpha = pot.alpha();
    const double umax = pot.u_max();
    switch (kind) {
        case PhiBoundKind::radial: {
            if (!(args.r2 > args.r1) || !(args.r1 > 0))
                throw std::domain_error("phi_h_bound: need r2 > r1 > 0");
            double leading = std::sqrt(2 * h) * (args.r2 - args.r1);
            double tail = alpha == 1.0
                              ? std::log(args.r2 / args.r1)
                              : (std::pow(args.r2, 1 - alpha) - std::pow(args.r1, 1 - alpha)) /
                                    (1 - alpha);
            return leading + umax / std::sqrt(2 * h) * tail;
        }
        case PhiBoundKind::sphere_arc: {
            if (!(args.radius > 0))
                throw std::domain_error("phi_h_bound: radius must be positive");
            double arc = args.radius * args.angle;
            return (2 * h + umax * std::pow(args.radius, -alpha)) * arc / std::sqrt(2 * h);
        }
        case PhiBoundKind::from_origin: {
            double pw = 2 / (2 + alpha);
            return (0.5 * pw * pw + umax) * (2 + alpha) / (2 - alpha) + h;
        }
    }
    throw std::invalid_argument("phi_h_bound: unknown kind");
}

namespace {

/// In-out seed for a constrained class: radius dips toward rho_mid while the
/// angle sweeps the lifted interval around the midpoint.
std::vector<double> dip_seed(const DiscreteProblem& prob, double r1, double th1,
                             double r2, double th2, double rho_mid) {
    std::vector<double> z(prob.size());
    for (int i = 1; i < prob.N; i++) {
        double u = double(i) / prob.N;
        double bump = std::sin(std::numbers::pi * u);
        double lr = (1 - u) * std::log(r1) + u * std::log(r2) +
                    bump * (std::log(rho_mid) - 0.5 * (std::log(r1) + std::log(r2)));
        double ss = u * u * (3 - 2 * u);  // smoothstep concentrates the turn
        double th = th1 + (th2 - th1) * ss;
        double r = std::exp(lr);
        z[std::size_t(i - 1) * 2 + 0] = r * std::cos(th);
        z[std::size_t(i - 1) * 2 + 1] = r * std::sin(th);
    }
    return z;
}

std::vector<double> arc_seed(const DiscreteProblem& prob, double r1, double th1,
                             double r2, double th2) {
    std::vector<double> z(prob.size());
    for (int i = 1; i < prob.N; i++) {
        double u = double(i) / prob.N;
        double r = std::exp((1 - u) * std::log(r1) + u * std::log(r2));
        double th = th1 + (th2 - th1) * u;
        z[std::size_t(i - 1) * 2 + 0] = r * std::cos(th);
        z[std::size_t(i - 1) * 2 + 1] = r * std::sin(th);
    }
    return z;
}

}  // namespace

MinimizeResult minimize_constrained(const Potential& pot, double r1, double theta_minus,
                                    double r2, double theta_plus, double h,
                                    const MinimizeOptions& opts) {
    if (pot.dim() != 2)
        throw std::domain_error("minimize_constrained: planar problems only");
    if (!(h > 0))
        throw std::invalid_argument("minimize_constrained: h must be positive");
    Vec p{r1 * std::cos(theta_minus), r1 * std::sin(theta_minus)};
    Vec q{r2 * std::cos(theta_plus), r2 * std::sin(theta_plus)};
    if (dist(p, q) == 0)
        throw std::invalid_argument("minimize_constrained: endpoints coincide");

    MinimizeOptions o = opts;
    for (int refine = 0;; refine++) {
        DiscreteProblem prob{pot, p, q, 1.0, o.nodes, o.barrier_radius};
        prob.enforce_lift = true;
        prob.lift_minus = theta_minus;
        prob.lift_plus = theta_plus;

        double rho_mid = std::clamp(0.05 * std::min(r1, r2), 0.5, std::min(r1, r2));
        auto seed_a = arc_seed(prob, r1, theta_minus, r2, theta_plus);
        auto seed_b = dip_seed(prob, r1, theta_minus, r2, theta_plus, rho_mid);
        prob.T = 1;
        double fa = prob.eval(seed_a, nullptr);
        double fb = prob.eval(seed_b, nullptr);
        auto seed = std::isfinite(fb) && fb < fa ? seed_b : seed_a;
        if (!std::isfinite(prob.eval(seed, nullptr)))
            throw ConstraintError("minimize_constrained: no feasible seed in the class");

        double t_ref = (r1 + r2 + rho_mid * std::abs(theta_plus - theta_minus)) /
                       std::sqrt(2 * h);
        MinimizeResult res;
        try {
            res = free_time_run(pot, std::move(prob), h, o, std::move(seed), t_ref);
        } catch (const BracketError&) {
            if (refine >= 2) throw;
            o.nodes *= 2;
            continue;
        }
        try {
            if (in_class(res.path, theta_minus, theta_plus, 1e-6))
                return res;
        } catch (const LiftError&) {
            // fall through to refinement
        }
        if (refine >= 2)
            throw ConstraintError(
                "minimize_constrained: lift constraint violated after refinement");
        o.nodes *= 2;
    }
}

}  // namespace akp
