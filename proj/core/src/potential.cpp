#include "akp/potential.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace akp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double th) {
    th = std::fmod(th, kTwoPi);
    if (th < 0) th += kTwoPi;
    return th;
}

}  // namespace

// ----------------------------------------------------------------------------
// PeriodicSpline
// ----------------------------------------------------------------------------

PeriodicSpline::PeriodicSpline(std::vector<double> theta, std::vector<double> values)
    : th_(std::move(theta)), val_(std::move(values)) {
    const std::size_t n = th_.size();
    if (n < 4 || val_.size() != n)
        throw std::invalid_argument("PeriodicSpline: need >= 4 matching samples");
    for (std::size_t i = 0; i + 1 < n; i++)
        if (!(th_[i] < th_[i + 1]))
            throw std::invalid_argument("PeriodicSpline: theta samples must be strictly increasing");
    if (th_.front() < 0 || th_.back() >= th_.front() + kTwoPi)
        throw std::invalid_argument("PeriodicSpline: theta samples must lie within one period");

    // Cyclic tridiagonal system for the nodal second derivatives
    // (Sherman-Morrison on the standard Thomas solve).
    std::vector<double> h(n), rhs(n), diag(n), sub(n), sup(n);
    for (std::size_t i = 0; i < n; i++) {
        double t1 = th_[(i + 1) % n] + (i + 1 == n ? kTwoPi : 0.0);
        h[i] = t1 - th_[i];
    }
    for (std::size_t i = 0; i < n; i++) {
        std::size_t im = (i + n - 1) % n, ip = (i + 1) % n;
        sub[i] = h[im] / 6.0;
        diag[i] = (h[im] + h[i]) / 3.0;
        sup[i] = h[i] / 6.0;
        rhs[i] = (val_[ip] - val_[i]) / h[i] - (val_[i] - val_[im]) / h[im];
    }
    auto thomas = [&](std::vector<double> b) {
        std::vector<double> c(n), x(n);
        c[0] = sup[0] / diag[0];
        x[0] = b[0] / diag[0];
        for (std::size_t i = 1; i < n - 1; i++) {
            double m = diag[i] - sub[i] * c[i - 1];
            c[i] = sup[i] / m;
            x[i] = (b[i] - sub[i] * x[i - 1]) / m;
        }
        double m = diag[n - 1] - sub[n - 1] * c[n - 2];
        x[n - 1] = (b[n - 1] - sub[n - 1] * x[n - 2]) / m;
        for (std::size_t i = n - 1; i-- > 0;)
            x[i] -= c[i] * x[i + 1];
        return x;
    };
    // Corner entries sub[0] (to index n-1) and sup[n-1] (to index 0) handled via
    // rank-one correction A = T + u v^T with u = (gamma, 0, .., beta_corner/gamma*..).
    double gamma = -diag[0];
    double corner_top = sub[0];       // A(0, n-1)
    double corner_bot = sup[n - 1];   // A(n-1, 0)
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = corner_bot;
    diag[0] -= gamma;
    diag[n - 1] -= corner_top * corner_bot / gamma;
    std::vector<double> y = thomas(rhs);
    std::vector<double> z = thomas(u);
    double vy = y[0] + corner_top / gamma * y[n - 1];
    double vz = 1.0 + z[0] + corner_top / gamma * z[n - 1];
    m_.resize(n);
    for (std::size_t i = 0; i < n; i++)
        m_[i] = y[i] - vy / vz * z[i];
}

double PeriodicSpline::wrap(double th, std::size_t& seg) const {
    const std::size_t n = th_.size();
    th = th_.front() + wrap_angle(th - th_.front());
    auto it = std::upper_bound(th_.begin(), th_.end(), th);
    seg = (it == th_.begin()) ? n - 1 : std::size_t(it - th_.begin()) - 1;
    return th;
}

double PeriodicSpline::value(double th) const {
    std::size_t i;
    th = wrap(th, i);
    const std::size_t n = th_.size();
    std::size_t ip = (i + 1) % n;
    double t1 = th_[ip] + (ip == 0 ? kTwoPi : 0.0);
    double h = t1 - th_[i], a = (t1 - th) / h, b = (th - th_[i]) / h;
    return a * val_[i] + b * val_[ip] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[ip]) * h * h / 6.0;
}

double PeriodicSpline::deriv(double th) const {
    std::size_t i;
    th = wrap(th, i);
    const std::size_t n = th_.size();
    std::size_t ip = (i + 1) % n;
    double t1 = th_[ip] + (ip == 0 ? kTwoPi : 0.0);
    double h = t1 - th_[i], a = (t1 - th) / h, b = (th - th_[i]) / h;
    return (val_[ip] - val_[i]) / h +
           ((1 - 3 * a * a) * m_[i] + (3 * b * b - 1) * m_[ip]) * h / 6.0;
}

double PeriodicSpline::deriv2(double th) const {
    std::size_t i;
    th = wrap(th, i);
    const std::size_t n = th_.size();
    std::size_t ip = (i + 1) % n;
    double t1 = th_[ip] + (ip == 0 ? kTwoPi : 0.0);
    double h = t1 - th_[i], a = (t1 - th) / h, b = (th - th_[i]) / h;
    return a * m_[i] + b * m_[ip];
}

// ----------------------------------------------------------------------------
// Potential
// ----------------------------------------------------------------------------

Potential Potential::gutzwiller(double alpha, std::vector<double> weights) {
    Potential p;
    p.alpha_ = alpha;
    p.gutzwiller_ = true;
    p.weights_ = std::move(weights);
    p.d_ = int(p.weights_.size());
    p.validate_and_finish();
    return p;
}

Potential Potential::planar(double alpha, SphereProfile profile) {
    Potential p;
    p.alpha_ = alpha;
    p.gutzwiller_ = false;
    p.d_ = 2;
    p.profile_ = std::make_shared<SphereProfile>(std::move(profile));
    p.validate_and_finish();
    return p;
}

Potential Potential::planar_table(double alpha, std::vector<double> theta,
                                  std::vector<double> values) {
    auto spline = std::make_shared<PeriodicSpline>(std::move(theta), std::move(values));
    SphereProfile prof;
    prof.value = [spline](double th) { return spline->value(th); };
    prof.deriv = [spline](double th) { return spline->deriv(th); };
    prof.deriv2 = [spline](double th) { return spline->deriv2(th); };
    return planar(alpha, std::move(prof));
}

void Potential::validate_and_finish() {
    if (!(alpha_ > 0 && alpha_ < 2))
        throw std::invalid_argument("potential: alpha must lie strictly inside (0, 2)");
    if (gutzwiller_) {
        if (d_ < 2)
            throw std::invalid_argument("potential: dimension must be >= 2");
        for (double m : weights_)
            if (!(m > 0))
                throw std::invalid_argument("potential: all weights must be positive");
        double mmin = *std::min_element(weights_.begin(), weights_.end());
        double mmax = *std::max_element(weights_.begin(), weights_.end());
        u_max_ = std::pow(mmin, -alpha_ / 2);
        u_min_ = std::pow(mmax, -alpha_ / 2);
    } else {
        if (!profile_ || !profile_->value || !profile_->deriv || !profile_->deriv2)
            throw std::invalid_argument("potential: general form needs value/deriv/deriv2 callbacks");
        u_max_ = -1e300;
        u_min_ = 1e300;
        for (int k = 0; k < 4096; k++) {
            double v = profile_->value(kTwoPi * k / 4096);
            u_max_ = std::max(u_max_, v);
            u_min_ = std::min(u_min_, v);
        }
        if (!(u_min_ > 0))
            throw std::invalid_argument("potential: U must be positive on the unit sphere");
    }
}

const std::vector<double>& Potential::weights() const {
    if (!gutzwiller_)
        throw std::domain_error("potential: general form has no weights");
    return weights_;
}

double Potential::m_dot(const Vec& a, const Vec& b) const {
    if (!gutzwiller_)
        throw std::domain_error("potential: M inner product needs the Gutzwiller form");
    double s = 0;
    for (int i = 0; i < d_; i++) s += weights_[i] * a[i] * b[i];
    return s;
}

double Potential::value(const Vec& x) const {
    double r2 = dot(x, x);
    if (r2 == 0)
        throw std::domain_error("potential: singularity at the origin");
    if (gutzwiller_) {
        double q = 0;
        for (int i = 0; i < d_; i++) q += weights_[i] * x[i] * x[i];
        return std::pow(q, -alpha_ / 2);
    }
    double r = std::sqrt(r2);
    return std::pow(r, -alpha_) * profile_->value(std::atan2(x[1], x[0]));
}

Vec Potential::grad(const Vec& x) const {
    double r2 = dot(x, x);
    if (r2 == 0)
        throw std::domain_error("potential: singularity at the origin");
    if (gutzwiller_) {
        double q = 0;
        for (int i = 0; i < d_; i++) q += weights_[i] * x[i] * x[i];
        double c = -alpha_ * std::pow(q, -alpha_ / 2 - 1);
        Vec g(d_);
        for (int i = 0; i < d_; i++) g[i] = c * weights_[i] * x[i];
        return g;
    }
    // U = r^-alpha Utilde(theta):  grad = r^(-alpha-1) (-alpha Utilde e_r + Utilde' e_theta)
    double r = std::sqrt(r2), th = std::atan2(x[1], x[0]);
    double c = std::pow(r, -alpha_ - 1);
    double ur = -alpha_ * profile_->value(th), ut = profile_->deriv(th);
    double ct = x[0] / r, st = x[1] / r;
    return Vec{c * (ur * ct - ut * st), c * (ur * st + ut * ct)};
}

std::vector<double> Potential::hess(const Vec& x) const {
    double r2 = dot(x, x);
    if (r2 == 0)
        throw std::domain_error("potential: singularity at the origin");
    std::vector<double> out(std::size_t(d_) * d_, 0.0);
    if (gutzwiller_) {
        // U = Q^(-a/2), Q = <x, Mx>:  H = -a Q^(-a/2-1) M + a(a+2) Q^(-a/2-2) (Mx)(Mx)^T
        double q = 0;
        for (int i = 0; i < d_; i++) q += weights_[i] * x[i] * x[i];
        double c1 = -alpha_ * std::pow(q, -alpha_ / 2 - 1);
        double c2 = alpha_ * (alpha_ + 2) * std::pow(q, -alpha_ / 2 - 2);
        for (int i = 0; i < d_; i++) {
            out[std::size_t(i) * d_ + i] = c1 * weights_[i];
            for (int j = 0; j < d_; j++)
                out[std::size_t(i) * d_ + j] +=
                    c2 * weights_[i] * x[i] * weights_[j] * x[j];
        }
        return out;
    }
    // polar chain rule with U = r^-alpha G(theta)
    double r = std::sqrt(r2), th = std::atan2(x[1], x[0]);
    double g = profile_->value(th), gp = profile_->deriv(th), gpp = profile_->deriv2(th);
    double ur = -alpha_ * std::pow(r, -alpha_ - 1) * g;
    double urr = alpha_ * (alpha_ + 1) * std::pow(r, -alpha_ - 2) * g;
    double ut = std::pow(r, -alpha_) * gp;
    double urt = -alpha_ * std::pow(r, -alpha_ - 1) * gp;
    double utt = std::pow(r, -alpha_) * gpp;
    double ct = x[0] / r, st = x[1] / r;
    double er[2] = {ct, st}, et[2] = {-st, ct};
    double a_rr = urr;
    double a_rt = urt / r - ut / (r * r);
    double a_tt = utt / (r * r) + ur / r;
    for (int i = 0; i < 2; i++)
        for (int j = 0; j < 2; j++)
            out[std::size_t(i) * 2 + j] = a_rr * er[i] * er[j] +
                                          a_rt * (er[i] * et[j] + et[i] * er[j]) +
                                          a_tt * et[i] * et[j];
    return out;
}

double Potential::sphere_value(const Vec& s) const { return value(s); }

Vec Potential::sphere_grad(const Vec& s) const {
    double n = norm(s);
    if (std::abs(n - 1.0) > 1e-8)
        throw std::domain_error("potential: sphere_grad needs a unit direction");
    Vec g = grad(s);
    double c = dot(g, s);
    axpy(-c, s, g);
    return g;
}

double Potential::theta_value(double th) const {
    if (d_ != 2)
        throw std::domain_error("potential: direction profile is planar only");
    if (gutzwiller_) {
        double c = std::cos(th), s = std::sin(th);
        return std::pow(weights_[0] * c * c + weights_[1] * s * s, -alpha_ / 2);
    }
    return profile_->value(th);
}

double Potential::theta_deriv(double th) const {
    if (d_ != 2)
        throw std::domain_error("potential: direction profile is planar only");
    if (gutzwiller_) {
        double c = std::cos(th), s = std::sin(th);
        double g = weights_[0] * c * c + weights_[1] * s * s;
        double gp = (weights_[1] - weights_[0]) * std::sin(2 * th);
        return -alpha_ / 2 * std::pow(g, -alpha_ / 2 - 1) * gp;
    }
    return profile_->deriv(th);
}

double Potential::theta_deriv2(double th) const {
    if (d_ != 2)
        throw std::domain_error("potential: direction profile is planar only");
    if (gutzwiller_) {
        double c = std::cos(th), s = std::sin(th);
        double g = weights_[0] * c * c + weights_[1] * s * s;
        double gp = (weights_[1] - weights_[0]) * std::sin(2 * th);
        double gpp = 2 * (weights_[1] - weights_[0]) * std::cos(2 * th);
        return -alpha_ / 2 *
               ((-alpha_ / 2 - 1) * std::pow(g, -alpha_ / 2 - 2) * gp * gp +
                std::pow(g, -alpha_ / 2 - 1) * gpp);
    }
    return profile_->deriv2(th);
}

// ----------------------------------------------------------------------------
// Critical structure and conditions
// ----------------------------------------------------------------------------

namespace {

/// Bisect a sign change of f on [a, b].
double bisect(const std::function<double(double)>& f, double a, double b) {
    double fa = f(a);
    for (int it = 0; it < 200; it++) {
        double m = 0.5 * (a + b), fm = f(m);
        if (fm == 0) return m;
        if ((fa < 0) == (fm < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

CriticalStructure Potential::critical_structure() const {
    CriticalStructure cs;
    if (gutzwiller_) {
        // Group coordinates by exact weight equality, increasing weight.
        std::map<double, std::vector<int>> groups;
        for (int i = 0; i < d_; i++) groups[weights_[i]].push_back(i);
        for (auto& [w, idx] : groups) {
            CriticalComponent comp;
            comp.indices = idx;
            comp.weight = w;
            comp.isolated = idx.size() == 1;
            comp.u_value = std::pow(w, -alpha_ / 2);
            if (comp.isolated) {
                cs.isolated_points.push_back(unit(d_, idx[0], +1.0));
                cs.isolated_points.push_back(unit(d_, idx[0], -1.0));
            }
            cs.components.push_back(std::move(comp));
        }
        cs.degenerate_constant = groups.size() == 1;
        if (d_ == 2) {
            if (cs.degenerate_constant) {
                cs.critical_angles = {};  // the whole circle
            } else {
                cs.critical_angles = {0, std::numbers::pi / 2, std::numbers::pi,
                                      3 * std::numbers::pi / 2};
                // Utilde is minimal along the axis of the larger weight.
                int big = weights_[1] > weights_[0] ? 1 : 0;
                double mb = weights_[big], mo = weights_[1 - big];
                double udd = alpha_ * (mb - mo) * std::pow(mb, -alpha_ / 2 - 1);
                for (double th : {big ? std::numbers::pi / 2 : 0.0,
                                  big ? 3 * std::numbers::pi / 2 : std::numbers::pi}) {
                    SphereMinimum m;
                    m.theta = th;
                    m.u_value = std::pow(mb, -alpha_ / 2);
                    m.u_dd = udd;
                    m.nondegenerate = std::abs(udd) > kCriticalTol;
                    cs.min_set.push_back(m);
                }
            }
        }
        return cs;
    }

    // General planar form: dense scan of Utilde' for sign changes.
    cs.degenerate_constant = (u_max_ - u_min_) <= 1e-12 * u_max_;
    if (cs.degenerate_constant)
        return cs;  // every direction critical, no discrete scan
    const int n = 8192;
    auto fp = [&](double th) { return theta_deriv(th); };
    std::vector<double> roots;
    double prev = fp(0.0);
    for (int k = 1; k <= n; k++) {
        double th = kTwoPi * k / n, cur = fp(th);
        if (prev == 0)
            roots.push_back(kTwoPi * (k - 1) / n);
        else if ((prev < 0) != (cur < 0))
            roots.push_back(bisect(fp, kTwoPi * (k - 1) / n, th));
        prev = cur;
    }
    cs.critical_angles = roots;
    double vmin = 1e300;
    for (double th : roots) vmin = std::min(vmin, theta_value(th));
    for (double th : roots) {
        double v = theta_value(th);
        if (v <= vmin * (1 + 1e-9)) {
            SphereMinimum m;
            m.theta = wrap_angle(th);
            m.u_value = v;
            m.u_dd = theta_deriv2(th);
            m.nondegenerate = std::abs(m.u_dd) > kCriticalTol;
            cs.min_set.push_back(m);
        }
    }
    return cs;
}

Vec CriticalStructure::nearest(const Vec& s, double* distance) const {
    double best = 1e300;
    Vec arg = s;
    auto consider = [&](const Vec& p) {
        double dd = dist(p, s);
        if (dd < best) {
            best = dd;
            arg = p;
        }
    };
    for (const auto& p : isolated_points) consider(p);
    for (const auto& comp : components) {
        if (comp.isolated) continue;
        // Continuum component: project s onto the coordinate subspace.
        Vec p(s.size(), 0.0);
        double n2 = 0;
        for (int i : comp.indices) {
            p[i] = s[i];
            n2 += s[i] * s[i];
        }
        if (n2 < 1e-30) {
            p = unit(s.size(), comp.indices[0]);
        } else {
            double n = std::sqrt(n2);
            for (int i : comp.indices) p[i] /= n;
        }
        consider(p);
    }
    if (s.size() == 2)
        for (double th : critical_angles) consider(Vec{std::cos(th), std::sin(th)});
    if (degenerate_constant) {
        // U constant on the sphere: every direction is critical.
        best = 0;
        arg = s;
    }
    if (distance) *distance = best;
    return arg;
}

ConditionReport Potential::check_conditions() const {
    ConditionReport rep;
    rep.u0 = Verdict::holds;  // validated at construction
    rep.u1 = gutzwiller_ ? Verdict::holds : Verdict::not_applicable;

    if (gutzwiller_) {
        std::map<double, int> counts;
        for (double m : weights_) counts[m]++;
        bool repeats = false;
        for (auto& [m, c] : counts) repeats |= c > 1;
        rep.u2 = repeats ? Verdict::holds : Verdict::fails;
    } else {
        rep.u2 = (u_max_ - u_min_) <= 1e-12 * u_max_ ? Verdict::holds : Verdict::fails;
    }

    if (d_ == 2) {
        auto cs = critical_structure();
        rep.u3_minima = cs.min_set;
        if (cs.degenerate_constant) {
            rep.u3 = Verdict::fails;
        } else {
            bool ok = !cs.min_set.empty();
            for (const auto& m : cs.min_set) ok &= m.nondegenerate;
            rep.u3 = ok ? Verdict::holds : Verdict::fails;
        }
    }

    if (gutzwiller_ && d_ == 2) {
        double m1 = std::min(weights_[0], weights_[1]);
        double m2 = std::max(weights_[0], weights_[1]);
        rep.u4_ratio = m2 / m1;
        rep.u4_threshold = 1 + (2 - alpha_) * (2 - alpha_) / (8 * alpha_);
        rep.u4 = rep.u4_ratio > rep.u4_threshold ? Verdict::holds : Verdict::fails;
    }

    if (d_ == 2) {
        // Spiral condition at the collision angles k*pi (axis of the smaller
        // weight for the Gutzwiller form): Utilde'' < -(2-alpha)^2/8 * Utilde.
        double th0 = 0.0;
        if (gutzwiller_ && weights_[0] > weights_[1]) th0 = std::numbers::pi / 2;
        bool ok = true;
        for (double th : {th0, th0 + std::numbers::pi}) {
            double lhs = theta_deriv2(th);
            double rhs = -(2 - alpha_) * (2 - alpha_) / 8.0 * theta_value(th);
            ok &= lhs < rhs;
        }
        rep.spiral_equiv = ok ? Verdict::holds : Verdict::fails;
    }
    return rep;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::holds: return "holds";
        case Verdict::fails: return "fails";
        default: return "not applicable";
    }
}

std::string ConditionReport::text() const {
    std::ostringstream os;
    os << "U0 (alpha-homogeneous, positive C2 sphere potential): " << to_string(u0) << "\n";
    os << "U1 (Gutzwiller diagonal form): " << to_string(u1) << "\n";
    os << "U2 (constant on a 2-dim subspace section): " << to_string(u2) << "\n";
    os << "U3 (nondegenerate sphere minimizers): " << to_string(u3);
    for (const auto& m : u3_minima)
        os << "  [theta=" << m.theta << " U=" << m.u_value << " U''=" << m.u_dd << "]";
    os << "\n";
    os << "U4 (weight-ratio inequality): " << to_string(u4);
    if (u4 != Verdict::not_applicable)
        os << "  [ratio=" << u4_ratio << " threshold=" << u4_threshold << "]";
    os << "\n";
    os << "spiral condition (second-derivative form): " << to_string(spiral_equiv) << "\n";
    return os.str();
}

}  // namespace akp
