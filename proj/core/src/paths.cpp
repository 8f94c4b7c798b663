#include "akp/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace akp {

namespace {

// 4-point Gauss-Legendre on [0, 1].
constexpr double kGx[4] = {0.06943184420297371, 0.33000947820757187,
                           0.6699905217924281, 0.9305681557970262};
constexpr double kGw[4] = {0.17392742256872692, 0.32607257743127305,
                           0.32607257743127305, 0.17392742256872692};

// 8-point rule for the geometrically subdivided panels near the origin.
constexpr double kG8x[8] = {0.019855071751231856, 0.10166676129318664,
                            0.2372337950418355,   0.40828267875217511,
                            0.59171732124782489,  0.7627662049581645,
                            0.89833323870681336,  0.98014492824876814};
constexpr double kG8w[8] = {0.050614268145188129, 0.11119051722668723,
                            0.15685332293894364,  0.18134189168918099,
                            0.18134189168918099,  0.15685332293894364,
                            0.11119051722668723,  0.050614268145188129};

constexpr double kSubdivideRadius = 1e-4;

template <int N>
double gauss_potential(const Potential& pot, const Vec& a, const Vec& ab,
                       double u0, double u1, Vec& scratch) {
    const double* gx = N == 4 ? kGx : kG8x;
    const double* gw = N == 4 ? kGw : kG8w;
    double s = 0;
    for (int g = 0; g < N; g++) {
        double u = u0 + (u1 - u0) * gx[g];
        for (std::size_t i = 0; i < a.size(); i++)
            scratch[i] = a[i] + u * ab[i];
        s += gw[g] * pot.value(scratch);
    }
    return s * (u1 - u0);
}

/// Potential integral of a chord, int_0^1 U(a + u (b-a)) du, subdividing
/// geometrically toward the closest approach when the chord dips near the origin.
double chord_potential(const Potential& pot, const Vec& a, const Vec& b) {
    Vec ab = b - a;
    Vec scratch(a.size());
    double rmin = segment_min_radius(a, b);
    if (rmin > kSubdivideRadius)
        return gauss_potential<4>(pot, a, ab, 0.0, 1.0, scratch);

    double denom = dot(ab, ab);
    double ustar = denom > 0 ? std::clamp(-dot(a, ab) / denom, 0.0, 1.0) : 0.5;
    double total = 0;
    const int levels = 48;
    auto side = [&](double from, double toward) {
        // panels [toward + (from-toward) 2^-(k+1), toward + (from-toward) 2^-k]
        if (from == toward) return;
        for (int k = 0; k < levels; k++) {
            double hi = toward + (from - toward) * std::ldexp(1.0, -k);
            double lo = toward + (from - toward) * std::ldexp(1.0, -(k + 1));
            total += gauss_potential<8>(pot, a, ab, std::min(lo, hi), std::max(lo, hi), scratch);
        }
    };
    side(0.0, ustar);
    side(1.0, ustar);
    return total;
}

}  // namespace

void Path::validate() const {
    if (times.size() < 2 || nodes.size() != times.size())
        throw std::invalid_argument("path: need >= 2 nodes matching the time grid");
    for (std::size_t i = 0; i + 1 < times.size(); i++)
        if (!(times[i] < times[i + 1]))
            throw std::invalid_argument("path: times must be strictly increasing");
    for (const auto& n : nodes)
        if (n.size() != nodes.front().size())
            throw std::invalid_argument("path: inconsistent node dimensions");
}

Vec Path::at(double t) const {
    if (t <= times.front()) return nodes.front();
    if (t >= times.back()) return nodes.back();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = std::size_t(it - times.begin()) - 1;
    double u = (t - times[i]) / (times[i + 1] - times[i]);
    Vec r = nodes[i];
    for (std::size_t k = 0; k < r.size(); k++)
        r[k] += u * (nodes[i + 1][k] - nodes[i][k]);
    return r;
}

double Path::min_radius() const {
    double r = norm(nodes.front());
    for (std::size_t i = 0; i + 1 < nodes.size(); i++)
        r = std::min(r, segment_min_radius(nodes[i], nodes[i + 1]));
    return r;
}

ActionResult action(const Potential& pot, const Path& path) {
    path.validate();
    ActionResult res;
    for (const auto& n : path.nodes)
        if (dot(n, n) == 0.0) {
            res.finite = false;
            res.value = std::numeric_limits<double>::infinity();
            return res;
        }
    double a = 0;
    for (std::size_t i = 0; i + 1 < path.nodes.size(); i++) {
        double dt = path.times[i + 1] - path.times[i];
        double kin = 0;
        for (std::size_t k = 0; k < path.nodes[i].size(); k++) {
            double d = path.nodes[i + 1][k] - path.nodes[i][k];
            kin += d * d;
        }
        a += kin / (2 * dt) + dt * chord_potential(pot, path.nodes[i], path.nodes[i + 1]);
    }
    res.value = a;
    return res;
}

ActionResult action_h(const Potential& pot, const Path& path, double h) {
    ActionResult res = action(pot, path);
    if (res.finite) res.value += h * path.duration();
    return res;
}

double kinetic_action(const Path& path) {
    double kin = 0;
    for (std::size_t i = 0; i + 1 < path.nodes.size(); i++) {
        double dt = path.times[i + 1] - path.times[i];
        double k2 = 0;
        for (std::size_t k = 0; k < path.nodes[i].size(); k++) {
            double d = path.nodes[i + 1][k] - path.nodes[i][k];
            k2 += d * d;
        }
        kin += k2 / (2 * dt);
    }
    return kin;
}

Path rescale_time(const Path& path, double delta) {
    if (!(delta > 0))
        throw std::domain_error("rescale_time: delta must be positive");
    Path r = path;
    for (auto& t : r.times) t *= delta;
    return r;
}

Path reversed(const Path& path) {
    Path r = path;
    std::size_t n = path.times.size();
    for (std::size_t i = 0; i < n; i++) {
        r.times[i] = -path.times[n - 1 - i];
        r.nodes[i] = path.nodes[n - 1 - i];
    }
    r.collision_nodes.clear();
    for (std::size_t idx : path.collision_nodes)
        r.collision_nodes.push_back(n - 1 - idx);
    return r;
}

Path concatenate(const Path& a, const Path& b) {
    if (std::abs(a.times.back() - b.times.front()) > 1e-12 ||
        dist(a.nodes.back(), b.nodes.front()) > 1e-12)
        throw std::invalid_argument("concatenate: junction mismatch");
    Path r = a;
    for (std::size_t i = 1; i < b.times.size(); i++) {
        r.times.push_back(b.times[i]);
        r.nodes.push_back(b.nodes[i]);
    }
    return r;
}

TopologicalClass winding_lift(const Path& path) {
    path.validate();
    if (path.dim() != 2)
        throw std::domain_error("winding_lift: planar paths only");
    TopologicalClass tc;
    tc.theta_minus = std::atan2(path.nodes.front()[1], path.nodes.front()[0]);
    tc.lift.resize(path.nodes.size());
    tc.lift[0] = tc.theta_minus;
    for (std::size_t i = 0; i + 1 < path.nodes.size(); i++) {
        const Vec& a = path.nodes[i];
        const Vec& b = path.nodes[i + 1];
        if (dot(a, a) == 0 || dot(b, b) == 0)
            throw LiftError("winding_lift: node at the origin");
        double cross = a[0] * b[1] - a[1] * b[0];
        double d = a[0] * b[0] + a[1] * b[1];
        double dth = std::atan2(cross, d);
        if (std::abs(dth) >= std::numbers::pi * (1 - 1e-12))
            throw LiftError("winding_lift: lift ambiguous, segment turns by >= pi");
        tc.lift[i + 1] = tc.lift[i] + dth;
    }
    tc.theta_plus = tc.lift.back();
    tc.winding = tc.theta_plus - tc.theta_minus;
    return tc;
}

bool in_class(const Path& path, double theta_minus, double theta_plus, double tol) {
    TopologicalClass tc = winding_lift(path);
    constexpr double two_pi = 2 * std::numbers::pi;
    double k = std::round((theta_minus - tc.theta_minus) / two_pi);
    return std::abs(tc.theta_minus + two_pi * k - theta_minus) <= tol &&
           std::abs(tc.theta_plus + two_pi * k - theta_plus) <= tol;
}

}  // namespace akp
