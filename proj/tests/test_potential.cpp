#include <cmath>
#include <numbers>
#include <random>

#include "akp/potential.hpp"
#include "doctest.h"

using namespace akp;
using std::numbers::pi;

namespace {

// Central-difference gradient, the independent oracle for closed-form gradients.
Vec fd_grad(const Potential& pot, const Vec& x, double step = 1e-5) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); i++) {
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        g[i] = (pot.value(xp) - pot.value(xm)) / (2 * step);
    }
    return g;
}

Vec random_unit(std::mt19937& rng, int d) {
    std::normal_distribution<double> n(0, 1);
    Vec s(d);
    double r2 = 0;
    do {
        r2 = 0;
        for (auto& c : s) {
            c = n(rng);
            r2 += c * c;
        }
    } while (r2 < 1e-8);
    double r = std::sqrt(r2);
    for (auto& c : s) c /= r;
    return s;
}

}  // namespace

TEST_CASE("eval_U: isotropic and Gutzwiller values") {
    auto kepler = Potential::gutzwiller(1.0, {1, 1});
    CHECK(kepler.value({3, 4}) == doctest::Approx(0.2).epsilon(1e-14));

    auto aniso = Potential::gutzwiller(1.0, {1, 2});
    CHECK(aniso.value({0, 1}) == doctest::Approx(std::pow(2, -0.5)).epsilon(1e-14));

    // homogeneity U(2x) = 2^-alpha U(x)
    Vec x{1, 0};
    CHECK(aniso.value({2, 0}) == doctest::Approx(0.5 * aniso.value(x)).epsilon(1e-14));

    CHECK_THROWS_AS(aniso.value({0, 0}), std::domain_error);
}

TEST_CASE("eval_U: homogeneity across scales") {
    auto pot = Potential::gutzwiller(0.7, {1, 3, 0.5});
    std::mt19937 rng(42);
    for (int k = 0; k < 50; k++) {
        Vec s = random_unit(rng, 3);
        double u1 = pot.value(s);
        for (double lam : {0.5, 2.0, 10.0}) {
            Vec xs = lam * s;
            CHECK(pot.value(xs) ==
                  doctest::Approx(std::pow(lam, -0.7) * u1).epsilon(1e-12));
        }
    }
}

TEST_CASE("grad_U: closed form against finite differences") {
    auto kepler = Potential::gutzwiller(1.0, {1, 1});
    Vec g = kepler.grad({1, 0});
    CHECK(g[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(g[1] == doctest::Approx(0.0));

    auto aniso = Potential::gutzwiller(1.0, {1, 2});
    Vec g2 = aniso.grad({0, 1});
    CHECK(g2[0] == doctest::Approx(0.0));
    CHECK(g2[1] == doctest::Approx(-std::pow(2, -0.5)).epsilon(1e-12));
    Vec fd = fd_grad(aniso, {0, 1});
    CHECK(g2[1] == doctest::Approx(fd[1]).epsilon(1e-8));

    std::mt19937 rng(7);
    auto pot = Potential::gutzwiller(1.3, {1, 2, 5});
    for (int k = 0; k < 30; k++) {
        Vec s = random_unit(rng, 3);
        Vec x = (0.5 + k * 0.1) * s;
        Vec ga = pot.grad(x), gf = fd_grad(pot, x);
        for (int i = 0; i < 3; i++)
            CHECK(ga[i] == doctest::Approx(gf[i]).epsilon(1e-7));
        // parity
        Vec xm = -1.0 * x;
        Vec gm = pot.grad(xm);
        for (int i = 0; i < 3; i++)
            CHECK(gm[i] == doctest::Approx(-ga[i]).epsilon(1e-12));
    }
}

TEST_CASE("sphere_grad: critical axes and finite-difference oracle") {
    auto aniso = Potential::gutzwiller(1.0, {1, 2});
    Vec g = aniso.sphere_grad({1, 0});
    CHECK(g[0] == doctest::Approx(0.0));
    CHECK(g[1] == doctest::Approx(0.0));

    // theta = pi/4: tangent gradient is Utilde'(pi/4) e_theta;
    // frozen from the d/dtheta (1 + sin^2)^(-1/2) oracle.
    double c = std::sqrt(0.5);
    Vec g2 = aniso.sphere_grad({c, c});
    CHECK(g2[0] == doctest::Approx(0.19245008972987526).epsilon(1e-10));
    CHECK(g2[1] == doctest::Approx(-0.19245008972987526).epsilon(1e-10));
    double d = 1e-6;
    double fd = (aniso.theta_value(pi / 4 + d) - aniso.theta_value(pi / 4 - d)) / (2 * d);
    CHECK(aniso.theta_deriv(pi / 4) == doctest::Approx(fd).epsilon(1e-8));

    std::mt19937 rng(3);
    for (int k = 0; k < 100; k++) {
        Vec s = random_unit(rng, 2);
        CHECK(std::abs(dot(aniso.sphere_grad(s), s)) < 1e-12);
    }
    CHECK_THROWS_AS(aniso.sphere_grad({1.5, 0}), std::domain_error);
}

TEST_CASE("hess: closed forms against finite differences of the gradient") {
    std::mt19937 rng(23);
    auto pot3 = Potential::gutzwiller(1.2, {1, 2, 3});
    auto ref = Potential::gutzwiller(0.8, {1, 2});
    std::vector<double> th, uv;
    for (int k = 0; k < 256; k++) {
        th.push_back(2 * pi * k / 256);
        uv.push_back(ref.theta_value(th.back()));
    }
    auto tab = Potential::planar_table(0.8, th, uv);
    auto check = [&](const Potential& pot, int d, double tol) {
        for (int rep = 0; rep < 15; rep++) {
            Vec x = (0.6 + 0.2 * rep) * random_unit(rng, d);
            auto H = pot.hess(x);
            double step = 1e-5;
            for (int j = 0; j < d; j++) {
                Vec xp = x, xm = x;
                xp[j] += step;
                xm[j] -= step;
                Vec gp = pot.grad(xp), gm = pot.grad(xm);
                for (int i = 0; i < d; i++) {
                    double fd = (gp[i] - gm[i]) / (2 * step);
                    CHECK(H[std::size_t(i) * d + j] == doctest::Approx(fd).epsilon(tol));
                }
            }
        }
    };
    check(pot3, 3, 1e-5);
    check(ref, 2, 1e-5);
    check(tab, 2, 1e-4);
}

TEST_CASE("Euler identity <grad U, x> = -alpha U") {
    std::mt19937 rng(11);
    for (double alpha : {0.5, 1.0, 1.5}) {
        auto pot = Potential::gutzwiller(alpha, {1, 2});
        for (int k = 0; k < 50; k++) {
            Vec s = random_unit(rng, 2);
            Vec x = (0.1 + 3.0 * k / 50) * s;
            double lhs = dot(pot.grad(x), x);
            CHECK(lhs == doctest::Approx(-alpha * pot.value(x)).epsilon(1e-10));
        }
    }
}

TEST_CASE("critical_structure: Gutzwiller partitions") {
    auto cs = Potential::gutzwiller(1.0, {1, 2}).critical_structure();
    REQUIRE(cs.components.size() == 2);
    CHECK(cs.components[0].weight == 1.0);
    CHECK(cs.components[1].weight == 2.0);
    CHECK(cs.isolated_points.size() == 4);
    REQUIRE(cs.min_set.size() == 2);
    CHECK(cs.min_set[0].theta == doctest::Approx(pi / 2));
    CHECK(cs.min_set[1].theta == doctest::Approx(3 * pi / 2));

    auto iso = Potential::gutzwiller(1.0, {1, 1}).critical_structure();
    CHECK(iso.degenerate_constant);
    CHECK(iso.components.size() == 1);

    auto c3 = Potential::gutzwiller(1.0, {1, 1, 2}).critical_structure();
    REQUIRE(c3.components.size() == 2);
    CHECK(c3.components[0].indices.size() == 2);  // circle in span(e1, e2)
    CHECK_FALSE(c3.components[0].isolated);
    CHECK(c3.components[1].isolated);             // +-e3
    CHECK(c3.isolated_points.size() == 2);
}

TEST_CASE("critical_structure: min_set matches a dense theta scan") {
    // independent oracle: brute-force scan of Utilde
    auto pot = Potential::gutzwiller(1.0, {1, 2});
    int n = 20000;
    double best = 1e300;
    std::vector<double> arg;
    for (int k = 0; k < n; k++) {
        double th = 2 * pi * k / n;
        double v = pot.theta_value(th);
        if (v < best - 1e-13) {
            best = v;
            arg = {th};
        } else if (std::abs(v - best) <= 1e-13) {
            arg.push_back(th);
        }
    }
    auto cs = pot.critical_structure();
    REQUIRE(cs.min_set.size() == arg.size());
    for (std::size_t i = 0; i < arg.size(); i++)
        CHECK(cs.min_set[i].theta == doctest::Approx(arg[i]).epsilon(1e-3));
}

TEST_CASE("sphere_grad vanishes only at reported critical angles (distinct weights)") {
    auto pot = Potential::gutzwiller(1.0, {1, 2});
    auto cs = pot.critical_structure();
    for (int k = 0; k < 3600; k++) {
        double th = 2 * pi * k / 3600;
        Vec s{std::cos(th), std::sin(th)};
        double g = norm(pot.sphere_grad(s));
        double dmin = 1e300;
        for (double ca : cs.critical_angles)
            dmin = std::min(dmin, std::abs(std::remainder(th - ca, 2 * pi)));
        if (dmin < 1e-9)
            CHECK(g <= 1e-9);
        else
            CHECK(g > 1e-4 * dmin);  // no spurious zeros away from the axes
    }
}

TEST_CASE("check_conditions: U4 and the nondegeneracy report") {
    auto rep = Potential::gutzwiller(1.0, {1, 2}).check_conditions();
    CHECK(rep.u4 == Verdict::holds);  // 2 > 1.125
    CHECK(rep.u4_threshold == doctest::Approx(1.125).epsilon(1e-15));
    CHECK(rep.u2 == Verdict::fails);
    CHECK(rep.u3 == Verdict::holds);
    REQUIRE(rep.u3_minima.size() == 2);
    // Utilde''(pi/2) = alpha (m2 - m1) m2^(-alpha/2 - 1) = 2^(-3/2); cross-check by FD
    CHECK(rep.u3_minima[0].u_dd == doctest::Approx(std::pow(2, -1.5)).epsilon(1e-12));
    auto pot = Potential::gutzwiller(1.0, {1, 2});
    double d = 1e-4;
    double fd2 = (pot.theta_value(pi / 2 + d) - 2 * pot.theta_value(pi / 2) +
                  pot.theta_value(pi / 2 - d)) / (d * d);
    CHECK(rep.u3_minima[0].u_dd == doctest::Approx(fd2).epsilon(1e-6));

    auto rep2 = Potential::gutzwiller(1.0, {1, 1.1}).check_conditions();
    CHECK(rep2.u4 == Verdict::fails);  // 1.1 < 1.125

    auto rep3 = Potential::gutzwiller(1.0, {1, 1}).check_conditions();
    CHECK(rep3.u2 == Verdict::holds);
}

TEST_CASE("U4 inequality agrees with the spiral second-derivative form on a grid") {
    for (double alpha : {0.3, 0.5, 1.0, 1.5, 1.9}) {
        for (double ratio : {1.01, 1.05, 1.125, 1.3, 2.0, 5.0, 20.0}) {
            auto rep = Potential::gutzwiller(alpha, {1.0, ratio}).check_conditions();
            CHECK(rep.u4 == rep.spiral_equiv);
        }
    }
}

TEST_CASE("general planar form: spline table reproduces the Gutzwiller profile") {
    auto ref = Potential::gutzwiller(1.0, {1, 2});
    std::vector<double> th, uv;
    int n = 256;
    for (int k = 0; k < n; k++) {
        th.push_back(2 * pi * k / n);
        uv.push_back(ref.theta_value(th.back()));
    }
    auto tab = Potential::planar_table(1.0, th, uv);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ang(0, 2 * pi);
    for (int k = 0; k < 200; k++) {
        double t = ang(rng);
        CHECK(tab.theta_value(t) == doctest::Approx(ref.theta_value(t)).epsilon(1e-7));
    }
    // gradient path: closed polar form vs finite differences
    for (int k = 0; k < 20; k++) {
        double t = ang(rng);
        Vec x{1.7 * std::cos(t), 1.7 * std::sin(t)};
        Vec ga = tab.grad(x), gf = fd_grad(tab, x);
        for (int i = 0; i < 2; i++)
            CHECK(ga[i] == doctest::Approx(gf[i]).epsilon(1e-6));
        double lhs = dot(tab.grad(x), x);
        CHECK(lhs == doctest::Approx(-1.0 * tab.value(x)).epsilon(1e-6));
    }
    auto rep = tab.check_conditions();
    CHECK(rep.u1 == Verdict::not_applicable);
    CHECK(rep.u4 == Verdict::not_applicable);
    CHECK(rep.u3 == Verdict::holds);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(Potential::gutzwiller(2.0, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(Potential::gutzwiller(0.0, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(Potential::gutzwiller(1.0, {1, -2}), std::invalid_argument);
    CHECK_THROWS_AS(Potential::gutzwiller(1.0, {1}), std::invalid_argument);
}
