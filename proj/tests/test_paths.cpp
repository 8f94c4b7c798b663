#include <cmath>
#include <numbers>
#include <random>

#include "akp/paths.hpp"
#include "doctest.h"

using namespace akp;
using std::numbers::pi;

namespace {

Path uniform_path(double t0, double t1, int n, const std::function<Vec(double)>& f) {
    Path p;
    for (int i = 0; i <= n; i++) {
        double t = t0 + (t1 - t0) * i / n;
        p.times.push_back(t);
        p.nodes.push_back(f(t));
    }
    return p;
}

const auto kepler = Potential::gutzwiller(1.0, {1, 1});

}  // namespace

TEST_CASE("action: straight radial path has the analytic value") {
    // x(t) = (1+t, 0) on [0,1]: A = 1/2 + ln 2
    auto p = uniform_path(0, 1, 512, [](double t) { return Vec{1 + t, 0}; });
    double expect = 0.5 + std::log(2.0);
    CHECK(action(kepler, p).value == doctest::Approx(expect).epsilon(1e-10));

    // grid-refinement consistency at N = 512
    auto p2 = uniform_path(0, 1, 1024, [](double t) { return Vec{1 + t, 0}; });
    CHECK(std::abs(action(kepler, p).value - action(kepler, p2).value) <= 1e-8);

    // action_h adds h * duration
    CHECK(action_h(kepler, p, 0.5).value ==
          doctest::Approx(expect + 0.5).epsilon(1e-10));
    CHECK(action_h(kepler, p, 0.0).value == action(kepler, p).value);
    double a1 = action_h(kepler, p, 1.0).value;
    double a2 = action_h(kepler, p, 2.0).value;
    CHECK(a2 - a1 == doctest::Approx(1.0 * p.duration()).epsilon(1e-13));
}

TEST_CASE("action: stationary path is U * T") {
    Path p;
    p.times = {0, 1, 2, 3.5};
    p.nodes = {Vec{2, 0}, Vec{2, 0}, Vec{2, 0}, Vec{2, 0}};
    double u = kepler.value({2, 0});
    CHECK(action(kepler, p).value == doctest::Approx(u * 3.5).epsilon(1e-12));
}

TEST_CASE("action: node at the origin flags infinite action") {
    Path p;
    p.times = {0, 1, 2};
    p.nodes = {Vec{1, 0}, Vec{0, 0}, Vec{1, 1}};
    auto res = action(kepler, p);
    CHECK_FALSE(res.finite);
    CHECK(std::isinf(res.value));
}

TEST_CASE("action: additivity over a shared grid point") {
    auto f = [](double t) { return Vec{std::cos(t) * (1 + t), std::sin(t)}; };
    auto whole = uniform_path(0, 2, 64, f);
    Path left, right;
    for (int i = 0; i <= 32; i++) {
        left.times.push_back(whole.times[i]);
        left.nodes.push_back(whole.nodes[i]);
    }
    for (int i = 32; i <= 64; i++) {
        right.times.push_back(whole.times[i]);
        right.nodes.push_back(whole.nodes[i]);
    }
    double sum = action(kepler, left).value + action(kepler, right).value;
    CHECK(action(kepler, whole).value == doctest::Approx(sum).epsilon(1e-14));
}

TEST_CASE("action: second-order convergence on a smooth test path") {
    auto f = [](double t) { return Vec{2 * std::cos(t), std::sin(t)}; };
    // reference from a very fine grid
    double ref = action(kepler, uniform_path(0, 2, 1 << 14, f)).value;
    double e1 = std::abs(action(kepler, uniform_path(0, 2, 128, f)).value - ref);
    double e2 = std::abs(action(kepler, uniform_path(0, 2, 256, f)).value - ref);
    double rate = std::log2(e1 / e2);
    CHECK(rate > 1.9);
    CHECK(rate < 2.1);
}

TEST_CASE("rescale_time: exact scaling identity of the discrete functional") {
    auto f = [](double t) { return Vec{1.5 + std::cos(t), 0.3 + std::sin(2 * t)}; };
    auto p = uniform_path(0.5, 2.5, 97, f);
    double h = 0.7;
    double ah = action_h(kepler, p, h).value;
    double kin = kinetic_action(p);
    for (double delta : {1.0, 0.5, 2.0, 1.1}) {
        auto ps = rescale_time(p, delta);
        double lhs = action_h(kepler, ps, h).value;
        double rhs = delta * ah + (1 / delta - delta) * kin;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        // kinetic scales as 1/delta, potential+h as delta
        CHECK(kinetic_action(ps) == doctest::Approx(kin / delta).epsilon(1e-13));
    }
    CHECK_THROWS_AS(rescale_time(p, -1.0), std::domain_error);
}

TEST_CASE("winding_lift: canonical examples") {
    auto circle = uniform_path(0, 2 * pi, 256, [](double t) {
        return Vec{std::cos(t), std::sin(t)};
    });
    CHECK(winding_lift(circle).winding == doctest::Approx(2 * pi).epsilon(1e-12));

    auto straight = uniform_path(0, 1, 8, [](double t) { return Vec{1 + t, 0}; });
    CHECK(winding_lift(straight).winding == doctest::Approx(0.0));

    auto semi = uniform_path(0, 1, 64, [](double t) {
        return Vec{std::cos(pi * t), std::sin(pi * t)};
    });
    CHECK(winding_lift(semi).winding == doctest::Approx(pi).epsilon(1e-12));
    CHECK(in_class(semi, 0, pi, 1e-9));
    CHECK_FALSE(in_class(semi, 0, -pi, 1e-9));

    auto threequarter = uniform_path(0, 1, 64, [](double t) {
        return Vec{std::cos(1.5 * pi * t), std::sin(1.5 * pi * t)};
    });
    CHECK(in_class(threequarter, 0, 1.5 * pi, 1e-9));
}

TEST_CASE("winding_lift: ambiguous segment is an error") {
    Path p;
    p.times = {0, 1};
    p.nodes = {Vec{1, 0}, Vec{-1, 0}};
    CHECK_THROWS_AS(winding_lift(p), LiftError);
}

TEST_CASE("winding lift: additivity and reversal properties") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int rep = 0; rep < 25; rep++) {
        double w1 = 3 * u(rng), w2 = 3 * u(rng);
        auto f1 = [&](double t) {
            double th = w1 * t;
            return Vec{(1 + 0.2 * t) * std::cos(th), (1 + 0.2 * t) * std::sin(th)};
        };
        auto f2 = [&](double t) {
            double th = w1 + w2 * (t - 1);
            return Vec{1.2 * std::cos(th), 1.2 * std::sin(th)};
        };
        auto a = uniform_path(0, 1, 128, f1);
        auto b = uniform_path(1, 2, 128, f2);
        b.nodes.front() = a.nodes.back();  // exact junction
        auto joined = concatenate(a, b);
        double wa = winding_lift(a).winding, wb = winding_lift(b).winding;
        CHECK(winding_lift(joined).winding == doctest::Approx(wa + wb).epsilon(1e-10));
        CHECK(winding_lift(reversed(a)).winding == doctest::Approx(-wa).epsilon(1e-12));
    }
}

TEST_CASE("near-origin segments are subdivided, keeping the quadrature finite and stable") {
    // chord passing within 1e-5 of the origin
    Path p;
    p.times = {0, 1};
    p.nodes = {Vec{-1, 1e-5}, Vec{1, 1e-5}};
    auto res = action(kepler, p);
    CHECK(res.finite);
    // analytic: kinetic 2 + int_0^1 dt / sqrt((2t-1)^2 + 1e-10)
    // = 2 + (1/2) * 2 asinh(1/1e-5)
    double expect = 2.0 + std::asinh(1e5);
    CHECK(res.value == doctest::Approx(expect).epsilon(1e-9));
}
