#include <cmath>
#include <numbers>
#include <random>

#include "akp/minimize.hpp"
#include "doctest.h"

using namespace akp;
using std::numbers::pi;

namespace {

const auto kepler = Potential::gutzwiller(1.0, {1, 1});
const auto aniso = Potential::gutzwiller(1.0, {1, 2});

MinimizeOptions quick_opts(int nodes = 128, int restarts = 1) {
    MinimizeOptions o;
    o.nodes = nodes;
    o.restarts = restarts;
    return o;
}

}  // namespace

TEST_CASE("minimize_fixed_time: Kepler circular arc oracle") {
    // analytic solution: unit circular orbit, action (1/2 + 1) T
    double T = pi / 2;
    Vec p{1, 0}, q{std::cos(T), std::sin(T)};
    auto res = minimize_fixed_time(kepler, p, q, T, quick_opts(256, 2));
    CHECK(res.converged);
    CHECK(res.value == doctest::Approx(1.5 * T).epsilon(0.005));
    CHECK(res.el_residual < 1e-6);
    CHECK_FALSE(res.collision_suspect);

    // result beats the straight-line seed
    Path straight;
    straight.times = {0, T / 2, T};
    straight.nodes = {p, Vec{(p[0] + q[0]) / 2, (p[1] + q[1]) / 2}, q};
    CHECK(res.value <= action(kepler, straight).value + 1e-12);
}

TEST_CASE("minimize_fixed_time: short-time pinned endpoints stay local") {
    Vec p{2, 0.5};
    double T = 0.05;
    auto res = minimize_fixed_time(aniso, p, p, T, quick_opts(64, 0));
    double u = aniso.value(p);
    CHECK(res.value == doctest::Approx(T * u).epsilon(0.02));
    for (const auto& n : res.path.nodes)
        CHECK(dist(n, p) < 0.05);
}

TEST_CASE("coercivity inequality holds along discrete paths") {
    // |xi(t)| <= sqrt(T) ||xi'||_L2 + |p| is Cauchy-Schwarz on the discrete path
    double T = pi / 2;
    Vec p{1, 0}, q{0, 1};
    auto res = minimize_fixed_time(kepler, p, q, T, quick_opts(64, 1));
    double k2 = 2 * kinetic_action(res.path);  // = ||xi'||^2_L2
    double bound = std::sqrt(T) * std::sqrt(k2) + norm(p);
    std::mt19937 rng(4);
    std::normal_distribution<double> nd(0, 0.1);
    for (int rep = 0; rep < 3; rep++) {
        Path probe = res.path;
        for (std::size_t i = 1; i + 1 < probe.nodes.size(); i++)
            for (auto& c : probe.nodes[i]) c += nd(rng);
        double kk = std::sqrt(2 * kinetic_action(probe));
        double bb = std::sqrt(T) * kk + norm(p);
        for (const auto& n : probe.nodes)
            CHECK(norm(n) <= bb + 1e-12);
    }
    for (const auto& n : res.path.nodes)
        CHECK(norm(n) <= bound + 1e-12);
}

TEST_CASE("minimize_fixed_time: grid refinement is monotone") {
    double T = pi / 2;
    Vec p{1, 0}, q{0, 1};
    auto coarse = minimize_fixed_time(kepler, p, q, T, quick_opts(64, 1));
    auto fine = minimize_fixed_time(kepler, p, q, T, quick_opts(128, 1));
    CHECK(fine.value <= coarse.value + 1e-8);
}

TEST_CASE("free_time_minimize: Kepler radial oracle and Maupertuis energy") {
    Vec p{1, 0}, q{std::exp(1.0), 0};
    auto res = free_time_minimize(kepler, p, q, 0.5, quick_opts(256, 1));
    CHECK(res.converged);
    // radial quadrature oracle int_1^e sqrt(1 + 2/r) dr, frozen
    CHECK(res.value == doctest::Approx(2.5200940820354822).epsilon(0.005));
    // Lemma 3.3(a) bound with Umax = 1: value <= e
    CHECK(res.value <= std::exp(1.0) + 1e-6);
    CHECK(res.energy_of_path == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("free_time_minimize: f(T) lower bounds on sampled durations") {
    Vec p{1, 0}, q{2.5, 0.5};
    double h = 0.5;
    for (double T : {0.2, 0.8, 2.0, 6.0}) {
        auto r = minimize_fixed_time(kepler, p, q, T, quick_opts(64, 0));
        double f = r.value + h * T;
        CHECK(f >= h * T);
        double d2 = dist(p, q) * dist(p, q);
        CHECK(f >= d2 / (2 * T) - 1e-9);
    }
}

TEST_CASE("free_time_minimize: rescaling bounds around the optimum") {
    // f(dT) <= f(T)/d for d <= 1 and f(T) <= d f(dT) for d >= 1, via the
    // rescaled test path gamma(t/d); both checked through rescale_time.
    Vec p{1, 0}, q{std::exp(1.0), 0};
    double h = 0.5;
    auto res = free_time_minimize(kepler, p, q, h, quick_opts(128, 0));
    for (double delta : {0.9, 1.1}) {
        auto scaled = rescale_time(res.path, delta);
        double ah = action_h(kepler, scaled, h).value;
        double kin = kinetic_action(res.path);
        // the rescaled-path identity behind both bounds
        CHECK(ah == doctest::Approx(delta * res.value + (1 / delta - delta) * kin)
                        .epsilon(1e-12));
        auto direct = minimize_fixed_time(kepler, p, q, delta * res.T, quick_opts(128, 0));
        double f_scaled = direct.value + h * delta * res.T;
        if (delta <= 1)
            CHECK(f_scaled <= res.value / delta + 1e-9);
        else
            CHECK(res.value <= delta * f_scaled + 1e-9);
        // T* is a minimizer of f
        CHECK(f_scaled >= res.value - 1e-6);
    }
}

TEST_CASE("phi_h_bound: closed forms") {
    PhiBoundArgs a;
    a.r1 = 1;
    a.r2 = std::exp(1.0);
    CHECK(phi_h_bound(kepler, PhiBoundKind::radial, 0.5, a) ==
          doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    CHECK(phi_h_bound(kepler, PhiBoundKind::from_origin, 1.0) ==
          doctest::Approx(14.0 / 3).epsilon(1e-12));
    PhiBoundArgs bad;
    bad.r1 = 2;
    bad.r2 = 1;
    CHECK_THROWS_AS(phi_h_bound(kepler, PhiBoundKind::radial, 0.5, bad),
                    std::domain_error);

    // free-time result between aligned radial endpoints respects the bound
    for (double r2 : {2.0, 4.0}) {
        Vec p{1, 0}, q{r2, 0};
        auto res = free_time_minimize(kepler, p, q, 0.5, quick_opts(96, 0));
        PhiBoundArgs args;
        args.r1 = 1;
        args.r2 = r2;
        CHECK(res.value <= phi_h_bound(kepler, PhiBoundKind::radial, 0.5, args) + 1e-9);
    }
}

TEST_CASE("phi_h subadditivity on collinear triples") {
    double h = 0.5;
    Vec p{1, 0}, m{1.8, 0}, q{2.7, 0};
    auto pq = free_time_minimize(kepler, p, q, h, quick_opts(96, 0));
    auto pm = free_time_minimize(kepler, p, m, h, quick_opts(96, 0));
    auto mq = free_time_minimize(kepler, m, q, h, quick_opts(96, 0));
    CHECK(pq.value <= pm.value + mq.value + 1e-6);
}

TEST_CASE("minimize_constrained: Kepler quarter-turn class") {
    auto res = minimize_constrained(kepler, 10, 0, 10, pi / 2, 0.5, quick_opts(192, 1));
    CHECK(res.converged);
    auto tc = winding_lift(res.path);
    CHECK(tc.winding == doctest::Approx(pi / 2).epsilon(1e-9));
    CHECK(res.energy_of_path == doctest::Approx(0.5).epsilon(1e-4));

    // adding a full extra turn costs strictly more action
    auto more = minimize_constrained(kepler, 10, 0, 10, pi / 2 + 2 * pi, 0.5,
                                     quick_opts(192, 1));
    CHECK(more.value > res.value + 1e-3);
    auto tc2 = winding_lift(more.path);
    CHECK(tc2.winding == doctest::Approx(pi / 2 + 2 * pi).epsilon(1e-9));
}

TEST_CASE("minimize_constrained: Gutzwiller wide-turn class avoids collision") {
    // |dtheta| = 5 pi / 4 > pi; theory predicts a collision-free minimizer
    auto res = minimize_constrained(aniso, 50, 3 * pi / 4, 50, -pi / 2, 0.5,
                                    quick_opts(192, 2));
    CHECK(res.min_radius > 1e-2);
    CHECK_FALSE(res.collision_suspect);
    CHECK(in_class(res.path, 3 * pi / 4, -pi / 2, 1e-6));
}

TEST_CASE("brute-force oracle: annealing cannot beat the quasi-Newton result") {
    // N = 8, fixed T; coarse simulated annealing over the interior nodes
    double T = pi / 3;
    Vec p{1, 0}, q{std::cos(T), std::sin(T)};
    MinimizeOptions o = quick_opts(8, 2);
    o.grad_tol = 1e-10;
    auto res = minimize_fixed_time(kepler, p, q, T, o);

    std::mt19937 rng(2024);
    std::normal_distribution<double> nd(0, 1);
    Path path = res.path;
    auto eval = [&](const Path& pa) { return action(kepler, pa).value; };
    Path cur = path;
    // start annealing from a deliberately different configuration
    for (std::size_t i = 1; i + 1 < cur.nodes.size(); i++)
        for (auto& c : cur.nodes[i]) c += 0.2 * nd(rng);
    double fc = eval(cur);
    double best = fc;
    double temp = 0.05;
    for (int it = 0; it < 20000; it++) {
        Path trial = cur;
        std::size_t i = 1 + rng() % (trial.nodes.size() - 2);
        for (auto& c : trial.nodes[i]) c += temp * nd(rng);
        double ft = eval(trial);
        if (ft < fc || std::exp((fc - ft) / temp) > std::uniform_real_distribution<>(0, 1)(rng)) {
            cur = trial;
            fc = ft;
            best = std::min(best, fc);
        }
        temp *= 0.9997;
    }
    CHECK(best >= res.value - 1e-3 * std::abs(res.value));
}
