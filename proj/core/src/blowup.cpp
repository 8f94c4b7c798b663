#include "akp/blowup.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <set>
#include <sstream>

namespace akp {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

double quad(const std::function<double(double)>& f, double a, double b) {
    if (a == b) return 0;
    return GK::integrate(f, a, b, 12, 1e-12);
}

}  // namespace

Vec HomotheticSpec::at(double t) const {
    double p = 2 / (2 + alpha);
    if (t >= 0) return std::pow(kappa_plus * t, p) * s_plus;
    return std::pow(-kappa_minus * t, p) * s_minus;
}

Vec HomotheticSpec::velocity(double t) const {
    double p = 2 / (2 + alpha);
    if (t > 0)
        return p * kappa_plus * std::pow(kappa_plus * t, p - 1) * s_plus;
    if (t < 0)
        return -p * kappa_minus * std::pow(-kappa_minus * t, p - 1) * s_minus;
    throw std::domain_error("homothetic velocity undefined at the collision");
}

Path blow_up(const Path& path, double lambda, double alpha) {
    if (!(lambda > 0))
        throw std::domain_error("blow_up: lambda must be positive");
    double c = std::pow(lambda, -2 / (2 + alpha));
    Path out = path;
    for (std::size_t i = 0; i < out.times.size(); i++) {
        out.times[i] = path.times[i] / lambda;
        out.nodes[i] = c * path.nodes[i];
    }
    return out;
}

std::pair<HomotheticSpec, Path> make_homothetic(const Potential& pot, const Vec& s_plus,
                                                const Vec& s_minus, double T,
                                                int samples_per_side) {
    for (const Vec* s : {&s_plus, &s_minus}) {
        if (std::abs(norm(*s) - 1.0) > 1e-9)
            throw std::domain_error("make_homothetic: directions must be unit vectors");
        if (norm(pot.sphere_grad(*s)) > kCriticalTol)
            throw std::domain_error(
                "make_homothetic: direction is not a critical point of U");
    }
    HomotheticSpec spec;
    spec.s_plus = s_plus;
    spec.s_minus = s_minus;
    spec.alpha = pot.alpha();
    spec.beta_plus = pot.value(s_plus);
    spec.beta_minus = pot.value(s_minus);
    spec.kappa_plus = (2 + spec.alpha) / 2 * std::sqrt(2 * spec.beta_plus);
    spec.kappa_minus = (2 + spec.alpha) / 2 * std::sqrt(2 * spec.beta_minus);
    spec.horizon = T;

    // grid clustered toward the collision; exponent chosen so panel action
    // contributions stay balanced for r ~ t^(2/(2+alpha))
    double gamma = (2 + spec.alpha) / (2 - spec.alpha);
    Path path;
    int K = samples_per_side;
    for (int k = -K; k <= K; k++) {
        double u = double(std::abs(k)) / K;
        double t = (k < 0 ? -1 : 1) * T * std::pow(u, gamma);
        path.times.push_back(t);
        if (k == 0) {
            path.nodes.push_back(Vec(s_plus.size(), 0.0));
            path.collision_nodes.push_back(path.nodes.size() - 1);
        } else {
            path.nodes.push_back(spec.at(t));
        }
    }
    return {std::move(spec), std::move(path)};
}

double DeformationSpec::f(double t, double alpha) const {
    double q = (2 + alpha) / 2;
    double pe = std::pow(epsilon, q);
    double a = std::abs(t);
    if (a >= pe + epsilon) return 0;
    if (a >= pe) return epsilon + pe - a;
    return epsilon;
}

double DeformationSpec::fdot(double t, double alpha) const {
    double q = (2 + alpha) / 2;
    double pe = std::pow(epsilon, q);
    double a = std::abs(t);
    if (a > pe && a < pe + epsilon) return t > 0 ? -1.0 : 1.0;
    return 0;
}

DeformationTerms deformation_terms(const Potential& pot, const HomotheticSpec& spec,
                                   const DeformationSpec& deform, double T) {
    if (!pot.is_gutzwiller())
        throw std::domain_error("deformation_terms: Gutzwiller form only");
    const double alpha = pot.alpha();
    const double eps = deform.epsilon;
    const double p = 2 / (2 + alpha), q = (2 + alpha) / 2;
    const double pe = std::pow(eps, q);
    if (!(pe + eps < T))
        throw std::domain_error("deformation_terms: support must fit inside (-T, T)");
    const Vec& sg = deform.sigma;

    DeformationTerms out;
    auto one_side = [&](double kappa, const Vec& s, double& t1, double& t2, double& t3) {
        double cross_e = dot(sg, s);                  // Euclidean, kinetic terms
        double cross_m = pot.m_dot(s, sg);            // M-weighted, potential terms
        double ns2 = pot.m_dot(s, s);
        double nsg2 = pot.m_dot(sg, sg);
        double kp = std::pow(kappa, p);

        // ramp kinetic term, closed form
        t1 = eps / 2 - kp * cross_e * (std::pow(pe + eps, p) - eps);

        // plateau potential term via tau = eps^-1 t^p, regularized by tau = u^(2/(2-alpha))
        double ex = 2 / (2 - alpha);
        auto g2 = [&](double u) {
            double tau = std::pow(u, ex);
            double quadf = kp * kp * ns2 * tau * tau + 2 * kp * cross_m * tau + nsg2;
            double first = std::pow(tau, alpha / 2) * std::pow(quadf, -alpha / 2);
            double second = std::pow(tau, -alpha / 2) /
                            (std::pow(kappa, p * alpha) * std::pow(ns2, alpha / 2));
            return (first - second) * ex * std::pow(u, ex - 1);
        };
        t2 = q * std::pow(eps, (2 - alpha) / 2) * quad(g2, 0.0, 1.0);

        // ramp potential term
        auto g3 = [&](double t) {
            double f = eps + pe - t;
            double rterm = std::pow(kappa * t, 2 * p) * ns2 + f * f * nsg2 +
                           2 * std::pow(kappa * t, p) * f * cross_m;
            return std::pow(rterm, -alpha / 2) -
                   std::pow(kappa * t, -p * alpha) * std::pow(ns2, -alpha / 2);
        };
        t3 = quad(g3, pe, pe + eps);
    };
    one_side(spec.kappa_plus, spec.s_plus, out.A1, out.A2, out.A3);
    one_side(spec.kappa_minus, spec.s_minus, out.B1, out.B2, out.B3);
    out.total = out.sum();

    // Independent route: quadrature of L(xbar + f sigma) - L(xbar). The
    // subtracted U(xbar) singularity at t = 0 is regularized by t = w^((2+a)/(2-a)).
    auto u_of = [&](const Vec& x) { return pot.value(x); };
    auto pot_diff = [&](double t) {
        Vec xb = spec.at(t);
        Vec xe = xb;
        axpy(deform.f(t, alpha), sg, xe);
        return u_of(xe) - u_of(xb);
    };
    double exw = (2 + alpha) / (2 - alpha);
    double wmax = std::pow(pe, 1 / exw);
    double direct = 0;
    for (double side : {1.0, -1.0}) {
        auto plateau = [&](double w) {
            double t = side * std::pow(w, exw);
            return pot_diff(t) * exw * std::pow(w, exw - 1);
        };
        direct += quad(plateau, 0.0, wmax);
        auto ramp = [&](double a) {
            double t = side * a;
            double fd = deform.fdot(t, alpha);
            return 0.5 * fd * fd + fd * dot(spec.velocity(t), sg) + pot_diff(t);
        };
        direct += quad(ramp, pe, pe + eps);
    }
    out.direct_diff = direct;
    return out;
}

namespace {

/// Index group (by exact weight) containing the support of a critical direction.
int weight_group(const Potential& pot, const Vec& s, double* weight) {
    const auto& w = pot.weights();
    int idx = -1;
    for (std::size_t i = 0; i < s.size(); i++) {
        if (std::abs(s[i]) > 1e-9) {
            if (idx < 0) idx = int(i);
            if (w[i] != w[idx])
                throw std::domain_error(
                    "deformation: direction is supported on unequal weights");
        }
    }
    if (weight) *weight = w[idx];
    return idx;
}

}  // namespace

MinimalityReport test_minimality(const Potential& pot, const HomotheticSpec& spec,
                                 double T, const std::vector<double>& epsilon_grid) {
    if (!pot.is_gutzwiller())
        throw std::domain_error("test_minimality: Gutzwiller form only");
    const auto& weights = pot.weights();
    const std::size_t d = spec.s_plus.size();

    double wp = 0, wm = 0;
    int ip = weight_group(pot, spec.s_plus, &wp);
    int im = weight_group(pot, spec.s_minus, &wm);

    MinimalityReport rep;
    if (wp != wm) {
        rep.sigma_case = 1;
        rep.sigma = spec.s_minus;
    } else {
        std::size_t group_size = 0;
        for (double w : weights)
            if (w == wp) group_size++;
        if (group_size == 1) {
            rep.sigma_case = 2;
            for (std::size_t i = 0; i < d; i++)
                if (int(i) != ip) {
                    rep.sigma = unit(d, i);
                    break;
                }
        } else {
            rep.sigma_case = 3;
            Vec bis = spec.s_plus + spec.s_minus;
            if (norm(bis) > 1e-9) {
                rep.sigma = normalized(bis);
            } else {
                // s+ = -s-: any unit vector of the group subspace orthogonal to s-
                Vec cand(d, 0.0);
                for (std::size_t i = 0; i < d; i++) {
                    if (weights[i] != wp) continue;
                    Vec e = unit(d, i);
                    axpy(-dot(e, spec.s_minus), spec.s_minus, e);
                    if (norm(e) > 1e-6) {
                        cand = normalized(e);
                        break;
                    }
                }
                if (norm(cand) == 0)
                    throw std::domain_error("test_minimality: no transverse direction");
                rep.sigma = cand;
            }
            if (dot(rep.sigma, spec.s_plus) < 0 || dot(rep.sigma, spec.s_minus) < 0)
                throw std::domain_error("test_minimality: sigma sign convention broken");
        }
    }

    DeformationSpec def;
    def.sigma = rep.sigma;
    bool all_negative = true;
    for (double eps : epsilon_grid) {
        def.epsilon = eps;
        auto terms = deformation_terms(pot, spec, def, T);
        all_negative &= terms.total < 0 && terms.direct_diff < 0;
        rep.epsilons.push_back(eps);
        rep.terms.push_back(terms);
    }
    rep.verdict = all_negative && !epsilon_grid.empty() ? MinimalityVerdict::not_minimizer
                                                        : MinimalityVerdict::inconclusive;
    return rep;
}

std::string MinimalityReport::text() const {
    std::ostringstream os;
    os << "sigma case " << sigma_case << ", sigma = (";
    for (std::size_t i = 0; i < sigma.size(); i++)
        os << (i ? ", " : "") << sigma[i];
    os << ")\n";
    for (std::size_t k = 0; k < epsilons.size(); k++) {
        const auto& t = terms[k];
        os << "eps=" << epsilons[k] << "  A=(" << t.A1 << ", " << t.A2 << ", " << t.A3
           << ")  B=(" << t.B1 << ", " << t.B2 << ", " << t.B3
           << ")  total=" << t.total << "  direct=" << t.direct_diff << "\n";
    }
    os << "verdict: "
       << (verdict == MinimalityVerdict::not_minimizer ? "not a local minimizer"
                                                       : "inconclusive")
       << "\n";
    return os.str();
}

GlueResult glue_comparison(const Potential& pot, const Path& original, double lambda,
                           double T, int n_glue, const DeformationSpec& deform) {
    original.validate();
    if (!(lambda > 0 && lambda <= 1))
        throw std::domain_error("glue_comparison: lambda must lie in (0, 1]");
    if (n_glue < 2)
        throw std::domain_error("glue_comparison: n_glue too small");
    const double alpha = pot.alpha();
    const double p = 2 / (2 + alpha);

    // locate the collision node: minimum radius must sit at t ~ 0
    std::size_t imin = 0;
    double rmin = 1e300;
    for (std::size_t i = 0; i < original.nodes.size(); i++) {
        double r = norm(original.nodes[i]);
        if (r < rmin) {
            rmin = r;
            imin = i;
        }
    }
    double span = original.duration();
    bool flagged = std::count(original.collision_nodes.begin(),
                              original.collision_nodes.end(), imin) > 0;
    if (!(flagged || rmin < 1e-6))
        throw std::domain_error("glue_comparison: no collision inside the path");
    double t_coll = original.times[imin];
    if (std::abs(t_coll) > 1e-9 * span || imin == 0 || imin + 1 == original.nodes.size())
        throw std::domain_error(
            "glue_comparison: collision must be isolated at t = 0 in the interior");
    if (!(lambda * T < std::min(-original.t_minus(), original.t_plus())))
        throw std::domain_error("glue_comparison: window exceeds the path domain");

    // limit homothetic data from the collision-adjacent directions
    auto cs = pot.critical_structure();
    HomotheticSpec spec;
    spec.alpha = alpha;
    spec.s_plus = cs.nearest(normalized(original.nodes[imin + 1]));
    spec.s_minus = cs.nearest(normalized(original.nodes[imin - 1]));
    spec.beta_plus = pot.value(spec.s_plus);
    spec.beta_minus = pot.value(spec.s_minus);
    spec.kappa_plus = (2 + alpha) / 2 * std::sqrt(2 * spec.beta_plus);
    spec.kappa_minus = (2 + alpha) / 2 * std::sqrt(2 * spec.beta_minus);
    spec.horizon = T;

    // common evaluation grid on [-lambda T, lambda T]: original node times,
    // mapped feature times of the splice, and a cluster toward 0
    std::set<double> grid;
    double window = lambda * T;
    for (double t : original.times)
        if (std::abs(t) < window && t != t_coll) grid.insert(t);
    double q = (2 + alpha) / 2;
    double pe = std::pow(deform.epsilon, q);
    for (double s : {pe, pe + deform.epsilon, T - 1.0 / n_glue}) {
        if (s > 0 && s < T) {
            grid.insert(lambda * s);
            grid.insert(-lambda * s);
        }
    }
    const int K = 160;
    double gamma = (2 + alpha) / (2 - alpha);
    for (int k = 1; k <= K; k++) {
        double t = window * std::pow(double(k) / K, gamma);
        grid.insert(t);
        grid.insert(-t);
    }
    grid.insert(window);
    grid.insert(-window);

    // y(t) = x_lambda(t) + f_eps(t) sigma + psi_n(t) on [-T, T], where
    // x_lambda interpolates the blown-up original and psi_n ramps x_lambda
    // toward the homothetic arc over a 1/n_glue layer at the edges. The arc is
    // represented on the blown grid so that lambda = 1, eps = 0 is an exact
    // identity.
    Path blown = blow_up(original, lambda, alpha);
    Path hom;
    for (double tau : blown.times) {
        if (tau < -T || tau > T) continue;
        if (!hom.times.empty() && tau <= hom.times.back()) continue;
        hom.times.push_back(tau);
        hom.nodes.push_back(spec.at(tau));
    }
    if (hom.times.empty() || hom.times.front() > -T) {
        hom.times.insert(hom.times.begin(), -T);
        hom.nodes.insert(hom.nodes.begin(), spec.at(-T));
    }
    if (hom.times.back() < T) {
        hom.times.push_back(T);
        hom.nodes.push_back(spec.at(T));
    }
    auto y_of = [&](double tau) {
        Vec x = blown.at(tau);
        Vec xb = hom.at(tau);
        double ramp = 1.0;
        if (tau > T - 1.0 / n_glue)
            ramp = n_glue * (T - tau);
        else if (tau < -T + 1.0 / n_glue)
            ramp = n_glue * (T + tau);
        Vec y = x;
        axpy(ramp, xb - x, y);
        axpy(deform.f(tau, alpha), deform.sigma, y);
        return y;
    };

    Path comparison, restricted;
    double scale = std::pow(lambda, p);
    for (double t : grid) {
        comparison.times.push_back(t);
        comparison.nodes.push_back(scale * y_of(t / lambda));
        restricted.times.push_back(t);
        restricted.nodes.push_back(original.at(t));
    }
    GlueResult out;
    out.action_difference =
        action(pot, comparison).value - action(pot, restricted).value;

    // assembled full-domain comparison path: original outside the window
    Path full;
    for (std::size_t i = 0; i < original.times.size(); i++) {
        if (original.times[i] <= -window - 1e-15) {
            full.times.push_back(original.times[i]);
            full.nodes.push_back(original.nodes[i]);
        }
    }
    for (std::size_t i = 0; i < comparison.times.size(); i++) {
        full.times.push_back(comparison.times[i]);
        full.nodes.push_back(comparison.nodes[i]);
    }
    for (std::size_t i = 0; i < original.times.size(); i++) {
        if (original.times[i] >= window + 1e-15) {
            full.times.push_back(original.times[i]);
            full.nodes.push_back(original.nodes[i]);
        }
    }
    out.comparison = std::move(full);
    out.comparison.validate();
    return out;
}

}  // namespace akp
