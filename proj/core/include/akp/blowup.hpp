#pragma once

#include <string>
#include <vector>

#include "akp/paths.hpp"
#include "akp/potential.hpp"

namespace akp {

/// Zero-energy homothetic arc pair through the origin: x(t) = (k|t|)^(2/(2+a)) s
/// with s a critical direction and k fixed by the zero-energy relation.
struct HomotheticSpec {
    Vec s_plus, s_minus;
    double kappa_plus = 0, kappa_minus = 0;
    double beta_plus = 0, beta_minus = 0;  // U(s+-)
    double alpha = 1;
    double horizon = 1;                    // T; the arcs live on [-T, T]

    Vec at(double t) const;            // position
    Vec velocity(double t) const;      // derivative, t != 0
};

/// t -> lambda^(-2/(2+alpha)) path(lambda t) on the rescaled grid.
Path blow_up(const Path& path, double lambda, double alpha);

/// Builds the homothetic spec and a sampled path on a collision-refined grid
/// over [-T, T] (the origin node is flagged as a deliberate collision node).
std::pair<HomotheticSpec, Path> make_homothetic(const Potential& pot, const Vec& s_plus,
                                                const Vec& s_minus, double T,
                                                int samples_per_side = 240);

/// Plateau-and-ramp deformation profile and its direction.
struct DeformationSpec {
    Vec sigma;
    double epsilon = 1e-2;

    double f(double t, double alpha) const;
    double fdot(double t, double alpha) const;
};

struct DeformationTerms {
    double A1 = 0, A2 = 0, A3 = 0;
    double B1 = 0, B2 = 0, B3 = 0;
    double total = 0;
    double direct_diff = 0;  // independent quadrature of A(xbar^eps) - A(xbar)

    double sum() const { return A1 + A2 + A3 + B1 + B2 + B3; }
};

/// Closed forms for A1/B1, substituted integrals for A2/B2, adaptive ramp
/// quadrature for A3/B3, cross-checked against the direct path difference.
DeformationTerms deformation_terms(const Potential& pot, const HomotheticSpec& spec,
                                   const DeformationSpec& deform, double T);

enum class MinimalityVerdict { not_minimizer, inconclusive };

struct MinimalityReport {
    MinimalityVerdict verdict = MinimalityVerdict::inconclusive;
    Vec sigma;                      // candidate deformation direction, empty if none
    int sigma_case = 0;             // 1, 2 or 3 per the weight-group analysis
    std::vector<double> epsilons;
    std::vector<DeformationTerms> terms;  // per epsilon
    std::string text() const;
};

/// Case analysis over the weight groups of s+- selecting sigma, then checks
/// the action difference sign across the epsilon grid.
MinimalityReport test_minimality(const Potential& pot, const HomotheticSpec& spec,
                                 double T, const std::vector<double>& epsilon_grid);

struct GlueResult {
    Path comparison;
    double action_difference = 0;  // A(comparison) - A(original)
};

/// Glued local deformation of a path with an isolated interior collision at
/// t = 0: blow up by lambda, splice in the deformation with an N_glue ramp,
/// and map back to the original scale.
GlueResult glue_comparison(const Potential& pot, const Path& original, double lambda,
                           double T, int n_glue, const DeformationSpec& deform);

}  // namespace akp
