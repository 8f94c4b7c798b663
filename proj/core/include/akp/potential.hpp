#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "akp/linalg.hpp"

namespace akp {

/// Periodic natural cubic spline on [0, 2*pi), for tabulated sphere potentials.
class PeriodicSpline {
public:
    PeriodicSpline() = default;
    /// Nodes must be strictly increasing in [0, 2*pi); the last interval wraps to theta[0]+2*pi.
    PeriodicSpline(std::vector<double> theta, std::vector<double> values);
    double value(double th) const;
    double deriv(double th) const;
    double deriv2(double th) const;

private:
    std::vector<double> th_, val_, m_;  // m_ = second derivatives at nodes
    double wrap(double th, std::size_t& seg) const;
};

/// Planar (d = 2) direction profile of a general potential: Utilde(theta) and two derivatives.
struct SphereProfile {
    std::function<double(double)> value;
    std::function<double(double)> deriv;
    std::function<double(double)> deriv2;
};

struct CriticalComponent {
    std::vector<int> indices;  // coordinate group with a common weight
    double weight = 0;
    bool isolated = false;     // singleton group: the component is the pair +-e_i
    double u_value = 0;        // U restricted to the component (constant there)
};

struct SphereMinimum {
    double theta = 0;      // in [0, 2*pi)
    double u_value = 0;
    double u_dd = 0;       // Utilde''(theta)
    bool nondegenerate = false;
};

struct CriticalStructure {
    std::vector<CriticalComponent> components;  // ordered by increasing weight
    std::vector<Vec> isolated_points;           // +-e_i for singleton groups
    std::vector<SphereMinimum> min_set;         // d = 2 only: minimizers of Utilde
    std::vector<double> critical_angles;        // d = 2 only: all critical angles in [0, 2*pi)
    bool degenerate_constant = false;           // U constant on the sphere

    /// Nearest point of Cr(U) to a unit direction s, and its distance.
    Vec nearest(const Vec& s, double* distance = nullptr) const;
};

enum class Verdict { holds, fails, not_applicable };

std::string to_string(Verdict v);

struct ConditionReport {
    Verdict u0 = Verdict::not_applicable;
    Verdict u1 = Verdict::not_applicable;
    Verdict u2 = Verdict::not_applicable;
    Verdict u3 = Verdict::not_applicable;
    Verdict u4 = Verdict::not_applicable;
    Verdict spiral_equiv = Verdict::not_applicable;
    double u4_ratio = 0;       // m2/m1 (d = 2 Gutzwiller)
    double u4_threshold = 0;   // 1 + (2-alpha)^2 / (8 alpha)
    std::vector<SphereMinimum> u3_minima;
    std::string text() const;
};

/// Alpha-homogeneous potential U(x) = |x|^-alpha * U(x/|x|), alpha in (0, 2).
///
/// Two forms: the Gutzwiller diagonal form U(x) = <x, Mx>^(-alpha/2) in any
/// dimension, or a general planar form built from a C^2 direction profile.
class Potential {
public:
    static Potential gutzwiller(double alpha, std::vector<double> weights);
    static Potential planar(double alpha, SphereProfile profile);
    /// Tabulated planar form: cubic-spline interpolation of (theta, Utilde) samples.
    static Potential planar_table(double alpha, std::vector<double> theta,
                                  std::vector<double> values);

    int dim() const { return d_; }
    double alpha() const { return alpha_; }
    bool is_gutzwiller() const { return gutzwiller_; }
    const std::vector<double>& weights() const;

    double value(const Vec& x) const;
    Vec grad(const Vec& x) const;
    /// Hessian of U, row-major d x d.
    std::vector<double> hess(const Vec& x) const;
    /// Gradient of U restricted to the unit sphere at s; orthogonal to s.
    Vec sphere_grad(const Vec& s) const;
    double sphere_value(const Vec& s) const;

    // d = 2 direction profile.
    double theta_value(double th) const;
    double theta_deriv(double th) const;
    double theta_deriv2(double th) const;

    double u_max() const { return u_max_; }
    double u_min() const { return u_min_; }

    /// M-weighted inner product (Gutzwiller form only).
    double m_dot(const Vec& a, const Vec& b) const;

    CriticalStructure critical_structure() const;
    ConditionReport check_conditions() const;

private:
    Potential() = default;
    void validate_and_finish();

    int d_ = 2;
    double alpha_ = 1;
    bool gutzwiller_ = true;
    std::vector<double> weights_;
    std::shared_ptr<SphereProfile> profile_;  // general planar form
    double u_max_ = 0, u_min_ = 0;
};

/// |sphere_grad| below this classifies a direction as critical.
inline constexpr double kCriticalTol = 1e-9;

}  // namespace akp
