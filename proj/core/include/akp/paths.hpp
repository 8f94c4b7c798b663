#pragma once

#include <stdexcept>
#include <vector>

#include "akp/linalg.hpp"
#include "akp/potential.hpp"

namespace akp {

/// Discrete H1 path: piecewise-linear positions on a strictly increasing time grid.
struct Path {
    std::vector<double> times;
    std::vector<Vec> nodes;
    /// Deliberate collision nodes (indices of nodes allowed to sit at the origin).
    std::vector<std::size_t> collision_nodes;

    int dim() const { return nodes.empty() ? 0 : int(nodes.front().size()); }
    std::size_t segments() const { return times.empty() ? 0 : times.size() - 1; }
    double t_minus() const { return times.front(); }
    double t_plus() const { return times.back(); }
    double duration() const { return times.back() - times.front(); }

    /// Piecewise-linear interpolation (clamped outside the grid).
    Vec at(double t) const;
    /// Minimum distance to the origin over nodes and segment interiors.
    double min_radius() const;
    void validate() const;
};

struct ActionResult {
    double value = 0;
    bool finite = true;  // false iff a node sits exactly at the origin

    operator double() const { return value; }
};

/// Composite action quadrature: exact segment kinetic terms plus 4-point
/// Gauss-Legendre for the potential, with geometric subdivision of segments
/// passing within 1e-4 of the origin.
ActionResult action(const Potential& pot, const Path& path);

/// Action with the h dt term: action(path) + h * (T+ - T-).
ActionResult action_h(const Potential& pot, const Path& path, double h);

/// Kinetic part alone, sum of |dx|^2 / (2 dt).
double kinetic_action(const Path& path);

/// Same nodes on the grid scaled by delta > 0.
Path rescale_time(const Path& path, double delta);

Path reversed(const Path& path);

/// Joins two paths sharing the junction node/time.
Path concatenate(const Path& a, const Path& b);

struct LiftError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TopologicalClass {
    double theta_minus = 0;        // principal Arg of the first node
    double theta_plus = 0;         // theta_minus plus the summed increments
    double winding = 0;            // theta_plus - theta_minus
    std::vector<double> lift;      // per-node continuous lift
};

/// Continuous lift of Arg along a planar path. Throws LiftError if any
/// segment turns by pi or more (the caller must refine the grid).
TopologicalClass winding_lift(const Path& path);

/// Lifted endpoint angles match (theta_minus, theta_plus) within tol,
/// compared in R up to one global 2*pi rebase.
bool in_class(const Path& path, double theta_minus, double theta_plus, double tol);

}  // namespace akp
