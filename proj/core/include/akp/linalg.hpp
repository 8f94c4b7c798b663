#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace akp {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); i++)
        s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec operator+(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); i++) r[i] = a[i] + b[i];
    return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); i++) r[i] = a[i] - b[i];
    return r;
}

inline Vec operator*(double c, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); i++) r[i] = c * a[i];
    return r;
}

/// r += c*a
inline void axpy(double c, const Vec& a, Vec& r) {
    for (std::size_t i = 0; i < a.size(); i++) r[i] += c * a[i];
}

inline double dist(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); i++) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline Vec normalized(const Vec& a) {
    double n = norm(a);
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); i++) r[i] = a[i] / n;
    return r;
}

inline Vec unit(std::size_t d, std::size_t i, double sign = 1.0) {
    Vec r(d, 0.0);
    r[i] = sign;
    return r;
}

/// Closest distance from the origin to the segment [a, b].
inline double segment_min_radius(const Vec& a, const Vec& b) {
    Vec ab = b - a;
    double denom = dot(ab, ab);
    if (denom == 0)
        return norm(a);
    double u = -dot(a, ab) / denom;
    if (u <= 0) return norm(a);
    if (u >= 1) return norm(b);
    Vec p = a;
    axpy(u, ab, p);
    return norm(p);
}

}  // namespace akp
