#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace sbi {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2_sq(const Vec& a) { return dot(a, a); }

inline double norm2(const Vec& a) { return std::sqrt(norm2_sq(a)); }

inline double norm_inf(const Vec& a) {
    double s = 0.0;
    for (double c : a) s = std::max(s, std::abs(c));
    return s;
}

inline double dist2(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline bool all_finite(const Vec& a) {
    for (double c : a)
        if (!std::isfinite(c)) return false;
    return true;
}

}  // namespace sbi
