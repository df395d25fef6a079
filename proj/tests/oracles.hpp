#pragma once

// Independent reference implementations used only by tests. They must stay
// decoupled from the library code paths they check.

#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

/// Central finite difference.
inline double fdiff(const std::function<double(double)>& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Composite trapezoid on a uniform grid.
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i) acc += f(a + i * h);
    return acc * h;
}

/// Population standard deviation, two-pass in extended precision.
inline double stddev_brute(const std::vector<double>& xs) {
    long double mean = 0.0L;
    for (double x : xs) mean += x;
    mean /= static_cast<long double>(xs.size());
    long double ss = 0.0L;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return static_cast<double>(std::sqrt(ss / static_cast<long double>(xs.size())));
}

inline double avg_dev_brute(const std::vector<double>& xs) {
    long double mean = 0.0L;
    for (double x : xs) mean += x;
    mean /= static_cast<long double>(xs.size());
    long double ad = 0.0L;
    for (double x : xs) ad += std::abs(static_cast<long double>(x) - mean);
    return static_cast<double>(ad / static_cast<long double>(xs.size()));
}

/// Scalar root bracketing by bisection; f(lo) and f(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double tol = 1e-12) {
    double flo = f(lo);
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracles
