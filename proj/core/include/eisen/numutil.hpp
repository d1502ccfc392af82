#pragma once

#include <cmath>
#include <complex>

namespace eisen {

using cd = std::complex<double>;

// exp(w) - 1 without cancellation for small |w|
inline cd cexpm1(cd w) {
    if (std::abs(w) > 0.5) return std::exp(w) - 1.0;
    // Taylor: w (1 + w/2 (1 + w/3 (...)))
    cd sum = 0.0;
    for (int k = 20; k >= 1; --k) sum = w / double(k) * (1.0 + sum);
    return sum;
}

// principal-branch power with positive real base
inline cd real_pow(double base, cd expo) {
    return std::exp(expo * std::log(base));
}

inline bool is_near(cd a, cd b, double tol) { return std::abs(a - b) <= tol; }

// round half away from zero; used for discrete translations
inline double round_half(double x) { return std::floor(x + 0.5); }

} // namespace eisen
