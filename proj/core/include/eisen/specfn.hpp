#pragma once

#include "eisen/numutil.hpp"

namespace eisen::specfn {

/* Complex gamma function.
 *
 * Lanczos rational approximation (g = 607/128, 15 coefficients) on
 * Re s >= 1/2, reflection formula elsewhere.  Relative accuracy is a few
 * ulps times 10 on the band |Re s|, |Im s| <= 30.  Throws DomainError at
 * the poles s = 0, -1, -2, ...
 */
cd gamma(cd s);

/* Riemann zeta.
 *
 * Alternating (eta) series with Chebyshev acceleration on Re s >= 1/2,
 * functional-equation reflection on Re s < 1/2.  Near the zeros of
 * 1 - 2^{1-s} (where the eta quotient loses digits) an Euler-Maclaurin
 * fallback takes over.  Throws DomainError at the pole s = 1.
 */
cd zeta(cd s);

/* Constant-term ratio
 *
 *   m(s) = sqrt(pi) Gamma(s - 1/2) zeta(2s - 1) / (Gamma(s) zeta(2s)).
 *
 * Meromorphic; simple pole at s = 1 with residue 3/pi, m(s) m(1-s) = 1.
 * The apparent singularity at s = 1/2 (gamma pole against zeta pole) is
 * removable and evaluates cleanly for s near but not equal to 1/2.
 * Throws DomainError right on a pole.
 */
cd m_closed(cd s);

// Smooth compactly supported radial profile exp(-b / (1 - (u/r)^2)) on [0, r).
// The sharpness b widens the bump's boundary layers, which is what limits
// equispaced quadrature of C-infinity bumps; raising it buys orders of
// magnitude in the trapezoid error of downstream discretizations at fixed
// step, at the price of concentrating the kernel mass.
struct RadialKernel {
    double radius = 0.55;
    double sharpness = 1.0;

    double profile(double u) const;

    // 2 pi int_0^r profile(u) sinh(u) du  (the measure of the kernel)
    double hyperbolic_mass() const;
};

/* Spherical transform of a radial kernel:
 *
 *   h(s) = int_H profile(d(z0, w)) (Im w / Im z0)^s dmu(w),
 *
 * computed in geodesic polar coordinates around z0: Gauss-Legendre in the
 * radial variable, periodic trapezoid in the angle, doubled until the value
 * is stable to tol.  Entire in s, symmetric under s -> 1-s, independent of
 * the base point z0.
 */
cd selberg_transform(const RadialKernel& kernel, cd s, cd z0 = cd(0.0, 1.0),
                     double tol = 1e-10);

} // namespace eisen::specfn
