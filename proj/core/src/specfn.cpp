#include "eisen/specfn.hpp"

#include "eisen/errors.hpp"
#include "eisen/quadrature.hpp"

#include <cmath>
#include <vector>

namespace eisen::specfn {

namespace {

constexpr double kLanczosG = 4.7421875; // 607/128
constexpr double kLanczosCoef[15] = {
    0.99999999999999709182,     57.156235665862923517,
    -59.597960355475491248,     14.136097974741747174,
    -0.49191381609762019978,    3.3994649984811888699e-5,
    4.6523628927048575665e-5,   -9.8374475304879564677e-5,
    1.5808870322491248884e-4,   -2.1026444172410488319e-4,
    2.1743961811521264320e-4,   -1.6431810653676389022e-4,
    8.4418223983852743293e-5,   -2.6190838401581408670e-5,
    3.6899182659531622704e-6,
};

cd gamma_lanczos(cd z) {
    // valid for Re z >= 1/2
    cd a = kLanczosCoef[0];
    for (int k = 1; k < 15; ++k) a += kLanczosCoef[k] / (z - 1.0 + double(k));
    cd t = z + kLanczosG - 0.5;
    return std::sqrt(2.0 * M_PI) * std::exp((z - 0.5) * std::log(t) - t) * a;
}

// Bernoulli numbers B_2, B_4, ..., B_30
constexpr double kBernoulli[15] = {
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
};

// Euler-Maclaurin tail; adequate for moderate |s| and used only where the
// eta quotient would divide by a near-zero of 1 - 2^{1-s}.
cd zeta_euler_maclaurin(cd s) {
    const int N = 40;
    cd sum = 0.0;
    for (int n = 1; n < N; ++n) sum += real_pow(double(n), -s);
    sum += real_pow(double(N), 1.0 - s) / (s - 1.0);
    sum += 0.5 * real_pow(double(N), -s);
    cd rising = s; // s (s+1) ... expanding term by term
    double fact = 2.0;
    for (int k = 1; k <= 15; ++k) {
        sum += kBernoulli[k - 1] / fact * rising * real_pow(double(N), -s - (2.0 * k - 1.0));
        rising *= (s + double(2 * k - 1)) * (s + double(2 * k));
        fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    return sum;
}

cd zeta_eta(cd s) {
    // P. Borwein's Chebyshev-accelerated alternating series
    const int n = 64;
    std::vector<double> d(n + 1);
    double term = 1.0; // j = 0 summand of the d_k accumulation
    // d_k = n * sum_{j=0}^{k} (n+j-1)! 4^j / ((n-j)! (2j)!)
    double acc = term;
    d[0] = n * acc;
    for (int j = 1; j <= n; ++j) {
        term *= 4.0 * (n + j - 1) * (n - j + 1) / ((2.0 * j - 1.0) * (2.0 * j));
        acc += term;
        d[j] = n * acc;
    }
    cd eta = 0.0;
    double sign = 1.0;
    for (int k = 0; k < n; ++k) {
        eta += sign * (d[k] - d[n]) * real_pow(double(k + 1), -s);
        sign = -sign;
    }
    eta /= -d[n];
    cd denom = -cexpm1((1.0 - s) * std::log(2.0)); // 1 - 2^{1-s}, cancellation-free
    if (std::abs(denom) < 0.05) return zeta_euler_maclaurin(s);
    return eta / denom;
}

} // namespace

cd gamma(cd s) {
    if (std::abs(s.imag()) < 1e-13) {
        double r = std::round(s.real());
        if (r <= 0.0 && std::abs(s.real() - r) < 1e-13)
            throw DomainError("gamma: pole at nonpositive integer");
    }
    if (s.real() >= 0.5) return gamma_lanczos(s);
    // Gamma(s) Gamma(1-s) = pi / sin(pi s)
    return M_PI / (std::sin(M_PI * s) * gamma_lanczos(1.0 - s));
}

cd zeta(cd s) {
    if (std::abs(s - 1.0) < 1e-13) throw DomainError("zeta: pole at s = 1");
    if (s.real() >= 0.5) return zeta_eta(s);
    // the reflection factor sin(pi s / 2) zeta(1 - s) is 0 * pole at s = 0;
    // a direct evaluation is stable on the whole small disk
    if (std::abs(s) < 0.05) return zeta_euler_maclaurin(s);
    // zeta(s) = 2^s pi^{s-1} sin(pi s / 2) Gamma(1-s) zeta(1-s)
    cd w = 1.0 - s;
    return std::exp(s * std::log(2.0)) * std::exp((s - 1.0) * std::log(M_PI)) *
           std::sin(0.5 * M_PI * s) * gamma(w) * zeta_eta(w);
}

cd m_closed(cd s) {
    if (std::abs(s - 1.0) < 1e-13) throw DomainError("m_closed: pole at s = 1");
    if (std::abs(s - 0.5) < 1e-13)
        throw DomainError("m_closed: evaluate off s = 1/2 (removable singularity)");
    return std::sqrt(M_PI) * gamma(s - 0.5) * zeta(2.0 * s - 1.0) /
           (gamma(s) * zeta(2.0 * s));
}

double RadialKernel::profile(double u) const {
    double q = u / radius;
    if (!(q < 1.0) || q <= -1.0) return 0.0;
    return std::exp(-sharpness / (1.0 - q * q));
}

double RadialKernel::hyperbolic_mass() const {
    QuadRule rule = gauss_legendre(64, 0.0, radius);
    double m = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i)
        m += rule.weights[i] * profile(rule.nodes[i]) * std::sinh(rule.nodes[i]);
    return 2.0 * M_PI * m;
}

namespace {

cd selberg_once(const RadialKernel& kernel, cd s, cd z0, int nu, int ntheta) {
    const double x0 = z0.real(), y0 = z0.imag();
    QuadRule rad = gauss_legendre(nu, 0.0, kernel.radius);
    cd total = 0.0;
    for (int iu = 0; iu < nu; ++iu) {
        const double u = rad.nodes[iu];
        const double eu = std::exp(u);
        // average of (Im w / y0)^s over the circle of hyperbolic radius u.
        // Points: w = y0 * k_t(i e^u) + x0 with k_t a rotation fixing i;
        // t runs over half a turn since -I acts trivially.
        cd ang = 0.0;
        for (int it = 0; it < ntheta; ++it) {
            const double t = M_PI * it / ntheta;
            const double c = std::cos(t), sn = std::sin(t);
            cd p = (c * cd(0.0, eu) + sn) / (-sn * cd(0.0, eu) + c);
            cd w = y0 * p + x0;
            ang += real_pow(w.imag() / y0, s);
        }
        ang /= double(ntheta);
        total += rad.weights[iu] * kernel.profile(u) * std::sinh(u) * ang;
    }
    return 2.0 * M_PI * total;
}

} // namespace

cd selberg_transform(const RadialKernel& kernel, cd s, cd z0, double tol) {
    if (!(z0.imag() > 0.0)) throw DomainError("selberg_transform: base point must have Im > 0");
    int nu = 24, ntheta = 32;
    cd prev = selberg_once(kernel, s, z0, nu, ntheta);
    for (int round = 0; round < 6; ++round) {
        nu *= 2;
        ntheta *= 2;
        cd cur = selberg_once(kernel, s, z0, nu, ntheta);
        if (std::abs(cur - prev) <= tol * (1.0 + std::abs(cur))) return cur;
        prev = cur;
    }
    throw ConvergenceError("selberg_transform: quadrature did not stabilize");
}

} // namespace eisen::specfn
