#include "eisen/sl2.hpp"

#include "eisen/errors.hpp"
#include "eisen/numutil.hpp"
#include "eisen/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eisen::sl2 {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

HPointQ exact(HPoint z) {
    if (!(z.y > 0.0) || !std::isfinite(z.x) || !std::isfinite(z.y))
        throw DomainError("sl2: point must have finite coordinates and y > 0");
    return {mpq_class(z.x), mpq_class(z.y)};
}

HPoint rounded(const HPointQ& z) { return {z.x.get_d(), z.y.get_d()}; }

Mat2Z mat_mul(const Mat2Z& g, const Mat2Z& h) {
    return {g.a * h.a + g.b * h.c, g.a * h.b + g.b * h.d,
            g.c * h.a + g.d * h.c, g.c * h.b + g.d * h.d};
}

HPointQ apply(const Mat2Z& g, const HPointQ& z) {
    // z' = (az+b)/(cz+d); with det = 1 the imaginary part is y / |cz+d|^2
    mpq_class cxd = g.c * z.x + g.d;
    mpq_class den = cxd * cxd + g.c * g.c * z.y * z.y;
    if (den == 0) throw DomainError("sl2::apply: degenerate matrix");
    mpq_class xnew = ((g.a * z.x + g.b) * cxd + g.a * g.c * z.y * z.y) / den;
    return {xnew, z.y / den};
}

HPoint apply(const Mat2Z& g, HPoint z) { return rounded(apply(g, exact(z))); }

namespace {

/*
 * T/S iteration in exact arithmetic.  Each inversion strictly increases the
 * (rational) height, and heights in an orbit with y bounded below admit only
 * finitely many values above any threshold, so the loop terminates.  The
 * accumulated matrix is tracked in arbitrary precision and exported by the
 * public wrappers.
 */
// Left multiplication of the tracked word by S = [[0,-1],[1,0]].
void premul_s(mpz_class m[4]) {
    mpz_class na = -m[2], nb = -m[3], nc = m[0], nd = m[1];
    m[0] = na; m[1] = nb; m[2] = nc; m[3] = nd;
}

void reduce_core(HPointQ& z, mpz_class m[4]) {
    m[0] = 1; m[1] = 0; m[2] = 0; m[3] = 1; // [[a,b],[c,d]]
    const mpq_class one(1);
    for (long iter = 0; iter < 1000000; ++iter) {
        // shift x into [-1/2, 1/2): n = floor(x + 1/2), then x -= n
        mpq_class t = z.x + mpq_class(1, 2);
        mpz_class n;
        mpz_fdiv_q(n.get_mpz_t(), t.get_num_mpz_t(), t.get_den_mpz_t());
        if (n != 0) {
            z.x -= mpq_class(n);
            m[0] -= n * m[2]; // left multiplication by T^{-n}
            m[1] -= n * m[3];
        }
        mpq_class r2 = z.x * z.x + z.y * z.y;
        if (r2 < one) {
            // inside the unit circle: z -> -1/z, which raises y by 1/r2 > 1
            z.x = -z.x / r2;
            z.y = z.y / r2;
            premul_s(m);
            continue;
        }
        // boundary ties: prefer x >= 0 (left edge maps to right edge, and on
        // the unit arc the S-flip sends x to -x)
        if (z.x == mpq_class(-1, 2)) {
            z.x = mpq_class(1, 2);
            m[0] += m[2];
            m[1] += m[3];
        }
        if (r2 == one && z.x < 0) {
            z.x = -z.x;
            premul_s(m);
        }
        return;
    }
    throw DomainError("sl2::reduce: iteration guard tripped");
}

} // namespace

std::pair<HPointQ, Mat2Z> reduce_to_fundamental(const HPointQ& z) {
    if (z.y <= 0) throw DomainError("sl2::reduce: y must be positive");
    HPointQ w = z;
    mpz_class m[4];
    reduce_core(w, m);
    Mat2Z g;
    if (!m[0].fits_slong_p() || !m[1].fits_slong_p() || !m[2].fits_slong_p() ||
        !m[3].fits_slong_p())
        throw DomainError("sl2::reduce: word length exceeds the 64-bit matrix range");
    g.a = m[0].get_si(); g.b = m[1].get_si();
    g.c = m[2].get_si(); g.d = m[3].get_si();
    return {w, g};
}

std::pair<HPoint, Mat2Z> reduce_to_fundamental(HPoint z) {
    auto [w, g] = reduce_to_fundamental(exact(z));
    return {rounded(w), g};
}

namespace {

/*
 * Truncation bound for the coprime sum cut at max(|m|,|n|) <= M, for a point
 * with imaginary part y in the fundamental domain.  Dropped terms are
 * y^s |mz+n|^{-2s} with |x| <= 1/2.  Split by row index m:
 *
 *   rows 1..M, columns |n| > M:   |mx+n| >= |n| - m/2, so the row tail is
 *       2 sum_{n>M} (n - m/2)^{-2s} <= 2 (M - m/2)^{1-2s} / (2s-1);
 *   rows m > M, all n together:   the lattice sum over n is at most the
 *       largest term plus the integral over the whole line,
 *       (my)^{-2s} + B(1/2, s-1/2) (my)^{1-2s},
 *       and summing over m > M uses sum m^{-p} <= M^{1-p}/(p-1).
 *
 * Everything is monotone and elementary, so the bound is safe for every
 * truncation level M >= 1 and every real s > 1 (applied at s = Re s).
 */
double series_tail(double y, double sigma, long M) {
    double two_s = 2.0 * sigma;
    double row_tail = 0.0;
    for (long m = 1; m <= M; ++m)
        row_tail += std::pow(static_cast<double>(M) - 0.5 * m, 1.0 - two_s);
    double tail_a = 2.0 * std::pow(y, sigma) * row_tail / (two_s - 1.0);

    double beta_half = std::sqrt(M_PI) * std::tgamma(sigma - 0.5) / std::tgamma(sigma);
    double sum_peak = std::pow(M, 1.0 - two_s) / (two_s - 1.0);
    double sum_line = std::pow(M, 2.0 - two_s) / (two_s - 2.0);
    double tail_b = std::pow(y, sigma) * (std::pow(y, -two_s) * sum_peak +
                                          beta_half * std::pow(y, 1.0 - two_s) * sum_line);
    return tail_a + tail_b;
}

// Partial sum over coprime (m, n) with m >= 1, max(m, |n|) <= M, plus the
// m = 0 representative, evaluated at an already reduced point.
cd series_partial(double x, double y, cd s, long M) {
    double sigma = s.real();
    bool real_s = (s.imag() == 0.0);
    double y2 = y * y;
    if (real_s) {
        double acc = 0.0;
        for (long m = 1; m <= M; ++m) {
            double mx = m * x, m2y2 = m * m * y2;
            for (long n = -M; n <= M; ++n) {
                if (std::gcd(m, std::labs(n)) != 1) continue;
                double q = (mx + n) * (mx + n) + m2y2;
                acc += std::pow(q, -sigma);
            }
        }
        return std::pow(y, sigma) * (1.0 + acc);
    }
    cd acc = 0.0;
    for (long m = 1; m <= M; ++m) {
        double mx = m * x, m2y2 = m * m * y2;
        for (long n = -M; n <= M; ++n) {
            if (std::gcd(m, std::labs(n)) != 1) continue;
            double q = (mx + n) * (mx + n) + m2y2;
            acc += std::exp(-s * std::log(q));
        }
    }
    return real_pow(y, s) * (1.0 + acc);
}

} // namespace

SeriesValue eisenstein_series(const HPointQ& z, cd s, int M) {
    if (!(s.real() > 1.0))
        throw DomainError("eisenstein_series: absolute convergence needs Re s > 1");
    if (M < 1) throw DomainError("eisenstein_series: truncation level must be positive");
    HPointQ w = z;
    mpz_class m[4];
    reduce_core(w, m); // exact reduction fixes the representative once and for all
    double x = w.x.get_d(), y = w.y.get_d();
    return {series_partial(x, y, s, M), series_tail(y, s.real(), M)};
}

SeriesValue eisenstein_series(HPoint z, cd s, int M) {
    return eisenstein_series(exact(z), s, M);
}

SeriesValue eisenstein_series_auto(HPoint z, cd s, double tol, int M_cap) {
    if (!(tol > 0)) throw DomainError("eisenstein_series_auto: tolerance must be positive");
    auto [w, g] = reduce_to_fundamental(exact(z));
    (void)g;
    double y = w.y.get_d();
    long M = 32;
    while (series_tail(y, s.real(), M) > tol) {
        if (M >= M_cap)
            throw ConvergenceError("eisenstein_series_auto: truncation cap reached before "
                                   "the tail bound met the tolerance");
        M = std::min<long>(2 * M, M_cap);
    }
    return eisenstein_series(w, s, static_cast<int>(M));
}

cd eisenstein_constant_term(double y, cd s, double tol, int nq) {
    if (!(y > 0)) throw DomainError("eisenstein_constant_term: y must be positive");
    if (nq < 2) throw DomainError("eisenstein_constant_term: need at least two nodes");
    // The x-average of a smooth periodic function: the trapezoid rule on nq
    // equispaced nodes is spectrally accurate, so the series truncation
    // dominates the error budget.
    cd acc = 0.0;
    for (int j = 0; j < nq; ++j) {
        double x = static_cast<double>(j) / nq - 0.5;
        acc += eisenstein_series_auto({x, y}, s, tol / 3.0).value;
    }
    return acc / static_cast<double>(nq);
}

/* ---------------------------------------------------------------------- */
/* grids                                                                   */
/* ---------------------------------------------------------------------- */

StripGrid::StripGrid(double c_, double y_max_, int nx_, int ny_, double N_)
    : c(c_), y_max(y_max_), nx(nx_), ny(ny_), N(N_) {
    if (!(c > 0)) throw ConfigError("StripGrid: lower cutoff must be positive");
    if (!(y_max > c)) throw ConfigError("StripGrid: y_max must exceed the lower cutoff");
    if (nx < 2) throw ConfigError("StripGrid: need at least two x nodes");
    if (ny < 3 || ny % 2 == 0)
        throw ConfigError("StripGrid: level count must be odd and at least 3 "
                          "(composite Simpson in log y)");
    if (N < 0) throw ConfigError("StripGrid: weight exponent must be nonnegative");

    xs.resize(nx);
    for (int i = 0; i < nx; ++i) xs[i] = static_cast<double>(i) / nx - 0.5;

    double t0 = std::log(c), t1 = std::log(y_max);
    double dt = (t1 - t0) / (ny - 1);
    ts.resize(ny);
    ys.resize(ny);
    for (int j = 0; j < ny; ++j) {
        ts[j] = t0 + j * dt;
        ys[j] = std::exp(ts[j]);
    }

    // invariant measure dx dy / y^2 = dx dt / y in (x, t = log y) coordinates
    std::vector<double> st = simpson_weights(ny, dt);
    level_w.resize(ny);
    w_mu.resize(size());
    w_N.resize(size());
    for (int j = 0; j < ny; ++j) {
        level_w(j) = st[j] / ys[j];
        double wn = level_w(j) / nx;
        double wN = wn * std::pow(ys[j], -2.0 * N);
        for (int i = 0; i < nx; ++i) {
            w_mu(node(i, j)) = wn;
            w_N(node(i, j)) = wN;
        }
    }
}

StripGrid StripGrid::level_window(int j0, int n) const {
    if (j0 < 0 || n < 3 || j0 + n > ny)
        throw ConfigError("StripGrid::level_window: window out of range");
    if (n % 2 == 0)
        throw ConfigError("StripGrid::level_window: window must keep an odd level count");
    StripGrid g(*this);
    g.c = ys[j0];
    g.y_max = ys[j0 + n - 1];
    g.ny = n;
    // share the parent t-lattice bit for bit so restriction is plain selection
    g.ts.assign(ts.begin() + j0, ts.begin() + j0 + n);
    g.ys.assign(ys.begin() + j0, ys.begin() + j0 + n);
    double dt = ts[1] - ts[0];
    std::vector<double> st = simpson_weights(n, dt);
    g.level_w.resize(n);
    g.w_mu.resize(g.size());
    g.w_N.resize(g.size());
    for (int j = 0; j < n; ++j) {
        g.level_w(j) = st[j] / g.ys[j];
        double wn = g.level_w(j) / nx;
        double wN = wn * std::pow(g.ys[j], -2.0 * N);
        for (int i = 0; i < nx; ++i) {
            g.w_mu(g.node(i, j)) = wn;
            g.w_N(g.node(i, j)) = wN;
        }
    }
    return g;
}

StripGrid StripGrid::clipped(double y_lo, double y_hi, int* j0_out) const {
    int j0 = 0;
    while (j0 < ny && ys[j0] < y_lo * (1.0 - 1e-12)) ++j0;
    int j1 = ny - 1;
    while (j1 >= 0 && ys[j1] > y_hi * (1.0 + 1e-12)) --j1;
    int n = j1 - j0 + 1;
    if (n > 0 && n % 2 == 0) {
        ++j0; // drop the bottom level to keep Simpson parity
        --n;
    }
    if (n < 3)
        throw ConfigError("StripGrid::clipped: window holds fewer than three levels");
    if (j0_out) *j0_out = j0;
    return level_window(j0, n);
}

VectorXcd series_pullback(const StripGrid& grid, cd s, double tol) {
    if (!(s.real() > 1.0))
        throw DomainError("series_pullback: absolute convergence needs Re s > 1");
    // One truncation level for the whole grid: the tail bound depends on the
    // node only through the reduced height, so its maximum over the grid is a
    // maximum over finitely many level heights clamped into the fundamental
    // domain (reduced points never sit below sqrt(3)/2).
    double sigma = s.real();
    double y_floor = std::sqrt(3.0) / 2.0;
    long M = 64;
    auto worst = [&](long Mc) {
        double w = series_tail(y_floor, sigma, Mc);
        for (int j = 0; j < grid.ny; ++j)
            if (grid.ys[j] > y_floor) w = std::max(w, series_tail(grid.ys[j], sigma, Mc));
        return w;
    };
    while (worst(M) > tol) {
        if (M >= (1L << 22))
            throw ConvergenceError("series_pullback: truncation cap reached; "
                                   "loosen the tolerance or move s away from Re s = 1");
        M *= 2;
    }
    VectorXcd out(grid.size());
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            HPointQ w = exact(grid.point(i, j));
            mpz_class g[4];
            reduce_core(w, g);
            out(grid.node(i, j)) = series_partial(w.x.get_d(), w.y.get_d(), s, M);
        }
    return out;
}

/* ---------------------------------------------------------------------- */
/* discretized operators                                                   */
/* ---------------------------------------------------------------------- */

DiscretizedOp build_conv_op(const specfn::RadialKernel& kernel, const StripGrid& src,
                            const StripGrid& dst) {
    double r = kernel.radius;
    if (dst.c < src.c * std::exp(r) * (1.0 - 1e-12))
        throw SupportError("build_conv_op: kernel ball around the output floor dips below "
                           "the sampled strip (need dst.c >= src.c * e^r)");
    if (dst.y_max > src.y_max * std::exp(-r) * (1.0 + 1e-12))
        throw SupportError("build_conv_op: kernel ball around the output ceiling leaves "
                           "the sampled strip (need dst.y_max <= src.y_max * e^{-r})");

    DiscretizedOp op{MatrixXd::Zero(dst.size(), src.size()), src, dst};
    double cosh_r = std::cosh(r);

    // point-pair kernel sum over the unit x-period:
    //   sum_n k(d(z + n, w)),  cosh d = 1 + ((dx+n)^2 + (yi-yj)^2) / (2 yi yj)
    auto pair_sum = [&](double dx, double yi, double yj) {
        double g = 2.0 * yi * yj;
        double dy2 = (yi - yj) * (yi - yj);
        double reach2 = g * (cosh_r - 1.0) - dy2;
        if (reach2 <= 0) return 0.0;
        double reach = std::sqrt(reach2);
        double acc = 0.0;
        long n_lo = static_cast<long>(std::ceil(-dx - reach));
        long n_hi = static_cast<long>(std::floor(-dx + reach));
        for (long n = n_lo; n <= n_hi; ++n) {
            double u = dx + n;
            double ch = 1.0 + (u * u + dy2) / g;
            if (ch >= cosh_r) continue;
            acc += kernel.profile(std::acosh(ch));
        }
        return acc;
    };

    bool aligned = (src.nx == dst.nx);
    for (int jd = 0; jd < dst.ny; ++jd) {
        double yi = dst.ys[jd];
        for (int js = 0; js < src.ny; ++js) {
            double yj = src.ys[js];
            if (std::abs(std::log(yi / yj)) >= r) continue;
            double w = src.w_mu(src.node(0, js)); // x-independent weight
            if (aligned) {
                // entries depend on ix - jx mod nx only
                int nx = src.nx;
                std::vector<double> ring(nx);
                for (int d = 0; d < nx; ++d)
                    ring[d] = w * pair_sum(static_cast<double>(d) / nx, yi, yj);
                for (int ix = 0; ix < nx; ++ix)
                    for (int jx = 0; jx < nx; ++jx)
                        op.mat(dst.node(ix, jd), src.node(jx, js)) =
                            ring[((ix - jx) % nx + nx) % nx];
            } else {
                for (int ix = 0; ix < dst.nx; ++ix)
                    for (int jx = 0; jx < src.nx; ++jx)
                        op.mat(dst.node(ix, jd), src.node(jx, js)) =
                            w * pair_sum(dst.xs[ix] - src.xs[jx], yi, yj);
            }
        }
    }
    return op;
}

VectorXcd constant_term(const StripGrid& grid, const VectorXcd& f) {
    if (f.size() != grid.size())
        throw DomainError("constant_term: sample vector does not match the grid");
    VectorXcd out(grid.ny);
    for (int j = 0; j < grid.ny; ++j) {
        cd acc = 0.0;
        for (int i = 0; i < grid.nx; ++i) acc += f(grid.node(i, j));
        out(j) = acc / static_cast<double>(grid.nx);
    }
    return out;
}

std::pair<MatrixXd, MatrixXd> cusp_projection_ops(const StripGrid& grid) {
    long n = grid.size();
    if (n > 4000)
        throw ConfigError("cusp_projection_ops: dense projector requested for a grid "
                          "with more than 4000 nodes; use constant_term instead");
    MatrixXd C = MatrixXd::Zero(n, n);
    double w = 1.0 / grid.nx;
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            for (int k = 0; k < grid.nx; ++k) C(grid.node(i, j), grid.node(k, j)) = w;
    MatrixXd P = MatrixXd::Identity(n, n) - C;
    return {C, P};
}

/* ---------------------------------------------------------------------- */
/* surface sampling                                                        */
/* ---------------------------------------------------------------------- */

namespace {

struct InterpEntry {
    int pos;  // lattice position on the surface window
    double w; // bilinear weight
};

/*
 * Value-at-reduce row for one strip node: reduce exactly, then interpolate
 * bilinearly in (x, t) on the surface lattice.  Reductions that land on a
 * lattice point (every node already in the fundamental domain does) are
 * snapped, so those rows come out as unit rows rather than 1 - 1e-16
 * smears.  The x direction is periodic; the t direction is clamped only at
 * the exact top edge.
 */
void interp_row(HPoint node, int nx, const std::vector<double>& ts_win,
                std::vector<InterpEntry>& out) {
    out.clear();
    auto [zr, g] = reduce_to_fundamental(exact(node));
    (void)g;
    double xr = zr.x.get_d();
    double tr = std::log(zr.y.get_d());

    double u = (xr + 0.5) * nx;
    if (std::abs(u - std::round(u)) < 1e-9 * nx) u = std::round(u);
    int iu = static_cast<int>(std::floor(u));
    double fu = u - iu;
    int ix0 = ((iu % nx) + nx) % nx;
    int ix1 = (ix0 + 1) % nx;

    int nt = static_cast<int>(ts_win.size());
    double dt = ts_win[1] - ts_win[0];
    double v = (tr - ts_win[0]) / dt;
    if (std::abs(v - std::round(v)) < 1e-9) v = std::round(v);
    if (v < 0.0 || v > nt - 1 + 1e-9)
        throw SupportError("build_surface_maps: a reduced node leaves the surface "
                           "window; raise y_max or the lower cutoff");
    int it = static_cast<int>(std::floor(v));
    if (it >= nt - 1) it = nt - 2; // exact top edge: use the last cell
    double fv = v - it;

    auto push = [&](int ix, int jt, double w) {
        if (w != 0.0) out.push_back({jt * nx + ix, w});
    };
    push(ix0, it, (1.0 - fu) * (1.0 - fv));
    push(ix1, it, fu * (1.0 - fv));
    push(ix0, it + 1, (1.0 - fu) * fv);
    push(ix1, it + 1, fu * fv);
}

} // namespace

SurfaceMaps build_surface_maps(const StripGrid& grid_c, const StripGrid& grid_c0) {
    double arc_floor = std::sqrt(3.0) / 2.0;
    if (grid_c.c > arc_floor)
        throw ConfigError("build_surface_maps: strip cutoff sits above the "
                          "fundamental-domain floor");
    // t-window of the sampling lattice: from the last level at or below
    // sqrt(3)/2 (reduced points never go lower) to the top of the strip
    int j0 = 0;
    for (int j = 0; j < grid_c.ny; ++j)
        if (grid_c.ys[j] <= arc_floor * (1.0 + 1e-12)) j0 = j;
    int nt = grid_c.ny - j0;
    if (nt < 2)
        throw ConfigError("build_surface_maps: surface window needs at least two levels");

    SurfaceGrid surf;
    surf.nx = grid_c.nx;
    surf.nt = nt;
    surf.j0 = j0;
    surf.xs = grid_c.xs;
    surf.ts.assign(grid_c.ts.begin() + j0, grid_c.ts.end());
    surf.ys.assign(grid_c.ys.begin() + j0, grid_c.ys.end());

    int npos = surf.nx * nt;
    // raw interpolation rows against the unpruned lattice
    std::vector<std::vector<InterpEntry>> rows_src(grid_c.size()), rows_c0(grid_c0.size());
    std::vector<double> touch_src(npos, 0.0), touch_c0(npos, 0.0);
    std::vector<InterpEntry> tmp;
    for (int j = 0; j < grid_c.ny; ++j)
        for (int i = 0; i < grid_c.nx; ++i) {
            interp_row(grid_c.point(i, j), surf.nx, surf.ts, tmp);
            for (auto& e : tmp) touch_src[e.pos] += std::abs(e.w);
            rows_src[grid_c.node(i, j)] = tmp;
        }
    for (int j = 0; j < grid_c0.ny; ++j)
        for (int i = 0; i < grid_c0.nx; ++i) {
            interp_row(grid_c0.point(i, j), surf.nx, surf.ts, tmp);
            for (auto& e : tmp) touch_c0[e.pos] += std::abs(e.w);
            rows_c0[grid_c0.node(i, j)] = tmp;
        }

    // prune lattice positions nothing ever touches, and insist that every
    // position the sampling grid needs is also seen from the projection base
    surf.col_of.assign(npos, -1);
    for (int p = 0; p < npos; ++p) {
        if (touch_src[p] < 1e-12 && touch_c0[p] < 1e-12) continue;
        if (touch_src[p] >= 1e-12 && touch_c0[p] < 1e-12)
            throw ConfigError("build_surface_maps: a surface node is reached from the "
                              "sampling strip but not from the projection base; "
                              "lower the projection cutoff");
        surf.col_of[p] = surf.size();
        surf.nodes.emplace_back(p % surf.nx, p / surf.nx);
    }

    int k = surf.size();
    SurfaceMaps maps;
    auto materialize = [&](const std::vector<std::vector<InterpEntry>>& rows, int n) {
        MatrixXd M = MatrixXd::Zero(n, k);
        for (int r = 0; r < n; ++r) {
            double kept = 0.0;
            for (auto& e : rows[r])
                if (surf.col_of[e.pos] >= 0) kept += e.w;
            if (kept < 0.5)
                throw ConfigError("build_surface_maps: pruning removed most of an "
                                  "interpolation row");
            for (auto& e : rows[r])
                if (surf.col_of[e.pos] >= 0) M(r, surf.col_of[e.pos]) = e.w / kept;
        }
        return M;
    };
    maps.pullback_src = materialize(rows_src, grid_c.size());
    maps.pullback_c0 = materialize(rows_c0, grid_c0.size());

    /*
     * Weighted least-squares left inverse of pullback_c0.  The weights span
     * many orders of magnitude (w_N ~ y^{-2N-1}), so the normal equations
     * are solved in a column-equilibrated frame and polished with one
     * residual-correction step.
     */
    const VectorXd& w = grid_c0.w_N;
    MatrixXd XtW = maps.pullback_c0.transpose() * w.asDiagonal(); // k x n0
    MatrixXd G = XtW * maps.pullback_c0;                          // k x k, spd
    VectorXd d = G.diagonal().cwiseMax(0.0).cwiseSqrt();
    for (int i = 0; i < k; ++i)
        if (!(d(i) > 0))
            throw ConfigError("build_surface_maps: a retained surface node carries no "
                              "weight in the projection base");
    VectorXd dinv = d.cwiseInverse();
    MatrixXd Gh = dinv.asDiagonal() * G * dinv.asDiagonal();
    Eigen::LDLT<MatrixXd> ldlt(Gh);
    if (ldlt.info() != Eigen::Success)
        throw ConfigError("build_surface_maps: projection normal matrix is not "
                          "positive definite");
    auto gsolve = [&](const MatrixXd& B) {
        return MatrixXd(dinv.asDiagonal() *
                        ldlt.solve(MatrixXd(dinv.asDiagonal() * B)));
    };
    maps.project = gsolve(XtW);
    maps.project += gsolve(XtW - G * maps.project);
    maps.surface = std::move(surf);
    return maps;
}

/* ---------------------------------------------------------------------- */
/* Hilbert-Schmidt report                                                  */
/* ---------------------------------------------------------------------- */

double BlockResiduals::overall() const {
    return std::max({conv, automorphy, span, guard, normalization});
}

int CompactnessReport::k0(double ratio) const {
    if (singular_values.size() == 0) return 0;
    double top = singular_values(0);
    for (int i = 0; i < singular_values.size(); ++i)
        if (singular_values(i) <= ratio * top) return i;
    return int(singular_values.size());
}

CompactnessReport hs_compactness_report(const specfn::RadialKernel& kernel,
                                        const StripGrid& src, const StripGrid& dst) {
    DiscretizedOp op = build_conv_op(kernel, src, dst);
    MatrixXd M = op.mat;

    // (I - C) on the output: remove per-level x-means of the rows
    for (int j = 0; j < dst.ny; ++j) {
        auto block = M.middleRows(static_cast<long>(j) * dst.nx, dst.nx);
        block.rowwise() -= block.colwise().mean();
    }
    // (I - C) on the input: remove per-level x-means of the columns
    for (int j = 0; j < src.ny; ++j) {
        auto block = M.middleCols(static_cast<long>(j) * src.nx, src.nx);
        block.colwise() -= block.rowwise().mean();
    }

    // weighted frame: sqrt(w_N) on the output, 1/sqrt(w_N) on the input
    M = dst.w_N.cwiseSqrt().asDiagonal() * M;
    M = M * src.w_N.cwiseSqrt().cwiseInverse().asDiagonal();

    CompactnessReport rep;
    Eigen::BDCSVD<MatrixXd> svd(M);
    rep.singular_values = svd.singularValues();
    rep.frobenius = M.norm();
    return rep;
}

} // namespace eisen::sl2
