#include "eisen/sl2.hpp"

#include "eisen/errors.hpp"
#include "eisen/numutil.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace eisen::sl2 {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::RowVectorXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

// sinh(w)/w, series near the origin so s = 1/2 is an ordinary point
cd sinhc(cd w) {
    if (std::abs(w) < 1e-3) {
        cd w2 = w * w;
        return 1.0 + w2 / 6.0 * (1.0 + w2 / 20.0);
    }
    return std::sinh(w) / w;
}

// real matrix times complex matrix/vector, split to stay in real gemms
MatrixXcd rxc(const MatrixXd& A, const MatrixXcd& X) {
    MatrixXcd out(A.rows(), X.cols());
    out.real() = A * X.real();
    out.imag() = A * X.imag();
    return out;
}

VectorXcd rxc(const MatrixXd& A, const VectorXcd& x) {
    VectorXcd out(A.rows());
    out.real() = A * x.real();
    out.imag() = A * x.imag();
    return out;
}

long choose3(long n) { return n * (n - 1) * (n - 2) / 6; }

double portable_unit(std::mt19937_64& rng) {
    // top 53 bits -> [0, 1); avoids distribution classes, which are not
    // bit-reproducible across standard libraries
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

VectorXd level_weights_N(const StripGrid& g) {
    VectorXd w(g.ny);
    for (int l = 0; l < g.ny; ++l)
        w(l) = g.level_w(l) * std::pow(g.ys[l], -2.0 * g.N);
    return w;
}

void validate_config(const Sl2Config& c) {
    if (c.nx < 4 || c.nx > 4096) throw ConfigError("sl2 config: nx out of range [4, 4096]");
    if (c.ny < 9 || c.ny % 2 == 0)
        throw ConfigError("sl2 config: ny must be odd and at least 9");
    if (!(c.c > 0) || !(c.y_max > c.c)) throw ConfigError("sl2 config: bad strip bounds");
    if (!(c.kernel_radius > 0) || c.kernel_radius > 2.0)
        throw ConfigError("sl2 config: kernel radius out of range (0, 2]");
    if (!(c.kernel_sharpness > 0) || c.kernel_sharpness > 32.0)
        throw ConfigError("sl2 config: kernel sharpness out of range (0, 32]");
    double arc = std::sqrt(3.0) / 2.0;
    if (c.c0_request > arc * (1.0 + 1e-9))
        throw ConfigError("sl2 config: projection cutoff above sqrt(3)/2 breaks "
                          "surjectivity onto the surface");
    if (c.c0_request <= c.c)
        throw ConfigError("sl2 config: projection cutoff must exceed the strip cutoff");
    if (c.n_covectors < 8 || c.n_covectors > 128)
        throw ConfigError("sl2 config: n_covectors out of range [8, 128]");
    if (c.N < 1.0) throw ConfigError("sl2 config: weight exponent must be at least 1");
    if (c.n_cusp_guard < 0 || c.n_cusp_guard > 64)
        throw ConfigError("sl2 config: n_cusp_guard out of range [0, 64]");
    if (!(c.fit_y_lo > c.c) || !(c.fit_y_hi_frac > 0) || c.fit_y_hi_frac > 1.0 ||
        !(c.fit_y_lo < c.fit_y_hi_frac * c.y_max))
        throw ConfigError("sl2 config: empty constant-term fit window");
    if (c.unq_samples.empty() || c.probe_grid.empty())
        throw ConfigError("sl2 config: need at least one uniqueness sample and one "
                          "probe point");
}

StripGrid make_src(const Sl2Config& c) {
    validate_config(c);
    return StripGrid(c.c, c.y_max, c.nx, c.ny, c.N);
}

int count_equations(const Sl2Config& c) {
    StripGrid src = make_src(c);
    int j0 = 0;
    StripGrid dst = src.clipped(c.c * std::exp(c.kernel_radius),
                                c.y_max * std::exp(-c.kernel_radius), &j0);
    long m = static_cast<long>(dst.size()) + src.size() + choose3(c.n_covectors) +
             c.n_cusp_guard + 1;
    if (m > (1L << 30)) throw ConfigError("sl2 config: equation count overflow");
    return static_cast<int>(m);
}

} // namespace

/* ---------------------------------------------------------------------- */
/* per-parameter cache                                                     */
/* ---------------------------------------------------------------------- */

struct EisensteinFamily::PerS {
    cd g;                  // convolution eigenvalue on y^s
    VectorXcd a1, a2;      // span basis on the source levels
    VectorXcd p1, p2;      // covector pairings (alpha_j, xi_a)_W
    RowVectorXcd norm_row; // normalization row on the mean coordinates
    cd norm_rhs;           // bilinear Gram determinant over the fit window
};

const EisensteinFamily::PerS& EisensteinFamily::per_s(cd s) const {
    std::lock_guard<std::mutex> lk(mutex_);
    auto key = std::make_pair(s.real(), s.imag());
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;

    auto p = std::make_shared<PerS>();
    p->g = specfn::selberg_transform(kernel_, s);

    int ny = src_.ny;
    p->a1.resize(ny);
    p->a2.resize(ny);
    cd w = s - 0.5;
    for (int l = 0; l < ny; ++l) {
        double L = src_.ts[l];
        p->a1(l) = real_pow(src_.ys[l], s);
        p->a2(l) = std::sqrt(src_.ys[l]) * L * sinhc(w * L);
    }

    VectorXd wl = level_weights_N(src_);
    p->p1 = rxc(xi_, VectorXcd(p->a1.cwiseProduct(wl.cast<cd>())));
    p->p2 = rxc(xi_, VectorXcd(p->a2.cwiseProduct(wl.cast<cd>())));

    /*
     * Normalization row: adjugate form of the bilinear least-squares
     * functional extracting the alpha_1 coefficient over the fit window, so
     * the row and its right-hand side (the bilinear Gram determinant) stay
     * entire in s.  On a constant term a alpha_1 + b alpha_2 the row
     * evaluates to a * det, so rhs = det pins the y^s coefficient to one.
     */
    cd g11 = 0.0, g12 = 0.0, g22 = 0.0;
    for (int l : fit_levels_) {
        g11 += wl(l) * p->a1(l) * p->a1(l);
        g12 += wl(l) * p->a1(l) * p->a2(l);
        g22 += wl(l) * p->a2(l) * p->a2(l);
    }
    double sq = std::sqrt(static_cast<double>(src_.nx));
    p->norm_row = RowVectorXcd::Zero(ny);
    for (int l : fit_levels_)
        p->norm_row(l) = norm_scale_ * (g22 * p->a1(l) - g12 * p->a2(l)) * wl(l) / sq;
    p->norm_rhs = norm_scale_ * (g11 * g22 - g12 * g12);

    auto [pos, ok] = cache_.emplace(key, std::move(p));
    (void)ok;
    return *pos->second;
}

/* ---------------------------------------------------------------------- */
/* family assembly                                                         */
/* ---------------------------------------------------------------------- */

EisensteinFamily::EisensteinFamily(const Sl2Config& cfg)
    : merocont::AnalyticLinearFamily(cfg.nx * cfg.ny, count_equations(cfg)), cfg_(cfg) {
    kernel_.radius = cfg_.kernel_radius;
    kernel_.sharpness = cfg_.kernel_sharpness;
    src_ = make_src(cfg_);
    dst_ = src_.clipped(cfg_.c * std::exp(cfg_.kernel_radius),
                        cfg_.y_max * std::exp(-cfg_.kernel_radius), &dst_j0_);

    /*
     * Projection base: the full strip.  Any proper sub-window risks missing
     * surface cells that only nodes below its floor reach after reduction
     * (the S-flip cloud of the x = -1/2 column is the usual offender), and
     * the miss pattern depends on the resolution.  Extending the base to
     * the whole strip makes the coverage tally of the base identical to
     * that of the sampling grid, so surjectivity onto the touched surface
     * cells holds by construction at every resolution.
     */
    c0_j0_ = 0;
    c0_ = src_;

    maps_ = build_surface_maps(src_, c0_);

    int nx = cfg_.nx, ny = cfg_.ny;
    int ncusp = n_cusp();

    // symmetric Householder exchanging e_{nx} with the normalized all-ones
    // vector: the last rotated coordinate of a level is sqrt(nx) times its
    // mean, the first nx-1 span the mean-zero (cuspidal) part
    {
        VectorXd hv = VectorXd::Constant(nx, -1.0 / std::sqrt(static_cast<double>(nx)));
        hv(nx - 1) += 1.0;
        hv.normalize();
        H_ = MatrixXd::Identity(nx, nx) - 2.0 * hv * hv.transpose();
    }

    auto to_coef_cols = [&](const MatrixXd& M) {
        MatrixXd out(M.rows(), M.cols());
        for (int j = 0; j < ny; ++j) {
            MatrixXd t = M.middleCols(static_cast<long>(j) * nx, nx) * H_;
            out.middleCols(static_cast<long>(j) * (nx - 1), nx - 1) = t.leftCols(nx - 1);
            out.col(ncusp + j) = t.col(nx - 1);
        }
        return out;
    };

    {
        DiscretizedOp K = build_conv_op(kernel_, src_, dst_);
        K_B_ = to_coef_cols(K.mat);
    }
    {
        MatrixXd R = MatrixXd::Zero(dst_.size(), src_.size());
        for (int j = 0; j < dst_.ny; ++j)
            for (int ix = 0; ix < nx; ++ix)
                R(dst_.node(ix, j), src_.node(ix, dst_j0_ + j)) = 1.0;
        R_B_ = to_coef_cols(R);
    }
    {
        /*
         * Automorphy defect in value coordinates: f(reduce z) - f(z), with
         * the reduced value interpolated from the strip samples themselves.
         * The surface lattice is a sublattice of the strip grid, so the
         * restriction step is plain sampling.  Routing the rows through the
         * fitted projection instead would silently drop every constraint
         * whose target cell has a single preimage (the fit reproduces the
         * lone sample exactly and the row cancels), turning scores of
         * flip-zone node values into slack.  The fitted projection is kept
         * only as an output representation of the surface function.
         */
        const SurfaceGrid& surf = maps_.surface;
        MatrixXd A = MatrixXd::Zero(src_.size(), src_.size());
        for (long r = 0; r < maps_.pullback_src.rows(); ++r)
            for (int c = 0; c < surf.size(); ++c) {
                double wgt = maps_.pullback_src(r, c);
                if (wgt != 0.0)
                    A(r, src_.node(surf.nodes[c].first,
                                   surf.j0 + surf.nodes[c].second)) += wgt;
            }
        A.diagonal().array() -= 1.0;
        G_B_ = to_coef_cols(A);
    }

    /*
     * Above the top of the inner window the equations go blind to cuspidal
     * content: there is no -g f(z) diagonal term up there, the kernel's
     * response to x-oscillating input decays like a Gaussian in the ratio
     * of its x-spread to the period (already ~1e-5 one level out), and the
     * automorphy rows are vacuous (each node up there is its own
     * reduction, so the row cancels).  Left alone, the cuspidal
     * coordinates of those levels would be pure slack: a fat near-kernel
     * that destroys the uniqueness of the family's solution.  The honest
     * constraint is that automorphic eigenfunctions have exponentially
     * small cuspidal content high in the cusp (O(e^{-2 pi y}), ~1e-18 and
     * below at these heights), so the dead rows are replaced by pins of
     * the per-node cuspidal content.
     */
    {
        double t_pin = dst_.ts.back() + 1e-12;
        for (int j = 0; j < ny; ++j) {
            if (src_.ts[j] < t_pin) continue;
            for (int ix = 0; ix < nx; ++ix) {
                auto row = G_B_.row(src_.node(ix, j));
                row.setZero();
                row.segment(static_cast<long>(j) * (nx - 1), nx - 1) =
                    H_.row(ix).head(nx - 1);
            }
        }
    }

    // covectors: fixed random level profiles; their W-pairings against level
    // means are linear functionals of the mean coordinates through U
    {
        std::mt19937_64 rng(cfg_.seed);
        xi_.resize(cfg_.n_covectors, ny);
        for (int a = 0; a < cfg_.n_covectors; ++a)
            for (int l = 0; l < ny; ++l) xi_(a, l) = 2.0 * portable_unit(rng) - 1.0;
        VectorXd wl = level_weights_N(src_);
        U_ = xi_ * (wl / std::sqrt(static_cast<double>(nx))).asDiagonal();
        Ugram_ = U_ * U_.transpose();
    }

    triples_.reserve(choose3(cfg_.n_covectors));
    for (int i = 0; i < cfg_.n_covectors; ++i)
        for (int j = i + 1; j < cfg_.n_covectors; ++j)
            for (int k = j + 1; k < cfg_.n_covectors; ++k)
                triples_.push_back({i, j, k});

    for (int l = 0; l < ny; ++l)
        if (src_.ys[l] > cfg_.fit_y_lo && src_.ys[l] < cfg_.fit_y_hi_frac * cfg_.y_max)
            fit_levels_.push_back(l);
    if (fit_levels_.size() < 3)
        throw ConfigError("sl2 config: constant-term fit window holds fewer than "
                          "three levels");

    conv_kk_ = K_B_.rowwise().squaredNorm();
    conv_rr_ = R_B_.rowwise().squaredNorm();
    conv_kr_ = K_B_.cwiseProduct(R_B_).rowwise().sum();
    auto_norms_ = G_B_.rowwise().norm();

    /*
     * Calibrate the normalization row so that its entries are O(1) at the
     * witness anchor.  Its natural scale is the bilinear Gram determinant
     * of (alpha_1, alpha_2) over the fit window, which can be tiny when the
     * two span functions are nearly parallel there; without the rescale the
     * pivoted row selection could prefer a homogeneous row, which would
     * collapse the continued solution to zero.  A constant factor keeps the
     * row entire in s and drops out of the extracted coefficients.
     */
    {
        double s0 = cfg_.witness_anchor;
        VectorXd wl = level_weights_N(src_);
        double g11 = 0.0, g12 = 0.0, g22 = 0.0;
        for (int l : fit_levels_) {
            double L = src_.ts[l];
            double a1 = std::pow(src_.ys[l], s0);
            double w0 = s0 - 0.5;
            double a2 = std::sqrt(src_.ys[l]) * L *
                        (std::abs(w0 * L) < 1e-3 ? 1.0 + w0 * L * w0 * L / 6.0
                                                 : std::sinh(w0 * L) / (w0 * L));
            g11 += wl(l) * a1 * a1;
            g12 += wl(l) * a1 * a2;
            g22 += wl(l) * a2 * a2;
        }
        double det0 = g11 * g22 - g12 * g12;
        if (!(det0 > 1e-300))
            throw ConfigError("sl2 config: degenerate span basis over the fit window");
        norm_scale_ = 1.0 / det0;
    }

    if (cfg_.n_cusp_guard > 0) {
        // leading right singular vectors of the cuspidal convolution block
        // (output means removed), by block power iteration
        MatrixXd Kc = K_B_.leftCols(ncusp);
        for (int j = 0; j < dst_.ny; ++j) {
            auto block = Kc.middleRows(static_cast<long>(j) * nx, nx);
            block.rowwise() -= block.colwise().mean();
        }
        std::mt19937_64 rng(cfg_.seed + 7);
        MatrixXd V(ncusp, cfg_.n_cusp_guard);
        for (long i = 0; i < V.size(); ++i) V(i) = 2.0 * portable_unit(rng) - 1.0;
        for (int it = 0; it < 30; ++it) {
            MatrixXd W1 = Kc * V;
            V.noalias() = Kc.transpose() * W1;
            Eigen::HouseholderQR<MatrixXd> qr(V);
            V = qr.householderQ() * MatrixXd::Identity(ncusp, cfg_.n_cusp_guard);
        }
        guard_ = V.transpose();
    } else {
        guard_.resize(0, ncusp);
    }
}

/* ---------------------------------------------------------------------- */
/* rows and products                                                       */
/* ---------------------------------------------------------------------- */

namespace {
// first-column cofactors of the 3x3 span determinant: (m_jk, m_ik, m_ij)
std::array<cd, 3> span_minors(const VectorXcd& p1, const VectorXcd& p2,
                              const std::array<int, 3>& t) {
    auto det2 = [&](int a, int b) { return p1(a) * p2(b) - p2(a) * p1(b); };
    return {det2(t[1], t[2]), det2(t[0], t[2]), det2(t[0], t[1])};
}
} // namespace

Eigen::RowVectorXcd EisensteinFamily::row(cd s, int i) const {
    if (i < 0 || i >= num_equations()) throw DomainError("family row index out of range");
    const PerS& ps = per_s(s);
    int ny = src_.ny, ncusp = n_cusp();
    int m1 = n_conv(), m2 = m1 + n_automorphy(), m3 = m2 + n_span(), m4 = m3 + n_guard();
    RowVectorXcd r = RowVectorXcd::Zero(dim_E());
    if (i < m1) {
        r = K_B_.row(i).cast<cd>();
        r -= ps.g * R_B_.row(i).cast<cd>();
    } else if (i < m2) {
        r = G_B_.row(i - m1).cast<cd>();
    } else if (i < m3) {
        auto mm = span_minors(ps.p1, ps.p2, triples_[i - m2]);
        const auto& t = triples_[i - m2];
        r.segment(ncusp, ny) = mm[0] * U_.row(t[0]).cast<cd>() -
                               mm[1] * U_.row(t[1]).cast<cd>() +
                               mm[2] * U_.row(t[2]).cast<cd>();
    } else if (i < m4) {
        r.head(ncusp) = guard_.row(i - m3).cast<cd>();
    } else {
        r.segment(ncusp, ny) = ps.norm_row;
    }
    return r;
}

cd EisensteinFamily::rhs(cd s, int i) const {
    if (i < 0 || i >= num_equations()) throw DomainError("family rhs index out of range");
    return i == num_equations() - 1 ? per_s(s).norm_rhs : cd(0.0);
}

Eigen::VectorXcd EisensteinFamily::rhs_all(cd s) const {
    VectorXcd b = VectorXcd::Zero(num_equations());
    b(num_equations() - 1) = per_s(s).norm_rhs;
    return b;
}

Eigen::MatrixXcd EisensteinFamily::matrix(cd s) const {
    if (static_cast<long>(num_equations()) * dim_E() > 40000000L)
        throw ConfigError("family matrix too large to materialize; use rows_times "
                          "and residuals");
    std::vector<int> all(num_equations());
    std::iota(all.begin(), all.end(), 0);
    return rows_times(s, all, MatrixXcd::Identity(dim_E(), dim_E()));
}

Eigen::MatrixXcd EisensteinFamily::rows_times(cd s, const std::vector<int>& sel,
                                              const Eigen::MatrixXcd& X) const {
    if (X.rows() != dim_E()) throw DomainError("rows_times: operand row count mismatch");
    const PerS& ps = per_s(s);
    int ny = src_.ny, ncusp = n_cusp();
    int m1 = n_conv(), m2 = m1 + n_automorphy(), m3 = m2 + n_span(), m4 = m3 + n_guard();
    MatrixXcd out(sel.size(), X.cols());

    std::vector<int> rK, pK, rA, pA, rS, pS, rG, pG;
    for (int idx = 0; idx < static_cast<int>(sel.size()); ++idx) {
        int i = sel[idx];
        if (i < 0 || i >= num_equations())
            throw DomainError("rows_times: row index out of range");
        if (i < m1) {
            rK.push_back(i);
            pK.push_back(idx);
        } else if (i < m2) {
            rA.push_back(i - m1);
            pA.push_back(idx);
        } else if (i < m3) {
            rS.push_back(i - m2);
            pS.push_back(idx);
        } else if (i < m4) {
            rG.push_back(i - m3);
            pG.push_back(idx);
        } else {
            out.row(idx) = ps.norm_row * X.middleRows(ncusp, ny);
        }
    }

    if (!rK.empty()) {
        MatrixXd Ksub(rK.size(), dim_E()), Rsub(rK.size(), dim_E());
        for (size_t r = 0; r < rK.size(); ++r) {
            Ksub.row(r) = K_B_.row(rK[r]);
            Rsub.row(r) = R_B_.row(rK[r]);
        }
        MatrixXcd t = rxc(Ksub, X);
        t -= ps.g * rxc(Rsub, X);
        for (size_t r = 0; r < rK.size(); ++r) out.row(pK[r]) = t.row(r);
    }
    if (!rA.empty()) {
        MatrixXd Asub(rA.size(), dim_E());
        for (size_t r = 0; r < rA.size(); ++r) Asub.row(r) = G_B_.row(rA[r]);
        MatrixXcd t = rxc(Asub, X);
        for (size_t r = 0; r < rA.size(); ++r) out.row(pA[r]) = t.row(r);
    }
    if (!rS.empty()) {
        MatrixXcd PX = rxc(U_, MatrixXcd(X.middleRows(ncusp, ny)));
        for (size_t r = 0; r < rS.size(); ++r) {
            const auto& t = triples_[rS[r]];
            auto mm = span_minors(ps.p1, ps.p2, t);
            out.row(pS[r]) =
                mm[0] * PX.row(t[0]) - mm[1] * PX.row(t[1]) + mm[2] * PX.row(t[2]);
        }
    }
    if (!rG.empty()) {
        MatrixXd Gsub(rG.size(), ncusp);
        for (size_t r = 0; r < rG.size(); ++r) Gsub.row(r) = guard_.row(rG[r]);
        MatrixXcd t = rxc(Gsub, MatrixXcd(X.topRows(ncusp)));
        for (size_t r = 0; r < rG.size(); ++r) out.row(pG[r]) = t.row(r);
    }
    return out;
}

Eigen::VectorXcd EisensteinFamily::residuals(cd s, const Eigen::VectorXcd& v) const {
    if (v.size() != dim_E()) throw DomainError("residuals: vector length mismatch");
    const PerS& ps = per_s(s);
    int ny = src_.ny, ncusp = n_cusp();
    int m1 = n_conv(), m2 = m1 + n_automorphy(), m3 = m2 + n_span(), m4 = m3 + n_guard();
    VectorXcd res(num_equations());
    res.head(m1) = rxc(K_B_, v) - ps.g * rxc(R_B_, v);
    res.segment(m1, m2 - m1) = rxc(G_B_, v);
    VectorXcd pv = rxc(U_, VectorXcd(v.segment(ncusp, ny)));
    for (int r = 0; r < n_span(); ++r) {
        const auto& t = triples_[r];
        auto mm = span_minors(ps.p1, ps.p2, t);
        res(m2 + r) = mm[0] * pv(t[0]) - mm[1] * pv(t[1]) + mm[2] * pv(t[2]);
    }
    if (n_guard() > 0)
        res.segment(m3, n_guard()) = rxc(guard_, VectorXcd(v.head(ncusp)));
    res(m4) = (ps.norm_row * v.segment(ncusp, ny)).value() - ps.norm_rhs;
    return res;
}

Eigen::VectorXd EisensteinFamily::row_norms(cd s) const {
    const PerS& ps = per_s(s);
    int m1 = n_conv(), m2 = m1 + n_automorphy(), m3 = m2 + n_span(), m4 = m3 + n_guard();
    VectorXd n(num_equations());
    n.head(m1) = (conv_kk_ - 2.0 * ps.g.real() * conv_kr_ + std::norm(ps.g) * conv_rr_)
                     .cwiseMax(0.0)
                     .cwiseSqrt();
    n.segment(m1, m2 - m1) = auto_norms_;
    for (int r = 0; r < n_span(); ++r) {
        const auto& t = triples_[r];
        auto mm = span_minors(ps.p1, ps.p2, t);
        cd c[3] = {mm[0], -mm[1], mm[2]};
        double acc = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                acc += (c[a] * std::conj(c[b])).real() * Ugram_(t[a], t[b]);
        n(m2 + r) = std::sqrt(std::max(acc, 0.0));
    }
    if (n_guard() > 0) n.segment(m3, n_guard()).setOnes();
    n(m4) = ps.norm_row.norm();
    return n;
}

/* ---------------------------------------------------------------------- */
/* coordinate and span plumbing                                            */
/* ---------------------------------------------------------------------- */

std::vector<int> EisensteinFamily::cusp_block() const {
    std::vector<int> idx(n_cusp());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

std::vector<int> EisensteinFamily::mean_block() const {
    std::vector<int> idx(src_.ny);
    std::iota(idx.begin(), idx.end(), n_cusp());
    return idx;
}

std::vector<int> EisensteinFamily::reduction_rows() const {
    std::vector<int> idx(n_conv() + n_automorphy());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

Eigen::MatrixXcd EisensteinFamily::span_basis(cd s) const {
    const PerS& ps = per_s(s);
    MatrixXcd B(src_.ny, 2);
    B.col(0) = ps.a1;
    B.col(1) = ps.a2;
    return B;
}

cd EisensteinFamily::g(cd s) const { return per_s(s).g; }

Eigen::VectorXcd EisensteinFamily::coef_to_values(const Eigen::VectorXcd& coef) const {
    if (coef.size() != dim_E()) throw DomainError("coef_to_values: length mismatch");
    int nx = src_.nx, ny = src_.ny, nc = nx - 1, ncusp = n_cusp();
    VectorXcd vals(dim_E());
    VectorXcd cl(nx);
    for (int j = 0; j < ny; ++j) {
        cl.head(nc) = coef.segment(static_cast<long>(j) * nc, nc);
        cl(nx - 1) = coef(ncusp + j);
        vals.segment(static_cast<long>(j) * nx, nx) = rxc(H_, cl);
    }
    return vals;
}

Eigen::VectorXcd EisensteinFamily::values_to_coef(const Eigen::VectorXcd& vals) const {
    if (vals.size() != dim_E()) throw DomainError("values_to_coef: length mismatch");
    int nx = src_.nx, ny = src_.ny, nc = nx - 1, ncusp = n_cusp();
    VectorXcd coef(dim_E());
    for (int j = 0; j < ny; ++j) {
        VectorXcd cl = rxc(H_, VectorXcd(vals.segment(static_cast<long>(j) * nx, nx)));
        coef.segment(static_cast<long>(j) * nc, nc) = cl.head(nc);
        coef(ncusp + j) = cl(nx - 1);
    }
    return coef;
}

std::array<cd, 2> EisensteinFamily::fit_constant_term(cd s, const Eigen::VectorXcd& f,
                                                      double* rel_misfit) const {
    if (f.size() != src_.ny) throw DomainError("fit_constant_term: need one value per level");
    if (std::abs(2.0 * s - 1.0) < 1e-8)
        throw DomainError("fit_constant_term: the (y^s, y^{1-s}) basis degenerates "
                          "at s = 1/2");
    const PerS& ps = per_s(s);
    VectorXd wl = level_weights_N(src_);
    // hermitian weighted least squares in the stable basis (alpha_1, alpha_2)
    double h11 = 0.0, h22 = 0.0, fn = 0.0;
    cd h12 = 0.0, r1 = 0.0, r2 = 0.0;
    for (int l : fit_levels_) {
        double w = wl(l);
        h11 += w * std::norm(ps.a1(l));
        h22 += w * std::norm(ps.a2(l));
        h12 += w * std::conj(ps.a1(l)) * ps.a2(l);
        r1 += w * std::conj(ps.a1(l)) * f(l);
        r2 += w * std::conj(ps.a2(l)) * f(l);
        fn += w * std::norm(f(l));
    }
    double det = h11 * h22 - std::norm(h12);
    if (!(det > 0))
        throw FitError("fit_constant_term: degenerate span basis on the fit window");
    cd ca = (h22 * r1 - h12 * r2) / det;
    cd cb = (h11 * r2 - std::conj(h12) * r1) / det;
    if (rel_misfit) {
        double rs = 0.0;
        for (int l : fit_levels_)
            rs += wl(l) * std::norm(f(l) - ca * ps.a1(l) - cb * ps.a2(l));
        *rel_misfit = fn > 0 ? std::sqrt(rs / fn) : 0.0;
    }
    // change to the (y^s, y^{1-s}) basis
    cd u = cb / (2.0 * s - 1.0);
    return {ca + u, -u};
}

/* ---------------------------------------------------------------------- */
/* structured witness                                                      */
/* ---------------------------------------------------------------------- */

namespace {

struct WitnessData {
    MatrixXd P_KG, P_R;     // D-folded cuspidal blocks, column-equilibrated
    MatrixXd KM, RM, GM;    // D-folded mean-column blocks
    MatrixXd V;             // near-kernel basis at the anchor (scaled coords)
    VectorXd s_cusp;        // column equilibration, cuspidal part
    double s_a = 1.0, s_b = 1.0; // equilibration of the two span columns
    int ncusp = 0, ny = 0, q = 0;
    double sqnx = 1.0;
    const EisensteinFamily* family = nullptr;
};

} // namespace

merocont::FiniteTypeWitness eisenstein_witness(const EisensteinFamily& family, double s0,
                                               const merocont::WitnessOptions& opts) {
    const StripGrid& src = family.src();
    int ny = src.ny, nx = src.nx;
    int ncusp = family.n_cusp();
    int nL = ncusp + 2;
    int mK = family.n_conv(), mA = family.n_automorphy();
    double sq = std::sqrt(static_cast<double>(nx));

    cd g0c = family.g(cd(s0, 0.0));
    if (std::abs(g0c.imag()) > 1e-12 * std::abs(g0c))
        throw WitnessError("witness anchor must be real");
    double g0 = g0c.real();
    if (std::abs(g0) < 1e-10 * family.kernel().hyperbolic_mass())
        throw WitnessError("kernel transform vanishes at the anchor; change the "
                           "kernel radius or the anchor");
    MatrixXd lift0 = sq * family.span_basis(cd(s0, 0.0)).real(); // ny x 2

    const MatrixXd& KB = family.conv_block();
    const MatrixXd& RB = family.restrict_block();
    const MatrixXd& GB = family.automorphy_block();

    /*
     * Reduction rows composed with T(s0): everything is real at a real
     * anchor, so the Gram analysis and the deflated inverse stay in real
     * arithmetic.  The construction below is the same truncated
     * pseudoinverse as the generic split witness: with W the projector on
     * the near-kernel V of G = A0' A0,
     *
     *   D = (G + top W)^{-1} (I - W) A0',   X(s) = D A(s) + W,
     *
     * and any u with A(s) u = 0 satisfies X(s) u = V (V' u), so the columns
     * of T(s) X(s)^{-1} V span every solution of the reduced system.
     */
    MatrixXd A0(mK + mA, nL);
    A0.topLeftCorner(mK, ncusp) = KB.leftCols(ncusp) - g0 * RB.leftCols(ncusp);
    A0.bottomLeftCorner(mA, ncusp) = GB.leftCols(ncusp);
    A0.topRightCorner(mK, 2) =
        KB.rightCols(ny) * lift0 - g0 * (RB.rightCols(ny) * lift0);
    A0.bottomRightCorner(mA, 2) = GB.rightCols(ny) * lift0;

    /*
     * The raw columns of A0 are badly out of scale: a cuspidal coordinate
     * high in the strip enters the convolution rows only through quadrature
     * weights ~ 1/(nx y), so its column is tiny even though the equations
     * determine it to full relative precision.  A relative rank cut on the
     * unscaled Gram would sweep scores of such well-determined coordinates
     * into the near-kernel.  Equilibrating columns to unit norm repairs the
     * scale, and solutions survive because column scaling is a change of
     * basis of E: A(s) u = 0 iff A(s) S u' = 0 with u = S u', so the
     * witness works in primed coordinates and maps back through S on
     * output.
     */
    VectorXd colnorm = A0.colwise().norm().transpose();
    double cn_max = colnorm.maxCoeff();
    if (!(cn_max > 0.0))
        throw WitnessError("reduction block vanished at the anchor");
    VectorXd sdiag = (colnorm.array().max(1e-8 * cn_max)).inverse().matrix();
    A0.array().rowwise() *= sdiag.transpose().array();

    // only the lower triangle of G is maintained throughout
    MatrixXd G = MatrixXd::Zero(nL, nL);
    G.selfadjointView<Eigen::Lower>().rankUpdate(A0.transpose());

    std::mt19937_64 rng(family.config().seed + 1);
    auto rand_matrix = [&rng](int rows, int cols) {
        MatrixXd M(rows, cols);
        for (long i = 0; i < M.size(); ++i) M(i) = 2.0 * portable_unit(rng) - 1.0;
        return M;
    };

    double top = 0.0;
    {
        VectorXd pv = rand_matrix(nL, 1);
        pv.normalize();
        for (int it = 0; it < 40; ++it) {
            VectorXd w = G.selfadjointView<Eigen::Lower>() * pv;
            top = pv.dot(w);
            double wn = w.norm();
            if (wn == 0.0) break;
            pv = w / wn;
        }
    }
    if (!(top > 0)) throw WitnessError("reduction block vanished at the anchor");
    double cut = std::max(opts.rank_tol * opts.rank_tol, 1e-12) * top;

    // near-kernel by shifted block inverse iteration, Ritz-refined; fall
    // back to the full spectrum if the gap refuses to open
    MatrixXd Vq;
    int q = -1;
    {
        MatrixXd Gs = G;
        Gs.diagonal().array() += 1e-13 * top;
        Eigen::LLT<MatrixXd> llt_shift(Gs);
        if (llt_shift.info() != Eigen::Success)
            throw WitnessError("anchor Gram matrix is numerically indefinite");
        int b = std::min(8, std::max(2, opts.rank_cap));
        MatrixXd V = rand_matrix(nL, b);
        for (int it = 0; it < 60 && q < 0; ++it) {
            MatrixXd Y = llt_shift.solve(V);
            Eigen::HouseholderQR<MatrixXd> qr(Y);
            V = qr.householderQ() * MatrixXd::Identity(nL, b);
            MatrixXd S = V.transpose() * (G.selfadjointView<Eigen::Lower>() * V);
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
            V = V * es.eigenvectors();
            VectorXd ritz = es.eigenvalues();
            int qq = 0;
            while (qq < b && ritz(qq) < cut) ++qq;
            if (qq == b) {
                if (b >= opts.rank_cap)
                    throw WitnessError("near-kernel dimension exceeds rank_cap at "
                                       "the anchor");
                int b2 = std::min(2 * b, opts.rank_cap);
                MatrixXd V2(nL, b2);
                V2.leftCols(b) = V;
                V2.rightCols(b2 - b) = rand_matrix(nL, b2 - b);
                V = V2;
                b = b2;
                continue;
            }
            if (it >= 1 && qq >= 1 && ritz(qq - 1) <= cut / 1.5 && ritz(qq) >= 3.0 * cut) {
                q = qq;
                Vq = V.leftCols(q);
            }
        }
        if (q < 0) {
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
            const VectorXd& ev = es.eigenvalues();
            int qq = 0;
            while (qq < nL && ev(qq) < cut) ++qq;
            if (qq > opts.rank_cap)
                throw WitnessError("near-kernel dimension exceeds rank_cap at the "
                                   "anchor");
            q = qq;
            Vq = es.eigenvectors().leftCols(q);
        }
    }
    if (q == 0)
        throw WitnessError("no near-kernel captured at the anchor; raise rank_tol");

    G.selfadjointView<Eigen::Lower>().rankUpdate(Vq, top);
    Eigen::LLT<MatrixXd> llt(G); // reads the lower triangle only
    if (llt.info() != Eigen::Success)
        throw WitnessError("deflated Gram matrix lost positivity");
    G.resize(0, 0);

    MatrixXd AV = A0 * Vq; // (mK+mA) x q
    MatrixXd D = A0.transpose();
    D.noalias() -= Vq * AV.transpose();
    llt.solveInPlace(D);
    A0.resize(0, 0);

    auto data = std::make_shared<WitnessData>();
    {
        auto DK = D.leftCols(mK);
        auto DG = D.rightCols(mA);
        data->P_KG.noalias() = DK * KB.leftCols(ncusp);
        data->P_KG.noalias() += DG * GB.leftCols(ncusp);
        data->P_R.noalias() = DK * RB.leftCols(ncusp);
        data->KM.noalias() = DK * KB.rightCols(ny);
        data->RM.noalias() = DK * RB.rightCols(ny);
        data->GM.noalias() = DG * GB.rightCols(ny);
        // fold the cuspidal part of the equilibration into the D A(s) blocks
        data->P_KG.array().rowwise() *= sdiag.head(ncusp).transpose().array();
        data->P_R.array().rowwise() *= sdiag.head(ncusp).transpose().array();
    }
    D.resize(0, 0);
    data->V = Vq;
    data->s_cusp = sdiag.head(ncusp);
    data->s_a = sdiag(ncusp);
    data->s_b = sdiag(ncusp + 1);
    data->ncusp = ncusp;
    data->ny = ny;
    data->q = q;
    data->sqnx = sq;
    data->family = &family;

    merocont::FiniteTypeWitness wit;
    wit.dim_E = family.dim_E();
    wit.dim_L = q;
    wit.eval = [data](cd s) -> MatrixXcd {
        const EisensteinFamily& fam = *data->family;
        cd g = fam.g(s);
        MatrixXcd lift = data->sqnx * fam.span_basis(s); // ny x 2
        int nL = data->ncusp + 2;
        MatrixXcd X(nL, nL);
        X.leftCols(data->ncusp).real() = data->P_KG - g.real() * data->P_R;
        X.leftCols(data->ncusp).imag() = (-g.imag()) * data->P_R;
        MatrixXcd right = rxc(data->KM, lift);
        right -= g * rxc(data->RM, lift);
        right += rxc(data->GM, lift);
        X.rightCols(2) = right;
        X.col(data->ncusp) *= data->s_a;
        X.col(data->ncusp + 1) *= data->s_b;
        for (int i = 0; i < data->q; ++i)
            X.real() += data->V.col(i) * data->V.col(i).transpose();
        Eigen::PartialPivLU<Eigen::Ref<MatrixXcd>> lu(X);
        if (lu.rcond() < 1e-14)
            throw WitnessError("witness system singular at this parameter; move "
                               "the anchor");
        MatrixXcd Y = lu.solve(data->V.cast<cd>());
        // undo the equilibration: the solution basis lives in u = S u'
        Y.row(data->ncusp) *= data->s_a;
        Y.row(data->ncusp + 1) *= data->s_b;
        MatrixXcd out(data->ncusp + data->ny, data->q);
        out.topRows(data->ncusp) =
            data->s_cusp.cast<cd>().asDiagonal() * Y.topRows(data->ncusp);
        out.bottomRows(data->ny) = lift * Y.bottomRows(2);
        return out;
    };
    return wit;
}

/* ---------------------------------------------------------------------- */
/* pipeline                                                                */
/* ---------------------------------------------------------------------- */

struct EisensteinContinuation::State {
    EisensteinFamily family;
    merocont::FiniteTypeWitness witness;
    merocont::MeromorphicSolution sol;

    explicit State(const Sl2Config& cfg) : family(cfg) {
        merocont::WitnessOptions wopts;
        wopts.rank_tol = cfg.rank_tol;
        wopts.rank_cap = 16;
        witness = eisenstein_witness(family, cfg.witness_anchor, wopts);
        merocont::ContinuationOptions copts;
        copts.residual_tol = cfg.residual_tol;
        copts.denom_floor = cfg.denom_floor;
        sol = merocont::continue_unique_solution(family, witness, cfg.unq_samples,
                                                 cfg.probe_grid, copts);
    }
};

EisensteinContinuation::EisensteinContinuation(Sl2Config cfg)
    : st_(std::make_shared<State>(cfg)) {}

const EisensteinFamily& EisensteinContinuation::family() const { return st_->family; }
const merocont::MeromorphicSolution& EisensteinContinuation::solution() const {
    return st_->sol;
}
int EisensteinContinuation::witness_rank() const { return st_->witness.dim_L; }

ContinuationResult EisensteinContinuation::run(cd s) const {
    const State& st = *st_;
    const EisensteinFamily& fam = st.family;
    const Sl2Config& cfg = fam.config();
    if (cfg.N < 1.0 + std::abs(s.real()))
        throw DomainError("continuation: weighted space too small for this band; "
                          "need N >= 1 + |Re s|");
    if (std::abs(fam.g(s)) < 1e-10 * fam.kernel().hyperbolic_mass())
        throw DomainError("continuation: kernel transform vanishes near this s; "
                          "change kernel_radius");

    VectorXcd v = st.sol.value(s);

    VectorXcd res = fam.residuals(s, v);
    VectorXd norms = fam.row_norms(s);
    double vn = v.norm();
    int m1 = fam.n_conv(), m2 = m1 + fam.n_automorphy(), m3 = m2 + fam.n_span(),
        m4 = m3 + fam.n_guard();
    auto block_max = [&](int lo, int hi) {
        double mx = 0.0;
        for (int i = lo; i < hi; ++i)
            mx = std::max(mx, std::abs(res(i)) / (1.0 + norms(i) * vn));
        return mx;
    };
    ContinuationResult out;
    out.residuals.conv = block_max(0, m1);
    out.residuals.automorphy = block_max(m1, m2);
    out.residuals.span = block_max(m2, m3);
    out.residuals.guard = block_max(m3, m4);
    out.residuals.normalization = block_max(m4, m4 + 1);
    if (out.residuals.overall() > cfg.residual_tol)
        throw ConvergenceError("continuation: scaled residual " +
                               std::to_string(out.residuals.overall()) +
                               " exceeds the configured tolerance; the witness may "
                               "not be valid this far from the anchor");

    int ny = fam.src().ny;
    double sq = std::sqrt(static_cast<double>(fam.src().nx));
    VectorXcd means = v.segment(fam.n_cusp(), ny) / sq;
    double misfit = 0.0;
    auto ab = fam.fit_constant_term(s, means, &misfit);
    if (misfit > cfg.fit_rel_tol)
        throw FitError("continuation: constant term leaves the two-dimensional "
                       "span (relative misfit " +
                       std::to_string(misfit) + ")");
    cd a = ab[0], b = ab[1];
    if (std::abs(a) < 1e-8)
        throw DomainError("continuation: fitted y^s coefficient vanished; the "
                          "normalization degenerated at this s");

    out.s = s;
    out.m_estimate = b / a;
    out.ct_coeff_ys = a;
    out.fit_residual = misfit;
    out.strip_values = fam.coef_to_values(v / a);

    // surface samples: restrict to the projection window and project
    const StripGrid& c0 = fam.c0grid();
    const StripGrid& src = fam.src();
    int c0_j0 = 0;
    for (int j = 0; j < src.ny; ++j)
        if (src.ts[j] == c0.ts[0]) c0_j0 = j; // windows share the t-lattice bitwise
    VectorXcd vals_c0(c0.size());
    for (int j = 0; j < c0.ny; ++j)
        for (int ix = 0; ix < c0.nx; ++ix)
            vals_c0(c0.node(ix, j)) = out.strip_values(src.node(ix, c0_j0 + j));
    out.psi = rxc(fam.maps().project, vals_c0);

    out.denominator_value = st.sol.denominator(s);
    out.denominator_scale = st.sol.denominator_scale();
    out.cusp_orthogonality_imposed = fam.n_guard() > 0;
    out.notes = fam.n_guard() > 0
                    ? "cusp-form orthogonality imposed through explicit guard rows"
                    : "no cusp-form orthogonality imposed; cuspidal components are "
                      "controlled by the convolution and automorphy blocks";
    return out;
}

cd EisensteinContinuation::m_estimate(cd s) const { return run(s).m_estimate; }

ContinuationResult continue_eisenstein(cd s, const Sl2Config& cfg) {
    EisensteinContinuation ec(cfg);
    return ec.run(s);
}

} // namespace eisen::sl2
