#include "eisen/merocont.hpp"
#include "eisen/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>

namespace eisen::merocont {

using Eigen::MatrixXcd;
using Eigen::RowVectorXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// family defaults

MatrixXcd AnalyticLinearFamily::matrix(cd s) const {
    MatrixXcd M(num_equations_, dim_E_);
    for (int i = 0; i < num_equations_; ++i) M.row(i) = row(s, i);
    return M;
}

VectorXcd AnalyticLinearFamily::rhs_all(cd s) const {
    VectorXcd c(num_equations_);
    for (int i = 0; i < num_equations_; ++i) c(i) = rhs(s, i);
    return c;
}

MatrixXcd AnalyticLinearFamily::rows_times(cd s, const std::vector<int>& sel,
                                           const MatrixXcd& X) const {
    if (X.rows() != dim_E_) throw DomainError("rows_times: X has wrong height");
    MatrixXcd out(static_cast<int>(sel.size()), X.cols());
    for (std::size_t i = 0; i < sel.size(); ++i) {
        if (sel[i] < 0 || sel[i] >= num_equations_)
            throw DomainError("rows_times: equation index out of range");
        out.row(static_cast<int>(i)) = row(s, sel[i]) * X;
    }
    return out;
}

VectorXcd AnalyticLinearFamily::residuals(cd s, const VectorXcd& v) const {
    if (v.size() != dim_E_) throw DomainError("residuals: v has wrong dimension");
    VectorXcd r(num_equations_);
    for (int i = 0; i < num_equations_; ++i) r(i) = (row(s, i) * v).value() - rhs(s, i);
    return r;
}

VectorXd AnalyticLinearFamily::row_norms(cd s) const {
    VectorXd n(num_equations_);
    for (int i = 0; i < num_equations_; ++i) n(i) = row(s, i).norm();
    return n;
}

// ---------------------------------------------------------------------------
// CallableFamily

struct CallableFamily::Cache {
    std::mutex mu;
    bool have = false;
    cd s{};
    MatrixXcd M;
    VectorXcd c;
};

CallableFamily::CallableFamily(int dim_E, int num_equations,
                               std::function<MatrixXcd(cd)> mat,
                               std::function<VectorXcd(cd)> rhs)
    : AnalyticLinearFamily(dim_E, num_equations),
      mat_fn_(std::move(mat)), rhs_fn_(std::move(rhs)),
      cache_(std::make_shared<Cache>()) {}

MatrixXcd CallableFamily::matrix(cd s) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (!cache_->have || cache_->s != s) {
        cache_->M = mat_fn_(s);
        cache_->c = rhs_fn_(s);
        if (cache_->M.rows() != num_equations_ || cache_->M.cols() != dim_E_ ||
            cache_->c.size() != num_equations_)
            throw DomainError("CallableFamily: callable returned wrong shape");
        cache_->s = s;
        cache_->have = true;
    }
    return cache_->M;
}

VectorXcd CallableFamily::rhs_all(cd s) const {
    matrix(s); // fill cache
    std::lock_guard<std::mutex> lock(cache_->mu);
    return cache_->c;
}

RowVectorXcd CallableFamily::row(cd s, int i) const { return matrix(s).row(i); }

cd CallableFamily::rhs(cd s, int i) const { return rhs_all(s)(i); }

// ---------------------------------------------------------------------------
// RationalNumericFamily

RationalNumericFamily::RationalNumericFamily(RationalFamily fam)
    : AnalyticLinearFamily(fam.dim(), fam.num_equations()), fam_(std::move(fam)) {}

RowVectorXcd RationalNumericFamily::row(cd s, int i) const {
    RowVectorXcd r(dim_E_);
    for (int j = 0; j < dim_E_; ++j) r(j) = fam_.rows[i][j].eval(s);
    return r;
}

cd RationalNumericFamily::rhs(cd s, int i) const { return fam_.rhs[i].eval(s); }

// ---------------------------------------------------------------------------
// witnesses

FiniteTypeWitness FiniteTypeWitness::trivial(int dim_E) {
    FiniteTypeWitness w;
    w.dim_E = dim_E;
    w.dim_L = dim_E;
    w.eval = [dim_E](cd) { return MatrixXcd::Identity(dim_E, dim_E); };
    return w;
}

FiniteTypeWitness fredholm_witness(std::function<MatrixXcd(cd)> M, cd s0,
                                   const WitnessOptions& opts) {
    MatrixXcd M0 = M(s0);
    if (M0.rows() != M0.cols())
        throw DomainError("fredholm_witness: family must be square");
    const int n = static_cast<int>(M0.rows());

    MatrixXcd F = MatrixXcd::Identity(n, n) - M0;
    Eigen::BDCSVD<MatrixXcd> svd(F, Eigen::ComputeThinU);
    const auto& sig = svd.singularValues();
    int r = 0;
    if (sig.size() > 0 && sig(0) > 0.0) {
        for (int i = 0; i < sig.size(); ++i)
            if (sig(i) > opts.rank_tol * sig(0)) ++r;
    }
    if (r > opts.rank_cap)
        throw WitnessError("fredholm_witness: defect from the identity has rank " +
                           std::to_string(r) + ", exceeding the cap " +
                           std::to_string(opts.rank_cap) +
                           "; the family is not a finite perturbation of the identity");

    auto U = std::make_shared<MatrixXcd>(svd.matrixU().leftCols(r));
    auto Fs = std::make_shared<MatrixXcd>(std::move(F));
    double cond_cap = opts.cond_cap;

    FiniteTypeWitness w;
    w.dim_E = n;
    w.dim_L = r;
    w.eval = [M = std::move(M), U, Fs, cond_cap](cd s) {
        MatrixXcd X = M(s) + *Fs;
        Eigen::PartialPivLU<MatrixXcd> lu(X);
        double rc = lu.rcond();
        if (!(rc > 1.0 / cond_cap))
            throw WitnessError("fredholm_witness: deformed identity is ill conditioned "
                               "(rcond ~ " + std::to_string(rc) + "); the witness is not "
                               "valid at this parameter");
        return MatrixXcd(lu.solve(*U));
    };
    return w;
}

FiniteTypeWitness fredholm_split_witness(const AnalyticLinearFamily& family,
                                         const std::vector<int>& block1,
                                         const std::vector<int>& block2,
                                         std::function<MatrixXcd(cd)> witness2,
                                         int dim_L2,
                                         const std::vector<int>& reduction_rows,
                                         cd s0, const WitnessOptions& opts) {
    const int n = family.dim_E();
    const int n1 = static_cast<int>(block1.size());
    const int n2 = static_cast<int>(block2.size());
    if (n1 + n2 != n)
        throw DomainError("fredholm_split_witness: blocks must partition the coordinates");
    if (dim_L2 > 0 && !witness2)
        throw DomainError("fredholm_split_witness: missing witness for the second block");
    const int L = n1 + dim_L2;
    const int m = static_cast<int>(reduction_rows.size());
    if (m < L - opts.rank_cap)
        throw WitnessError("fredholm_split_witness: too few reduction equations for the "
                           "requested defect cap");

    // T(s) = [inclusion of block 1 | lift of the block-2 witness]
    auto make_T = [&family, block1, block2, witness2, dim_L2, n, n1, n2](cd s) {
        MatrixXcd T = MatrixXcd::Zero(n, n1 + dim_L2);
        for (int i = 0; i < n1; ++i) T(block1[i], i) = 1.0;
        if (dim_L2 > 0) {
            MatrixXcd nu = witness2(s);
            if (nu.rows() != n2 || nu.cols() != dim_L2)
                throw DomainError("fredholm_split_witness: block-2 witness has wrong shape");
            for (int i = 0; i < n2; ++i) T.row(block2[i]).tail(dim_L2) = nu.row(i);
        }
        return T;
    };

    MatrixXcd A0 = family.rows_times(s0, reduction_rows, make_T(s0));
    const AnalyticLinearFamily* fam = &family;
    double cond_cap = opts.cond_cap;

    if (m == L) {
        // square reduced family: try the identity-defect decomposition first,
        // so that a trivial second block recovers the plain square witness
        MatrixXcd F = MatrixXcd::Identity(L, L) - A0;
        Eigen::BDCSVD<MatrixXcd> svd(F, Eigen::ComputeThinU);
        const auto& sig = svd.singularValues();
        int r = 0;
        if (sig.size() > 0 && sig(0) > 0.0)
            for (int i = 0; i < sig.size(); ++i)
                if (sig(i) > opts.rank_tol * sig(0)) ++r;
        if (r <= opts.rank_cap) {
            auto U = std::make_shared<MatrixXcd>(svd.matrixU().leftCols(r));
            auto Fs = std::make_shared<MatrixXcd>(std::move(F));
            FiniteTypeWitness w;
            w.dim_E = n;
            w.dim_L = r;
            w.eval = [fam, make_T, reduction_rows, U, Fs, cond_cap, r](cd s) {
                MatrixXcd T = make_T(s);
                if (r == 0) return MatrixXcd(T.rows(), 0);
                MatrixXcd X = fam->rows_times(s, reduction_rows, T) + *Fs;
                Eigen::PartialPivLU<MatrixXcd> lu(X);
                double rc = lu.rcond();
                if (!(rc > 1.0 / cond_cap))
                    throw WitnessError("fredholm_split_witness: deformed identity is "
                                       "ill conditioned (rcond ~ " + std::to_string(rc) +
                                       "); the witness is not valid at this parameter");
                return MatrixXcd(T * lu.solve(*U));
            };
            return w;
        }
        // fall through to the pseudoinverse route when the defect is large
    }

    /*
     * Truncated pseudoinverse through the self-adjoint eigenproblem of A*A:
     * with V_r the eigenvectors above the rank cutoff and V_q the rest,
     * D = V_r S_r^{-2} V_r* A0* satisfies D A0 = V_r V_r* = I - F where
     * F = V_q V_q* projects onto the numerical kernel of A(s0).  The
     * witness is valid where X_s = D A(s) + F stays invertible, which
     * requires every direction that degenerates anywhere in the working
     * region to already be near-degenerate at s0 (hence rank_tol should be
     * chosen at the scale of the family's drift, not machine precision).
     */
    MatrixXcd G = A0.adjoint() * A0;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(G);
    if (eig.info() != Eigen::Success)
        throw WitnessError("fredholm_split_witness: eigensolver failed on the Gram matrix");
    VectorXd ev = eig.eigenvalues(); // ascending
    double top = ev.size() ? std::max(ev(ev.size() - 1), 0.0) : 0.0;
    // forming A*A squares the singular values, so its eigenvalues carry
    // roundoff of order eps * |A|^2; never cut below that noise floor
    double cut = std::max(opts.rank_tol * opts.rank_tol, 1e-12) * top;
    int q = 0;
    while (q < ev.size() && ev(q) <= cut) ++q;
    const int r = L - q;
    if (q > opts.rank_cap)
        throw WitnessError("fredholm_split_witness: reduction defect has dimension " +
                           std::to_string(q) + ", exceeding the cap " +
                           std::to_string(opts.rank_cap) +
                           "; the reduced system is not left invertible modulo finite rank");

    MatrixXcd Vq = eig.eigenvectors().leftCols(q);
    MatrixXcd Vr = eig.eigenvectors().rightCols(r);
    VectorXd inv_s2(r);
    for (int i = 0; i < r; ++i) inv_s2(i) = 1.0 / ev(q + i);
    auto D = std::make_shared<MatrixXcd>(Vr * inv_s2.asDiagonal() * Vr.adjoint() * A0.adjoint());
    auto Fproj = std::make_shared<MatrixXcd>(Vq * Vq.adjoint());
    auto UF = std::make_shared<MatrixXcd>(std::move(Vq));

    FiniteTypeWitness w;
    w.dim_E = n;
    w.dim_L = q;
    w.eval = [fam, make_T, reduction_rows, D, Fproj, UF, cond_cap, q](cd s) {
        MatrixXcd T = make_T(s);
        if (q == 0) return MatrixXcd(T.rows(), 0);
        MatrixXcd X = *D * fam->rows_times(s, reduction_rows, T) + *Fproj;
        Eigen::PartialPivLU<MatrixXcd> lu(X);
        double rc = lu.rcond();
        if (!(rc > 1.0 / cond_cap))
            throw WitnessError("fredholm_split_witness: deformed identity is ill "
                               "conditioned (rcond ~ " + std::to_string(rc) +
                               "); the witness is not valid at this parameter");
        return MatrixXcd(T * lu.solve(*UF));
    };
    return w;
}

// ---------------------------------------------------------------------------
// continuation engine

namespace {

// transpose of the cofactor matrix, by explicit minors; only used for small k
MatrixXcd adjugate(const MatrixXcd& A) {
    const int n = static_cast<int>(A.rows());
    if (n == 1) return MatrixXcd::Ones(1, 1);
    MatrixXcd adj(n, n);
    MatrixXcd minor(n - 1, n - 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int r = 0, rr = 0; r < n; ++r) {
                if (r == i) continue;
                for (int c = 0, cc = 0; c < n; ++c) {
                    if (c == j) continue;
                    minor(rr, cc++) = A(r, c);
                }
                ++rr;
            }
            cd cof = minor.partialPivLu().determinant();
            if ((i + j) % 2) cof = -cof;
            adj(j, i) = cof;
        }
    }
    return adj;
}

struct Key {
    double re, im;
    bool operator<(const Key& o) const {
        if (re != o.re) return re < o.re;
        return im < o.im;
    }
};

} // namespace

struct EngineState {
    const AnalyticLinearFamily* family = nullptr;
    FiniteTypeWitness witness;
    std::vector<int> piv;  // witness columns fixed at the probe stage
    std::vector<int> rows; // selected equations
    int k = 0;
    double d_scale = 1.0;  // |d| at the anchor sample
    double n_scale = 1.0;
    ContinuationOptions opts;

    mutable std::mutex mu;
    mutable std::map<Key, std::pair<VectorXcd, cd>> cache;

    std::pair<VectorXcd, cd> eval(cd s) const {
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = cache.find({s.real(), s.imag()});
            if (it != cache.end()) return it->second;
        }
        std::pair<VectorXcd, cd> out;
        if (k == 0) {
            out = {VectorXcd::Zero(family->dim_E()), cd(1.0)};
        } else {
            MatrixXcd lam = witness.eval(s);
            MatrixXcd lamk(lam.rows(), k);
            for (int j = 0; j < k; ++j) lamk.col(j) = lam.col(piv[j]);
            MatrixXcd Ahat = family->rows_times(s, rows, lamk);
            VectorXcd bhat(k);
            for (int i = 0; i < k; ++i) bhat(i) = family->rhs(s, rows[i]);
            if (k <= opts.adjugate_max) {
                cd d = Ahat.partialPivLu().determinant();
                out = {VectorXcd(lamk * (adjugate(Ahat) * bhat)), d};
            } else {
                Eigen::PartialPivLU<MatrixXcd> lu(Ahat);
                cd d = lu.determinant();
                out = {VectorXcd(lamk * (lu.solve(bhat) * d)), d};
            }
        }
        std::lock_guard<std::mutex> lock(mu);
        cache.insert({{s.real(), s.imag()}, out});
        return out;
    }

    double scaled_residual(cd s, const VectorXcd& v) const {
        VectorXcd res = family->residuals(s, v);
        VectorXd nrm = family->row_norms(s);
        double vn = v.norm(), worst = 0.0;
        for (int i = 0; i < res.size(); ++i)
            worst = std::max(worst, std::abs(res(i)) / (1.0 + nrm(i) * vn));
        return worst;
    }
};

int MeromorphicSolution::dim_E() const { return st_->family->dim_E(); }

cd MeromorphicSolution::denominator(cd s) const { return st_->eval(s).second; }

VectorXcd MeromorphicSolution::numerator(cd s) const { return st_->eval(s).first; }

double MeromorphicSolution::denominator_scale() const { return st_->d_scale; }

VectorXcd MeromorphicSolution::value(cd s) const {
    auto [N, d] = st_->eval(s);
    if (std::abs(d) < st_->opts.denom_floor * st_->d_scale)
        throw DomainError("MeromorphicSolution::value: denominator vanishes at this "
                          "parameter (pole of the representation)");
    return N / d;
}

double MeromorphicSolution::max_scaled_residual(cd s) const {
    return st_->scaled_residual(s, value(s));
}

bool MeromorphicSolution::removable_candidate(cd s) const {
    auto [N, d] = st_->eval(s);
    return std::abs(d) < st_->opts.denom_floor * st_->d_scale &&
           N.norm() < st_->opts.denom_floor * st_->n_scale;
}

std::string MeromorphicSolution::sample_grid_json(const std::vector<cd>& pts) const {
    nlohmann::json arr = nlohmann::json::array();
    auto pack = [](cd z) { return nlohmann::json::array({z.real(), z.imag()}); };
    for (cd s : pts) {
        auto [N, d] = st_->eval(s);
        nlohmann::json rec;
        rec["s"] = pack(s);
        rec["d"] = pack(d);
        nlohmann::json nj = nlohmann::json::array();
        for (int i = 0; i < N.size(); ++i) nj.push_back(pack(N(i)));
        rec["N"] = nj;
        bool pole = std::abs(d) < st_->opts.denom_floor * st_->d_scale;
        if (pole) {
            rec["v"] = nullptr;
            rec["residual"] = nullptr;
            rec["removable_candidate"] = removable_candidate(s);
        } else {
            VectorXcd v = N / d;
            nlohmann::json vj = nlohmann::json::array();
            for (int i = 0; i < v.size(); ++i) vj.push_back(pack(v(i)));
            rec["v"] = vj;
            rec["residual"] = st_->scaled_residual(s, v);
        }
        arr.push_back(rec);
    }
    return arr.dump();
}

MeromorphicSolution continue_unique_solution(const AnalyticLinearFamily& family,
                                             const FiniteTypeWitness& witness,
                                             const std::vector<cd>& unq_samples,
                                             const std::vector<cd>& probe_grid,
                                             const ContinuationOptions& opts) {
    if (witness.dim_E != family.dim_E())
        throw DomainError("continue_unique_solution: witness and family dimensions differ");
    if (probe_grid.empty() || unq_samples.empty())
        throw DomainError("continue_unique_solution: probe grid and uniqueness samples "
                          "must be nonempty");

    auto st = std::make_shared<EngineState>();
    st->family = &family;
    st->witness = witness;
    st->opts = opts;

    // probe the witness rank; prefer higher rank, then better conditioning
    int best_k = -1;
    double best_cond = 0.0;
    cd s1{};
    MatrixXcd lam1;
    for (cd s : probe_grid) {
        MatrixXcd lam = witness.eval(s);
        if (lam.cols() == 0) {
            if (best_k < 0) { best_k = 0; s1 = s; lam1 = lam; }
            continue;
        }
        Eigen::BDCSVD<MatrixXcd> svd(lam);
        const auto& sig = svd.singularValues();
        int kk = 0;
        if (sig.size() > 0 && sig(0) > 0.0)
            for (int i = 0; i < sig.size(); ++i)
                if (sig(i) > opts.rank_tol * sig(0)) ++kk;
        double cond = kk > 0 ? sig(0) / sig(kk - 1) : 0.0;
        if (kk > best_k || (kk == best_k && kk > 0 && cond < best_cond)) {
            best_k = kk;
            best_cond = cond;
            s1 = s;
            lam1 = lam;
        }
    }
    st->k = best_k;

    if (best_k == 0) {
        // the witness image is trivial: the only candidate is v = 0, which must
        // then actually solve the system at the uniqueness samples
        st->piv.clear();
        st->rows.clear();
        st->d_scale = 1.0;
        st->n_scale = 1.0;
        if (opts.audit) {
            for (cd s : unq_samples) {
                double res = st->scaled_residual(s, VectorXcd::Zero(family.dim_E()));
                if (res > opts.residual_tol)
                    throw WitnessError("continue_unique_solution: witness image is zero "
                                       "but v = 0 leaves residual " + std::to_string(res));
            }
        }
        MeromorphicSolution sol;
        sol.st_ = st;
        return sol;
    }

    const int k = best_k;
    if (family.num_equations() < k)
        throw SingularSystemError("continue_unique_solution: fewer equations than the "
                                  "witness rank; the solution cannot be unique");

    // pivot columns and dual functionals at the best probe: lam1 P = Q R with
    // nu = R^{-1} Q* satisfying nu * lam1[:, piv] = I
    Eigen::ColPivHouseholderQR<MatrixXcd> qr(lam1);
    auto perm = qr.colsPermutation().indices();
    st->piv.assign(perm.data(), perm.data() + k);
    MatrixXcd Q = qr.householderQ() * MatrixXcd::Identity(lam1.rows(), k);
    MatrixXcd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    MatrixXcd nu = R.triangularView<Eigen::Upper>().solve(Q.adjoint());

    // certify the pivots on the uniqueness set through D1, and anchor there
    cd s2{};
    double best_d1 = -1.0;
    for (cd s : unq_samples) {
        MatrixXcd lam = witness.eval(s);
        MatrixXcd lamk(lam.rows(), k);
        for (int j = 0; j < k; ++j) lamk.col(j) = lam.col(st->piv[j]);
        double d1 = std::abs((nu * lamk).partialPivLu().determinant());
        if (d1 > best_d1) {
            best_d1 = d1;
            s2 = s;
        }
    }
    if (!(best_d1 > opts.rank_tol))
        throw SingularSystemError("continue_unique_solution: the witness pivots degenerate "
                                  "on the whole uniqueness sample (max |D1| = " +
                                  std::to_string(best_d1) + ")");

    // select k equations by row pivoting on the composed matrix at the anchor
    MatrixXcd lam2 = witness.eval(s2);
    MatrixXcd lamk2(lam2.rows(), k);
    for (int j = 0; j < k; ++j) lamk2.col(j) = lam2.col(st->piv[j]);
    std::vector<int> all(family.num_equations());
    for (int i = 0; i < family.num_equations(); ++i) all[i] = i;
    MatrixXcd B = family.rows_times(s2, all, lamk2);
    Eigen::ColPivHouseholderQR<MatrixXcd> rqr(B.adjoint());
    auto rperm = rqr.colsPermutation().indices();
    st->rows.assign(rperm.data(), rperm.data() + k);
    std::sort(st->rows.begin(), st->rows.end());

    cd d2 = family.rows_times(s2, st->rows, lamk2).partialPivLu().determinant();
    if (std::abs(d2) == 0.0)
        throw SingularSystemError("continue_unique_solution: no equation subset makes the "
                                  "reduced system invertible at the anchor sample; the "
                                  "solution is not unique there");

    auto [N2, dd2] = st->eval(s2);
    st->d_scale = std::abs(dd2);
    st->n_scale = std::max(N2.norm(), 1.0);

    if (opts.audit) {
        for (cd s : unq_samples) {
            auto [N, d] = st->eval(s);
            if (std::abs(d) < opts.denom_floor * st->d_scale) continue;
            double res = st->scaled_residual(s, N / d);
            if (res > opts.residual_tol)
                throw WitnessError("continue_unique_solution: full-system residual " +
                                   std::to_string(res) + " exceeds the tolerance at a "
                                   "uniqueness sample with |d| well above the floor; the "
                                   "witness does not contain the solution there");
        }
    }

    MeromorphicSolution sol;
    sol.st_ = st;
    return sol;
}

} // namespace eisen::merocont
