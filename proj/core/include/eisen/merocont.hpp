#pragma once

#include "eisen/rational_solve.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

/*
 * Numeric continuation engine.  A family of linear systems depending
 * analytically on one complex parameter, together with a finite-type witness
 * (an analytic matrix family whose image contains every solution), is turned
 * into a meromorphic representation v(s) = N(s) / d(s): a witness-rank probe
 * fixes pivot columns and dual functionals, a uniqueness sample fixes a
 * square subsystem, and Cramer's rule makes numerator and denominator
 * analytic wherever the inputs are.
 */

namespace eisen::merocont {

using cd = std::complex<double>;

// equations mu_i(s) v = c_i(s) on a finite coordinate space; the batch hooks
// have generic row-by-row defaults and exist to be overridden with structured
// fast paths
class AnalyticLinearFamily {
public:
    AnalyticLinearFamily(int dim_E, int num_equations)
        : dim_E_(dim_E), num_equations_(num_equations) {}
    virtual ~AnalyticLinearFamily() = default;

    int dim_E() const { return dim_E_; }
    int num_equations() const { return num_equations_; }

    virtual Eigen::RowVectorXcd row(cd s, int i) const = 0;
    virtual cd rhs(cd s, int i) const = 0;

    virtual Eigen::MatrixXcd matrix(cd s) const;
    virtual Eigen::VectorXcd rhs_all(cd s) const;
    // M_sel(s) * X for a subset of equations
    virtual Eigen::MatrixXcd rows_times(cd s, const std::vector<int>& sel,
                                        const Eigen::MatrixXcd& X) const;
    // mu_i(s) v - c_i(s) over all equations
    virtual Eigen::VectorXcd residuals(cd s, const Eigen::VectorXcd& v) const;
    // norms of the equation covectors, for residual scales
    virtual Eigen::VectorXd row_norms(cd s) const;

protected:
    int dim_E_;
    int num_equations_;
};

// dense family given by whole-matrix callables (caches the last evaluation)
class CallableFamily : public AnalyticLinearFamily {
public:
    CallableFamily(int dim_E, int num_equations,
                   std::function<Eigen::MatrixXcd(cd)> mat,
                   std::function<Eigen::VectorXcd(cd)> rhs);

    Eigen::RowVectorXcd row(cd s, int i) const override;
    cd rhs(cd s, int i) const override;
    Eigen::MatrixXcd matrix(cd s) const override;
    Eigen::VectorXcd rhs_all(cd s) const override;

private:
    std::function<Eigen::MatrixXcd(cd)> mat_fn_;
    std::function<Eigen::VectorXcd(cd)> rhs_fn_;
    struct Cache;
    std::shared_ptr<Cache> cache_;
};

// numeric view of an exact polynomial family (cross-mode consistency)
class RationalNumericFamily : public AnalyticLinearFamily {
public:
    explicit RationalNumericFamily(RationalFamily fam);
    Eigen::RowVectorXcd row(cd s, int i) const override;
    cd rhs(cd s, int i) const override;

private:
    RationalFamily fam_;
};

// analytic matrix family whose image contains every solution of the system
struct FiniteTypeWitness {
    int dim_E = 0;
    int dim_L = 0;
    std::function<Eigen::MatrixXcd(cd)> eval; // dim_E x dim_L

    static FiniteTypeWitness trivial(int dim_E);
};

struct WitnessOptions {
    double rank_tol = 1e-10; // singular values below rank_tol * sigma_max are noise
    double cond_cap = 1e10;  // invertibility guard for the deformed identity
    int rank_cap = 64;       // refuse splittings with larger defect
};

/*
 * Witness for a square family that is a low-rank perturbation of the
 * identity near s0: with F = I - M(s0) of numerical rank r, the kernel of
 * M(s) = X_s - F lies in X_s^{-1} Im F for X_s = M(s) + F, which equals the
 * identity at s0.  The witness is s -> X_s^{-1} U with U the top r singular
 * vectors of F, valid while X_s stays well conditioned.
 */
FiniteTypeWitness fredholm_witness(std::function<Eigen::MatrixXcd(cd)> M, cd s0,
                                   const WitnessOptions& opts = {});

/*
 * Witness for a split coordinate space E = B1 (+) B2 when the solutions'
 * B2-part is already captured by a small analytic family nu_s (dim B2 x L2):
 * solutions are searched in the image of T(s) = [incl_B1 | lift of nu_s], and
 * the designated reduction equations composed with T(s) form a family A(s)
 * that is left-invertible modulo a small defect at s0.  When A is square and
 * close to the identity the plain square construction applies to it directly
 * (so a trivial second block recovers fredholm_witness); otherwise, with D a
 * truncated pseudoinverse of A(s0) and F the projector onto its numerical
 * kernel (DA(s0) = I - F), the witness is s -> T(s) X_s^{-1} U_F for
 * X_s = DA(s) + F.  The family reference must outlive the witness.
 */
FiniteTypeWitness fredholm_split_witness(const AnalyticLinearFamily& family,
                                         const std::vector<int>& block1,
                                         const std::vector<int>& block2,
                                         std::function<Eigen::MatrixXcd(cd)> witness2,
                                         int dim_L2,
                                         const std::vector<int>& reduction_rows,
                                         cd s0, const WitnessOptions& opts = {});

struct ContinuationOptions {
    double rank_tol = 1e-10;   // witness rank cutoff at the probe stage
    double residual_tol = 1e-6; // audit: |res_i| <= tol * (1 + |mu_i| |v|)
    double denom_floor = 1e-10; // |d| below floor * scale counts as pole-adjacent
    int adjugate_max = 12;      // cofactor adjugate up to this size, LU beyond
    bool audit = true;          // residual audit at the uniqueness samples
};

struct EngineState; // internal

/*
 * v(s) = N(s)/d(s) with N, d built from analytic pieces.  Evaluations are
 * cached per parameter point; all methods are safe to call concurrently.
 */
class MeromorphicSolution {
public:
    int dim_E() const;
    cd denominator(cd s) const;
    Eigen::VectorXcd numerator(cd s) const;
    // N/d; throws DomainError when |d| is below the pole floor
    Eigen::VectorXcd value(cd s) const;
    // largest equation residual of N/d, scaled by 1 + |mu_i| |v|
    double max_scaled_residual(cd s) const;
    // both N and d vanish at the working scale: the representation's
    // singularity carries no information about the actual function
    bool removable_candidate(cd s) const;
    double denominator_scale() const;

    // JSON array of {s, N, d, v, residual} records over the sample points
    std::string sample_grid_json(const std::vector<cd>& pts) const;

private:
    friend MeromorphicSolution continue_unique_solution(const AnalyticLinearFamily&,
                                                        const FiniteTypeWitness&,
                                                        const std::vector<cd>&,
                                                        const std::vector<cd>&,
                                                        const ContinuationOptions&);
    std::shared_ptr<EngineState> st_;
};

/*
 * The continuation algorithm: probe the witness rank over probe_grid, extract
 * pivot columns and dual functionals by column-pivoted QR at the best probe,
 * certify them at a uniqueness sample via D1, select a square subsystem by
 * row-pivoted QR there, and return Cramer numerator and determinant
 * denominator.  unq_samples must lie where the caller knows the full system
 * has exactly one solution.  The family must outlive the returned solution.
 */
MeromorphicSolution continue_unique_solution(const AnalyticLinearFamily& family,
                                             const FiniteTypeWitness& witness,
                                             const std::vector<cd>& unq_samples,
                                             const std::vector<cd>& probe_grid,
                                             const ContinuationOptions& opts = {});

} // namespace eisen::merocont
