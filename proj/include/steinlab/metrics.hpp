#pragma once

#include "steinlab/gridconv.hpp"
#include "steinlab/measures.hpp"
#include "steinlab/models.hpp"

#include <string>

namespace steinlab {

/// Optimal test function of the (weighted) bounded-Lipschitz dual problem.
struct LPResult {
  double value = 0.0;
  Vector phi;                   ///< test-function values at the canonicalized atoms
  std::string status = "optimal";  ///< "optimal" or "iteration limit"
  long iterations = 0;
  std::string solver;           ///< "chain" (exact 1-D recursion) or "simplex"
};

enum class BLSolver { automatic, chain, simplex };

/// sup sum_i c_i phi_i over |phi_i| <= 1, |phi_i - phi_j| <= |x_i - x_j|, with
/// c_i = w_i (1 + V(x_i)), or c_i = w_i when `potential` is null. The unit ball
/// uses max(sup norm, Lipschitz constant) <= 1.
///
/// In 1-D the pairwise constraints reduce to neighbours and the problem is
/// solved exactly by a concave piecewise-linear recursion. Otherwise a dense
/// simplex runs on a growing set of pair constraints (pairs at distance >= 2
/// are never binding).
LPResult bl_weighted_norm(const SignedDiscreteMeasure& mu, const Potential* potential = nullptr,
                          BLSolver solver = BLSolver::automatic, long max_iterations = 200000);

/// Exhaustive search over phi on a uniform grid of [-1, 1] with `resolution`
/// values per atom, at most four atoms. Returns the best Lipschitz-feasible objective.
double bl_bruteforce_oracle(const SignedDiscreteMeasure& mu, const Potential* potential = nullptr, int resolution = 41);

/// True iff phi satisfies the constraints of `bl_weighted_norm` for `mu` up to `slack`.
bool bl_feasible(const SignedDiscreteMeasure& mu, const Vector& phi, double slack = 1e-9);

/// W_p between equally weighted 1-D ensembles of equal size (sorted coupling).
double wasserstein_1d(double p, const ParticleEnsemble& a, const ParticleEnsemble& b);

/// W_p between nonnegative 1-D measures of equal mass via quantile functions.
double wasserstein_1d(double p, const SignedDiscreteMeasure& a, const SignedDiscreteMeasure& b);

/// W_p between equally weighted ensembles of equal size in any dimension via
/// an exact assignment. N <= 4096.
double wasserstein_assignment(double p, const ParticleEnsemble& a, const ParticleEnsemble& b);

/// sum rho log(rho / sigma) dx with 0 log 0 = 0; +inf when rho > 1e-300 on a
/// cell with sigma <= 1e-300.
double kl_divergence(const GridDensity1D& rho, const GridDensity1D& sigma);

/// A quadratic form value together with the magnitude it should be compared against.
struct QuadraticForm {
  double value = 0.0;
  double scale = 0.0;  ///< integral of |s| (K * |s|) with the same quadrature
};

/// integral s (K * s) dx for s = rho' + rho V' (central differences).
QuadraticForm stein_dissipation(const GridDensity1D& rho, const Potential& potential, const Kernel& kernel,
                                ConvolutionMethod method = ConvolutionMethod::automatic);

/// The same quadratic form evaluated in the DFT domain of a zero-padded grid:
/// dx^2 / M sum_q |s_hat_q|^2 K_hat_q.
double quadratic_form_dft(const Vector& s, double dx, const Kernel& kernel);

}  // namespace steinlab
