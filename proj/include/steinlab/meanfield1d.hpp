#pragma once

#include "steinlab/gridconv.hpp"
#include "steinlab/measures.hpp"
#include "steinlab/models.hpp"

#include <string>
#include <vector>

namespace steinlab {

enum class FluxScheme { upwind, muscl };

std::string to_string(FluxScheme scheme);
FluxScheme parse_flux_scheme(const std::string& name);

/// Finite-volume options. `muscl` reconstructs face states with van Leer
/// limited slopes and advances with Heun's method (SSP-RK2); `upwind` is the
/// first-order scheme with forward Euler.
struct PdeOptions {
  FluxScheme scheme = FluxScheme::muscl;
  ConvolutionMethod convolution = ConvolutionMethod::automatic;
};

/// u = -(K' * rho + K * (V' rho)) at the n - 1 interior faces.
Vector face_velocity(const GridDensity1D& rho, const Potential& potential, const Kernel& kernel,
                     ConvolutionMethod method = ConvolutionMethod::automatic);

/// Largest step allowed by dt <= 0.5 dx / max |u| (infinite when u = 0).
double cfl_limit(const GridDensity1D& rho, const Potential& potential, const Kernel& kernel,
                 ConvolutionMethod method = ConvolutionMethod::automatic);

/// One conservative step of d/dt rho = d/dx(rho K * (rho' + V' rho)) with zero
/// flux at the boundary. Negative values are clipped and the mass restored.
/// Throws PreconditionError naming the admissible dt when the CFL bound fails.
GridDensity1D pde_step(const GridDensity1D& rho, const Potential& potential, const Kernel& kernel, double dt,
                       const PdeOptions& options = {});

/// Per-step diagnostics of a PDE run. Entry k refers to time times[k].
struct PdeDiagnostics {
  std::vector<double> times;
  std::vector<double> kl;           ///< KL(rho_t | rho_inf)
  std::vector<double> dissipation;  ///< stein_dissipation(rho_t)
  std::vector<double> mass;
  std::vector<double> second_moment;
};

struct PdeRun {
  PdeDiagnostics diagnostics;
  std::vector<double> snapshot_times;
  std::vector<GridDensity1D> snapshots;
  double dt = 0.0;
  /// max_k |(KL_{k+1} - KL_k)/dt_k + (D_k + D_{k+1})/2|
  double max_balance_error = 0.0;
  double mean_balance_error = 0.0;
  /// max_k (KL_{k+1} - KL_k)
  double max_kl_increase = 0.0;
  double max_mass_drift = 0.0;
};

/// Runs pde_step from t = 0 to t_max with fixed step dt (last step shortened),
/// recording diagnostics every step and a snapshot every `stride` steps.
PdeRun run_pde(const GridDensity1D& rho0, const GridDensity1D& rho_inf, const Potential& potential,
               const Kernel& kernel, double dt, double t_max, const PdeOptions& options = {}, int stride = 0);

/// (integral rho_inf phi^2 dx)^(1/2) with the cell-centred midpoint rule.
double q_functional(const GridField1D& phi, const TargetDensity& target);

struct CancellationResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double scale = 0.0;  ///< sum of the magnitudes of the terms entering lhs and rhs
};

/// lhs = integral f(phi) phi rho_inf with
/// f = (rho_inf' phi) * K' - ((rho_inf' phi) * K) V' - (rho_inf phi) * K'' + ((rho_inf phi) * K') V',
/// rhs = integral ((phi' rho_inf) * K)(phi' rho_inf); phi' by fourth-order central differences.
CancellationResult cancellation_residual(const GridField1D& phi, const TargetDensity& target, const Kernel& kernel,
                                         ConvolutionMethod method = ConvolutionMethod::automatic);

struct LinearizationReport {
  std::vector<double> eps;
  std::vector<double> kl;         ///< KL(rho_inf + eps h | rho_inf)
  std::vector<double> quadratic;  ///< eps^2 integral h^2 / (2 rho_inf)
  std::vector<double> residual;
  double fitted_order = 0.0;      ///< log-log slope of residual against eps (NaN if all residuals vanish)
};

/// Taylor remainder of KL around rho_inf along a mass-free perturbation h.
/// Throws PreconditionError if integral h != 0 or rho_inf + eps h < 0 for some eps.
LinearizationReport kl_linearization_residual(const GridField1D& h, const TargetDensity& target,
                                              const std::vector<double>& eps_list);

}  // namespace steinlab
