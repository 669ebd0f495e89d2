#pragma once

#include <cstdint>

namespace bifrank {

/// Which convergence regime the step sizes are taken from.
enum class Regime { SbfwConvex, SbfwNonconvex, ScfwConvex, ScfwNonconvex };

const char* to_string(Regime regime);

struct ScheduleSpec {
  Regime regime = Regime::SbfwConvex;
  double mu_g = 1.0;        // strong convexity of the inner problem
  double L_g = 1.0;         // smoothness of the inner problem
  double sigma_g_sq = 0.0;  // variance bound of the inner stochastic gradient
  std::uint64_t horizon = 1;

  /// Throws ConfigError when mu_g <= 0, L_g < mu_g, sigma_g_sq < 0 or horizon < 1.
  void validate() const;
};

/// Step sizes and Hessian sample count for one iteration.
struct StepSizes {
  double delta = 1.0;  // inner step (SBFW) or inner-map tracking weight (SCFW)
  double rho = 1.0;    // gradient tracking weight
  double eta = 1.0;    // Frank-Wolfe step
  std::uint64_t k = 0; // Neumann horizon; 0 for compositional regimes
};

/// Inner step scale a0 = min{2/(3 mu_g), mu_g / (2 (1 + sigma_g^2) L_g^2)}.
[[nodiscard]] double inner_step_scale(const ScheduleSpec& spec);

/// Step sizes at iteration t >= 1.
///
///   SbfwConvex:    delta = a0/t^{2/3}, rho = 2/t^{2/3}, eta = 2/(t+1),
///                  k = (2 L_g / (3 mu_g)) log(1+t)
///   SbfwNonconvex: delta = a0/t^{1/2}, rho = 2/t^{1/2}, eta = 2/(T+1)^{3/4},
///                  k = (L_g / (2 mu_g)) log(1+t)
///   ScfwConvex:    delta = rho = 2/t,       eta = 2/(t+1)
///   ScfwNonconvex: delta = rho = 2/t^{2/3}, eta = 2/(T+1)^{2/3}
///
/// delta, rho and eta are clamped to (0, 1]; k is rounded up with a floor of 1.
[[nodiscard]] StepSizes schedule(const ScheduleSpec& spec, std::uint64_t t);

}  // namespace bifrank
