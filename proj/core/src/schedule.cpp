#include "bifrank/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bifrank/errors.hpp"

namespace bifrank {

const char* to_string(Regime regime) {
  switch (regime) {
    case Regime::SbfwConvex:
      return "sbfw_convex";
    case Regime::SbfwNonconvex:
      return "sbfw_nonconvex";
    case Regime::ScfwConvex:
      return "scfw_convex";
    case Regime::ScfwNonconvex:
      return "scfw_nonconvex";
  }
  return "unknown";
}

void ScheduleSpec::validate() const {
  if (!(mu_g > 0.0) || !std::isfinite(mu_g)) {
    throw ConfigError("schedule: mu_g must be positive, got " + std::to_string(mu_g));
  }
  if (!(L_g >= mu_g) || !std::isfinite(L_g)) {
    throw ConfigError("schedule: L_g must be >= mu_g, got L_g=" + std::to_string(L_g) +
                      " mu_g=" + std::to_string(mu_g));
  }
  if (!(sigma_g_sq >= 0.0) || !std::isfinite(sigma_g_sq)) {
    throw ConfigError("schedule: sigma_g_sq must be non-negative");
  }
  if (horizon < 1) throw ConfigError("schedule: horizon must be >= 1");
}

double inner_step_scale(const ScheduleSpec& spec) {
  spec.validate();
  return std::min(2.0 / (3.0 * spec.mu_g),
                  spec.mu_g / (2.0 * (1.0 + spec.sigma_g_sq) * spec.L_g * spec.L_g));
}

namespace {

double clamp_step(double v) { return std::min(1.0, v); }

std::uint64_t sample_count(double real_k) {
  const double k = std::ceil(real_k);
  return k < 1.0 ? 1 : static_cast<std::uint64_t>(k);
}

}  // namespace

StepSizes schedule(const ScheduleSpec& spec, std::uint64_t t) {
  spec.validate();
  if (t < 1) throw UsageError("schedule: iteration index must be >= 1");
  const double td = static_cast<double>(t);
  const double T1 = static_cast<double>(spec.horizon) + 1.0;
  const double ratio = spec.L_g / spec.mu_g;
  StepSizes out;
  switch (spec.regime) {
    case Regime::SbfwConvex: {
      const double a0 = inner_step_scale(spec);
      out.delta = clamp_step(a0 / std::pow(td, 2.0 / 3.0));
      out.rho = clamp_step(2.0 / std::pow(td, 2.0 / 3.0));
      out.eta = clamp_step(2.0 / (td + 1.0));
      out.k = sample_count((2.0 * ratio / 3.0) * std::log(1.0 + td));
      break;
    }
    case Regime::SbfwNonconvex: {
      const double a0 = inner_step_scale(spec);
      out.delta = clamp_step(a0 / std::sqrt(td));
      out.rho = clamp_step(2.0 / std::sqrt(td));
      out.eta = clamp_step(2.0 / std::pow(T1, 0.75));
      out.k = sample_count((ratio / 2.0) * std::log(1.0 + td));
      break;
    }
    case Regime::ScfwConvex:
      out.delta = clamp_step(2.0 / td);
      out.rho = out.delta;
      out.eta = clamp_step(2.0 / (td + 1.0));
      out.k = 0;
      break;
    case Regime::ScfwNonconvex:
      out.delta = clamp_step(2.0 / std::pow(td, 2.0 / 3.0));
      out.rho = out.delta;
      out.eta = clamp_step(2.0 / std::pow(T1, 2.0 / 3.0));
      out.k = 0;
      break;
  }
  return out;
}

}  // namespace bifrank
