#include "bifrank/trackers.hpp"

#include <string>

#include "bifrank/errors.hpp"

namespace bifrank {

namespace {

void require_weight(double w, const char* what) {
  if (!(w > 0.0 && w <= 1.0)) {
    throw UsageError(std::string(what) + ": weight must lie in (0, 1], got " + std::to_string(w));
  }
}

// d <- (1 - w)(d - prev) + cur
void momentum_update(Point& d, const Point& prev, const Point& cur, double w) {
  require_same_shape(d, cur, "momentum_update");
  d.flat() = (1.0 - w) * (d.flat() - prev.flat()) + cur.flat();
}

}  // namespace

void inner_sgd_step(CountedBilevel& calls, TrackerState& state, const Point& x_prev, double delta,
                    RngStream& xi) {
  require_weight(delta, "inner_sgd_step");
  const Point g = calls.grad_y_g(x_prev, state.y, xi);
  require_same_shape(g, state.y, "inner_sgd_step");
  if (!g.all_finite()) {
    throw NumericError("inner_sgd_step: non-finite inner gradient at sample " +
                       std::to_string(calls.counter().inner));
  }
  state.y.flat() -= delta * g.flat();
  require_finite(state.y, "inner_sgd_step");
}

void bilevel_track(CountedBilevel& calls, TrackerState& state, const Point& x_t,
                   const Point& x_prev, const Point& y_t, const Point& y_prev, double rho,
                   std::uint64_t k, RngStream& theta, RngStream& hessian) {
  require_weight(rho, "bilevel_track");
  if (x_t == x_prev && y_t == y_prev) {
    // One sample serves both terms: (1 - rho)(d - h) + h.
    const Point h = hypergradient_sample(calls, x_t, y_t, k, theta, hessian);
    momentum_update(state.d, h, h, rho);
    return;
  }
  const RngStream theta_start = theta;
  const RngStream hessian_start = hessian;
  const Point h_prev = hypergradient_sample(calls, x_prev, y_prev, k, theta, hessian);
  theta = theta_start;
  hessian = hessian_start;
  const Point h_cur = hypergradient_sample(calls, x_t, y_t, k, theta, hessian);
  momentum_update(state.d, h_prev, h_cur, rho);
  require_finite(state.d, "bilevel_track");
}

void compositional_track_y(CountedCompositional& calls, TrackerState& state, const Point& x_t,
                           const Point& x_prev, double delta, RngStream& xi) {
  require_weight(delta, "compositional_track_y");
  if (x_t == x_prev) {
    const Point h = calls.sample_h(x_t, xi);
    momentum_update(state.y, h, h, delta);
    return;
  }
  const RngStream xi_start = xi;
  const Point h_prev = calls.sample_h(x_prev, xi);
  xi = xi_start;
  const Point h_cur = calls.sample_h(x_t, xi);
  momentum_update(state.y, h_prev, h_cur, delta);
  require_finite(state.y, "compositional_track_y");
}

Point compositional_gradient_sample(CountedCompositional& calls, const Point& x, const Point& y,
                                    RngStream& theta, RngStream& xi) {
  const Point gf = calls.grad_f(y, theta);
  return calls.vjp_h(x, gf, xi);
}

void compositional_track_d(CountedCompositional& calls, TrackerState& state, const Point& x_t,
                           const Point& x_prev, const Point& y_t, const Point& y_prev, double rho,
                           RngStream& theta, RngStream& xi) {
  require_weight(rho, "compositional_track_d");
  if (x_t == x_prev && y_t == y_prev) {
    const Point g = compositional_gradient_sample(calls, x_t, y_t, theta, xi);
    momentum_update(state.d, g, g, rho);
    return;
  }
  const RngStream theta_start = theta;
  const RngStream xi_start = xi;
  const Point g_prev = compositional_gradient_sample(calls, x_prev, y_prev, theta, xi);
  theta = theta_start;
  xi = xi_start;
  const Point g_cur = compositional_gradient_sample(calls, x_t, y_t, theta, xi);
  momentum_update(state.d, g_prev, g_cur, rho);
  require_finite(state.d, "compositional_track_d");
}

}  // namespace bifrank
