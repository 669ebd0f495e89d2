#pragma once

#include <cstdint>

#include "bifrank/hypergradient.hpp"
#include "bifrank/point.hpp"

namespace bifrank {

/// Running estimates of one solver run.
///
/// d is the tracked gradient. y is the inner iterate (bilevel) or the tracked
/// inner-map value (compositional). prev_x and prev_y hold the previous
/// iterates; the solvers maintain them, the tracker functions only read
/// the arguments they are given.
struct TrackerState {
  Point d;
  Point y;
  Point prev_x;
  Point prev_y;
};

/// y <- y - delta grad_y g(x_prev, y; xi). delta must lie in (0, 1].
void inner_sgd_step(CountedBilevel& calls, TrackerState& state, const Point& x_prev, double delta,
                    RngStream& xi);

/// d <- (1 - rho)(d - h(x_prev, y_prev)) + h(x_t, y_t), both hypergradient
/// samples taken at the same theta and Hessian draws (the streams are
/// replayed). When (x_t, y_t) equals (x_prev, y_prev) one sample is reused.
void bilevel_track(CountedBilevel& calls, TrackerState& state, const Point& x_t,
                   const Point& x_prev, const Point& y_t, const Point& y_prev, double rho,
                   std::uint64_t k, RngStream& theta, RngStream& hessian);

/// y <- (1 - delta)(y - h(x_prev; xi)) + h(x_t; xi) with one shared xi draw.
void compositional_track_y(CountedCompositional& calls, TrackerState& state, const Point& x_t,
                           const Point& x_prev, double delta, RngStream& xi);

/// d <- (1 - rho)(d - gC(x_prev, y_prev)) + gC(x_t, y_t), where
/// gC(x, y) = grad h(x; xi)^T grad f(y; theta), with shared theta and xi draws.
void compositional_track_d(CountedCompositional& calls, TrackerState& state, const Point& x_t,
                           const Point& x_prev, const Point& y_t, const Point& y_prev, double rho,
                           RngStream& theta, RngStream& xi);

/// grad h(x; xi)^T grad f(y; theta), one draw from each stream.
Point compositional_gradient_sample(CountedCompositional& calls, const Point& x, const Point& y,
                                    RngStream& theta, RngStream& xi);

}  // namespace bifrank
