#pragma once

#include <Eigen/Core>

#include <functional>

namespace ddel {

/// Golden-section minimization of a unimodal function on [lo, hi].
/// Returns the midpoint of the final bracket, which has width <= tol.
double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                               double tol = 1e-12, int max_iters = 200);

/// Derivative-free Nelder-Mead minimization started from `x0` with the given
/// initial simplex edge length.  Returns the best vertex found.
Eigen::VectorXd nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x0, double initial_step,
                                     double tol = 1e-14, int max_iters = 500);

}  // namespace ddel
