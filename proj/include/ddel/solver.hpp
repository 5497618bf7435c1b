#pragma once

#include "ddel/constraint_space.hpp"
#include "ddel/data_set.hpp"

#include <cstdint>
#include <vector>

namespace ddel {

/// How the alternating solver picks its starting data assignment.
enum class InitKind {
    Classical,  ///< assign data nearest to the linear-elastic solution
    Zero,       ///< assign data nearest to the zero state
    Random,     ///< random data states, with multiple restarts
};

struct SolverConfig {
    int max_iters = 500;
    double tol = 1e-12;        ///< relative change of the objective that counts as converged
    double zero_floor = 1e-22; ///< absolute objective floor (relative to field size)
    InitKind init = InitKind::Classical;
    std::uint64_t seed = 0;
    int restarts = 8;  ///< independent starts for random init (seed, seed+1, ...)
    int threads = 1;
};

struct SolverResult {
    StateField z;  ///< admissible field (in E)
    StateField y;  ///< assigned data field (in D)
    double d2 = 0.0;
    int iterations = 0;
    std::vector<double> trace;  ///< objective after each assignment step
    bool converged = false;
    std::uint64_t seed_used = 0;
};

/// Alternate between projecting the data assignment onto E and reassigning each
/// element to its nearest data state, until the objective
///   sum_e w_e d^2(z_e, y_e)
/// stops decreasing.  With random init the best of `restarts` runs is returned
/// (ties broken toward the lowest seed).
SolverResult solve_data_driven(const ConstraintSpace& space, const MaterialDataSet& data,
                               const SolverConfig& config = {});

/// Distance from E to the data set: exact via one linear solve when the data
/// set is an unconstrained linear graph (the classical solution attains it),
/// otherwise via the alternating solver.  The space's metric must match the
/// data set's.
SolverResult distance_to_dataset(const ConstraintSpace& space, const MaterialDataSet& data,
                                 const SolverConfig& config = {});

/// One row of a sampling convergence study.
struct ConvergenceRow {
    double rho = 0.0;    ///< sampling resolution
    double t = 0.0;      ///< sampling noise amplitude
    double d2 = 0.0;     ///< final objective on the sampled data
    double error = 0.0;  ///< energy-norm distance to the reference field
};

/// Solve the same boundary-value problem on point clouds sampled from
/// `analytic` at each (rho, t) and compare against `reference` (typically the
/// solution with the analytic data set).  Row i samples with seed config.seed+i.
std::vector<ConvergenceRow> convergence_study(const ConstraintSpace& space,
                                              const MaterialDataSet& analytic,
                                              const std::vector<std::array<double, 2>>& box,
                                              const std::vector<std::array<double, 2>>& rho_t,
                                              const StateField& reference,
                                              const SolverConfig& config = {});

}  // namespace ddel
