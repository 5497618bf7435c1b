#include "ddel/solver.hpp"

#include "ddel/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace ddel {

namespace {

/// Nearest data state for every element, evaluated in parallel but reduced in
/// element order so the result does not depend on the thread count.
std::vector<NearestResult> assign_nearest(const StateField& z, const MaterialDataSet& data,
                                          int threads) {
    std::vector<NearestResult> out(z.size());
    parallel_for(z.size(), threads, [&](int e) { out[e] = data.nearest(z[e]); });
    return out;
}

SolverResult run_once(const ConstraintSpace& space, const MaterialDataSet& data,
                      StateField y, const SolverConfig& config, std::uint64_t seed) {
    const bool finite_data = data.kind() == "point_cloud";
    std::vector<int> prev_indices;

    SolverResult result{space.zero_field(), std::move(y), 0.0, 0, {}, false, seed};
    double prev_d2 = -1.0;

    for (int iter = 1; iter <= config.max_iters; ++iter) {
        result.iterations = iter;
        result.z = space.project(result.y);

        const auto nearest = assign_nearest(result.z, data, config.threads);
        std::vector<LocalState> states;
        std::vector<int> indices;
        states.reserve(nearest.size());
        indices.reserve(nearest.size());
        double d2 = 0.0;
        for (int e = 0; e < result.z.size(); ++e) {
            d2 += result.z.weights()[e] * nearest[e].sq_distance;
            states.push_back(nearest[e].point);
            indices.push_back(nearest[e].index);
        }
        result.y = space.make_field(std::move(states));
        result.d2 = d2;
        result.trace.push_back(d2);

        if (finite_data && !prev_indices.empty() && indices == prev_indices) {
            result.converged = true;  // assignment fixed point
            break;
        }
        prev_indices = std::move(indices);

        if (d2 <= config.zero_floor * (1.0 + field_sq_norm(result.z))) {
            result.converged = true;  // objective vanished to round-off
            break;
        }
        if (prev_d2 >= 0.0 && std::abs(prev_d2 - d2) <= config.tol * std::max(prev_d2, d2)) {
            result.converged = true;
            break;
        }
        prev_d2 = d2;
    }
    return result;
}

StateField initial_assignment(const ConstraintSpace& space, const MaterialDataSet& data,
                              InitKind init, std::uint64_t seed, int threads) {
    const int n = space.mesh().n_elements();
    switch (init) {
        case InitKind::Classical: {
            const StateField classical = space.solve_classical().field;
            const auto nearest = assign_nearest(classical, data, threads);
            std::vector<LocalState> states;
            states.reserve(n);
            for (const auto& r : nearest) states.push_back(r.point);
            return space.make_field(std::move(states));
        }
        case InitKind::Zero: {
            const LocalState zero = LocalState::zero(space.mesh().dim());
            const LocalState y0 = data.nearest(zero).point;
            return space.make_field(std::vector<LocalState>(n, y0));
        }
        case InitKind::Random: {
            Rng rng(seed);
            std::vector<LocalState> states;
            states.reserve(n);
            for (int e = 0; e < n; ++e) states.push_back(data.random_state(rng));
            return space.make_field(std::move(states));
        }
    }
    throw std::logic_error("initial_assignment: unknown init kind");
}

}  // namespace

SolverResult solve_data_driven(const ConstraintSpace& space, const MaterialDataSet& data,
                               const SolverConfig& config) {
    if (space.mesh().dim() != data.dim())
        throw std::invalid_argument("solve_data_driven: dimension mismatch");

    const int n_starts = config.init == InitKind::Random ? std::max(1, config.restarts) : 1;
    SolverResult best{space.zero_field(), space.zero_field(), 0.0, 0, {}, false, 0};
    bool have_best = false;
    for (int k = 0; k < n_starts; ++k) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(k);
        StateField y0 = initial_assignment(space, data, config.init, seed, config.threads);
        SolverResult r = run_once(space, data, std::move(y0), config, seed);
        if (!have_best || r.d2 < best.d2) {  // strict: ties keep the lowest seed
            best = std::move(r);
            have_best = true;
        }
    }
    return best;
}

SolverResult distance_to_dataset(const ConstraintSpace& space, const MaterialDataSet& data,
                                 const SolverConfig& config) {
    const auto* graph = dynamic_cast<const AffineGraphBranch*>(&data);
    if (graph && !graph->halfspace()) {
        // The linear-elastic solution lies on the graph and in E, so it attains
        // the distance exactly; no iteration needed.
        const std::vector<SymMatrix> prestress(space.mesh().n_elements(), graph->offset());
        const ClassicalSolution sol = space.solve_classical(&prestress);
        const auto nearest = assign_nearest(sol.field, data, config.threads);
        std::vector<LocalState> states;
        states.reserve(nearest.size());
        double d2 = 0.0;
        for (int e = 0; e < sol.field.size(); ++e) {
            d2 += sol.field.weights()[e] * nearest[e].sq_distance;
            states.push_back(nearest[e].point);
        }
        return {sol.field, space.make_field(std::move(states)), d2, 1, {d2}, true, config.seed};
    }
    return solve_data_driven(space, data, config);
}

std::vector<ConvergenceRow> convergence_study(const ConstraintSpace& space,
                                              const MaterialDataSet& analytic,
                                              const std::vector<std::array<double, 2>>& box,
                                              const std::vector<std::array<double, 2>>& rho_t,
                                              const StateField& reference,
                                              const SolverConfig& config) {
    std::vector<ConvergenceRow> rows;
    rows.reserve(rho_t.size());
    for (std::size_t i = 0; i < rho_t.size(); ++i) {
        SamplingSpec spec;
        spec.rho = rho_t[i][0];
        spec.t = rho_t[i][1];
        spec.box = box;
        spec.seed = config.seed + static_cast<std::uint64_t>(i);
        const PointCloudDataSet cloud = sample(analytic, spec);
        const SolverResult r = solve_data_driven(space, cloud, config);
        rows.push_back({spec.rho, spec.t, r.d2, std::sqrt(field_sq_distance(r.z, reference))});
    }
    return rows;
}

}  // namespace ddel
