#include "ddel/acceptance.hpp"

#include "ddel/constraint_space.hpp"
#include "ddel/relaxation.hpp"
#include "ddel/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace ddel {

namespace {

/// Accumulates named sub-checks of one criterion.
class Checker {
  public:
    void check(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    void note(const std::string& what) { notes_.push_back(what); }

    CriterionResult result(int number, const std::string& name) const {
        CriterionResult r;
        r.number = number;
        r.name = name;
        r.passed = failures_.empty();
        std::ostringstream os;
        if (r.passed) {
            for (std::size_t i = 0; i < notes_.size(); ++i)
                os << (i ? "; " : "") << notes_[i];
        } else {
            for (std::size_t i = 0; i < failures_.size(); ++i)
                os << (i ? "; " : "") << failures_[i];
        }
        r.detail = os.str();
        return r;
    }

  private:
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

/// Uniform bar with prescribed end displacements (mean strain eps_bar).
ConstraintSpace bar_space(int elements, double stiffness, double eps_bar) {
    Mesh mesh = Mesh::bar(1.0, elements);
    BoundaryData bc;
    bc.fix_marker(mesh, kLeft, 0, 0.0);
    bc.fix_marker(mesh, kRight, 0, eps_bar);
    return ConstraintSpace(std::move(mesh), ElasticityTensor::scaled_identity(1, stiffness),
                           std::move(bc));
}

/// Unit square, left edge clamped, unit horizontal traction on the right edge.
ConstraintSpace plate_space() {
    Mesh mesh = Mesh::rectangle(1.0, 1.0, 8, 8, "crossed");
    BoundaryData bc;
    bc.fix_marker(mesh, kLeft, 0, 0.0);
    bc.fix_marker(mesh, kLeft, 1, 0.0);
    Eigen::VectorXd traction(2);
    traction << 1.0, 0.0;
    bc.traction_on_marker(mesh, kRight, traction);
    return ConstraintSpace(std::move(mesh), ElasticityTensor::identity(2), std::move(bc));
}

/// Least-squares slope of log(error) against log(rho).
double fitted_exponent(const std::vector<ConvergenceRow>& rows) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(rows.size());
    for (const auto& row : rows) {
        const double x = std::log(row.rho);
        const double y = std::log(std::max(row.error, 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Random positive definite packed-coordinates matrix with eigenvalues in
/// [0.5, 2], keeping conditioning mild so roundoff stays predictable.
ElasticityTensor random_spd_tensor(int dim, Rng& rng) {
    const int s = packed_size(dim);
    Matrix a(s, s);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) a(i, j) = rng.normal();
    const Eigen::HouseholderQR<Matrix> qr(a);
    const Matrix q = qr.householderQ();
    Vector eigs(s);
    for (int k = 0; k < s; ++k) eigs[k] = 0.5 + 1.5 * rng.uniform01();
    Matrix v = q * eigs.asDiagonal() * q.transpose();
    v = 0.5 * (v + v.transpose());
    return ElasticityTensor(dim, v);
}

SymMatrix random_well(int dim, Rng& rng) {
    SymMatrix b(dim);
    for (int k = 0; k < b.packed_count(); ++k) b[k] = rng.normal();
    const double len = std::sqrt(frobenius_sq(b));
    return b * ((0.5 + 1.5 * rng.uniform01()) / len);
}

/// Random state in the open interior band of the relaxed set: position along the
/// well axis and along sigma:b both kept at 99% of their admissible range.
LocalState random_interior_state(const TwoWellRelaxation& rx, Rng& rng) {
    const int dim = rx.metric().dim();
    const double mu = 1.98 * rng.uniform01() - 0.99;
    SymMatrix sig(dim);
    for (int k = 0; k < sig.packed_count(); ++k) sig[k] = rng.normal();
    const double band = rx.cbb() - rx.alpha_minus();
    const double target = -rx.alpha_minus() * mu + (2.0 * rng.uniform01() - 1.0) * 0.99 * band;
    sig += ((target - contract(sig, rx.b())) / frobenius_sq(rx.b())) * rx.b();
    const SymMatrix eps = rx.metric().apply_inverse(sig) + mu * rx.b();
    return {eps, sig};
}

/// Random state of the relaxed set itself (either branch or the interior band).
LocalState random_relaxed_state(const TwoWellRelaxation& rx, Rng& rng) {
    const int dim = rx.metric().dim();
    const double pick = rng.uniform01();
    SymMatrix sig(dim);
    for (int k = 0; k < sig.packed_count(); ++k) sig[k] = rng.normal();
    double mu, target;
    if (pick < 1.0 / 3.0) {  // branch with well +b: sigma:b anywhere above -Cb:b
        mu = 1.0;
        target = -rx.cbb() + 3.0 * rx.cbb() * rng.uniform01();
    } else if (pick < 2.0 / 3.0) {  // mirror branch
        mu = -1.0;
        target = rx.cbb() - 3.0 * rx.cbb() * rng.uniform01();
    } else {  // interior band
        mu = 2.0 * rng.uniform01() - 1.0;
        const double band = rx.cbb() - rx.alpha_minus();
        target = -rx.alpha_minus() * mu + (2.0 * rng.uniform01() - 1.0) * band;
    }
    sig += ((target - contract(sig, rx.b())) / frobenius_sq(rx.b())) * rx.b();
    const SymMatrix eps = rx.metric().apply_inverse(sig) + mu * rx.b();
    return {eps, sig};
}

/// Random state of the separation strip: on the branch subspace, mu in [-1, 1),
/// above the band edge by a definite margin.
LocalState random_strip_state(const TwoWellRelaxation& rx, Rng& rng) {
    const int dim = rx.metric().dim();
    const double mu = -1.0 + 1.995 * rng.uniform01();
    SymMatrix sig(dim);
    for (int k = 0; k < sig.packed_count(); ++k) sig[k] = rng.normal();
    const double edge = rx.cbb() - rx.alpha_minus() - rx.alpha_minus() * mu;
    const double target = edge + (0.05 + 2.0 * rng.uniform01()) * rx.cbb();
    sig += ((target - contract(sig, rx.b())) / frobenius_sq(rx.b())) * rx.b();
    const SymMatrix eps = rx.metric().apply_inverse(sig) + mu * rx.b();
    return {eps, sig};
}

CriterionResult classical_recovery() {
    Checker c;

    {
        const ConstraintSpace space = bar_space(20, 2.0, 0.5);
        const AffineGraphBranch graph(ElasticityTensor::scaled_identity(1, 2.0),
                                      SymMatrix::zero(1));
        const ClassicalSolution classical = space.solve_classical();
        const SolverResult r = solve_data_driven(space, graph);
        const double rel =
            energy_distance(r.z, classical.field) / energy_norm(classical.field);
        c.check(rel <= 1e-10, "1d bar: relative error " + fmt(rel) + " > 1e-10");
        c.check(r.d2 < 1e-18, "1d bar: distance " + fmt(r.d2) + " not < 1e-18");
        c.note("1d rel err " + fmt(rel) + ", d2 " + fmt(r.d2));
    }

    {
        const ConstraintSpace space = plate_space();
        const AffineGraphBranch graph(ElasticityTensor::identity(2), SymMatrix::zero(2));
        const ClassicalSolution classical = space.solve_classical();
        const SolverResult r = solve_data_driven(space, graph);
        const double rel =
            energy_distance(r.z, classical.field) / energy_norm(classical.field);
        c.check(rel <= 1e-10, "2d plate: relative error " + fmt(rel) + " > 1e-10");
        c.check(r.d2 < 1e-18, "2d plate: distance " + fmt(r.d2) + " not < 1e-18");
        c.note("2d rel err " + fmt(rel) + ", d2 " + fmt(r.d2));
    }

    return c.result(1, "classical-recovery");
}

CriterionResult sampling_convergence() {
    Checker c;
    // Same bar as the recovery criterion plus a unit body force.  The load makes
    // the strain vary across elements, so the noisy-data error aggregates over
    // many independent nearest-point selections instead of hinging on how close
    // one lucky sample lands to a single shared state.
    Mesh mesh = Mesh::bar(1.0, 20);
    BoundaryData bc;
    bc.fix_marker(mesh, kLeft, 0, 0.0);
    bc.fix_marker(mesh, kRight, 0, 0.5);
    bc.body_force.resize(mesh.n_elements(), 1);
    bc.body_force.setConstant(1.0);
    const ConstraintSpace space(std::move(mesh), ElasticityTensor::scaled_identity(1, 2.0),
                                std::move(bc));
    const AffineGraphBranch graph(ElasticityTensor::scaled_identity(1, 2.0), SymMatrix::zero(1));
    const StateField reference = space.solve_classical().field;

    // Box anchored a non-dyadic number of steps away from the mean strain so no
    // halving level places a sample exactly on a solution state.
    const double h0 = 0.2 / std::sqrt(2.0);
    const std::vector<std::array<double, 2>> box = {{0.5 - (31.0 / 3.0) * h0, 2.0}};

    const std::vector<std::array<double, 2>> exact = {
        {0.2, 0.0}, {0.1, 0.0}, {0.05, 0.0}, {0.025, 0.0}};
    const std::vector<ConvergenceRow> rows = convergence_study(space, graph, box, exact, reference);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i)
        c.check(rows[i + 1].error < rows[i].error,
                "exact sampling: error not strictly decreasing at rho " +
                    fmt(rows[i + 1].rho));
    const double p = fitted_exponent(rows);
    c.check(p >= 0.8, "exact sampling: fitted exponent " + fmt(p) + " < 0.8");
    c.note("exponent " + fmt(p) + ", last err " + fmt(rows.back().error));

    const double t = 0.05;
    const std::vector<std::array<double, 2>> noisy = {
        {0.2, t}, {0.1, t}, {0.05, t}, {0.025, t}};
    const std::vector<ConvergenceRow> nrows = convergence_study(space, graph, box, noisy, reference);
    // Plateau level: rms of the two finest rows, where the exact-data error has
    // dropped well below the noise amplitude.
    const int n = static_cast<int>(nrows.size());
    const double plateau = std::sqrt(0.5 * (nrows[n - 2].error * nrows[n - 2].error +
                                            nrows[n - 1].error * nrows[n - 1].error));
    c.check(plateau >= 0.2 * t && plateau <= 5.0 * t,
            "noisy sampling: plateau " + fmt(plateau) + " outside [0.2 t, 5 t]");
    c.note("noisy plateau " + fmt(plateau) + " (t " + fmt(t) + ")");

    return c.result(2, "sampling-convergence");
}

CriterionResult reduced_consistency() {
    Checker c;
    const double C = 1.0, sigma0 = 1.0;
    const FlagDataSet1D flag(C, sigma0);

    for (int k = -3; k <= 3; ++k) {
        const Reduced1DSolution sol = reduced_1d_two_well_solve(C, sigma0, k);
        c.check(sol.d2_min < 1e-12,
                "free stress, mean strain " + std::to_string(k) + ": minimum " +
                    fmt(sol.d2_min) + " not < 1e-12");
    }

    const Reduced1DSolution far = reduced_1d_two_well_solve(C, sigma0, 0.0, 1.5);
    c.check(far.d2_min >= 0.05,
            "fixed stress 1.5: minimum " + fmt(far.d2_min) + " < 0.05");
    c.note("fixed-stress minimum " + fmt(far.d2_min));

    // The reduced two-phase minimum vanishes exactly where the state lies in the
    // relaxed flag set; scan a grid placed to avoid exact boundary hits.
    int disagreements = 0;
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100; ++j) {
            const double eps = -3.0 + 0.06 * i;
            const double sig = -3.0 + 0.06 * j;
            const bool inside = membership_flag_1d(flag, eps, sig) != FlagMembership::Outside;
            const bool zero = reduced_1d_two_well_solve(C, sigma0, eps, sig).d2_min <= 1e-12;
            if (inside != zero) ++disagreements;
        }
    }
    c.check(disagreements == 0,
            std::to_string(disagreements) + " membership/minimum disagreements on the grid");
    c.note("grid disagreements 0");

    return c.result(3, "reduced-two-phase-consistency");
}

CriterionResult alpha_extremes() {
    Checker c;
    const ElasticityTensor id = ElasticityTensor::identity(2);

    {
        const AlphaRange r = alpha_range(id, SymMatrix::from_diag({1.0, 2.0}));
        c.check(std::abs(r.alpha_minus - 1.0) <= 1e-8,
                "diag(1,2): alpha- " + fmt(r.alpha_minus) + " not within 1e-8 of 1");
        c.check(std::abs(r.alpha_plus - 4.0) <= 1e-6,
                "diag(1,2): alpha+ " + fmt(r.alpha_plus) + " not within 1e-6 of 4");
        c.note("diag(1,2): " + fmt(r.alpha_minus) + " / " + fmt(r.alpha_plus));
    }
    {
        const AlphaRange r = alpha_range(id, SymMatrix::from_diag({1.0, -1.0}));
        c.check(std::abs(r.alpha_minus) <= 1e-10,
                "diag(1,-1): alpha- " + fmt(r.alpha_minus) + " not within 1e-10 of 0");
        c.note("diag(1,-1): " + fmt(r.alpha_minus));
    }
    {
        const AlphaRange r = alpha_range(id, SymMatrix::from_diag({1.0, 1.0}));
        c.check(std::abs(r.alpha_minus - 1.0) <= 1e-8 && std::abs(r.alpha_plus - 1.0) <= 1e-8,
                "diag(1,1): range [" + fmt(r.alpha_minus) + ", " + fmt(r.alpha_plus) +
                    "] not within 1e-8 of {1}");
        c.note("diag(1,1): " + fmt(r.alpha_minus) + " / " + fmt(r.alpha_plus));
    }

    return c.result(4, "alpha-extremes");
}

CriterionResult rank_one_decomposition() {
    Checker c;
    Rng rng(21);
    int tested = 0;

    for (int dim : {2, 3}) {
        for (int trial = 0; trial < 100; ++trial) {
            const ElasticityTensor C = random_spd_tensor(dim, rng);
            const SymMatrix b = random_well(dim, rng);
            const TwoWellRelaxation rx = TwoWellRelaxation::from_parameters(C, b);
            const LocalState z = random_interior_state(rx, rng);
            const double scale = 1.0 + std::sqrt(z.sq_frobenius());

            const LaminateDecomposition d = rank_one_decompose(rx, z);
            ++tested;

            const LocalState rec =
                d.lambda * d.z_minus + (1.0 - d.lambda) * d.z_plus - z;
            c.check(std::sqrt(rec.sq_frobenius()) <= 1e-8 * scale,
                    "dim " + std::to_string(dim) + " trial " + std::to_string(trial) +
                        ": reconstruction residual");

            const SymMatrix jump = d.z_plus.eps - d.z_minus.eps - sym_outer(d.c, d.nu);
            c.check(std::sqrt(frobenius_sq(jump)) <= 1e-8 * scale,
                    "dim " + std::to_string(dim) + " trial " + std::to_string(trial) +
                        ": strain jump is not the rank-one product");

            const Vector traction = (d.z_plus.sig - d.z_minus.sig).mv(d.nu);
            c.check(traction.norm() <= 1e-8 * scale,
                    "dim " + std::to_string(dim) + " trial " + std::to_string(trial) +
                        ": traction jump across layers");

            const MembershipResult m_minus = membership_relaxed_nd(rx, d.z_minus, 1e-7);
            const MembershipResult m_plus = membership_relaxed_nd(rx, d.z_plus, 1e-7);
            c.check(m_minus.region == RelaxedMembership::InDlocMinus,
                    "dim " + std::to_string(dim) + " trial " + std::to_string(trial) +
                        ": z- not on the minus branch");
            c.check(m_plus.region == RelaxedMembership::InDlocPlus,
                    "dim " + std::to_string(dim) + " trial " + std::to_string(trial) +
                        ": z+ not on the plus branch");
        }
    }
    c.note(std::to_string(tested) + " interior states decomposed");

    return c.result(5, "rank-one-decomposition");
}

CriterionResult separating_certificate() {
    Checker c;
    Rng rng(77);
    int positive = 0;
    double worst_on_set = -std::numeric_limits<double>::infinity();

    for (int setup = 0; setup < 2; ++setup) {
        const ElasticityTensor C =
            setup == 0 ? ElasticityTensor::identity(2) : random_spd_tensor(2, rng);
        const SymMatrix b =
            setup == 0 ? SymMatrix::from_diag({1.0, 2.0}) : random_well(2, rng);
        const TwoWellRelaxation rx = TwoWellRelaxation::from_parameters(C, b);

        std::vector<LocalState> set_samples;
        set_samples.reserve(10000);
        for (int i = 0; i < 10000; ++i) set_samples.push_back(random_relaxed_state(rx, rng));

        for (int trial = 0; trial < 25; ++trial) {
            const LocalState z0 = random_strip_state(rx, rng);
            const SeparatingCertificate f(rx, z0);
            const double at_point = f(z0);
            if (at_point > 0.0) ++positive;
            c.check(at_point > 0.0, "setup " + std::to_string(setup) + " trial " +
                                        std::to_string(trial) + ": f(z0) = " + fmt(at_point) +
                                        " not positive");
            for (const LocalState& y : set_samples)
                worst_on_set = std::max(worst_on_set, f(y));
        }
    }
    c.check(worst_on_set <= 1e-8,
            "max f over relaxed-set samples " + fmt(worst_on_set) + " > 1e-8");
    c.note(std::to_string(positive) + " strict separations, max on set " + fmt(worst_on_set));

    return c.result(6, "separating-certificate");
}

CriterionResult laminate_recovery() {
    Checker c;
    const ElasticityTensor C = ElasticityTensor::scaled_identity(1, 1.0);
    const SymMatrix b = SymMatrix::from_diag({1.0});
    const TwoWellRelaxation rx = TwoWellRelaxation::from_parameters(C, b);

    SymMatrix eps(1), sig(1);
    eps[0] = 0.5;
    sig[0] = 0.0;
    const LocalState z(eps, sig);
    const LaminateDecomposition d = rank_one_decompose(rx, z);

    const Mesh mesh = Mesh::bar(1.0, 64);
    std::vector<double> errors;
    int membership_failures = 0;
    for (int h : {4, 8, 16}) {
        const std::vector<LocalState> field = generate_laminate_field(mesh, d, h);
        LocalState mean = LocalState::zero(1);
        double volume = 0.0;
        for (int e = 0; e < mesh.n_elements(); ++e) {
            mean += mesh.element_measure(e) * field[e];
            volume += mesh.element_measure(e);
        }
        mean = (1.0 / volume) * mean;
        errors.push_back(std::sqrt(local_sq_distance(mean, z, C)));
        for (const LocalState& state : field) {
            const RelaxedMembership region = membership_relaxed_nd(rx, state).region;
            if (region != RelaxedMembership::InDlocPlus &&
                region != RelaxedMembership::InDlocMinus)
                ++membership_failures;
        }
    }

    c.check(membership_failures == 0,
            std::to_string(membership_failures) + " laminate states off the two branches");
    for (std::size_t i = 0; i + 1 < errors.size(); ++i)
        c.check(errors[i + 1] <= errors[i] / 1.6 + 1e-12,
                "mean error did not decay by 1.6 between levels " + std::to_string(i) +
                    " and " + std::to_string(i + 1));
    c.note("mean errors " + fmt(errors[0]) + " / " + fmt(errors[1]) + " / " + fmt(errors[2]));

    return c.result(7, "laminate-recovery");
}

CriterionResult helmholtz_orthogonality() {
    Checker c;
    const double bar = bar_space(20, 2.0, 0.5).helmholtz_orthogonality_check(50, 123);
    c.check(bar < 1e-10, "1d bar: worst pairing " + fmt(bar) + " not < 1e-10");
    const double plate = plate_space().helmholtz_orthogonality_check(50, 123);
    c.check(plate < 1e-10, "2d plate: worst pairing " + fmt(plate) + " not < 1e-10");
    c.note("worst pairings " + fmt(bar) + " / " + fmt(plate));

    return c.result(8, "helmholtz-orthogonality");
}

CriterionResult solver_monotonicity() {
    Checker c;

    const auto check_trace = [&](const SolverResult& r, const std::string& label) {
        for (std::size_t i = 0; i + 1 < r.trace.size(); ++i)
            c.check(r.trace[i + 1] <= r.trace[i] + 1e-14 * (1.0 + r.trace[i]),
                    label + ": objective increased at iteration " + std::to_string(i + 1));
    };

    {
        const ConstraintSpace space = bar_space(20, 2.0, 0.5);
        const AffineGraphBranch graph(ElasticityTensor::scaled_identity(1, 2.0),
                                      SymMatrix::zero(1));
        check_trace(solve_data_driven(space, graph), "1d exact graph");

        // Sampled data: the interesting case, since assignments jump between points.
        SamplingSpec spec;
        spec.rho = 0.05;
        spec.box = {{-1.0, 2.0}};
        spec.seed = 5;
        const PointCloudDataSet cloud = sample(graph, spec);
        check_trace(solve_data_driven(space, cloud), "1d sampled cloud");

        SamplingSpec noisy = spec;
        noisy.t = 0.05;
        const PointCloudDataSet jittered = sample(graph, noisy);
        check_trace(solve_data_driven(space, jittered), "1d noisy cloud");

        // Independent random starts on the exact graph agree on the minimum.
        std::vector<double> finals;
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            SolverConfig config;
            config.init = InitKind::Random;
            config.restarts = 1;
            config.seed = seed;
            const SolverResult r = solve_data_driven(space, graph, config);
            check_trace(r, "random start " + std::to_string(seed));
            finals.push_back(r.d2);
        }
        const auto [lo, hi] = std::minmax_element(finals.begin(), finals.end());
        c.check(*hi - *lo <= 1e-8,
                "random starts disagree: spread " + fmt(*hi - *lo) + " > 1e-8");
        c.note("multi-start spread " + fmt(*hi - *lo));
    }

    {
        const ConstraintSpace space = plate_space();
        const AffineGraphBranch graph(ElasticityTensor::identity(2), SymMatrix::zero(2));
        check_trace(solve_data_driven(space, graph), "2d exact graph");
    }

    return c.result(9, "solver-monotonicity");
}

}  // namespace

std::vector<CriterionResult> run_acceptance_criteria() {
    using Criterion = CriterionResult (*)();
    const Criterion criteria[] = {
        classical_recovery,   sampling_convergence,  reduced_consistency,
        alpha_extremes,       rank_one_decomposition, separating_certificate,
        laminate_recovery,    helmholtz_orthogonality, solver_monotonicity,
    };
    std::vector<CriterionResult> results;
    int number = 1;
    for (const Criterion& criterion : criteria) {
        try {
            results.push_back(criterion());
        } catch (const std::exception& e) {
            CriterionResult r;
            r.number = number;
            r.name = "criterion-" + std::to_string(number);
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
            results.push_back(r);
        }
        results.back().number = number++;
    }
    return results;
}

bool run_acceptance(std::ostream& out) {
    const std::vector<CriterionResult> results = run_acceptance_criteria();
    bool all = true;
    for (const CriterionResult& r : results) {
        out << (r.passed ? "[PASS] " : "[FAIL] ") << r.number << ". " << r.name;
        if (!r.detail.empty()) out << " — " << r.detail;
        out << "\n";
        all = all && r.passed;
    }
    out << (all ? "all criteria passed" : "CRITERIA FAILED") << "\n";
    return all;
}

}  // namespace ddel
