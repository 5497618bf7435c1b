#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ddel/constraint_space.hpp"
#include "ddel/mesh.hpp"
#include "ddel/rng.hpp"

#include "oracles.hpp"

#include <cmath>
#include <vector>

using namespace ddel;

namespace {

ConstraintSpace clamped_bar(int n_elements, double stiffness, double body_force) {
    Mesh mesh = Mesh::bar(1.0, n_elements);
    BoundaryData bc;
    bc.fix_marker(mesh, kLeft, 0, 0.0);
    bc.fix_marker(mesh, kRight, 0, 0.0);
    if (body_force != 0.0) {
        bc.body_force.resize(mesh.n_elements(), 1);
        bc.body_force.setConstant(body_force);
    }
    return ConstraintSpace(std::move(mesh),
                           ElasticityTensor::scaled_identity(1, stiffness), std::move(bc));
}

/// Random field sharing the weights and metric of the space.
StateField random_field(const ConstraintSpace& space, Rng& rng, double radius = 1.0) {
    std::vector<LocalState> states;
    states.reserve(space.mesh().n_elements());
    for (int e = 0; e < space.mesh().n_elements(); ++e) {
        states.push_back(oracles::random_state(space.mesh().dim(), rng, radius));
    }
    return space.make_field(std::move(states));
}

/// Admissible displacement: the lift plus random values on the free dofs.
Eigen::VectorXd random_admissible_u(const ConstraintSpace& space, Rng& rng) {
    Eigen::VectorXd u = space.dirichlet_lift();
    for (int dof : space.free_dofs()) u[dof] += rng.uniform(-1.0, 1.0);
    return u;
}

}  // namespace

TEST_CASE("clamped two-element bar under unit body force: exact nodal solution") {
    // -C u'' = f on (0,1), u(0)=u(1)=0, C=1, f=1  =>  u(x) = x(1-x)/2.
    const ConstraintSpace space = clamped_bar(2, 1.0, 1.0);
    const ClassicalSolution sol = space.solve_classical();

    REQUIRE(sol.u.size() == 3);
    CHECK(sol.u[0] == 0.0);
    CHECK(sol.u[2] == 0.0);
    CHECK(sol.u[1] == doctest::Approx(0.125).epsilon(1e-14));

    // Element strains (u_right - u_left) / h = +-1/4.
    CHECK(sol.field[0].eps[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(sol.field[1].eps[0] == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(sol.field[0].sig[0] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("clamped bar under unit body force: centroid strains match 1/2 - x") {
    // Linear elements are nodally exact here, and the exact strain 1/2 - x is
    // linear, so each element strain equals its value at the element centroid.
    const ConstraintSpace space = clamped_bar(20, 1.0, 1.0);
    const ClassicalSolution sol = space.solve_classical();
    for (int e = 0; e < space.mesh().n_elements(); ++e) {
        const double xc = space.mesh().element_centroid(e)[0];
        CHECK(sol.field[e].eps[0] == doctest::Approx(0.5 - xc).epsilon(1e-12));
    }
    const Residuals res = space.residuals(sol.field);
    CHECK(res.compatibility < 1e-12);
    CHECK(res.equilibrium < 1e-12);
}

TEST_CASE("stretched bar with no loads: uniform strain patch solution") {
    Mesh mesh = Mesh::bar(2.0, 7);
    BoundaryData bc;
    bc.fix_marker(mesh, kLeft, 0, 0.0);
    bc.fix_marker(mesh, kRight, 0, 1.0);
    const ConstraintSpace space(std::move(mesh), ElasticityTensor::scaled_identity(1, 3.0),
                                std::move(bc));

    const ClassicalSolution sol = space.solve_classical();
    for (int e = 0; e < space.mesh().n_elements(); ++e) {
        CHECK(sol.field[e].eps[0] == doctest::Approx(0.5).epsilon(1e-13));
        CHECK(sol.field[e].sig[0] == doctest::Approx(1.5).epsilon(1e-13));
    }

    // The lift carries the prescribed values and nothing else.
    const Eigen::VectorXd& lift = space.dirichlet_lift();
    CHECK(lift[0] == 0.0);
    CHECK(lift[space.mesh().n_nodes() - 1] == 1.0);
    CHECK(space.n_free() == space.mesh().n_nodes() - 2);
}

TEST_CASE("projection is idempotent and splits the distance orthogonally") {
    Rng rng(311);
    // Zero loads and zero Dirichlet values make E a linear subspace, for which
    // projections obey Pythagoras exactly.
    const ConstraintSpace space = clamped_bar(12, 2.0, 0.0);

    for (int rep = 0; rep < 10; ++rep) {
        const StateField target = random_field(space, rng);
        const StateField proj = space.project(target);
        const StateField again = space.project(proj);
        CHECK(field_sq_distance(proj, again) < 1e-24);

        const double total = field_sq_norm(target);
        const double kept = field_sq_norm(proj);
        const double dropped = field_sq_distance(target, proj);
        CHECK(total == doctest::Approx(kept + dropped).epsilon(1e-10));

        // Both halves of the projection satisfy their constraints.
        const Residuals res = space.residuals(proj);
        CHECK(res.compatibility < 1e-10);
        CHECK(res.equilibrium < 1e-10);
    }
}

TEST_CASE("projecting a constant state onto the clamped bar") {
    // Compatible strains of a clamped bar average to zero, so the closest
    // compatible strain to a constant is zero; a constant stress is already
    // equilibrated with zero loads and projects onto itself.
    const ConstraintSpace space = clamped_bar(8, 2.0, 0.0);
    std::vector<LocalState> states(8, LocalState(SymMatrix::from_diag({0.7}),
                                                 SymMatrix::from_diag({-1.3})));
    const StateField proj = space.project(space.make_field(std::move(states)));
    for (int e = 0; e < 8; ++e) {
        CHECK(std::abs(proj[e].eps[0]) < 1e-13);
        CHECK(proj[e].sig[0] == doctest::Approx(-1.3).epsilon(1e-13));
    }
}

TEST_CASE("displacement_for returns the displacement behind the projected strain") {
    Rng rng(929);
    const ConstraintSpace space = clamped_bar(9, 1.5, 0.0);
    const StateField target = random_field(space, rng);
    const StateField proj = space.project(target);
    const Eigen::VectorXd u = space.displacement_for(target);
    const StateField from_u = space.field_from_displacement(u);
    for (int e = 0; e < space.mesh().n_elements(); ++e) {
        CHECK(frobenius_sq(from_u[e].eps - proj[e].eps) < 1e-24);
    }
}

TEST_CASE("virtual work of the classical stress balances the applied loads") {
    const ConstraintSpace space = clamped_bar(10, 2.0, 1.0);
    const ClassicalSolution sol = space.solve_classical();
    const Eigen::VectorXd r = space.virtual_work_vector(sol.field);
    for (int dof : space.free_dofs()) {
        CHECK(r[dof] == doctest::Approx(space.force()[dof]).epsilon(1e-12));
    }

    // Discrete power identity: with homogeneous Dirichlet data the solution is
    // itself a test function, so internal and external work agree.
    double internal = 0.0;
    for (int e = 0; e < space.mesh().n_elements(); ++e) {
        internal += space.mesh().element_measure(e) *
                    contract(sol.field[e].sig, sol.field[e].eps);
    }
    CHECK(internal == doctest::Approx(space.external_work(sol.u)).epsilon(1e-12));
}

TEST_CASE("residuals vanish exactly on admissible fields and flag violations") {
    Rng rng(47);
    const ConstraintSpace space = clamped_bar(10, 2.0, 1.0);

    // Compatible strains from a random admissible displacement.
    const Eigen::VectorXd u = random_admissible_u(space, rng);
    const StateField compat = space.field_from_displacement(u);
    CHECK(space.residuals(compat).compatibility < 1e-12);

    // Perturbing one element strain breaks compatibility but not equilibrium.
    std::vector<LocalState> bumped(compat.states());
    bumped[3].eps[0] += 0.5;
    const Residuals broken = space.residuals(space.make_field(std::move(bumped)));
    CHECK(broken.compatibility > 0.01);

    // The classical stress is equilibrated; shifting one element breaks it.
    const ClassicalSolution sol = space.solve_classical();
    CHECK(space.residuals(sol.field).equilibrium < 1e-12);
    std::vector<LocalState> shifted(sol.field.states());
    shifted[5].sig[0] += 1.0;
    CHECK(space.residuals(space.make_field(std::move(shifted))).equilibrium > 0.01);
}

TEST_CASE("compatible and self-equilibrated fields are energy-orthogonal") {
    const ConstraintSpace bar = clamped_bar(16, 2.0, 0.0);
    CHECK(bar.helmholtz_orthogonality_check(25, 101) < 1e-10);

    Mesh mesh = Mesh::rectangle(1.0, 1.0, 4, 4, "crossed");
    BoundaryData bc;
    bc.fix_marker(mesh, kLeft, 0, 0.0);
    bc.fix_marker(mesh, kLeft, 1, 0.0);
    const ConstraintSpace plane(std::move(mesh), ElasticityTensor::isotropic(2, 1.0, 0.3),
                                std::move(bc));
    CHECK(plane.helmholtz_orthogonality_check(25, 102) < 1e-10);
}

TEST_CASE("plane problem: traction load, classical solve, and projection") {
    Mesh mesh = Mesh::rectangle(2.0, 1.0, 6, 3, "diagonal");
    BoundaryData bc;
    bc.fix_marker(mesh, kLeft, 0, 0.0);
    bc.fix_marker(mesh, kLeft, 1, 0.0);
    Eigen::VectorXd traction(2);
    traction << 0.4, 0.0;
    bc.traction_on_marker(mesh, kRight, traction);
    const ConstraintSpace space(std::move(mesh), ElasticityTensor::isotropic(2, 1.0, 0.25),
                                std::move(bc));

    // The assembled load carries the total applied force 0.4 * |right edge|.
    double fx = 0.0;
    for (int n = 0; n < space.mesh().n_nodes(); ++n) fx += space.force()[2 * n];
    CHECK(fx == doctest::Approx(0.4 * 1.0).epsilon(1e-12));

    const ClassicalSolution sol = space.solve_classical();
    const Residuals res = space.residuals(sol.field);
    CHECK(res.compatibility < 1e-10);
    CHECK(res.equilibrium < 1e-10);
    CHECK(space.external_work(sol.u) > 0.0);

    // Projection of the classical field is the field itself (it lies in E).
    const StateField proj = space.project(sol.field);
    CHECK(field_sq_distance(proj, sol.field) < 1e-20);

    // Idempotence also holds away from the classical solution.
    Rng rng(73);
    const StateField target = random_field(space, rng);
    const StateField p1 = space.project(target);
    CHECK(field_sq_distance(p1, space.project(p1)) < 1e-20);
    const Residuals pres = space.residuals(p1);
    CHECK(pres.compatibility < 1e-9);
    CHECK(pres.equilibrium < 1e-9);
}

TEST_CASE("prestress shifts the classical law to sigma = C eps + s") {
    const int n = 6;
    const ConstraintSpace space = clamped_bar(n, 2.0, 0.0);
    std::vector<SymMatrix> prestress(n, SymMatrix::from_diag({1.0}));
    const ClassicalSolution sol = space.solve_classical(&prestress);

    // A uniform prestress in a clamped bar is self-equilibrated: u = 0 and the
    // stress equals the prestress.
    CHECK(sol.u.norm() < 1e-14);
    for (int e = 0; e < n; ++e) {
        CHECK(sol.field[e].sig[0] == doctest::Approx(1.0).epsilon(1e-13));
    }

    // A prestress gradient drives a displacement: law check per element.
    std::vector<SymMatrix> graded;
    for (int e = 0; e < n; ++e) graded.push_back(SymMatrix::from_diag({0.3 * e}));
    const ClassicalSolution g = space.solve_classical(&graded);
    const StateField rebuilt = space.field_from_displacement(g.u, &graded);
    for (int e = 0; e < n; ++e) {
        CHECK(frobenius_sq(g.field[e].sig - rebuilt[e].sig) < 1e-24);
        CHECK(g.field[e].sig[0] ==
              doctest::Approx(2.0 * g.field[e].eps[0] + 0.3 * e).epsilon(1e-12));
    }
    CHECK(space.residuals(g.field).equilibrium < 1e-12);
}
