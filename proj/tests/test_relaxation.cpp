#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ddel/relaxation.hpp"

#include "oracles.hpp"

#include <cmath>
#include <vector>

using namespace ddel;

namespace {

SymMatrix diag2(double a, double b) { return SymMatrix::from_diag({a, b}); }

LocalState state2(const SymMatrix& eps, const SymMatrix& sig) { return LocalState(eps, sig); }

/// Band state of the relaxed set in normalized coordinates: position mu along
/// the well axis and level s = sigma : b.
LocalState band_state(const TwoWellRelaxation& rx, double mu, double s) {
    const double bb = contract(rx.b(), rx.b());
    const SymMatrix sig = (s / bb) * rx.b();
    const SymMatrix eps = rx.metric().apply_inverse(sig) + mu * rx.b();
    return LocalState(eps, sig);
}

}  // namespace

TEST_CASE("c_hat solves the acoustic system and minimizes the well residual") {
    Rng rng(404);
    for (int dim : {2, 3}) {
        for (int rep = 0; rep < 20; ++rep) {
            const ElasticityTensor C = oracles::random_spd_tensor(dim, rng);
            const SymMatrix b = oracles::random_packed(dim, rng, -1.0, 1.0);
            Vector nu(dim);
            for (int i = 0; i < dim; ++i) nu[i] = rng.normal();
            nu.normalize();

            const Vector c = c_hat(C, b, nu);
            const SymMatrix resid = C.apply(sym_outer(c, nu)) - C.apply(b);
            // The acoustic system: C(c x nu)nu = (C b)nu componentwise.
            Vector lhs = Vector::Zero(dim);
            const Matrix rm = resid.to_matrix();
            for (int i = 0; i < dim; ++i) lhs[i] = (rm.row(i) * nu).value();
            CHECK(lhs.norm() < 1e-10);

            // alpha_hat is the minimum of the residual energy over c.
            const double best = alpha_hat(C, b, nu);
            CHECK(best == doctest::Approx(C.quad_form(sym_outer(c, nu) - b)).epsilon(1e-10));
            CHECK(best ==
                  doctest::Approx(oracles::alpha_by_normal_equations(C, b, nu)).epsilon(1e-8));
            for (int trial = 0; trial < 25; ++trial) {
                Vector probe(dim);
                for (int i = 0; i < dim; ++i) probe[i] = c[i] + 0.5 * rng.normal();
                CHECK(C.quad_form(sym_outer(probe, nu) - b) >= best - 1e-12);
            }

            // Stationarity turns the minimum into a linear pairing with b.
            const SymMatrix sig_hat = C.apply(sym_outer(c, nu) - b);
            CHECK(contract(sig_hat, b) == doctest::Approx(-best).epsilon(1e-10));
        }
    }
}

TEST_CASE("alpha extremes: pinned identity-metric values") {
    const ElasticityTensor id = ElasticityTensor::identity(2);

    {
        const AlphaRange r = alpha_range(id, diag2(1.0, 2.0));
        CHECK(r.alpha_minus == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(r.alpha_plus == doctest::Approx(4.0).epsilon(1e-6));
        // The extremal normals are the coordinate axes (up to sign).
        CHECK(std::abs(r.nu_minus[1]) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(std::abs(r.nu_plus[0]) == doctest::Approx(1.0).epsilon(1e-6));
    }
    {
        // Opposite-sign wells are rank-one compatible: alpha_minus vanishes.
        const AlphaRange r = alpha_range(id, diag2(1.0, -1.0));
        CHECK(r.alpha_minus <= 1e-10);
        CHECK(r.alpha_plus > 0.5);
    }
    {
        // A dilatational well gap is equally incompatible in every direction.
        const AlphaRange r = alpha_range(id, diag2(1.0, 1.0));
        CHECK(r.alpha_minus == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(r.alpha_plus == doctest::Approx(1.0).epsilon(1e-8));
    }
    {
        // One dimension: every well gap is compatible across the single normal.
        const AlphaRange r = alpha_range(ElasticityTensor::scaled_identity(1, 2.0),
                                         SymMatrix::from_diag({0.7}));
        CHECK(r.alpha_minus == 0.0);
        CHECK(r.alpha_plus == 0.0);
        CHECK(r.nu_minus.size() == 1);
        CHECK(r.nu_minus[0] == 1.0);
    }
}

TEST_CASE("alpha extremes match a dense directional sweep") {
    Rng rng(515);
    for (int rep = 0; rep < 3; ++rep) {
        const ElasticityTensor C = oracles::random_spd_tensor(2, rng);
        const SymMatrix b = oracles::random_packed(2, rng, -1.0, 1.0);
        const AlphaRange r = alpha_range(C, b);
        const auto [lo, hi] = oracles::alpha_sweep_2d(C, b);
        const double scale = 1.0 + std::abs(hi);
        CHECK(std::abs(r.alpha_minus - lo) < 1e-6 * scale);
        CHECK(std::abs(r.alpha_plus - hi) < 1e-6 * scale);
    }
    for (int rep = 0; rep < 2; ++rep) {
        const ElasticityTensor C = oracles::random_spd_tensor(3, rng);
        const SymMatrix b = oracles::random_packed(3, rng, -1.0, 1.0);
        const AlphaRange r = alpha_range(C, b);
        const auto [lo, hi] = oracles::alpha_sweep_3d(C, b);
        const double scale = 1.0 + std::abs(hi);
        // The sweep grid itself limits the 3d accuracy.
        CHECK(std::abs(r.alpha_minus - lo) < 5e-3 * scale);
        CHECK(std::abs(r.alpha_plus - hi) < 5e-3 * scale);
        // The refined extremes must bracket every sweep sample.
        CHECK(r.alpha_minus <= lo + 1e-9 * scale);
        CHECK(r.alpha_plus >= hi - 1e-9 * scale);
    }
}

TEST_CASE("alpha extremes: scaling covariance and sign symmetry") {
    Rng rng(626);
    const ElasticityTensor C = oracles::random_spd_tensor(2, rng);
    const SymMatrix b = oracles::random_packed(2, rng, -1.0, 1.0);
    const AlphaRange base = alpha_range(C, b);

    const double s = 1.7;
    SymMatrix sb = b;
    sb *= s;
    const AlphaRange scaled = alpha_range(C, sb);
    CHECK(scaled.alpha_minus == doctest::Approx(s * s * base.alpha_minus).epsilon(1e-7));
    CHECK(scaled.alpha_plus == doctest::Approx(s * s * base.alpha_plus).epsilon(1e-7));

    SymMatrix nb = b;
    nb *= -1.0;
    const AlphaRange flipped = alpha_range(C, nb);
    CHECK(flipped.alpha_minus == doctest::Approx(base.alpha_minus).epsilon(1e-7));
    CHECK(flipped.alpha_plus == doctest::Approx(base.alpha_plus).epsilon(1e-7));
}

TEST_CASE("relaxation normalization: centering and height translation") {
    const ElasticityTensor c1 = ElasticityTensor::scaled_identity(1, 1.0);

    // Wells at 0 and 2 center to +-1 with a pure strain shift.
    {
        const TwoWellRelaxation rx = TwoWellRelaxation::from_two_well(
            TwoWellDataSet(c1, SymMatrix::from_diag({0.0}), SymMatrix::from_diag({2.0}), 0.0));
        CHECK(rx.b()[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(rx.shift().eps[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(rx.shift().sig[0]) < 1e-14);

        // A state on the upper branch normalizes to mu = +1.
        const LocalState on_plus(SymMatrix::from_diag({2.5}), SymMatrix::from_diag({0.5}));
        CHECK(rx.mu(rx.normalize(on_plus)) == doctest::Approx(1.0).epsilon(1e-12));
        const LocalState back = rx.denormalize(rx.normalize(on_plus));
        CHECK(frobenius_sq(back.eps - on_plus.eps) < 1e-28);
        CHECK(frobenius_sq(back.sig - on_plus.sig) < 1e-28);
    }

    // A height difference w = 2 between centered wells translates by (1, 1).
    {
        const TwoWellRelaxation rx = TwoWellRelaxation::from_two_well(
            TwoWellDataSet(c1, SymMatrix::from_diag({-1.0}), SymMatrix::from_diag({1.0}), 2.0));
        CHECK(rx.b()[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(rx.shift().eps[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rx.shift().sig[0] == doctest::Approx(1.0).epsilon(1e-12));
    }

    // from_two_well on an already-normalized set matches from_parameters.
    {
        const ElasticityTensor id = ElasticityTensor::identity(2);
        const SymMatrix b = diag2(1.0, 2.0);
        SymMatrix nb = b;
        nb *= -1.0;
        const TwoWellRelaxation direct = TwoWellRelaxation::from_parameters(id, b);
        const TwoWellRelaxation via_set =
            TwoWellRelaxation::from_two_well(TwoWellDataSet(id, nb, b, 0.0));
        CHECK(via_set.alpha_minus() == doctest::Approx(direct.alpha_minus()).epsilon(1e-10));
        CHECK(via_set.alpha_plus() == doctest::Approx(direct.alpha_plus()).epsilon(1e-10));
        CHECK(via_set.cbb() == doctest::Approx(direct.cbb()).epsilon(1e-12));
        CHECK(frobenius_sq(via_set.shift().eps) < 1e-24);
    }
}

TEST_CASE("optimal rank-one step: pinned geometry for b = diag(1, 2)") {
    const ElasticityTensor id = ElasticityTensor::identity(2);
    const TwoWellRelaxation rx = TwoWellRelaxation::from_parameters(id, diag2(1.0, 2.0));

    CHECK(rx.cbb() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(rx.alpha_minus() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(rx.alpha_plus() == doctest::Approx(4.0).epsilon(1e-6));

    // nu_minus is the second axis; the acoustic solution there is c = (0, 2),
    // so z_hat = (diag(0, 2), diag(-1, 0)).
    const LocalState zh = rx.z_hat();
    CHECK(zh.eps[0] == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(zh.eps[1] == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(std::abs(zh.eps[2]) < 1e-7);
    CHECK(zh.sig[0] == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK(std::abs(zh.sig[1]) < 1e-7);
    CHECK(std::abs(zh.sig[2]) < 1e-7);

    // sigma_hat : b = -alpha_minus, sigma_hat nu = 0, and extremality of the
    // normal adds sigma_hat c = 0.
    const Matrix sig = zh.sig.to_matrix();
    CHECK(contract(zh.sig, rx.b()) == doctest::Approx(-rx.alpha_minus()).epsilon(1e-8));
    CHECK((sig * rx.nu_minus()).norm() < 1e-7);
    CHECK((sig * rx.c_hat_minus()).norm() < 1e-7);
}

TEST_CASE("rank-one stationarity holds for random metrics") {
    Rng rng(737);
    for (int rep = 0; rep < 5; ++rep) {
        const ElasticityTensor C = oracles::random_spd_tensor(2, rng);
        const SymMatrix b = oracles::random_packed(2, rng, -1.0, 1.0);
        const TwoWellRelaxation rx = TwoWellRelaxation::from_parameters(C, b);
        const LocalState zh = rx.z_hat();
        const Matrix sig = zh.sig.to_matrix();
        const double scale = 1.0 + rx.alpha_plus();
        CHECK(contract(zh.sig, rx.b()) ==
              doctest::Approx(-rx.alpha_minus()).epsilon(1e-7));
        CHECK((sig * rx.nu_minus()).norm() < 1e-6 * scale);
        CHECK((sig * rx.c_hat_minus()).norm() < 1e-6 * scale);
    }
}

TEST_CASE("relaxed membership: pinned classifications") {
    const ElasticityTensor id = ElasticityTensor::identity(2);
    const TwoWellRelaxation rx = TwoWellRelaxation::from_parameters(id, diag2(1.0, 2.0));

    // Center of the band.
    const MembershipResult center = membership_relaxed_nd(rx, LocalState::zero(2));
    CHECK(center.region == RelaxedMembership::InRelaxedInterior);
    CHECK(center.mu == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(center.l_residual < 1e-12);

    // The wells themselves are on the branches.
    CHECK(membership_relaxed_nd(rx, state2(diag2(1.0, 2.0), diag2(0.0, 0.0))).region ==
          RelaxedMembership::InDlocPlus);
    CHECK(membership_relaxed_nd(rx, state2(diag2(-1.0, -2.0), diag2(0.0, 0.0))).region ==
          RelaxedMembership::InDlocMinus);

    // Strip state: on the well axis (mu = 0) but at stress level 4.5 > 4.
    const LocalState strip = state2(diag2(4.5, 0.0), diag2(4.5, 0.0));
    CHECK(membership_relaxed_nd(rx, strip).region == RelaxedMembership::Outside);

    // mu = 1 but below the branch stress range: sigma : b = -6 < -5.
    const LocalState below =
        state2(diag2(-6.0 + 1.0, 2.0), diag2(-6.0, 0.0));
    CHECK(membership_relaxed_nd(rx, below).mu == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(membership_relaxed_nd(rx, below).region == RelaxedMembership::Outside);

    // Off the subspace L: eps - C^{-1} sigma not parallel to b.
    const MembershipResult off = membership_relaxed_nd(rx, state2(diag2(2.0, 1.0), diag2(0, 0)));
    CHECK(off.l_residual > 0.5);
    CHECK(off.region == RelaxedMembership::Outside);

    // Band states across the admissible range stay inside.
    for (double mu : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        for (double s : {-3.5, 0.0, 3.5}) {
            if (std::abs(s + rx.alpha_minus() * mu) > rx.cbb() - rx.alpha_minus()) continue;
            CHECK(membership_relaxed_nd(rx, band_state(rx, mu, s)).region !=
                  RelaxedMembership::Outside);
        }
    }
}

TEST_CASE("flag membership: pinned classifications and closed boundaries") {
    const FlagDataSet1D flag(1.0, 1.0);

    CHECK(membership_flag_1d(flag, -3.0, -2.0) == FlagMembership::OnOriginalSet);
    CHECK(membership_flag_1d(flag, 0.0, 0.0) == FlagMembership::InRelaxedSet);
    CHECK(membership_flag_1d(flag, 0.0, 1.5) == FlagMembership::Outside);

    // The kink of the flag lies on the original set (closed convention).
    CHECK(membership_flag_1d(flag, 0.0, 1.0) == FlagMembership::OnOriginalSet);
    // Band corner and band interior.
    CHECK(membership_flag_1d(flag, 2.0, 1.0) == FlagMembership::OnOriginalSet);
    CHECK(membership_flag_1d(flag, 0.5, 0.25) == FlagMembership::InRelaxedSet);
    // Outside the stress band on both sides.
    CHECK(membership_flag_1d(flag, 0.0, -1.5) == FlagMembership::Outside);
    CHECK(membership_flag_1d(flag, 5.0, 5.0) == FlagMembership::Outside);
}

TEST_CASE("rank-one decomposition: pinned split and reconstruction") {
    const ElasticityTensor id = ElasticityTensor::identity(2);

    // Compatible wells b = diag(1, 0): alpha_minus = 0 and z_hat = (b, 0).
    {
        const TwoWellRelaxation rx = TwoWellRelaxation::from_parameters(id, diag2(1.0, 0.0));
        CHECK(rx.alpha_minus() <= 1e-10);
        const LaminateDecomposition d = rank_one_decompose(rx, LocalState::zero(2));
        CHECK(d.mu == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(d.lambda == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(d.z_hat.eps[0] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(frobenius_sq(d.z_hat.sig) < 1e-10);
        CHECK(frobenius_sq(d.z_minus.eps - diag2(-1.0, 0.0)) < 1e-10);
        CHECK(frobenius_sq(d.z_plus.eps - diag2(1.0, 0.0)) < 1e-10);
    }

    Rng rng(848);
    const TwoWellRelaxation rx = TwoWellRelaxation::from_parameters(id, diag2(1.0, 2.0));
    for (int rep = 0; rep < 20; ++rep) {
        const double mu = rng.uniform(-0.95, 0.95);
        const double s_max = rx.cbb() - rx.alpha_minus() - std::abs(rx.alpha_minus() * mu);
        const LocalState z = band_state(rx, mu, rng.uniform(-0.9, 0.9) * s_max);
        const LaminateDecomposition d = rank_one_decompose(rx, z);

        CHECK(d.lambda == doctest::Approx((1.0 - mu) / 2.0).epsilon(1e-9));

        // Reconstruction: z = lambda z- + (1 - lambda) z+.
        const LocalState mix = d.lambda * d.z_minus + (1.0 - d.lambda) * d.z_plus;
        CHECK(local_sq_distance(mix, z, id) < 1e-16);

        // The two phases live on the branches.
        CHECK(membership_relaxed_nd(rx, d.z_minus).region == RelaxedMembership::InDlocMinus);
        CHECK(membership_relaxed_nd(rx, d.z_plus).region == RelaxedMembership::InDlocPlus);

        // The jump is rank-one in strain and equilibrated across the layers.
        const SymMatrix eps_jump = d.z_plus.eps - d.z_minus.eps;
        CHECK(frobenius_sq(eps_jump - sym_outer(d.c, d.nu)) < 1e-12);
        const Matrix sig_jump = (d.z_plus.sig - d.z_minus.sig).to_matrix();
        CHECK((sig_jump * d.nu).norm() < 1e-6);
    }

    // mu near +1 collapses the laminate onto the plus branch.
    const LocalState top = band_state(rx, 1.0 - 1e-6, 0.0);
    const LaminateDecomposition d = rank_one_decompose(rx, top);
    CHECK(d.lambda == doctest::Approx(5e-7).epsilon(1e-3));
    CHECK(local_sq_distance(d.z_plus, top, id) < 1e-10);

    // States outside the relaxed set are rejected.
    CHECK_THROWS_AS(rank_one_decompose(rx, state2(diag2(4.5, 0.0), diag2(4.5, 0.0))),
                    std::invalid_argument);
}

TEST_CASE("separating certificate: pinned strip point and set-wide bound") {
    const ElasticityTensor id = ElasticityTensor::identity(2);
    const TwoWellRelaxation rx = TwoWellRelaxation::from_parameters(id, diag2(1.0, 2.0));

    // Strip state at mu = 0 with sigma : b = 4.5 (the band ends at 4).
    const LocalState z0 = state2(diag2(4.5, 0.0), diag2(4.5, 0.0));
    const SeparatingCertificate f(rx, z0);
    CHECK(f.delta() == doctest::Approx(0.125).epsilon(1e-6));
    CHECK(f(z0) == doctest::Approx(0.125).epsilon(1e-6));

    // Non-positive across the relaxed set: wells, branches, and the band.
    CHECK(f(LocalState::zero(2)) <= 1e-10);
    CHECK(f(state2(diag2(1.0, 2.0), diag2(0.0, 0.0))) <= 1e-10);
    CHECK(f(state2(diag2(-1.0, -2.0), diag2(0.0, 0.0))) <= 1e-10);
    for (double mu : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        for (double frac : {-0.95, -0.5, 0.0, 0.5, 0.95}) {
            const double s_max = rx.cbb() - rx.alpha_minus() - rx.alpha_minus() * mu * frac;
            const double s = frac * (rx.cbb() - rx.alpha_minus()) - rx.alpha_minus() * mu;
            if (std::abs(s + rx.alpha_minus() * mu) > rx.cbb() - rx.alpha_minus() + 1e-12)
                continue;
            (void)s_max;
            CHECK(f(band_state(rx, mu, s)) <= 1e-10);
        }
    }
    // Branch states beyond the band range.
    for (double s : {-4.9, -2.0, 6.0, 30.0}) {
        const SymMatrix sig = (s / contract(rx.b(), rx.b())) * rx.b();
        const LocalState plus(id.apply_inverse(sig) + rx.b(), sig);
        if (s >= -rx.cbb()) CHECK(f(plus) <= 1e-10);
    }
}

TEST_CASE("two-phase reduction: pinned minima and membership consistency") {
    // Free stress level: every mean strain is reachable, single-phase outside.
    {
        const Reduced1DSolution sol = reduced_1d_two_well_solve(1.0, 1.0, 5.0);
        CHECK(sol.d2_min < 1e-12);
        CHECK(sol.sigma_bar == doctest::Approx(4.0).epsilon(1e-4));
        CHECK(sol.lambda * sol.eps_a + (1.0 - sol.lambda) * sol.eps_b ==
              doctest::Approx(5.0).epsilon(1e-9));
    }
    for (double eps_bar : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
        CHECK(reduced_1d_two_well_solve(1.0, 1.0, eps_bar).d2_min < 1e-12);
    }

    // Fixing the stress outside the band forces a positive minimum.
    CHECK(reduced_1d_two_well_solve(1.0, 1.0, 0.0, 1.5).d2_min >= 0.05);
    // Fixing it inside the band keeps the mixture attainable.
    CHECK(reduced_1d_two_well_solve(1.0, 1.0, 0.0, 0.0).d2_min < 1e-12);
    CHECK(reduced_1d_two_well_solve(1.0, 1.0, 5.0, 4.0).d2_min < 1e-12);

    // Zero minimum exactly characterizes membership of the relaxed flag.
    const FlagDataSet1D flag(1.0, 1.0);
    int disagreements = 0;
    for (int i = 0; i <= 40; ++i) {
        for (int j = 0; j <= 40; ++j) {
            const double eps = -3.0 + 0.15 * i;
            const double sig = -3.0 + 0.15 * j;
            const bool inside = membership_flag_1d(flag, eps, sig) != FlagMembership::Outside;
            const bool zero = reduced_1d_two_well_solve(1.0, 1.0, eps, sig).d2_min <= 1e-12;
            if (inside != zero) ++disagreements;
        }
    }
    CHECK(disagreements == 0);
}

TEST_CASE("convex envelope: pinned values, flatness, and the witness state") {
    const double C = 2.0, sigma0 = 3.0;
    const ConvexEnvelope1D env(C, sigma0);
    const double eps0 = sigma0 / C;  // well strain

    CHECK(env.energy(0.0) == 0.0);
    CHECK(env.energy(2.0 * eps0) == doctest::Approx(sigma0 * sigma0 / (2.0 * C)).epsilon(1e-12));

    // Flat between the wells, quadratic branches outside.
    for (double e : {-0.9 * eps0, 0.0, 0.9 * eps0}) {
        CHECK(env.energy(e) == 0.0);
        CHECK(env.stress(e) == 0.0);
    }
    CHECK(env.stress(2.0 * eps0) == doctest::Approx(C * eps0).epsilon(1e-12));
    CHECK(env.stress(-2.0 * eps0) == doctest::Approx(-C * eps0).epsilon(1e-12));

    // The envelope never exceeds the two-well energy and is convex.
    auto raw = [&](double e) {
        const double a = e - eps0, b = e + eps0;
        return 0.5 * C * std::min(a * a, b * b);
    };
    for (int i = 0; i <= 60; ++i) {
        const double e = -3.0 + 0.1 * i;
        CHECK(env.energy(e) <= raw(e) + 1e-14);
        const double mid = 0.5 * (env.energy(e - 0.05) + env.energy(e + 0.05));
        CHECK(env.energy(e) <= mid + 1e-12);
    }

    // Graph membership: on the derivative graph iff the stress matches.
    CHECK(env.contains(0.5, 0.0));
    CHECK(env.contains(2.0 * eps0, C * eps0));
    CHECK_FALSE(env.contains(0.0, 0.5 * sigma0));

    // The witness belongs to the relaxed flag but not to the envelope graph:
    // the flag relaxation remembers stress states the energy envelope forgets.
    const LocalState w = env.witness();
    const FlagDataSet1D flag(C, sigma0);
    CHECK(membership_flag_1d(flag, w.eps[0], w.sig[0]) != FlagMembership::Outside);
    CHECK_FALSE(env.contains(w.eps[0], w.sig[0]));
}

TEST_CASE("laminate field: volume fraction converges at the mesh rate") {
    // Frozen setup: wells at +-1 (C = 1), target z = (0.4, 0), so mu = 0.4,
    // lambda = 0.3, z_hat = (1, 0), and z± = (±1, 0).  With h = 4 layers the
    // realizable fraction on an N-element bar is ceil(0.3 p - 0.5)/p, p = N/4,
    // giving mean-state errors |lambda_N - 0.3| * sqrt(2).
    const ElasticityTensor C = ElasticityTensor::scaled_identity(1, 1.0);
    const TwoWellRelaxation rx =
        TwoWellRelaxation::from_parameters(C, SymMatrix::from_diag({1.0}));
    const LocalState z(SymMatrix::from_diag({0.4}), SymMatrix::from_diag({0.0}));
    const LaminateDecomposition d = rank_one_decompose(rx, z);

    CHECK(d.mu == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(d.lambda == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(d.z_hat.eps[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(frobenius_sq(d.z_minus.eps - SymMatrix::from_diag({-1.0})) < 1e-24);
    CHECK(frobenius_sq(d.z_plus.eps - SymMatrix::from_diag({1.0})) < 1e-24);

    const int h = 4;
    const std::vector<int> sizes = {32, 64, 128, 256};
    const std::vector<double> expected_fraction = {0.25, 0.3125, 0.3125, 0.296875};
    const std::vector<double> expected_error = {0.05, 0.0125, 0.0125, 0.003125};

    for (std::size_t k = 0; k < sizes.size(); ++k) {
        const int n = sizes[k];
        const Mesh mesh = Mesh::bar(1.0, n);
        const std::vector<LocalState> field = generate_laminate_field(mesh, d, h);
        REQUIRE(static_cast<int>(field.size()) == n);

        int minus_count = 0;
        LocalState mean = LocalState::zero(1);
        for (int e = 0; e < n; ++e) {
            const bool is_minus = local_sq_distance(field[e], d.z_minus, C) <
                                  local_sq_distance(field[e], d.z_plus, C);
            // Every element state is exactly one of the two phases.
            CHECK(local_sq_distance(field[e], is_minus ? d.z_minus : d.z_plus, C) < 1e-28);
            minus_count += is_minus ? 1 : 0;
            mean += mesh.element_measure(e) * field[e];
        }
        CHECK(static_cast<double>(minus_count) / n ==
              doctest::Approx(expected_fraction[k]).epsilon(1e-14));

        const double err = std::sqrt(local_sq_distance(mean, z, C));
        CHECK(err == doctest::Approx(expected_error[k] * std::sqrt(2.0)).epsilon(1e-10));
        // Realizability bound: the fraction mismatch is at most half a layer.
        CHECK(std::abs(static_cast<double>(minus_count) / n - d.lambda) <=
              static_cast<double>(h) / (2.0 * n) + 1e-14);
    }
}

TEST_CASE("laminate field in two dimensions: fraction and membership") {
    const ElasticityTensor id = ElasticityTensor::identity(2);
    const TwoWellRelaxation rx = TwoWellRelaxation::from_parameters(id, diag2(1.0, 2.0));
    const LaminateDecomposition d = rank_one_decompose(rx, LocalState::zero(2));
    CHECK(d.lambda == doctest::Approx(0.5).epsilon(1e-10));

    const Mesh mesh = Mesh::rectangle(1.0, 1.0, 16, 16, "crossed");
    const std::vector<LocalState> field = generate_laminate_field(mesh, d, 4);

    double minus_volume = 0.0, volume = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const double w = mesh.element_measure(e);
        volume += w;
        if (local_sq_distance(field[e], d.z_minus, id) <
            local_sq_distance(field[e], d.z_plus, id))
            minus_volume += w;
        const RelaxedMembership region = membership_relaxed_nd(rx, field[e]).region;
        CHECK((region == RelaxedMembership::InDlocPlus ||
               region == RelaxedMembership::InDlocMinus));
    }
    CHECK(minus_volume / volume == doctest::Approx(0.5).epsilon(0.15));
}
