#pragma once

#include "ddel/data_set.hpp"
#include "ddel/mesh.hpp"
#include "ddel/phase_space.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace ddel {

/// Solve the acoustic system C(c ⊙ ν)ν = (C b)ν for c (SPD for C > 0).
Vector c_hat(const ElasticityTensor& C, const SymMatrix& b, const Vector& nu);

/// alpha_hat(ν) = C(ĉ(ν)⊙ν − b) : (ĉ(ν)⊙ν − b), the minimal well-incompatibility
/// across a layering normal ν.
double alpha_hat(const ElasticityTensor& C, const SymMatrix& b, const Vector& nu);

struct AlphaRange {
    double alpha_minus = 0.0;
    double alpha_plus = 0.0;
    Vector nu_minus;
    Vector nu_plus;
};

/// Extremes of alpha_hat over the unit sphere of layering normals (ν and −ν
/// identified).  Dense sweep plus local refinement; see alpha_hat.
AlphaRange alpha_range(const ElasticityTensor& C, const SymMatrix& b);

/// Relaxation data of a two-well set, normalized so the wells sit at ±b with
/// equal heights.  `shift` maps normalized states back to the original set:
/// z_original = z_normalized + shift.
class TwoWellRelaxation {
public:
    /// Wells already at ±b (no shift).
    static TwoWellRelaxation from_parameters(const ElasticityTensor& C, const SymMatrix& b);
    /// General two-well set: translates unequal heights away and centers the wells.
    static TwoWellRelaxation from_two_well(const TwoWellDataSet& set);

    const ElasticityTensor& metric() const { return C_; }
    const SymMatrix& b() const { return b_; }
    double alpha_minus() const { return alpha_minus_; }
    double alpha_plus() const { return alpha_plus_; }
    const Vector& nu_minus() const { return nu_minus_; }
    const Vector& nu_plus() const { return nu_plus_; }
    const Vector& c_hat_minus() const { return c_hat_minus_; }
    double cbb() const { return cbb_; }
    const LocalState& shift() const { return shift_; }

    LocalState normalize(const LocalState& z) const { return z - shift_; }
    LocalState denormalize(const LocalState& z) const { return z + shift_; }

    /// Coordinate of a normalized state along the well axis:
    /// μ = (ε − C⁻¹σ) : b / (b : b); ±1 on the two branches.
    double mu(const LocalState& normalized) const;

    /// Norm of the part of ε − C⁻¹σ orthogonal to b (zero on the subspace L
    /// containing the relaxed set).
    double l_residual(const LocalState& normalized) const;

    /// The optimal rank-one direction: ẑ = (ĉ(ν−)⊙ν−, C(ĉ(ν−)⊙ν− − b)),
    /// which satisfies σ̂·b = −α− and connects the branches.
    LocalState z_hat() const;

private:
    TwoWellRelaxation() = default;

    ElasticityTensor C_ = ElasticityTensor::identity(1);
    SymMatrix b_ = SymMatrix::zero(1);
    double alpha_minus_ = 0.0;
    double alpha_plus_ = 0.0;
    Vector nu_minus_;
    Vector nu_plus_;
    Vector c_hat_minus_;
    double cbb_ = 0.0;
    LocalState shift_ = LocalState::zero(1);
};

enum class FlagMembership { OnOriginalSet, InRelaxedSet, Outside };
enum class RelaxedMembership { InDlocPlus, InDlocMinus, InRelaxedInterior, Outside };

struct MembershipResult {
    RelaxedMembership region = RelaxedMembership::Outside;
    double mu = 0.0;
    double l_residual = 0.0;
};

/// Classify a 1D state against the flag set: on the original two-branch set
/// (takes precedence), inside the relaxed flag, or outside.  Closed-set
/// convention: equality within tol counts as inside.
FlagMembership membership_flag_1d(const FlagDataSet1D& flag, double eps, double sig,
                                  double tol = 1e-9);

/// Classify a raw state against the relaxed two-well set:
///   D+ (μ=1, σ·b ≥ −Cb·b),   D− (μ=−1, σ·b ≤ Cb·b),
///   interior band (|μ| ≤ 1, |σ·b + α−μ| ≤ Cb·b − α−),   else outside.
/// States off the subspace L (residual beyond tol·(1+|z|)) are outside.
MembershipResult membership_relaxed_nd(const TwoWellRelaxation& rx, const LocalState& z,
                                       double tol = 1e-9);

struct LaminateDecomposition {
    LocalState z_minus;
    LocalState z_plus;
    double lambda = 0.0;  ///< volume fraction of z_minus
    double mu = 0.0;
    Vector nu;
    Vector c;          ///< ε+ − ε− = c ⊙ ν
    LocalState z_hat;  ///< the rank-one step (normalized coordinates)
};

/// Split an interior state of the relaxed set into a rank-one-connected pair on
/// the two branches: z± = z + (±1−μ)ẑ, mixed as z = λz− + (1−λ)z+ with
/// λ = (1−μ)/2.
LaminateDecomposition rank_one_decompose(const TwoWellRelaxation& rx, const LocalState& z,
                                         double tol = 1e-9);

/// Quadratic-plus-linear function separating a point of the strip
///   U = { z in L : μ0 ∈ [−1,1), σ0·b + α−μ0 > Cb·b − α− }
/// from the relaxed set: f(z0) = δ(1−μ0) > 0 while f ≤ 0 on the relaxed set.
class SeparatingCertificate {
public:
    SeparatingCertificate(const TwoWellRelaxation& rx, const LocalState& z0, double tol = 1e-9);

    double operator()(const LocalState& z) const;

    double delta() const { return delta_; }
    const LocalState& z_star() const { return z_star_; }  ///< normalized coordinates

private:
    const TwoWellRelaxation* rx_;
    LocalState z_star_;
    double delta_ = 0.0;
    Eigen::ColPivHouseholderQR<Matrix> projector_;  // least-squares map onto L
    Matrix cinv_mandel_;
    Vector b_mandel_;
};

/// Per-element laminate field: phase z− where frac(h x_c·ν) < λ at the element
/// centroid x_c, phase z+ elsewhere.  Layer jumps are compatible because
/// z+ − z− lies in the rank-one cone.
std::vector<LocalState> generate_laminate_field(const Mesh& mesh,
                                                const LaminateDecomposition& decomp, int h);

struct Reduced1DSolution {
    double d2_min = 0.0;
    double lambda = 0.0;  ///< fraction of the (+) branch component A
    double eps_a = 0.0;
    double eps_b = 0.0;
    double sigma_bar = 0.0;
};

/// Two-phase reduction of the 1D two-well bar problem with mean strain ε̄:
/// minimize λ d²((εA,σ̄),D+) + (1−λ) d²((εB,σ̄),D−) subject to
/// λεA + (1−λ)εB = ε̄; σ̄ optimized unless `sigma_fixed` is given.
/// Zero minimum is equivalent to (ε̄, σ̄) reaching the relaxed flag set.
Reduced1DSolution reduced_1d_two_well_solve(double C, double sigma0, double eps_bar,
                                            std::optional<double> sigma_fixed = std::nullopt);

/// Convex envelope of the 1D two-well energy and the set of its stress-strain
/// pairs, for comparison against the flag relaxation.
class ConvexEnvelope1D {
public:
    ConvexEnvelope1D(double C, double sigma0);

    double energy(double eps) const;       ///< W**(ε)
    double stress(double eps) const;       ///< (W**)′(ε)
    bool contains(double eps, double sig, double tol = 1e-9) const;

    /// A state in the flag relaxation but not on the envelope graph.
    LocalState witness() const;

private:
    double C_;
    double sigma0_;
};

}  // namespace ddel
