#pragma once

#include "ddel/kdtree.hpp"
#include "ddel/phase_space.hpp"
#include "ddel/rng.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ddel {

/// Result of a nearest-point query against a material data set.
struct NearestResult {
    LocalState point;
    double sq_distance = 0.0;
    int index = -1;  // point index for clouds, branch index for branchwise sets, else -1
};

/// A set of admissible material states, queried by nearest point in the energy metric.
/// Analytic sets measure distance with their own stiffness tensor; point clouds carry
/// an explicit metric.
class MaterialDataSet {
  public:
    virtual ~MaterialDataSet() = default;
    virtual int dim() const = 0;
    virtual const ElasticityTensor& metric() const = 0;
    virtual NearestResult nearest(const LocalState& z) const = 0;
    /// A random member of the set, used to seed randomized solver starts.
    virtual LocalState random_state(Rng& rng) const = 0;
    virtual std::string kind() const = 0;
};

/// Closed half-space {e : direction : e <= bound} (or >=) restricting the strain of a
/// graph branch.
struct HalfSpace {
    enum class Sense { LessEqual, GreaterEqual };
    SymMatrix direction;
    double bound = 0.0;
    Sense sense = Sense::LessEqual;

    bool contains(const SymMatrix& e, double tol = 0.0) const {
        const double v = contract(direction, e);
        return sense == Sense::LessEqual ? v <= bound + tol : v >= bound - tol;
    }
};

/// Affine stress-strain graph {(e, C e + offset)} optionally restricted to a strain
/// half-space.  Projection is closed-form; when the unconstrained minimizer violates
/// the half-space it is re-projected within the boundary hyperplane.
class AffineGraphBranch : public MaterialDataSet {
  public:
    AffineGraphBranch(ElasticityTensor C, SymMatrix offset,
                      std::optional<HalfSpace> halfspace = std::nullopt);

    int dim() const override { return C_.dim(); }
    const ElasticityTensor& metric() const override { return C_; }
    NearestResult nearest(const LocalState& z) const override;
    LocalState random_state(Rng& rng) const override;
    std::string kind() const override { return "linear_graph"; }

    const SymMatrix& offset() const { return offset_; }
    const std::optional<HalfSpace>& halfspace() const { return halfspace_; }

    /// Nearest graph point in the energy metric.
    LocalState project(const LocalState& z) const;
    /// The graph state over a given strain (half-space ignored).
    LocalState at(const SymMatrix& e) const { return {e, C_.apply(e) + offset_}; }

  private:
    ElasticityTensor C_;
    SymMatrix offset_;
    std::optional<HalfSpace> halfspace_;
};

/// Two affine branches generated by the quadratic-well energy
///   min(W(e - a), W(e - b) + w),  W(e) = 1/2 C e : e,
/// split along the plane where the two wells exchange the minimum.
class TwoWellDataSet : public MaterialDataSet {
  public:
    TwoWellDataSet(ElasticityTensor C, SymMatrix a, SymMatrix b, double w = 0.0);

    int dim() const override { return C_.dim(); }
    const ElasticityTensor& metric() const override { return C_; }
    NearestResult nearest(const LocalState& z) const override;
    LocalState random_state(Rng& rng) const override;
    std::string kind() const override { return "two_well"; }

    const SymMatrix& well_a() const { return a_; }
    const SymMatrix& well_b() const { return b_; }
    double well_offset() const { return w_; }
    /// Branch 0 carries well a, branch 1 well b.
    const AffineGraphBranch& branch(int i) const { return i == 0 ? branch_a_ : branch_b_; }

  private:
    ElasticityTensor C_;
    SymMatrix a_, b_;
    double w_;
    AffineGraphBranch branch_a_;
    AffineGraphBranch branch_b_;
};

/// The relaxed scalar two-branch set: the two outer graph rays
///   {(e, C e + sigma0) : e <= -2 sigma0/C} and {(e, C e - sigma0) : e >= 2 sigma0/C}
/// joined by the filled flag regions between them.
class FlagDataSet1D : public MaterialDataSet {
  public:
    FlagDataSet1D(double C, double sigma0);

    int dim() const override { return 1; }
    const ElasticityTensor& metric() const override { return metric_; }
    NearestResult nearest(const LocalState& z) const override;
    LocalState random_state(Rng& rng) const override;
    std::string kind() const override { return "flag"; }

    double stiffness() const { return C_; }
    double sigma0() const { return sigma0_; }
    /// Set membership with the closed-set convention (boundary within tol is inside).
    bool contains(double eps, double sig, double tol) const;

  private:
    double C_, sigma0_;
    ElasticityTensor metric_;
};

/// Finite set of states indexed for exact nearest-neighbor queries in the energy
/// metric; the index works on Cholesky-embedded coordinates where the Euclidean
/// distance equals the energy distance.
class PointCloudDataSet : public MaterialDataSet {
  public:
    struct Provenance {
        std::string source;  // e.g. "sample:two_well"
        std::uint64_t seed = 0;
        double rho = 0.0;
        double t = 0.0;
    };

    PointCloudDataSet(std::vector<LocalState> points, ElasticityTensor metric,
                      std::optional<Provenance> provenance = std::nullopt);

    int dim() const override { return metric_.dim(); }
    const ElasticityTensor& metric() const override { return metric_; }
    NearestResult nearest(const LocalState& z) const override;
    LocalState random_state(Rng& rng) const override;
    std::string kind() const override { return "point_cloud"; }

    int size() const { return static_cast<int>(points_.size()); }
    const std::vector<LocalState>& points() const { return points_; }
    const std::optional<Provenance>& provenance() const { return provenance_; }

    /// Reference linear-scan query used to validate the index.
    NearestResult nearest_brute_force(const LocalState& z) const;

    /// Energy-metric embedding of a state (strain block through chol(C), stress block
    /// through chol(C)^{-1}); |embed(a) - embed(b)|^2 equals local_sq_distance(a, b).
    Vector embed(const LocalState& z) const;
    LocalState unembed(const Vector& u) const;

  private:
    NearestResult make_result(int index, const LocalState& z) const;

    std::vector<LocalState> points_;
    ElasticityTensor metric_;
    std::optional<Provenance> provenance_;
    std::unique_ptr<KdTree> tree_;
};

/// Regular-grid sampling plan for an analytic set: target covering radius rho in the
/// energy metric, uniform perturbation amplitude t applied in the embedding, an axis
/// box of packed-strain ranges, and the seed that makes it reproducible.
struct SamplingSpec {
    double rho = 0.1;
    double t = 0.0;
    std::vector<std::array<double, 2>> box;  // one [lo, hi] per packed strain component
    std::uint64_t seed = 0;
};

/// Sample an analytic branchwise set (linear graph or two-well) on a regular strain
/// grid.  With t = 0 every sample lies exactly on the set and every set point inside
/// the box has a sample within rho; with t > 0 samples deviate from the set by at most
/// t, so the covering guarantee degrades to rho + t.
PointCloudDataSet sample(const MaterialDataSet& set, const SamplingSpec& spec);

/// Equal-height reduction of an unequal two-well set: returns the equalized set and
/// the phase-space shift such that p is in the unequal set iff p - shift is in the
/// equalized one.
std::pair<TwoWellDataSet, LocalState> translate_unequal_wells(const TwoWellDataSet& set);

/// Weighted sum over elements of the squared nearest distance to the set.
double field_distance_sq(const StateField& field, const MaterialDataSet& set,
                         int threads = 1);

/// Point-cloud persistence: CSV of packed components with a JSON sidecar carrying the
/// dimension, the metric, and the sampling provenance.
void save_point_cloud(const PointCloudDataSet& cloud, const std::string& csv_path,
                      const std::string& sidecar_path);
PointCloudDataSet load_point_cloud(const std::string& csv_path,
                                   const std::string& sidecar_path);

}  // namespace ddel
