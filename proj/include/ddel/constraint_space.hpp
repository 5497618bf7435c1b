#pragma once

#include "ddel/mesh.hpp"
#include "ddel/phase_space.hpp"
#include "ddel/rng.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <vector>

namespace ddel {

/// Prescribed displacement component at a node.
struct DirichletBC {
    int node = 0;
    int component = 0;
    double value = 0.0;
};

/// Traction (force per unit facet measure) on a boundary facet.
struct NeumannBC {
    int facet = 0;
    Eigen::VectorXd traction;
};

/// Boundary conditions and loads for a boundary-value problem.
struct BoundaryData {
    std::vector<DirichletBC> dirichlet;
    std::vector<NeumannBC> neumann;
    /// Optional per-element body force, n_elements x dim (empty for none).
    Eigen::MatrixXd body_force;

    /// Prescribe one displacement component on every node of the marked facets.
    void fix_marker(const Mesh& mesh, int marker, int component, double value);
    /// Apply a constant traction to every facet with the marker.
    void traction_on_marker(const Mesh& mesh, int marker, const Eigen::VectorXd& traction);
};

/// Displacement solution together with the element-wise phase-space states.
struct ClassicalSolution {
    Eigen::VectorXd u;
    StateField field;
};

struct Residuals {
    double compatibility = 0.0;  ///< energy-seminorm defect of the strain field
    double equilibrium = 0.0;    ///< l2 defect of the stress field on free dofs
};

/// The set E of admissible phase-space fields for one boundary-value problem:
/// strains compatible with an admissible displacement, stresses in equilibrium
/// with the applied loads.  Uses linear elements with one integration point per
/// element.  The energy metric used for projections is set by `metric`.
class ConstraintSpace {
public:
    ConstraintSpace(Mesh mesh, ElasticityTensor metric, BoundaryData bc);

    const Mesh& mesh() const { return mesh_; }
    const ElasticityTensor& metric() const { return metric_; }
    int n_dofs() const { return n_dofs_; }
    int n_free() const { return static_cast<int>(free_dofs_.size()); }
    const std::vector<int>& free_dofs() const { return free_dofs_; }
    const Eigen::VectorXd& dirichlet_lift() const { return lift_; }
    const Eigen::VectorXd& force() const { return force_; }

    /// Strain-displacement matrix of element e (packed strain rows).
    const Eigen::MatrixXd& strain_matrix(int e) const { return b_[e]; }
    const std::vector<int>& element_dofs(int e) const { return dofs_[e]; }

    /// Field with all element states zero (weights and metric of this space).
    StateField zero_field() const;
    /// Field wrapping the given element states.
    StateField make_field(std::vector<LocalState> states) const;

    /// Element states (B u, C B u + prestress) for an admissible displacement.
    StateField field_from_displacement(const Eigen::VectorXd& u,
                                       const std::vector<SymMatrix>* prestress = nullptr) const;

    /// Linear-elastic solution for the stored loads, optionally with a
    /// per-element stress offset so the law is sigma = C eps + prestress.
    ClassicalSolution solve_classical(const std::vector<SymMatrix>* prestress = nullptr) const;

    /// Metric projection of a target field onto E: the closest compatible strain
    /// field and the closest equilibrated stress field.  Optionally returns the
    /// displacement behind the strain part and the potential behind the stress
    /// correction.
    StateField project(const StateField& target, Eigen::VectorXd* u_out = nullptr,
                       Eigen::VectorXd* eta_out = nullptr) const;

    /// Displacement whose strain field is closest to the target's strains.
    Eigen::VectorXd displacement_for(const StateField& target) const;

    /// How far a field is from E, split by constraint type.
    Residuals residuals(const StateField& z) const;

    /// Work of the applied loads on a displacement vector.
    double external_work(const Eigen::VectorXd& u) const;

    /// Full-dof virtual-work vector of a stress field, r with
    /// r . v = sum_e w_e sig_e : strain(v)_e for every displacement v.
    Eigen::VectorXd virtual_work_vector(const StateField& field) const;

    /// Max normalized virtual-work pairing over random (compatible, self-
    /// equilibrated) pairs; exact orthogonality makes this round-off small.
    double helmholtz_orthogonality_check(int n_pairs, std::uint64_t seed) const;

private:
    void build_element_matrices();
    void apply_boundary_data(const BoundaryData& bc);
    void assemble();
    /// Full-dof virtual-work vector of a stress field: sum_e w_e B_e^T W2 sig_e.
    Eigen::VectorXd stress_residual(const std::vector<SymMatrix>& sig) const;
    Eigen::VectorXd solve_free(const Eigen::VectorXd& rhs_free) const;
    Eigen::VectorXd scatter(const Eigen::VectorXd& free_values, bool add_lift) const;

    Mesh mesh_;
    ElasticityTensor metric_;
    int n_dofs_ = 0;

    std::vector<Eigen::MatrixXd> b_;      // per-element strain-displacement matrices
    std::vector<std::vector<int>> dofs_;  // per-element global dof indices
    std::vector<double> weights_;         // element measures
    Eigen::MatrixXd energy_;              // quadratic-form matrix on packed strains
    Eigen::VectorXd pairing_;             // diagonal weights of the packed contraction

    std::vector<int> free_dofs_;
    std::vector<int> free_index_;  // dof -> position among free dofs, -1 if fixed
    Eigen::VectorXd lift_;         // prescribed values on fixed dofs, zero elsewhere
    Eigen::VectorXd force_;        // external loads, all dofs

    Eigen::SparseMatrix<double> stiffness_;  // free-free block
    Eigen::VectorXd stiffness_lift_;         // free rows of K times the lift
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver_;
};

}  // namespace ddel
