#include "ddel/constraint_space.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ddel {

// ---------------------------------------------------------------------------
// BoundaryData helpers
// ---------------------------------------------------------------------------

void BoundaryData::fix_marker(const Mesh& mesh, int marker, int component, double value) {
    const auto nodes = mesh.nodes_with_marker(marker);
    if (nodes.empty())
        throw std::invalid_argument("fix_marker: no facets with marker " + std::to_string(marker));
    for (int n : nodes) dirichlet.push_back({n, component, value});
}

void BoundaryData::traction_on_marker(const Mesh& mesh, int marker,
                                      const Eigen::VectorXd& traction) {
    bool found = false;
    for (int f = 0; f < static_cast<int>(mesh.facets().size()); ++f) {
        if (mesh.facets()[f].marker != marker) continue;
        neumann.push_back({f, traction});
        found = true;
    }
    if (!found)
        throw std::invalid_argument("traction_on_marker: no facets with marker " +
                                    std::to_string(marker));
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

ConstraintSpace::ConstraintSpace(Mesh mesh, ElasticityTensor metric, BoundaryData bc)
    : mesh_(std::move(mesh)), metric_(std::move(metric)) {
    if (metric_.dim() != mesh_.dim())
        throw std::invalid_argument("ConstraintSpace: metric dim must match mesh dim");
    n_dofs_ = mesh_.n_nodes() * mesh_.dim();

    const int dim = mesh_.dim();
    const int s = packed_size(dim);
    // Packed-coordinate matrices of the energy quadratic form e -> C e : e and of
    // the duality pairing s : e.
    Eigen::VectorXd scale(s);
    for (int k = 0; k < s; ++k) scale[k] = detail::mandel_scale(dim, k);
    energy_ = scale.asDiagonal() * metric_.voigt() * scale.asDiagonal();
    pairing_ = scale.array().square();

    build_element_matrices();
    apply_boundary_data(bc);
    assemble();
}

void ConstraintSpace::build_element_matrices() {
    const int dim = mesh_.dim();
    const int s = packed_size(dim);
    const int ndofs = dim * (dim + 1);

    b_.resize(mesh_.n_elements());
    dofs_.resize(mesh_.n_elements());
    weights_.resize(mesh_.n_elements());

    for (int e = 0; e < mesh_.n_elements(); ++e) {
        const auto& elem = mesh_.element(e);
        weights_[e] = mesh_.element_measure(e);
        auto& dofs = dofs_[e];
        dofs.resize(ndofs);
        for (int i = 0; i <= dim; ++i)
            for (int c = 0; c < dim; ++c) dofs[i * dim + c] = elem[i] * dim + c;

        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(s, ndofs);
        if (dim == 1) {
            const double dx = mesh_.coords()(elem[1], 0) - mesh_.coords()(elem[0], 0);
            b(0, 0) = -1.0 / dx;
            b(0, 1) = 1.0 / dx;
        } else {
            // Shape-function gradients of a linear triangle.
            const Eigen::Vector2d p0 = mesh_.coords().row(elem[0]),
                                  p1 = mesh_.coords().row(elem[1]),
                                  p2 = mesh_.coords().row(elem[2]);
            const double det = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
            Eigen::Matrix<double, 3, 2> grad;
            grad.row(0) = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / det;
            grad.row(1) = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / det;
            grad.row(2) = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / det;
            for (int i = 0; i < 3; ++i) {
                b(0, i * 2 + 0) = grad(i, 0);                // e11 = du_x/dx
                b(1, i * 2 + 1) = grad(i, 1);                // e22 = du_y/dy
                b(2, i * 2 + 0) = 0.5 * grad(i, 1);          // e12 = (du_x/dy
                b(2, i * 2 + 1) = 0.5 * grad(i, 0);          //      + du_y/dx)/2
            }
        }
        b_[e] = std::move(b);
    }
}

void ConstraintSpace::apply_boundary_data(const BoundaryData& bc) {
    const int dim = mesh_.dim();
    std::map<int, double> fixed;  // dof -> prescribed value
    for (const auto& d : bc.dirichlet) {
        if (d.node < 0 || d.node >= mesh_.n_nodes())
            throw std::invalid_argument("BoundaryData: Dirichlet node out of range");
        if (d.component < 0 || d.component >= dim)
            throw std::invalid_argument("BoundaryData: Dirichlet component out of range");
        const int dof = d.node * dim + d.component;
        auto [it, inserted] = fixed.emplace(dof, d.value);
        if (!inserted && it->second != d.value)
            throw std::invalid_argument("BoundaryData: conflicting Dirichlet values at node " +
                                        std::to_string(d.node));
    }

    lift_ = Eigen::VectorXd::Zero(n_dofs_);
    free_index_.assign(n_dofs_, -1);
    free_dofs_.clear();
    for (int dof = 0; dof < n_dofs_; ++dof) {
        auto it = fixed.find(dof);
        if (it != fixed.end()) {
            lift_[dof] = it->second;
        } else {
            free_index_[dof] = static_cast<int>(free_dofs_.size());
            free_dofs_.push_back(dof);
        }
    }

    force_ = Eigen::VectorXd::Zero(n_dofs_);
    for (const auto& n : bc.neumann) {
        if (n.facet < 0 || n.facet >= static_cast<int>(mesh_.facets().size()))
            throw std::invalid_argument("BoundaryData: Neumann facet out of range");
        if (n.traction.size() != dim)
            throw std::invalid_argument("BoundaryData: traction size must match dim");
        const auto& facet = mesh_.facets()[n.facet];
        const double share = mesh_.facet_measure(n.facet) / static_cast<double>(facet.nodes.size());
        for (int node : facet.nodes)
            for (int c = 0; c < dim; ++c) force_[node * dim + c] += share * n.traction[c];
    }
    if (bc.body_force.size() != 0) {
        if (bc.body_force.rows() != mesh_.n_elements() || bc.body_force.cols() != dim)
            throw std::invalid_argument("BoundaryData: body_force must be n_elements x dim");
        for (int e = 0; e < mesh_.n_elements(); ++e) {
            const double share = weights_[e] / static_cast<double>(dim + 1);
            for (int node : mesh_.element(e))
                for (int c = 0; c < dim; ++c)
                    force_[node * dim + c] += share * bc.body_force(e, c);
        }
    }
}

void ConstraintSpace::assemble() {
    const int nf = n_free();
    std::vector<Eigen::Triplet<double>> triplets;
    stiffness_lift_ = Eigen::VectorXd::Zero(nf);

    for (int e = 0; e < mesh_.n_elements(); ++e) {
        const Eigen::MatrixXd ke = weights_[e] * b_[e].transpose() * energy_ * b_[e];
        const auto& dofs = dofs_[e];
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            const int fi = free_index_[dofs[i]];
            if (fi < 0) continue;
            for (std::size_t j = 0; j < dofs.size(); ++j) {
                const int fj = free_index_[dofs[j]];
                if (fj >= 0)
                    triplets.emplace_back(fi, fj, ke(i, j));
                else
                    stiffness_lift_[fi] += ke(i, j) * lift_[dofs[j]];
            }
        }
    }

    stiffness_.resize(nf, nf);
    stiffness_.setFromTriplets(triplets.begin(), triplets.end());
    if (nf == 0) return;

    solver_.compute(stiffness_);
    if (solver_.info() != Eigen::Success) {
        std::string msg =
            "ConstraintSpace: stiffness matrix is singular (are the Dirichlet "
            "conditions enough to exclude rigid motions?)";
        if (nf <= 1500) {
            // Point at the dominant dof of the null direction to help debugging.
            const Eigen::MatrixXd dense(stiffness_);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
            int worst = 0;
            eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
            const int dof = free_dofs_[worst];
            msg += "; null direction peaks at node " + std::to_string(dof / mesh_.dim()) +
                   " component " + std::to_string(dof % mesh_.dim());
        }
        throw std::runtime_error(msg);
    }
}

// ---------------------------------------------------------------------------
// Fields and solves
// ---------------------------------------------------------------------------

StateField ConstraintSpace::zero_field() const {
    return make_field(std::vector<LocalState>(mesh_.n_elements(), LocalState::zero(mesh_.dim())));
}

StateField ConstraintSpace::make_field(std::vector<LocalState> states) const {
    return StateField(std::move(states), weights_, metric_);
}

StateField ConstraintSpace::field_from_displacement(const Eigen::VectorXd& u,
                                                    const std::vector<SymMatrix>* prestress) const {
    if (u.size() != n_dofs_)
        throw std::invalid_argument("field_from_displacement: displacement size mismatch");
    if (prestress && static_cast<int>(prestress->size()) != mesh_.n_elements())
        throw std::invalid_argument("field_from_displacement: prestress size mismatch");
    const int dim = mesh_.dim();
    std::vector<LocalState> states;
    states.reserve(mesh_.n_elements());
    for (int e = 0; e < mesh_.n_elements(); ++e) {
        Eigen::VectorXd ue(dofs_[e].size());
        for (std::size_t i = 0; i < dofs_[e].size(); ++i) ue[i] = u[dofs_[e][i]];
        const Eigen::VectorXd strain = b_[e] * ue;
        SymMatrix eps(dim);
        for (int k = 0; k < strain.size(); ++k) eps[k] = strain[k];
        SymMatrix sig = metric_.apply(eps);
        if (prestress) sig += (*prestress)[e];
        states.push_back({eps, sig});
    }
    return make_field(std::move(states));
}

Eigen::VectorXd ConstraintSpace::stress_residual(const std::vector<SymMatrix>& sig) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n_dofs_);
    for (int e = 0; e < mesh_.n_elements(); ++e) {
        const Eigen::VectorXd packed =
            Eigen::Map<const Eigen::VectorXd>(sig[e].packed().data(), b_[e].rows());
        const Eigen::VectorXd re = weights_[e] * b_[e].transpose() * (pairing_.asDiagonal() * packed);
        for (std::size_t i = 0; i < dofs_[e].size(); ++i) r[dofs_[e][i]] += re[i];
    }
    return r;
}

Eigen::VectorXd ConstraintSpace::solve_free(const Eigen::VectorXd& rhs_free) const {
    if (n_free() == 0) return Eigen::VectorXd();
    return solver_.solve(rhs_free);
}

Eigen::VectorXd ConstraintSpace::scatter(const Eigen::VectorXd& free_values, bool add_lift) const {
    Eigen::VectorXd u = add_lift ? lift_ : Eigen::VectorXd::Zero(n_dofs_);
    for (int i = 0; i < static_cast<int>(free_values.size()); ++i)
        u[free_dofs_[i]] += free_values[i];
    return u;
}

ClassicalSolution ConstraintSpace::solve_classical(const std::vector<SymMatrix>* prestress) const {
    Eigen::VectorXd rhs(n_free());
    for (int i = 0; i < n_free(); ++i) rhs[i] = force_[free_dofs_[i]];
    rhs -= stiffness_lift_;
    if (prestress) {
        if (static_cast<int>(prestress->size()) != mesh_.n_elements())
            throw std::invalid_argument("solve_classical: prestress size mismatch");
        const Eigen::VectorXd r = stress_residual(*prestress);
        for (int i = 0; i < n_free(); ++i) rhs[i] -= r[free_dofs_[i]];
    }
    const Eigen::VectorXd u = scatter(solve_free(rhs), true);
    return {u, field_from_displacement(u, prestress)};
}

StateField ConstraintSpace::project(const StateField& target, Eigen::VectorXd* u_out,
                                    Eigen::VectorXd* eta_out) const {
    if (target.size() != mesh_.n_elements() || target.dim() != mesh_.dim())
        throw std::invalid_argument("project: target field does not match the mesh");
    const int dim = mesh_.dim();
    const int s = packed_size(dim);

    // Strain half: the compatible strain field closest in the energy metric.
    Eigen::VectorXd strain_rhs = Eigen::VectorXd::Zero(n_dofs_);
    for (int e = 0; e < mesh_.n_elements(); ++e) {
        const Eigen::VectorXd packed =
            Eigen::Map<const Eigen::VectorXd>(target[e].eps.packed().data(), s);
        const Eigen::VectorXd re = weights_[e] * b_[e].transpose() * (energy_ * packed);
        for (std::size_t i = 0; i < dofs_[e].size(); ++i) strain_rhs[dofs_[e][i]] += re[i];
    }
    Eigen::VectorXd rhs(n_free());
    for (int i = 0; i < n_free(); ++i) rhs[i] = strain_rhs[free_dofs_[i]];
    rhs -= stiffness_lift_;
    const Eigen::VectorXd u = scatter(solve_free(rhs), true);

    // Stress half: the equilibrated stress field closest in the complementary
    // metric; the correction is the stress of a displacement potential.
    std::vector<SymMatrix> sig_star;
    sig_star.reserve(target.size());
    for (int e = 0; e < target.size(); ++e) sig_star.push_back(target[e].sig);
    const Eigen::VectorXd r = stress_residual(sig_star);
    Eigen::VectorXd stress_rhs(n_free());
    for (int i = 0; i < n_free(); ++i)
        stress_rhs[i] = force_[free_dofs_[i]] - r[free_dofs_[i]];
    const Eigen::VectorXd eta = scatter(solve_free(stress_rhs), false);

    std::vector<LocalState> states;
    states.reserve(mesh_.n_elements());
    for (int e = 0; e < mesh_.n_elements(); ++e) {
        Eigen::VectorXd ue(dofs_[e].size()), etae(dofs_[e].size());
        for (std::size_t i = 0; i < dofs_[e].size(); ++i) {
            ue[i] = u[dofs_[e][i]];
            etae[i] = eta[dofs_[e][i]];
        }
        const Eigen::VectorXd eps_packed = b_[e] * ue;
        const Eigen::VectorXd deta = b_[e] * etae;
        SymMatrix eps(dim), correction(dim);
        for (int k = 0; k < s; ++k) {
            eps[k] = eps_packed[k];
            correction[k] = deta[k];
        }
        states.push_back({eps, target[e].sig + metric_.apply(correction)});
    }
    if (u_out) *u_out = u;
    if (eta_out) *eta_out = eta;
    return make_field(std::move(states));
}

Eigen::VectorXd ConstraintSpace::displacement_for(const StateField& target) const {
    Eigen::VectorXd u;
    project(target, &u, nullptr);
    return u;
}

Residuals ConstraintSpace::residuals(const StateField& z) const {
    Residuals res;
    Eigen::VectorXd u;
    project(z, &u, nullptr);
    const StateField compatible = field_from_displacement(u);
    double compat = 0.0;
    for (int e = 0; e < z.size(); ++e)
        compat += weights_[e] * metric_.quad_form(z[e].eps - compatible[e].eps);
    res.compatibility = std::sqrt(compat);

    std::vector<SymMatrix> sig;
    sig.reserve(z.size());
    for (int e = 0; e < z.size(); ++e) sig.push_back(z[e].sig);
    const Eigen::VectorXd r = stress_residual(sig);
    double equil = 0.0;
    for (int dof : free_dofs_) {
        const double d = r[dof] - force_[dof];
        equil += d * d;
    }
    res.equilibrium = std::sqrt(equil);
    return res;
}

double ConstraintSpace::external_work(const Eigen::VectorXd& u) const {
    if (u.size() != n_dofs_) throw std::invalid_argument("external_work: size mismatch");
    return force_.dot(u);
}

Eigen::VectorXd ConstraintSpace::virtual_work_vector(const StateField& field) const {
    if (field.size() != mesh_.n_elements())
        throw std::invalid_argument("virtual_work_vector: field size does not match mesh");
    std::vector<SymMatrix> sig;
    sig.reserve(field.size());
    for (int e = 0; e < field.size(); ++e) sig.push_back(field[e].sig);
    return stress_residual(sig);
}

double ConstraintSpace::helmholtz_orthogonality_check(int n_pairs, std::uint64_t seed) const {
    Rng rng(seed);
    const int dim = mesh_.dim();
    const int s = packed_size(dim);
    double worst = 0.0;
    for (int trial = 0; trial < n_pairs; ++trial) {
        // Self-equilibrated stress: equilibrate a random field against zero loads.
        std::vector<SymMatrix> sig(mesh_.n_elements(), SymMatrix::zero(dim));
        for (auto& s_e : sig)
            for (int k = 0; k < s; ++k) s_e[k] = rng.normal();
        const Eigen::VectorXd r = stress_residual(sig);
        Eigen::VectorXd rhs(n_free());
        for (int i = 0; i < n_free(); ++i) rhs[i] = -r[free_dofs_[i]];
        const Eigen::VectorXd eta = scatter(solve_free(rhs), false);

        // Compatible strain of a random admissible variation (zero where fixed).
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n_dofs_);
        for (int dof : free_dofs_) v[dof] = rng.normal();

        double pairing = 0.0, norm_e = 0.0, norm_s = 0.0;
        for (int e = 0; e < mesh_.n_elements(); ++e) {
            Eigen::VectorXd ve(dofs_[e].size()), etae(dofs_[e].size());
            for (std::size_t i = 0; i < dofs_[e].size(); ++i) {
                ve[i] = v[dofs_[e][i]];
                etae[i] = eta[dofs_[e][i]];
            }
            const Eigen::VectorXd strain = b_[e] * ve;
            const Eigen::VectorXd deta = b_[e] * etae;
            SymMatrix eps(dim), corr(dim);
            for (int k = 0; k < s; ++k) {
                eps[k] = strain[k];
                corr[k] = deta[k];
            }
            const SymMatrix sig_eq = sig[e] + metric_.apply(corr);
            pairing += weights_[e] * contract(eps, sig_eq);
            norm_e += weights_[e] * metric_.quad_form(eps);
            norm_s += weights_[e] * metric_.inv_quad_form(sig_eq);
        }
        const double scale = std::sqrt(norm_e * norm_s) + 1e-300;
        worst = std::max(worst, std::abs(pairing) / scale);
    }
    return worst;
}

}  // namespace ddel
