#include "ddel/phase_space.hpp"

#include <Eigen/Eigenvalues>

namespace ddel {

SymMatrix SymMatrix::from_matrix(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("SymMatrix: matrix not square");
    const int dim = static_cast<int>(a.rows());
    const double scale = 1.0 + a.cwiseAbs().maxCoeff();
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("SymMatrix: matrix not symmetric");
    SymMatrix m(dim);
    for (int k = 0; k < m.packed_count(); ++k) {
        auto [i, j] = detail::packed_indices(dim, k);
        m.v_[k] = a(i, j);
    }
    return m;
}

Vector SymMatrix::mv(const Vector& x) const {
    if (x.size() != dim_) throw std::invalid_argument("SymMatrix::mv: vector size mismatch");
    return to_matrix() * x;
}

double contract(const SymMatrix& a, const SymMatrix& b) {
    a.check_same(b);
    double s = 0.0;
    for (int k = 0; k < a.packed_count(); ++k)
        s += detail::contraction_weight(a.dim(), k) * a[k] * b[k];
    return s;
}

Vector mandel_coords(const SymMatrix& a) {
    Vector v(a.packed_count());
    for (int k = 0; k < a.packed_count(); ++k) v[k] = detail::mandel_scale(a.dim(), k) * a[k];
    return v;
}

SymMatrix sym_from_mandel(int dim, const Vector& coords) {
    if (coords.size() != packed_size(dim))
        throw std::invalid_argument("sym_from_mandel: coordinate count does not match dim");
    SymMatrix m(dim);
    for (int k = 0; k < m.packed_count(); ++k) m[k] = coords[k] / detail::mandel_scale(dim, k);
    return m;
}

SymMatrix sym_outer(const Vector& c, const Vector& nu) {
    if (c.size() != nu.size()) throw std::invalid_argument("sym_outer: size mismatch");
    const int dim = static_cast<int>(c.size());
    SymMatrix m(dim);
    for (int k = 0; k < m.packed_count(); ++k) {
        auto [i, j] = detail::packed_indices(dim, k);
        m[k] = 0.5 * (c[i] * nu[j] + c[j] * nu[i]);
    }
    return m;
}

ElasticityTensor::ElasticityTensor(int dim, const Matrix& voigt) : dim_(dim), voigt_(voigt) {
    const int s = packed_size(dim);
    if (dim < 1 || dim > 3) throw std::invalid_argument("ElasticityTensor: dim must be 1, 2 or 3");
    if (voigt_.rows() != s || voigt_.cols() != s)
        throw std::invalid_argument("ElasticityTensor: voigt matrix has wrong size");
    const double scale = 1.0 + voigt_.cwiseAbs().maxCoeff();
    if ((voigt_ - voigt_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("ElasticityTensor: major symmetry violated");

    Eigen::SelfAdjointEigenSolver<Matrix> eig(voigt_);
    eig_min_ = eig.eigenvalues().minCoeff();
    eig_max_ = eig.eigenvalues().maxCoeff();
    if (eig_min_ <= 0.0)
        throw std::invalid_argument("ElasticityTensor: not positive definite");

    Eigen::LLT<Matrix> llt(voigt_);
    chol_ = llt.matrixL();
    const Matrix inv = llt.solve(Matrix::Identity(s, s));

    Vector d(s), dinv(s);
    for (int k = 0; k < s; ++k) {
        d[k] = detail::mandel_scale(dim, k);
        dinv[k] = 1.0 / d[k];
    }
    apply_ = dinv.asDiagonal() * voigt_ * d.asDiagonal();
    apply_inv_ = dinv.asDiagonal() * inv * d.asDiagonal();
}

ElasticityTensor ElasticityTensor::isotropic(int dim, double lambda, double mu) {
    const int s = packed_size(dim);
    Matrix m = Matrix::Zero(s, s);
    // Build columns from the tensor action on the orthonormal basis.
    for (int k = 0; k < s; ++k) {
        SymMatrix e(dim);
        e[k] = 1.0 / detail::mandel_scale(dim, k);
        SymMatrix ce = e;
        ce *= 2.0 * mu;
        double tr = 0.0;
        for (int i = 0; i < dim; ++i) tr += e(i, i);
        for (int i = 0; i < dim; ++i) ce.set(i, i, ce(i, i) + lambda * tr);
        for (int r = 0; r < s; ++r) m(r, k) = ce[r] * detail::mandel_scale(dim, r);
    }
    return ElasticityTensor(dim, m);
}

SymMatrix ElasticityTensor::apply(const SymMatrix& x) const {
    if (x.dim() != dim_) throw std::invalid_argument("ElasticityTensor::apply: dim mismatch");
    const int s = packed_size(dim_);
    Vector raw(s);
    for (int k = 0; k < s; ++k) raw[k] = x[k];
    const Vector y = apply_ * raw;
    SymMatrix out(dim_);
    for (int k = 0; k < s; ++k) out[k] = y[k];
    return out;
}

SymMatrix ElasticityTensor::apply_inverse(const SymMatrix& x) const {
    if (x.dim() != dim_)
        throw std::invalid_argument("ElasticityTensor::apply_inverse: dim mismatch");
    const int s = packed_size(dim_);
    Vector raw(s);
    for (int k = 0; k < s; ++k) raw[k] = x[k];
    const Vector y = apply_inv_ * raw;
    SymMatrix out(dim_);
    for (int k = 0; k < s; ++k) out[k] = y[k];
    return out;
}

StateField::StateField(std::vector<LocalState> states, std::vector<double> weights,
                       ElasticityTensor metric)
    : states_(std::move(states)), weights_(std::move(weights)), metric_(std::move(metric)) {
    if (states_.size() != weights_.size())
        throw std::invalid_argument("StateField: states/weights size mismatch");
    for (const auto& z : states_)
        if (z.dim() != metric_.dim())
            throw std::invalid_argument("StateField: state dim does not match metric");
    for (double w : weights_)
        if (!(w > 0.0)) throw std::invalid_argument("StateField: weights must be positive");
}

double local_sq_norm(const LocalState& z, const ElasticityTensor& C) {
    return 0.5 * C.quad_form(z.eps) + 0.5 * C.inv_quad_form(z.sig);
}

double local_sq_distance(const LocalState& a, const LocalState& b, const ElasticityTensor& C) {
    return local_sq_norm(a - b, C);
}

double field_sq_norm(const StateField& f) {
    double s = 0.0;
    for (int e = 0; e < f.size(); ++e) s += f.weights()[e] * local_sq_norm(f[e], f.metric());
    return s;
}

double field_sq_distance(const StateField& a, const StateField& b) {
    if (a.size() != b.size()) throw std::invalid_argument("field_sq_distance: size mismatch");
    for (int e = 0; e < a.size(); ++e)
        if (a.weights()[e] != b.weights()[e])
            throw std::invalid_argument("field_sq_distance: weights differ");
    double s = 0.0;
    for (int e = 0; e < a.size(); ++e)
        s += a.weights()[e] * local_sq_distance(a[e], b[e], a.metric());
    return s;
}

}  // namespace ddel
