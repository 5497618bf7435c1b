#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ddel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Number of independent entries of a symmetric dim x dim tensor.
constexpr int packed_size(int dim) { return dim * (dim + 1) / 2; }

namespace detail {

/// (row, col) of packed entry k, diagonal entries first:
/// dim 1: (0,0); dim 2: (0,0) (1,1) (0,1); dim 3: (0,0) (1,1) (2,2) (1,2) (0,2) (0,1).
inline std::pair<int, int> packed_indices(int dim, int k) {
    if (k < dim) return {k, k};
    if (dim == 2) return {0, 1};
    switch (k) {
        case 3: return {1, 2};
        case 4: return {0, 2};
        default: return {0, 1};
    }
}

/// Weight of packed entry k in the full tensor contraction (1 diagonal, 2 off-diagonal).
inline double contraction_weight(int dim, int k) { return k < dim ? 1.0 : 2.0; }

/// Scaling that turns packed entries into orthonormal-basis coordinates (sqrt of the
/// contraction weight).  In these coordinates the Euclidean dot product equals the
/// tensor contraction, which is what makes a single packed layout serve strains and
/// stresses alike.
inline double mandel_scale(int dim, int k) { return k < dim ? 1.0 : std::sqrt(2.0); }

}  // namespace detail

/// Symmetric dim x dim tensor stored by its unique entries.  Symmetry is structural:
/// there is no way to store an asymmetric matrix, and pack/unpack round-trips are exact
/// because the entries are kept unscaled.
class SymMatrix {
  public:
    explicit SymMatrix(int dim) : dim_(check_dim(dim)) { v_.fill(0.0); }
    SymMatrix() : SymMatrix(1) {}

    static SymMatrix zero(int dim) { return SymMatrix(dim); }
    static SymMatrix identity(int dim) {
        SymMatrix m(dim);
        for (int i = 0; i < dim; ++i) m.v_[i] = 1.0;
        return m;
    }
    static SymMatrix from_packed(int dim, const std::vector<double>& entries) {
        SymMatrix m(dim);
        if (static_cast<int>(entries.size()) != m.packed_count())
            throw std::invalid_argument("SymMatrix: packed entry count does not match dim");
        for (int k = 0; k < m.packed_count(); ++k) m.v_[k] = entries[k];
        return m;
    }
    static SymMatrix from_diag(const std::vector<double>& d) {
        SymMatrix m(static_cast<int>(d.size()));
        for (int i = 0; i < m.dim_; ++i) m.v_[i] = d[i];
        return m;
    }
    /// Symmetric part is not taken: the input must be symmetric to machine precision.
    static SymMatrix from_matrix(const Matrix& a);

    int dim() const { return dim_; }
    int packed_count() const { return packed_size(dim_); }

    double operator[](int k) const { return v_[k]; }
    double& operator[](int k) { return v_[k]; }

    double operator()(int i, int j) const {
        return v_[entry_index(i, j)];
    }
    void set(int i, int j, double value) { v_[entry_index(i, j)] = value; }

    std::vector<double> packed() const { return {v_.begin(), v_.begin() + packed_count()}; }

    Matrix to_matrix() const {
        Matrix a = Matrix::Zero(dim_, dim_);
        for (int k = 0; k < packed_count(); ++k) {
            auto [i, j] = detail::packed_indices(dim_, k);
            a(i, j) = v_[k];
            a(j, i) = v_[k];
        }
        return a;
    }

    /// Matrix-vector product with the full symmetric matrix.
    Vector mv(const Vector& x) const;

    SymMatrix& operator+=(const SymMatrix& o) {
        check_same(o);
        for (int k = 0; k < packed_count(); ++k) v_[k] += o.v_[k];
        return *this;
    }
    SymMatrix& operator-=(const SymMatrix& o) {
        check_same(o);
        for (int k = 0; k < packed_count(); ++k) v_[k] -= o.v_[k];
        return *this;
    }
    SymMatrix& operator*=(double s) {
        for (int k = 0; k < packed_count(); ++k) v_[k] *= s;
        return *this;
    }

    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
    friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
    friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }

    void check_same(const SymMatrix& o) const {
        if (dim_ != o.dim_) throw std::invalid_argument("SymMatrix: dimension mismatch");
    }

  private:
    static int check_dim(int dim) {
        if (dim < 1 || dim > 3) throw std::invalid_argument("SymMatrix: dim must be 1, 2 or 3");
        return dim;
    }
    int entry_index(int i, int j) const {
        if (i < 0 || j < 0 || i >= dim_ || j >= dim_)
            throw std::out_of_range("SymMatrix: index out of range");
        for (int k = 0; k < packed_count(); ++k) {
            auto [r, c] = detail::packed_indices(dim_, k);
            if ((r == i && c == j) || (r == j && c == i)) return k;
        }
        throw std::out_of_range("SymMatrix: index out of range");
    }

    int dim_;
    std::array<double, 6> v_;
};

/// Full tensor double contraction a : b (off-diagonal entries counted twice).
double contract(const SymMatrix& a, const SymMatrix& b);

/// Packed coordinates scaled so the Euclidean dot product equals the tensor
/// contraction (off-diagonal entries multiplied by sqrt 2).
Vector mandel_coords(const SymMatrix& a);

/// Inverse of mandel_coords.
SymMatrix sym_from_mandel(int dim, const Vector& coords);

/// Frobenius norm squared, i.e. contract(a, a).
inline double frobenius_sq(const SymMatrix& a) { return contract(a, a); }

/// Symmetrized rank-one product (c (x) nu + nu (x) c) / 2.
SymMatrix sym_outer(const Vector& c, const Vector& nu);

/// Fourth-order elasticity tensor acting on symmetric matrices, represented by its
/// matrix on packed coordinates in the normalized (orthonormal-basis) convention: the
/// compensating shear factors are absorbed into the matrix, so packed quadratic forms
/// equal tensor contractions and the identity matrix is the identity map.
/// Must have major symmetry and be positive definite; both are checked at construction.
class ElasticityTensor {
  public:
    ElasticityTensor(int dim, const Matrix& voigt);

    static ElasticityTensor identity(int dim) {
        return ElasticityTensor(dim, Matrix::Identity(packed_size(dim), packed_size(dim)));
    }
    static ElasticityTensor scaled_identity(int dim, double c) {
        return ElasticityTensor(dim, c * Matrix::Identity(packed_size(dim), packed_size(dim)));
    }
    /// Isotropic tensor C e = 2 mu e + lambda tr(e) I.
    static ElasticityTensor isotropic(int dim, double lambda, double mu);

    int dim() const { return dim_; }
    const Matrix& voigt() const { return voigt_; }

    SymMatrix apply(const SymMatrix& x) const;          // C x
    SymMatrix apply_inverse(const SymMatrix& x) const;  // C^{-1} x

    /// contract(C x, x) >= 0.
    double quad_form(const SymMatrix& x) const { return contract(apply(x), x); }
    /// contract(C^{-1} x, x) >= 0.
    double inv_quad_form(const SymMatrix& x) const { return contract(apply_inverse(x), x); }

    double eig_min() const { return eig_min_; }
    double eig_max() const { return eig_max_; }

    /// Lower Cholesky factor of the normalized matrix; used to embed states so that
    /// Euclidean distance matches the energy metric.
    const Matrix& mandel_cholesky() const { return chol_; }

  private:
    int dim_;
    Matrix voigt_;      // normalized packed-coordinates matrix
    Matrix apply_;      // action on raw packed entries
    Matrix apply_inv_;  // inverse action on raw packed entries
    Matrix chol_;
    double eig_min_ = 0.0;
    double eig_max_ = 0.0;
};

/// One material point in phase space: a (strain, stress) pair of equal dimension.
struct LocalState {
    SymMatrix eps;
    SymMatrix sig;

    LocalState() = default;
    LocalState(SymMatrix e, SymMatrix s) : eps(std::move(e)), sig(std::move(s)) {
        eps.check_same(sig);
    }
    static LocalState zero(int dim) { return {SymMatrix::zero(dim), SymMatrix::zero(dim)}; }

    int dim() const { return eps.dim(); }

    LocalState& operator+=(const LocalState& o) {
        eps += o.eps;
        sig += o.sig;
        return *this;
    }
    LocalState& operator-=(const LocalState& o) {
        eps -= o.eps;
        sig -= o.sig;
        return *this;
    }
    friend LocalState operator+(LocalState a, const LocalState& b) { return a += b; }
    friend LocalState operator-(LocalState a, const LocalState& b) { return a -= b; }
    friend LocalState operator*(double s, LocalState a) {
        a.eps *= s;
        a.sig *= s;
        return a;
    }

    /// |eps|_F^2 + |sig|_F^2 (metric-free size, used in relative tolerances).
    double sq_frobenius() const { return frobenius_sq(eps) + frobenius_sq(sig); }
};

/// Element-wise phase-space field with positive quadrature weights and the metric
/// tensor that turns it into a normed object.
class StateField {
  public:
    StateField(std::vector<LocalState> states, std::vector<double> weights,
               ElasticityTensor metric);

    int size() const { return static_cast<int>(states_.size()); }
    int dim() const { return metric_.dim(); }
    const std::vector<LocalState>& states() const { return states_; }
    const std::vector<double>& weights() const { return weights_; }
    const ElasticityTensor& metric() const { return metric_; }
    const LocalState& operator[](int e) const { return states_[e]; }

    StateField with_states(std::vector<LocalState> states) const {
        return StateField(std::move(states), weights_, metric_);
    }

  private:
    std::vector<LocalState> states_;
    std::vector<double> weights_;
    ElasticityTensor metric_;
};

/// Pointwise energy norm squared: 1/2 C eps : eps + 1/2 C^{-1} sig : sig.
double local_sq_norm(const LocalState& z, const ElasticityTensor& C);

/// Pointwise energy distance squared between two states under the same metric.
double local_sq_distance(const LocalState& a, const LocalState& b, const ElasticityTensor& C);

/// Weighted sum of pointwise energy norms squared.
double field_sq_norm(const StateField& f);

/// Energy distance squared between fields sharing weights and metric.
double field_sq_distance(const StateField& a, const StateField& b);

inline double energy_norm(const StateField& f) { return std::sqrt(field_sq_norm(f)); }
inline double energy_distance(const StateField& a, const StateField& b) {
    return std::sqrt(field_sq_distance(a, b));
}

}  // namespace ddel
