#include "ddel/relaxation.hpp"

#include "ddel/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ddel {

namespace {

/// Acoustic matrix A(nu) with A c = C(c ⊙ ν)ν; symmetric positive definite for
/// unit ν and positive definite C.
Matrix acoustic_matrix(const ElasticityTensor& C, const Vector& nu) {
    const int n = C.dim();
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) {
        Vector ei = Vector::Zero(n);
        ei[i] = 1.0;
        a.col(i) = C.apply(sym_outer(ei, nu)).mv(nu);
    }
    return a;
}

Vector unit(const Vector& nu) {
    const double len = nu.norm();
    if (!(len > 0.0)) throw std::invalid_argument("layering normal must be nonzero");
    return nu / len;
}

/// Deterministic sign: first component of meaningful size is positive (ν and −ν
/// describe the same layering).
Vector canonical_sign(Vector nu) {
    for (int i = 0; i < nu.size(); ++i) {
        if (std::abs(nu[i]) > 1e-12) {
            if (nu[i] < 0.0) nu = -nu;
            break;
        }
    }
    return nu;
}

/// Orthonormal tangent basis at a unit vector, for local refinement charts.
std::pair<Vector, Vector> tangent_basis(const Vector& nu) {
    int j = 0;
    for (int i = 1; i < nu.size(); ++i)
        if (std::abs(nu[i]) < std::abs(nu[j])) j = i;
    Vector axis = Vector::Zero(nu.size());
    axis[j] = 1.0;
    Vector t1 = axis - axis.dot(nu) * nu;
    t1.normalize();
    Vector t2(3);
    t2 << nu[1] * t1[2] - nu[2] * t1[1], nu[2] * t1[0] - nu[0] * t1[2],
        nu[0] * t1[1] - nu[1] * t1[0];
    return {t1, t2};
}

}  // namespace

Vector c_hat(const ElasticityTensor& C, const SymMatrix& b, const Vector& nu) {
    if (b.dim() != C.dim()) throw std::invalid_argument("c_hat: well tensor dim mismatch");
    if (nu.size() != C.dim()) throw std::invalid_argument("c_hat: normal dim mismatch");
    const Vector n = unit(nu);
    const Matrix a = acoustic_matrix(C, n);
    const Vector rhs = C.apply(b).mv(n);
    return a.ldlt().solve(rhs);
}

double alpha_hat(const ElasticityTensor& C, const SymMatrix& b, const Vector& nu) {
    const Vector n = unit(nu);
    const SymMatrix gap = sym_outer(c_hat(C, b, n), n) - b;
    return C.quad_form(gap);
}

AlphaRange alpha_range(const ElasticityTensor& C, const SymMatrix& b) {
    if (b.dim() != C.dim()) throw std::invalid_argument("alpha_range: well tensor dim mismatch");
    const int n = C.dim();
    AlphaRange out;

    if (n == 1) {
        // One spatial direction: every pair of states differing by a strain jump is
        // layering-compatible, so the incompatibility vanishes identically.
        out.nu_minus = Vector::Ones(1);
        out.nu_plus = Vector::Ones(1);
        out.alpha_minus = 0.0;
        out.alpha_plus = 0.0;
        return out;
    }

    if (n == 2) {
        // Normals cover the half-circle [0, pi); dense sweep, then golden-section
        // refinement around the best grid node.
        const int grid = 720;
        const double step = std::numbers::pi / grid;
        const auto value = [&](double theta) {
            Vector nu(2);
            nu << std::cos(theta), std::sin(theta);
            return alpha_hat(C, b, nu);
        };
        int k_min = 0, k_max = 0;
        double v_min = value(0.0), v_max = v_min;
        for (int k = 1; k < grid; ++k) {
            const double v = value(k * step);
            if (v < v_min) {
                v_min = v;
                k_min = k;
            }
            if (v > v_max) {
                v_max = v;
                k_max = k;
            }
        }
        const double t_min = golden_section_minimize(value, (k_min - 1) * step,
                                                     (k_min + 1) * step, 1e-12);
        const double t_max = golden_section_minimize([&](double t) { return -value(t); },
                                                     (k_max - 1) * step, (k_max + 1) * step,
                                                     1e-12);
        out.alpha_minus = value(t_min);
        out.alpha_plus = value(t_max);
        out.nu_minus = Vector(2);
        out.nu_minus << std::cos(t_min), std::sin(t_min);
        out.nu_plus = Vector(2);
        out.nu_plus << std::cos(t_max), std::sin(t_max);
        out.nu_minus = canonical_sign(out.nu_minus);
        out.nu_plus = canonical_sign(out.nu_plus);
        return out;
    }

    // n == 3: Fibonacci sphere sweep, then Nelder-Mead from the best nodes on a
    // tangent chart (the sphere has no global coordinate free of distortion).
    const int samples = 2000;
    std::vector<Vector> nodes;
    nodes.reserve(samples);
    std::vector<double> values(samples);
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < samples; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / samples;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * k;
        Vector nu(3);
        nu << r * std::cos(phi), r * std::sin(phi), z;
        nodes.push_back(nu);
        values[k] = alpha_hat(C, b, nu);
    }

    const auto refine = [&](bool maximize) {
        std::vector<int> order(samples);
        for (int k = 0; k < samples; ++k) order[k] = k;
        std::sort(order.begin(), order.end(), [&](int a, int bidx) {
            const double va = maximize ? -values[a] : values[a];
            const double vb = maximize ? -values[bidx] : values[bidx];
            return va != vb ? va < vb : a < bidx;
        });
        Vector best_nu = nodes[order[0]];
        double best_v = values[order[0]];
        for (int i = 0; i < 5; ++i) {
            const Vector& nu0 = nodes[order[i]];
            const auto [t1, t2] = tangent_basis(nu0);
            const auto chart = [&](const Vector& uv) {
                return unit(nu0 + uv[0] * t1 + uv[1] * t2);
            };
            const auto objective = [&](const Vector& uv) {
                const double v = alpha_hat(C, b, chart(uv));
                return maximize ? -v : v;
            };
            const Vector uv = nelder_mead_minimize(objective, Vector::Zero(2), 0.05, 1e-16, 400);
            const Vector nu = chart(uv);
            const double v = alpha_hat(C, b, nu);
            if (maximize ? v > best_v : v < best_v) {
                best_v = v;
                best_nu = nu;
            }
        }
        return std::pair<double, Vector>(best_v, canonical_sign(best_nu));
    };

    auto [vmin, numin] = refine(false);
    auto [vmax, numax] = refine(true);
    out.alpha_minus = vmin;
    out.alpha_plus = vmax;
    out.nu_minus = numin;
    out.nu_plus = numax;
    return out;
}

TwoWellRelaxation TwoWellRelaxation::from_parameters(const ElasticityTensor& C,
                                                     const SymMatrix& b) {
    if (b.dim() != C.dim())
        throw std::invalid_argument("TwoWellRelaxation: well tensor dim mismatch");
    if (frobenius_sq(b) <= 0.0)
        throw std::invalid_argument("TwoWellRelaxation: wells coincide (b = 0)");
    TwoWellRelaxation rx;
    rx.C_ = C;
    rx.b_ = b;
    const AlphaRange range = alpha_range(C, b);
    rx.alpha_minus_ = range.alpha_minus;
    rx.alpha_plus_ = range.alpha_plus;
    rx.nu_minus_ = range.nu_minus;
    rx.nu_plus_ = range.nu_plus;
    rx.c_hat_minus_ = c_hat(C, b, range.nu_minus);
    rx.cbb_ = C.quad_form(b);
    rx.shift_ = LocalState::zero(C.dim());
    return rx;
}

TwoWellRelaxation TwoWellRelaxation::from_two_well(const TwoWellDataSet& set) {
    // Two normalizing moves: absorb the well-height difference into a phase-space
    // shift, then center the wells at +-b by a strain translation.
    const auto [equalized, height_shift] = translate_unequal_wells(set);
    const SymMatrix mid = 0.5 * (equalized.well_a() + equalized.well_b());
    const SymMatrix half_gap = 0.5 * (equalized.well_b() - equalized.well_a());
    TwoWellRelaxation rx = from_parameters(set.metric(), half_gap);
    rx.shift_ = height_shift + LocalState(mid, SymMatrix::zero(set.dim()));
    return rx;
}

double TwoWellRelaxation::mu(const LocalState& normalized) const {
    const SymMatrix gap = normalized.eps - C_.apply_inverse(normalized.sig);
    return contract(gap, b_) / frobenius_sq(b_);
}

double TwoWellRelaxation::l_residual(const LocalState& normalized) const {
    const SymMatrix gap = normalized.eps - C_.apply_inverse(normalized.sig);
    const SymMatrix perp = gap - (contract(gap, b_) / frobenius_sq(b_)) * b_;
    return std::sqrt(frobenius_sq(perp));
}

LocalState TwoWellRelaxation::z_hat() const {
    const SymMatrix e = sym_outer(c_hat_minus_, nu_minus_);
    return {e, C_.apply(e - b_)};
}

FlagMembership membership_flag_1d(const FlagDataSet1D& flag, double eps, double sig,
                                  double tol) {
    const double c = flag.stiffness();
    const double s0 = flag.sigma0();
    // The original branches: sig = C eps + sigma0 on eps <= 0 and its mirror.
    const bool on_minus = std::abs(sig - (c * eps + s0)) <= tol && eps <= tol;
    const bool on_plus = std::abs(sig - (c * eps - s0)) <= tol && eps >= -tol;
    if (on_minus || on_plus) return FlagMembership::OnOriginalSet;
    if (flag.contains(eps, sig, tol)) return FlagMembership::InRelaxedSet;
    return FlagMembership::Outside;
}

MembershipResult membership_relaxed_nd(const TwoWellRelaxation& rx, const LocalState& z,
                                       double tol) {
    MembershipResult res;
    const LocalState zn = rx.normalize(z);
    res.mu = rx.mu(zn);
    res.l_residual = rx.l_residual(zn);
    const double scale = 1.0 + std::sqrt(zn.sq_frobenius());
    if (res.l_residual > tol * scale) {
        res.region = RelaxedMembership::Outside;
        return res;
    }
    const double sb = contract(zn.sig, rx.b());
    const double am = rx.alpha_minus();
    const double cbb = rx.cbb();
    if (std::abs(res.mu - 1.0) <= tol && sb >= -cbb - tol)
        res.region = RelaxedMembership::InDlocPlus;
    else if (std::abs(res.mu + 1.0) <= tol && sb <= cbb + tol)
        res.region = RelaxedMembership::InDlocMinus;
    else if (std::abs(res.mu) <= 1.0 + tol && std::abs(sb + am * res.mu) <= cbb - am + tol)
        res.region = RelaxedMembership::InRelaxedInterior;
    else
        res.region = RelaxedMembership::Outside;
    return res;
}

LaminateDecomposition rank_one_decompose(const TwoWellRelaxation& rx, const LocalState& z,
                                         double tol) {
    const MembershipResult m = membership_relaxed_nd(rx, z, tol);
    if (m.region != RelaxedMembership::InRelaxedInterior)
        throw std::invalid_argument(
            "rank_one_decompose: state is not in the interior band of the relaxed set");

    LaminateDecomposition d;
    d.mu = m.mu;
    d.lambda = 0.5 * (1.0 - m.mu);
    d.z_hat = rx.z_hat();
    d.nu = rx.nu_minus();
    d.c = 2.0 * rx.c_hat_minus();

    const LocalState zn = rx.normalize(z);
    d.z_minus = rx.denormalize(zn + (-1.0 - m.mu) * d.z_hat);
    d.z_plus = rx.denormalize(zn + (1.0 - m.mu) * d.z_hat);
    return d;
}

SeparatingCertificate::SeparatingCertificate(const TwoWellRelaxation& rx, const LocalState& z0,
                                             double tol)
    : rx_(&rx) {
    const LocalState zn = rx.normalize(z0);
    const double mu0 = rx.mu(zn);
    const double scale = 1.0 + std::sqrt(zn.sq_frobenius());
    if (rx.l_residual(zn) > tol * scale)
        throw std::invalid_argument(
            "SeparatingCertificate: point is off the branch subspace, certificate "
            "construction needs mu and sigma coordinates on it");
    if (mu0 < -1.0 - tol || mu0 >= 1.0)
        throw std::invalid_argument("SeparatingCertificate: mu must lie in [-1, 1)");
    const double excess =
        contract(zn.sig, rx.b()) + rx.alpha_minus() * mu0 - (rx.cbb() - rx.alpha_minus());
    if (!(excess > 0.0))
        throw std::invalid_argument(
            "SeparatingCertificate: point is below the band edge, nothing to separate");

    delta_ = 0.5 * excess * excess;
    z_star_ = zn + (1.0 - mu0) * rx.z_hat();

    // Least-squares map onto the branch subspace L = {(C^{-1}s + m b, s)}: unknowns are
    // the mandel coordinates of s plus m, rows stack the strain and stress equations.
    const int s = packed_size(rx.metric().dim());
    const Matrix cinv =
        rx.metric().voigt().llt().solve(Matrix::Identity(s, s));
    b_mandel_ = mandel_coords(rx.b());
    Matrix a(2 * s, s + 1);
    a.topLeftCorner(s, s) = cinv;
    a.topRightCorner(s, 1) = b_mandel_;
    a.bottomLeftCorner(s, s) = Matrix::Identity(s, s);
    a.bottomRightCorner(s, 1).setZero();
    cinv_mandel_ = cinv;
    projector_.compute(a);
}

double SeparatingCertificate::operator()(const LocalState& z) const {
    const LocalState zn = rx_->normalize(z);
    const LocalState w = zn - z_star_;
    const int s = packed_size(rx_->metric().dim());
    Vector rhs(2 * s);
    rhs.head(s) = mandel_coords(w.eps);
    rhs.tail(s) = mandel_coords(w.sig);
    const Vector x = projector_.solve(rhs);
    const double sb = x.head(s).dot(b_mandel_);
    const double m = x[s];
    const double quad = -(sb + rx_->alpha_minus() * m) * (sb + rx_->alpha_plus() * m);
    return quad + delta_ * (1.0 - rx_->mu(zn));
}

std::vector<LocalState> generate_laminate_field(const Mesh& mesh,
                                                const LaminateDecomposition& decomp, int h) {
    if (h < 1) throw std::invalid_argument("generate_laminate_field: h must be >= 1");
    if (decomp.nu.size() != mesh.dim())
        throw std::invalid_argument("generate_laminate_field: normal dim does not match mesh");
    std::vector<LocalState> states;
    states.reserve(mesh.n_elements());
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const double t = h * decomp.nu.dot(mesh.element_centroid(e));
        const double frac = t - std::floor(t);
        states.push_back(frac < decomp.lambda ? decomp.z_minus : decomp.z_plus);
    }
    return states;
}

namespace {

/// Squared energy distance from (eps, sig) to the branch sig = C e - sigma0, e >= 0.
double branch_plus_d2(double c, double s0, double eps, double sig) {
    const double e = std::max(0.0, 0.5 * (eps + (sig + s0) / c));
    const double r = sig - c * e + s0;
    return 0.5 * c * (eps - e) * (eps - e) + 0.5 * r * r / c;
}

/// Squared energy distance to the mirror branch sig = C e + sigma0, e <= 0.
double branch_minus_d2(double c, double s0, double eps, double sig) {
    const double e = std::min(0.0, 0.5 * (eps + (sig - s0) / c));
    const double r = sig - c * e - s0;
    return 0.5 * c * (eps - e) * (eps - e) + 0.5 * r * r / c;
}

struct InnerSolution {
    double value = 0.0;
    double eps_a = 0.0;
    double eps_b = 0.0;
    double sigma = 0.0;
};

/// Minimize the two-phase objective at fixed volume fraction and stress.  The
/// objective is jointly convex (squared distances to convex rays), so eliminating
/// eps_b through the mean constraint leaves a unimodal function of eps_a.
InnerSolution inner_fixed_sigma(double c, double s0, double eps_bar, double lambda,
                                double sigma) {
    InnerSolution sol;
    sol.sigma = sigma;
    if (lambda <= 0.0) {
        sol.eps_a = eps_bar;
        sol.eps_b = eps_bar;
        sol.value = branch_minus_d2(c, s0, eps_bar, sigma);
        return sol;
    }
    if (lambda >= 1.0) {
        sol.eps_a = eps_bar;
        sol.eps_b = eps_bar;
        sol.value = branch_plus_d2(c, s0, eps_bar, sigma);
        return sol;
    }
    const auto objective = [&](double eps_a) {
        const double eps_b = (eps_bar - lambda * eps_a) / (1.0 - lambda);
        return lambda * branch_plus_d2(c, s0, eps_a, sigma) +
               (1.0 - lambda) * branch_minus_d2(c, s0, eps_b, sigma);
    };
    const double radius = 8.0 * (1.0 + std::abs(eps_bar) + s0 / c + std::abs(sigma) / c);
    sol.eps_a = golden_section_minimize(objective, eps_bar - radius, eps_bar + radius, 1e-12);
    sol.eps_b = (eps_bar - lambda * sol.eps_a) / (1.0 - lambda);
    sol.value = objective(sol.eps_a);
    return sol;
}

InnerSolution inner_free_sigma(double c, double s0, double eps_bar, double lambda) {
    const double radius = 8.0 * (1.0 + c * std::abs(eps_bar) + s0);
    const auto objective = [&](double sigma) {
        return inner_fixed_sigma(c, s0, eps_bar, lambda, sigma).value;
    };
    const double sigma = golden_section_minimize(objective, -radius, radius, 1e-12);
    return inner_fixed_sigma(c, s0, eps_bar, lambda, sigma);
}

}  // namespace

Reduced1DSolution reduced_1d_two_well_solve(double C, double sigma0, double eps_bar,
                                            std::optional<double> sigma_fixed) {
    if (!(C > 0.0)) throw std::invalid_argument("reduced_1d_two_well_solve: C must be positive");
    if (!(sigma0 >= 0.0))
        throw std::invalid_argument("reduced_1d_two_well_solve: sigma0 must be nonnegative");

    const auto inner = [&](double lambda) {
        return sigma_fixed ? inner_fixed_sigma(C, sigma0, eps_bar, lambda, *sigma_fixed)
                           : inner_free_sigma(C, sigma0, eps_bar, lambda);
    };

    Reduced1DSolution best;
    best.d2_min = std::numeric_limits<double>::infinity();
    const auto consider = [&](double lambda, const InnerSolution& sol) {
        if (sol.value < best.d2_min) {
            best.d2_min = sol.value;
            best.lambda = lambda;
            best.eps_a = sol.eps_a;
            best.eps_b = sol.eps_b;
            best.sigma_bar = sol.sigma;
        }
    };

    // Coarse fraction grid, then golden-section refinement around the best node.
    const int grid = 64;
    int k_best = 0;
    double v_best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= grid; ++k) {
        const double lambda = static_cast<double>(k) / grid;
        const InnerSolution sol = inner(lambda);
        consider(lambda, sol);
        if (sol.value < v_best) {
            v_best = sol.value;
            k_best = k;
        }
    }
    const double lo = std::max(0.0, (k_best - 1.0) / grid);
    const double hi = std::min(1.0, (k_best + 1.0) / grid);
    const double lambda_ref =
        golden_section_minimize([&](double l) { return inner(l).value; }, lo, hi, 1e-12);
    consider(lambda_ref, inner(lambda_ref));

    // Exact candidates: pick branch points sharing one stress; the fraction is then
    // fixed by the mean constraint and interior states reach zero exactly.
    std::vector<double> sigma_candidates;
    if (sigma_fixed) {
        sigma_candidates = {*sigma_fixed};
    } else {
        sigma_candidates = {C * eps_bar - sigma0, C * eps_bar + sigma0,
                            std::clamp(C * eps_bar, -sigma0, sigma0), 0.0, sigma0, -sigma0};
    }
    for (double sigma : sigma_candidates) {
        const double e_plus = (sigma + sigma0) / C;   // stress sigma on the + branch
        const double e_minus = (sigma - sigma0) / C;  // and on the - branch
        if (e_plus < -1e-14 || e_minus > 1e-14) continue;
        const double gap = e_plus - e_minus;
        if (gap <= 0.0) {
            // sigma0 = 0: branches meet; pure state at the mean strain.
            InnerSolution sol;
            sol.eps_a = eps_bar;
            sol.eps_b = eps_bar;
            sol.sigma = sigma;
            sol.value = branch_plus_d2(C, sigma0, eps_bar, sigma);
            consider(0.5, sol);
            continue;
        }
        double lambda = (eps_bar - e_minus) / gap;
        if (lambda < -1e-12 || lambda > 1.0 + 1e-12) continue;
        lambda = std::clamp(lambda, 0.0, 1.0);
        InnerSolution sol;
        sol.eps_a = e_plus;
        sol.eps_b = e_minus;
        sol.sigma = sigma;
        sol.value = lambda * branch_plus_d2(C, sigma0, e_plus, sigma) +
                    (1.0 - lambda) * branch_minus_d2(C, sigma0, e_minus, sigma);
        consider(lambda, sol);
    }

    return best;
}

ConvexEnvelope1D::ConvexEnvelope1D(double C, double sigma0) : C_(C), sigma0_(sigma0) {
    if (!(C > 0.0)) throw std::invalid_argument("ConvexEnvelope1D: C must be positive");
    if (!(sigma0 >= 0.0)) throw std::invalid_argument("ConvexEnvelope1D: sigma0 must be nonnegative");
}

double ConvexEnvelope1D::energy(double eps) const {
    const double e0 = sigma0_ / C_;
    if (eps < -e0) return 0.5 * C_ * (eps + e0) * (eps + e0);
    if (eps > e0) return 0.5 * C_ * (eps - e0) * (eps - e0);
    return 0.0;  // the two-well energy convexifies to a flat valley between the wells
}

double ConvexEnvelope1D::stress(double eps) const {
    const double e0 = sigma0_ / C_;
    if (eps < -e0) return C_ * (eps + e0);
    if (eps > e0) return C_ * (eps - e0);
    return 0.0;
}

bool ConvexEnvelope1D::contains(double eps, double sig, double tol) const {
    return std::abs(sig - stress(eps)) <= tol;
}

LocalState ConvexEnvelope1D::witness() const {
    // Inside the relaxed flag (distance argument) but off the envelope's stress graph:
    // the envelope forces sigma = 0 at eps = 0, the flag only |sigma| <= sigma0.
    SymMatrix eps(1), sig(1);
    eps[0] = 0.0;
    sig[0] = 0.5 * sigma0_;
    return {eps, sig};
}

}  // namespace ddel
