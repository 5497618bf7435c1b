#include "ddel/data_set.hpp"

#include "ddel/io_util.hpp"
#include "ddel/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ddel {

namespace {

/// Component label of packed entry k, e.g. "11", "22", "12".
std::string component_label(int dim, int k) {
    auto [i, j] = detail::packed_indices(dim, k);
    return std::to_string(i + 1) + std::to_string(j + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// AffineGraphBranch
// ---------------------------------------------------------------------------

AffineGraphBranch::AffineGraphBranch(ElasticityTensor C, SymMatrix offset,
                                     std::optional<HalfSpace> halfspace)
    : C_(std::move(C)), offset_(std::move(offset)), halfspace_(std::move(halfspace)) {
    if (offset_.dim() != C_.dim())
        throw std::invalid_argument("AffineGraphBranch: offset dim mismatch");
    if (halfspace_) {
        if (halfspace_->direction.dim() != C_.dim())
            throw std::invalid_argument("AffineGraphBranch: halfspace dim mismatch");
        if (frobenius_sq(halfspace_->direction) == 0.0)
            throw std::invalid_argument("AffineGraphBranch: halfspace direction is zero");
    }
}

LocalState AffineGraphBranch::project(const LocalState& z) const {
    if (z.dim() != dim()) throw std::invalid_argument("AffineGraphBranch: state dim mismatch");
    // Unconstrained minimizer of the energy distance to the graph over its strain.
    SymMatrix e = 0.5 * (z.eps + C_.apply_inverse(z.sig - offset_));
    if (halfspace_ && !halfspace_->contains(e)) {
        // Clamp to the boundary hyperplane, re-projecting within it.  The distance to
        // the graph is the quadratic form C(e - e_unc):(e - e_unc) + const, so the
        // constrained minimizer moves along C^{-1} d.
        const SymMatrix& d = halfspace_->direction;
        const SymMatrix cinv_d = C_.apply_inverse(d);
        const double step =
            (halfspace_->bound - contract(d, e)) / contract(d, cinv_d);
        e += step * cinv_d;
    }
    return at(e);
}

NearestResult AffineGraphBranch::nearest(const LocalState& z) const {
    const LocalState y = project(z);
    return {y, local_sq_distance(z, y, C_), -1};
}

LocalState AffineGraphBranch::random_state(Rng& rng) const {
    SymMatrix e(dim());
    for (int k = 0; k < e.packed_count(); ++k) e[k] = rng.normal();
    if (halfspace_ && !halfspace_->contains(e)) {
        const SymMatrix& d = halfspace_->direction;
        const SymMatrix cinv_d = C_.apply_inverse(d);
        e += ((halfspace_->bound - contract(d, e)) / contract(d, cinv_d)) * cinv_d;
    }
    return at(e);
}

// ---------------------------------------------------------------------------
// TwoWellDataSet
// ---------------------------------------------------------------------------

namespace {

AffineGraphBranch make_well_branch(const ElasticityTensor& C, const SymMatrix& a,
                                   const SymMatrix& b, double w, bool is_a) {
    // Branch of well a is active where W(e-a) <= W(e-b) + w, i.e.
    // (C(b-a)) : e <= W(b) - W(a) + w.
    const SymMatrix dir = C.apply(b - a);
    const double bound = 0.5 * C.quad_form(b) - 0.5 * C.quad_form(a) + w;
    HalfSpace hs{dir, bound, is_a ? HalfSpace::Sense::LessEqual : HalfSpace::Sense::GreaterEqual};
    const SymMatrix& well = is_a ? a : b;
    SymMatrix offset = C.apply(well);
    offset *= -1.0;
    return AffineGraphBranch(C, offset, hs);
}

}  // namespace

TwoWellDataSet::TwoWellDataSet(ElasticityTensor C, SymMatrix a, SymMatrix b, double w)
    : C_(C),
      a_(std::move(a)),
      b_(std::move(b)),
      w_(w),
      branch_a_(make_well_branch(C, a_, b_, w, true)),
      branch_b_(make_well_branch(C, a_, b_, w, false)) {
    if (a_.dim() != C_.dim() || b_.dim() != C_.dim())
        throw std::invalid_argument("TwoWellDataSet: well dim mismatch");
    if (frobenius_sq(b_ - a_) == 0.0)
        throw std::invalid_argument("TwoWellDataSet: wells coincide");
}

NearestResult TwoWellDataSet::nearest(const LocalState& z) const {
    NearestResult ra = branch_a_.nearest(z);
    NearestResult rb = branch_b_.nearest(z);
    if (rb.sq_distance < ra.sq_distance) {
        rb.index = 1;
        return rb;
    }
    ra.index = 0;  // ties go to the first branch
    return ra;
}

LocalState TwoWellDataSet::random_state(Rng& rng) const {
    const bool pick_a = rng.uniform01() < 0.5;
    return (pick_a ? branch_a_ : branch_b_).random_state(rng);
}

// ---------------------------------------------------------------------------
// FlagDataSet1D
// ---------------------------------------------------------------------------

FlagDataSet1D::FlagDataSet1D(double C, double sigma0)
    : C_(C), sigma0_(sigma0), metric_(ElasticityTensor::scaled_identity(1, C)) {
    if (!(C > 0.0)) throw std::invalid_argument("FlagDataSet1D: stiffness must be positive");
    if (sigma0 < 0.0) throw std::invalid_argument("FlagDataSet1D: sigma0 must be >= 0");
}

bool FlagDataSet1D::contains(double eps, double sig, double tol) const {
    const double w = 2.0 * sigma0_ / C_;
    // Outer graph rays.
    if (eps <= -w + tol && std::abs(sig - (C_ * eps + sigma0_)) <= tol) return true;
    if (eps >= w - tol && std::abs(sig - (C_ * eps - sigma0_)) <= tol) return true;
    // Filled flag regions.
    if (eps >= -w - tol && eps <= tol && sig >= -sigma0_ - tol &&
        sig <= C_ * eps + sigma0_ + tol)
        return true;
    if (eps >= -tol && eps <= w + tol && sig <= sigma0_ + tol &&
        sig >= C_ * eps - sigma0_ - tol)
        return true;
    return false;
}

namespace {

/// Distance to a horizontal phase-space segment {(e, s0) : e in [e0, e1]}.
double segment_sq_distance(double C, double eps, double sig, double s0, double e0, double e1,
                           double* proj_eps) {
    const double e = std::clamp(eps, e0, e1);
    *proj_eps = e;
    const double de = eps - e;
    const double ds = sig - s0;
    return 0.5 * C * de * de + 0.5 * ds * ds / C;
}

}  // namespace

NearestResult FlagDataSet1D::nearest(const LocalState& z) const {
    if (z.dim() != 1) throw std::invalid_argument("FlagDataSet1D: state dim mismatch");
    const double eps = z.eps[0], sig = z.sig[0];
    if (contains(eps, sig, 0.0)) return {z, 0.0, -1};

    const double w = 2.0 * sigma0_ / C_;
    NearestResult best;
    best.sq_distance = std::numeric_limits<double>::infinity();
    auto offer = [&](double pe, double ps, double d2) {
        if (d2 < best.sq_distance) {
            best.sq_distance = d2;
            best.point = LocalState{SymMatrix::from_packed(1, {pe}), SymMatrix::from_packed(1, {ps})};
        }
    };

    // The boundary consists of the two graph lines (clamped to their strain ranges)
    // and the two horizontal edges of the flag regions.
    SymMatrix one = SymMatrix::identity(1);
    {
        AffineGraphBranch upper(metric_, SymMatrix::from_packed(1, {sigma0_}),
                                HalfSpace{one, 0.0, HalfSpace::Sense::LessEqual});
        const LocalState p = upper.project(z);
        offer(p.eps[0], p.sig[0], local_sq_distance(z, p, metric_));
    }
    {
        AffineGraphBranch lower(metric_, SymMatrix::from_packed(1, {-sigma0_}),
                                HalfSpace{one, 0.0, HalfSpace::Sense::GreaterEqual});
        const LocalState p = lower.project(z);
        offer(p.eps[0], p.sig[0], local_sq_distance(z, p, metric_));
    }
    double pe = 0.0;
    double d2 = segment_sq_distance(C_, eps, sig, -sigma0_, -w, 0.0, &pe);
    offer(pe, -sigma0_, d2);
    d2 = segment_sq_distance(C_, eps, sig, sigma0_, 0.0, w, &pe);
    offer(pe, sigma0_, d2);
    return best;
}

LocalState FlagDataSet1D::random_state(Rng& rng) const {
    // A point of the filled flag: pick the strain extent, then an admissible stress.
    const double w = 2.0 * sigma0_ / C_;
    const double eps = rng.uniform(-w - 1.0, w + 1.0);
    double lo, hi;
    if (eps <= -w) {
        lo = hi = C_ * eps + sigma0_;
    } else if (eps <= 0.0) {
        lo = -sigma0_;
        hi = C_ * eps + sigma0_;
    } else if (eps <= w) {
        lo = C_ * eps - sigma0_;
        hi = sigma0_;
    } else {
        lo = hi = C_ * eps - sigma0_;
    }
    const double sig = rng.uniform(lo, hi);
    return {SymMatrix::from_packed(1, {eps}), SymMatrix::from_packed(1, {sig})};
}

// ---------------------------------------------------------------------------
// PointCloudDataSet
// ---------------------------------------------------------------------------

PointCloudDataSet::PointCloudDataSet(std::vector<LocalState> points, ElasticityTensor metric,
                                     std::optional<Provenance> provenance)
    : points_(std::move(points)), metric_(std::move(metric)), provenance_(std::move(provenance)) {
    if (points_.empty()) throw std::invalid_argument("PointCloudDataSet: empty cloud");
    for (const auto& p : points_)
        if (p.dim() != metric_.dim())
            throw std::invalid_argument("PointCloudDataSet: point dim mismatch");
    const int s = packed_size(metric_.dim());
    Eigen::MatrixXd coords(points_.size(), 2 * s);
    for (int i = 0; i < size(); ++i) coords.row(i) = embed(points_[i]).transpose();
    tree_ = std::make_unique<KdTree>(std::move(coords));
}

Vector PointCloudDataSet::embed(const LocalState& z) const {
    const int dim = metric_.dim();
    const int s = packed_size(dim);
    const Matrix& L = metric_.mandel_cholesky();
    Vector me(s), ms(s);
    for (int k = 0; k < s; ++k) {
        const double scale = detail::mandel_scale(dim, k);
        me[k] = scale * z.eps[k];
        ms[k] = scale * z.sig[k];
    }
    Vector u(2 * s);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    u.head(s) = inv_sqrt2 * (L.transpose() * me);
    u.tail(s) = inv_sqrt2 * L.triangularView<Eigen::Lower>().solve(ms);
    return u;
}

LocalState PointCloudDataSet::unembed(const Vector& u) const {
    const int dim = metric_.dim();
    const int s = packed_size(dim);
    const Matrix& L = metric_.mandel_cholesky();
    const double sqrt2 = std::sqrt(2.0);
    const Vector me =
        L.transpose().triangularView<Eigen::Upper>().solve(Vector(sqrt2 * u.head(s)));
    const Vector ms = L * (sqrt2 * u.tail(s));
    SymMatrix eps(dim), sig(dim);
    for (int k = 0; k < s; ++k) {
        const double scale = detail::mandel_scale(dim, k);
        eps[k] = me[k] / scale;
        sig[k] = ms[k] / scale;
    }
    return {eps, sig};
}

NearestResult PointCloudDataSet::make_result(int index, const LocalState& z) const {
    NearestResult r;
    r.index = index;
    r.point = points_[index];
    r.sq_distance = local_sq_distance(z, r.point, metric_);
    return r;
}

NearestResult PointCloudDataSet::nearest(const LocalState& z) const {
    if (z.dim() != dim()) throw std::invalid_argument("PointCloudDataSet: state dim mismatch");
    return make_result(tree_->nearest(embed(z)).index, z);
}

NearestResult PointCloudDataSet::nearest_brute_force(const LocalState& z) const {
    return make_result(tree_->nearest_brute_force(embed(z)).index, z);
}

LocalState PointCloudDataSet::random_state(Rng& rng) const {
    return points_[rng.index(size())];
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace {

std::vector<const AffineGraphBranch*> samplable_branches(const MaterialDataSet& set) {
    if (const auto* g = dynamic_cast<const AffineGraphBranch*>(&set)) return {g};
    if (const auto* t = dynamic_cast<const TwoWellDataSet*>(&set))
        return {&t->branch(0), &t->branch(1)};
    throw std::invalid_argument("sample: only linear-graph and two-well sets are samplable");
}

}  // namespace

PointCloudDataSet sample(const MaterialDataSet& set, const SamplingSpec& spec) {
    const auto branches = samplable_branches(set);
    const ElasticityTensor& C = set.metric();
    const int dim = C.dim();
    const int s = packed_size(dim);

    if (!(spec.rho > 0.0)) throw std::invalid_argument("sample: rho must be positive");
    if (spec.t < 0.0) throw std::invalid_argument("sample: t must be >= 0");
    if (static_cast<int>(spec.box.size()) != s)
        throw std::invalid_argument("sample: box must have one range per packed component");
    for (const auto& r : spec.box)
        if (!(r[1] >= r[0])) throw std::invalid_argument("sample: degenerate box range");

    // Step such that the metric diagonal of a grid cell does not exceed rho: a strain
    // move de costs C de : de along a graph, bounded by eig_max * sum(w_k) * h^2.
    double wsum = 0.0;
    for (int k = 0; k < s; ++k) wsum += detail::contraction_weight(dim, k);
    const double h = spec.rho / std::sqrt(C.eig_max() * wsum);

    std::vector<std::vector<double>> axis(s);
    std::size_t total = 1;
    for (int k = 0; k < s; ++k) {
        const double lo = spec.box[k][0], hi = spec.box[k][1];
        const double span = hi - lo;
        auto& nodes = axis[k];
        const long n = static_cast<long>(std::floor(span / h));
        for (long j = 0; j <= n; ++j) nodes.push_back(lo + static_cast<double>(j) * h);
        if (nodes.back() < hi - 1e-12 * (1.0 + std::abs(hi))) nodes.push_back(hi);
        total *= nodes.size();
        if (total > 4'000'000u) throw std::invalid_argument("sample: grid would be too large");
    }

    Rng rng(spec.seed);
    std::vector<LocalState> points;
    std::set<std::vector<double>> seen;

    for (const auto* branch : branches) {
        std::vector<std::size_t> idx(s, 0);
        while (true) {
            SymMatrix e(dim);
            for (int k = 0; k < s; ++k) e[k] = axis[k][idx[k]];
            if (branch->halfspace() && !branch->halfspace()->contains(e)) {
                // Pull the node onto the branch boundary; projection in the C metric
                // is non-expansive, so the covering radius is preserved.
                const SymMatrix& d = branch->halfspace()->direction;
                const SymMatrix cinv_d = C.apply_inverse(d);
                e += ((branch->halfspace()->bound - contract(d, e)) / contract(d, cinv_d)) *
                     cinv_d;
            }
            LocalState y = branch->at(e);
            if (spec.t > 0.0) {
                // Uniform perturbation of amplitude t in the embedded coordinates.
                PointCloudDataSet tmp({y}, C);  // embedding helper
                Vector u = tmp.embed(y);
                Vector delta(2 * s);
                for (int k = 0; k < 2 * s; ++k) delta[k] = rng.normal();
                const double norm = delta.norm();
                if (norm > 0.0) {
                    const double radius =
                        spec.t * std::pow(rng.uniform01(), 1.0 / (2.0 * s));
                    u += (radius / norm) * delta;
                }
                y = tmp.unembed(u);
            }
            std::vector<double> key = y.eps.packed();
            const auto spk = y.sig.packed();
            key.insert(key.end(), spk.begin(), spk.end());
            if (seen.insert(key).second) points.push_back(y);

            int k = 0;
            for (; k < s; ++k) {
                if (++idx[k] < axis[k].size()) break;
                idx[k] = 0;
            }
            if (k == s) break;
        }
    }

    PointCloudDataSet::Provenance prov{"sample:" + set.kind(), spec.seed, spec.rho, spec.t};
    return PointCloudDataSet(std::move(points), C, prov);
}

std::pair<TwoWellDataSet, LocalState> translate_unequal_wells(const TwoWellDataSet& set) {
    const SymMatrix d = set.well_b() - set.well_a();
    const double denom = set.metric().quad_form(d);
    const double lambda = set.well_offset() / denom;
    const LocalState shift{lambda * d, lambda * set.metric().apply(d)};
    TwoWellDataSet equalized(set.metric(), set.well_a(), set.well_b(), 0.0);
    return {std::move(equalized), shift};
}

double field_distance_sq(const StateField& field, const MaterialDataSet& set, int threads) {
    if (field.dim() != set.dim())
        throw std::invalid_argument("field_distance_sq: dimension mismatch");
    std::vector<double> d2(field.size());
    parallel_for(field.size(), threads,
                 [&](int e) { d2[e] = set.nearest(field[e]).sq_distance; });
    double total = 0.0;
    for (int e = 0; e < field.size(); ++e) total += field.weights()[e] * d2[e];
    return total;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

void save_point_cloud(const PointCloudDataSet& cloud, const std::string& csv_path,
                      const std::string& sidecar_path) {
    const int dim = cloud.dim();
    const int s = packed_size(dim);
    std::ostringstream csv;
    for (int k = 0; k < s; ++k) csv << (k ? "," : "") << "eps_" << component_label(dim, k);
    for (int k = 0; k < s; ++k) csv << ",sig_" << component_label(dim, k);
    csv << "\n";
    for (const auto& p : cloud.points()) {
        for (int k = 0; k < s; ++k) csv << (k ? "," : "") << fmt17(p.eps[k]);
        for (int k = 0; k < s; ++k) csv << "," << fmt17(p.sig[k]);
        csv << "\n";
    }
    atomic_write_text(csv_path, csv.str());

    nlohmann::json side;
    side["dim"] = dim;
    const Matrix& m = cloud.metric().voigt();
    std::vector<std::vector<double>> voigt(s, std::vector<double>(s));
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) voigt[i][j] = m(i, j);
    side["metric_voigt"] = voigt;
    if (cloud.provenance()) {
        side["provenance"] = {{"source", cloud.provenance()->source},
                              {"seed", cloud.provenance()->seed},
                              {"rho", cloud.provenance()->rho},
                              {"t", cloud.provenance()->t}};
    }
    atomic_write_text(sidecar_path, side.dump(2) + "\n");
}

PointCloudDataSet load_point_cloud(const std::string& csv_path,
                                   const std::string& sidecar_path) {
    const nlohmann::json side = nlohmann::json::parse(read_text(sidecar_path));
    if (!side.contains("dim") || !side.contains("metric_voigt"))
        throw std::runtime_error("point-cloud sidecar: missing 'dim' or 'metric_voigt'");
    const int dim = side["dim"].get<int>();
    const int s = packed_size(dim);
    Matrix m(s, s);
    const auto& voigt = side["metric_voigt"];
    if (static_cast<int>(voigt.size()) != s)
        throw std::runtime_error("point-cloud sidecar: metric size mismatch");
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) m(i, j) = voigt[i][j].get<double>();
    ElasticityTensor metric(dim, m);

    std::istringstream in(read_text(csv_path));
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("point-cloud csv: empty file");
    {
        std::ostringstream expect;
        for (int k = 0; k < s; ++k) expect << (k ? "," : "") << "eps_" << component_label(dim, k);
        for (int k = 0; k < s; ++k) expect << ",sig_" << component_label(dim, k);
        if (line != expect.str())
            throw std::runtime_error("point-cloud csv: unexpected header '" + line + "'");
    }
    std::vector<LocalState> points;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("point-cloud csv: bad number at line " +
                                         std::to_string(lineno));
            }
        }
        if (static_cast<int>(vals.size()) != 2 * s)
            throw std::runtime_error("point-cloud csv: wrong column count at line " +
                                     std::to_string(lineno));
        SymMatrix eps(dim), sig(dim);
        for (int k = 0; k < s; ++k) eps[k] = vals[k];
        for (int k = 0; k < s; ++k) sig[k] = vals[s + k];
        points.emplace_back(eps, sig);
    }

    std::optional<PointCloudDataSet::Provenance> prov;
    if (side.contains("provenance")) {
        PointCloudDataSet::Provenance p;
        const auto& jp = side["provenance"];
        p.source = jp.value("source", std::string{});
        p.seed = jp.value("seed", std::uint64_t{0});
        p.rho = jp.value("rho", 0.0);
        p.t = jp.value("t", 0.0);
        prov = p;
    }
    return PointCloudDataSet(std::move(points), std::move(metric), std::move(prov));
}

}  // namespace ddel
