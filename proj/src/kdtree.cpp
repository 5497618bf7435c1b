#include "ddel/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ddel {

KdTree::KdTree(Eigen::MatrixXd points) : points_(std::move(points)) {
    if (points_.rows() == 0) throw std::invalid_argument("KdTree: empty point set");
    order_.resize(points_.rows());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * points_.rows() / kLeafSize + 4);
    root_ = build(0, static_cast<int>(order_.size()));
}

int KdTree::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }

    // Split on the axis of largest extent; deterministic median with index tie-break.
    const int d = static_cast<int>(points_.cols());
    int axis = 0;
    double best_extent = -1.0;
    for (int a = 0; a < d; ++a) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int i = begin; i < end; ++i) {
            const double v = points_(order_[i], a);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > best_extent) {
            best_extent = hi - lo;
            axis = a;
        }
    }
    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double va = points_(a, axis), vb = points_(b, axis);
                         return va < vb || (va == vb && a < b);
                     });

    nodes_[id].axis = axis;
    nodes_[id].split = points_(order_[mid], axis);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::consider(int point, const Eigen::VectorXd& q, Result& best) const {
    const double d2 = (points_.row(point).transpose() - q).squaredNorm();
    if (d2 < best.sq_dist || (d2 == best.sq_dist && point < best.index)) {
        best.sq_dist = d2;
        best.index = point;
    }
}

void KdTree::search(int node, const Eigen::VectorXd& q, Result& best) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
        for (int i = n.begin; i < n.end; ++i) consider(order_[i], q, best);
        return;
    }
    const double delta = q[n.axis] - n.split;
    const int near = delta < 0.0 ? n.left : n.right;
    const int far = delta < 0.0 ? n.right : n.left;
    search(near, q, best);
    if (delta * delta <= best.sq_dist) search(far, q, best);
}

KdTree::Result KdTree::nearest(const Eigen::VectorXd& query) const {
    if (query.size() != points_.cols())
        throw std::invalid_argument("KdTree::nearest: query dimension mismatch");
    Result best;
    best.index = -1;
    best.sq_dist = std::numeric_limits<double>::infinity();
    search(root_, query, best);
    return best;
}

KdTree::Result KdTree::nearest_brute_force(const Eigen::VectorXd& query) const {
    Result best;
    best.index = -1;
    best.sq_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size(); ++i) consider(i, query, best);
    return best;
}

}  // namespace ddel
