#pragma once

#include <Eigen/Dense>

#include <vector>

namespace ddel {

/// Exact nearest-neighbor index over a fixed point set in R^d.  Ties in distance are
/// broken toward the lowest point index, deterministically.
class KdTree {
  public:
    struct Result {
        int index = -1;
        double sq_dist = 0.0;
    };

    /// points: one row per point.
    explicit KdTree(Eigen::MatrixXd points);

    int size() const { return static_cast<int>(points_.rows()); }

    Result nearest(const Eigen::VectorXd& query) const;

    /// Reference linear scan with the same tie-break, for validation.
    Result nearest_brute_force(const Eigen::VectorXd& query) const;

  private:
    struct Node {
        int axis = -1;         // -1 marks a leaf
        double split = 0.0;    // split coordinate
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into order_
    };

    int build(int begin, int end);
    void search(int node, const Eigen::VectorXd& q, Result& best) const;
    void consider(int point, const Eigen::VectorXd& q, Result& best) const;

    Eigen::MatrixXd points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;

    static constexpr int kLeafSize = 8;
};

}  // namespace ddel
