#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ddel {

/// Boundary facet markers used by the built-in mesh generators.
enum BoundaryMarker : int {
    kLeft = 1,
    kRight = 2,
    kBottom = 3,
    kTop = 4,
};

/// Simplicial mesh with linear elements: segments in 1D, triangles in 2D.
/// Boundary facets (points in 1D, edges in 2D) carry integer markers so
/// boundary conditions can be addressed by side.
class Mesh {
public:
    struct Facet {
        std::vector<int> nodes;
        int marker = 0;
    };

    Mesh(int dim, Eigen::MatrixXd coords, std::vector<std::vector<int>> elements,
         std::vector<Facet> facets);

    int dim() const { return dim_; }
    int n_nodes() const { return static_cast<int>(coords_.rows()); }
    int n_elements() const { return static_cast<int>(elements_.size()); }

    const Eigen::MatrixXd& coords() const { return coords_; }
    const std::vector<int>& element(int e) const { return elements_[e]; }
    const std::vector<Facet>& facets() const { return facets_; }

    /// Measure (length/area) of element e.
    double element_measure(int e) const;

    /// Measure of boundary facet f.
    double facet_measure(int f) const;

    /// Centroid of element e.
    Eigen::VectorXd element_centroid(int e) const;

    /// Nodes lying on facets with the given marker, sorted and unique.
    std::vector<int> nodes_with_marker(int marker) const;

    /// Uniform bar [0, length] with n elements; point facets marked left/right.
    static Mesh bar(double length, int n);

    /// Rectangle [0,lx]x[0,ly] on an nx-by-ny grid of cells, each split into two
    /// triangles along the same diagonal ("diagonal") or into four around the cell
    /// center ("crossed").
    static Mesh rectangle(double lx, double ly, int nx, int ny,
                          const std::string& pattern = "diagonal");

    /// Plain-text format: counts, node coordinates, 0-based connectivity, then
    /// boundary facets with markers.
    static Mesh load(const std::string& path);
    void save(const std::string& path) const;

private:
    int dim_;
    Eigen::MatrixXd coords_;
    std::vector<std::vector<int>> elements_;
    std::vector<Facet> facets_;
};

}  // namespace ddel
