#include "ddel/mesh.hpp"

#include "ddel/io_util.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ddel {

Mesh::Mesh(int dim, Eigen::MatrixXd coords, std::vector<std::vector<int>> elements,
           std::vector<Facet> facets)
    : dim_(dim), coords_(std::move(coords)), elements_(std::move(elements)),
      facets_(std::move(facets)) {
    if (dim_ != 1 && dim_ != 2) throw std::invalid_argument("Mesh: dim must be 1 or 2");
    if (coords_.cols() != dim_) throw std::invalid_argument("Mesh: coordinate width mismatch");
    if (coords_.rows() == 0) throw std::invalid_argument("Mesh: no nodes");
    if (elements_.empty()) throw std::invalid_argument("Mesh: no elements");
    const int nodes_per_elem = dim_ + 1;
    for (const auto& elem : elements_) {
        if (static_cast<int>(elem.size()) != nodes_per_elem)
            throw std::invalid_argument("Mesh: element node count mismatch");
        for (int n : elem)
            if (n < 0 || n >= n_nodes()) throw std::invalid_argument("Mesh: node index out of range");
    }
    for (const auto& f : facets_) {
        if (static_cast<int>(f.nodes.size()) != dim_)
            throw std::invalid_argument("Mesh: facet node count mismatch");
        for (int n : f.nodes)
            if (n < 0 || n >= n_nodes()) throw std::invalid_argument("Mesh: facet node out of range");
    }
    for (int e = 0; e < n_elements(); ++e)
        if (!(element_measure(e) > 0.0))
            throw std::invalid_argument("Mesh: degenerate element " + std::to_string(e));
}

double Mesh::element_measure(int e) const {
    const auto& elem = elements_[e];
    if (dim_ == 1) return std::abs(coords_(elem[1], 0) - coords_(elem[0], 0));
    const Eigen::Vector2d a = coords_.row(elem[0]), b = coords_.row(elem[1]),
                          c = coords_.row(elem[2]);
    return 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

double Mesh::facet_measure(int f) const {
    const auto& facet = facets_[f];
    if (dim_ == 1) return 1.0;  // point facet
    return (coords_.row(facet.nodes[1]) - coords_.row(facet.nodes[0])).norm();
}

Eigen::VectorXd Mesh::element_centroid(int e) const {
    const auto& elem = elements_[e];
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dim_);
    for (int n : elem) c += coords_.row(n).transpose();
    return c / static_cast<double>(elem.size());
}

std::vector<int> Mesh::nodes_with_marker(int marker) const {
    std::set<int> found;
    for (const auto& f : facets_)
        if (f.marker == marker) found.insert(f.nodes.begin(), f.nodes.end());
    return {found.begin(), found.end()};
}

Mesh Mesh::bar(double length, int n) {
    if (!(length > 0.0) || n < 1) throw std::invalid_argument("Mesh::bar: bad parameters");
    Eigen::MatrixXd coords(n + 1, 1);
    for (int i = 0; i <= n; ++i) coords(i, 0) = length * static_cast<double>(i) / n;
    std::vector<std::vector<int>> elements;
    for (int e = 0; e < n; ++e) elements.push_back({e, e + 1});
    std::vector<Facet> facets{{{0}, kLeft}, {{n}, kRight}};
    return Mesh(1, std::move(coords), std::move(elements), std::move(facets));
}

Mesh Mesh::rectangle(double lx, double ly, int nx, int ny, const std::string& pattern) {
    if (!(lx > 0.0) || !(ly > 0.0) || nx < 1 || ny < 1)
        throw std::invalid_argument("Mesh::rectangle: bad parameters");
    const bool crossed = pattern == "crossed";
    if (!crossed && pattern != "diagonal")
        throw std::invalid_argument("Mesh::rectangle: unknown pattern '" + pattern + "'");

    const int n_grid = (nx + 1) * (ny + 1);
    const int n_centers = crossed ? nx * ny : 0;
    Eigen::MatrixXd coords(n_grid + n_centers, 2);
    auto grid = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            coords(grid(i, j), 0) = lx * static_cast<double>(i) / nx;
            coords(grid(i, j), 1) = ly * static_cast<double>(j) / ny;
        }

    std::vector<std::vector<int>> elements;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int sw = grid(i, j), se = grid(i + 1, j), nw = grid(i, j + 1),
                      ne = grid(i + 1, j + 1);
            if (crossed) {
                const int center = n_grid + j * nx + i;
                coords(center, 0) = lx * (i + 0.5) / nx;
                coords(center, 1) = ly * (j + 0.5) / ny;
                elements.push_back({sw, se, center});
                elements.push_back({se, ne, center});
                elements.push_back({ne, nw, center});
                elements.push_back({nw, sw, center});
            } else {
                elements.push_back({sw, se, ne});
                elements.push_back({sw, ne, nw});
            }
        }

    std::vector<Facet> facets;
    for (int j = 0; j < ny; ++j) {
        facets.push_back({{grid(0, j), grid(0, j + 1)}, kLeft});
        facets.push_back({{grid(nx, j), grid(nx, j + 1)}, kRight});
    }
    for (int i = 0; i < nx; ++i) {
        facets.push_back({{grid(i, 0), grid(i + 1, 0)}, kBottom});
        facets.push_back({{grid(i, ny), grid(i + 1, ny)}, kTop});
    }
    return Mesh(2, std::move(coords), std::move(elements), std::move(facets));
}

Mesh Mesh::load(const std::string& path) {
    std::istringstream in(read_text(path));
    int dim = 0, n_nodes = 0, n_elems = 0;
    if (!(in >> dim >> n_nodes >> n_elems))
        throw std::runtime_error("Mesh::load: bad header in " + path);
    if (dim != 1 && dim != 2) throw std::runtime_error("Mesh::load: unsupported dim in " + path);
    Eigen::MatrixXd coords(n_nodes, dim);
    for (int i = 0; i < n_nodes; ++i)
        for (int d = 0; d < dim; ++d)
            if (!(in >> coords(i, d)))
                throw std::runtime_error("Mesh::load: truncated coordinates in " + path);
    std::vector<std::vector<int>> elements(n_elems, std::vector<int>(dim + 1));
    for (auto& elem : elements)
        for (int& n : elem)
            if (!(in >> n)) throw std::runtime_error("Mesh::load: truncated connectivity in " + path);
    int n_facets = 0;
    if (!(in >> n_facets)) throw std::runtime_error("Mesh::load: missing facet count in " + path);
    std::vector<Facet> facets(n_facets);
    for (auto& f : facets) {
        f.nodes.resize(dim);
        for (int& n : f.nodes)
            if (!(in >> n)) throw std::runtime_error("Mesh::load: truncated facets in " + path);
        if (!(in >> f.marker)) throw std::runtime_error("Mesh::load: truncated facets in " + path);
    }
    return Mesh(dim, std::move(coords), std::move(elements), std::move(facets));
}

void Mesh::save(const std::string& path) const {
    std::ostringstream out;
    out << dim_ << " " << n_nodes() << " " << n_elements() << "\n";
    for (int i = 0; i < n_nodes(); ++i) {
        for (int d = 0; d < dim_; ++d) out << (d ? " " : "") << fmt17(coords_(i, d));
        out << "\n";
    }
    for (const auto& elem : elements_) {
        for (std::size_t k = 0; k < elem.size(); ++k) out << (k ? " " : "") << elem[k];
        out << "\n";
    }
    out << facets_.size() << "\n";
    for (const auto& f : facets_) {
        for (int n : f.nodes) out << n << " ";
        out << f.marker << "\n";
    }
    atomic_write_text(path, out.str());
}

}  // namespace ddel
