#include "ddel/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ddel {

double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                               double tol, int max_iters) {
    if (!(hi >= lo)) throw std::invalid_argument("golden_section_minimize: empty interval");
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iters && (b - a) > tol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

Eigen::VectorXd nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x0, double initial_step, double tol,
                                     int max_iters) {
    const int n = static_cast<int>(x0.size());
    if (n < 1) throw std::invalid_argument("nelder_mead_minimize: empty start point");

    struct Vertex {
        Eigen::VectorXd x;
        double value;
    };
    std::vector<Vertex> simplex;
    simplex.push_back({x0, f(x0)});
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x = x0;
        x[i] += initial_step;
        simplex.push_back({x, f(x)});
    }
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.value < b.value; };

    for (int it = 0; it < max_iters; ++it) {
        std::sort(simplex.begin(), simplex.end(), by_value);
        if (simplex.back().value - simplex.front().value <=
            tol * (1.0 + std::abs(simplex.front().value)))
            break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += simplex[i].x;
        centroid /= static_cast<double>(n);
        const Vertex& worst = simplex.back();

        const Eigen::VectorXd reflected = centroid + (centroid - worst.x);
        const double fr = f(reflected);
        if (fr < simplex.front().value) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - worst.x);
            const double fe = f(expanded);
            simplex.back() = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
            continue;
        }
        if (fr < simplex[n - 1].value) {
            simplex.back() = {reflected, fr};
            continue;
        }
        const Eigen::VectorXd contracted = centroid + 0.5 * (worst.x - centroid);
        const double fc = f(contracted);
        if (fc < worst.value) {
            simplex.back() = {contracted, fc};
            continue;
        }
        // Shrink toward the best vertex.
        for (std::size_t i = 1; i < simplex.size(); ++i) {
            simplex[i].x = simplex[0].x + 0.5 * (simplex[i].x - simplex[0].x);
            simplex[i].value = f(simplex[i].x);
        }
    }
    std::sort(simplex.begin(), simplex.end(), by_value);
    return simplex.front().x;
}

}  // namespace ddel
