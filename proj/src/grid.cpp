#include "fracheat/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fracheat {

Grid::Grid(int dim, int n_per_axis) : dim_(dim), n_(n_per_axis), h_(1.0 / n_per_axis) {
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("grid dimension must be 1 or 2, got " + std::to_string(dim));
    }
    if (n_per_axis < 4) {
        throw std::invalid_argument("grid needs at least 4 cells per axis, got " +
                                    std::to_string(n_per_axis));
    }
    const Eigen::Index count = dim == 1 ? n_ : static_cast<Eigen::Index>(n_) * n_;
    coords_.resize(count, dim);
    weights_ = Field::Constant(count, std::pow(h_, dim));
    delta_.resize(count);

    auto center = [this](int k) { return (k + 0.5) * h_; };
    for (int iy = 0; iy < (dim == 1 ? 1 : n_); ++iy) {
        for (int ix = 0; ix < n_; ++ix) {
            const Eigen::Index i = index(ix, iy);
            coords_(i, 0) = center(ix);
            double d = std::min(center(ix), 1.0 - center(ix));
            if (dim == 2) {
                coords_(i, 1) = center(iy);
                d = std::min({d, center(iy), 1.0 - center(iy)});
            }
            delta_(i) = d;
        }
    }

    const std::array<double, 3> depth{0.5 * h_, 1.5 * h_, 2.5 * h_};
    if (dim == 1) {
        for (int side = 0; side < 2; ++side) {
            BoundaryNode b;
            b.position = {static_cast<double>(side), 0.0};
            b.weight = 1.0;
            b.axis = 0;
            b.side = side;
            for (int k = 0; k < 3; ++k) {
                b.stencil[k] = side == 0 ? k : n_ - 1 - k;
                b.normal_distance[k] = depth[k];
            }
            boundary_.push_back(b);
        }
        return;
    }
    for (int axis = 0; axis < 2; ++axis) {
        for (int side = 0; side < 2; ++side) {
            for (int t = 0; t < n_; ++t) {
                BoundaryNode b;
                b.axis = axis;
                b.side = side;
                b.weight = h_;
                b.position[axis] = static_cast<double>(side);
                b.position[1 - axis] = center(t);
                for (int k = 0; k < 3; ++k) {
                    const int normal_index = side == 0 ? k : n_ - 1 - k;
                    b.stencil[k] = static_cast<int>(axis == 0 ? index(normal_index, t)
                                                              : index(t, normal_index));
                    b.normal_distance[k] = depth[k];
                }
                boundary_.push_back(b);
            }
        }
    }
}

Eigen::VectorXd Grid::boundary_weights() const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(boundary_.size()));
    for (std::size_t b = 0; b < boundary_.size(); ++b) w(static_cast<Eigen::Index>(b)) = boundary_[b].weight;
    return w;
}

double Grid::distance(Eigen::Index i, Eigen::Index j) const {
    return (coords_.row(i) - coords_.row(j)).norm();
}

double Grid::distance_to_boundary_node(Eigen::Index i, std::size_t b) const {
    double sq = 0.0;
    for (int a = 0; a < dim_; ++a) {
        const double diff = coords_(i, a) - boundary_[b].position[a];
        sq += diff * diff;
    }
    return std::sqrt(sq);
}

double Grid::inner(const Field& u, const Field& v) const {
    return (weights_.array() * u.array() * v.array()).sum();
}

double Grid::l1(const Field& u) const { return (weights_.array() * u.array().abs()).sum(); }

double Grid::l1(const Field& u, const Field& weight) const {
    return (weights_.array() * u.array().abs() * weight.array()).sum();
}

double Grid::l2(const Field& u) const { return std::sqrt(inner(u, u)); }

std::size_t Grid::nearest_boundary_node(Eigen::Index i) const {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < boundary_.size(); ++b) {
        const double d = distance_to_boundary_node(i, b);
        if (d < best_dist - 1e-14) {
            best_dist = d;
            best = b;
        }
    }
    return best;
}

GridPtr build_grid(int dim, int n_per_axis) { return std::make_shared<const Grid>(dim, n_per_axis); }

}  // namespace fracheat
