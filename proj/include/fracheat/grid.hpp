#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

namespace fracheat {

/// Grid function on interior nodes.
using Field = Eigen::VectorXd;

/// A quadrature node on the boundary of the unit interval/square.
struct BoundaryNode {
    std::array<double, 2> position{};
    double weight = 0.0;
    int axis = 0;   // coordinate normal to the face
    int side = 0;   // 0 = face at 0, 1 = face at 1
    // interior nodes along the inward normal, nearest first
    std::array<int, 3> stencil{};
    std::array<double, 3> normal_distance{};
};

/**
 * Uniform cell-centered grid on (0,1)^d, d in {1,2}.
 *
 * Node (ix, iy) sits at ((ix+1/2)h, (iy+1/2)h) with flat index ix + n*iy.
 * Boundary nodes are the endpoints in 1-D and the edge midpoints of the
 * boundary cells in 2-D, ordered face by face: x=0, x=1, y=0, y=1.
 */
class Grid {
public:
    Grid(int dim, int n_per_axis);

    int dim() const { return dim_; }
    int n_per_axis() const { return n_; }
    double spacing() const { return h_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(weights_.size()); }

    double coord(Eigen::Index i, int axis) const { return coords_(i, axis); }
    const Eigen::MatrixXd& coords() const { return coords_; }
    const Field& weights() const { return weights_; }
    const Field& delta() const { return delta_; }
    const std::vector<BoundaryNode>& boundary() const { return boundary_; }
    Eigen::VectorXd boundary_weights() const;

    double volume() const { return 1.0; }
    double boundary_measure() const { return dim_ == 1 ? 2.0 : 4.0; }

    double distance(Eigen::Index i, Eigen::Index j) const;
    double distance_to_boundary_node(Eigen::Index i, std::size_t b) const;
    Eigen::Index index(int ix, int iy = 0) const { return ix + static_cast<Eigen::Index>(n_) * iy; }

    /// Weighted inner product sum_i w_i u_i v_i.
    double inner(const Field& u, const Field& v) const;
    /// Weighted L1 norm, optionally against a weight field.
    double l1(const Field& u) const;
    double l1(const Field& u, const Field& weight) const;
    double l2(const Field& u) const;

    /// Index of the boundary node nearest to interior node i (ties to the lower index).
    std::size_t nearest_boundary_node(Eigen::Index i) const;

private:
    int dim_;
    int n_;
    double h_;
    Eigen::MatrixXd coords_;
    Field weights_;
    Field delta_;
    std::vector<BoundaryNode> boundary_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Throws std::invalid_argument for dim outside {1,2} or n_per_axis < 4.
GridPtr build_grid(int dim, int n_per_axis);

}  // namespace fracheat
