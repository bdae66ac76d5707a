#include "fracheat/operators.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracheat {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

using Gauss = boost::math::quadrature::gauss<double, 30>;

void require_order(double s, const char* what) {
    if (!(s > 0.0 && s < 1.0)) {
        throw std::invalid_argument(std::string(what) + ": order s must lie in (0,1), got " +
                                    std::to_string(s));
    }
}

// Pairwise part sum_{j != i} w_j (u_i - u_j) |x_i - x_j|^{-(d+2s)} plus the in-cell correction.
Eigen::MatrixXd nonlocal_core(const Grid& grid, double s) {
    const Eigen::Index n = grid.size();
    const double p = grid.dim() + 2.0 * s;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double k = std::pow(grid.distance(i, j), -p);
            a(i, j) = -grid.weights()(j) * k;
            a(j, i) = -grid.weights()(i) * k;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) a(i, i) = -a.row(i).sum();
    // reflecting ghosts: the cell lies inside the domain, so constants see no correction
    a += cell_correction(grid, s) * neumann_laplacian(grid);
    return a;
}

// Interaction with a single layer of zero-valued cells just outside the domain.
Field ghost_layer_tail(const Grid& grid, double s) {
    const int n = grid.n_per_axis();
    const double h = grid.spacing();
    const double p = grid.dim() + 2.0 * s;
    const double w = std::pow(h, grid.dim());
    Field tail = Field::Zero(grid.size());
    std::vector<std::array<double, 2>> ghosts;
    if (grid.dim() == 1) {
        ghosts.push_back({-0.5 * h, 0.0});
        ghosts.push_back({1.0 + 0.5 * h, 0.0});
    } else {
        for (int gy = -1; gy <= n; ++gy) {
            for (int gx = -1; gx <= n; ++gx) {
                if (gx >= 0 && gx < n && gy >= 0 && gy < n) continue;
                ghosts.push_back({(gx + 0.5) * h, (gy + 0.5) * h});
            }
        }
    }
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        double acc = 0.0;
        for (const auto& g : ghosts) {
            double sq = 0.0;
            for (int a = 0; a < grid.dim(); ++a) {
                const double diff = grid.coord(i, a) - g[a];
                sq += diff * diff;
            }
            acc += w * std::pow(sq, -0.5 * p);
        }
        tail(i) = acc;
    }
    return tail;
}

double ray_to_boundary(double x, double y, double theta) {
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    double r = std::numeric_limits<double>::infinity();
    if (c > 1e-15) r = std::min(r, (1.0 - x) / c);
    if (c < -1e-15) r = std::min(r, x / -c);
    if (sn > 1e-15) r = std::min(r, (1.0 - y) / sn);
    if (sn < -1e-15) r = std::min(r, y / -sn);
    return r;
}

double wrap_angle(double a) {
    while (a < 0.0) a += 2.0 * kPi;
    while (a >= 2.0 * kPi) a -= 2.0 * kPi;
    return a;
}

// Sine eigenbasis of the 1-D Dirichlet Laplacian, normalized in the weighted pairing.
void sine_basis(int n, double h, Eigen::VectorXd& lambdas, Eigen::MatrixXd& vectors) {
    lambdas.resize(n);
    vectors.resize(n, n);
    for (int k = 1; k <= n; ++k) {
        const double sk = std::sin(k * kPi * h / 2.0);
        lambdas(k - 1) = 4.0 / (h * h) * sk * sk;
        for (int i = 0; i < n; ++i) vectors(i, k - 1) = std::sin(k * kPi * (i + 0.5) * h);
        const double norm = std::sqrt(h * vectors.col(k - 1).squaredNorm());
        vectors.col(k - 1) /= norm;
    }
}

double base_kernel(KernelRegime regime, int dim, double s, double gamma, double dist, double dx, double dy) {
    const double r = dx * dy / (dist * dist);
    switch (regime) {
        case KernelRegime::Singular:
            return std::pow(dist, -(dim - 2.0 * s)) * std::pow(std::min(r, 1.0), gamma);
        case KernelRegime::Logarithmic:
            return std::log1p(std::pow(r, gamma));
        case KernelRegime::Regular: {
            const double e = 2.0 * s - dim;
            return std::pow(dist, e) * std::min(std::pow(r, e / 2.0), std::pow(r, gamma));
        }
    }
    return 0.0;
}

// Cell average of the base kernel at coincident points.
double diagonal_average(const Grid& grid, KernelRegime regime, double s, double gamma, Eigen::Index i) {
    const double h = grid.spacing();
    if (regime == KernelRegime::Singular) {
        const double e = 2.0 * s;  // |z|^{2s-d} integrated radially
        if (grid.dim() == 1) return std::pow(h / 2.0, e - 1.0) / e;
        const double angular = Gauss::integrate([&](double t) { return std::pow(std::cos(t), -e); }, 0.0, kPi / 4.0);
        return 8.0 * std::pow(h / 2.0, e) / e * angular / (h * h);
    }
    // d = 1 only: d <= 2s forces the interval
    const double x = grid.coord(i, 0);
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [&](double z) {
        const double left = base_kernel(regime, 1, s, gamma, z, grid.delta()(i), std::min(x - z, 1.0 - x + z));
        const double right = base_kernel(regime, 1, s, gamma, z, grid.delta()(i), std::min(x + z, 1.0 - x - z));
        return left + right;
    };
    return ts.integrate(f, 0.0, h / 2.0) / h;
}

}  // namespace

std::string_view to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::Rfl: return "rfl";
        case OperatorKind::Sfl: return "sfl";
        case OperatorKind::Cfl: return "cfl";
        case OperatorKind::Synthetic: return "synthetic";
    }
    return "unknown";
}

std::optional<OperatorKind> parse_operator_kind(std::string_view name) {
    if (name == "rfl") return OperatorKind::Rfl;
    if (name == "sfl") return OperatorKind::Sfl;
    if (name == "cfl") return OperatorKind::Cfl;
    if (name == "synthetic") return OperatorKind::Synthetic;
    return std::nullopt;
}

double boundary_exponent(OperatorKind kind, double s) {
    switch (kind) {
        case OperatorKind::Rfl: return s;
        case OperatorKind::Sfl: return 1.0;
        case OperatorKind::Cfl: return 2.0 * s - 1.0;
        case OperatorKind::Synthetic: break;
    }
    throw std::invalid_argument("synthetic operators carry an explicit boundary exponent");
}

double DiscreteOperator::symmetry_residual() const {
    const Eigen::MatrixXd wa = grid->weights().asDiagonal() * matrix;
    const double scale = wa.cwiseAbs().maxCoeff();
    return scale > 0.0 ? (wa - wa.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
}

Eigen::MatrixXd neumann_laplacian(const Grid& grid) {
    Eigen::MatrixXd a = zero_ghost_laplacian(grid);
    a.diagonal() = -(a.rowwise().sum() - a.diagonal());
    return a;
}

Eigen::MatrixXd zero_ghost_laplacian(const Grid& grid) {
    const int n = grid.n_per_axis();
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(grid.size(), grid.size());
    for (int iy = 0; iy < (grid.dim() == 1 ? 1 : n); ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const Eigen::Index i = grid.index(ix, iy);
            a(i, i) = 2.0 * grid.dim() * inv_h2;
            if (ix > 0) a(i, grid.index(ix - 1, iy)) = -inv_h2;
            if (ix < n - 1) a(i, grid.index(ix + 1, iy)) = -inv_h2;
            if (grid.dim() == 2) {
                if (iy > 0) a(i, grid.index(ix, iy - 1)) = -inv_h2;
                if (iy < n - 1) a(i, grid.index(ix, iy + 1)) = -inv_h2;
            }
        }
    }
    return a;
}

Eigen::MatrixXd dirichlet_laplacian(const Grid& grid) {
    const int n = grid.n_per_axis();
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    Eigen::MatrixXd a = zero_ghost_laplacian(grid);
    for (int iy = 0; iy < (grid.dim() == 1 ? 1 : n); ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const Eigen::Index i = grid.index(ix, iy);
            int faces = (ix == 0) + (ix == n - 1);
            if (grid.dim() == 2) faces += (iy == 0) + (iy == n - 1);
            a(i, i) += faces * inv_h2;
        }
    }
    return a;
}

Field exterior_tail(const Grid& grid, double s) {
    Field kappa(grid.size());
    if (grid.dim() == 1) {
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const double x = grid.coord(i, 0);
            kappa(i) = (std::pow(x, -2.0 * s) + std::pow(1.0 - x, -2.0 * s)) / (2.0 * s);
        }
        return kappa;
    }
    // polar integration of int_R^inf r^{-1-2s} dr, split where the ray switches faces
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double x = grid.coord(i, 0);
        const double y = grid.coord(i, 1);
        std::vector<double> cuts{0.0,
                                 wrap_angle(std::atan2(1.0 - y, 1.0 - x)),
                                 wrap_angle(std::atan2(1.0 - y, -x)),
                                 wrap_angle(std::atan2(-y, -x)),
                                 wrap_angle(std::atan2(-y, 1.0 - x)),
                                 2.0 * kPi};
        std::sort(cuts.begin(), cuts.end());
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            if (cuts[k + 1] - cuts[k] < 1e-15) continue;
            acc += Gauss::integrate(
                [&](double t) { return std::pow(ray_to_boundary(x, y, t), -2.0 * s); }, cuts[k], cuts[k + 1]);
        }
        kappa(i) = acc / (2.0 * s);
    }
    return kappa;
}

double cell_correction(const Grid& grid, double s) {
    const double h = grid.spacing();
    const double radial = std::pow(h / 2.0, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    if (grid.dim() == 1) return radial;
    // (1/(2d)) * int over the square cell of |z|^{-2s}
    const double angular =
        Gauss::integrate([&](double t) { return std::pow(std::cos(t), 2.0 * s - 2.0); }, 0.0, kPi / 4.0);
    return 2.0 * radial * angular;
}

DiscreteOperator assemble_rfl(GridPtr grid, double s) {
    require_order(s, "restricted fractional Laplacian");
    DiscreteOperator op{OperatorKind::Rfl, s, s, grid, nonlocal_core(*grid, s)};
    op.matrix.diagonal() += exterior_tail(*grid, s);
    return op;
}

DiscreteOperator assemble_cfl(GridPtr grid, double s) {
    if (!(s > 0.5 && s < 1.0)) {
        throw std::invalid_argument(
            "censored fractional Laplacian requires s in (1/2,1): for s <= 1/2 the boundary exponent "
            "2s-1 is not positive and the Dirichlet problem has no viscosity solution; got s = " +
            std::to_string(s));
    }
    DiscreteOperator op{OperatorKind::Cfl, s, 2.0 * s - 1.0, grid, nonlocal_core(*grid, s)};
    op.matrix.diagonal() += ghost_layer_tail(*grid, s);
    return op;
}

DiscreteOperator assemble_sfl(GridPtr grid, double s) {
    if (!(s > 0.0 && s <= 1.0)) {
        throw std::invalid_argument("spectral fractional Laplacian: order s must lie in (0,1], got " +
                                    std::to_string(s));
    }
    const int n = grid->n_per_axis();
    Eigen::VectorXd lam1;
    Eigen::MatrixXd vec1;
    sine_basis(n, grid->spacing(), lam1, vec1);

    Eigen::VectorXd lambdas;
    Eigen::MatrixXd vectors;
    if (grid->dim() == 1) {
        lambdas = lam1;
        vectors = vec1;
    } else {
        const Eigen::Index count = grid->size();
        lambdas.resize(count);
        vectors.resize(count, count);
        for (int l = 0; l < n; ++l) {
            for (int k = 0; k < n; ++k) {
                const Eigen::Index col = k + static_cast<Eigen::Index>(n) * l;
                lambdas(col) = lam1(k) + lam1(l);
                for (int iy = 0; iy < n; ++iy) {
                    for (int ix = 0; ix < n; ++ix) vectors(grid->index(ix, iy), col) = vec1(ix, k) * vec1(iy, l);
                }
            }
        }
    }
    const Eigen::VectorXd powered = lambdas.array().pow(s);
    Eigen::MatrixXd m = vectors * powered.asDiagonal() * vectors.transpose();
    m = m * grid->weights().asDiagonal();
    return DiscreteOperator{OperatorKind::Sfl, s, 1.0, grid, std::move(m)};
}

DiscreteOperator assemble(OperatorKind kind, GridPtr grid, double s) {
    switch (kind) {
        case OperatorKind::Rfl: return assemble_rfl(std::move(grid), s);
        case OperatorKind::Sfl: return assemble_sfl(std::move(grid), s);
        case OperatorKind::Cfl: return assemble_cfl(std::move(grid), s);
        case OperatorKind::Synthetic: break;
    }
    throw std::invalid_argument("synthetic operators are built from an explicit kernel");
}

std::string_view to_string(SyntheticVariant v) {
    switch (v) {
        case SyntheticVariant::Baseline: return "baseline";
        case SyntheticVariant::Discontinuous: return "discontinuous";
        case SyntheticVariant::OscillatoryBoundary: return "oscillatory_boundary";
        case SyntheticVariant::OscillatoryDiagonal: return "oscillatory_diagonal";
    }
    return "unknown";
}

std::optional<SyntheticVariant> parse_synthetic_variant(std::string_view name) {
    if (name == "baseline") return SyntheticVariant::Baseline;
    if (name == "discontinuous") return SyntheticVariant::Discontinuous;
    if (name == "oscillatory_boundary") return SyntheticVariant::OscillatoryBoundary;
    if (name == "oscillatory_diagonal") return SyntheticVariant::OscillatoryDiagonal;
    return std::nullopt;
}

KernelRegime kernel_regime(int dim, double s) {
    const double gap = dim - 2.0 * s;
    if (std::abs(gap) < 1e-12) return KernelRegime::Logarithmic;
    return gap > 0.0 ? KernelRegime::Singular : KernelRegime::Regular;
}

double green_comparator(int dim, double s, double gamma, double dist, double delta_x, double delta_y) {
    return base_kernel(kernel_regime(dim, s), dim, s, gamma, dist, delta_x, delta_y);
}

GreenKernelMatrix synthetic_green(GridPtr grid, double s, double gamma, const SyntheticOptions& options) {
    require_order(s, "synthetic kernel");
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("synthetic kernel: boundary exponent must lie in (0,1]");
    }
    if (options.variant == SyntheticVariant::OscillatoryDiagonal && options.exp_depth < 1) {
        throw std::invalid_argument("synthetic kernel: exp_depth must be at least 1");
    }
    GreenKernelMatrix out;
    out.grid = grid;
    out.s = s;
    out.gamma = gamma;
    out.regime = kernel_regime(grid->dim(), s);
    const Eigen::Index n = grid->size();
    const Field& delta = grid->delta();
    out.values.resize(n, n);

    auto in_set = [&](Eigen::Index i, Eigen::Index j) {
        const double xi = grid->coord(i, 0);
        const double yj = grid->coord(j, 0);
        return options.symmetric_set ? (xi + yj < 1.0) : (xi < yj);
    };

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double value = i == j ? diagonal_average(*grid, out.regime, s, gamma, i)
                                  : base_kernel(out.regime, grid->dim(), s, gamma, grid->distance(i, j), delta(i), delta(j));
            switch (options.variant) {
                case SyntheticVariant::Baseline: break;
                case SyntheticVariant::Discontinuous:
                    value *= 1.0 + (in_set(i, j) ? 1.0 : 0.0);
                    break;
                case SyntheticVariant::OscillatoryBoundary:
                    value *= (2.0 + std::sin(1.0 / delta(i))) * (2.0 + std::sin(1.0 / delta(j)));
                    break;
                case SyntheticVariant::OscillatoryDiagonal: {
                    if (i == j) {
                        value *= 2.0;
                        break;
                    }
                    const double d = grid->distance(i, j);
                    double arg = 1.0 / (d * d);
                    bool resolved = true;
                    for (int k = 0; k < options.exp_depth && resolved; ++k) {
                        if (arg > 700.0) resolved = false;
                        else arg = std::exp(arg);
                    }
                    if (resolved && arg > 1e15) resolved = false;
                    if (resolved) {
                        value *= 2.0 + std::sin(std::fmod(arg, 2.0 * kPi));
                    } else {
                        value *= 2.0;
                        ++out.unresolved_entries;
                    }
                    break;
                }
            }
            out.values(i, j) = value;
        }
    }

    const double scale = out.values.cwiseAbs().maxCoeff();
    out.symmetric = (out.values - out.values.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
    const Eigen::VectorXd sqrt_w = grid->weights().cwiseSqrt();
    const Eigen::MatrixXd sym = 0.5 * (out.values + out.values.transpose());
    const Eigen::MatrixXd scaled = sqrt_w.asDiagonal() * sym * sqrt_w.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scaled, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = solver.eigenvalues()(0);
    out.positive_definite = out.symmetric && out.min_eigenvalue > 0.0;
    return out;
}

DiscreteOperator operator_from_green(const GreenKernelMatrix& kernel) {
    if (!kernel.symmetric) throw std::invalid_argument("kernel is not symmetric");
    if (!kernel.positive_definite) {
        throw std::invalid_argument("kernel is not positive definite (min eigenvalue " +
                                    std::to_string(kernel.min_eigenvalue) + ")");
    }
    const Eigen::Index n = kernel.values.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(kernel.values);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("kernel factorization failed");
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    inv = 0.5 * (inv + inv.transpose());
    Eigen::MatrixXd m = kernel.grid->weights().cwiseInverse().asDiagonal() * inv;
    return DiscreteOperator{OperatorKind::Synthetic, kernel.s, kernel.gamma, kernel.grid, std::move(m)};
}

}  // namespace fracheat
