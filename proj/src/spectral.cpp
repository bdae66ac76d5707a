#include "fracheat/spectral.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace fracheat {

EigenSystem EigenSystem::with_modes(Eigen::Index m) const {
    EigenSystem copy = *this;
    copy.modes = (m <= 0 || m > size()) ? size() : m;
    return copy;
}

Eigen::VectorXd EigenSystem::coefficients(const Field& u) const {
    return active_phis().transpose() * (grid->weights().array() * u.array()).matrix();
}

Field EigenSystem::synthesize(const Eigen::VectorXd& c) const { return active_phis() * c; }

double EigenSystem::weyl_constant(Eigen::Index k_max) const {
    const double a = 2.0 * s / grid->dim();
    const Eigen::Index top = std::clamp<Eigen::Index>(k_max, 1, size());
    double c = lambdas(0);
    for (Eigen::Index k = 1; k <= top; ++k) c = std::min(c, lambdas(k - 1) / std::pow(static_cast<double>(k), a));
    return c;
}

double EigenSystem::tail_sum(double t) const {
    if (modes >= size()) return 0.0;
    // sum_{k>M} exp(-c t k^a) <= int_M^inf exp(-c t k^a) dk
    const double a = 2.0 * s / grid->dim();
    const double c = weyl_constant(std::max<Eigen::Index>(size() / 4, 1));
    const double b = c * t;
    const double m = static_cast<double>(modes);
    return std::pow(b, -1.0 / a) / a * boost::math::tgamma(1.0 / a, b * std::pow(m, a));
}

double EigenSystem::max_sup_norm() const { return active_phis().cwiseAbs().maxCoeff(); }

EigenSystem eigendecompose(const DiscreteOperator& op, Eigen::Index modes) {
    const Grid& grid = *op.grid;
    const Eigen::VectorXd sqrt_w = grid.weights().cwiseSqrt();
    Eigen::MatrixXd sym = sqrt_w.asDiagonal() * op.matrix * sqrt_w.cwiseInverse().asDiagonal();
    sym = 0.5 * (sym + sym.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");

    EigenSystem eig;
    eig.kind = op.kind;
    eig.s = op.s;
    eig.gamma = op.gamma;
    eig.grid = op.grid;
    eig.lambdas = solver.eigenvalues();
    eig.phis = sqrt_w.cwiseInverse().asDiagonal() * solver.eigenvectors();

    if (eig.lambdas(0) <= 0.0) {
        throw NumericalError("operator is not positive definite: lambda_1 = " + std::to_string(eig.lambdas(0)));
    }
    if (eig.size() > 1 && eig.lambdas(1) - eig.lambdas(0) < 1e-10 * eig.lambdas(0)) {
        throw NumericalError("ground state is degenerate: lambda_2 - lambda_1 = " +
                             std::to_string(eig.lambdas(1) - eig.lambdas(0)));
    }

    for (Eigen::Index k = 0; k < eig.size(); ++k) {
        auto col = eig.phis.col(k);
        if (k == 0) {
            if (col.sum() < 0.0) col = -col;
        } else {
            Eigen::Index arg = 0;
            col.cwiseAbs().maxCoeff(&arg);
            if (col(arg) < 0.0) col = -col;
        }
    }
    eig.ground_state_positive = (eig.phis.col(0).array() > 0.0).all();
    eig.modes = modes > 0 ? std::min(modes, eig.size()) : std::max<Eigen::Index>(eig.size() / 2, 1);
    return eig;
}

WeylReport weyl_check(const EigenSystem& eig, Eigen::Index k_max, double tolerance) {
    WeylReport report;
    report.k_max = std::clamp<Eigen::Index>(k_max, 1, eig.size());
    report.tolerance = tolerance;
    report.constant = eig.weyl_constant(report.k_max);
    const double a = 2.0 * eig.s / eig.grid->dim();
    report.pass = report.constant > 0.0;
    for (Eigen::Index k = 1; k <= report.k_max; ++k) {
        const double margin = eig.lambdas(k - 1) - report.constant * std::pow(static_cast<double>(k), a);
        report.margins.push_back(margin);
        if (margin < -tolerance) report.pass = false;
    }
    return report;
}

void attach_sobolev_bound(WeylReport& report, const EigenSystem& eig, double sobolev_constant) {
    const int d = eig.grid->dim();
    const double a = 2.0 * eig.s / d;   // (alpha-2)/alpha with alpha = 2d/(d-2s)
    report.sobolev_constant = sobolev_constant;
    // the energy controls C_S^2 ||u||_alpha^2
    report.sobolev_bound_constant = 2.0 * sobolev_constant * sobolev_constant * std::exp(-2.0);
    report.sobolev_bound_holds = true;
    for (Eigen::Index k = 1; k <= report.k_max; ++k) {
        const double bound = *report.sobolev_bound_constant * std::pow(k / eig.grid->volume(), a);
        if (eig.lambdas(k - 1) < bound) report.sobolev_bound_holds = false;
    }
}

double estimate_sobolev_constant(const EigenSystem& eig, std::optional<double> alpha, int trials,
                                 std::uint64_t seed) {
    const Grid& grid = *eig.grid;
    const int d = grid.dim();
    if (!(d > 2.0 * eig.s)) {
        throw std::invalid_argument("Sobolev exponent 2d/(d-2s) is undefined for d <= 2s");
    }
    const double p = alpha.value_or(2.0 * d / (d - 2.0 * eig.s));
    const Field& w = grid.weights();

    auto quotient = [&](const Field& u) {
        const Eigen::VectorXd c = eig.phis.transpose() * (w.array() * u.array()).matrix();
        const double energy = (eig.lambdas.array() * c.array().square()).sum();
        const double norm = std::pow((w.array() * u.array().abs().pow(p)).sum(), 1.0 / p);
        return std::sqrt(energy) / norm;
    };

    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < eig.size(); ++k) best = std::min(best, quotient(eig.phis.col(k)));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int t = 0; t < trials; ++t) {
        Field u(grid.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = uni(rng);
        if (t % 2 == 1) u = u.cwiseAbs();
        best = std::min(best, quotient(u));
    }
    return best;
}

double rayleigh_residual(const EigenSystem& eig, const DiscreteOperator& op) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < eig.modes; ++k) {
        const Field phi = eig.phis.col(k);
        const double q = eig.grid->inner(op.apply(phi), phi);
        worst = std::max(worst, std::abs(q - eig.lambdas(k)) / eig.lambdas(k));
    }
    return worst;
}

double orthonormality_residual(const EigenSystem& eig) {
    const auto p = eig.active_phis();
    const Eigen::MatrixXd gram = p.transpose() * eig.grid->weights().asDiagonal() * p;
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace fracheat
