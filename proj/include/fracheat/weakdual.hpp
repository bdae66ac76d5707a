#pragma once

#include "fracheat/evolution.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fracheat {

/**
 * Test function on a time grid, linear on each segment. One-sided values are
 * stored per segment so jumps at the nodes are allowed.
 */
struct TestFunction {
    std::string name;
    std::vector<double> times;
    std::vector<Field> start;   // value at the left end of segment k
    std::vector<Field> end;     // value at the right end of segment k

    static TestFunction constant(std::string name, const std::vector<double>& times, const Field& value);
    /// Continuous piecewise-linear function from nodal values.
    static TestFunction nodal(std::string name, const std::vector<double>& times, const std::vector<Field>& values);
};

struct WeakDualResidual {
    std::string test;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    double relative = 0.0;   // residual / int int |u| |phi(T-t)|
    bool trace_flagged = false;
};

/// Modal coefficients of H[0,phi,0] at every node of the test-function grid.
std::vector<Eigen::VectorXd> test_response(const EigenSystem& eig, const TestFunction& phi);

/**
 * Residual of the tested identity for a trajectory on a uniform time grid that
 * matches the test function's grid. Time integrals use the trapezoid rule.
 */
WeakDualResidual weak_phi_residual(const EigenSystem& eig, const Trajectory& traj, const TimeDependentData& data,
                                   const TestFunction& phi);

/// Test functions {phi_1, sign patterns * phi_1, chi_A * phi_1, bumps * delta^gamma, (T-t) phi_1}.
std::vector<TestFunction> default_test_bank(const EigenSystem& eig, const std::vector<double>& times,
                                            std::uint64_t seed = 0);

/// Rough random data: cellwise-constant u0, f linear in t, boundary data linear in t.
TimeDependentData random_data(const Grid& grid, double t_end, std::uint64_t seed, int coarse_cells = 64);

struct PsiResidual {
    WeakDualResidual psi_form;
    WeakDualResidual phi_form;       // same test written as phi = -G[psi_t(T-t)] + psi(T-t)
    double relation_residual = 0.0;   // max over nodes and modes of |H[0,phi,0](T-t) - G[psi(t)]| relative
};

/// psi must vanish at the final time; throws otherwise.
PsiResidual weak_psi_residual(const EigenSystem& eig, const Trajectory& traj, const TimeDependentData& data,
                              const TestFunction& psi);

struct L1EstimateReport {
    double solution_norm = 0.0;   // int int |u| delta^gamma
    double data_norm = 0.0;       // int |u0| delta^gamma + int int |f| delta^gamma + int int |h|
    double constant = 0.0;        // solution_norm / data_norm
    double weighted_lhs = 0.0;    // int int |u| phi_1
    double weighted_rhs = 0.0;    // (int |u0| phi_1 + int int |f| phi_1 + int int |h| D phi_1) / lambda_1
    bool weighted_holds = false;
};

/// The L1(delta^gamma) estimate together with its sign(u) phi_1 tested form.
L1EstimateReport l1_estimate_check(const EigenSystem& eig, const Trajectory& traj, const TimeDependentData& data);

}  // namespace fracheat
