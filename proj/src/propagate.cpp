#include "qledger/propagate.hpp"

#include <cmath>
#include <stdexcept>

namespace qledger {

TimeGrid::TimeGrid(double t0_, double tf_, int steps_) : t0(t0_), tf(tf_), steps(steps_) {
    if (!(tf > t0)) throw std::invalid_argument("time grid needs tf > t0");
    if (steps < 1) throw std::invalid_argument("time grid needs steps >= 1");
}

StateVector evolve_static(const Operator& h, double t, const StateVector& psi0) {
    if (!(h.basis == psi0.basis))
        throw std::invalid_argument("evolve_static: operator/state basis mismatch");
    const Operator u = expm_skew(h, t);
    return StateVector(psi0.basis, u.entries * psi0.amps);
}

Operator simpson_integrate_hamiltonian(const HamiltonianFn& hfn, const TimeGrid& grid) {
    // composite Simpson needs an even interval count
    const int n = (grid.steps % 2 == 0) ? grid.steps : grid.steps + 1;
    const double dt = (grid.tf - grid.t0) / n;
    Eigen::MatrixXcd acc;
    BasisLabel basis;
    for (int k = 0; k <= n; ++k) {
        const Operator h = hfn(grid.t0 + k * dt);
        const double w = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        if (k == 0) {
            basis = h.basis;
            acc = w * h.entries;
        } else {
            acc += w * h.entries;
        }
    }
    acc *= dt / 3.0;
    return Operator(basis, std::move(acc), OperatorKind::hermitian);
}

StateVector evolve_magnus1(const HamiltonianFn& hfn, const TimeGrid& grid,
                           const StateVector& psi0,
                           const std::optional<Operator>& integrated) {
    const Operator gen = integrated ? *integrated : simpson_integrate_hamiltonian(hfn, grid);
    if (!(gen.basis == psi0.basis))
        throw std::invalid_argument("evolve_magnus1: generator/state basis mismatch");
    const Operator u = expm_skew(gen, 1.0);
    return StateVector(psi0.basis, u.entries * psi0.amps);
}

namespace {

Eigen::VectorXcd ordered_pass(const HamiltonianFn& hfn, const TimeGrid& grid,
                              const Eigen::VectorXcd& amps0) {
    const double dt = grid.dt();
    Eigen::VectorXcd amps = amps0;
    for (int k = 0; k < grid.steps; ++k) {
        const double t_mid = grid.t0 + (k + 0.5) * dt;
        const Operator u = expm_skew(hfn(t_mid), dt);
        amps = u.entries * amps;
    }
    return amps;
}

}  // namespace

OrderedResult evolve_ordered(const HamiltonianFn& hfn, const TimeGrid& grid,
                             const StateVector& psi0) {
    const Eigen::VectorXcd full = ordered_pass(hfn, grid, psi0.amps);
    double residual = 0.0;
    if (grid.steps >= 2) {
        const TimeGrid half(grid.t0, grid.tf, grid.steps / 2);
        residual = (full - ordered_pass(hfn, half, psi0.amps)).norm();
    }
    return {StateVector(psi0.basis, full), residual};
}

OrderedTrajectory ordered_trajectory(const HamiltonianFn& hfn, const TimeGrid& grid,
                                     const StateVector& psi0, int sample_count) {
    if (sample_count < 2) throw std::invalid_argument("ordered_trajectory needs >= 2 samples");
    const double dt = grid.dt();
    OrderedTrajectory out;
    out.samples.reserve(sample_count);
    Eigen::VectorXcd amps = psi0.amps;
    int next_sample = 0;
    for (int k = 0; k <= grid.steps; ++k) {
        while (next_sample < sample_count &&
               k == static_cast<long long>(next_sample) * grid.steps / (sample_count - 1)) {
            out.samples.emplace_back(grid.t0 + k * dt, StateVector(psi0.basis, amps));
            ++next_sample;
        }
        if (k < grid.steps) {
            const double t_mid = grid.t0 + (k + 0.5) * dt;
            amps = expm_skew(hfn(t_mid), dt).entries * amps;
        }
    }
    if (grid.steps >= 2) {
        const TimeGrid half(grid.t0, grid.tf, grid.steps / 2);
        out.convergence_residual = (amps - ordered_pass(hfn, half, psi0.amps)).norm();
    }
    return out;
}

}  // namespace qledger
