#pragma once

// Time evolution drivers: static exponential, first-order integrated-generator
// propagation, and a time-ordered midpoint stepper used as the numerical oracle.

#include <functional>
#include <optional>
#include <vector>

#include "qledger/core.hpp"

namespace qledger {

struct TimeGrid {
    double t0 = 0.0;
    double tf = 0.0;
    int steps = 0;

    TimeGrid() = default;
    TimeGrid(double t0_, double tf_, int steps_);
    double dt() const { return (tf - t0) / steps; }
};

// Hamiltonian sampled at a point in time; must be hermitian on a fixed basis.
using HamiltonianFn = std::function<Operator(double)>;

// exp(-i h t) psi0 for a time-independent generator.
StateVector evolve_static(const Operator& h, double t, const StateVector& psi0);

// exp(-i Integral[H]) psi0. When `integrated` is supplied it is exponentiated
// directly; otherwise Integral[H] is built by composite Simpson over the grid
// (an odd step count is bumped by one internally).
StateVector evolve_magnus1(const HamiltonianFn& hfn, const TimeGrid& grid,
                           const StateVector& psi0,
                           const std::optional<Operator>& integrated = std::nullopt);

struct OrderedResult {
    StateVector state;
    // ||psi(steps) - psi(steps/2)||, a self-convergence residual reported on
    // every call so downstream checks can gate on it.
    double convergence_residual = 0.0;
};

// Time-ordered product of midpoint exponential steps,
//   psi -> Prod_k exp(-i H(t_k + dt/2) dt) psi,
// each factor exactly unitary. Global accuracy O(dt^2).
OrderedResult evolve_ordered(const HamiltonianFn& hfn, const TimeGrid& grid,
                             const StateVector& psi0);

struct OrderedTrajectory {
    std::vector<std::pair<double, StateVector>> samples;  // (t, state), endpoints included
    double convergence_residual = 0.0;
};

// Single stepping pass that records the state at `sample_count` evenly spaced
// grid nodes. The residual is computed the same way as evolve_ordered's.
OrderedTrajectory ordered_trajectory(const HamiltonianFn& hfn, const TimeGrid& grid,
                                     const StateVector& psi0, int sample_count);

// Composite Simpson integral of hfn over the grid; exposed for cross-checks.
Operator simpson_integrate_hamiltonian(const HamiltonianFn& hfn, const TimeGrid& grid);

}  // namespace qledger
