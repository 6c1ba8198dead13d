#pragma once

// Minimal system-environment branching model: a two-level system coupled to a
// three-level environment so that each system level rotates its own
// environment pointer state. The interaction commutes with the system
// self-Hamiltonian, the global <H> stays constant, and each fully decohered
// branch carries a definite self-energy.

#include <string>
#include <utility>
#include <vector>

#include "qledger/core.hpp"
#include "qledger/measure.hpp"

namespace qledger::toy {

struct ToyParams {
    cx alpha{1.0, 0.0};   // weight of system level 1
    cx beta{0.0, 0.0};    // weight of system level 2
    double e1 = 0.0;      // self-energy of level 1
    double e2 = 0.0;      // self-energy of level 2
    double lambda = 1.0;  // environment rotation rate, > 0

    void validate() const;  // |alpha|^2 + |beta|^2 = 1 within 1e-12, lambda > 0
    double t_star() const;  // first full-decoherence time, pi / (2 lambda)
};

// factors: system "s" (dim 2, levels 1 and 2), environment "e" (dim 3)
BasisLabel toy_basis();

// (h_self, h_int); h_self = diag(e1,e1,e1,e2,e2,e2), h_int rotates the
// environment within each system block, and [h_self, h_int] = 0.
std::pair<Operator, Operator> build_hamiltonian(const ToyParams& p);

Operator full_hamiltonian(const ToyParams& p);

// exp(-i H t) assembled from the per-block closed form: phase e^{-i e_k t}
// times a rotation of the environment in the (0, k) plane by lambda t.
Operator closed_form_propagator(const ToyParams& p, double t);

// (alpha |1> + beta |2>) tensor |0>_e
StateVector initial_state(const ToyParams& p);

// closed_form_propagator applied to the initial state
StateVector evolved_state(const ToyParams& p, double t);

// One record per environment basis state with weight >= 1e-14.
struct BranchRecord {
    std::string label;    // environment basis index
    cx amplitude{0.0};    // norm of the unnormalized conditional system state
    StateVector state;    // normalized conditional state tensor |i>_e
    double energy = 0.0;  // <H> in the branch state
    double weight = 0.0;  // |amplitude|^2
};

std::vector<BranchRecord> branch_decompose(const StateVector& psi, const std::string& env_subsystem,
                                           const Operator& h);

// Evaluates <H_int>, global <H>, and the branch table at each sample time
// (t_star is always included) and returns the ledger. Throws if <H_int> strays
// from 0 beyond 1e-12, the global energy drifts beyond 1e-10, or the
// weight-averaged branch energy at t_star misses the global energy.
EnergyLedger branch_energy_audit(const ToyParams& p, const std::vector<double>& t_samples);

// Weights |<E_n|state>|^2 on the eigenbasis of h, grouped by eigenvalue
// (ascending); entries below 1e-14 are dropped.
std::vector<std::pair<double, double>> spectral_support(const StateVector& state,
                                                        const Operator& h);

}  // namespace qledger::toy
