#pragma once

// Projective measurement, seeded collapse, entanglement diagnostics, and the
// energy ledger that tracks <H> through evolution, branching, and collapse.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qledger/core.hpp"

namespace qledger {

// ---------------- seeded randomness ----------------

// splitmix64: counter-based generator; one seed yields one reproducible stream.
std::uint64_t splitmix64_next(std::uint64_t& state);

// single uniform draw in [0, 1) derived from a seed's first splitmix64 output
double uniform_from_seed(std::uint64_t seed);

// small deterministic stream for tests and parameter draws
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    double uniform() { return (splitmix64_next(state) >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

// ---------------- measurement basis ----------------

// Complete set of orthogonal projectors on one subsystem. Completeness is
// checked within 1e-12 and pairwise orthogonality within 1e-10.
struct MeasurementBasis {
    std::string subsystem;
    std::vector<Operator> projectors;  // each on the single-subsystem basis
    std::vector<std::string> labels;   // one per projector

    MeasurementBasis() = default;
    MeasurementBasis(std::string subsystem_, std::vector<Operator> projectors_,
                     std::vector<std::string> labels_);
};

// spin-1/2 bases on a named subsystem
MeasurementBasis z_basis(const std::string& subsystem);
MeasurementBasis y_basis(const std::string& subsystem);
// eigenbasis of a single-subsystem hermitian operator; degenerate eigenvalues
// are grouped into one projector (labels carry the eigenvalue)
MeasurementBasis energy_basis(const Operator& h);

// ---------------- outcomes and ledger ----------------

struct OutcomeRecord {
    int outcome = -1;
    double probability = 0.0;
    StateVector post_state;
    std::uint64_t rng_seed = 0;
};

enum class LedgerEvent { evolve, branch, collapse };

const char* to_string(LedgerEvent e);

struct LedgerEntry {
    double time = 0.0;
    double total_energy = 0.0;
    std::map<std::string, double> subsystem_energies;
    LedgerEvent event = LedgerEvent::evolve;
    double delta = 0.0;  // post minus pre, exact by construction
};

struct EnergyLedger {
    std::vector<LedgerEntry> entries;
};

// ---------------- operations ----------------

// Born probabilities <psi|P_i|psi>; values in [-1e-12, 0) are clipped to 0 and
// the total must be 1 within 1e-12.
std::vector<double> born_probabilities(const StateVector& psi, const MeasurementBasis& basis);

// Projective collapse from a single uniform draw u = uniform_from_seed(seed):
// the outcome is the smallest i with cumulative probability >= u (zero-
// probability outcomes are never selected). The post state is P_i|psi>/sqrt(p_i)
// with the global phase fixed so its first nonzero amplitude is real positive.
OutcomeRecord collapse(const StateVector& psi, const MeasurementBasis& basis,
                       std::uint64_t seed);

// Eigenvalues (ascending) of the reduced density matrix of one spin of a
// two-spin pure state. The eigenvalue product is cross-checked against the
// pure-state closed form |psi00 psi11 - psi01 psi10|^2 within 1e-12.
std::pair<double, double> entanglement_eigenvalues(const StateVector& psi,
                                                   const std::string& subsystem);

// -Sum k ln k in nats; eigenvalues in [-1e-12, 0) are clamped to 0.
double von_neumann_entropy(const DensityMatrix& rho);

// Append an entry: total energy of `post` under `h`, delta relative to `pre`.
void ledger_record(EnergyLedger& ledger, const Operator& h, const StateVector& pre,
                   const StateVector& post, LedgerEvent event, double time,
                   std::map<std::string, double> subsystem_energies = {});

}  // namespace qledger
