#pragma once

// States, operators, and dense linear algebra over small labeled Hilbert spaces.
// All numerics run in double precision; dimensions stay small (<= ~64), so the
// dense routines below are exact enough to back the verification suite.

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qledger {

using cx = std::complex<double>;

// ---------------- basis labeling ----------------

struct BasisFactor {
    std::string name;  // subsystem id ("s", "e", "1", "2", ...)
    int dim = 0;
    bool operator==(const BasisFactor&) const = default;
};

// Ordered tensor-factor structure of a Hilbert space. Basis states are ordered
// lexicographically, leftmost factor most significant.
struct BasisLabel {
    std::vector<BasisFactor> factors;

    BasisLabel() = default;
    explicit BasisLabel(std::vector<BasisFactor> f);

    int dim() const;
    int factor_position(const std::string& name) const;  // throws on unknown name
    bool operator==(const BasisLabel&) const = default;
    std::string describe() const;
};

BasisLabel single_factor_basis(const std::string& name, int dim);

// ---------------- state vector ----------------

// Normalized pure state. Construction rejects non-finite amplitudes and norms
// away from 1 by more than 1e-12.
struct StateVector {
    BasisLabel basis;
    Eigen::VectorXcd amps;

    StateVector() = default;
    StateVector(BasisLabel basis_, Eigen::VectorXcd amps_);

    double norm() const { return amps.norm(); }
};

// ---------------- operators ----------------

enum class OperatorKind { hermitian, unitary, projector, general };

const char* to_string(OperatorKind k);

// Square operator tagged with the structural property it is required to have.
// The tag is validated at construction: hermitian within 1e-12 (max norm),
// unitary within 1e-10, projector (P^2 = P and hermitian) within 1e-12.
struct Operator {
    BasisLabel basis;
    Eigen::MatrixXcd entries;
    OperatorKind kind = OperatorKind::general;

    Operator() = default;
    Operator(BasisLabel basis_, Eigen::MatrixXcd entries_, OperatorKind kind_);
};

Operator identity_operator(const BasisLabel& basis);

// ---------------- density matrix ----------------

// Hermitian (1e-12), unit trace (1e-12), eigenvalues >= -1e-12.
struct DensityMatrix {
    BasisLabel basis;
    Eigen::MatrixXcd entries;

    DensityMatrix() = default;
    DensityMatrix(BasisLabel basis_, Eigen::MatrixXcd entries_);
};

// ---------------- operations ----------------

// Kronecker products with concatenated factor labels. Subsystem names must not
// collide between the two arguments.
StateVector tensor_product(const StateVector& a, const StateVector& b);
Operator tensor_product(const Operator& a, const Operator& b);

// Trace out every factor except `keep`, returning the reduced density matrix
// on that single factor. Works for pure states and density matrices.
DensityMatrix partial_trace(const StateVector& psi, const std::string& keep);
DensityMatrix partial_trace(const DensityMatrix& rho, const std::string& keep);

// <psi|op|psi> for Hermitian op; the imaginary residue is checked against
// 1e-12 (scaled by the operator magnitude) and discarded.
double expectation(const Operator& op, const StateVector& psi);
double expectation(const Operator& op, const DensityMatrix& rho);

struct EighResult {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXcd eigenvectors; // column k pairs with eigenvalue k
};

// Hermitian eigendecomposition with a deterministic output convention:
// eigenvalues ascending; within a degenerate cluster the vectors are
// re-orthonormalized in order; each eigenvector's global phase is fixed so its
// largest-magnitude component (lowest index on ties) is real positive.
EighResult eigh(const Operator& op);

// exp(-i * h * t) for Hermitian h, built as V exp(-i diag t) V^dagger.
Operator expm_skew(const Operator& h, double t);

// Embed an operator acting on one factor into the full space (identity on all
// other factors), preserving its kind.
Operator embed_operator(const BasisLabel& full, const std::string& subsystem, const Operator& op);

// Rescale so the first amplitude with |a| > 1e-12 is real positive.
Eigen::VectorXcd fix_global_phase(const Eigen::VectorXcd& v);

}  // namespace qledger
