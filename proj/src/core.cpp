#include "qledger/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qledger {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kUnitaryTol = 1e-10;
constexpr double kProjectorTol = 1e-12;
// loose enough for the drift a 1e5-step time-ordered product legitimately
// accumulates; the unitarity criterion tracks the true drift well below this
constexpr double kNormTol = 1e-8;

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

bool all_finite(const Eigen::MatrixXcd& m) {
    return m.allFinite();
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

// ---------------- BasisLabel ----------------

BasisLabel::BasisLabel(std::vector<BasisFactor> f) : factors(std::move(f)) {
    std::set<std::string> seen;
    for (const auto& fac : factors) {
        require(fac.dim >= 1, "basis factor '" + fac.name + "' must have dim >= 1");
        require(seen.insert(fac.name).second, "duplicate subsystem name '" + fac.name + "'");
    }
    require(!factors.empty(), "basis needs at least one factor");
}

int BasisLabel::dim() const {
    int d = 1;
    for (const auto& f : factors) d *= f.dim;
    return d;
}

int BasisLabel::factor_position(const std::string& name) const {
    for (std::size_t i = 0; i < factors.size(); ++i)
        if (factors[i].name == name) return static_cast<int>(i);
    throw std::invalid_argument("unknown subsystem '" + name + "'");
}

std::string BasisLabel::describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (i) os << " x ";
        os << factors[i].name << "(" << factors[i].dim << ")";
    }
    return os.str();
}

BasisLabel single_factor_basis(const std::string& name, int dim) {
    return BasisLabel({{name, dim}});
}

// ---------------- StateVector ----------------

StateVector::StateVector(BasisLabel basis_, Eigen::VectorXcd amps_)
    : basis(std::move(basis_)), amps(std::move(amps_)) {
    require(amps.size() == basis.dim(), "state dimension does not match basis " + basis.describe());
    require(all_finite(amps), "state has non-finite amplitudes");
    const double n = amps.norm();
    if (std::abs(n - 1.0) > kNormTol) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "state norm " << n << " violates normalization";
        throw std::invalid_argument(msg.str());
    }
}

// ---------------- Operator ----------------

const char* to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::hermitian: return "hermitian";
        case OperatorKind::unitary: return "unitary";
        case OperatorKind::projector: return "projector";
        case OperatorKind::general: return "general";
    }
    return "?";
}

Operator::Operator(BasisLabel basis_, Eigen::MatrixXcd entries_, OperatorKind kind_)
    : basis(std::move(basis_)), entries(std::move(entries_)), kind(kind_) {
    const int d = basis.dim();
    require(entries.rows() == d && entries.cols() == d,
            "operator shape does not match basis " + basis.describe());
    require(all_finite(entries), "operator has non-finite entries");
    switch (kind) {
        case OperatorKind::hermitian:
            require(max_abs(entries - entries.adjoint()) <= kHermitianTol,
                    "operator tagged hermitian is not hermitian");
            break;
        case OperatorKind::unitary:
            require(max_abs(entries.adjoint() * entries -
                            Eigen::MatrixXcd::Identity(d, d)) <= kUnitaryTol,
                    "operator tagged unitary is not unitary");
            break;
        case OperatorKind::projector:
            require(max_abs(entries - entries.adjoint()) <= kProjectorTol,
                    "operator tagged projector is not hermitian");
            require(max_abs(entries * entries - entries) <= kProjectorTol,
                    "operator tagged projector is not idempotent");
            break;
        case OperatorKind::general:
            break;
    }
}

Operator identity_operator(const BasisLabel& basis) {
    const int d = basis.dim();
    return Operator(basis, Eigen::MatrixXcd::Identity(d, d), OperatorKind::projector);
}

// ---------------- DensityMatrix ----------------

DensityMatrix::DensityMatrix(BasisLabel basis_, Eigen::MatrixXcd entries_)
    : basis(std::move(basis_)), entries(std::move(entries_)) {
    const int d = basis.dim();
    require(entries.rows() == d && entries.cols() == d,
            "density matrix shape does not match basis " + basis.describe());
    require(all_finite(entries), "density matrix has non-finite entries");
    require(max_abs(entries - entries.adjoint()) <= kHermitianTol, "density matrix is not hermitian");
    require(std::abs(entries.trace().real() - 1.0) <= kHermitianTol &&
                std::abs(entries.trace().imag()) <= kHermitianTol,
            "density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(entries, Eigen::EigenvaluesOnly);
    require(solver.eigenvalues().minCoeff() >= -kHermitianTol,
            "density matrix has an eigenvalue below -1e-12");
}

// ---------------- tensor products ----------------

namespace {

BasisLabel concat_bases(const BasisLabel& a, const BasisLabel& b) {
    std::vector<BasisFactor> f = a.factors;
    f.insert(f.end(), b.factors.begin(), b.factors.end());
    return BasisLabel(std::move(f));  // ctor rejects name collisions
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

StateVector tensor_product(const StateVector& a, const StateVector& b) {
    BasisLabel basis = concat_bases(a.basis, b.basis);
    Eigen::VectorXcd amps(a.amps.size() * b.amps.size());
    for (Eigen::Index i = 0; i < a.amps.size(); ++i)
        amps.segment(i * b.amps.size(), b.amps.size()) = a.amps(i) * b.amps;
    return StateVector(std::move(basis), std::move(amps));
}

Operator tensor_product(const Operator& a, const Operator& b) {
    BasisLabel basis = concat_bases(a.basis, b.basis);
    OperatorKind kind = (a.kind == b.kind) ? a.kind : OperatorKind::general;
    return Operator(std::move(basis), kron(a.entries, b.entries), kind);
}

// ---------------- partial trace ----------------

namespace {

// digit of flat index `idx` at factor `pos` under lexicographic (row-major) order
int digit_at(int idx, const std::vector<BasisFactor>& factors, int pos) {
    int stride = 1;
    for (std::size_t k = pos + 1; k < factors.size(); ++k) stride *= factors[k].dim;
    return (idx / stride) % factors[pos].dim;
}

bool rest_equal(int i, int j, const std::vector<BasisFactor>& factors, int skip) {
    for (std::size_t k = 0; k < factors.size(); ++k) {
        if (static_cast<int>(k) == skip) continue;
        if (digit_at(i, factors, static_cast<int>(k)) != digit_at(j, factors, static_cast<int>(k)))
            return false;
    }
    return true;
}

DensityMatrix trace_out(const BasisLabel& basis, const Eigen::MatrixXcd& rho,
                        const std::string& keep) {
    const int pos = basis.factor_position(keep);
    const int dk = basis.factors[pos].dim;
    const int D = basis.dim();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dk, dk);
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j)
            if (rest_equal(i, j, basis.factors, pos))
                out(digit_at(i, basis.factors, pos), digit_at(j, basis.factors, pos)) += rho(i, j);
    return DensityMatrix(single_factor_basis(keep, dk), std::move(out));
}

}  // namespace

DensityMatrix partial_trace(const StateVector& psi, const std::string& keep) {
    return trace_out(psi.basis, psi.amps * psi.amps.adjoint(), keep);
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::string& keep) {
    return trace_out(rho.basis, rho.entries, keep);
}

// ---------------- expectation ----------------

namespace {

double checked_real(cx value, double scale) {
    const double tol = 1e-12 * std::max(1.0, scale);
    if (std::abs(value.imag()) > tol)
        throw std::invalid_argument("expectation has imaginary residue " +
                                    std::to_string(value.imag()));
    return value.real();
}

void require_hermitian(const Operator& op) {
    if (max_abs(op.entries - op.entries.adjoint()) > kHermitianTol)
        throw std::invalid_argument("expectation requires a hermitian operator");
}

}  // namespace

double expectation(const Operator& op, const StateVector& psi) {
    require(op.basis == psi.basis, "expectation: operator/state basis mismatch");
    require_hermitian(op);
    const cx value = (psi.amps.adjoint() * op.entries * psi.amps)(0);
    return checked_real(value, max_abs(op.entries));
}

double expectation(const Operator& op, const DensityMatrix& rho) {
    require(op.basis == rho.basis, "expectation: operator/density basis mismatch");
    require_hermitian(op);
    const cx value = (op.entries * rho.entries).trace();
    return checked_real(value, max_abs(op.entries));
}

// ---------------- eigh ----------------

EighResult eigh(const Operator& op) {
    require_hermitian(op);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(op.entries);
    require(solver.info() == Eigen::Success, "eigendecomposition failed");
    Eigen::VectorXd evals = solver.eigenvalues();
    Eigen::MatrixXcd vecs = solver.eigenvectors();
    const Eigen::Index n = evals.size();
    const double scale = std::max(1.0, std::abs(evals(n - 1)) + std::abs(evals(0)));
    const double cluster_tol = 1e-12 * scale;

    // re-orthonormalize inside each degenerate cluster, in ascending order
    Eigen::Index lo = 0;
    while (lo < n) {
        Eigen::Index hi = lo + 1;
        while (hi < n && evals(hi) - evals(hi - 1) <= cluster_tol) ++hi;
        for (Eigen::Index i = lo; i < hi; ++i) {
            for (Eigen::Index j = lo; j < i; ++j) {
                const cx overlap = vecs.col(j).dot(vecs.col(i));
                vecs.col(i) -= overlap * vecs.col(j);
            }
            vecs.col(i).normalize();
        }
        lo = hi;
    }

    // phase convention: largest-magnitude component (lowest index on ties) real positive
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index best = 0;
        double best_mag = -1.0;
        for (Eigen::Index r = 0; r < n; ++r) {
            const double mag = std::abs(vecs(r, c));
            if (mag > best_mag + 1e-15) {
                best_mag = mag;
                best = r;
            }
        }
        const cx pivot = vecs(best, c);
        if (std::abs(pivot) > 0.0) vecs.col(c) *= std::conj(pivot) / std::abs(pivot);
    }
    return {std::move(evals), std::move(vecs)};
}

// ---------------- expm ----------------

Operator expm_skew(const Operator& h, double t) {
    const EighResult eig = eigh(h);
    const Eigen::Index n = eig.eigenvalues.size();
    Eigen::VectorXcd phases(n);
    for (Eigen::Index k = 0; k < n; ++k)
        phases(k) = std::exp(cx(0.0, -eig.eigenvalues(k) * t));
    Eigen::MatrixXcd u =
        eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
    return Operator(h.basis, std::move(u), OperatorKind::unitary);
}

// ---------------- embedding ----------------

Operator embed_operator(const BasisLabel& full, const std::string& subsystem, const Operator& op) {
    const int pos = full.factor_position(subsystem);
    require(op.basis.factors.size() == 1 &&
                op.basis.factors[0].dim == full.factors[pos].dim,
            "embedded operator must act on the single subsystem '" + subsystem + "'");
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Identity(1, 1);
    for (std::size_t k = 0; k < full.factors.size(); ++k) {
        if (static_cast<int>(k) == pos) {
            acc = kron(acc, op.entries);
        } else {
            const int d = full.factors[k].dim;
            acc = kron(acc, Eigen::MatrixXcd::Identity(d, d));
        }
    }
    return Operator(full, std::move(acc), op.kind);
}

// ---------------- phase convention ----------------

Eigen::VectorXcd fix_global_phase(const Eigen::VectorXcd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-12) {
            return v * (std::conj(v(i)) / std::abs(v(i)));
        }
    }
    return v;
}

}  // namespace qledger
