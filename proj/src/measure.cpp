#include "qledger/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qledger {

// ---------------- randomness ----------------

std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double uniform_from_seed(std::uint64_t seed) {
    std::uint64_t state = seed;
    return (splitmix64_next(state) >> 11) * 0x1.0p-53;
}

// ---------------- measurement basis ----------------

MeasurementBasis::MeasurementBasis(std::string subsystem_, std::vector<Operator> projectors_,
                                   std::vector<std::string> labels_)
    : subsystem(std::move(subsystem_)),
      projectors(std::move(projectors_)),
      labels(std::move(labels_)) {
    if (projectors.empty()) throw std::invalid_argument("measurement basis needs projectors");
    if (labels.size() != projectors.size())
        throw std::invalid_argument("measurement basis needs one label per projector");
    const BasisLabel& b = projectors.front().basis;
    const int d = b.dim();
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(d, d);
    for (const auto& p : projectors) {
        if (!(p.basis == b))
            throw std::invalid_argument("measurement projectors live on different bases");
        if (p.kind != OperatorKind::projector)
            throw std::invalid_argument("measurement basis entries must be projectors");
        sum += p.entries;
    }
    if ((sum - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("measurement projectors do not sum to identity");
    for (std::size_t i = 0; i < projectors.size(); ++i)
        for (std::size_t j = i + 1; j < projectors.size(); ++j)
            if ((projectors[i].entries * projectors[j].entries).cwiseAbs().maxCoeff() > 1e-10)
                throw std::invalid_argument("measurement projectors are not orthogonal");
}

namespace {

Operator spin_projector(const std::string& subsystem, const Eigen::Vector2cd& ket) {
    return Operator(single_factor_basis(subsystem, 2), ket * ket.adjoint(),
                    OperatorKind::projector);
}

}  // namespace

MeasurementBasis z_basis(const std::string& subsystem) {
    return MeasurementBasis(subsystem,
                            {spin_projector(subsystem, {1.0, 0.0}),
                             spin_projector(subsystem, {0.0, 1.0})},
                            {"+z", "-z"});
}

MeasurementBasis y_basis(const std::string& subsystem) {
    const double r = 1.0 / std::sqrt(2.0);
    return MeasurementBasis(subsystem,
                            {spin_projector(subsystem, {r, cx(0.0, r)}),
                             spin_projector(subsystem, {r, cx(0.0, -r)})},
                            {"+y", "-y"});
}

MeasurementBasis energy_basis(const Operator& h) {
    if (h.basis.factors.size() != 1)
        throw std::invalid_argument("energy_basis expects a single-subsystem operator");
    const EighResult eig = eigh(h);
    const Eigen::Index n = eig.eigenvalues.size();
    const double scale = std::max(1.0, std::abs(eig.eigenvalues(n - 1)) +
                                           std::abs(eig.eigenvalues(0)));
    std::vector<Operator> projectors;
    std::vector<std::string> labels;
    Eigen::Index lo = 0;
    while (lo < n) {
        Eigen::Index hi = lo + 1;
        while (hi < n && eig.eigenvalues(hi) - eig.eigenvalues(hi - 1) <= 1e-10 * scale) ++hi;
        Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(n, n);
        for (Eigen::Index k = lo; k < hi; ++k)
            p += eig.eigenvectors.col(k) * eig.eigenvectors.col(k).adjoint();
        projectors.emplace_back(h.basis, std::move(p), OperatorKind::projector);
        std::ostringstream label;
        label << "E=" << eig.eigenvalues(lo);
        labels.push_back(label.str());
        lo = hi;
    }
    return MeasurementBasis(h.basis.factors[0].name, std::move(projectors), std::move(labels));
}

// ---------------- born probabilities and collapse ----------------

std::vector<double> born_probabilities(const StateVector& psi, const MeasurementBasis& basis) {
    std::vector<double> probs;
    probs.reserve(basis.projectors.size());
    double total = 0.0;
    for (const auto& p : basis.projectors) {
        const Operator full = embed_operator(psi.basis, basis.subsystem, p);
        double prob = expectation(full, psi);
        if (prob < 0.0) {
            if (prob < -1e-12)
                throw std::runtime_error("negative Born probability " + std::to_string(prob));
            prob = 0.0;
        }
        probs.push_back(prob);
        total += prob;
    }
    // a complete projector set sums to ||psi||^2; allow twice the state-norm
    // contract so any constructible state passes while a dropped projector
    // (an O(1) violation) still trips
    if (std::abs(total - 1.0) > 2e-8) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "Born probabilities sum to " << total;
        throw std::runtime_error(msg.str());
    }
    return probs;
}

OutcomeRecord collapse(const StateVector& psi, const MeasurementBasis& basis,
                       std::uint64_t seed) {
    const std::vector<double> probs = born_probabilities(psi, basis);
    const double u = uniform_from_seed(seed);
    int outcome = -1;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;  // zero-probability outcomes are never selected
        cumulative += probs[i];
        if (cumulative >= u) {
            outcome = static_cast<int>(i);
            break;
        }
    }
    if (outcome < 0) {
        // u landed above the (rounded) total; take the last selectable outcome
        for (int i = static_cast<int>(probs.size()) - 1; i >= 0; --i)
            if (probs[i] > 0.0) {
                outcome = i;
                break;
            }
    }
    if (outcome < 0) throw std::runtime_error("collapse found no selectable outcome");

    const Operator full = embed_operator(psi.basis, basis.subsystem, basis.projectors[outcome]);
    Eigen::VectorXcd post = full.entries * psi.amps / std::sqrt(probs[outcome]);
    post = fix_global_phase(post);
    return {outcome, probs[outcome], StateVector(psi.basis, std::move(post)), seed};
}

// ---------------- entanglement ----------------

std::pair<double, double> entanglement_eigenvalues(const StateVector& psi,
                                                   const std::string& subsystem) {
    if (psi.basis.factors.size() != 2 || psi.basis.factors[0].dim != 2 ||
        psi.basis.factors[1].dim != 2)
        throw std::invalid_argument("entanglement_eigenvalues expects a two-spin pure state");
    const DensityMatrix rho = partial_trace(psi, subsystem);
    const EighResult eig = eigh(Operator(rho.basis, rho.entries, OperatorKind::hermitian));
    const double k_minus = eig.eigenvalues(0);
    const double k_plus = eig.eigenvalues(1);

    // closed-form cross-check: for a pure two-spin state the reduced density
    // matrix has determinant |psi00 psi11 - psi01 psi10|^2. Comparing the
    // eigenvalue product against it stays well conditioned even at maximal
    // entanglement, where solving for k itself would not.
    const cx det = psi.amps(0) * psi.amps(3) - psi.amps(1) * psi.amps(2);
    if (std::abs(k_minus * k_plus - std::norm(det)) > 1e-12)
        throw std::runtime_error("entanglement eigenvalues disagree with the determinant form");
    return {k_minus, k_plus};
}

double von_neumann_entropy(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho.entries, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        double k = solver.eigenvalues()(i);
        if (k < 0.0) {
            if (k < -1e-12)
                throw std::invalid_argument("density matrix eigenvalue below -1e-12");
            k = 0.0;
        }
        if (k > 0.0) s -= k * std::log(k);
    }
    return s;
}

// ---------------- ledger ----------------

const char* to_string(LedgerEvent e) {
    switch (e) {
        case LedgerEvent::evolve: return "evolve";
        case LedgerEvent::branch: return "branch";
        case LedgerEvent::collapse: return "collapse";
    }
    return "?";
}

void ledger_record(EnergyLedger& ledger, const Operator& h, const StateVector& pre,
                   const StateVector& post, LedgerEvent event, double time,
                   std::map<std::string, double> subsystem_energies) {
    const double e_pre = expectation(h, pre);
    const double e_post = expectation(h, post);
    ledger.entries.push_back(
        {time, e_post, std::move(subsystem_energies), event, e_post - e_pre});
}

}  // namespace qledger
