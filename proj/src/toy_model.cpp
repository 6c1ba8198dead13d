#include "qledger/toy_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qledger::toy {

namespace {

constexpr int kSysDim = 2;
constexpr int kEnvDim = 3;
constexpr double kWeightFloor = 1e-14;

}  // namespace

void ToyParams::validate() const {
    const double total = std::norm(alpha) + std::norm(beta);
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("toy amplitudes violate normalization: |alpha|^2 + |beta|^2 = " +
                                    std::to_string(total));
    if (!(lambda > 0.0)) throw std::invalid_argument("toy coupling lambda must be > 0");
}

double ToyParams::t_star() const { return std::numbers::pi / (2.0 * lambda); }

BasisLabel toy_basis() { return BasisLabel({{"s", kSysDim}, {"e", kEnvDim}}); }

std::pair<Operator, Operator> build_hamiltonian(const ToyParams& p) {
    p.validate();
    const BasisLabel basis = toy_basis();
    const int d = basis.dim();

    Eigen::MatrixXcd self = Eigen::MatrixXcd::Zero(d, d);
    for (int e = 0; e < kEnvDim; ++e) {
        self(e, e) = p.e1;
        self(kEnvDim + e, kEnvDim + e) = p.e2;
    }

    // each system level k rotates the environment in its (0, k) plane:
    // -i lambda (|0><k| - |k><0|) inside system block k
    Eigen::MatrixXcd inter = Eigen::MatrixXcd::Zero(d, d);
    const cx mil(0.0, -p.lambda);
    inter(0, 1) = mil;               // block 1, env |0><1|
    inter(1, 0) = -mil;              // block 1, env -|1><0|
    inter(kEnvDim + 0, kEnvDim + 2) = mil;   // block 2, env |0><2|
    inter(kEnvDim + 2, kEnvDim + 0) = -mil;  // block 2, env -|2><0|

    return {Operator(basis, std::move(self), OperatorKind::hermitian),
            Operator(basis, std::move(inter), OperatorKind::hermitian)};
}

Operator full_hamiltonian(const ToyParams& p) {
    auto [self, inter] = build_hamiltonian(p);
    return Operator(self.basis, self.entries + inter.entries, OperatorKind::hermitian);
}

Operator closed_form_propagator(const ToyParams& p, double t) {
    p.validate();
    const BasisLabel basis = toy_basis();
    const double c = std::cos(p.lambda * t);
    const double s = std::sin(p.lambda * t);

    Eigen::Matrix3cd rot1;  // rotate env in the (0,1) plane
    rot1 << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    Eigen::Matrix3cd rot2;  // rotate env in the (0,2) plane
    rot2 << c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c;

    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(basis.dim(), basis.dim());
    u.block(0, 0, kEnvDim, kEnvDim) = std::exp(cx(0.0, -p.e1 * t)) * rot1;
    u.block(kEnvDim, kEnvDim, kEnvDim, kEnvDim) = std::exp(cx(0.0, -p.e2 * t)) * rot2;
    return Operator(basis, std::move(u), OperatorKind::unitary);
}

StateVector initial_state(const ToyParams& p) {
    p.validate();
    Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(kSysDim * kEnvDim);
    amps(0) = p.alpha;        // |1>_s |0>_e
    amps(kEnvDim) = p.beta;   // |2>_s |0>_e
    return StateVector(toy_basis(), std::move(amps));
}

StateVector evolved_state(const ToyParams& p, double t) {
    const Operator u = closed_form_propagator(p, t);
    const StateVector psi0 = initial_state(p);
    return StateVector(psi0.basis, u.entries * psi0.amps);
}

std::vector<BranchRecord> branch_decompose(const StateVector& psi, const std::string& env_subsystem,
                                           const Operator& h) {
    if (!(h.basis == psi.basis))
        throw std::invalid_argument("branch_decompose: hamiltonian/state basis mismatch");
    const int env_pos = psi.basis.factor_position(env_subsystem);
    if (psi.basis.factors.size() != 2)
        throw std::invalid_argument("branch_decompose expects a system x environment state");
    const int env_dim = psi.basis.factors[env_pos].dim;
    const int sys_pos = 1 - env_pos;
    const int sys_dim = psi.basis.factors[sys_pos].dim;

    // strides under lexicographic flattening
    const int env_stride = (env_pos == 1) ? 1 : psi.basis.factors[1].dim;
    const int sys_stride = (sys_pos == 1) ? 1 : psi.basis.factors[1].dim;

    std::vector<BranchRecord> out;
    for (int e = 0; e < env_dim; ++e) {
        Eigen::VectorXcd conditional = Eigen::VectorXcd::Zero(sys_dim);
        for (int s = 0; s < sys_dim; ++s)
            conditional(s) = psi.amps(s * sys_stride + e * env_stride);
        const double norm = conditional.norm();
        const double weight = norm * norm;
        if (weight < kWeightFloor) continue;

        Eigen::VectorXcd branch_amps = Eigen::VectorXcd::Zero(psi.amps.size());
        for (int s = 0; s < sys_dim; ++s)
            branch_amps(s * sys_stride + e * env_stride) = conditional(s) / norm;
        StateVector branch_state(psi.basis, std::move(branch_amps));
        const double energy = expectation(h, branch_state);
        out.push_back({std::to_string(e), cx(norm, 0.0), std::move(branch_state), energy, weight});
    }
    return out;
}

EnergyLedger branch_energy_audit(const ToyParams& p, const std::vector<double>& t_samples) {
    p.validate();
    auto [h_self, h_int] = build_hamiltonian(p);
    const Operator h = full_hamiltonian(p);
    const double expected_energy = std::norm(p.alpha) * p.e1 + std::norm(p.beta) * p.e2;

    std::vector<double> times = t_samples;
    times.push_back(p.t_star());

    EnergyLedger ledger;
    StateVector prev = initial_state(p);
    for (double t : times) {
        const StateVector psi = evolved_state(p, t);
        const double e_int = expectation(h_int, psi);
        const double e_self = expectation(h_self, psi);
        const double e_total = expectation(h, psi);
        if (std::abs(e_int) > 1e-12)
            throw std::runtime_error("audit: <H_int> strayed from 0 at t = " + std::to_string(t));
        if (std::abs(e_total - expected_energy) > 1e-10)
            throw std::runtime_error("audit: global <H> drifted at t = " + std::to_string(t));

        ledger_record(ledger, h, prev, psi, LedgerEvent::evolve, t,
                      {{"self", e_self}, {"interaction", e_int}});
        prev = psi;
    }

    // at full decoherence the weight-averaged branch energy matches global <H>
    const StateVector psi_star = evolved_state(p, p.t_star());
    double weighted = 0.0;
    for (const auto& b : branch_decompose(psi_star, "e", h)) weighted += b.weight * b.energy;
    if (std::abs(weighted - expected_energy) > 1e-10)
        throw std::runtime_error("audit: branch-averaged energy misses global <H> at t_star");
    ledger_record(ledger, h, psi_star, psi_star, LedgerEvent::branch, p.t_star(),
                  {{"branch_weighted", weighted}});
    return ledger;
}

std::vector<std::pair<double, double>> spectral_support(const StateVector& state,
                                                        const Operator& h) {
    if (!(h.basis == state.basis))
        throw std::invalid_argument("spectral_support: hamiltonian/state basis mismatch");
    const EighResult eig = eigh(h);
    const Eigen::Index n = eig.eigenvalues.size();
    const double scale = std::max(1.0, std::abs(eig.eigenvalues(n - 1)) +
                                           std::abs(eig.eigenvalues(0)));
    std::vector<std::pair<double, double>> out;
    Eigen::Index lo = 0;
    while (lo < n) {  // group degenerate eigenvalues so the support is canonical
        Eigen::Index hi = lo + 1;
        while (hi < n && eig.eigenvalues(hi) - eig.eigenvalues(hi - 1) <= 1e-10 * scale) ++hi;
        double weight = 0.0;
        for (Eigen::Index k = lo; k < hi; ++k)
            weight += std::norm(eig.eigenvectors.col(k).dot(state.amps));
        if (weight >= kWeightFloor) out.emplace_back(eig.eigenvalues(lo), weight);
        lo = hi;
    }
    return out;
}

}  // namespace qledger::toy
