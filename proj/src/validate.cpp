#include "qledger/validate.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qledger/core.hpp"
#include "qledger/flyby.hpp"
#include "qledger/measure.hpp"
#include "qledger/propagate.hpp"
#include "qledger/toy_model.hpp"

namespace qledger::validate {

namespace {

using std::numbers::pi;

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& msg) {
    if (!ok) throw Failure(msg);
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// ---------------- toy model criteria ----------------

toy::ToyParams symmetric_toy() {
    toy::ToyParams p;
    p.alpha = cx(1.0 / std::sqrt(2.0), 0.0);
    p.beta = cx(1.0 / std::sqrt(2.0), 0.0);
    p.e1 = 1.0;
    p.e2 = 3.0;
    p.lambda = 1.0;
    return p;
}

std::string toy_energy_constant() {
    const toy::ToyParams p = symmetric_toy();
    const Operator h = toy::full_hamiltonian(p);
    const auto [h_self, h_int] = toy::build_hamiltonian(p);
    const double expected = std::norm(p.alpha) * p.e1 + std::norm(p.beta) * p.e2;
    double max_dev = 0.0, max_split_dev = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double t = 2.0 * pi * k / 100.0;
        const StateVector psi = toy::evolved_state(p, t);
        const double e = expectation(h, psi);
        max_dev = std::max(max_dev, std::abs(e - expected));
        const double split = expectation(h_self, psi) + expectation(h_int, psi);
        max_split_dev = std::max(max_split_dev, std::abs(split - e));
    }
    check(max_dev < 1e-10, "global <H> drifted by " + num(max_dev));
    check(max_split_dev < 1e-12, "<H_self>+<H_int> misses <H> by " + num(max_split_dev));
    return "max |<H> - " + num(expected) + "| = " + num(max_dev) + " over 101 times";
}

std::string toy_interaction_vanishes() {
    Rng rng(42);
    double max_dev = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        toy::ToyParams p;
        const double a = rng.uniform();
        p.alpha = std::sqrt(a) * std::exp(cx(0.0, rng.uniform(0.0, 2.0 * pi)));
        p.beta = std::sqrt(1.0 - a) * std::exp(cx(0.0, rng.uniform(0.0, 2.0 * pi)));
        p.e1 = rng.uniform(-5.0, 5.0);
        p.e2 = rng.uniform(-5.0, 5.0);
        p.lambda = rng.uniform(0.1, 3.0);
        const auto [h_self, h_int] = toy::build_hamiltonian(p);
        (void)h_self;
        for (int k = 0; k < 20; ++k) {
            const double t = rng.uniform(0.0, 2.0 * pi / p.lambda);
            const double e = expectation(h_int, toy::evolved_state(p, t));
            max_dev = std::max(max_dev, std::abs(e));
        }
    }
    check(max_dev < 1e-12, "<H_int> reached " + num(max_dev));
    return "max |<H_int>| = " + num(max_dev) + " over 400 random states";
}

std::string toy_branch_split() {
    // symmetric and asymmetric superpositions branch into the right weights
    for (int variant = 0; variant < 2; ++variant) {
        toy::ToyParams p = symmetric_toy();
        if (variant == 1) {
            p.alpha = cx(0.6, 0.0);
            p.beta = cx(0.0, 0.8);
        }
        const Operator h = toy::full_hamiltonian(p);
        const StateVector psi = toy::evolved_state(p, p.t_star());
        const auto branches = toy::branch_decompose(psi, "e", h);
        check(branches.size() == 2,
              "expected 2 branches, got " + std::to_string(branches.size()));
        double weighted = 0.0, weight_total = 0.0;
        for (const auto& br : branches) {
            const double want_w = (br.label == "1") ? std::norm(p.alpha) : std::norm(p.beta);
            const double want_e = (br.label == "1") ? p.e1 : p.e2;
            check(br.label == "1" || br.label == "2", "unexpected branch label " + br.label);
            check(std::abs(br.weight - want_w) < 1e-10,
                  "branch " + br.label + " weight off by " + num(br.weight - want_w));
            check(std::abs(br.energy - want_e) < 1e-10,
                  "branch " + br.label + " energy off by " + num(br.energy - want_e));
            weighted += br.weight * br.energy;
            weight_total += br.weight;
        }
        const double global = expectation(h, psi);
        check(std::abs(weight_total - 1.0) < 1e-10, "branch weights sum off 1");
        check(std::abs(weighted - global) < 1e-10,
              "weighted branch energy misses global <H> by " + num(weighted - global));
    }
    return "two branches with Born weights; weighted energy = global <H> within 1e-10";
}

std::string toy_branch_spectral_support() {
    toy::ToyParams p = symmetric_toy();
    p.e2 = 10.0;  // keep the two blocks' eigenvalue triples disjoint
    const Operator h = toy::full_hamiltonian(p);
    const auto branches = toy::branch_decompose(toy::evolved_state(p, p.t_star()), "e", h);
    check(branches.size() == 2, "expected 2 branches");
    double max_dev = 0.0;
    for (const auto& br : branches) {
        const double e_k = (br.label == "1") ? p.e1 : p.e2;
        const auto support = toy::spectral_support(br.state, h);
        check(support.size() == 2,
              "branch " + br.label + " supports " + std::to_string(support.size()) +
                  " eigenvalues, expected 2");
        // equal weight on e_k - lambda and e_k + lambda, none on e_k itself
        max_dev = std::max(max_dev, std::abs(support[0].first - (e_k - p.lambda)));
        max_dev = std::max(max_dev, std::abs(support[1].first - (e_k + p.lambda)));
        max_dev = std::max(max_dev, std::abs(support[0].second - 0.5));
        max_dev = std::max(max_dev, std::abs(support[1].second - 0.5));
    }
    check(max_dev < 1e-10, "spectral support off by " + num(max_dev));
    return "each branch: weight 1/2 on E_k - lambda and E_k + lambda (dev " + num(max_dev) + ")";
}

std::string toy_recoherence() {
    const toy::ToyParams p = symmetric_toy();
    const Operator h = toy::full_hamiltonian(p);
    // at t = pi/lambda the environment returns to its pointer origin
    const auto rejoined = toy::branch_decompose(toy::evolved_state(p, pi / p.lambda), "e", h);
    check(rejoined.size() == 1, "expected a single branch at the re-coherence time, got " +
                                    std::to_string(rejoined.size()));
    check(rejoined[0].label == "0", "re-coherence branch label " + rejoined[0].label);
    check(std::abs(rejoined[0].weight - 1.0) < 1e-10, "re-coherence weight off 1");
    // at t = 2 pi/lambda the state returns up to per-level phases
    const StateVector psi = toy::evolved_state(p, 2.0 * pi / p.lambda);
    double max_dev = 0.0;
    const cx want0 = p.alpha * std::exp(cx(0.0, -2.0 * pi * p.e1 / p.lambda));
    const cx want3 = p.beta * std::exp(cx(0.0, -2.0 * pi * p.e2 / p.lambda));
    for (int i = 0; i < 6; ++i) {
        const cx want = (i == 0) ? want0 : (i == 3) ? want3 : cx(0.0, 0.0);
        max_dev = std::max(max_dev, std::abs(psi.amps(i) - want));
    }
    check(max_dev < 1e-12, "period-return amplitudes off by " + num(max_dev));
    return "single branch at t=pi/lambda; full return at t=2pi/lambda (dev " + num(max_dev) + ")";
}

std::string toy_closed_propagator() {
    const toy::ToyParams p = symmetric_toy();
    const Operator h = toy::full_hamiltonian(p);
    double max_dev = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double t = 4.0 * pi * k / 100.0;
        const Operator closed = toy::closed_form_propagator(p, t);
        const Operator brute = expm_skew(h, t);
        max_dev = std::max(max_dev, (closed.entries - brute.entries).cwiseAbs().maxCoeff());
    }
    check(max_dev < 1e-10, "closed-form propagator deviates by " + num(max_dev));
    return "max entrywise |closed - exp(-iHt)| = " + num(max_dev) + " over 101 times";
}

// ---------------- coupling integral criteria ----------------

std::vector<flyby::ProtocolParams> coupling_grid(double window_factor) {
    std::vector<flyby::ProtocolParams> grid;
    for (double g : {0.5, 1.0, 2.0})
        for (double b : {0.7, 1.0, 1.5})
            for (double v : {0.3, 0.5, 0.8}) {
                flyby::ProtocolParams p;
                p.g = g;
                p.b = b;
                p.v = v;
                p.omega = 2.0;
                p.t0 = -window_factor * b / v;
                p.tf = window_factor * b / v;
                grid.push_back(p);
            }
    return grid;
}

std::string spin_coupling_quadrature() {
    // closed forms assume the start pushed to -infinity; quadrature starts at
    // t0 = -1e4 b/v, whose truncated tail is <= 7.5e-9 of the coupling scale
    double max_theta = 0.0, max_xi = 0.0;
    for (const auto& p : coupling_grid(1e4)) {
        const double scale = flyby::theta_infinity(p);
        for (double f : {-10.0, -1.0, 0.0, 1.0, 10.0}) {
            const double t = f * p.b / p.v;
            const auto closed = flyby::coupling_integrals_closed(p, t);
            const auto numeric = flyby::coupling_integrals_numeric(p, t);
            max_theta = std::max(max_theta, std::abs(closed.theta - numeric.theta) / scale);
            max_xi = std::max(max_xi, std::abs(closed.xi - numeric.xi) / scale);
        }
    }
    check(max_theta <= 1e-8, "theta quadrature deviation " + num(max_theta));
    check(max_xi <= 1e-8, "xi quadrature deviation " + num(max_xi));
    return "closed vs quadrature (relative to 2g/b^2v): theta " + num(max_theta) + ", xi " +
           num(max_xi) + " over 135 points";
}

std::string spin_coupling_late_time() {
    double max_dev = 0.0;
    for (const auto& p : coupling_grid(200.0)) {
        const double t = 1e6 * p.b / p.v;
        const double scale = flyby::theta_infinity(p);
        const auto c = flyby::coupling_integrals_closed(p, t);
        max_dev = std::max(max_dev, std::abs(c.theta - scale) / scale);
        max_dev = std::max(max_dev, std::abs(c.xi - scale) / scale);
    }
    check(max_dev < 1e-5, "late-time limit missed by " + num(max_dev));
    return "theta, xi -> 2g/b^2v at t = 1e6 b/v within " + num(max_dev) + " relative";
}

flyby::ProtocolParams random_protocol(Rng& rng) {
    flyby::ProtocolParams p;
    p.g = rng.uniform(0.1, 3.0);
    p.b = rng.uniform(0.3, 2.0);
    p.v = rng.uniform(0.05, 0.95);
    p.omega = rng.uniform(0.0, 5.0);
    p.phi0 = rng.uniform(0.0, 2.0 * pi);
    p.t0 = -rng.uniform(50.0, 300.0) * p.b / p.v;
    p.tf = -p.t0;
    return p;
}

std::string spin_analytic_norm() {
    Rng rng(7);
    double max_dev = 0.0;
    for (int draw = 0; draw < 50; ++draw) {
        const flyby::ProtocolParams p = random_protocol(rng);
        const double t = rng.uniform(p.t0, -p.t0);
        const StateVector psi = flyby::analytic_state(p, t);
        max_dev = std::max(max_dev, std::abs(psi.norm() - 1.0));
    }
    check(max_dev < 1e-10, "analytic state norm off by " + num(max_dev));
    return "max | ||psi|| - 1 | = " + num(max_dev) + " over 50 random protocols";
}

std::string spin_analytic_vs_integrated() {
    Rng rng(8);
    double max_dev = 0.0;
    for (int draw = 0; draw < 50; ++draw) {
        const flyby::ProtocolParams p = random_protocol(rng);
        const double t = rng.uniform(p.t0 + 1.0, -p.t0);
        const StateVector direct = flyby::analytic_state(p, t);
        const HamiltonianFn hfn = [&p](double tt) {
            return flyby::instantaneous_hamiltonian(p, tt);
        };
        const StateVector brute = evolve_magnus1(hfn, TimeGrid(p.t0, t, 2),
                                                 flyby::initial_state(p),
                                                 flyby::integrated_hamiltonian(p, t));
        max_dev = std::max(max_dev, (direct.amps - brute.amps).cwiseAbs().maxCoeff());
    }
    check(max_dev < 1e-10, "analytic state deviates from exponentiated generator by " +
                               num(max_dev));
    return "max entrywise |analytic - exp(-i Integral[H]) psi0| = " + num(max_dev) +
           " over 50 protocols";
}

// ---------------- entanglement and measurement criteria ----------------

std::string spin_max_entanglement() {
    const auto [b1, v1] = flyby::tune_max_entanglement(1.0, 0, flyby::FixedParam::b, 1.0);
    check(std::abs(b1 - 1.0) < 1e-12, "fixed-b tuning moved b");
    check(std::abs(v1 - 2.0 / pi) < 1e-12, "tuned v misses 2g/(pi b^2)");
    const auto [b2, v2] = flyby::tune_max_entanglement(1.0, 0, flyby::FixedParam::v, v1);
    check(std::abs(b2 - 1.0) < 1e-12, "fixed-v tuning misses b = sqrt(2g/(pi v))");
    (void)v2;

    flyby::ProtocolParams p;
    p.g = 1.0;
    p.b = b1;
    p.v = v1;
    p.omega = 2000.0;
    p.t0 = -1e3 * p.b / p.v;
    p.tf = 1e3 * p.b / p.v;
    p.validate();
    check(std::abs(flyby::theta_infinity(p) - pi) < 1e-12, "tuned theta_infinity misses pi");

    const auto asym = flyby::asymptotic_entanglement(p);
    check(std::abs(asym.k_minus - 0.5) < 1e-12 && std::abs(asym.k_plus - 0.5) < 1e-12,
          "asymptotic eigenvalues miss (1/2, 1/2)");

    const StateVector psi = flyby::analytic_state(p, p.tf);
    const auto [k_minus, k_plus] = entanglement_eigenvalues(psi, "1");
    const double dev = std::max(std::abs(k_minus - 0.5), std::abs(k_plus - 0.5));
    check(dev <= 1e-6, "entanglement eigenvalues at t = 1e3 b/v off 1/2 by " + num(dev));
    return "tuned protocol: k = (" + num(k_minus) + ", " + num(k_plus) +
           ") at t = 1e3 b/v, dev " + num(dev);
}

std::string spin_born_half() {
    double max_dev = 0.0;
    for (double g : {0.5, 2.0})
        for (double v : {0.3, 0.7})
            for (double omega : {2.0, 100.0})
                for (double phi0 : {0.0, 1.1}) {
                    const auto p =
                        flyby::ProtocolParams::with_default_window(g, 1.0, v, omega, phi0);
                    for (double t : {p.tf, 3.0 * p.tf}) {
                        const auto probs = born_probabilities(flyby::asymptotic_state(p, t),
                                                              y_basis("2"));
                        max_dev = std::max(max_dev, std::abs(probs[0] - 0.5));
                        max_dev = std::max(max_dev, std::abs(probs[1] - 0.5));
                    }
                }
    check(max_dev < 1e-9, "probe +/-y probabilities off 1/2 by " + num(max_dev));
    return "probe +/-y Born probabilities = 1/2 within " + num(max_dev) + " over 32 cases";
}

std::string spin_phase_invariance() {
    // entanglement spectrum and probe statistics must not depend on the
    // trapped spin's initial phase
    std::vector<std::array<double, 4>> rows;
    for (double phi0 : {0.0, pi / 3.0, pi}) {
        auto p = flyby::ProtocolParams::with_default_window(1.0, 1.0, 0.5, 3.0, phi0);
        const StateVector psi = flyby::asymptotic_state(p, 1.25 * p.tf);
        const auto [km, kp] = entanglement_eigenvalues(psi, "1");
        const auto probs = born_probabilities(psi, y_basis("2"));
        rows.push_back({km, kp, probs[0], probs[1]});
    }
    double max_dev = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        for (std::size_t j = 0; j < 4; ++j)
            max_dev = std::max(max_dev, std::abs(rows[i][j] - rows[0][j]));
    check(max_dev < 1e-9, "phase dependence of size " + num(max_dev));
    return "k and Born probabilities agree across initial phases within " + num(max_dev);
}

flyby::ProtocolParams tuned_collapse_protocol() {
    const auto [b, v] = flyby::tune_max_entanglement(1.0, 0, flyby::FixedParam::b, 1.0);
    return flyby::ProtocolParams::with_default_window(1.0, b, v, 2.0);
}

std::string spin_collapse_delta() {
    const flyby::ProtocolParams p = tuned_collapse_protocol();
    const auto run = flyby::run_protocol(p, flyby::PropagatorChoice::magnus1, 1000, 3);

    check(std::abs(run.probabilities[0] - 0.5) < 1e-12 &&
              std::abs(run.probabilities[1] - 0.5) < 1e-12,
          "collapse probabilities stray from 1/2");
    // theta_infinity = pi, omega = 2: the post-collapse trapped-spin energy
    // jumps by exactly +/- omega/2 = +/- 1
    check(std::abs(run.deltas[0] - 1.0) < 1e-12,
          "+y outcome delta " + num(run.deltas[0]) + " != +1");
    check(std::abs(run.deltas[1] + 1.0) < 1e-12,
          "-y outcome delta " + num(run.deltas[1]) + " != -1");

    const auto& entries = run.ledger.entries;
    check(entries.size() == 3, "ledger holds " + std::to_string(entries.size()) + " entries");
    check(std::abs(entries[0].delta) < 1e-12 && std::abs(entries[1].delta) < 1e-12,
          "unitary evolution moved the booked energy");
    check(entries[2].event == LedgerEvent::collapse, "last ledger entry is not a collapse");
    check(std::abs(entries[2].delta - run.deltas[run.outcome.outcome]) < 1e-12,
          "ledger collapse delta disagrees with the per-outcome table");
    return "outcome deltas (+1, -1) exact to " +
           num(std::max(std::abs(run.deltas[0] - 1.0), std::abs(run.deltas[1] + 1.0))) +
           "; ledger delta matches sampled outcome " + y_basis("2").labels[run.outcome.outcome];
}

std::string spin_collapse_frequencies() {
    const flyby::ProtocolParams p = tuned_collapse_protocol();
    const StateVector psi = flyby::asymptotic_state(p, p.tf);
    const MeasurementBasis basis = y_basis("2");
    int first = 0;
    const int n = 10000;
    for (int seed = 0; seed < n; ++seed)
        if (collapse(psi, basis, static_cast<std::uint64_t>(seed)).outcome == 0) ++first;
    const double freq = static_cast<double>(first) / n;
    check(std::abs(freq - 0.5) <= 0.02,
          "outcome frequency " + num(freq) + " strays from 1/2 beyond 0.02");
    return "+y frequency " + num(freq) + " over " + std::to_string(n) +
           " seeds (expected 0.5 +/- 0.02)";
}

std::string measure_energy_basis() {
    Rng rng(11);
    const BasisLabel one = single_factor_basis("q", 2);
    double max_recon = 0.0, max_sum = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        Eigen::MatrixXcd m(2, 2);
        if (draw == 0) {
            m << 1.5, 0.0, 0.0, 1.5;  // fully degenerate case
        } else {
            const double a = rng.uniform(-3.0, 3.0), d = rng.uniform(-3.0, 3.0);
            const cx c(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
            m << a, c, std::conj(c), d;
        }
        const Operator h(one, m, OperatorKind::hermitian);
        const MeasurementBasis basis = energy_basis(h);

        Eigen::VectorXcd amps(2);
        amps << cx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
            cx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        amps /= amps.norm();
        const StateVector psi(one, amps);

        Eigen::MatrixXcd recon = Eigen::MatrixXcd::Zero(2, 2);
        double weighted = 0.0;
        const auto probs = born_probabilities(psi, basis);
        for (std::size_t i = 0; i < basis.projectors.size(); ++i) {
            const auto& pe = basis.projectors[i].entries;
            recon += pe * m * pe;
            const double rank = pe.trace().real();
            weighted += probs[i] * (pe * m).trace().real() / rank;
        }
        max_recon = std::max(max_recon, (recon - m).cwiseAbs().maxCoeff());
        max_sum = std::max(max_sum, std::abs(weighted - expectation(h, psi)));
    }
    check(max_recon < 1e-12, "sum P_i H P_i misses H by " + num(max_recon));
    check(max_sum < 1e-12, "sum p_i E_i misses <H> by " + num(max_sum));
    return "eigenbasis reconstruction " + num(max_recon) + ", sum p_i E_i vs <H> " +
           num(max_sum) + " over 100 draws";
}

std::string repro_seeded_collapse() {
    const flyby::ProtocolParams p = tuned_collapse_protocol();
    const StateVector psi = flyby::asymptotic_state(p, p.tf);
    const MeasurementBasis basis = y_basis("2");

    const OutcomeRecord a = collapse(psi, basis, 7);
    const OutcomeRecord b = collapse(psi, basis, 7);
    check(a.outcome == b.outcome, "same seed produced different outcomes");
    check(a.probability == b.probability, "same seed produced different probabilities");
    check((a.post_state.amps.array() == b.post_state.amps.array()).all(),
          "same seed produced bitwise different post states");

    std::set<int> seen;
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        seen.insert(collapse(psi, basis, seed).outcome);
    check(seen.count(0) == 1 && seen.count(1) == 1,
          "20 consecutive seeds never produced both outcomes");
    return "seed 7 reproduces bitwise; seeds 0..19 cover both outcomes";
}

// ---------------- propagator criteria ----------------

flyby::ProtocolParams scaling_protocol(double g) {
    flyby::ProtocolParams p;
    p.g = g;
    p.b = 1.0;
    p.v = 0.5;
    p.omega = 2.0;
    p.t0 = -100.0;
    p.tf = 100.0;
    return p;
}

std::string prop_convergence_order() {
    const flyby::ProtocolParams p = scaling_protocol(1.0);
    const HamiltonianFn hfn = [&p](double t) { return flyby::instantaneous_hamiltonian(p, t); };
    const StateVector psi0 = flyby::initial_state(p);
    const double r1 = evolve_ordered(hfn, TimeGrid(p.t0, p.tf, 20000), psi0).convergence_residual;
    const double r2 = evolve_ordered(hfn, TimeGrid(p.t0, p.tf, 40000), psi0).convergence_residual;
    check(r1 > 0.0 && r2 > 0.0, "residuals vanished; cannot estimate order");
    const double order = std::log2(r1 / r2);
    check(order > 1.8 && order < 2.2, "self-convergence order " + num(order) + " not ~2");
    return "stepper self-convergence order " + num(order) + " (residuals " + num(r1) + " -> " +
           num(r2) + ")";
}

std::string prop_unitarity() {
    const auto p = flyby::ProtocolParams::with_default_window(1.0, 1.0, 0.5, 2.0);
    const HamiltonianFn hfn = [&p](double t) { return flyby::instantaneous_hamiltonian(p, t); };
    const auto traj =
        ordered_trajectory(hfn, TimeGrid(p.t0, p.tf, 200000), flyby::initial_state(p), 26);
    double max_dev = 0.0;
    for (const auto& [t, psi] : traj.samples) {
        (void)t;
        max_dev = std::max(max_dev, std::abs(psi.norm() - 1.0));
    }
    check(max_dev < 1e-9, "norm drifted by " + num(max_dev) + " over 2e5 steps");
    return "max | ||psi|| - 1 | = " + num(max_dev) + " across 2e5 unitary steps";
}

std::string prop_magnus_error_scaling() {
    // the integrated-generator propagator ignores time ordering; its deviation
    // from the ordered product must shrink linearly with the coupling. The
    // ladder starts at 1e-2: one decade up the second-order double-coupling
    // commutator still contributes visibly and bends the ratio above 10.
    std::vector<double> gs = {1e-2, 1e-3, 1e-4, 1e-5};
    std::vector<double> devs;
    for (double g : gs) {
        const flyby::ProtocolParams p = scaling_protocol(g);
        const HamiltonianFn hfn = [&p](double t) {
            return flyby::instantaneous_hamiltonian(p, t);
        };
        const StateVector psi0 = flyby::initial_state(p);
        const TimeGrid grid(p.t0, p.tf, 40000);
        const Eigen::VectorXcd m = evolve_magnus1(hfn, grid, psi0).amps;
        Eigen::VectorXcd o = evolve_ordered(hfn, grid, psi0).state.amps;
        // phase-invariant distance: norm of the component of the integrated-
        // generator state orthogonal to the (re-normalized) ordered state; a
        // direct vector computation, immune to the oracle's fp norm drift
        o /= o.norm();
        devs.push_back((m - o * (o.adjoint() * m)(0, 0)).norm());
    }
    std::ostringstream shown;
    for (std::size_t i = 0; i < devs.size(); ++i)
        shown << (i ? ", " : "") << num(devs[i]);
    for (std::size_t i = 1; i < devs.size(); ++i) {
        check(devs[i] < devs[i - 1], "deviation did not shrink with g: " + shown.str());
        const double ratio = devs[i - 1] / devs[i];
        check(std::abs(ratio - 10.0) <= 1.0,
              "deviation ratio per decade of g is " + num(ratio) + ", expected 10 +/- 1");
    }
    return "ordering deviation vs g in {1e-2..1e-5}: " + shown.str() +
           "; every decade ratio within 10 +/- 1";
}

// ---------------- feasibility ----------------

std::string spin_feasibility() {
    const auto rep = flyby::feasibility_report();
    check(std::abs(rep.b_sqrt_v_gev - std::sqrt(2.0 * rep.coupling_gev2 / pi)) < 1e-12,
          "b sqrt(v) formula broken");
    check(std::abs(rep.b_sqrt_v_cm - rep.b_sqrt_v_gev * flyby::hbar_c_gev_cm) < 1e-25,
          "unit conversion broken");
    check(rep.b_sqrt_v_cm > 1e-14 && rep.b_sqrt_v_cm < 1e-13,
          "b sqrt(v) left the expected decade: " + num(rep.b_sqrt_v_cm));
    // the literature figure for the same condition sits a factor ~2 pi above;
    // the gap is reported, not reconciled
    check(std::abs(rep.ratio / (2.0 * pi) - 1.0) < 0.01,
          "literature/computed ratio " + num(rep.ratio) + " moved away from 2 pi");
    return "b sqrt(v) = " + num(rep.b_sqrt_v_cm) + " cm vs literature " +
           num(rep.literature_cm) + " cm (ratio " + num(rep.ratio) + " ~ 2 pi, flagged)";
}

using CriterionFn = std::function<std::string()>;

const std::vector<std::pair<std::string, CriterionFn>>& registry() {
    static const std::vector<std::pair<std::string, CriterionFn>> table = {
        {"toy.energy-constant", toy_energy_constant},
        {"toy.interaction-vanishes", toy_interaction_vanishes},
        {"toy.branch-split", toy_branch_split},
        {"toy.branch-spectral-support", toy_branch_spectral_support},
        {"toy.recoherence", toy_recoherence},
        {"toy.closed-propagator", toy_closed_propagator},
        {"spin.coupling-quadrature", spin_coupling_quadrature},
        {"spin.coupling-late-time", spin_coupling_late_time},
        {"spin.analytic-norm", spin_analytic_norm},
        {"spin.analytic-vs-integrated", spin_analytic_vs_integrated},
        {"spin.max-entanglement", spin_max_entanglement},
        {"spin.born-half", spin_born_half},
        {"spin.phase-invariance", spin_phase_invariance},
        {"spin.collapse-delta", spin_collapse_delta},
        {"spin.collapse-frequencies", spin_collapse_frequencies},
        {"spin.feasibility", spin_feasibility},
        {"measure.energy-basis", measure_energy_basis},
        {"repro.seeded-collapse", repro_seeded_collapse},
        {"prop.convergence-order", prop_convergence_order},
        {"prop.unitarity", prop_unitarity},
        {"prop.magnus-error-scaling", prop_magnus_error_scaling},
    };
    return table;
}

}  // namespace

std::vector<CriterionResult> run_all(const std::string& filter) {
    std::vector<CriterionResult> results;
    for (const auto& [id, fn] : registry()) {
        if (!filter.empty() && id.find(filter) == std::string::npos) continue;
        CriterionResult r;
        r.id = id;
        try {
            r.detail = fn();
            r.passed = true;
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = e.what();
        }
        results.push_back(std::move(r));
    }
    return results;
}

std::string render_report(const std::vector<CriterionResult>& results) {
    std::ostringstream out;
    int passed = 0;
    for (const auto& r : results) {
        out << (r.passed ? "PASS" : "FAIL") << ' ' << r.id << ": " << r.detail << '\n';
        if (r.passed) ++passed;
    }
    out << passed << '/' << results.size() << " criteria passed\n";
    return out.str();
}

bool all_passed(const std::vector<CriterionResult>& results) {
    if (results.empty()) return false;
    for (const auto& r : results)
        if (!r.passed) return false;
    return true;
}

}  // namespace qledger::validate
