#include "qledger/flyby.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

namespace qledger::flyby {

namespace {

using std::numbers::pi;

constexpr cx I{0.0, 1.0};

double r_of_t(const ProtocolParams& p, double t) {
    return std::sqrt(p.b * p.b + p.v * p.v * t * t);
}

// sin(x)/x with a short series below the guard to keep full precision
double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

}  // namespace

// ---------------- parameters ----------------

void ProtocolParams::validate() const {
    if (!(g >= 0.0)) throw std::invalid_argument("flyby coupling g must be >= 0");
    if (!(b > 0.0)) throw std::invalid_argument("flyby impact parameter b must be > 0");
    if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("flyby speed v must satisfy 0 < v < 1");
    if (!(tf > t0)) throw std::invalid_argument("flyby window needs tf > t0");
}

ProtocolParams ProtocolParams::with_default_window(double g, double b, double v, double omega,
                                                   double phi0) {
    ProtocolParams p;
    p.g = g;
    p.b = b;
    p.v = v;
    p.omega = omega;
    p.phi0 = phi0;
    p.t0 = -200.0 * b / v;
    p.tf = 200.0 * b / v;
    p.validate();
    return p;
}

BasisLabel spin_pair_basis() { return BasisLabel({{"1", 2}, {"2", 2}}); }

double theta_infinity(const ProtocolParams& p) { return 2.0 * p.g / (p.b * p.b * p.v); }

// ---------------- coupling integrals ----------------

CouplingIntegrals coupling_integrals_closed(const ProtocolParams& p, double t) {
    p.validate();
    const double r = r_of_t(p, t);
    const double base = p.g / (p.b * p.b * p.v);
    const double theta = p.g * t / (p.b * p.b * r) + base;
    const cx num = (p.b - I * t * p.v) * (2.0 * I * p.b - t * p.v);
    const cx den = p.b * p.b * p.v * (p.b + I * t * p.v) * r;
    const cx xi = p.g * num / den + base;
    return {theta, xi, p.omega * (t - p.t0)};
}

namespace {

struct IntegrandParams {
    double g, b, v;
    int which;  // 0: theta, 1: Re xi, 2: Im xi
};

double coupling_integrand(double t, void* raw) {
    const auto* q = static_cast<const IntegrandParams*>(raw);
    const double r2 = q->b * q->b + q->v * q->v * t * t;
    const double r3 = r2 * std::sqrt(r2);
    switch (q->which) {
        case 0: return q->g / r3;
        // -3 g (v t + i b)^2 / r^5, split into real and imaginary parts
        case 1: return -3.0 * q->g * (q->v * q->v * t * t - q->b * q->b) / (r3 * r2);
        default: return -3.0 * q->g * (2.0 * q->b * q->v * t) / (r3 * r2);
    }
}

double quad(const IntegrandParams& params, double a, double b) {
    static std::once_flag gsl_handler_once;
    std::call_once(gsl_handler_once, [] { gsl_set_error_handler_off(); });

    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(4096);
    if (!ws) throw std::runtime_error("quadrature workspace allocation failed");
    gsl_function f;
    IntegrandParams local = params;
    f.function = &coupling_integrand;
    f.params = &local;
    double result = 0.0, abserr = 0.0;
    const int status = gsl_integration_qag(&f, a, b, 1e-13, 1e-10, 4096,
                                           GSL_INTEG_GAUSS61, ws, &result, &abserr);
    gsl_integration_workspace_free(ws);
    if (status != GSL_SUCCESS)
        throw std::runtime_error(std::string("quadrature did not converge: ") +
                                 gsl_strerror(status));
    return result;
}

}  // namespace

CouplingIntegrals coupling_integrals_numeric(const ProtocolParams& p, double t) {
    p.validate();
    if (p.g == 0.0) return {0.0, cx(0.0, 0.0), p.omega * (t - p.t0)};
    const double sign = (t >= p.t0) ? 1.0 : -1.0;
    const double lo = std::min(p.t0, t), hi = std::max(p.t0, t);
    const double theta = sign * quad({p.g, p.b, p.v, 0}, lo, hi);
    const double xi_re = sign * quad({p.g, p.b, p.v, 1}, lo, hi);
    const double xi_im = sign * quad({p.g, p.b, p.v, 2}, lo, hi);
    return {theta, cx(xi_re, xi_im), p.omega * (t - p.t0)};
}

// ---------------- hamiltonians ----------------

namespace {

Eigen::Matrix2cd pauli(int axis) {
    Eigen::Matrix2cd m;
    switch (axis) {
        case 0: m << 0, 1, 1, 0; break;
        case 1: m << 0, -I, I, 0; break;
        default: m << 1, 0, 0, -1; break;
    }
    return m;
}

Eigen::Matrix4cd kron2(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Eigen::Matrix4cd out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

}  // namespace

Operator instantaneous_hamiltonian(const ProtocolParams& p, double t) {
    p.validate();
    const Eigen::Matrix2cd sx = 0.5 * pauli(0);
    const Eigen::Matrix2cd sy = 0.5 * pauli(1);
    const Eigen::Matrix2cd sz = 0.5 * pauli(2);
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();

    const double r = r_of_t(p, t);
    const double nx = p.v * t / r;  // probe direction (v t, b, 0) / r
    const double ny = p.b / r;
    const Eigen::Matrix2cd sn = nx * sx + ny * sy;

    Eigen::Matrix4cd h = p.omega * kron2(sz, id);
    if (p.g > 0.0) {
        const Eigen::Matrix4cd dot =
            kron2(sx, sx) + kron2(sy, sy) + kron2(sz, sz);
        h += p.g / (r * r * r) * (dot - 3.0 * kron2(sn, sn));
    }
    return Operator(spin_pair_basis(), h, OperatorKind::hermitian);
}

Operator integrated_hamiltonian(const ProtocolParams& p, double t) {
    const CouplingIntegrals c = coupling_integrals_closed(p, t);
    const double th = c.theta;
    const double w2 = 2.0 * c.omega_t;
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = th + w2;
    m(1, 1) = -th + w2;
    m(2, 2) = -th - w2;
    m(3, 3) = th - w2;
    m(1, 2) = -th;
    m(2, 1) = -th;
    m(0, 3) = std::conj(c.xi);
    m(3, 0) = c.xi;
    return Operator(spin_pair_basis(), 0.25 * m, OperatorKind::hermitian);
}

// ---------------- states ----------------

StateVector initial_state(const ProtocolParams& p) {
    p.validate();
    const cx ph = std::exp(I * p.phi0);
    Eigen::VectorXcd amps(4);
    amps << 0.5, 0.5, 0.5 * ph, 0.5 * ph;
    return StateVector(spin_pair_basis(), std::move(amps));
}

namespace {

StateVector state_from_couplings(const ProtocolParams& p, double theta, cx xi, double omega_t) {
    const double w = omega_t;
    const cx ph = std::exp(I * p.phi0);
    const cx e_minus = std::exp(-I * theta / 4.0);
    const cx e_plus = std::exp(I * theta / 4.0);

    const double delta_xi = 0.25 * std::sqrt(std::norm(xi) + 4.0 * w * w);
    const double delta_th = 0.25 * std::sqrt(theta * theta + 4.0 * w * w);
    const double s_xi = sinc(delta_xi);
    const double s_th = sinc(delta_th);
    const double c_xi = std::cos(delta_xi);
    const double c_th = std::cos(delta_th);

    Eigen::VectorXcd amps(4);
    amps(0) = 0.125 * e_minus * (4.0 * c_xi - I * s_xi * (2.0 * w + ph * std::conj(xi)));
    amps(1) = 0.125 * e_plus * (4.0 * c_th - I * s_th * (2.0 * w - ph * theta));
    amps(2) = 0.125 * e_plus * (4.0 * ph * c_th + I * s_th * (2.0 * ph * w + theta));
    amps(3) = 0.125 * e_minus * (4.0 * ph * c_xi + I * s_xi * (2.0 * ph * w - xi));

    const double norm = amps.norm();
    if (std::abs(norm - 1.0) > 1e-10)
        throw std::runtime_error("flyby state norm " + std::to_string(norm) +
                                 " strayed from 1");
    return StateVector(spin_pair_basis(), std::move(amps));
}

}  // namespace

StateVector analytic_state(const ProtocolParams& p, double t) {
    const CouplingIntegrals c = coupling_integrals_closed(p, t);
    return state_from_couplings(p, c.theta, c.xi, c.omega_t);
}

StateVector asymptotic_state(const ProtocolParams& p, double t) {
    p.validate();
    const double th = theta_infinity(p);
    const double w = p.omega * (t - p.t0);
    const cx ph = std::exp(I * p.phi0);
    const cx e_minus = std::exp(-I * th / 4.0);
    const cx e_plus = std::exp(I * th / 4.0);
    const cx spin_down_phase = std::exp(I * w / 2.0);   // precession of |d>_1
    const cx spin_up_phase = std::exp(-I * w / 2.0);

    Eigen::VectorXcd amps(4);
    amps(0) = 0.5 * e_minus * spin_up_phase;
    amps(1) = 0.5 * e_plus * spin_up_phase;
    amps(2) = 0.5 * ph * e_plus * spin_down_phase;
    amps(3) = 0.5 * ph * e_minus * spin_down_phase;
    return StateVector(spin_pair_basis(), std::move(amps));
}

// ---------------- entanglement ----------------

AsymptoticEntanglement asymptotic_entanglement(const ProtocolParams& p) {
    p.validate();
    const double th = theta_infinity(p);
    const double c = std::abs(std::cos(th / 2.0));
    return {th, 0.5 * (1.0 - c), 0.5 * (1.0 + c)};
}

std::pair<double, double> tune_max_entanglement(double g, int n, FixedParam fixed,
                                                double fixed_value) {
    if (!(g > 0.0)) throw std::invalid_argument("tuning requires g > 0");
    if (n < 0) throw std::invalid_argument("tuning requires n >= 0");
    if (!(fixed_value > 0.0)) throw std::invalid_argument("tuning requires a positive fixed value");
    const double target = (2.0 * n + 1.0) * pi;  // theta_infinity to hit
    if (fixed == FixedParam::b) {
        const double b = fixed_value;
        return {b, 2.0 * g / (target * b * b)};
    }
    const double v = fixed_value;
    return {std::sqrt(2.0 * g / (target * v)), v};
}

// ---------------- protocol driver ----------------

ProtocolRun run_protocol(const ProtocolParams& p, PropagatorChoice choice, int steps,
                         std::uint64_t seed) {
    p.validate();
    const StateVector psi0 = initial_state(p);
    const BasisLabel basis = spin_pair_basis();

    ProtocolRun run;
    if (choice == PropagatorChoice::ordered) {
        const HamiltonianFn hfn = [&p](double t) { return instantaneous_hamiltonian(p, t); };
        OrderedResult ordered = evolve_ordered(hfn, TimeGrid(p.t0, p.tf, steps), psi0);
        run.final_state = std::move(ordered.state);
        run.convergence_residual = ordered.convergence_residual;
    } else {
        // the probe is read out well after the window, where the couplings are
        // frozen at their asymptotic values and only the precession phase runs
        run.final_state = asymptotic_state(p, p.tf);
    }

    // bookkeeping Hamiltonian once the pair is far separated: precession only
    const Operator h_book = Operator(
        basis,
        p.omega * embed_operator(basis, "1",
                                 Operator(single_factor_basis("1", 2),
                                          0.5 * pauli(2), OperatorKind::hermitian))
            .entries,
        OperatorKind::hermitian);

    const MeasurementBasis probe_basis = y_basis("2");
    run.probabilities = born_probabilities(run.final_state, probe_basis);

    const double e_pre = expectation(h_book, run.final_state);
    for (std::size_t i = 0; i < run.probabilities.size(); ++i) {
        if (run.probabilities[i] <= 0.0) {
            run.deltas.push_back(0.0);
            continue;
        }
        const Operator proj = embed_operator(basis, "2", probe_basis.projectors[i]);
        Eigen::VectorXcd post = proj.entries * run.final_state.amps /
                                std::sqrt(run.probabilities[i]);
        run.deltas.push_back(
            expectation(h_book, StateVector(basis, fix_global_phase(post))) - e_pre);
    }

    run.outcome = collapse(run.final_state, probe_basis, seed);

    ledger_record(run.ledger, h_book, psi0, psi0, LedgerEvent::evolve, p.t0,
                  {{"spin1", expectation(h_book, psi0)}, {"probe", 0.0}});
    ledger_record(run.ledger, h_book, psi0, run.final_state, LedgerEvent::evolve, p.tf,
                  {{"spin1", e_pre}, {"probe", 0.0}});
    ledger_record(run.ledger, h_book, run.final_state, run.outcome.post_state,
                  LedgerEvent::collapse, p.tf,
                  {{"spin1", expectation(h_book, run.outcome.post_state)}, {"probe", 0.0}});
    return run;
}

// ---------------- feasibility ----------------

FeasibilityReport feasibility_report(double coupling_gev2) {
    if (!(coupling_gev2 > 0.0))
        throw std::invalid_argument("feasibility report needs a positive coupling");
    FeasibilityReport rep;
    rep.coupling_gev2 = coupling_gev2;
    rep.b_sqrt_v_gev = std::sqrt(2.0 * coupling_gev2 / pi);
    rep.b_sqrt_v_cm = rep.b_sqrt_v_gev * hbar_c_gev_cm;
    rep.literature_cm = 7.38e-14;
    rep.ratio = rep.literature_cm / rep.b_sqrt_v_cm;
    return rep;
}

}  // namespace qledger::flyby
