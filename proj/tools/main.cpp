// qledger: command-line front end for the branching toy model, the two-spin
// flyby protocol, parameter sweeps, and the acceptance-criteria runner.
//
// Exit codes: 0 success, 1 computation or criteria failure, 2 invalid input.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qledger/core.hpp"
#include "qledger/csv.hpp"
#include "qledger/flyby.hpp"
#include "qledger/measure.hpp"
#include "qledger/propagate.hpp"
#include "qledger/toy_model.hpp"
#include "qledger/validate.hpp"

namespace {

using namespace qledger;
using std::numbers::pi;

// ---------------- config file support ----------------

// JSON config files carry the same keys as the long option names (without the
// leading dashes). Explicit command-line flags override config values;
// unknown keys are rejected.
struct ConfigBinding {
    CLI::Option* opt = nullptr;
    std::function<void(const nlohmann::json&)> apply;
};

using ConfigRegistry = std::map<std::string, ConfigBinding>;

template <typename T>
void bind_config(ConfigRegistry& reg, CLI::Option* opt, T& target) {
    std::string key = opt->get_name(false, true);  // longest long name
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    reg[key] = {opt, [&target](const nlohmann::json& v) { target = v.get<T>(); }};
}

void apply_config(const ConfigRegistry& reg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("config file must hold a JSON object");
    for (const auto& [key, value] : doc.items()) {
        const auto it = reg.find(key);
        if (it == reg.end()) throw std::invalid_argument("unknown config key: " + key);
        if (it->second.opt->count() > 0) continue;  // flags win over config
        try {
            it->second.apply(value);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config key " + key + " has the wrong type: " + e.what());
        }
    }
}

// ---------------- output plumbing ----------------

struct OutputTarget {
    std::ofstream file;
    std::ostream* stream = &std::cout;

    explicit OutputTarget(const std::string& path) {
        if (path.empty()) return;
        file.open(path);
        if (!file) throw std::runtime_error("cannot open output file: " + path);
        stream = &file;
    }
    std::ostream& out() { return *stream; }
};

// ---------------- toy subcommand ----------------

struct ToyArgs {
    double alpha_re = 1.0 / std::numbers::sqrt2;
    double alpha_im = 0.0;
    double beta_re = 1.0 / std::numbers::sqrt2;
    double beta_im = 0.0;
    double e1 = 1.0;
    double e2 = 3.0;
    double lambda = 1.0;
    double t_max = pi;
    int t_steps = 65;
    std::string output;
    std::string config;
    ConfigRegistry reg;
};

int run_toy(const ToyArgs& a) {
    toy::ToyParams p;
    p.alpha = cx(a.alpha_re, a.alpha_im);
    p.beta = cx(a.beta_re, a.beta_im);
    p.e1 = a.e1;
    p.e2 = a.e2;
    p.lambda = a.lambda;
    try {
        p.validate();
    } catch (const std::invalid_argument&) {
        const double n2 = std::norm(p.alpha) + std::norm(p.beta);
        if (std::abs(n2 - 1.0) > 1e-12) {
            std::cerr << "error: normalization violated: |alpha|^2 + |beta|^2 = " << n2 << '\n';
            return 2;
        }
        throw;
    }
    if (a.t_steps < 2) throw std::invalid_argument("--t-steps must be >= 2");
    if (!(a.t_max > 0.0)) throw std::invalid_argument("--t-max must be > 0");

    const Operator h = toy::full_hamiltonian(p);
    const Operator h_int = toy::build_hamiltonian(p).second;

    OutputTarget target(a.output);
    std::ostream& out = target.out();
    csv_comment(out, "two-level system coupled to a three-level pointer environment");
    csv_comment(out, "alpha = " + g17(a.alpha_re) + " + " + g17(a.alpha_im) + "i, beta = " +
                         g17(a.beta_re) + " + " + g17(a.beta_im) + "i");
    csv_comment(out, "e1 = " + g17(p.e1) + ", e2 = " + g17(p.e2) + ", lambda = " +
                         g17(p.lambda) + ", t_star = " + g17(p.t_star()));
    csv_comment(out, "one row per (time, branch); branches below weight 1e-14 are omitted");
    csv_row(out, {"t", "global_energy", "h_int_expect", "branch_label", "branch_weight",
                  "branch_energy"});

    std::vector<double> times;
    times.reserve(a.t_steps);
    for (int k = 0; k < a.t_steps; ++k)
        times.push_back(a.t_max * k / (a.t_steps - 1));

    for (double t : times) {
        const StateVector psi = toy::evolved_state(p, t);
        const double global_energy = expectation(h, psi);
        const double h_int_expect = expectation(h_int, psi);
        for (const auto& br : toy::branch_decompose(psi, "e", h))
            csv_row(out, {g17(t), g17(global_energy), g17(h_int_expect), br.label,
                          g17(br.weight), g17(br.energy)});
    }

    // audit the energy bookkeeping over the same times (throws on violation)
    toy::branch_energy_audit(p, times);
    return 0;
}

// ---------------- spin subcommand ----------------

struct SpinArgs {
    // default speed tunes the accumulated coupling 2g/(b^2 v) to pi, the
    // maximal-entanglement point where the collapse energy jump is exactly
    // +/- omega/2
    double g = 1.0;
    double b = 1.0;
    double v = 2.0 / pi;
    double omega = 2.0;
    double phi0 = 0.0;
    double t0 = 0.0;
    double tf = 0.0;
    bool window_set = false;
    std::uint64_t seed = 1;
    int steps = 20000;
    int samples = 41;
    std::string propagator = "magnus1";
    std::string output;
    std::string config;
    ConfigRegistry reg;
};

int run_spin(const SpinArgs& a) {
    flyby::ProtocolParams p;
    p.g = a.g;
    p.b = a.b;
    p.v = a.v;
    p.omega = a.omega;
    p.phi0 = a.phi0;
    if (a.window_set) {
        p.t0 = a.t0;
        p.tf = a.tf;
    } else {
        p.t0 = -200.0 * a.b / a.v;
        p.tf = 200.0 * a.b / a.v;
    }
    p.validate();
    if (a.samples < 2) throw std::invalid_argument("--samples must be >= 2");
    if (a.steps < 2) throw std::invalid_argument("--steps must be >= 2");

    const bool ordered = (a.propagator == "ordered");
    const auto choice = ordered ? flyby::PropagatorChoice::ordered
                                : flyby::PropagatorChoice::magnus1;

    // trajectory samples for the table
    std::vector<std::pair<double, StateVector>> samples;
    double residual = 0.0;
    if (ordered) {
        const HamiltonianFn hfn = [&p](double t) {
            return flyby::instantaneous_hamiltonian(p, t);
        };
        auto traj = ordered_trajectory(hfn, TimeGrid(p.t0, p.tf, a.steps),
                                       flyby::initial_state(p), a.samples);
        samples = std::move(traj.samples);
        residual = traj.convergence_residual;
    } else {
        for (int k = 0; k < a.samples; ++k) {
            const double t = p.t0 + (p.tf - p.t0) * k / (a.samples - 1);
            samples.emplace_back(t, flyby::analytic_state(p, t));
        }
    }

    const auto run = flyby::run_protocol(p, choice, a.steps, a.seed);
    const MeasurementBasis probe = y_basis("2");

    OutputTarget target(a.output);
    std::ostream& out = target.out();
    csv_comment(out, "two-spin flyby: trapped spin 1 at the origin, probe 2 at (v t, b, 0)");
    csv_comment(out, "g = " + g17(p.g) + ", b = " + g17(p.b) + ", v = " + g17(p.v) +
                         ", omega = " + g17(p.omega) + ", phi0 = " + g17(p.phi0));
    csv_comment(out, "window t0 = " + g17(p.t0) + ", tf = " + g17(p.tf) + ", propagator = " +
                         a.propagator + ", seed = " + std::to_string(a.seed));
    csv_comment(out,
                "amplitude phases are referenced to t0; entanglement eigenvalues and "
                "outcome probabilities are t0-independent");
    if (ordered) {
        csv_comment(out, "convergence: " + g17(residual));
        // distance from the integrated-generator closed form at tf, measured
        // on the component orthogonal to the stepped state (phase-free)
        const Eigen::VectorXcd closed = flyby::analytic_state(p, p.tf).amps;
        Eigen::VectorXcd o = samples.back().second.amps;
        o /= o.norm();
        const double deviation = (closed - o * (o.adjoint() * closed)(0, 0)).norm();
        csv_comment(out, "magnus1 deviation: " + g17(deviation));
    }
    csv_row(out, {"t", "theta", "xi_re", "xi_im", "k_minus", "k_plus", "entropy_nats"});
    for (const auto& [t, psi] : samples) {
        const auto c = flyby::coupling_integrals_closed(p, t);
        const auto [km, kp] = entanglement_eigenvalues(psi, "1");
        csv_row(out, {g17(t), g17(c.theta), g17(c.xi.real()), g17(c.xi.imag()), g17(km),
                      g17(kp), g17(von_neumann_entropy(partial_trace(psi, "1")))});
    }

    csv_comment(out, ordered ? "probe measured along y in the stepper state at tf"
                             : "probe measured along y in the asymptotic state");
    csv_row(out, {"outcome", "probability", "delta_E"});
    for (std::size_t i = 0; i < run.probabilities.size(); ++i)
        csv_row(out, {probe.labels[i], g17(run.probabilities[i]), g17(run.deltas[i])});
    csv_comment(out, "sampled_outcome: " + probe.labels[run.outcome.outcome] + " (seed " +
                         std::to_string(a.seed) + ")");
    csv_comment(out, "ledger: evolve delta " + g17(run.ledger.entries[1].delta) +
                         ", collapse delta " + g17(run.ledger.entries[2].delta));
    return 0;
}

// ---------------- sweep subcommand ----------------

struct SweepArgs {
    double g = 1.0;
    double omega = 2.0;
    double b_min = 0.5;
    double b_max = 2.0;
    int b_count = 16;
    double v_min = 0.1;
    double v_max = 0.9;
    int v_count = 16;
    std::string spacing = "linear";
    std::string output;
    std::string config;
    ConfigRegistry reg;
};

std::vector<double> spaced(double lo, double hi, int count, bool log_spacing) {
    if (count < 1) throw std::invalid_argument("grid counts must be >= 1");
    if (!(lo > 0.0) && log_spacing)
        throw std::invalid_argument("log spacing needs positive bounds");
    if (!(hi >= lo)) throw std::invalid_argument("grid bounds must satisfy max >= min");
    std::vector<double> xs;
    xs.reserve(count);
    if (count == 1) {
        xs.push_back(lo);
        return xs;
    }
    for (int k = 0; k < count; ++k) {
        const double f = static_cast<double>(k) / (count - 1);
        xs.push_back(log_spacing ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f);
    }
    return xs;
}

int run_sweep(const SweepArgs& a) {
    const bool log_spacing = (a.spacing == "log");
    const auto bs = spaced(a.b_min, a.b_max, a.b_count, log_spacing);
    const auto vs = spaced(a.v_min, a.v_max, a.v_count, log_spacing);
    // g = 0 is the decoupled sweep: theta_inf 0, eigenvalues (0, 1), entropy 0
    if (a.g < 0.0) throw std::invalid_argument("--g must be >= 0");

    OutputTarget target(a.output);
    std::ostream& out = target.out();
    csv_comment(out, "asymptotic entanglement and collapse energy scale over (b, v)");
    csv_comment(out, "g = " + g17(a.g) + ", omega = " + g17(a.omega) + ", spacing = " +
                         a.spacing);
    csv_row(out, {"b", "v", "theta_inf", "k_minus", "k_plus", "entropy_nats",
                  "delta_E_magnitude"});
    for (double b : bs)
        for (double v : vs) {
            flyby::ProtocolParams p;
            p.g = a.g;
            p.b = b;
            p.v = v;
            p.omega = a.omega;
            p.t0 = -1.0;
            p.tf = 1.0;
            p.validate();
            const auto ent = flyby::asymptotic_entanglement(p);
            const auto entropy_term = [](double k) {
                return k > 0.0 ? -k * std::log(k) : 0.0;
            };
            // summing the two terms keeps IEEE negative zero out of the CSV
            const double entropy = entropy_term(ent.k_minus) + entropy_term(ent.k_plus);
            const double delta_e = 0.5 * std::abs(a.omega) *
                                   std::abs(std::sin(ent.theta_inf / 2.0));
            csv_row(out, {g17(b), g17(v), g17(ent.theta_inf), g17(ent.k_minus),
                          g17(ent.k_plus), g17(entropy), g17(delta_e)});
        }
    return 0;
}

// ---------------- validate subcommand ----------------

struct ValidateArgs {
    std::string filter;
    std::string output;
    std::string config;
    ConfigRegistry reg;
};

int run_validate(const ValidateArgs& a) {
    const auto results = validate::run_all(a.filter);
    if (results.empty()) {
        std::cerr << "error: no criterion matches filter '" << a.filter << "'\n";
        return 2;
    }
    OutputTarget target(a.output);
    target.out() << validate::render_report(results);
    return validate::all_passed(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulator and verification harness for energy bookkeeping under "
                 "quantum measurement"};
    app.require_subcommand(1);

    ToyArgs toy_args;
    SpinArgs spin_args;
    SweepArgs sweep_args;
    ValidateArgs validate_args;

    // --- toy ---
    CLI::App* toy_cmd = app.add_subcommand(
        "toy", "branching model: energy bookkeeping across decoherence and re-coherence");
    {
        auto& a = toy_args;
        auto& r = a.reg;
        bind_config(r, toy_cmd->add_option("--alpha-re", a.alpha_re, "Re alpha"), a.alpha_re);
        bind_config(r, toy_cmd->add_option("--alpha-im", a.alpha_im, "Im alpha"), a.alpha_im);
        bind_config(r, toy_cmd->add_option("--beta-re", a.beta_re, "Re beta"), a.beta_re);
        bind_config(r, toy_cmd->add_option("--beta-im", a.beta_im, "Im beta"), a.beta_im);
        bind_config(r, toy_cmd->add_option("--e1", a.e1, "level-1 self energy"), a.e1);
        bind_config(r, toy_cmd->add_option("--e2", a.e2, "level-2 self energy"), a.e2);
        bind_config(r, toy_cmd->add_option("--lambda", a.lambda, "environment rotation rate"),
                    a.lambda);
        bind_config(r, toy_cmd->add_option("--t-max", a.t_max, "last sample time"), a.t_max);
        bind_config(r, toy_cmd->add_option("--t-steps", a.t_steps, "number of sample times"),
                    a.t_steps);
        bind_config(r, toy_cmd->add_option("--output", a.output, "CSV output path (default stdout)"),
                    a.output);
        toy_cmd->add_option("--config", a.config, "JSON config file (flags override)");
    }

    // --- spin ---
    CLI::App* spin_cmd = app.add_subcommand(
        "spin", "two-spin flyby: evolve, measure the probe along y, book the energy change");
    {
        auto& a = spin_args;
        auto& r = a.reg;
        bind_config(r, spin_cmd->add_option("--g", a.g, "dipole coupling"), a.g);
        bind_config(r, spin_cmd->add_option("--b", a.b, "impact parameter"), a.b);
        bind_config(r,
                    spin_cmd->add_option("--v", a.v,
                                         "probe speed (0 < v < 1); default 2/pi tunes the "
                                         "accumulated coupling to pi"),
                    a.v);
        bind_config(r, spin_cmd->add_option("--omega", a.omega, "trapped-spin precession rate"),
                    a.omega);
        bind_config(r, spin_cmd->add_option("--phi0", a.phi0, "trapped-spin initial phase"),
                    a.phi0);
        auto* t0_opt = spin_cmd->add_option("--t0", a.t0, "window start (default -200 b/v)");
        auto* tf_opt = spin_cmd->add_option("--tf", a.tf, "window end (default +200 b/v)");
        bind_config(r, t0_opt, a.t0);
        bind_config(r, tf_opt, a.tf);
        t0_opt->needs(tf_opt);
        tf_opt->needs(t0_opt);
        bind_config(r, spin_cmd->add_option("--seed", a.seed, "collapse seed"), a.seed);
        bind_config(r, spin_cmd->add_option("--steps", a.steps, "ordered-propagator steps"),
                    a.steps);
        bind_config(r, spin_cmd->add_option("--samples", a.samples, "trajectory sample count"),
                    a.samples);
        bind_config(r,
                    spin_cmd->add_option("--propagator", a.propagator, "magnus1 or ordered")
                        ->check(CLI::IsMember({"magnus1", "ordered"})),
                    a.propagator);
        bind_config(r,
                    spin_cmd->add_option("--output", a.output, "CSV output path (default stdout)"),
                    a.output);
        spin_cmd->add_option("--config", a.config, "JSON config file (flags override)");
    }

    // --- sweep ---
    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "asymptotic entanglement and energy-jump scale over a (b, v) grid");
    {
        auto& a = sweep_args;
        auto& r = a.reg;
        bind_config(r, sweep_cmd->add_option("--g", a.g, "dipole coupling"), a.g);
        bind_config(r, sweep_cmd->add_option("--omega", a.omega, "trapped-spin precession rate"),
                    a.omega);
        bind_config(r, sweep_cmd->add_option("--b-min", a.b_min, "smallest impact parameter"),
                    a.b_min);
        bind_config(r, sweep_cmd->add_option("--b-max", a.b_max, "largest impact parameter"),
                    a.b_max);
        bind_config(r, sweep_cmd->add_option("--b-count", a.b_count, "impact parameter count"),
                    a.b_count);
        bind_config(r, sweep_cmd->add_option("--v-min", a.v_min, "smallest speed"), a.v_min);
        bind_config(r, sweep_cmd->add_option("--v-max", a.v_max, "largest speed"), a.v_max);
        bind_config(r, sweep_cmd->add_option("--v-count", a.v_count, "speed count"), a.v_count);
        bind_config(r,
                    sweep_cmd->add_option("--spacing", a.spacing, "linear or log")
                        ->check(CLI::IsMember({"linear", "log"})),
                    a.spacing);
        bind_config(r,
                    sweep_cmd->add_option("--output", a.output, "CSV output path (default stdout)"),
                    a.output);
        sweep_cmd->add_option("--config", a.config, "JSON config file (flags override)");
    }

    // --- validate ---
    CLI::App* validate_cmd = app.add_subcommand(
        "validate", "run the acceptance criteria and report PASS/FAIL per criterion");
    {
        auto& a = validate_args;
        auto& r = a.reg;
        bind_config(r, validate_cmd->add_option("--filter", a.filter, "substring id filter"),
                    a.filter);
        bind_config(r,
                    validate_cmd->add_option("--output", a.output,
                                             "report output path (default stdout)"),
                    a.output);
        validate_cmd->add_option("--config", a.config, "JSON config file (flags override)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*toy_cmd) {
            if (!toy_args.config.empty()) apply_config(toy_args.reg, toy_args.config);
            return run_toy(toy_args);
        }
        if (*spin_cmd) {
            spin_args.window_set =
                spin_cmd->count("--t0") > 0 || spin_cmd->count("--tf") > 0;
            if (!spin_args.config.empty()) {
                apply_config(spin_args.reg, spin_args.config);
                std::ifstream in(spin_args.config);
                nlohmann::json doc = nlohmann::json::parse(in);
                spin_args.window_set =
                    spin_args.window_set || doc.contains("t0") || doc.contains("tf");
            }
            return run_spin(spin_args);
        }
        if (*sweep_cmd) {
            if (!sweep_args.config.empty()) apply_config(sweep_args.reg, sweep_args.config);
            return run_sweep(sweep_args);
        }
        if (*validate_cmd) {
            if (!validate_args.config.empty())
                apply_config(validate_args.reg, validate_args.config);
            return run_validate(validate_args);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
