#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

// runs the CLI binary with the given arguments, capturing stdout + stderr
RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(QLEDGER_BIN) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult result;
    std::array<char, 4096> buffer{};
    while (fgets(buffer.data(), static_cast<int>(buffer.size()), pipe) != nullptr)
        result.out += buffer.data();
    const int status = pclose(pipe);
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

int data_line_count(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int count = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') ++count;
    return count;
}

bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

std::filesystem::path temp_file(const std::string& tag) {
    return std::filesystem::temp_directory_path() /
           ("qledger_cli_" + std::to_string(getpid()) + "_" + tag);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("help lists the four subcommands") {
    const RunResult r = run_cli("--help");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "toy"));
    CHECK(contains(r.out, "spin"));
    CHECK(contains(r.out, "sweep"));
    CHECK(contains(r.out, "validate"));
}

TEST_CASE("a subcommand is required") {
    const RunResult r = run_cli("");
    CHECK(r.code == 2);
}

TEST_CASE("unknown flags are rejected") {
    const RunResult r = run_cli("toy --no-such-flag 1");
    CHECK(r.code == 2);
}

TEST_CASE("toy emits one row per time and branch") {
    const RunResult r = run_cli("toy");
    CHECK(r.code == 0);
    // default grid: 65 times over [0, pi]; one branch at t = 0 and t = pi,
    // two at t = pi/2 (the pointer time), three at the 62 other times
    CHECK(data_line_count(r.out) == 1 + 1 + 1 + 2 + 62 * 3);
    CHECK(contains(r.out,
                   "t,global_energy,h_int_expect,branch_label,branch_weight,branch_energy"));
}

TEST_CASE("toy rejects non-normalized amplitudes") {
    const RunResult r = run_cli("toy --alpha-re 1 --beta-re 1");
    CHECK(r.code == 2);
    CHECK(contains(r.out, "normalization violated"));
}

TEST_CASE("spin emits samples, outcome table, and the sampled outcome") {
    const RunResult r = run_cli("spin");
    CHECK(r.code == 0);
    // header + 41 samples + outcome header + two outcome rows
    CHECK(data_line_count(r.out) == 45);
    CHECK(contains(r.out, "t,theta,xi_re,xi_im,k_minus,k_plus,entropy_nats"));
    CHECK(contains(r.out, "outcome,probability,delta_E"));
    CHECK(contains(r.out, "sampled_outcome:"));
    CHECK(contains(r.out, "ledger:"));
}

TEST_CASE("spin runs are reproducible byte for byte") {
    const auto path_a = temp_file("a.csv");
    const auto path_b = temp_file("b.csv");
    const RunResult a = run_cli("spin --seed 9 --output " + path_a.string());
    const RunResult b = run_cli("spin --seed 9 --output " + path_b.string());
    CHECK(a.code == 0);
    CHECK(b.code == 0);
    CHECK(slurp(path_a) == slurp(path_b));
    std::filesystem::remove(path_a);
    std::filesystem::remove(path_b);
}

TEST_CASE("spin ordered propagator reports convergence and closed-form deviation") {
    const RunResult r = run_cli("spin --propagator ordered --steps 2000 --samples 5");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "# convergence: "));
    CHECK(contains(r.out, "# magnus1 deviation: "));
    // header + 5 samples + outcome header + two outcome rows
    CHECK(data_line_count(r.out) == 9);
}

TEST_CASE("spin window flags must come together") {
    const RunResult r = run_cli("spin --t0 -50");
    CHECK(r.code == 2);
}

TEST_CASE("spin rejects an unphysical speed") {
    const RunResult r = run_cli("spin --v 1");
    CHECK(r.code == 2);
}

TEST_CASE("config file fills defaults and explicit flags win") {
    const auto cfg = temp_file("cfg.json");
    {
        std::ofstream out(cfg);
        out << R"({"g": 2.0, "omega": 4.0})";
    }
    const RunResult r = run_cli("spin --config " + cfg.string() + " --omega 8");
    std::filesystem::remove(cfg);
    CHECK(r.code == 0);
    CHECK(contains(r.out, "g = 2,"));
    CHECK(contains(r.out, "omega = 8"));
}

TEST_CASE("unknown config keys are rejected") {
    const auto cfg = temp_file("bad.json");
    {
        std::ofstream out(cfg);
        out << R"({"zog": 1.0})";
    }
    const RunResult r = run_cli("spin --config " + cfg.string());
    std::filesystem::remove(cfg);
    CHECK(r.code == 2);
    CHECK(contains(r.out, "unknown config key"));
}

TEST_CASE("sweep is deterministic and covers the full grid") {
    const RunResult a = run_cli("sweep");
    const RunResult b = run_cli("sweep");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    // header plus 16 x 16 grid rows
    CHECK(data_line_count(a.out) == 257);
    CHECK(contains(a.out, "b,v,theta_inf,k_minus,k_plus,entropy_nats,delta_E_magnitude"));
}

TEST_CASE("sweep rejects log spacing from a zero bound") {
    const RunResult r = run_cli("sweep --spacing log --b-min 0");
    CHECK(r.code == 2);
}

TEST_CASE("full validation report is byte-identical across runs") {
    const RunResult a = run_cli("validate");
    CHECK(a.code == 0);
    CHECK(contains(a.out, "criteria passed"));
    CHECK(contains(a.out, "PASS"));
    CHECK(!contains(a.out, "FAIL"));

    const RunResult b = run_cli("validate");
    CHECK(a.out == b.out);
}

TEST_CASE("validate filter selects a slice or reports no match") {
    const RunResult a = run_cli("validate --filter toy");
    CHECK(a.code == 0);
    CHECK(contains(a.out, "criteria passed"));
    CHECK(!contains(a.out, "FAIL"));

    const RunResult b = run_cli("validate --filter no-such-criterion");
    CHECK(b.code == 2);
    CHECK(contains(b.out, "no criterion matches"));
}
