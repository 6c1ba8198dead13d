#pragma once

// Registry of acceptance criteria: every closed-form claim the library makes
// is re-derived here by an independent numerical route (brute-force
// propagation, adaptive quadrature, eigen-decomposition) and compared at a
// stated tolerance. The same registry backs the `validate` CLI subcommand and
// the acceptance test binary.

#include <string>
#include <vector>

namespace qledger::validate {

struct CriterionResult {
    std::string id;
    bool passed = false;
    std::string detail;  // measured numbers on pass, reason on fail
};

// Run every criterion whose id contains `filter` (empty = all), in
// registration order. Exceptions inside a criterion mark it failed.
std::vector<CriterionResult> run_all(const std::string& filter = "");

// One "PASS/FAIL id: detail" line per result plus a summary line.
std::string render_report(const std::vector<CriterionResult>& results);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace qledger::validate
