#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ddel {

/// Outcome of one end-to-end verification criterion.
struct CriterionResult {
    int number = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Run the end-to-end verification suite.  Criteria are independent; an
/// exception inside one is caught and reported as its failure.
std::vector<CriterionResult> run_acceptance_criteria();

/// Print one PASS/FAIL line per criterion; returns true iff all passed.
bool run_acceptance(std::ostream& out);

}  // namespace ddel
