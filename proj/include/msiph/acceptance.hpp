#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace msiph {

struct SubCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    double runtime_limit_s = 0.0;  // 0 = no limit
    double elapsed_s = 0.0;        // not part of any report
    std::vector<SubCheck> checks;

    bool checks_pass() const;
    bool pass(bool enforce_runtime) const;
};

/// Criteria 1..7. Deterministic for a given seed apart from elapsed_s.
std::vector<CriterionResult> run_criteria(std::uint64_t seed);

/// Criterion 8: two validate reports from independent runs compare equal.
CriterionResult run_determinism(std::uint64_t seed);

/// Text report without timings; also lists model notes.
std::string render_report(const std::vector<CriterionResult>& results, std::uint64_t seed);

/// Module invariant summary and notes appended to the validate report.
std::string model_notes();

/// The report written by the validate command.
std::string validate_report(std::uint64_t seed, bool* all_pass = nullptr);

}  // namespace msiph
