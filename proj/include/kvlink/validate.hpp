#pragma once

#include "kvlink/workload.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace kvlink::validate {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    double seconds = 0;
    double budget_seconds = 0;
    std::string detail;
};

struct Options {
    /// Replaces the derived llama-7b constants everywhere (negative tests).
    std::optional<WorkloadConstants> constants_override;
    /// Criteria to report; empty means all of 1..10.
    std::set<int> only;
    std::uint64_t seed = 20250101;
};

struct Report {
    std::vector<CriterionResult> results;

    bool all_passed() const;
    /// One "criterion <id> PASS|FAIL <seconds>s <name>: <detail>" line each.
    std::string to_text() const;
    nlohmann::json to_json() const;
};

constexpr int kCriterionCount = 10;

Report run(const Options& options = {});

}  // namespace kvlink::validate
