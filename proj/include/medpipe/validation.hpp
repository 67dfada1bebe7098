#pragma once

#include <string>
#include <utility>
#include <vector>

namespace medpipe {

struct CheckFailure {
    std::string check_id;
    std::string message;
};

// Aggregated result of a set of named checks. Passing is defined as "no
// failures recorded", so the two can never disagree.
struct ValidationReport {
    std::vector<CheckFailure> failures;

    bool passed() const noexcept { return failures.empty(); }

    void fail(std::string check_id, std::string message) {
        failures.push_back({std::move(check_id), std::move(message)});
    }
};

}  // namespace medpipe
