#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace geophase::acceptance {

struct CheckResult {
    int id = 0;
    std::string title;
    bool pass = false;
    bool informational = false;  // printed, never counted
    std::string detail;
    double seconds = 0.0;
};

struct Options {
    std::uint64_t seed = 0;
};

using Reporter = std::function<void(const CheckResult&)>;

// Runs every acceptance check in order, calling `report` as each finishes.
std::vector<CheckResult> run_all(const Options& options, const Reporter& report = {});

// "PASS [3] title: detail (0.12 s)"
std::string format(const CheckResult& result);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace geophase::acceptance
