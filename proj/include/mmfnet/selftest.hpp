#pragma once

#include <string>
#include <vector>

namespace mmfnet::selftest {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Fault injection for negative controls; the defaults run the real code.
struct Hooks {
    double dct_scale_fault = 1.0;  // multiplies every forward DCT coefficient
};

/// DCT round-trip, gradient check, RIN round-trip and mask-identity suites on
/// synthetic data. Needs no files or network.
std::vector<SuiteResult> run_selftest(const Hooks& hooks = {});

}  // namespace mmfnet::selftest
