#pragma once

#include "still/ledger/types.hpp"
#include "still/simnode/scenario.hpp"

#include <map>
#include <string>
#include <vector>

namespace still::app {

struct DemoOptions {
    Timestamp start = 1'700'000'000;
    Sats fee = 1'000;           // per customer payment
    Sats conflict_fee = 2'000;  // extra fee a CONFLICT pays over the original
};

struct DemoResult {
    std::vector<std::string> timeline;
    std::map<std::string, ledger::InvoiceState> final_states; // by sale name
    std::vector<std::string> failures;                        // failed EXPECTs and rejected steps
    bool ok() const { return failures.empty(); }
};

// Runs a scenario against a fresh in-process stack (simulated chain, fixed
// keys, scripted rates, manual clock). The same script always produces the
// same timeline.
DemoResult run_scenario(const std::vector<simnode::Command>& script, const DemoOptions& options = {});

} // namespace still::app
