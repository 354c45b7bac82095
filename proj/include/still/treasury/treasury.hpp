#pragma once

#include "still/chain/transaction.hpp"
#include "still/core/money.hpp"
#include "still/core/time.hpp"
#include "still/keystore/keystore.hpp"
#include "still/ledger/ledger.hpp"
#include "still/payments/events.hpp"

#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace still::treasury {

constexpr Sats kFeeFloor = 1000;

struct CashOutPolicy {
    Cents threshold_cents = 10'000;
    std::int64_t interval_days = 30;
    std::string destination_address;
    // Only sales locked in this currency count toward the threshold.
    std::string currency = "USD";
    // Outputs with fewer confirmations are left for a later sweep.
    std::int64_t min_confirmations = 1;

    // Throws config_error.
    void validate() const;
};

enum class DueReason { none, threshold, interval };
std::string_view reason_name(DueReason reason);

struct CashOutStatus {
    bool due = false;
    DueReason reason = DueReason::none;
    Cents unswept_cents = 0;
    std::optional<Timestamp> last_sweep_at;
};

// The rule itself. `last_sweep_at` is the previous sweep, or the oldest
// unswept paid sale when there has never been one.
CashOutStatus cashout_due(Cents unswept_cents, std::optional<Timestamp> last_sweep_at, const CashOutPolicy& policy,
                          Timestamp now);
CashOutStatus cashout_due(const ledger::Ledger& ledger, const CashOutPolicy& policy, Timestamp now);

struct SweepInput {
    chain::OutPoint outpoint;
    Sats value = 0;
    Bytes script_pubkey;
    std::uint32_t derivation_index = 0;
    std::string sale_id;
};

struct SweepPlan {
    std::vector<SweepInput> inputs;
    std::string destination;
    Sats fee_sats = 0;
    Sats total_in = 0;
    Sats total_out = 0;

    chain::Transaction unsigned_tx(const keystore::Network& network) const;
};

// Legacy P2PKH size estimate for `inputs` inputs and one output.
std::int64_t estimate_size(std::size_t inputs);
Sats sweep_fee(std::size_t inputs, Sats feerate);

// Throws nothing_to_sweep, dust_output, invalid_address, validation.
SweepPlan build_sweep(std::vector<SweepInput> inputs, const std::string& destination, Sats feerate,
                      const keystore::Network& network);
// Throws watch_only, bad_passphrase, unknown_index, invalid_key.
chain::Transaction sign_sweep(const SweepPlan& plan, const keystore::Keystore& keystore,
                              std::string_view passphrase);

struct SweepOutcome {
    SweepPlan plan;
    chain::Transaction tx;
    chain::Txid txid;
    std::vector<std::string> sale_ids;
};

class Treasury {
public:
    Treasury(ledger::Ledger& ledger, keystore::Keystore& keystore, payments::ChainSource& source,
             CashOutPolicy policy, Clock clock);

    CashOutStatus status() const;
    const CashOutPolicy& policy() const { return policy_; }

    // Spendable outputs at sale addresses, minus anything an earlier sweep
    // already took.
    std::vector<SweepInput> collect();
    SweepPlan plan(const std::string& destination, Sats feerate);

    // Plans, signs, broadcasts and records. The passphrase is checked before
    // anything is built, so a wrong one changes nothing. With `require_due`
    // a sweep below policy is refused with validation. An empty destination
    // uses the policy destination.
    SweepOutcome execute(std::string destination, Sats feerate, std::string_view passphrase,
                         bool require_due = false);

private:
    ledger::Ledger& ledger_;
    keystore::Keystore& keystore_;
    payments::ChainSource& source_;
    CashOutPolicy policy_;
    Clock clock_;
    std::mutex mutex_;
};

} // namespace still::treasury
