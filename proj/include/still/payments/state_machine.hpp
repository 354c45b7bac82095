#pragma once

#include "still/ledger/types.hpp"
#include "still/payments/events.hpp"
#include "still/payments/policy.hpp"

#include <optional>
#include <vector>

namespace still::payments {

struct SaleTrack {
    ledger::SaleRecord sale;
    std::vector<ledger::PaymentRecord> payments;
};

struct EventOutcome {
    std::vector<ledger::PaymentRecord> payment_updates;
    std::vector<ledger::InvoiceState> transitions; // applied in order
    std::optional<chain::Txid> evidence;
    std::optional<Sats> excess_sats;
    bool reorg_alert = false;

    bool empty() const
    {
        return payment_updates.empty() && transitions.empty() && !excess_sats && !reorg_alert;
    }
};

// Pure transition function. `tip` is the chain height after the event.
//
//   TxSeen paying the sale    records a payment, then re-evaluates
//   BlockMined                marks included payments mined
//   Conflict                  marks an unmined payment conflicted
//   Reorg                     unmines payments above the new height
//
// Re-evaluation: enough money and enough confirmations gives Confirmed;
// enough money within the zero-conf limit gives Paid0Conf; less gives
// Underpaid; losing the money to a conflict gives DoubleSpent. A payment
// arriving once the invoice window has closed expires the sale first and
// then marks it LatePaid. A reorg that undercuts a Confirmed sale regresses
// it only when the policy allows; otherwise it raises an alert.
EventOutcome on_event(const SaleTrack& track, const ChainEvent& event, const MatchPolicy& policy,
                      const keystore::Network& network, std::int64_t tip);

// Expiry: an open sale without a satisfying payment expires at expires_at.
EventOutcome on_tick(const SaleTrack& track, const MatchPolicy& policy, Timestamp now, std::int64_t tip);

// Applies an outcome to a track as the ledger would.
void apply_outcome(SaleTrack& track, const EventOutcome& outcome);

} // namespace still::payments
