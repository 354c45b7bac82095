#pragma once

#include "still/chain/transaction.hpp"
#include "still/core/money.hpp"
#include "still/core/time.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace still::ledger {

// Overpayment is not a state of its own: a Paid0Conf or Confirmed sale
// carries a nonzero SaleRecord::excess_sats instead.
enum class InvoiceState : std::uint8_t {
    pending,
    paid_0conf,
    confirmed,
    underpaid,
    expired,
    late_paid,
    double_spent,
};

inline constexpr InvoiceState kAllStates[] = {
    InvoiceState::pending,  InvoiceState::paid_0conf, InvoiceState::confirmed,    InvoiceState::underpaid,
    InvoiceState::expired,  InvoiceState::late_paid,  InvoiceState::double_spent,
};

std::string_view state_name(InvoiceState s);
// Throws Errc::parse_error.
InvoiceState parse_state(std::string_view name);

// Transition table. The regression edges (Confirmed back to Paid0Conf or
// Pending, Confirmed to DoubleSpent) exist only when reorg regression is
// enabled; otherwise a reorg raises an alert and the state stays put.
bool is_legal_transition(InvoiceState from, InvoiceState to, bool allow_regression);
// Counted as paid for totals and cash-out.
bool is_paid(InvoiceState s);
// Still waiting for money or an expiry.
bool is_open(InvoiceState s);

enum class PaymentStatus : std::uint8_t { mempool, confirmed, conflicted };
std::string_view payment_status_name(PaymentStatus s);
PaymentStatus parse_payment_status(std::string_view name);

enum class Role : std::uint8_t { anyone, employee, admin };
std::string_view role_name(Role r);

struct SaleRecord {
    std::string sale_id;
    std::string branch_id;
    Cents fiat_cents = 0;
    std::string fiat_currency;
    Cents locked_rate = 0;
    Sats btc_sats = 0;
    std::string address;
    std::uint32_t derivation_index = 0;
    std::string note;
    Timestamp created_at = 0;
    InvoiceState state = InvoiceState::pending;
    Timestamp expires_at = 0;

    Timestamp updated_at = 0;
    Sats excess_sats = 0;
    std::optional<chain::Txid> evidence_txid;
    bool reorg_alert = false;
    bool swept = false;
    // Journal sequence number of the last record that touched this sale.
    std::uint64_t revision = 0;

    bool operator==(const SaleRecord&) const = default;
};

struct PaymentRecord {
    chain::Txid txid;
    std::string sale_id;
    Sats paid_sats = 0;
    Timestamp first_seen_at = 0;
    // 0 while unmined; confirmations are derived from this and the tip.
    std::int64_t block_height = 0;
    PaymentStatus status = PaymentStatus::mempool;

    std::int64_t confirmations(std::int64_t tip) const
    {
        if (status == PaymentStatus::conflicted || block_height <= 0 || tip < block_height) return 0;
        return tip - block_height + 1;
    }
    bool operator==(const PaymentRecord&) const = default;
};

struct Transition {
    InvoiceState from = InvoiceState::pending;
    InvoiceState to = InvoiceState::pending;
    Timestamp at = 0;
    std::optional<chain::Txid> txid;
    bool operator==(const Transition&) const = default;
};

struct SweepRecord {
    chain::Txid txid;
    std::vector<std::string> sale_ids;
    std::vector<chain::OutPoint> inputs;
    Sats total_in = 0;
    Sats fee = 0;
    std::string destination;
    Timestamp at = 0;
    bool operator==(const SweepRecord&) const = default;
};

} // namespace still::ledger
