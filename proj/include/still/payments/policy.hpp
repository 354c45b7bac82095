#pragma once

#include "still/chain/transaction.hpp"
#include "still/core/money.hpp"
#include "still/keystore/network.hpp"
#include "still/ledger/types.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace still::payments {

struct ConfirmationBand {
    Cents max_fiat_cents = 0; // inclusive upper bound
    std::int64_t confirmations = 0;
};

struct MatchPolicy {
    std::int64_t underpay_tolerance_bp = 0;
    std::vector<ConfirmationBand> bands{
        {5'000, 0},
        {50'000, 1},
        {std::numeric_limits<Cents>::max(), 3},
    };
    Cents zero_conf_max_fiat_cents = 5'000;
    bool allow_reorg_regression = false;

    // Band lookup for the sale amount.
    std::int64_t band_confirmations(Cents fiat_cents) const;
    // Confirmations needed for Confirmed: the band, at least one.
    std::int64_t confirmed_threshold(Cents fiat_cents) const;
    bool zero_conf_allowed(Cents fiat_cents) const { return fiat_cents <= zero_conf_max_fiat_cents; }
    // Throws Errc::config_error: bands must rise in amount, not fall in
    // confirmations, and cover every amount.
    void validate() const;
};

enum class MatchKind { exact, under, over, none };

struct MatchResult {
    MatchKind kind = MatchKind::none;
    Sats paid_sats = 0;
    Sats excess_sats = 0;
};

// Exact when total lies in [required * (1 - tol), required], rounding the
// lower bound up.
MatchResult classify_total(Sats required, Sats total, std::int64_t tolerance_bp);
// Sums every output of `tx` paying the sale's address.
MatchResult match_payment(const ledger::SaleRecord& sale, const chain::Transaction& tx,
                          const keystore::Network& network, const MatchPolicy& policy);
Sats paid_to(const chain::Transaction& tx, const std::string& address, const keystore::Network& network);

} // namespace still::payments
