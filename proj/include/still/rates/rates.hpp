#pragma once

#include "still/core/money.hpp"
#include "still/core/time.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace still::rates {

struct CurrencyPair {
    std::string fiat;           // ISO-4217, upper case
    std::string crypto = "BTC";

    // "BTC-CAD"
    std::string to_string() const { return crypto + "-" + fiat; }
    // "BTC-CAD" or "CAD"; throws Errc::unsupported_pair on malformed input.
    static CurrencyPair parse(std::string_view text);
    bool operator==(const CurrencyPair&) const = default;
    auto operator<=>(const CurrencyPair&) const = default;
};

struct RateQuote {
    std::string source_id;
    CurrencyPair pair;
    Cents price = 0; // fiat cents per BTC
    Timestamp fetched_at = 0;
};

struct RateSnapshot {
    CurrencyPair pair;
    Cents aggregate_price = 0;
    std::string method = "median";
    std::vector<RateQuote> contributing;
    Timestamp computed_at = 0;

    // Age of the oldest contributing quote.
    std::int64_t age(Timestamp now) const;
};

struct AggregationPolicy {
    std::int64_t staleness_seconds = 120;
    std::size_t quorum = 2;
};

// Drops quotes older than the staleness bound (or dated in the future) and
// takes the median of the rest; lower middle for even counts. Throws
// Errc::stale_rates when fewer than `quorum` quotes survive and
// Errc::pair_mismatch when quotes disagree on the pair.
RateSnapshot aggregate(std::span<const RateQuote> quotes, Timestamp now, const AggregationPolicy& policy = {});

struct AssertionCheck {
    bool ok = false;
    Cents deviation = 0;      // |candidate - aggregate|
    Cents allowed = 0;        // floor(tolerance_bp * aggregate / 10000), informational
};

// ok iff |candidate - aggregate| * 10000 <= tolerance_bp * aggregate (inclusive,
// exact). Throws Errc::pair_mismatch.
AssertionCheck verify_assertion(const RateQuote& candidate, const RateSnapshot& snapshot, std::int64_t tolerance_bp);

// round-half-away-from-zero(fiat_cents * 10^8 / rate). Throws
// Errc::validation on non-positive inputs and Errc::sale_too_small below the
// dust limit.
Sats convert(Cents fiat_cents, Cents rate);

// "300.00", "300.00 CAD", "30000.5". A trailing currency code must equal
// `expected_fiat`. Throws Errc::parse_error.
Cents parse_price(std::string_view text, std::string_view expected_fiat);

} // namespace still::rates
