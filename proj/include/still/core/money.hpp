#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace still {

// All money is integral: fiat in cents, bitcoin in satoshis.
using Cents = std::int64_t;
using Sats = std::int64_t;

constexpr Sats kSatsPerCoin = 100'000'000;
// Smallest standard P2PKH output.
constexpr Sats kDustLimit = 546;

// "0.015", "1", "0.00000546"; at most 8 places, no trailing zeros.
std::string format_btc(Sats sats);
// "4.50"
std::string format_cents(Cents cents);
// Decimal fiat text to cents, rounding half away from zero past two places.
// Accepts an optional sign. Throws Errc::parse_error.
Cents parse_cents(std::string_view text);
// Decimal BTC text to satoshis (at most 8 places). Throws Errc::parse_error.
Sats parse_btc(std::string_view text);

} // namespace still
