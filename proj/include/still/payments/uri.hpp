#pragma once

#include "still/core/money.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace still::payments {

// Percent-encodes every octet outside the RFC 3986 unreserved set.
std::string url_encode(std::string_view text);
// Throws Errc::parse_error on a malformed escape.
std::string url_decode(std::string_view text);

// "bitcoin:<address>?amount=<BTC>&label=<encoded>". The amount has at most
// eight decimals and no trailing zeros; an empty label is omitted.
// Throws invalid_address, or validation when sats are below dust.
std::string build_payment_uri(std::string_view address, Sats sats, std::string_view label);

struct PaymentUri {
    std::string address;
    std::optional<Sats> amount;
    std::optional<std::string> label;
    std::map<std::string, std::string> other;
};

// Throws Errc::parse_error.
PaymentUri parse_payment_uri(std::string_view uri);

} // namespace still::payments
