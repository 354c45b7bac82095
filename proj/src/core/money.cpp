#include "still/core/money.hpp"

#include "still/core/error.hpp"

#include <cstdlib>

namespace still {

namespace {

struct Decimal {
    bool negative = false;
    std::string whole;
    std::string frac;
};

Decimal split_decimal(std::string_view text)
{
    Decimal d;
    std::size_t pos = 0;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
        d.negative = text[pos] == '-';
        ++pos;
    }
    bool dot = false;
    for (; pos < text.size(); ++pos) {
        char c = text[pos];
        if (c == '.' && !dot) {
            dot = true;
        } else if (c >= '0' && c <= '9') {
            (dot ? d.frac : d.whole).push_back(c);
        } else {
            throw Error(Errc::parse_error, "invalid decimal number");
        }
    }
    if (d.whole.empty() && d.frac.empty()) throw Error(Errc::parse_error, "invalid decimal number");
    if (d.whole.size() > 15) throw Error(Errc::parse_error, "number out of range");
    return d;
}

std::int64_t digits_value(std::string_view digits)
{
    std::int64_t v = 0;
    for (char c : digits) v = v * 10 + (c - '0');
    return v;
}

} // namespace

std::string format_btc(Sats sats)
{
    bool negative = sats < 0;
    std::uint64_t v = negative ? 0 - static_cast<std::uint64_t>(sats) : static_cast<std::uint64_t>(sats);
    std::string out = (negative ? "-" : "") + std::to_string(v / kSatsPerCoin);
    std::uint64_t frac = v % kSatsPerCoin;
    if (frac != 0) {
        std::string digits = std::to_string(frac);
        digits.insert(0, 8 - digits.size(), '0');
        while (digits.back() == '0') digits.pop_back();
        out += "." + digits;
    }
    return out;
}

std::string format_cents(Cents cents)
{
    bool negative = cents < 0;
    std::uint64_t v = negative ? 0 - static_cast<std::uint64_t>(cents) : static_cast<std::uint64_t>(cents);
    std::string frac = std::to_string(v % 100);
    if (frac.size() < 2) frac.insert(0, 1, '0');
    return (negative ? "-" : "") + std::to_string(v / 100) + "." + frac;
}

Cents parse_cents(std::string_view text)
{
    Decimal d = split_decimal(text);
    std::string frac = d.frac;
    bool round_up = false;
    if (frac.size() > 2) {
        round_up = frac[2] >= '5';
        frac.resize(2);
    }
    frac.append(2 - frac.size(), '0');
    Cents v = digits_value(d.whole) * 100 + digits_value(frac) + (round_up ? 1 : 0);
    return d.negative ? -v : v;
}

Sats parse_btc(std::string_view text)
{
    Decimal d = split_decimal(text);
    if (d.frac.size() > 8) throw Error(Errc::parse_error, "more than 8 decimal places");
    if (d.whole.size() > 8) throw Error(Errc::parse_error, "amount out of range");
    std::string frac = d.frac;
    frac.append(8 - frac.size(), '0');
    Sats v = digits_value(d.whole) * kSatsPerCoin + digits_value(frac);
    return d.negative ? -v : v;
}

} // namespace still
