#include "still/payments/uri.hpp"

#include "still/core/error.hpp"
#include "still/keystore/address.hpp"

#include <cctype>

namespace still::payments {

namespace {

bool unreserved(unsigned char c)
{
    return std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~';
}

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::string url_encode(std::string_view text)
{
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        if (unreserved(c)) {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += kHex[c >> 4];
            out += kHex[c & 0xf];
        }
    }
    return out;
}

std::string url_decode(std::string_view text)
{
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '%') {
            out += text[i];
            continue;
        }
        if (i + 2 >= text.size()) throw Error(Errc::parse_error, "truncated escape");
        int hi = hex_value(text[i + 1]), lo = hex_value(text[i + 2]);
        if (hi < 0 || lo < 0) throw Error(Errc::parse_error, "invalid escape");
        out += static_cast<char>(hi << 4 | lo);
        i += 2;
    }
    return out;
}

std::string build_payment_uri(std::string_view address, Sats sats, std::string_view label)
{
    keystore::decode_address(address);
    if (sats < kDustLimit) throw Error(Errc::validation, "amount is below the dust limit");
    std::string uri = "bitcoin:";
    uri += address;
    uri += "?amount=" + format_btc(sats);
    if (!label.empty()) uri += "&label=" + url_encode(label);
    return uri;
}

PaymentUri parse_payment_uri(std::string_view uri)
{
    constexpr std::string_view scheme = "bitcoin:";
    if (uri.size() < scheme.size()) throw Error(Errc::parse_error, "not a bitcoin URI");
    for (std::size_t i = 0; i < scheme.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(uri[i])) != scheme[i])
            throw Error(Errc::parse_error, "not a bitcoin URI");
    uri.remove_prefix(scheme.size());

    PaymentUri out;
    auto q = uri.find('?');
    out.address = std::string(uri.substr(0, q));
    if (out.address.empty()) throw Error(Errc::parse_error, "missing address");
    if (q == std::string_view::npos) return out;

    std::string_view query = uri.substr(q + 1);
    while (!query.empty()) {
        auto amp = query.find('&');
        std::string_view pair = query.substr(0, amp);
        query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
        auto eq = pair.find('=');
        if (eq == std::string_view::npos) throw Error(Errc::parse_error, "parameter without value");
        std::string key = url_decode(pair.substr(0, eq));
        std::string value = url_decode(pair.substr(eq + 1));
        if (key == "amount") {
            out.amount = parse_btc(value);
        } else if (key == "label") {
            out.label = value;
        } else {
            out.other[key] = value;
        }
    }
    return out;
}

} // namespace still::payments
