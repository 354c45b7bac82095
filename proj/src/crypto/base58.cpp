#include "still/crypto/base58.hpp"

#include "still/crypto/hash.hpp"

#include <algorithm>
#include <array>

namespace still::crypto {

namespace {

constexpr std::string_view kAlphabet =
    "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

constexpr std::array<std::int8_t, 128> make_index()
{
    std::array<std::int8_t, 128> idx{};
    for (auto& v : idx) v = -1;
    for (std::size_t i = 0; i < kAlphabet.size(); ++i)
        idx[static_cast<std::size_t>(kAlphabet[i])] = static_cast<std::int8_t>(i);
    return idx;
}

constexpr auto kIndex = make_index();

} // namespace

std::string base58_encode(ByteView data)
{
    std::size_t zeroes = 0;
    while (zeroes < data.size() && data[zeroes] == 0) ++zeroes;

    // Big-endian base58 digits; log(256)/log(58) ~ 1.37.
    std::vector<std::uint8_t> digits((data.size() - zeroes) * 138 / 100 + 1);
    std::size_t length = 0;
    for (std::size_t i = zeroes; i < data.size(); ++i) {
        int carry = data[i];
        std::size_t j = 0;
        for (auto it = digits.rbegin(); (carry != 0 || j < length) && it != digits.rend(); ++it, ++j) {
            carry += 256 * (*it);
            *it = static_cast<std::uint8_t>(carry % 58);
            carry /= 58;
        }
        length = j;
    }
    auto it = digits.begin() + static_cast<std::ptrdiff_t>(digits.size() - length);
    while (it != digits.end() && *it == 0) ++it;

    std::string out(zeroes, '1');
    for (; it != digits.end(); ++it) out.push_back(kAlphabet[*it]);
    return out;
}

std::optional<Bytes> base58_decode(std::string_view text)
{
    std::size_t zeroes = 0;
    while (zeroes < text.size() && text[zeroes] == '1') ++zeroes;

    // log(58)/log(256) ~ 0.733
    std::vector<std::uint8_t> b256((text.size() - zeroes) * 733 / 1000 + 1);
    std::size_t length = 0;
    for (std::size_t i = zeroes; i < text.size(); ++i) {
        auto c = static_cast<unsigned char>(text[i]);
        if (c >= 128 || kIndex[c] < 0) return std::nullopt;
        int carry = kIndex[c];
        std::size_t j = 0;
        for (auto it = b256.rbegin(); (carry != 0 || j < length) && it != b256.rend(); ++it, ++j) {
            carry += 58 * (*it);
            *it = static_cast<std::uint8_t>(carry % 256);
            carry /= 256;
        }
        length = j;
    }
    auto it = b256.begin() + static_cast<std::ptrdiff_t>(b256.size() - length);
    while (it != b256.end() && *it == 0) ++it;

    Bytes out(zeroes, 0);
    out.insert(out.end(), it, b256.end());
    return out;
}

std::string base58check_encode(ByteView payload)
{
    Bytes buf(payload.begin(), payload.end());
    Hash256 check = sha256d(payload);
    buf.insert(buf.end(), check.begin(), check.begin() + 4);
    return base58_encode(buf);
}

std::optional<Bytes> base58check_decode(std::string_view text)
{
    auto raw = base58_decode(text);
    if (!raw || raw->size() < 4) return std::nullopt;
    ByteView body(raw->data(), raw->size() - 4);
    Hash256 check = sha256d(body);
    if (!std::equal(check.begin(), check.begin() + 4, raw->end() - 4)) return std::nullopt;
    return Bytes(body.begin(), body.end());
}

} // namespace still::crypto
