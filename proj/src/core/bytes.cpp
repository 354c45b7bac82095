#include "still/core/bytes.hpp"

#include "still/core/error.hpp"

#include <openssl/crypto.h>
#include <zlib.h>

namespace still {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
} // namespace

std::string to_hex(ByteView data)
{
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) throw Error(Errc::parse_error, "odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_value(hex[i]);
        int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) throw Error(Errc::parse_error, "invalid hex character");
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

void secure_wipe(void* p, std::size_t n)
{
    OPENSSL_cleanse(p, n);
}

SecretBytes& SecretBytes::operator=(SecretBytes&& other) noexcept
{
    if (this != &other) {
        wipe();
        data_ = std::move(other.data_);
    }
    return *this;
}

SecretBytes::~SecretBytes()
{
    wipe();
}

void SecretBytes::wipe()
{
    if (!data_.empty()) secure_wipe(data_.data(), data_.size());
}

void ByteWriter::u32(std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::str8(std::string_view s)
{
    if (s.size() > 0xff) throw Error(Errc::invalid_argument, "string too long for field");
    u8(static_cast<std::uint8_t>(s.size()));
    raw(as_bytes(s));
}

void ByteWriter::bytes32(ByteView v)
{
    u32(static_cast<std::uint32_t>(v.size()));
    raw(v);
}

std::uint8_t ByteReader::u8()
{
    return raw(1)[0];
}

std::uint32_t ByteReader::u32()
{
    auto b = raw(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = v << 8 | b[i];
    return v;
}

std::uint64_t ByteReader::u64()
{
    auto b = raw(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = v << 8 | b[i];
    return v;
}

ByteView ByteReader::raw(std::size_t n)
{
    if (remaining() < n) throw Error(Errc::parse_error, "unexpected end of data");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::string ByteReader::str8()
{
    auto n = u8();
    auto b = raw(n);
    return {b.begin(), b.end()};
}

Bytes ByteReader::bytes32()
{
    auto n = u32();
    auto b = raw(n);
    return {b.begin(), b.end()};
}

std::uint32_t crc32(ByteView data)
{
    return static_cast<std::uint32_t>(
        ::crc32(0L, data.data(), static_cast<uInt>(data.size())));
}

} // namespace still
