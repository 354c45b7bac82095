#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace still {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);
// Throws Errc::parse_error on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

template <std::size_t N>
std::array<std::uint8_t, N> to_array(ByteView data)
{
    std::array<std::uint8_t, N> out{};
    for (std::size_t i = 0; i < N && i < data.size(); ++i) out[i] = data[i];
    return out;
}

inline ByteView as_bytes(std::string_view s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Zeroes its buffer on destruction. Holds key material and passphrase-derived
// secrets.
class SecretBytes {
public:
    SecretBytes() = default;
    explicit SecretBytes(std::size_t n) : data_(n) {}
    explicit SecretBytes(ByteView v) : data_(v.begin(), v.end()) {}
    SecretBytes(const SecretBytes&) = default;
    SecretBytes& operator=(const SecretBytes&) = default;
    SecretBytes(SecretBytes&& other) noexcept : data_(std::move(other.data_)) {}
    SecretBytes& operator=(SecretBytes&& other) noexcept;
    ~SecretBytes();

    std::uint8_t* data() { return data_.data(); }
    const std::uint8_t* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }
    void resize(std::size_t n) { data_.resize(n); }
    ByteView view() const { return data_; }

private:
    void wipe();
    std::vector<std::uint8_t> data_;
};

void secure_wipe(void* p, std::size_t n);

// Little-endian binary writer/reader for the on-disk formats.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void raw(ByteView v) { buf_.insert(buf_.end(), v.begin(), v.end()); }
    void str8(std::string_view s);
    void bytes32(ByteView v); // u32 length prefix

    const Bytes& buffer() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

// Throws Errc::parse_error on underrun.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    ByteView raw(std::size_t n);
    std::string str8();
    Bytes bytes32();

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32(ByteView data);

} // namespace still
