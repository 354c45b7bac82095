#include "still/crypto/hash.hpp"

#include "still/core/error.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <openssl/ripemd.h>
#include <openssl/sha.h>

namespace still::crypto {

Hash256 sha256(ByteView data)
{
    Hash256 out;
    SHA256(data.data(), data.size(), out.data());
    return out;
}

Hash256 sha256d(ByteView data)
{
    Hash256 first = sha256(data);
    return sha256(first);
}

Hash160 ripemd160(ByteView data)
{
    // OpenSSL 3.0.x only ships RIPEMD-160 in the legacy provider; the
    // low-level one-shot bypasses providers.
    Hash160 out;
    RIPEMD160(data.data(), data.size(), out.data());
    return out;
}

Hash160 hash160(ByteView data)
{
    Hash256 h = sha256(data);
    return ripemd160(h);
}

Hash256 hmac_sha256(ByteView key, ByteView data)
{
    Hash256 out;
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
              out.data(), &len) ||
        len != out.size())
        throw Error(Errc::internal, "HMAC-SHA256 failed");
    return out;
}

Hash512 hmac_sha512(ByteView key, ByteView data)
{
    Hash512 out;
    unsigned int len = 0;
    if (!HMAC(EVP_sha512(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
              out.data(), &len) ||
        len != out.size())
        throw Error(Errc::internal, "HMAC-SHA512 failed");
    return out;
}

void random_bytes(std::span<std::uint8_t> out)
{
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
        throw Error(Errc::internal, "system randomness unavailable");
}

} // namespace still::crypto
