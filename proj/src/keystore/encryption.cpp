#include "still/keystore/encryption.hpp"

#include "still/core/error.hpp"
#include "still/crypto/hash.hpp"

#include <memory>
#include <openssl/evp.h>
#include <openssl/kdf.h>

namespace still::keystore {

namespace {

constexpr std::uint8_t kKdfScrypt = 1;
constexpr std::uint8_t kCipherAesGcm = 1;
constexpr std::uint64_t kScryptMaxMem = 1ull << 30;

struct CtxFree { void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); } };
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CtxFree>;

Bytes associated_data(const KdfParams& kdf)
{
    ByteWriter w;
    w.raw(as_bytes("STILL-BLOB1"));
    w.u8(kKdfScrypt);
    w.u8(kdf.cost.log2_n);
    w.u32(kdf.cost.r);
    w.u32(kdf.cost.p);
    w.raw(kdf.salt);
    w.u8(kCipherAesGcm);
    return w.take();
}

void check_cost(const KdfCost& c)
{
    if (c.log2_n < 10 || c.log2_n > 22 || c.r < 1 || c.r > 32 || c.p < 1 || c.p > 16)
        throw Error(Errc::store_corrupt, "unsupported KDF parameters");
}

SecretBytes derive_key(std::string_view passphrase, const KdfParams& kdf)
{
    SecretBytes key(32);
    std::uint64_t n = 1ull << kdf.cost.log2_n;
    if (EVP_PBE_scrypt(passphrase.data(), passphrase.size(), kdf.salt.data(), kdf.salt.size(), n, kdf.cost.r,
                       kdf.cost.p, kScryptMaxMem, key.data(), key.size()) != 1)
        throw Error(Errc::internal, "scrypt failed");
    return key;
}

CipherCtx new_ctx()
{
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw Error(Errc::internal, "EVP_CIPHER_CTX_new");
    return ctx;
}

} // namespace

Bytes EncryptedBlob::serialize() const
{
    ByteWriter w;
    w.u8(kKdfScrypt);
    w.u8(kdf.cost.log2_n);
    w.u32(kdf.cost.r);
    w.u32(kdf.cost.p);
    w.raw(kdf.salt);
    w.u8(kCipherAesGcm);
    w.raw(nonce);
    w.bytes32(ciphertext);
    w.raw(auth_tag);
    return w.take();
}

EncryptedBlob EncryptedBlob::parse(ByteView data)
{
    try {
        ByteReader r(data);
        EncryptedBlob b;
        if (r.u8() != kKdfScrypt) throw Error(Errc::store_corrupt, "unsupported KDF");
        b.kdf.cost.log2_n = r.u8();
        b.kdf.cost.r = r.u32();
        b.kdf.cost.p = r.u32();
        b.kdf.salt = to_array<16>(r.raw(16));
        if (r.u8() != kCipherAesGcm) throw Error(Errc::store_corrupt, "unsupported cipher");
        b.nonce = to_array<12>(r.raw(12));
        b.ciphertext = r.bytes32();
        b.auth_tag = to_array<16>(r.raw(16));
        if (!r.done()) throw Error(Errc::store_corrupt, "trailing bytes after encrypted blob");
        check_cost(b.kdf.cost);
        return b;
    } catch (const Error& e) {
        if (e.code() == Errc::parse_error) throw Error(Errc::store_corrupt, "truncated encrypted blob");
        throw;
    }
}

EncryptedBlob encrypt_secret(ByteView plaintext, std::string_view passphrase, const KdfCost& cost)
{
    if (passphrase.empty()) throw Error(Errc::empty_passphrase, "passphrase must not be empty");
    check_cost(cost);
    EncryptedBlob b;
    b.kdf.cost = cost;
    crypto::random_bytes(b.kdf.salt);
    crypto::random_bytes(b.nonce);
    SecretBytes key = derive_key(passphrase, b.kdf);
    Bytes aad = associated_data(b.kdf);

    auto ctx = new_ctx();
    int len = 0;
    b.ciphertext.resize(plaintext.size());
    if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(b.nonce.size()), nullptr) != 1 ||
        EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), b.nonce.data()) != 1 ||
        EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1 ||
        EVP_EncryptUpdate(ctx.get(), b.ciphertext.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1 ||
        EVP_EncryptFinal_ex(ctx.get(), b.ciphertext.data() + len, &len) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(b.auth_tag.size()),
                            b.auth_tag.data()) != 1)
        throw Error(Errc::internal, "encryption failed");
    return b;
}

SecretBytes decrypt_secret(const EncryptedBlob& blob, std::string_view passphrase)
{
    if (passphrase.empty()) throw Error(Errc::empty_passphrase, "passphrase must not be empty");
    check_cost(blob.kdf.cost);
    SecretBytes key = derive_key(passphrase, blob.kdf);
    Bytes aad = associated_data(blob.kdf);

    auto ctx = new_ctx();
    SecretBytes plain(blob.ciphertext.size());
    int len = 0;
    auto tag = blob.auth_tag;
    if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(blob.nonce.size()), nullptr) != 1 ||
        EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), blob.nonce.data()) != 1 ||
        EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1 ||
        EVP_DecryptUpdate(ctx.get(), plain.data(), &len, blob.ciphertext.data(),
                          static_cast<int>(blob.ciphertext.size())) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(tag.size()), tag.data()) != 1)
        throw Error(Errc::internal, "decryption setup failed");
    if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + len, &len) != 1)
        throw Error(Errc::bad_passphrase, "wrong passphrase or corrupted data");
    return plain;
}

EncryptedBlob encrypt_key(const crypto::PrivateKey& key, std::string_view passphrase, const KdfCost& cost)
{
    return encrypt_secret(key.bytes(), passphrase, cost);
}

crypto::PrivateKey decrypt_key(const EncryptedBlob& blob, std::string_view passphrase)
{
    SecretBytes plain = decrypt_secret(blob, passphrase);
    auto key = crypto::PrivateKey::from_bytes(plain.view());
    if (!key) throw Error(Errc::store_corrupt, "decrypted key out of range");
    return *key;
}

} // namespace still::keystore
