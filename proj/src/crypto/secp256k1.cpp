#include "still/crypto/secp256k1.hpp"

#include "still/core/error.hpp"

#include <memory>
#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/ecdsa.h>
#include <openssl/obj_mac.h>

namespace still::crypto {

namespace {

struct BnCtxFree { void operator()(BN_CTX* p) const { BN_CTX_free(p); } };
struct BnFree { void operator()(BIGNUM* p) const { BN_clear_free(p); } };
struct PointFree { void operator()(EC_POINT* p) const { EC_POINT_clear_free(p); } };
struct KeyFree { void operator()(EC_KEY* p) const { EC_KEY_free(p); } };
struct SigFree { void operator()(ECDSA_SIG* p) const { ECDSA_SIG_free(p); } };

using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxFree>;
using BnPtr = std::unique_ptr<BIGNUM, BnFree>;
using PointPtr = std::unique_ptr<EC_POINT, PointFree>;
using KeyPtr = std::unique_ptr<EC_KEY, KeyFree>;
using SigPtr = std::unique_ptr<ECDSA_SIG, SigFree>;

struct Curve {
    EC_GROUP* group = nullptr;
    BIGNUM* order = nullptr;
    BIGNUM* half_order = nullptr;

    Curve()
    {
        group = EC_GROUP_new_by_curve_name(NID_secp256k1);
        order = BN_new();
        half_order = BN_new();
        if (!group || !order || !half_order) throw Error(Errc::internal, "secp256k1 unavailable");
        EC_GROUP_get_order(group, order, nullptr);
        BN_rshift1(half_order, order);
        EC_GROUP_precompute_mult(group, nullptr);
    }
};

// Read-only after construction; safe to share across threads.
const Curve& curve()
{
    static const Curve c;
    return c;
}

[[noreturn]] void fail(const char* what)
{
    throw Error(Errc::internal, what);
}

BnCtxPtr new_ctx()
{
    BnCtxPtr ctx(BN_CTX_new());
    if (!ctx) fail("BN_CTX_new");
    return ctx;
}

BnPtr bn_from(ByteView bytes)
{
    BnPtr bn(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
    if (!bn) fail("BN_bin2bn");
    return bn;
}

std::array<std::uint8_t, 32> bn_to32(const BIGNUM* bn)
{
    std::array<std::uint8_t, 32> out{};
    if (BN_bn2binpad(bn, out.data(), 32) != 32) fail("BN_bn2binpad");
    return out;
}

bool in_scalar_range(const BIGNUM* v)
{
    return !BN_is_zero(v) && !BN_is_negative(v) && BN_cmp(v, curve().order) < 0;
}

PointPtr point_from(const PublicKey& key, BN_CTX* ctx)
{
    PointPtr p(EC_POINT_new(curve().group));
    if (!p) fail("EC_POINT_new");
    if (EC_POINT_oct2point(curve().group, p.get(), key.bytes().data(), key.bytes().size(), ctx) != 1)
        fail("EC_POINT_oct2point");
    return p;
}

std::optional<PublicKey> point_to_key(const EC_POINT* p, BN_CTX* ctx)
{
    if (EC_POINT_is_at_infinity(curve().group, p)) return std::nullopt;
    std::array<std::uint8_t, PublicKey::kSize> buf{};
    if (EC_POINT_point2oct(curve().group, p, POINT_CONVERSION_COMPRESSED, buf.data(), buf.size(), ctx) !=
        buf.size())
        fail("EC_POINT_point2oct");
    return PublicKey::parse(buf);
}

} // namespace

std::optional<PublicKey> PublicKey::parse(ByteView data)
{
    if (data.size() != kSize || (data[0] != 0x02 && data[0] != 0x03)) return std::nullopt;
    auto ctx = new_ctx();
    PointPtr p(EC_POINT_new(curve().group));
    if (!p) fail("EC_POINT_new");
    if (EC_POINT_oct2point(curve().group, p.get(), data.data(), data.size(), ctx.get()) != 1)
        return std::nullopt;
    if (EC_POINT_is_on_curve(curve().group, p.get(), ctx.get()) != 1) return std::nullopt;
    return PublicKey(to_array<kSize>(data));
}

bool PublicKey::verify(const Hash256& digest, ByteView der_signature) const
{
    auto ctx = new_ctx();
    const unsigned char* p = der_signature.data();
    SigPtr sig(d2i_ECDSA_SIG(nullptr, &p, static_cast<long>(der_signature.size())));
    if (!sig || p != der_signature.data() + der_signature.size()) return false;
    KeyPtr key(EC_KEY_new());
    if (!key || EC_KEY_set_group(key.get(), curve().group) != 1) fail("EC_KEY_new");
    auto point = point_from(*this, ctx.get());
    if (EC_KEY_set_public_key(key.get(), point.get()) != 1) return false;
    return ECDSA_do_verify(digest.data(), static_cast<int>(digest.size()), sig.get(), key.get()) == 1;
}

PrivateKey::~PrivateKey()
{
    secure_wipe(bytes_.data(), bytes_.size());
}

std::optional<PrivateKey> PrivateKey::from_bytes(ByteView scalar)
{
    if (scalar.size() != kSize) return std::nullopt;
    auto bn = bn_from(scalar);
    if (!in_scalar_range(bn.get())) return std::nullopt;
    return PrivateKey(to_array<kSize>(scalar));
}

PrivateKey PrivateKey::generate()
{
    for (;;) {
        std::array<std::uint8_t, kSize> buf{};
        random_bytes(buf);
        auto key = from_bytes(buf);
        secure_wipe(buf.data(), buf.size());
        if (key) return *key;
    }
}

PublicKey PrivateKey::public_key() const
{
    auto ctx = new_ctx();
    auto k = bn_from(bytes_);
    PointPtr p(EC_POINT_new(curve().group));
    if (!p || EC_POINT_mul(curve().group, p.get(), k.get(), nullptr, nullptr, ctx.get()) != 1)
        fail("EC_POINT_mul");
    auto out = point_to_key(p.get(), ctx.get());
    if (!out) fail("public key at infinity");
    return *out;
}

Bytes PrivateKey::sign(const Hash256& digest) const
{
    // Nonce per RFC 6979 with HMAC-SHA256, so equal inputs sign identically.
    auto ctx = new_ctx();
    const BIGNUM* n = curve().order;
    auto d = bn_from(bytes_);
    auto z = bn_from(digest);
    if (BN_cmp(z.get(), n) >= 0 && BN_sub(z.get(), z.get(), n) != 1) fail("BN_sub");
    auto h1 = bn_to32(z.get());

    Hash256 v;
    v.fill(0x01);
    Hash256 k{};
    auto update = [&](std::uint8_t tag, bool with_data) {
        Bytes m(v.begin(), v.end());
        m.push_back(tag);
        if (with_data) {
            m.insert(m.end(), bytes_.begin(), bytes_.end());
            m.insert(m.end(), h1.begin(), h1.end());
        }
        k = hmac_sha256(k, m);
        secure_wipe(m.data(), m.size());
        v = hmac_sha256(k, v);
    };
    update(0x00, true);
    update(0x01, true);

    SigPtr sig(ECDSA_SIG_new());
    if (!sig) fail("ECDSA_SIG_new");
    for (;;) {
        v = hmac_sha256(k, v);
        auto nonce = bn_from(v);
        if (in_scalar_range(nonce.get())) {
            PointPtr point(EC_POINT_new(curve().group));
            BnPtr x(BN_new()), r(BN_new()), s(BN_new()), kinv(BN_new());
            if (!point || !x || !r || !s || !kinv) fail("BN_new");
            if (EC_POINT_mul(curve().group, point.get(), nonce.get(), nullptr, nullptr, ctx.get()) != 1 ||
                EC_POINT_get_affine_coordinates(curve().group, point.get(), x.get(), nullptr, ctx.get()) != 1 ||
                BN_nnmod(r.get(), x.get(), n, ctx.get()) != 1)
                fail("nonce point");
            if (!BN_is_zero(r.get())) {
                // s = k^-1 (z + r d) mod n
                if (BN_mod_mul(s.get(), r.get(), d.get(), n, ctx.get()) != 1 ||
                    BN_mod_add(s.get(), s.get(), z.get(), n, ctx.get()) != 1 ||
                    !BN_mod_inverse(kinv.get(), nonce.get(), n, ctx.get()) ||
                    BN_mod_mul(s.get(), s.get(), kinv.get(), n, ctx.get()) != 1)
                    fail("ECDSA arithmetic");
                if (!BN_is_zero(s.get())) {
                    if (ECDSA_SIG_set0(sig.get(), r.release(), s.release()) != 1) fail("ECDSA_SIG_set0");
                    break;
                }
            }
        }
        update(0x00, false);
    }
    secure_wipe(k.data(), k.size());
    secure_wipe(v.data(), v.size());

    const BIGNUM* r = nullptr;
    const BIGNUM* s = nullptr;
    ECDSA_SIG_get0(sig.get(), &r, &s);
    if (BN_cmp(s, curve().half_order) > 0) {
        BnPtr low_s(BN_new());
        BnPtr r_copy(BN_dup(r));
        if (!low_s || !r_copy || BN_sub(low_s.get(), curve().order, s) != 1) fail("BN_sub");
        if (ECDSA_SIG_set0(sig.get(), r_copy.release(), low_s.release()) != 1) fail("ECDSA_SIG_set0");
    }

    int len = i2d_ECDSA_SIG(sig.get(), nullptr);
    if (len <= 0) fail("i2d_ECDSA_SIG");
    Bytes der(static_cast<std::size_t>(len));
    unsigned char* out = der.data();
    i2d_ECDSA_SIG(sig.get(), &out);
    return der;
}

std::optional<PrivateKey> tweak_add(const PrivateKey& key, const Hash256& tweak)
{
    auto ctx = new_ctx();
    auto t = bn_from(tweak);
    if (BN_cmp(t.get(), curve().order) >= 0) return std::nullopt;
    auto k = bn_from(key.bytes());
    BnPtr sum(BN_new());
    if (!sum || BN_mod_add(sum.get(), k.get(), t.get(), curve().order, ctx.get()) != 1) fail("BN_mod_add");
    if (BN_is_zero(sum.get())) return std::nullopt;
    auto bytes = bn_to32(sum.get());
    auto out = PrivateKey::from_bytes(bytes);
    secure_wipe(bytes.data(), bytes.size());
    return out;
}

std::optional<PublicKey> tweak_add(const PublicKey& key, const Hash256& tweak)
{
    auto ctx = new_ctx();
    auto t = bn_from(tweak);
    if (BN_cmp(t.get(), curve().order) >= 0) return std::nullopt;
    auto p = point_from(key, ctx.get());
    BnPtr one(BN_new());
    if (!one || BN_one(one.get()) != 1) fail("BN_one");
    PointPtr r(EC_POINT_new(curve().group));
    if (!r || EC_POINT_mul(curve().group, r.get(), t.get(), p.get(), one.get(), ctx.get()) != 1)
        fail("EC_POINT_mul");
    return point_to_key(r.get(), ctx.get());
}

} // namespace still::crypto
