#include "doctest.h"

#include "still/core/bytes.hpp"
#include "still/core/error.hpp"
#include "still/crypto/base58.hpp"
#include "still/crypto/hash.hpp"
#include "still/crypto/secp256k1.hpp"

#include <random>

using namespace still;
using namespace still::crypto;

TEST_CASE("hash primitives match published vectors")
{
    CHECK(to_hex(sha256(as_bytes("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(to_hex(ripemd160(as_bytes(""))) == "9c1185a5c5e9fc54612808977ee8f548b2258d31");
    CHECK(to_hex(ripemd160(as_bytes("abc"))) == "8eb208f7e05d987a9b044a8e98c6b087f15a0bfc");

    // RFC 4231 test case 1
    Bytes key(20, 0x0b);
    CHECK(to_hex(hmac_sha512(key, as_bytes("Hi There"))) ==
          "87aa7cdea5ef619d4ff0b4241a1d6cb02379f4e2ce4ec2787ad0b30545e17cde"
          "daa833b7d6b8a702038b274eaea3f4e4be9d914eeb61f1702e696c203a126854");
}

TEST_CASE("base58 encodes the reference vectors")
{
    struct Vec { const char* hex; const char* b58; };
    const Vec vectors[] = {
        {"", ""},
        {"61", "2g"},
        {"626262", "a3gV"},
        {"636363", "aPEr"},
        {"73696d706c792061206c6f6e6720737472696e67", "2cFupjhnEsSn59qHXstmK2ffpLv2"},
        {"00eb15231dfceb60925886b67d065299925915aeb172c06647", "1NS17iag9jJgTHD1VXjvLCEnZuQ3rJDE9L"},
        {"516b6fcd0f", "ABnLTmg"},
        {"00000000000000000000", "1111111111"},
    };
    for (const auto& v : vectors) {
        CHECK(base58_encode(from_hex(v.hex)) == v.b58);
        auto back = base58_decode(v.b58);
        REQUIRE(back);
        CHECK(to_hex(*back) == v.hex);
    }
    CHECK_FALSE(base58_decode("0OIl"));
}

TEST_CASE("base58check round-trips random payloads and rejects corruption")
{
    std::mt19937 rng(7);
    for (int i = 0; i < 1000; ++i) {
        Bytes payload(rng() % 80);
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng() % 4 == 0 ? 0 : rng());
        auto text = base58check_encode(payload);
        auto back = base58check_decode(text);
        REQUIRE(back);
        CHECK(*back == payload);
    }
    auto text = base58check_encode(from_hex("00112233"));
    text.back() = text.back() == 'z' ? 'y' : 'z';
    CHECK_FALSE(base58check_decode(text));
}

TEST_CASE("hex helpers reject malformed input")
{
    CHECK(to_hex(from_hex("00ff7A")) == "00ff7a");
    CHECK_THROWS_AS(from_hex("abc"), Error);
    CHECK_THROWS_AS(from_hex("zz"), Error);
}

TEST_CASE("secp256k1 scalar range and generator point")
{
    Bytes one(32, 0);
    one[31] = 1;
    auto k = PrivateKey::from_bytes(one);
    REQUIRE(k);
    CHECK(to_hex(k->public_key().view()) ==
          "0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798");

    CHECK_FALSE(PrivateKey::from_bytes(Bytes(32, 0)));
    auto order = from_hex("fffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364141");
    CHECK_FALSE(PrivateKey::from_bytes(order));
    order[31] = 0x40;
    CHECK(PrivateKey::from_bytes(order));

    CHECK_FALSE(PublicKey::parse(Bytes(33, 0)));
    auto bad = from_hex("0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798");
    bad[0] = 0x04;
    CHECK_FALSE(PublicKey::parse(bad));
}

TEST_CASE("ecdsa signatures verify, are low-S, and bind the digest")
{
    auto key = PrivateKey::generate();
    auto digest = sha256(as_bytes("sweep"));
    for (int i = 0; i < 20; ++i) {
        Bytes sig = key.sign(digest);
        CHECK(key.public_key().verify(digest, sig));
        // S length byte sits after r; low-S means its top bit is clear.
        std::size_t r_len = sig[3];
        std::size_t s_len = sig[5 + r_len];
        std::uint8_t s_first = sig[6 + r_len];
        CHECK((s_len < 33 || s_first == 0x00));
        auto other = sha256(as_bytes("sweep!"));
        CHECK_FALSE(key.public_key().verify(other, sig));
    }
    CHECK_FALSE(key.public_key().verify(digest, as_bytes("not der")));
}

TEST_CASE("ecdsa nonces are deterministic")
{
    struct Vector {
        const char* key;
        const char* message;
        const char* der;
    };
    const Vector vectors[] = {
        {"0000000000000000000000000000000000000000000000000000000000000001", "Satoshi Nakamoto",
         "3045022100934b1ea10a4b3c1757e2b0c017d0b6143ce3c9a7e6a4a49860d7a6ab210ee3d8"
         "02202442ce9d2b916064108014783e923ec36b49743e2ffa1c4496f01a512aafd9e5"},
        {"fffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364140", "Satoshi Nakamoto",
         "3045022100fd567d121db66e382991534ada77a6bd3106f0a1098c231e47993447cd6af2d0"
         "02206b39cd0eb1bc8603e159ef5c20a5c8ad685a45b06ce9bebed3f153d10d93bed5"},
        {"f8b8af8ce3c7cca5e300d33939540c10d45ce001b8f252bfbc57ba0342904181", "Alan Turing",
         "304402207063ae83e7f62bbb171798131b4a0564b956930092b33b07b395615d9ec7e15c"
         "022058dfcc1e00a35e1572f366ffe34ba0fc47db1e7189759b9fb233c5b05ab388ea"},
    };
    for (const auto& v : vectors) {
        auto key = PrivateKey::from_bytes(from_hex(v.key));
        REQUIRE(key);
        auto digest = sha256(as_bytes(v.message));
        auto sig = key->sign(digest);
        CHECK(to_hex(sig) == v.der);
        CHECK(key->public_key().verify(digest, sig));
        CHECK(key->sign(digest) == sig);
    }
    // RFC 4231 test case 1
    CHECK(to_hex(hmac_sha256(Bytes(20, 0x0b), as_bytes("Hi There"))) ==
          "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
}

TEST_CASE("public tweak equals private tweak")
{
    std::mt19937 rng(11);
    for (int i = 0; i < 25; ++i) {
        auto key = PrivateKey::generate();
        Hash256 tweak{};
        for (auto& b : tweak) b = static_cast<std::uint8_t>(rng());
        auto priv = tweak_add(key, tweak);
        auto pub = tweak_add(key.public_key(), tweak);
        REQUIRE(priv);
        REQUIRE(pub);
        CHECK(priv->public_key() == *pub);
    }
    Hash256 too_big;
    too_big.fill(0xff);
    CHECK_FALSE(tweak_add(PrivateKey::generate(), too_big));
}
