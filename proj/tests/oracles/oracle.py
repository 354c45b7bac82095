#!/usr/bin/env python3
"""Independent reference values for the C++ test suite.

Pure-Python secp256k1, BIP32 and Base58Check; shares no code with the
library. Run it to regenerate the constants frozen in tests/.
"""
import hashlib
import hmac
import urllib.parse
from fractions import Fraction

from Crypto.Hash import RIPEMD160

P = 2**256 - 2**32 - 977
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
G = (0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
     0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8)
B58 = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"


def add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if a[0] == b[0] and (a[1] + b[1]) % P == 0:
        return None
    if a == b:
        lam = 3 * a[0] * a[0] * pow(2 * a[1], P - 2, P) % P
    else:
        lam = (b[1] - a[1]) * pow(b[0] - a[0], P - 2, P) % P
    x = (lam * lam - a[0] - b[0]) % P
    return (x, (lam * (a[0] - x) - a[1]) % P)


def mul(k, pt=G):
    r = None
    while k:
        if k & 1:
            r = add(r, pt)
        pt = add(pt, pt)
        k >>= 1
    return r


def ser_p(pt):
    return bytes([2 + (pt[1] & 1)]) + pt[0].to_bytes(32, "big")


def decompress(b):
    x = int.from_bytes(b[1:], "big")
    y = pow((x**3 + 7) % P, (P + 1) // 4, P)
    if (y & 1) != (b[0] & 1):
        y = P - y
    return (x, y)


def h160(b):
    return RIPEMD160.new(hashlib.sha256(b).digest()).digest()


def b58(b):
    n = int.from_bytes(b, "big")
    s = ""
    while n:
        n, r = divmod(n, 58)
        s = B58[r] + s
    return "1" * (len(b) - len(b.lstrip(b"\0"))) + s


def b58check(b):
    return b58(b + hashlib.sha256(hashlib.sha256(b).digest()).digest()[:4])


def master(seed):
    i = hmac.new(b"Bitcoin seed", seed, hashlib.sha512).digest()
    return dict(k=int.from_bytes(i[:32], "big"), c=i[32:], depth=0, fp=b"\0" * 4, child=0)


def ckd(node, i):
    K = ser_p(mul(node["k"]))
    if i >= 0x80000000:
        data = b"\0" + node["k"].to_bytes(32, "big") + i.to_bytes(4, "big")
    else:
        data = K + i.to_bytes(4, "big")
    I = hmac.new(node["c"], data, hashlib.sha512).digest()
    k = (int.from_bytes(I[:32], "big") + node["k"]) % N
    return dict(k=k, c=I[32:], depth=node["depth"] + 1, fp=h160(K)[:4], child=i)


def xkey(node, private):
    ver = bytes.fromhex("0488ade4" if private else "0488b21e")
    body = bytes([node["depth"]]) + node["fp"] + node["child"].to_bytes(4, "big") + node["c"]
    body += (b"\0" + node["k"].to_bytes(32, "big")) if private else ser_p(mul(node["k"]))
    return b58check(ver + body)


def main():
    seed = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
    m = master(seed)
    print("tv1 m fingerprint", h160(ser_p(mul(m["k"])))[:4].hex())
    print("tv1 m xprv", xkey(m, True))
    print("tv1 m xpub", xkey(m, False))
    m0h = ckd(m, 0x80000000)
    print("tv1 m/0H xprv", xkey(m0h, True))
    print("tv1 m/0H xpub", xkey(m0h, False))
    m0h1 = ckd(m0h, 1)
    print("tv1 m/0H/1 xprv", xkey(m0h1, True))
    print("tv1 m/0H/1 xpub", xkey(m0h1, False))
    n = ckd(ckd(m0h1, 0x80000002), 2)
    print("tv1 m/0H/1/2H/2 xpub", xkey(n, False))

    # store derivation path m/0'/0/i from the test-vector seed
    ext = ckd(m0h, 0)
    for i in (0, 1):
        node = ckd(ext, i)
        print(f"tv1 m/0H/0/{i} mainnet address", b58check(b"\x00" + h160(ser_p(mul(node["k"])))))

    print("zeros mainnet", b58check(b"\x00" + b"\0" * 20))
    one = ser_p(mul(1))
    print("pubkey(1)", one.hex())
    print("addr(1) mainnet", b58check(b"\x00" + h160(one)))
    print("addr(1) testnet", b58check(b"\x6f" + h160(one)))
    print("wif(1) mainnet", b58check(b"\x80" + (1).to_bytes(32, "big") + b"\x01"))
    print("wif(1) testnet", b58check(b"\xef" + (1).to_bytes(32, "big") + b"\x01"))

    def convert(cents, rate):
        q = Fraction(cents * 10**8, rate)
        fl = q.numerator // q.denominator
        return fl + 1 if q - fl >= Fraction(1, 2) else fl

    print("convert(999, 30001)", convert(999, 30001))
    print("convert(450, 30000)", convert(450, 30000))
    print("label Café #1", urllib.parse.quote("Café #1", safe=""))
    print("bp 30150 vs 30000", Fraction(30150 - 30000, 30000) * 10000)
    print("sweep fee 1 input @10", 10 * (148 + 34 + 10))

    # Legacy P2PKH spend: one input (txid bytes all 0x11, vout 0), key 1,
    # one 100000-sat output back to the same key hash.
    import struct
    spk = b"\x76\xa9\x14" + h160(one) + b"\x88\xac"
    def ser(script_sig):
        return (struct.pack("<i", 1) + b"\x01" + b"\x11" * 32 + struct.pack("<I", 0)
                + bytes([len(script_sig)]) + script_sig + struct.pack("<I", 0xffffffff)
                + b"\x01" + struct.pack("<q", 100000) + bytes([len(spk)]) + spk
                + struct.pack("<I", 0))
    d2 = lambda b: hashlib.sha256(hashlib.sha256(b).digest()).digest()
    unsigned = ser(b"")
    print("tx unsigned hex", unsigned.hex())
    print("tx unsigned txid", d2(unsigned)[::-1].hex())
    print("tx sighash", d2(ser(spk) + struct.pack("<I", 1)).hex())

    # RFC 6979 deterministic ECDSA (pyca/cryptography), low-S normalized.
    from cryptography.hazmat.primitives import hashes
    from cryptography.hazmat.primitives.asymmetric import ec, utils
    for key, msg in [(1, b"Satoshi Nakamoto"), (N - 1, b"Satoshi Nakamoto"),
                     (0xf8b8af8ce3c7cca5e300d33939540c10d45ce001b8f252bfbc57ba0342904181,
                      b"Alan Turing")]:
        priv = ec.derive_private_key(key, ec.SECP256K1())
        der = priv.sign(msg, ec.ECDSA(hashes.SHA256(), deterministic_signing=True))
        r, s = utils.decode_dss_signature(der)
        if s > N // 2:
            s = N - s
        print(f"rfc6979 {key:x} {msg.decode()}", utils.encode_dss_signature(r, s).hex())

    # Full test-vector chains, one line per node.
    H = 0x80000000
    chains = [("tv1", "000102030405060708090a0b0c0d0e0f", [H, 1, H + 2, 2, 1000000000]),
              ("tv2", "fffcf9f6f3f0edeae7e4e1dedbd8d5d2cfccc9c6c3c0bdbab7b4b1aeaba8a5a29f9c999693908d8a8784817e7b7875726f6c696663605d5a5754514e4b484542",
               [0, H + 2147483647, 1, H + 2147483646, 2])]
    for name, seed_hex, path in chains:
        node, label = master(bytes.fromhex(seed_hex)), "m"
        print(f"chain {name} {label} {xkey(node, True)} {xkey(node, False)}")
        for i in path:
            node = ckd(node, i)
            label += f"/{i - H}H" if i >= H else f"/{i}"
            print(f"chain {name} {label} {xkey(node, True)} {xkey(node, False)}")


if __name__ == "__main__":
    main()
