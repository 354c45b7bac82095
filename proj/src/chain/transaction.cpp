#include "still/chain/transaction.hpp"

#include "still/core/error.hpp"
#include "still/keystore/address.hpp"

#include <algorithm>

namespace still::chain {

namespace {

constexpr std::uint8_t OP_DUP = 0x76;
constexpr std::uint8_t OP_HASH160 = 0xa9;
constexpr std::uint8_t OP_EQUALVERIFY = 0x88;
constexpr std::uint8_t OP_CHECKSIG = 0xac;
constexpr std::uint8_t OP_PUSHDATA1 = 0x4c;

void write_compact(ByteWriter& w, std::uint64_t n)
{
    if (n < 0xfd) {
        w.u8(static_cast<std::uint8_t>(n));
    } else if (n <= 0xffff) {
        w.u8(0xfd);
        w.u8(static_cast<std::uint8_t>(n));
        w.u8(static_cast<std::uint8_t>(n >> 8));
    } else if (n <= 0xffffffff) {
        w.u8(0xfe);
        w.u32(static_cast<std::uint32_t>(n));
    } else {
        w.u8(0xff);
        w.u64(n);
    }
}

std::uint64_t read_compact(ByteReader& r)
{
    std::uint8_t first = r.u8();
    if (first < 0xfd) return first;
    if (first == 0xfd) {
        std::uint64_t lo = r.u8();
        return lo | std::uint64_t{r.u8()} << 8;
    }
    if (first == 0xfe) return r.u32();
    return r.u64();
}

void write_script(ByteWriter& w, ByteView script)
{
    write_compact(w, script.size());
    w.raw(script);
}

Bytes read_script(ByteReader& r)
{
    std::uint64_t n = read_compact(r);
    if (n > r.remaining()) throw Error(Errc::malformed_tx, "script length exceeds data");
    auto b = r.raw(static_cast<std::size_t>(n));
    return {b.begin(), b.end()};
}

void push_data(Bytes& script, ByteView data)
{
    if (data.size() < OP_PUSHDATA1) {
        script.push_back(static_cast<std::uint8_t>(data.size()));
    } else {
        script.push_back(OP_PUSHDATA1);
        script.push_back(static_cast<std::uint8_t>(data.size()));
    }
    script.insert(script.end(), data.begin(), data.end());
}

// Splits a push-only script into its data elements.
std::optional<std::vector<Bytes>> parse_pushes(ByteView script)
{
    std::vector<Bytes> out;
    std::size_t pos = 0;
    while (pos < script.size()) {
        std::size_t len = script[pos++];
        if (len == OP_PUSHDATA1) {
            if (pos >= script.size()) return std::nullopt;
            len = script[pos++];
        } else if (len > OP_PUSHDATA1) {
            return std::nullopt;
        }
        if (script.size() - pos < len) return std::nullopt;
        out.emplace_back(script.begin() + static_cast<std::ptrdiff_t>(pos),
                         script.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return out;
}

} // namespace

std::string Txid::hex() const
{
    auto rev = bytes;
    std::reverse(rev.begin(), rev.end());
    return to_hex(rev);
}

Txid Txid::from_hex(std::string_view hex)
{
    if (hex.size() != 64) throw Error(Errc::parse_error, "txid must be 64 hex characters");
    Bytes raw = still::from_hex(hex);
    Txid t;
    std::reverse_copy(raw.begin(), raw.end(), t.bytes.begin());
    return t;
}

Bytes Transaction::serialize() const
{
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(version));
    write_compact(w, inputs.size());
    for (const auto& in : inputs) {
        w.raw(in.prevout.txid.bytes);
        w.u32(in.prevout.vout);
        write_script(w, in.script_sig);
        w.u32(in.sequence);
    }
    write_compact(w, outputs.size());
    for (const auto& out : outputs) {
        w.i64(out.value);
        write_script(w, out.script_pubkey);
    }
    w.u32(locktime);
    return w.take();
}

std::string Transaction::to_hex() const
{
    return still::to_hex(serialize());
}

Txid Transaction::txid() const
{
    return Txid{crypto::sha256d(serialize())};
}

Sats Transaction::total_out() const
{
    Sats total = 0;
    for (const auto& o : outputs) total += o.value;
    return total;
}

bool Transaction::is_coinbase() const
{
    return inputs.size() == 1 && inputs[0].prevout.txid == Txid{} && inputs[0].prevout.vout == 0xffffffff;
}

Transaction Transaction::parse(ByteView data)
{
    try {
        ByteReader r(data);
        Transaction tx;
        tx.version = static_cast<std::int32_t>(r.u32());
        std::uint64_t n_in = read_compact(r);
        if (n_in > r.remaining() / 41) throw Error(Errc::malformed_tx, "input count exceeds data");
        for (std::uint64_t i = 0; i < n_in; ++i) {
            TxIn in;
            in.prevout.txid.bytes = to_array<32>(r.raw(32));
            in.prevout.vout = r.u32();
            in.script_sig = read_script(r);
            in.sequence = r.u32();
            tx.inputs.push_back(std::move(in));
        }
        std::uint64_t n_out = read_compact(r);
        if (n_out > r.remaining() / 9) throw Error(Errc::malformed_tx, "output count exceeds data");
        for (std::uint64_t i = 0; i < n_out; ++i) {
            TxOut out;
            out.value = r.i64();
            out.script_pubkey = read_script(r);
            tx.outputs.push_back(std::move(out));
        }
        tx.locktime = r.u32();
        if (!r.done()) throw Error(Errc::malformed_tx, "trailing bytes after transaction");
        return tx;
    } catch (const Error& e) {
        if (e.code() == Errc::malformed_tx) throw;
        throw Error(Errc::malformed_tx, "truncated transaction");
    }
}

Transaction Transaction::from_hex(std::string_view hex)
{
    try {
        return parse(still::from_hex(hex));
    } catch (const Error& e) {
        if (e.code() == Errc::parse_error) throw Error(Errc::malformed_tx, "transaction hex is invalid");
        throw;
    }
}

Bytes p2pkh_script(const crypto::Hash160& key_hash)
{
    Bytes s(25);
    s[0] = OP_DUP;
    s[1] = OP_HASH160;
    s[2] = 20;
    std::copy(key_hash.begin(), key_hash.end(), s.begin() + 3);
    s[23] = OP_EQUALVERIFY;
    s[24] = OP_CHECKSIG;
    return s;
}

std::optional<crypto::Hash160> p2pkh_hash(ByteView script)
{
    if (script.size() != 25 || script[0] != OP_DUP || script[1] != OP_HASH160 || script[2] != 20 ||
        script[23] != OP_EQUALVERIFY || script[24] != OP_CHECKSIG)
        return std::nullopt;
    return to_array<20>(script.subspan(3, 20));
}

Bytes script_for_address(std::string_view address, const keystore::Network& network)
{
    auto decoded = keystore::decode_address(address);
    if (decoded.version != network.p2pkh_version)
        throw Error(Errc::invalid_address, "address belongs to a different network");
    return p2pkh_script(decoded.hash);
}

std::optional<std::string> address_of(ByteView script, const keystore::Network& network)
{
    auto hash = p2pkh_hash(script);
    if (!hash) return std::nullopt;
    return keystore::encode_address(*hash, network.p2pkh_version);
}

crypto::Hash256 legacy_sighash(const Transaction& tx, std::size_t input, ByteView script_code, std::uint32_t hash_type)
{
    if (input >= tx.inputs.size()) throw Error(Errc::invalid_argument, "input index out of range");
    Transaction copy = tx;
    for (auto& in : copy.inputs) in.script_sig.clear();
    copy.inputs[input].script_sig.assign(script_code.begin(), script_code.end());
    ByteWriter w;
    w.raw(copy.serialize());
    w.u32(hash_type);
    return crypto::sha256d(w.buffer());
}

void sign_p2pkh_input(Transaction& tx, std::size_t input, const crypto::PrivateKey& key, ByteView prev_script)
{
    auto pub = key.public_key();
    auto expected = p2pkh_hash(prev_script);
    if (!expected || *expected != crypto::hash160(pub.view()))
        throw Error(Errc::invalid_key, "key does not match the output being spent");
    Bytes sig = key.sign(legacy_sighash(tx, input, prev_script));
    sig.push_back(static_cast<std::uint8_t>(kSighashAll));
    Bytes script;
    push_data(script, sig);
    push_data(script, pub.view());
    tx.inputs[input].script_sig = std::move(script);
}

bool verify_p2pkh_input(const Transaction& tx, std::size_t input, ByteView prev_script)
{
    if (input >= tx.inputs.size()) return false;
    auto expected = p2pkh_hash(prev_script);
    auto pushes = parse_pushes(tx.inputs[input].script_sig);
    if (!expected || !pushes || pushes->size() != 2) return false;
    const Bytes& sig = (*pushes)[0];
    auto pub = crypto::PublicKey::parse((*pushes)[1]);
    if (!pub || sig.empty() || sig.back() != kSighashAll) return false;
    if (crypto::hash160(pub->view()) != *expected) return false;
    ByteView der(sig.data(), sig.size() - 1);
    return pub->verify(legacy_sighash(tx, input, prev_script), der);
}

} // namespace still::chain
