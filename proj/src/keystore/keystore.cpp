#include "still/keystore/keystore.hpp"

#include "still/core/error.hpp"
#include "still/core/record_file.hpp"
#include "still/keystore/address.hpp"

#include <map>
#include <mutex>
#include <unordered_map>

namespace still::keystore {

using crypto::PrivateKey;
using crypto::PublicKey;

namespace {

constexpr std::uint8_t kKeyRecord = 'K';
constexpr std::uint8_t kSkipRecord = 'S';
constexpr std::uint32_t kExternalChain = 0;

Bytes header_payload(KeystoreMode mode, const ExtendedKey& account_pub, const EncryptedBlob* blob)
{
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(mode));
    w.u8(static_cast<std::uint8_t>(account_pub.network));
    w.raw(account_pub.serialize());
    if (blob) w.bytes32(blob->serialize());
    return w.take();
}

} // namespace

std::string_view mode_name(KeystoreMode mode)
{
    return mode == KeystoreMode::hot ? "hot" : "watch-only";
}

struct Keystore::Impl {
    std::filesystem::path path;
    KeystoreOptions options;
    KeystoreMode mode = KeystoreMode::hot;
    const Network* network = &Network::mainnet();
    std::optional<ExtendedKey> account_pub;
    std::optional<ExtendedKey> external_chain; // account/0, public
    std::optional<EncryptedBlob> account_blob;
    std::optional<RecordFile> file;
    bool truncated = false;

    mutable std::mutex mutex;
    std::map<std::uint32_t, KeyRecord> records;
    std::unordered_map<std::string, std::uint32_t> by_address;
    std::vector<std::uint32_t> skipped;
    std::uint32_t next = 0;

    void init_chain()
    {
        external_chain = derive_child(*account_pub, kExternalChain, false);
    }

    void load_record(ByteView payload)
    {
        ByteReader r(payload);
        std::uint8_t type = r.u8();
        std::uint32_t index = r.u32();
        if (type == kSkipRecord) {
            skipped.push_back(index);
        } else if (type == kKeyRecord) {
            auto pub = PublicKey::parse(r.raw(PublicKey::kSize));
            std::string address = r.str8();
            if (!pub || encode_address(*pub, *network) != address)
                throw Error(Errc::store_corrupt, "key record does not match its address");
            if (records.count(index) || by_address.count(address))
                throw Error(Errc::store_corrupt, "duplicate key record");
            by_address.emplace(address, index);
            records.emplace(index, KeyRecord{index, std::move(address), *pub});
        } else {
            throw Error(Errc::store_corrupt, "unknown key record type");
        }
        if (index >= next) next = index + 1;
    }

    ExtendedKey unlock(std::string_view passphrase) const
    {
        if (mode != KeystoreMode::hot || !account_blob)
            throw Error(Errc::watch_only, "no private material");
        SecretBytes raw = decrypt_secret(*account_blob, passphrase);
        auto account = ExtendedKey::parse(raw.view(), network->tag);
        if (!account.is_private() || account.neuter() != *account_pub)
            throw Error(Errc::store_corrupt, "account key does not match its public half");
        return account;
    }
};

Keystore::Keystore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Keystore::Keystore(Keystore&&) noexcept = default;
Keystore& Keystore::operator=(Keystore&&) noexcept = default;
Keystore::~Keystore() = default;

Keystore Keystore::create_hot(const std::filesystem::path& path, const ExtendedKey& master,
                              std::string_view passphrase, KeystoreOptions options)
{
    if (!master.is_private()) throw Error(Errc::invalid_key, "hot store requires a private master key");
    if (passphrase.empty()) throw Error(Errc::empty_passphrase, "passphrase must not be empty");
    ExtendedKey account = derive_child(master, 0, true);
    Bytes raw = account.serialize();
    EncryptedBlob blob = encrypt_secret(raw, passphrase, options.kdf);
    secure_wipe(raw.data(), raw.size());

    auto impl = std::make_unique<Impl>();
    impl->path = path;
    impl->options = std::move(options);
    impl->mode = KeystoreMode::hot;
    impl->network = &Network::from_tag(master.network);
    impl->account_pub = account.neuter();
    impl->account_blob = std::move(blob);
    impl->init_chain();
    impl->file.emplace(RecordFile::create(path, kMagic, impl->options.durable));
    impl->file->append(header_payload(impl->mode, *impl->account_pub, &*impl->account_blob));
    return Keystore(std::move(impl));
}

Keystore Keystore::create_watch_only(const std::filesystem::path& path, const ExtendedKey& account,
                                     KeystoreOptions options)
{
    if (account.is_private())
        throw Error(Errc::invalid_key, "watch-only store takes a public extended key");
    auto impl = std::make_unique<Impl>();
    impl->path = path;
    impl->options = std::move(options);
    impl->mode = KeystoreMode::watch_only;
    impl->network = &Network::from_tag(account.network);
    impl->account_pub = account;
    impl->init_chain();
    impl->file.emplace(RecordFile::create(path, kMagic, impl->options.durable));
    impl->file->append(header_payload(impl->mode, account, nullptr));
    return Keystore(std::move(impl));
}

Keystore Keystore::open(const std::filesystem::path& path, KeystoreOptions options)
{
    auto scan = RecordFile::scan(path, kMagic);
    if (scan.records.empty()) throw Error(Errc::store_corrupt, "key store has no header");

    auto impl = std::make_unique<Impl>();
    impl->path = path;
    impl->options = std::move(options);
    try {
        ByteReader r(scan.records.front());
        std::uint8_t mode = r.u8();
        std::uint8_t net = r.u8();
        if (mode > 1 || net > 2) throw Error(Errc::store_corrupt, "bad key store header");
        impl->mode = static_cast<KeystoreMode>(mode);
        impl->network = &Network::from_tag(static_cast<NetworkTag>(net));
        impl->account_pub = ExtendedKey::parse(r.raw(78), impl->network->tag);
        if (impl->account_pub->is_private()) throw Error(Errc::store_corrupt, "clear private key in header");
        if (impl->mode == KeystoreMode::hot) impl->account_blob = EncryptedBlob::parse(r.bytes32());
        if (!r.done()) throw Error(Errc::store_corrupt, "trailing header bytes");
        impl->init_chain();
        for (std::size_t i = 1; i < scan.records.size(); ++i) impl->load_record(scan.records[i]);
    } catch (const Error& e) {
        if (e.code() == Errc::store_corrupt) throw;
        throw Error(Errc::store_corrupt, "malformed key store");
    }
    impl->truncated = scan.truncated();
    impl->file.emplace(RecordFile::open_append(path, scan.valid_end, impl->options.durable));
    return Keystore(std::move(impl));
}

KeystoreMode Keystore::mode() const { return impl_->mode; }
const Network& Keystore::network() const { return *impl_->network; }
const ExtendedKey& Keystore::account_public() const { return *impl_->account_pub; }
const std::filesystem::path& Keystore::path() const { return impl_->path; }
bool Keystore::truncated_on_open() const { return impl_->truncated; }

AllocatedAddress Keystore::next_address()
{
    std::lock_guard lock(impl_->mutex);
    for (;;) {
        std::uint32_t index = impl_->next;
        if (index >= kHardenedBit) throw Error(Errc::invalid_argument, "external chain exhausted");
        std::optional<ExtendedKey> child;
        bool invalid = impl_->options.treat_as_invalid_child && impl_->options.treat_as_invalid_child(index);
        if (!invalid) {
            try {
                child = derive_child(*impl_->external_chain, index, false);
            } catch (const Error& e) {
                if (e.code() != Errc::invalid_child) throw;
                invalid = true;
            }
        }
        if (invalid) {
            ByteWriter w;
            w.u8(kSkipRecord);
            w.u32(index);
            impl_->file->append(w.buffer());
            impl_->skipped.push_back(index);
            impl_->next = index + 1;
            continue;
        }

        PublicKey pub = child->public_key();
        std::string address = encode_address(pub, *impl_->network);
        ByteWriter w;
        w.u8(kKeyRecord);
        w.u32(index);
        w.raw(pub.view());
        w.str8(address);
        impl_->file->append(w.buffer());

        impl_->next = index + 1;
        impl_->by_address.emplace(address, index);
        impl_->records.emplace(index, KeyRecord{index, address, pub});
        return {std::move(address), index};
    }
}

std::vector<KeyRecord> Keystore::records() const
{
    std::lock_guard lock(impl_->mutex);
    std::vector<KeyRecord> out;
    out.reserve(impl_->records.size());
    for (const auto& [_, rec] : impl_->records) out.push_back(rec);
    return out;
}

std::optional<KeyRecord> Keystore::record(std::uint32_t index) const
{
    std::lock_guard lock(impl_->mutex);
    auto it = impl_->records.find(index);
    if (it == impl_->records.end()) return std::nullopt;
    return it->second;
}

std::optional<KeyRecord> Keystore::find(std::string_view address) const
{
    std::lock_guard lock(impl_->mutex);
    auto it = impl_->by_address.find(std::string(address));
    if (it == impl_->by_address.end()) return std::nullopt;
    return impl_->records.at(it->second);
}

std::vector<std::uint32_t> Keystore::skipped_indices() const
{
    std::lock_guard lock(impl_->mutex);
    return impl_->skipped;
}

std::uint32_t Keystore::next_index() const
{
    std::lock_guard lock(impl_->mutex);
    return impl_->next;
}

ExtendedKey Keystore::unlock_account(std::string_view passphrase) const
{
    return impl_->unlock(passphrase);
}

std::vector<PrivateKey> Keystore::private_keys(std::span<const std::uint32_t> indices,
                                               std::string_view passphrase) const
{
    if (impl_->mode != KeystoreMode::hot) throw Error(Errc::watch_only, "no private material");
    for (auto index : indices)
        if (!record(index)) throw Error(Errc::unknown_index, "unknown key index " + std::to_string(index));
    ExtendedKey account = impl_->unlock(passphrase);
    ExtendedKey chain = derive_child(account, kExternalChain, false);
    std::vector<PrivateKey> out;
    out.reserve(indices.size());
    for (auto index : indices) out.push_back(derive_child(chain, index, false).private_key());
    return out;
}

PrivateKey Keystore::private_key(std::uint32_t index, std::string_view passphrase) const
{
    return private_keys(std::span<const std::uint32_t>(&index, 1), passphrase).front();
}

std::string Keystore::export_wif(std::uint32_t index, std::string_view passphrase) const
{
    return encode_wif(private_key(index, passphrase), *impl_->network);
}

} // namespace still::keystore
