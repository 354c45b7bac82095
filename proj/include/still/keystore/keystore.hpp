#pragma once

#include "still/crypto/secp256k1.hpp"
#include "still/keystore/encryption.hpp"
#include "still/keystore/extended_key.hpp"
#include "still/keystore/network.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace still::keystore {

enum class KeystoreMode : std::uint8_t { hot = 0, watch_only = 1 };

std::string_view mode_name(KeystoreMode mode);

struct KeyRecord {
    std::uint32_t derivation_index = 0;
    std::string address;
    crypto::PublicKey public_key;
};

struct AllocatedAddress {
    std::string address;
    std::uint32_t index = 0;
};

struct KeystoreOptions {
    // fdatasync after every appended record.
    bool durable = false;
    KdfCost kdf;
    // Test seam: report these external-chain indices as invalid BIP32
    // children so the skip path can be exercised.
    std::function<bool(std::uint32_t)> treat_as_invalid_child;
};

// Key store file ("STILL1"). Hot mode holds the account node m/0' encrypted
// under the passphrase plus its public half in clear; watch-only mode holds
// an account-level public key only. Sale addresses come from the external
// chain of the account (m/0'/0/i hot, <account>/0/i watch-only) and are
// derived from public data, so no passphrase is needed per sale.
//
// File layout: magic "STILL1", then checksummed records (see RecordFile).
//   record 0 (header): u8 mode | u8 network | account xpub[78]
//                      | hot only: u32 len | EncryptedBlob(account xprv[78])
//   'K' record: u8 'K' | u32 index | pubkey[33] | u8 len | address
//   'S' record: u8 'S' | u32 index   (invalid child, skipped)
class Keystore {
public:
    static constexpr std::string_view kMagic = "STILL1";

    // Derives the account node m/0' from `master`, encrypts it and writes a
    // new store. Throws Errc::store_exists, Errc::empty_passphrase.
    static Keystore create_hot(const std::filesystem::path& path, const ExtendedKey& master,
                               std::string_view passphrase, KeystoreOptions options = {});
    // `account` must be a public extended key.
    static Keystore create_watch_only(const std::filesystem::path& path, const ExtendedKey& account,
                                      KeystoreOptions options = {});
    // Throws Errc::io_error, Errc::store_corrupt. A partial trailing record is
    // discarded.
    static Keystore open(const std::filesystem::path& path, KeystoreOptions options = {});

    Keystore(Keystore&&) noexcept;
    Keystore& operator=(Keystore&&) noexcept;
    ~Keystore();

    KeystoreMode mode() const;
    const Network& network() const;
    const ExtendedKey& account_public() const;
    const std::filesystem::path& path() const;
    bool truncated_on_open() const;

    // Lowest never-used external index. The record is on disk before this
    // returns; concurrent callers are serialized.
    AllocatedAddress next_address();

    std::vector<KeyRecord> records() const;
    std::optional<KeyRecord> record(std::uint32_t index) const;
    std::optional<KeyRecord> find(std::string_view address) const;
    std::vector<std::uint32_t> skipped_indices() const;
    std::uint32_t next_index() const;

    // Hot mode only. Throws Errc::watch_only, Errc::bad_passphrase.
    ExtendedKey unlock_account(std::string_view passphrase) const;
    void verify_passphrase(std::string_view passphrase) const { (void)unlock_account(passphrase); }
    // Additionally throws Errc::unknown_index for indices never handed out.
    crypto::PrivateKey private_key(std::uint32_t index, std::string_view passphrase) const;
    // One KDF run for the whole batch.
    std::vector<crypto::PrivateKey> private_keys(std::span<const std::uint32_t> indices,
                                                 std::string_view passphrase) const;
    std::string export_wif(std::uint32_t index, std::string_view passphrase) const;

private:
    struct Impl;
    explicit Keystore(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

} // namespace still::keystore
