#pragma once

#include "still/core/record_file.hpp"
#include "still/keystore/keystore.hpp"
#include "still/ledger/types.hpp"
#include "still/rates/rates.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace still::ledger {

struct LedgerOptions {
    bool durable = false;
    std::int64_t expiry_seconds = 15 * 60;
    std::string branch_id = "main";
    // "{txid}" is replaced by the display-order txid.
    std::string explorer_template;
    bool allow_reorg_regression = false;
    // A snapshot is written after this many journal records; 0 disables.
    std::size_t snapshot_every = 1000;
    std::int64_t employee_window_seconds = kSecondsPerDay;
};

// What create_sale needs from the outside world.
struct SaleServices {
    std::function<keystore::AllocatedAddress()> allocate_address;
    // Must throw Errc::stale_rates when no fresh snapshot exists.
    std::function<std::shared_ptr<const rates::RateSnapshot>(const rates::CurrencyPair&)> current_rate;
};

struct SaleRequest {
    Cents fiat_cents = 0;
    std::string currency;
    std::string note;
    std::string branch_id; // empty: the ledger's default
};

struct ReportRow {
    std::string sale_id;
    Timestamp created_at = 0;
    std::string note;
    Cents fiat_cents = 0;
    std::string currency;
    Cents locked_rate = 0;
    Sats btc_sats = 0;
    InvoiceState state = InvoiceState::pending;
    std::string address;
    std::string txid;
    std::string explorer_url;
    Sats excess_sats = 0;
    bool reorg_alert = false;
};

struct ReportTotals {
    std::size_t paid_count = 0;
    Sats paid_sats = 0;
    std::map<std::string, Cents> fiat_cents; // per currency
    std::map<std::string, Sats> address_balances;
};

struct Report {
    Role role = Role::admin;
    Timestamp from = 0;
    Timestamp to = 0;
    bool truncated = false;
    std::vector<ReportRow> rows;
    std::optional<ReportTotals> totals; // admin only
};

struct RecoveryInfo {
    std::size_t records = 0;
    std::size_t replayed = 0;
    bool used_snapshot = false;
    bool truncated = false;
    std::uint64_t dropped_bytes = 0;
};

// Sales and payments over an append-only journal.
//
// Journal: RecordFile with magic "STILLJ\x01"; each payload is
//   u8 record type | compact JSON body
// with types C (sale created), S (state change), P (payment upsert),
// H (chain tip), A (reorg alert), W (sweep). A snapshot of the replayed
// state is kept next to the journal as "<journal>.snap" and carries the
// record count and checksum of the last record it covers.
class Ledger {
public:
    Ledger(std::filesystem::path journal, LedgerOptions options, SaleServices services, Clock clock);
    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;
    ~Ledger();

    // Throws validation, stale_rates, sale_too_small, io_error.
    SaleRecord create_sale(const SaleRequest& request);
    // Throws unknown_sale, illegal_transition.
    SaleRecord apply_state(const std::string& sale_id, InvoiceState to, std::optional<chain::Txid> evidence = {},
                           std::optional<Sats> excess_sats = {});
    void upsert_payment(const PaymentRecord& payment);
    void set_tip(std::int64_t height);
    void flag_reorg(const std::string& sale_id, std::optional<chain::Txid> txid);
    void record_sweep(const SweepRecord& sweep);
    void checkpoint();

    std::optional<SaleRecord> sale(const std::string& sale_id) const;
    std::optional<SaleRecord> sale_by_address(const std::string& address) const;
    std::vector<SaleRecord> sales() const;
    std::vector<SaleRecord> open_sales() const;
    std::vector<PaymentRecord> payments(const std::string& sale_id) const;
    std::vector<std::string> sales_for_tx(const chain::Txid& txid) const;
    std::vector<Transition> transitions(const std::string& sale_id) const;
    std::vector<SweepRecord> sweeps() const;
    std::int64_t tip() const;
    std::size_t sale_count() const;
    std::uint64_t journal_records() const;
    const RecoveryInfo& recovery() const { return recovery_; }
    const LedgerOptions& options() const { return options_; }
    const std::filesystem::path& journal_path() const { return path_; }

    // Blocks until the sale's revision exceeds `since` or the timeout
    // passes. Throws unknown_sale.
    SaleRecord wait_for_change(const std::string& sale_id, std::uint64_t since,
                               std::chrono::milliseconds timeout) const;

    // Throws unauthorized for Role::anyone, forbidden for an employee range
    // ending before the visibility window.
    Report report(Timestamp from, Timestamp to, Role role, Timestamp now) const;

    // Deterministic serialization of the full replayed state.
    std::string canonical_state() const;

    static std::filesystem::path snapshot_path(const std::filesystem::path& journal);

    struct State;

private:
    void commit(char type, const std::string& body);
    void write_snapshot_locked();

    std::filesystem::path path_;
    LedgerOptions options_;
    SaleServices services_;
    Clock clock_;
    RecoveryInfo recovery_;

    mutable std::shared_mutex mutex_;
    std::unique_ptr<State> state_;
    std::unique_ptr<RecordFile> file_;
    std::uint32_t last_crc_ = 0;
    std::size_t since_snapshot_ = 0;

    mutable std::mutex change_mutex_;
    mutable std::condition_variable change_cv_;
    std::uint64_t changes_ = 0;
};

std::string explorer_url(const std::string& url_template, const chain::Txid& txid);
// RFC 4180 CSV with a header row.
std::string report_csv(const Report& report);

} // namespace still::ledger
