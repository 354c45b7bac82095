#pragma once

#include "still/core/money.hpp"
#include "still/payments/policy.hpp"
#include "still/rates/rate_book.hpp"
#include "still/treasury/treasury.hpp"

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace still::app {

struct BranchConfig {
    std::string branch_id = "main";
    std::string display_name = "Still";
    std::string default_currency = "USD";
    Cents zero_conf_max_fiat_cents = 5'000;
    Cents cashout_threshold_cents = 10'000;
    std::int64_t cashout_interval_days = 30;
    std::string cashout_destination;
};

struct AuthConfig {
    std::vector<std::string> employee_tokens;
    std::vector<std::string> admin_tokens;
    // Lets an unauthenticated kiosk create sales.
    bool public_sales = false;
};

enum class ChainKind { simnode, explorer };

struct ChainConfig {
    ChainKind kind = ChainKind::simnode;
    std::string explorer_api;
    std::chrono::milliseconds poll_interval = std::chrono::seconds(5);
};

struct Config {
    std::filesystem::path source; // file the config was read from, if any
    std::string bind_host = "127.0.0.1";
    int bind_port = 8080;
    std::chrono::seconds long_poll_max{25};
    std::string network = "regtest";
    std::filesystem::path keystore_path = "keys.still";
    std::filesystem::path journal_path = "ledger.journal";
    bool durable = false;
    std::size_t snapshot_every = 1000;
    std::string explorer_template = "{txid}";
    std::int64_t expiry_seconds = 900;
    std::int64_t employee_window_seconds = kSecondsPerDay;
    BranchConfig branch;
    payments::MatchPolicy policy;
    std::int64_t sweep_min_confirmations = 1;
    rates::RateBookConfig rates;
    std::chrono::milliseconds rate_refresh = std::chrono::seconds(30);
    AuthConfig auth;
    ChainConfig chain;

    treasury::CashOutPolicy cashout_policy() const;
    // Throws config_error.
    void validate() const;
};

// Relative paths (keystore, journal, file:// rate sources) resolve against
// `base_dir`. Errors carry "<name>:<line>:<column>: " prefixes.
Config parse_config(const std::string& text, const std::filesystem::path& base_dir,
                    const std::string& name = "config");
Config load_config(const std::filesystem::path& path);

// STILL_BIND=host:port overrides the bind address.
void apply_env_overrides(Config& config);

// "host:port"; throws config_error.
std::pair<std::string, int> parse_bind(const std::string& text);

} // namespace still::app
