#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace still {

// Machine-readable failure categories. Every error surfaced by the library
// carries one of these; the HTTP layer and the CLI map them to status and
// exit codes.
enum class Errc {
    invalid_argument,
    entropy_out_of_range,
    invalid_key,
    invalid_child,
    hardened_from_public,
    invalid_address,
    bad_checksum,
    bad_passphrase,
    empty_passphrase,
    watch_only,
    unknown_index,
    store_exists,
    store_corrupt,
    io_error,
    no_sources,
    all_sources_failed,
    stale_rates,
    pair_mismatch,
    unsupported_pair,
    sale_too_small,
    validation,
    unknown_sale,
    illegal_transition,
    unauthorized,
    forbidden,
    nothing_to_sweep,
    dust_output,
    tx_rejected,
    unknown_tx,
    malformed_tx,
    parse_error,
    config_error,
    reorg_too_deep,
    not_found,
    address_in_use,
    not_due,
    internal,
};

std::string_view code_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }
    std::string_view code_name() const noexcept { return still::code_name(code_); }

private:
    Errc code_;
};

} // namespace still
