#include "still/core/error.hpp"

namespace still {

std::string_view code_name(Errc code) noexcept
{
    switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::entropy_out_of_range: return "entropy_out_of_range";
    case Errc::invalid_key: return "invalid_key";
    case Errc::invalid_child: return "invalid_child";
    case Errc::hardened_from_public: return "hardened_from_public";
    case Errc::invalid_address: return "invalid_address";
    case Errc::bad_checksum: return "bad_checksum";
    case Errc::bad_passphrase: return "bad_passphrase";
    case Errc::empty_passphrase: return "empty_passphrase";
    case Errc::watch_only: return "watch_only";
    case Errc::unknown_index: return "unknown_index";
    case Errc::store_exists: return "store_exists";
    case Errc::store_corrupt: return "store_corrupt";
    case Errc::io_error: return "io_error";
    case Errc::no_sources: return "no_sources";
    case Errc::all_sources_failed: return "all_sources_failed";
    case Errc::stale_rates: return "stale_rates";
    case Errc::pair_mismatch: return "pair_mismatch";
    case Errc::unsupported_pair: return "unsupported_pair";
    case Errc::sale_too_small: return "sale_too_small";
    case Errc::validation: return "validation";
    case Errc::unknown_sale: return "unknown_sale";
    case Errc::illegal_transition: return "illegal_transition";
    case Errc::unauthorized: return "unauthorized";
    case Errc::forbidden: return "forbidden";
    case Errc::nothing_to_sweep: return "nothing_to_sweep";
    case Errc::dust_output: return "dust_output";
    case Errc::tx_rejected: return "tx_rejected";
    case Errc::unknown_tx: return "unknown_tx";
    case Errc::malformed_tx: return "malformed_tx";
    case Errc::parse_error: return "parse_error";
    case Errc::config_error: return "config_error";
    case Errc::reorg_too_deep: return "reorg_too_deep";
    case Errc::not_found: return "not_found";
    case Errc::address_in_use: return "address_in_use";
    case Errc::not_due: return "not_due";
    case Errc::internal: return "internal";
    }
    return "internal";
}

} // namespace still
