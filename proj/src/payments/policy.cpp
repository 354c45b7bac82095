#include "still/payments/policy.hpp"

#include "still/core/error.hpp"

#include <algorithm>
#include <limits>

namespace still::payments {

std::int64_t MatchPolicy::band_confirmations(Cents fiat_cents) const
{
    for (const auto& band : bands)
        if (fiat_cents <= band.max_fiat_cents) return band.confirmations;
    return bands.empty() ? 1 : bands.back().confirmations;
}

std::int64_t MatchPolicy::confirmed_threshold(Cents fiat_cents) const
{
    return std::max<std::int64_t>(1, band_confirmations(fiat_cents));
}

void MatchPolicy::validate() const
{
    if (bands.empty()) throw Error(Errc::config_error, "at least one confirmation band is required");
    for (std::size_t i = 0; i < bands.size(); ++i) {
        if (bands[i].confirmations < 0) throw Error(Errc::config_error, "band confirmations must be nonnegative");
        if (bands[i].max_fiat_cents <= 0) throw Error(Errc::config_error, "band limits must be positive");
        if (i > 0 && bands[i].max_fiat_cents <= bands[i - 1].max_fiat_cents)
            throw Error(Errc::config_error, "band limits must increase");
        if (i > 0 && bands[i].confirmations < bands[i - 1].confirmations)
            throw Error(Errc::config_error, "band confirmations must not decrease");
    }
    if (bands.back().max_fiat_cents != std::numeric_limits<Cents>::max())
        throw Error(Errc::config_error, "the last band must have no upper limit");
    if (zero_conf_max_fiat_cents <= 0) throw Error(Errc::config_error, "zero-conf limit must be positive");
    if (underpay_tolerance_bp < 0 || underpay_tolerance_bp >= 10'000)
        throw Error(Errc::config_error, "underpay tolerance must be in [0, 10000) basis points");
}

MatchResult classify_total(Sats required, Sats total, std::int64_t tolerance_bp)
{
    MatchResult r;
    r.paid_sats = total;
    if (total <= 0) return r;
    if (total > required) {
        r.kind = MatchKind::over;
        r.excess_sats = total - required;
        return r;
    }
    // ceil(required * (10000 - tol) / 10000)
    __int128 scaled = static_cast<__int128>(required) * (10'000 - tolerance_bp);
    auto lower = static_cast<Sats>((scaled + 9'999) / 10'000);
    r.kind = total >= lower ? MatchKind::exact : MatchKind::under;
    return r;
}

Sats paid_to(const chain::Transaction& tx, const std::string& address, const keystore::Network& network)
{
    Sats total = 0;
    for (const auto& out : tx.outputs) {
        auto addr = chain::address_of(out.script_pubkey, network);
        if (addr && *addr == address) total += out.value;
    }
    return total;
}

MatchResult match_payment(const ledger::SaleRecord& sale, const chain::Transaction& tx,
                          const keystore::Network& network, const MatchPolicy& policy)
{
    return classify_total(sale.btc_sats, paid_to(tx, sale.address, network), policy.underpay_tolerance_bp);
}

} // namespace still::payments
