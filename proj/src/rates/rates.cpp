#include "still/rates/rates.hpp"

#include "still/core/error.hpp"

#include <algorithm>
#include <cctype>

namespace still::rates {

namespace {

bool is_currency_code(std::string_view s)
{
    return s.size() == 3 && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

std::string upper(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

} // namespace

CurrencyPair CurrencyPair::parse(std::string_view text)
{
    std::string t = upper(text);
    CurrencyPair p;
    if (auto dash = t.find('-'); dash != std::string::npos) {
        p.crypto = t.substr(0, dash);
        p.fiat = t.substr(dash + 1);
    } else {
        p.fiat = t;
    }
    if (p.crypto != "BTC" || !is_currency_code(p.fiat))
        throw Error(Errc::unsupported_pair, "unsupported currency pair");
    return p;
}

std::int64_t RateSnapshot::age(Timestamp now) const
{
    Timestamp oldest = computed_at;
    for (const auto& q : contributing) oldest = std::min(oldest, q.fetched_at);
    return now - oldest;
}

RateSnapshot aggregate(std::span<const RateQuote> quotes, Timestamp now, const AggregationPolicy& policy)
{
    std::vector<RateQuote> fresh;
    for (const auto& q : quotes) {
        if (!fresh.empty() && !(q.pair == fresh.front().pair))
            throw Error(Errc::pair_mismatch, "quotes for different pairs");
        if (q.price <= 0 || q.fetched_at > now || now - q.fetched_at > policy.staleness_seconds) continue;
        fresh.push_back(q);
    }
    if (fresh.size() < std::max<std::size_t>(policy.quorum, 1))
        throw Error(Errc::stale_rates, "not enough fresh exchange-rate quotes");

    std::vector<Cents> prices;
    prices.reserve(fresh.size());
    for (const auto& q : fresh) prices.push_back(q.price);
    std::sort(prices.begin(), prices.end());

    RateSnapshot snap;
    snap.pair = fresh.front().pair;
    snap.aggregate_price = prices[(prices.size() - 1) / 2];
    snap.contributing = std::move(fresh);
    snap.computed_at = now;
    return snap;
}

AssertionCheck verify_assertion(const RateQuote& candidate, const RateSnapshot& snapshot, std::int64_t tolerance_bp)
{
    if (!(candidate.pair == snapshot.pair)) throw Error(Errc::pair_mismatch, "candidate pair differs from snapshot");
    if (tolerance_bp < 0) throw Error(Errc::validation, "negative tolerance");
    AssertionCheck out;
    __int128 diff = static_cast<__int128>(candidate.price) - snapshot.aggregate_price;
    if (diff < 0) diff = -diff;
    out.deviation = static_cast<Cents>(diff);
    out.allowed = static_cast<Cents>(static_cast<__int128>(tolerance_bp) * snapshot.aggregate_price / 10'000);
    out.ok = diff * 10'000 <= static_cast<__int128>(tolerance_bp) * snapshot.aggregate_price;
    return out;
}

Sats convert(Cents fiat_cents, Cents rate)
{
    if (fiat_cents <= 0) throw Error(Errc::validation, "amount must be positive");
    if (rate <= 0) throw Error(Errc::validation, "rate must be positive");
    __int128 num = static_cast<__int128>(fiat_cents) * kSatsPerCoin;
    __int128 q = num / rate;
    __int128 r = num % rate;
    if (2 * r >= rate) ++q;
    if (q > static_cast<__int128>(21'000'000) * kSatsPerCoin) throw Error(Errc::validation, "amount out of range");
    if (q < kDustLimit) throw Error(Errc::sale_too_small, "sale amount is below the dust limit");
    return static_cast<Sats>(q);
}

Cents parse_price(std::string_view text, std::string_view expected_fiat)
{
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (auto space = text.find(' '); space != std::string_view::npos) {
        std::string code = upper(text.substr(space + 1));
        while (!code.empty() && code.front() == ' ') code.erase(code.begin());
        if (code != upper(expected_fiat)) throw Error(Errc::parse_error, "price quoted in a different currency");
        text = text.substr(0, space);
    }
    std::string cleaned;
    for (char c : text)
        if (c != ',') cleaned.push_back(c);
    Cents v = parse_cents(cleaned);
    if (v <= 0) throw Error(Errc::parse_error, "price must be positive");
    return v;
}

} // namespace still::rates
