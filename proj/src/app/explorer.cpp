#include "still/app/explorer.hpp"

#include "still/core/bytes.hpp"
#include "still/core/error.hpp"

#include <algorithm>
#include <httplib.h>
#include <json.hpp>

namespace still::app {

using json = nlohmann::json;

namespace {

crypto::Hash256 block_hash_from_hex(const std::string& hex)
{
    Bytes b = from_hex(hex);
    if (b.size() != 32) throw Error(Errc::parse_error, "bad block hash");
    std::reverse(b.begin(), b.end());
    return to_array<32>(b);
}

std::int64_t parse_int(const std::string& text)
{
    try {
        std::size_t used = 0;
        auto v = std::stoll(text, &used);
        while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
        if (used != text.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw Error(Errc::parse_error, "explorer returned a malformed number");
    }
}

std::string trim(std::string s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

} // namespace

ExplorerSource::ExplorerSource(Options options) : options_(std::move(options))
{
    if (!options_.clock) options_.clock = system_clock();
    // Split "scheme://host[:port]/prefix".
    auto scheme_end = options_.base_url.find("://");
    if (scheme_end == std::string::npos) throw Error(Errc::config_error, "explorer URL needs a scheme");
    auto path_start = options_.base_url.find('/', scheme_end + 3);
    host_ = options_.base_url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : options_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

template <class T>
payments::ChainEvent ExplorerSource::event(T kind) const
{
    return payments::ChainEvent{std::move(kind), options_.clock()};
}

ExplorerSource::Response ExplorerSource::get(const std::string& path) const
{
    httplib::Client cli(host_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    auto res = cli.Get(prefix_ + path);
    if (!res) throw Error(Errc::io_error, "explorer unreachable: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

std::string ExplorerSource::get_ok(const std::string& path) const
{
    auto r = get(path);
    if (r.status != 200) throw Error(Errc::io_error, "explorer returned HTTP " + std::to_string(r.status));
    return r.body;
}

void ExplorerSource::subscribe(Handler handler)
{
    std::lock_guard lk(mutex_);
    handlers_.push_back(std::move(handler));
}

void ExplorerSource::watch(const std::string& address)
{
    std::lock_guard lk(mutex_);
    watched_.insert(address);
}

std::int64_t ExplorerSource::confirmations(const chain::Txid& txid)
{
    auto r = get("/tx/" + txid.hex() + "/status");
    if (r.status == 404) throw Error(Errc::unknown_tx, "unknown transaction");
    if (r.status != 200) throw Error(Errc::io_error, "explorer returned HTTP " + std::to_string(r.status));
    auto j = json::parse(r.body, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::parse_error, "explorer returned malformed status");
    if (!j.value("confirmed", false)) return 0;
    auto tip = tip_height();
    return std::max<std::int64_t>(0, tip - j.at("block_height").get<std::int64_t>() + 1);
}

std::vector<payments::Utxo> ExplorerSource::utxos(const std::string& address)
{
    Bytes script = chain::script_for_address(address, options_.network);
    auto j = json::parse(get_ok("/address/" + address + "/utxo"), nullptr, false);
    if (!j.is_array()) throw Error(Errc::parse_error, "explorer returned malformed utxos");
    std::vector<payments::Utxo> out;
    for (const auto& u : j) {
        payments::Utxo utxo;
        utxo.outpoint.txid = chain::Txid::from_hex(u.at("txid").get<std::string>());
        utxo.outpoint.vout = u.at("vout").get<std::uint32_t>();
        utxo.value = u.at("value").get<Sats>();
        utxo.script_pubkey = script;
        const auto& st = u.at("status");
        utxo.height = st.value("confirmed", false) ? st.at("block_height").get<std::int64_t>() : 0;
        out.push_back(std::move(utxo));
    }
    return out;
}

std::int64_t ExplorerSource::tip_height()
{
    auto h = parse_int(get_ok("/blocks/tip/height"));
    std::lock_guard lk(mutex_);
    tip_ = std::max(tip_, h);
    return h;
}

chain::Txid ExplorerSource::broadcast(const chain::Transaction& tx)
{
    httplib::Client cli(host_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    cli.set_connection_timeout(secs.count(), 0);
    cli.set_read_timeout(secs.count(), 0);
    auto res = cli.Post(prefix_ + "/tx", tx.to_hex(), "text/plain");
    if (!res) throw Error(Errc::io_error, "explorer unreachable");
    if (res->status != 200) throw Error(Errc::tx_rejected, "transaction rejected by the explorer");
    auto txid = tx.txid();
    if (trim(res->body) != txid.hex()) throw Error(Errc::tx_rejected, "explorer returned a different txid");
    return txid;
}

void ExplorerSource::poll()
{
    std::lock_guard poll_lk(poll_mutex_);
    auto now = std::chrono::steady_clock::now();
    if (now < retry_at_) return;
    std::vector<payments::ChainEvent> events;
    try {
        poll_once(events);
        failures_ = 0;
        backoff_ = std::chrono::milliseconds(0);
        last_error_.clear();
    } catch (const std::exception& e) {
        ++failures_;
        backoff_ = backoff_.count() == 0 ? options_.min_backoff : std::min(options_.max_backoff, backoff_ * 2);
        retry_at_ = now + backoff_;
        last_error_ = e.what();
        throw;
    }
    std::vector<Handler> handlers;
    {
        std::lock_guard lk(mutex_);
        handlers = handlers_;
    }
    for (const auto& e : events)
        for (const auto& h : handlers) h(e);
}

void ExplorerSource::poll_once(std::vector<payments::ChainEvent>& out)
{
    // Everything is fetched before any state changes so a failed poll can
    // simply be retried.
    auto tip = parse_int(get_ok("/blocks/tip/height"));
    auto tip_hash = trim(get_ok("/blocks/tip/hash"));

    std::map<std::int64_t, std::string> known;
    std::set<std::string> watched;
    std::unordered_map<chain::Txid, std::int64_t> heights;
    {
        std::lock_guard lk(mutex_);
        known = block_hashes_;
        watched = watched_;
        heights = heights_;
    }

    // Fork point: highest remembered block still on the active chain.
    std::optional<std::int64_t> fork;
    for (auto it = known.rbegin(); it != known.rend(); ++it) {
        if (it->first > tip) continue;
        auto hash = it->first == tip ? tip_hash : trim(get_ok("/block-height/" + std::to_string(it->first)));
        if (hash == it->second) break;
        fork = it->first - 1;
    }
    if (!known.empty() && tip < known.rbegin()->first) fork = std::min(fork.value_or(tip), tip);
    if (fork) {
        out.push_back(event(payments::Reorg{*fork, block_hash_from_hex(trim(get_ok("/block-height/" + std::to_string(*fork))))}));
        for (auto& [id, h] : heights)
            if (h > *fork) h = 0;
        known.erase(known.upper_bound(*fork), known.end());
    }

    std::map<std::int64_t, std::vector<chain::Txid>> mined;
    std::set<chain::Txid> listed;
    for (const auto& addr : watched) {
        auto j = json::parse(get_ok("/address/" + addr + "/txs"), nullptr, false);
        if (!j.is_array()) throw Error(Errc::parse_error, "explorer returned malformed history");
        for (const auto& t : j) {
            auto txid = chain::Txid::from_hex(t.at("txid").get<std::string>());
            listed.insert(txid);
            const auto& st = t.at("status");
            std::int64_t h = st.value("confirmed", false) ? st.at("block_height").get<std::int64_t>() : 0;
            auto it = heights.find(txid);
            if (it == heights.end()) {
                auto tx = chain::Transaction::from_hex(trim(get_ok("/tx/" + txid.hex() + "/hex")));
                if (tx.txid() != txid) throw Error(Errc::parse_error, "explorer returned a mismatched transaction");
                out.push_back(event(payments::TxSeen{std::move(tx), h}));
                heights[txid] = h;
                if (h > 0) mined[h].push_back(txid);
            } else if (it->second != h) {
                it->second = h;
                if (h > 0) mined[h].push_back(txid);
            }
        }
    }
    // Unconfirmed transactions that dropped out of every listing and are no
    // longer known were replaced.
    for (auto it = heights.begin(); it != heights.end();) {
        if (it->second == 0 && !listed.count(it->first) && get("/tx/" + it->first.hex() + "/status").status == 404) {
            out.push_back(event(payments::Conflict{it->first, chain::Txid{}}));
            it = heights.erase(it);
        } else {
            ++it;
        }
    }

    for (auto& [h, txids] : mined) {
        auto hash = h == tip ? tip_hash : trim(get_ok("/block-height/" + std::to_string(h)));
        known[h] = hash;
        out.push_back(event(payments::BlockMined{h, block_hash_from_hex(hash), std::move(txids)}));
    }
    if (mined.empty() || mined.rbegin()->first != tip)
        out.push_back(event(payments::BlockMined{tip, block_hash_from_hex(tip_hash), {}}));

    known[tip] = tip_hash;
    while (known.size() > 12) known.erase(known.begin());
    std::lock_guard lk(mutex_);
    block_hashes_ = std::move(known);
    heights_ = std::move(heights);
    tip_ = tip;
}

std::size_t ExplorerSource::consecutive_failures() const
{
    std::lock_guard lk(poll_mutex_);
    return failures_;
}

std::string ExplorerSource::last_error() const
{
    std::lock_guard lk(poll_mutex_);
    return last_error_;
}

} // namespace still::app
