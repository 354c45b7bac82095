#pragma once

#include "still/keystore/network.hpp"
#include "still/payments/events.hpp"

#include <chrono>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>

namespace still::app {

// Esplora-compatible REST client ("/blocks/tip/height", "/address/:a/txs",
// "/tx/:id/hex", "/tx", ...). Watched addresses are polled; differences
// since the previous poll become chain events. Failed polls back off
// exponentially up to `max_backoff`.
class ExplorerSource : public payments::ChainSource {
public:
    struct Options {
        std::string base_url; // e.g. "https://blockstream.info/testnet/api"
        keystore::Network network = keystore::Network::regtest();
        std::chrono::milliseconds timeout = std::chrono::seconds(10);
        std::chrono::milliseconds min_backoff = std::chrono::seconds(5);
        std::chrono::milliseconds max_backoff = std::chrono::seconds(300);
        Clock clock;
    };

    explicit ExplorerSource(Options options);

    void subscribe(Handler handler) override;
    void watch(const std::string& address) override;
    std::int64_t confirmations(const chain::Txid& txid) override;
    std::vector<payments::Utxo> utxos(const std::string& address) override;
    std::int64_t tip_height() override;
    chain::Txid broadcast(const chain::Transaction& tx) override;
    void poll() override;

    std::size_t consecutive_failures() const;
    std::string last_error() const;

private:
    struct Response {
        int status = 0;
        std::string body;
    };
    Response get(const std::string& path) const;
    std::string get_ok(const std::string& path) const;
    void poll_once(std::vector<payments::ChainEvent>& out);
    template <class T>
    payments::ChainEvent event(T kind) const;

    Options options_;
    std::string host_;
    std::string prefix_;

    mutable std::mutex mutex_;
    std::vector<Handler> handlers_;
    std::set<std::string> watched_;
    std::map<std::int64_t, std::string> block_hashes_; // recent heights
    std::unordered_map<chain::Txid, std::int64_t> heights_; // 0 = unconfirmed
    std::int64_t tip_ = -1;

    mutable std::mutex poll_mutex_;
    std::chrono::steady_clock::time_point retry_at_{};
    std::chrono::milliseconds backoff_{0};
    std::size_t failures_ = 0;
    std::string last_error_;
};

} // namespace still::app
