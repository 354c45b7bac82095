#pragma once

#include "still/rates/rates.hpp"
#include "still/rates/sources.hpp"

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace still::rates {

struct RateBookConfig {
    std::vector<CurrencyPair> pairs;
    std::vector<SourceConfig> sources;
    AggregationPolicy policy;
    std::int64_t tolerance_bp = 100;
    std::chrono::milliseconds fetch_timeout = std::chrono::seconds(5);
};

// Latest aggregated snapshot per pair. A background refresher (or explicit
// refresh() calls) replaces snapshots; readers get immutable values.
class RateBook {
public:
    struct Entry {
        std::shared_ptr<const RateSnapshot> snapshot;
        std::vector<SourceError> source_errors;
        Timestamp refreshed_at = 0;
    };

    RateBook(RateBookConfig config, std::shared_ptr<Transport> transport, Clock clock);
    RateBook(const RateBook&) = delete;
    RateBook& operator=(const RateBook&) = delete;
    ~RateBook();

    // Fetches and aggregates every configured pair. A pair whose fetch or
    // aggregation fails keeps its previous snapshot. Returns the number of
    // pairs refreshed.
    std::size_t refresh();
    void refresh(const CurrencyPair& pair);

    // Snapshot usable for pricing a sale at `now`: every contributing quote
    // must still be within the staleness bound. Throws Errc::stale_rates,
    // Errc::unsupported_pair.
    std::shared_ptr<const RateSnapshot> current(const CurrencyPair& pair) const;
    // Latest snapshot regardless of age, plus per-source errors.
    std::optional<Entry> latest(const CurrencyPair& pair) const;

    bool supports(const CurrencyPair& pair) const;
    const RateBookConfig& config() const { return config_; }

    void start(std::chrono::milliseconds interval);
    void stop();

private:
    RateBookConfig config_;
    std::shared_ptr<Transport> transport_;
    Clock clock_;

    mutable std::mutex mutex_;
    std::map<CurrencyPair, Entry> entries_;

    std::mutex worker_mutex_;
    std::condition_variable worker_cv_;
    bool stopping_ = false;
    std::thread worker_;
};

} // namespace still::rates
