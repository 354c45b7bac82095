#include "still/rates/rate_book.hpp"

#include "still/core/error.hpp"

#include <algorithm>

namespace still::rates {

RateBook::RateBook(RateBookConfig config, std::shared_ptr<Transport> transport, Clock clock)
    : config_(std::move(config)), transport_(std::move(transport)), clock_(std::move(clock)) {}

RateBook::~RateBook()
{
    stop();
}

bool RateBook::supports(const CurrencyPair& pair) const
{
    return std::find(config_.pairs.begin(), config_.pairs.end(), pair) != config_.pairs.end();
}

void RateBook::refresh(const CurrencyPair& pair)
{
    if (!supports(pair)) throw Error(Errc::unsupported_pair, "unsupported currency pair");
    FetchResult fetched;
    try {
        fetched = fetch_quotes(config_.sources, pair, *transport_, clock_, config_.fetch_timeout);
    } catch (const Error& e) {
        std::lock_guard lock(mutex_);
        auto& entry = entries_[pair];
        entry.source_errors = {{"*", e.what()}};
        entry.refreshed_at = clock_();
        throw;
    }
    auto snapshot = std::make_shared<const RateSnapshot>(aggregate(fetched.quotes, clock_(), config_.policy));
    std::lock_guard lock(mutex_);
    auto& entry = entries_[pair];
    entry.snapshot = std::move(snapshot);
    entry.source_errors = std::move(fetched.errors);
    entry.refreshed_at = clock_();
}

std::size_t RateBook::refresh()
{
    std::size_t ok = 0;
    for (const auto& pair : config_.pairs) {
        try {
            refresh(pair);
            ++ok;
        } catch (const Error&) {
        }
    }
    return ok;
}

std::shared_ptr<const RateSnapshot> RateBook::current(const CurrencyPair& pair) const
{
    if (!supports(pair)) throw Error(Errc::unsupported_pair, "unsupported currency pair");
    std::shared_ptr<const RateSnapshot> snap;
    {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(pair);
        if (it != entries_.end()) snap = it->second.snapshot;
    }
    if (!snap) throw Error(Errc::stale_rates, "no exchange rate available");
    // Re-check freshness against the clock now, not at aggregation time.
    aggregate(snap->contributing, clock_(), config_.policy);
    return snap;
}

std::optional<RateBook::Entry> RateBook::latest(const CurrencyPair& pair) const
{
    std::lock_guard lock(mutex_);
    auto it = entries_.find(pair);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void RateBook::start(std::chrono::milliseconds interval)
{
    stop();
    {
        std::lock_guard lock(worker_mutex_);
        stopping_ = false;
    }
    worker_ = std::thread([this, interval] {
        std::unique_lock lock(worker_mutex_);
        while (!stopping_) {
            lock.unlock();
            refresh();
            lock.lock();
            worker_cv_.wait_for(lock, interval, [this] { return stopping_; });
        }
    });
}

void RateBook::stop()
{
    {
        std::lock_guard lock(worker_mutex_);
        stopping_ = true;
    }
    worker_cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

} // namespace still::rates
