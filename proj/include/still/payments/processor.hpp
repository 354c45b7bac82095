#pragma once

#include "still/ledger/ledger.hpp"
#include "still/payments/events.hpp"
#include "still/payments/policy.hpp"
#include "still/payments/state_machine.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace still::payments {

// Consumes chain events serially and drives the ledger. Sources only
// enqueue; a single consumer (the worker thread, or the caller of drain())
// runs the state machine, so no two events are ever applied concurrently.
class PaymentProcessor {
public:
    using Logger = std::function<void(const std::string&)>;

    PaymentProcessor(ledger::Ledger& ledger, ChainSource& source, MatchPolicy policy, keystore::Network network,
                     Clock clock);
    PaymentProcessor(const PaymentProcessor&) = delete;
    PaymentProcessor& operator=(const PaymentProcessor&) = delete;
    ~PaymentProcessor();

    // Thread-safe.
    void enqueue(ChainEvent event);
    // Processes everything queued so far on the calling thread.
    std::size_t drain();
    // Expires overdue open sales.
    std::size_t tick();
    // Registers the sale's address with the source.
    void watch(const ledger::SaleRecord& sale);
    void watch_open_sales();

    // Worker thread: polls the source, drains the queue and ticks.
    void start(std::chrono::milliseconds poll_interval);
    void stop();

    std::int64_t tip() const;
    std::size_t ignored_events() const { return ignored_; }
    std::size_t duplicate_events() const { return duplicates_; }
    void set_logger(Logger logger) { logger_ = std::move(logger); }
    const MatchPolicy& policy() const { return policy_; }

private:
    void process(const ChainEvent& event);
    void evaluate(const ChainEvent& event);
    void remember_mined(const BlockMined& block);
    void apply(const ledger::SaleRecord& sale, const EventOutcome& outcome);
    std::vector<std::string> affected_sales(const ChainEvent& event) const;
    void log(const std::string& message) const;

    ledger::Ledger& ledger_;
    ChainSource& source_;
    MatchPolicy policy_;
    keystore::Network network_;
    Clock clock_;
    Logger logger_;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::deque<ChainEvent> queue_;

    std::mutex consume_mutex_;
    std::unordered_set<std::string> seen_;
    // Heights of recently mined txids, so a sighting delivered after its
    // block still counts as mined.
    std::unordered_map<chain::Txid, std::int64_t> mined_at_;
    std::atomic<std::int64_t> tip_{0};
    std::atomic<std::size_t> ignored_{0};
    std::atomic<std::size_t> duplicates_{0};

    std::thread worker_;
    bool stopping_ = false;
};

} // namespace still::payments
