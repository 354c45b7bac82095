#include "still/payments/processor.hpp"

#include "still/core/error.hpp"
#include "still/payments/state_machine.hpp"

#include <algorithm>
#include <set>

namespace still::payments {

PaymentProcessor::PaymentProcessor(ledger::Ledger& ledger, ChainSource& source, MatchPolicy policy,
                                   keystore::Network network, Clock clock)
    : ledger_(ledger),
      source_(source),
      policy_(std::move(policy)),
      network_(network),
      clock_(std::move(clock))
{
    policy_.validate();
    tip_ = ledger_.tip();
    source_.subscribe([this](const ChainEvent& e) { enqueue(e); });
}

PaymentProcessor::~PaymentProcessor()
{
    stop();
}

void PaymentProcessor::log(const std::string& message) const
{
    if (logger_) logger_(message);
}

void PaymentProcessor::enqueue(ChainEvent event)
{
    {
        std::lock_guard lk(queue_mutex_);
        queue_.push_back(std::move(event));
    }
    queue_cv_.notify_all();
}

std::size_t PaymentProcessor::drain()
{
    std::lock_guard consume(consume_mutex_);
    std::size_t n = 0;
    for (;;) {
        ChainEvent event;
        {
            std::lock_guard lk(queue_mutex_);
            if (queue_.empty()) break;
            event = std::move(queue_.front());
            queue_.pop_front();
        }
        process(event);
        ++n;
    }
    return n;
}

void PaymentProcessor::watch(const ledger::SaleRecord& sale)
{
    source_.watch(sale.address);
}

void PaymentProcessor::watch_open_sales()
{
    for (const auto& s : ledger_.sales())
        if (ledger::is_open(s.state) || s.state == ledger::InvoiceState::paid_0conf ||
            s.state == ledger::InvoiceState::expired)
            source_.watch(s.address);
}

std::int64_t PaymentProcessor::tip() const
{
    return tip_;
}

std::vector<std::string> PaymentProcessor::affected_sales(const ChainEvent& event) const
{
    std::set<std::string> ids;
    if (const auto* e = std::get_if<TxSeen>(&event.kind)) {
        for (const auto& out : e->tx.outputs) {
            auto addr = chain::address_of(out.script_pubkey, network_);
            if (!addr) continue;
            if (auto sale = ledger_.sale_by_address(*addr)) ids.insert(sale->sale_id);
        }
    } else if (const auto* e = std::get_if<Conflict>(&event.kind)) {
        for (auto& id : ledger_.sales_for_tx(e->txid)) ids.insert(id);
    } else {
        // Blocks and reorgs move confirmation counts of every mined or
        // waiting payment, not only those named in the event.
        for (const auto& s : ledger_.sales()) {
            if (s.state == ledger::InvoiceState::late_paid || s.state == ledger::InvoiceState::double_spent) continue;
            if (!ledger_.payments(s.sale_id).empty()) ids.insert(s.sale_id);
        }
    }
    return {ids.begin(), ids.end()};
}

void PaymentProcessor::apply(const ledger::SaleRecord& sale, const EventOutcome& outcome)
{
    for (const auto& p : outcome.payment_updates) ledger_.upsert_payment(p);
    if (outcome.transitions.empty()) {
        if (outcome.evidence || outcome.excess_sats)
            ledger_.apply_state(sale.sale_id, sale.state, outcome.evidence, outcome.excess_sats);
    } else {
        for (std::size_t i = 0; i < outcome.transitions.size(); ++i) {
            bool last = i + 1 == outcome.transitions.size();
            auto to = outcome.transitions[i];
            auto updated = ledger_.apply_state(sale.sale_id, to, last ? outcome.evidence : std::nullopt,
                                               last ? outcome.excess_sats : std::nullopt);
            log("sale " + sale.sale_id + " -> " + std::string(ledger::state_name(updated.state)));
        }
    }
    if (outcome.reorg_alert) {
        ledger_.flag_reorg(sale.sale_id, sale.evidence_txid);
        log("sale " + sale.sale_id + " reorg alert");
    }
}

void PaymentProcessor::process(const ChainEvent& event)
{
    if (const auto* r = std::get_if<Reorg>(&event.kind)) {
        if (!seen_.insert(event_key(event)).second) {
            ++duplicates_;
            return;
        }
        // Keys from the detached branch must not shadow re-delivered events.
        std::erase_if(seen_, [](const std::string& k) { return k.rfind("R:", 0) != 0; });
        std::erase_if(mined_at_, [&](const auto& m) { return m.second > r->new_height; });
        tip_ = r->new_height;
        ledger_.set_tip(r->new_height);
    } else if (!seen_.insert(event_key(event)).second) {
        ++duplicates_;
        return;
    } else if (const auto* b = std::get_if<BlockMined>(&event.kind)) {
        tip_ = std::max<std::int64_t>(tip_, b->height);
        ledger_.set_tip(tip_);
        remember_mined(*b);
    }

    if (const auto* seen = std::get_if<TxSeen>(&event.kind); seen && seen->block_height == 0) {
        auto it = mined_at_.find(seen->tx.txid());
        if (it != mined_at_.end()) {
            ChainEvent mined = event;
            std::get<TxSeen>(mined.kind).block_height = it->second;
            return evaluate(mined);
        }
    }
    evaluate(event);
}

void PaymentProcessor::remember_mined(const BlockMined& block)
{
    constexpr std::size_t kMaxRemembered = 50'000;
    constexpr std::int64_t kKeepBlocks = 144;
    for (const auto& txid : block.txids) mined_at_[txid] = block.height;
    if (mined_at_.size() > kMaxRemembered) {
        std::int64_t floor = tip_ - kKeepBlocks;
        std::erase_if(mined_at_, [&](const auto& m) { return m.second < floor; });
    }
}

void PaymentProcessor::evaluate(const ChainEvent& event)
{
    auto ids = affected_sales(event);
    if (ids.empty()) {
        if (std::holds_alternative<TxSeen>(event.kind)) {
            ++ignored_;
            log("ignored " + describe(event) + ": no watched address");
        }
        return;
    }
    for (const auto& id : ids) {
        auto sale = ledger_.sale(id);
        if (!sale) continue;
        SaleTrack track{*sale, ledger_.payments(id)};
        auto outcome = on_event(track, event, policy_, network_, tip_);
        if (outcome.empty() && !outcome.evidence) continue;
        try {
            apply(*sale, outcome);
        } catch (const Error& e) {
            log("sale " + id + ": " + e.what());
        }
    }
}

std::size_t PaymentProcessor::tick()
{
    std::lock_guard consume(consume_mutex_);
    Timestamp now = clock_();
    std::size_t expired = 0;
    for (const auto& sale : ledger_.open_sales()) {
        if (now < sale.expires_at) continue;
        SaleTrack track{sale, ledger_.payments(sale.sale_id)};
        auto outcome = on_tick(track, policy_, now, tip_);
        if (outcome.transitions.empty()) continue;
        apply(sale, outcome);
        ++expired;
    }
    return expired;
}

void PaymentProcessor::start(std::chrono::milliseconds poll_interval)
{
    if (worker_.joinable()) return;
    stopping_ = false;
    worker_ = std::thread([this, poll_interval] {
        auto next_poll = std::chrono::steady_clock::now();
        for (;;) {
            {
                std::unique_lock lk(queue_mutex_);
                queue_cv_.wait_until(lk, next_poll, [&] { return stopping_ || !queue_.empty(); });
                if (stopping_) return;
            }
            if (std::chrono::steady_clock::now() >= next_poll) {
                try {
                    source_.poll();
                } catch (const std::exception& e) {
                    log(std::string("chain source poll failed: ") + e.what());
                }
                next_poll = std::chrono::steady_clock::now() + poll_interval;
                tick();
            }
            drain();
        }
    });
}

void PaymentProcessor::stop()
{
    {
        std::lock_guard lk(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

} // namespace still::payments
