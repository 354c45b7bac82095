#include "still/app/stack.hpp"

#include "still/app/explorer.hpp"
#include "still/core/error.hpp"

namespace still::app {

ledger::LedgerOptions ledger_options(const Config& config)
{
    ledger::LedgerOptions o;
    o.durable = config.durable;
    o.expiry_seconds = config.expiry_seconds;
    o.branch_id = config.branch.branch_id;
    o.explorer_template = config.explorer_template;
    o.allow_reorg_regression = config.policy.allow_reorg_regression;
    o.snapshot_every = config.snapshot_every;
    o.employee_window_seconds = config.employee_window_seconds;
    return o;
}

Stack::Stack(Config config, StackOptions options)
    : config_(std::move(config)), clock_(options.clock ? options.clock : system_clock()),
      network_(&keystore::Network::from_name(config_.network))
{
    config_.validate();
    keys_ = std::make_unique<keystore::Keystore>(
        keystore::Keystore::open(config_.keystore_path, keystore::KeystoreOptions{config_.durable, {}, {}}));
    if (keys_->network() != *network_)
        throw Error(Errc::config_error, "keystore network does not match the configured network");

    auto transport = options.transport ? options.transport
                                       : std::shared_ptr<rates::Transport>(rates::make_default_transport());
    rates_ = std::make_unique<rates::RateBook>(config_.rates, transport, clock_);

    ledger::SaleServices services;
    services.allocate_address = [this] { return keys_->next_address(); };
    services.current_rate = [this](const rates::CurrencyPair& pair) { return rates_->current(pair); };
    ledger_ = std::make_unique<ledger::Ledger>(config_.journal_path, ledger_options(config_), services, clock_);

    if (config_.chain.kind == ChainKind::simnode) {
        auto opts = options.simnode;
        opts.network = *network_;
        if (!opts.clock) opts.clock = clock_;
        auto node = std::make_unique<simnode::SimNode>(opts);
        simnode_ = node.get();
        chain_ = std::move(node);
    } else {
        ExplorerSource::Options opts;
        opts.base_url = config_.chain.explorer_api;
        opts.network = *network_;
        opts.min_backoff = config_.chain.poll_interval;
        opts.clock = clock_;
        chain_ = std::make_unique<ExplorerSource>(opts);
    }

    processor_ = std::make_unique<payments::PaymentProcessor>(*ledger_, *chain_, config_.policy, *network_, clock_);
    treasury_ = std::make_unique<treasury::Treasury>(*ledger_, *keys_, *chain_, config_.cashout_policy(), clock_);
}

Stack::~Stack()
{
    stop();
}

void Stack::start()
{
    if (started_) return;
    started_ = true;
    rates_->refresh();
    rates_->start(config_.rate_refresh);
    processor_->watch_open_sales();
    processor_->start(config_.chain.poll_interval);
}

void Stack::stop()
{
    if (!started_) return;
    started_ = false;
    processor_->stop();
    rates_->stop();
}

} // namespace still::app
