#pragma once

#include "still/app/config.hpp"
#include "still/keystore/keystore.hpp"
#include "still/ledger/ledger.hpp"
#include "still/payments/processor.hpp"
#include "still/rates/rate_book.hpp"
#include "still/simnode/node.hpp"
#include "still/treasury/treasury.hpp"

#include <memory>

namespace still::app {

struct StackOptions {
    Clock clock;                                  // defaults to the system clock
    std::shared_ptr<rates::Transport> transport;  // defaults to http/https/file
    simnode::SimNodeOptions simnode;              // used when the chain is simulated
};

// Everything one branch needs, wired together from a config: keystore,
// rates, ledger, chain source, payment processor and treasury.
class Stack {
public:
    // Throws io_error / store_corrupt for the keystore, config_error.
    explicit Stack(Config config, StackOptions options = {});
    Stack(const Stack&) = delete;
    Stack& operator=(const Stack&) = delete;
    ~Stack();

    // Initial rate fetch, watches for open sales, background workers.
    void start();
    void stop();

    const Config& config() const { return config_; }
    const keystore::Network& network() const { return *network_; }
    const Clock& clock() const { return clock_; }
    keystore::Keystore& keys() { return *keys_; }
    rates::RateBook& rates() { return *rates_; }
    ledger::Ledger& ledger() { return *ledger_; }
    payments::ChainSource& chain() { return *chain_; }
    // Null unless the chain is simulated.
    simnode::SimNode* simnode() { return simnode_; }
    payments::PaymentProcessor& processor() { return *processor_; }
    treasury::Treasury& treasury() { return *treasury_; }

private:
    Config config_;
    Clock clock_;
    const keystore::Network* network_;
    std::unique_ptr<keystore::Keystore> keys_;
    std::unique_ptr<rates::RateBook> rates_;
    std::unique_ptr<ledger::Ledger> ledger_;
    std::unique_ptr<payments::ChainSource> chain_;
    simnode::SimNode* simnode_ = nullptr;
    std::unique_ptr<payments::PaymentProcessor> processor_;
    std::unique_ptr<treasury::Treasury> treasury_;
    bool started_ = false;
};

ledger::LedgerOptions ledger_options(const Config& config);

} // namespace still::app
