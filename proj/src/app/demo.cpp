#include "still/app/demo.hpp"

#include "still/core/error.hpp"
#include "still/keystore/keystore.hpp"
#include "still/ledger/ledger.hpp"
#include "still/payments/processor.hpp"
#include "still/rates/rates.hpp"
#include "still/simnode/node.hpp"
#include "still/simnode/wallet.hpp"

#include <filesystem>
#include <random>

namespace still::app {

namespace {

class ScratchDir {
public:
    ScratchDir()
    {
        std::random_device rd;
        for (;;) {
            path_ = std::filesystem::temp_directory_path() / ("still-demo-" + std::to_string(rd()));
            if (std::filesystem::create_directory(path_)) break;
        }
    }
    ~ScratchDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

std::string short_id(const chain::Txid& txid)
{
    return txid.hex().substr(0, 12);
}

class Runner {
public:
    Runner(const DemoOptions& options)
        : options_(options), clock_(options.start),
          keys_(keystore::Keystore::create_hot(dir_.path() / "demo.keys",
                                               keystore::generate_master(Bytes(32, 0x5a), keystore::Network::regtest()),
                                               "demo", keystore::KeystoreOptions{false, {10, 8, 1}, {}})),
          node_(node_options()), miner_(node_, "miner")
    {
        ledger::SaleServices services;
        services.allocate_address = [this] { return keys_.next_address(); };
        services.current_rate = [this](const rates::CurrencyPair& pair) {
            auto it = rates_.find(pair.fiat);
            if (it == rates_.end()) throw Error(Errc::stale_rates, "no RATE set for " + pair.fiat);
            auto snap = std::make_shared<rates::RateSnapshot>();
            snap->pair = pair;
            snap->aggregate_price = it->second;
            snap->method = "scripted";
            snap->computed_at = clock_.now();
            return std::shared_ptr<const rates::RateSnapshot>(snap);
        };
        ledger_ = std::make_unique<ledger::Ledger>(dir_.path() / "demo.journal", ledger::LedgerOptions{}, services,
                                                   clock_.clock());
        processor_ = std::make_unique<payments::PaymentProcessor>(*ledger_, node_, payments::MatchPolicy{},
                                                                   keystore::Network::regtest(), clock_.clock());
        node_.mine(1);
        processor_->drain();
    }

    DemoResult run(const std::vector<simnode::Command>& script)
    {
        for (const auto& c : script) {
            try {
                step(c);
            } catch (const Error& e) {
                fail(c, std::string(e.code_name()) + ": " + e.what());
            }
            processor_->drain();
            processor_->tick();
            report_changes();
        }
        for (const auto& [name, id] : sales_) result_.final_states[name] = ledger_->sale(id)->state;
        return std::move(result_);
    }

private:
    static simnode::SimNodeOptions node_options()
    {
        simnode::SimNodeOptions o;
        o.network = keystore::Network::regtest();
        static simnode::SimNode scratch;
        o.miner_address = simnode::SimWallet(scratch, "miner").address();
        return o;
    }

    simnode::SimWallet& wallet(const std::string& name)
    {
        if (name == "miner") return miner_;
        auto it = wallets_.find(name);
        if (it == wallets_.end()) it = wallets_.emplace(name, std::make_unique<simnode::SimWallet>(node_, name)).first;
        return *it->second;
    }

    const std::string& sale_id(const simnode::Command& c) const
    {
        auto it = sales_.find(c.target);
        if (it == sales_.end()) throw Error(Errc::validation, "unknown sale '" + c.target + "'");
        return it->second;
    }

    const chain::Transaction& tx(const std::string& name) const
    {
        auto it = txs_.find(name);
        if (it == txs_.end()) throw Error(Errc::validation, "unknown transaction '" + name + "'");
        return it->second;
    }

    std::string stamp(const simnode::Command& c) const
    {
        auto elapsed = clock_.now() - options_.start;
        char buf[64];
        std::snprintf(buf, sizeof buf, "[+%5llds] line %zu %s", static_cast<long long>(elapsed), c.line,
                      std::string(simnode::op_name(c.op)).c_str());
        return buf;
    }

    void say(const std::string& text) { result_.timeline.push_back(text); }

    void fail(const simnode::Command& c, const std::string& why)
    {
        say(stamp(c) + " FAILED " + why);
        result_.failures.push_back("line " + std::to_string(c.line) + ": " + why);
    }

    std::string name_of_sale(const std::string& id) const
    {
        for (const auto& [name, sid] : sales_)
            if (sid == id) return name;
        return id;
    }

    void report_changes()
    {
        for (const auto& name : order_) {
            const auto& id = sales_.at(name);
            auto s = *ledger_->sale(id);
            auto& seen = states_[name];
            if (s.state == seen.first && s.reorg_alert == seen.second) continue;
            std::string line = "          " + name + ": " + std::string(ledger::state_name(seen.first)) + " -> " +
                               std::string(ledger::state_name(s.state));
            if (s.evidence_txid) line += " (tx " + short_id(*s.evidence_txid) + ")";
            if (s.reorg_alert && !seen.second) line += " [reorg alert]";
            if (s.excess_sats > 0) line += " [excess " + format_btc(s.excess_sats) + " BTC]";
            say(line);
            seen = {s.state, s.reorg_alert};
        }
    }

    void step(const simnode::Command& c)
    {
        using simnode::Op;
        switch (c.op) {
        case Op::fund: {
            Sats amount = c.sats.value_or(0);
            while (miner_.balance() < amount + options_.fee) node_.mine(1);
            auto t = miner_.pay({{wallet(c.target).address(), amount}}, options_.fee);
            node_.broadcast(t);
            say(stamp(c) + " " + c.target + " receives " + format_btc(amount) + " BTC");
            break;
        }
        case Op::rate:
            rates_[c.target] = c.cents;
            say(stamp(c) + " BTC-" + c.target + " = " + format_cents(c.cents));
            break;
        case Op::sale: {
            auto sale = ledger_->create_sale({c.cents, c.currency, c.note, ""});
            processor_->watch(sale);
            std::string name = c.as.empty() ? "sale" + std::to_string(sales_.size() + 1) : c.as;
            if (sales_.count(name)) throw Error(Errc::validation, "sale name '" + name + "' reused");
            sales_[name] = sale.sale_id;
            order_.push_back(name);
            states_[name] = {sale.state, false};
            say(stamp(c) + " " + name + ": " + format_cents(c.cents) + " " + c.currency + " at " +
                format_cents(sale.locked_rate) + " = " + format_btc(sale.btc_sats) + " BTC to " + sale.address +
                " -> " + std::string(ledger::state_name(sale.state)));
            break;
        }
        case Op::pay: {
            auto sale = *ledger_->sale(sale_id(c));
            Sats amount = c.sats.value_or(sale.btc_sats);
            auto t = wallet(c.from).pay({{sale.address, amount}}, options_.fee);
            auto r = node_.submit(t);
            std::string name = c.as.empty() ? "tx" + std::to_string(txs_.size() + 1) : c.as;
            txs_[name] = t;
            owners_[name] = c.from;
            if (!r.accepted) throw Error(Errc::tx_rejected, "payment rejected: " + r.reason);
            say(stamp(c) + " " + c.from + " pays " + format_btc(amount) + " BTC to " + c.target + " as " + name +
                " (tx " + short_id(r.txid) + ")");
            break;
        }
        case Op::mine: {
            auto n = std::max<std::int64_t>(1, c.count);
            auto h = node_.mine(static_cast<int>(n));
            say(stamp(c) + " " + std::to_string(n) + " block(s), tip " + std::to_string(h));
            break;
        }
        case Op::conflict: {
            const auto& original = tx(c.target);
            auto ds = wallet(owners_.at(c.target)).double_spend(original, options_.conflict_fee);
            auto r = node_.submit(ds);
            std::string name = c.as.empty() ? c.target + "-conflict" : c.as;
            txs_[name] = ds;
            owners_[name] = owners_.at(c.target);
            say(stamp(c) + " " + name + " double-spends " + c.target + " (tx " + short_id(ds.txid()) + ", " +
                (r.accepted ? "accepted" : "parked") + ")");
            break;
        }
        case Op::reorg: {
            std::vector<std::vector<chain::Transaction>> blocks(static_cast<std::size_t>(c.replace));
            if (!c.with.empty()) {
                if (blocks.empty()) blocks.emplace_back();
                blocks.front().push_back(tx(c.with));
            }
            auto h = node_.reorg(c.count, blocks);
            say(stamp(c) + " depth " + std::to_string(c.count) + ", " + std::to_string(blocks.size()) +
                " replacement block(s), tip " + std::to_string(h));
            break;
        }
        case Op::advance:
            clock_.advance(c.count);
            say(stamp(c) + " clock +" + std::to_string(c.count) + "s");
            break;
        case Op::expect: {
            auto id = sale_id(c);
            processor_->drain();
            auto sale = *ledger_->sale(id);
            std::int64_t conf = 0;
            for (const auto& p : ledger_->payments(id))
                if (sale.evidence_txid && p.txid == *sale.evidence_txid) conf = p.confirmations(ledger_->tip());
            bool ok = sale.state == c.state && (!c.confirmations || *c.confirmations == conf);
            std::string want = std::string(ledger::state_name(c.state));
            if (c.confirmations) want += " with " + std::to_string(*c.confirmations) + " confirmation(s)";
            if (ok) {
                say(stamp(c) + " " + c.target + " is " + want + ": ok");
            } else {
                fail(c, c.target + " expected " + want + ", got " + std::string(ledger::state_name(sale.state)) +
                            " with " + std::to_string(conf) + " confirmation(s)");
            }
            break;
        }
        }
    }

    DemoOptions options_;
    ScratchDir dir_;
    ManualClock clock_;
    keystore::Keystore keys_;
    simnode::SimNode node_;
    simnode::SimWallet miner_;
    std::unique_ptr<ledger::Ledger> ledger_;
    std::unique_ptr<payments::PaymentProcessor> processor_;
    std::map<std::string, Cents> rates_;
    std::map<std::string, std::unique_ptr<simnode::SimWallet>> wallets_;
    std::map<std::string, std::string> sales_;
    std::vector<std::string> order_;
    std::map<std::string, std::pair<ledger::InvoiceState, bool>> states_;
    std::map<std::string, chain::Transaction> txs_;
    std::map<std::string, std::string> owners_;
    DemoResult result_;
};

} // namespace

DemoResult run_scenario(const std::vector<simnode::Command>& script, const DemoOptions& options)
{
    Runner runner(options);
    return runner.run(script);
}

} // namespace still::app
