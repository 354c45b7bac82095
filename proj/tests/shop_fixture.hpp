#pragma once

// A complete branch for tests: YAML config, hot keystore, scripted rate
// feeds, simulated chain, payment worker and (optionally) the HTTP server
// on an ephemeral port.

#include "still/api/server.hpp"
#include "still/app/stack.hpp"
#include "still/simnode/wallet.hpp"
#include "test_support.hpp"

#include <httplib.h>
#include <json.hpp>

#include <map>
#include <mutex>

namespace still::test {

inline constexpr std::string_view kPassphrase = "pass phrase for tests";
inline const std::string kEmployeeToken = "employee-token-0123456789";
inline const std::string kAdminToken = "admin-token-0123456789abcdef";

// Serves {"price": "<cents as decimal>"} per source; sources can be broken.
class FakeRates : public rates::Transport {
public:
    void set(const std::string& source, Cents price)
    {
        std::lock_guard lk(mutex_);
        prices_[source] = price;
    }
    void set_all(Cents price)
    {
        for (const char* s : {"alpha", "beta", "gamma"}) set(s, price);
    }
    void fail(const std::string& source)
    {
        std::lock_guard lk(mutex_);
        prices_.erase(source);
    }
    std::size_t calls() const
    {
        std::lock_guard lk(mutex_);
        return calls_;
    }
    std::string get(const std::string& url, std::chrono::milliseconds) override
    {
        std::lock_guard lk(mutex_);
        ++calls_;
        // mock://<source>/<FIAT>
        auto rest = url.substr(std::string("mock://").size());
        auto source = rest.substr(0, rest.find('/'));
        auto it = prices_.find(source);
        if (it == prices_.end()) throw Error(Errc::io_error, "source down");
        return nlohmann::json{{"price", format_cents(it->second)}}.dump();
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, Cents> prices_;
    std::size_t calls_ = 0;
};

struct ShopOptions {
    bool watch_only = false;
    bool public_sales = false;
    bool serve = true;
    std::string currency = "CAD";
    std::string extra_yaml;
};

inline std::string shop_yaml(const ShopOptions& o)
{
    std::string y = "network: regtest\n"
                     "keystore: keys.still\n"
                     "journal: ledger.journal\n"
                     "explorer_url_template: \"https://explorer.example/tx/{txid}\"\n"
                     "branch:\n"
                     "  id: cafe\n"
                     "  display_name: \"Café #1\"\n"
                     "  default_currency: " + o.currency + "\n"
                     "rates:\n"
                     "  pairs: [BTC-" + o.currency + "]\n"
                     "  staleness_seconds: 120\n"
                     "  quorum: 2\n"
                     "  sources:\n"
                     "    - {id: alpha, url: \"mock://alpha/{fiat}\", field: price, pair: BTC-" + o.currency + "}\n"
                     "    - {id: beta, url: \"mock://beta/{fiat}\", field: price, pair: BTC-" + o.currency + "}\n"
                     "    - {id: gamma, url: \"mock://gamma/{fiat}\", field: price, pair: BTC-" + o.currency + "}\n"
                     "auth:\n"
                     "  employee_tokens: [" + kEmployeeToken + "]\n"
                     "  admin_tokens: [" + kAdminToken + "]\n"
                     "  public_sales: " + (o.public_sales ? "true" : "false") + "\n"
                     "chain:\n"
                     "  kind: simnode\n"
                     "  poll_seconds: 0.05\n";
    return y + o.extra_yaml;
}

class Shop {
public:
    explicit Shop(ShopOptions options = {}) : options_(std::move(options)), rates(std::make_shared<FakeRates>())
    {
        rates->set_all(30'000); // 300.00 per BTC
        auto master = keystore::generate_master(Bytes(32, 0x21), keystore::Network::regtest());
        keystore::KeystoreOptions ko;
        ko.kdf = {10, 8, 1};
        if (options_.watch_only)
            keystore::Keystore::create_watch_only(dir.path() / "keys.still",
                                                  keystore::derive_path(master, "m/0'").neuter(), ko);
        else
            keystore::Keystore::create_hot(dir.path() / "keys.still", master, kPassphrase, ko);

        config = app::parse_config(shop_yaml(options_), dir.path(), "shop.yaml");
        open();
    }

    ~Shop() { close(); }

    void open()
    {
        app::StackOptions so;
        so.clock = clock.clock();
        so.transport = rates;
        static simnode::SimNode scratch;
        so.simnode.miner_address = simnode::SimWallet(scratch, "miner").address();
        so.simnode.clock = clock.clock();
        stack = std::make_unique<app::Stack>(config, so);
        node().mine(1);
        miner = std::make_unique<simnode::SimWallet>(node(), "miner");
        customer = std::make_unique<simnode::SimWallet>(node(), "customer");
        owner = std::make_unique<simnode::SimWallet>(node(), "owner");
        node().broadcast(miner->pay({{customer->address(), 20 * kSatsPerCoin}}, 1000));
        node().mine(1);
        stack->start();
        if (options_.serve) {
            server = std::make_unique<api::Server>(*stack);
            port = server->start("127.0.0.1", 0);
        }
    }

    void close()
    {
        if (server) server->stop();
        server.reset();
        if (stack) stack->stop();
        stack.reset();
    }

    simnode::SimNode& node() { return *stack->simnode(); }

    httplib::Client client() const
    {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(30, 0);
        return c;
    }

    static httplib::Headers bearer(const std::string& token)
    {
        return {{"Authorization", "Bearer " + token}};
    }

    // POST /v1/sales as the employee; returns the parsed body.
    nlohmann::json create_sale(Cents cents, const std::string& note = "", std::string currency = "")
    {
        nlohmann::json body{{"fiat_cents", cents}, {"note", note}};
        if (!currency.empty()) body["currency"] = currency;
        auto res = client().Post("/v1/sales", bearer(kEmployeeToken), body.dump(), "application/json");
        if (!res || res->status != 201)
            throw Error(Errc::internal, "sale creation failed: " + (res ? res->body : std::string("no response")));
        return nlohmann::json::parse(res->body);
    }

    nlohmann::json status(const std::string& id, const std::string& query = "")
    {
        auto res = client().Get("/v1/sales/" + id + "/status" + query);
        if (!res || res->status != 200)
            throw Error(Errc::internal, "status failed: " + (res ? res->body : std::string("no response")));
        return nlohmann::json::parse(res->body);
    }

    // Polls the status endpoint until `state` or the timeout.
    bool wait_for_state(const std::string& id, std::string_view state,
                        std::chrono::milliseconds timeout = std::chrono::seconds(5))
    {
        auto deadline = std::chrono::steady_clock::now() + timeout;
        while (std::chrono::steady_clock::now() < deadline) {
            if (status(id)["state"] == state) return true;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        return false;
    }

    // Waits until the worker has consumed everything the node emitted.
    void settle()
    {
        auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
        auto tip = node().tip_height();
        while (stack->processor().tip() < tip && std::chrono::steady_clock::now() < deadline)
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }

    chain::Txid pay(const nlohmann::json& sale, std::optional<Sats> amount = {}, Sats fee = 1000)
    {
        auto tx = customer->pay({{sale["address"].get<std::string>(), amount.value_or(sale["btc_sats"].get<Sats>())}},
                                fee);
        last_payment = tx;
        return node().broadcast(tx);
    }

    TempDir dir;
    ManualClock clock;
    ShopOptions options_;
    std::shared_ptr<FakeRates> rates;
    app::Config config;
    std::unique_ptr<app::Stack> stack;
    std::unique_ptr<api::Server> server;
    std::unique_ptr<simnode::SimWallet> miner, customer, owner;
    std::optional<chain::Transaction> last_payment;
    int port = 0;
};

} // namespace still::test
