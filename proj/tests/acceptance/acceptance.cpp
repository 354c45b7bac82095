// Acceptance suite: one PASS/FAIL line per criterion. Service-level
// criteria go through the HTTP API of a complete in-process branch; the
// property criteria drive the modules directly with seeded randomness.

#include "shop_fixture.hpp"

#include "still/app/demo.hpp"
#include "still/keystore/address.hpp"
#include "still/payments/processor.hpp"
#include "still/rates/rates.hpp"
#include "still/simnode/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

using namespace still;
using namespace still::test;
using json = nlohmann::json;
using SteadyClock = std::chrono::steady_clock;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what)
{
    if (!ok) throw Failure(what);
}

double seconds_since(SteadyClock::time_point t0)
{
    return std::chrono::duration<double>(SteadyClock::now() - t0).count();
}

std::string fmt(double s)
{
    std::ostringstream o;
    o.precision(s < 1 ? 3 : 2);
    o << std::fixed << s << " s";
    return o.str();
}

json get_json(Shop& shop, const std::string& path, const std::string& token)
{
    auto res = shop.client().Get(path, Shop::bearer(token));
    expect(res && res->status == 200, "GET " + path + " failed: " + (res ? res->body : "no response"));
    return json::parse(res->body);
}

json report_row(Shop& shop, const std::string& sale_id)
{
    auto rep = get_json(shop, "/v1/report", kAdminToken);
    for (const auto& row : rep["rows"])
        if (row["sale_id"] == sale_id) return row;
    throw Failure("sale " + sale_id + " missing from the report");
}

// Chain source fed by hand; used where event order must be controlled.
class ScriptedSource : public payments::ChainSource {
public:
    void subscribe(Handler h) override { handlers_.push_back(std::move(h)); }
    void watch(const std::string&) override {}
    std::int64_t confirmations(const chain::Txid&) override { throw Error(Errc::unknown_tx, "unknown"); }
    std::vector<payments::Utxo> utxos(const std::string&) override { return {}; }
    std::int64_t tip_height() override { return 0; }
    chain::Txid broadcast(const chain::Transaction& tx) override { return tx.txid(); }
    void emit(const payments::ChainEvent& e)
    {
        for (auto& h : handlers_) h(e);
    }

private:
    std::vector<Handler> handlers_;
};

ledger::SaleServices fixed_services(std::uint32_t& next, Cents rate)
{
    static const auto account =
        keystore::derive_path(keystore::generate_master(Bytes(32, 0x42), keystore::Network::regtest()), "m/0'/0")
            .neuter();
    ledger::SaleServices s;
    s.allocate_address = [&next] {
        std::uint32_t i = next++;
        auto child = keystore::derive_child(account, i, false);
        return keystore::AllocatedAddress{
            keystore::encode_address(crypto::hash160(child.public_key().view()),
                                     keystore::Network::regtest().p2pkh_version),
            i};
    };
    s.current_rate = [rate](const rates::CurrencyPair& pair) {
        auto snap = std::make_shared<rates::RateSnapshot>();
        snap->pair = pair;
        snap->aggregate_price = rate;
        return std::shared_ptr<const rates::RateSnapshot>(snap);
    };
    return s;
}

// ---------------------------------------------------------------------------

std::string cafe_flow()
{
    auto t0 = SteadyClock::now();
    Shop shop;
    auto sale = shop.create_sale(450, "latte");
    expect(sale["currency"] == "CAD" && sale["rate"] == "300.00", "sale not priced at 300.00 CAD");
    expect(sale["btc_sats"] == 1'500'000, "4.50 CAD at 300.00 must be 1500000 sat, got " + sale["btc_sats"].dump());
    expect(sale["state"] == "pending", "new sale not pending");
    std::string id = sale["sale_id"];

    auto tip = shop.node().tip_height();
    shop.pay(sale);
    expect(shop.wait_for_state(id, "paid_0conf"), "exact payment did not reach paid_0conf");
    expect(shop.node().tip_height() == tip, "a block was mined before paid_0conf");
    auto st = shop.status(id);
    expect(st["confirmations"] == 0 && st["paid_sats"] == 1'500'000, "paid_0conf status has wrong evidence");

    shop.node().mine(1);
    expect(shop.wait_for_state(id, "confirmed"), "one block did not confirm the sale");
    expect(shop.status(id)["confirmations"] == 1, "confirmed sale does not report 1 confirmation");
    double s = seconds_since(t0);
    expect(s < 5.0, "took " + fmt(s));
    return "4.50 CAD -> 1500000 sat, paid_0conf with no block, confirmed after 1 block, " + fmt(s);
}

std::string zero_conf_gate()
{
    payments::MatchPolicy policy;
    // Over HTTP first: 600.00 CAD needs three blocks.
    {
        Shop shop;
        auto sale = shop.create_sale(60'000, "espresso machine");
        std::string id = sale["sale_id"];
        auto need = policy.confirmed_threshold(60'000);
        expect(need == 3, "band for 600.00 should be 3 confirmations");
        shop.pay(sale);
        shop.settle();
        for (std::int64_t i = 0; i < need; ++i) {
            auto st = shop.status(id)["state"];
            expect(st == "pending", "state " + st.dump() + " after " + std::to_string(i) + " block(s)");
            shop.node().mine(1);
            shop.settle();
        }
        expect(shop.wait_for_state(id, "confirmed"), "not confirmed after 3 blocks");
        for (const auto& t : shop.stack->ledger().transitions(id))
            expect(t.to != ledger::InvoiceState::paid_0conf, "paid_0conf reached over HTTP");
    }

    // Then 1,000 randomized deliveries of the same facts.
    std::mt19937_64 rng(0x5eed);
    TempDir dir;
    const auto& net = keystore::Network::regtest();
    int confirmed_runs = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        ManualClock clock;
        std::uint32_t next = 0;
        auto path = dir.path() / ("j" + std::to_string(trial));
        ledger::Ledger ledger(path, {}, fixed_services(next, 30'000), clock.clock());
        ScriptedSource source;
        payments::PaymentProcessor proc(ledger, source, policy, net, clock.clock());

        Cents fiat = policy.zero_conf_max_fiat_cents + 1 + static_cast<Cents>(rng() % 200'000);
        auto sale = ledger.create_sale({fiat, "CAD", "", ""});
        auto need = policy.confirmed_threshold(fiat);

        chain::Transaction tx;
        chain::TxIn in;
        for (auto& b : in.prevout.txid.bytes) b = static_cast<std::uint8_t>(rng());
        tx.inputs.push_back(in);
        tx.outputs.push_back({sale.btc_sats, chain::script_for_address(sale.address, net)});
        auto txid = tx.txid();

        std::int64_t h0 = 100 + static_cast<std::int64_t>(rng() % 50);
        std::int64_t extra = static_cast<std::int64_t>(rng() % 5);
        auto block = [](std::int64_t h, std::vector<chain::Txid> ids) {
            crypto::Hash256 hash{};
            hash[0] = static_cast<std::uint8_t>(h);
            hash[1] = static_cast<std::uint8_t>(h >> 8);
            return payments::ChainEvent{payments::BlockMined{h, hash, std::move(ids)}, 1000};
        };
        std::vector<payments::ChainEvent> events{{payments::TxSeen{tx, 0}, 1000}, block(h0, {txid})};
        for (std::int64_t j = 1; j <= extra; ++j) events.push_back(block(h0 + j, {}));
        if (rng() % 2) events.push_back({payments::TxSeen{tx, h0}, 1000});
        for (auto dups = rng() % 4; dups > 0; --dups) events.push_back(events[rng() % events.size()]);
        std::shuffle(events.begin(), events.end(), rng);

        bool mined_known = false;
        std::int64_t max_height = 0;
        for (const auto& e : events) {
            if (const auto* b = std::get_if<payments::BlockMined>(&e.kind)) {
                max_height = std::max(max_height, b->height);
                if (b->height == h0) mined_known = true;
            } else if (std::get<payments::TxSeen>(e.kind).block_height == h0) {
                mined_known = true;
            }
            source.emit(e);
            proc.drain();
            auto state = ledger.sale(sale.sale_id)->state;
            expect(state != ledger::InvoiceState::paid_0conf, "paid_0conf reached in trial " + std::to_string(trial));
            if (state == ledger::InvoiceState::confirmed)
                expect(mined_known && max_height - h0 + 1 >= need,
                       "confirmed early in trial " + std::to_string(trial));
        }
        bool should_confirm = extra + 1 >= need;
        auto final_state = ledger.sale(sale.sale_id)->state;
        expect(final_state == (should_confirm ? ledger::InvoiceState::confirmed : ledger::InvoiceState::pending),
               "trial " + std::to_string(trial) + " ended " + std::string(ledger::state_name(final_state)));
        confirmed_runs += should_confirm;
    }
    return "600.00 CAD confirmed only at block 3 over HTTP; 1000 orderings, " + std::to_string(confirmed_runs) +
           " reached confirmed, none reached paid_0conf";
}

std::string double_spend()
{
    Shop shop;
    auto sale = shop.create_sale(450, "croissant");
    std::string id = sale["sale_id"];
    auto t0 = SteadyClock::now();
    auto paid = shop.pay(sale);
    expect(shop.wait_for_state(id, "paid_0conf"), "payment not accepted at 0-conf");
    auto evil = shop.customer->double_spend(*shop.last_payment, 5000);
    shop.node().submit(evil);
    shop.node().mine(1);
    expect(shop.node().tx_height(evil.txid()).has_value(), "conflicting transaction not mined");
    expect(!shop.node().tx_height(paid).has_value(), "original payment mined");
    expect(shop.wait_for_state(id, "double_spent", std::chrono::seconds(1)), "sale not double_spent");
    double s = seconds_since(t0);
    expect(s < 1.0, "took " + fmt(s));
    auto row = report_row(shop, id);
    expect(row["state"] == "double_spent", "report shows " + row["state"].dump());

    auto script = simnode::parse_scenario("FUND customer 0.1\nRATE CAD 300.00\nSALE 4.50 CAD AS s\nPAY s AS p\n"
                                          "CONFLICT p AS evil\nMINE\nEXPECT s double_spent\n");
    auto a = app::run_scenario(script);
    auto b = app::run_scenario(script);
    expect(a.ok() && a.final_states.at("s") == ledger::InvoiceState::double_spent, "scenario did not end double_spent");
    expect(a.timeline == b.timeline, "scenario timeline differs between runs");
    return "double_spent " + fmt(s) + " after PAY, flagged in the report, scenario replays identically";
}

std::string payee_privacy()
{
    ShopOptions o;
    Shop shop(o);
    auto client = shop.client();
    auto headers = Shop::bearer(kEmployeeToken);
    std::set<std::string> addresses;
    std::vector<std::string> ordered;
    auto t0 = SteadyClock::now();
    for (int i = 0; i < 10'000; ++i) {
        auto res = client.Post("/v1/sales", headers, "{\"fiat_cents\": " + std::to_string(100 + i % 5000) + "}",
                               "application/json");
        expect(res && res->status == 201, "sale " + std::to_string(i) + " failed");
        auto addr = json::parse(res->body)["address"].get<std::string>();
        addresses.insert(addr);
        ordered.push_back(addr);
    }
    double s = seconds_since(t0);
    expect(addresses.size() == 10'000, std::to_string(addresses.size()) + " distinct addresses");
    expect(s < 10.0, "took " + fmt(s));

    // Spot check against an independent derivation of m/0'/0/i.
    auto master = keystore::generate_master(Bytes(32, 0x21), keystore::Network::regtest());
    auto chain0 = keystore::derive_path(master, "m/0'/0");
    std::mt19937 rng(99);
    for (int k = 0; k < 50; ++k) {
        auto i = static_cast<std::uint32_t>(rng() % ordered.size());
        auto child = keystore::derive_child(chain0, i, false);
        auto want = keystore::encode_address(crypto::hash160(child.public_key().view()),
                                             keystore::Network::regtest().p2pkh_version);
        expect(ordered[i] == want, "sale " + std::to_string(i) + " is not at m/0'/0/" + std::to_string(i));
    }
    return "10000 sales over HTTP, 10000 distinct addresses in " + fmt(s);
}

std::string locked_price()
{
    Shop shop;
    std::vector<payments::ChainEvent> recorded;
    std::mutex rec_mutex;
    shop.node().subscribe([&](const payments::ChainEvent& e) {
        std::lock_guard lk(rec_mutex);
        recorded.push_back(e);
    });
    auto sale = shop.create_sale(1234, "beans");
    std::string id = sale["sale_id"];
    auto fingerprint = [&] {
        auto r = *shop.stack->ledger().sale(id);
        auto row = report_row(shop, id);
        return std::to_string(r.fiat_cents) + "|" + r.fiat_currency + "|" + std::to_string(r.locked_rate) + "|" +
               std::to_string(r.btc_sats) + "|" + row["fiat_amount"].get<std::string>() + "|" +
               row["rate_cents"].dump() + "|" + row["btc_amount"].get<std::string>() + "|" +
               shop.status(id)["btc_sats"].dump();
    };
    auto before = fingerprint();

    shop.pay(sale);
    shop.node().mine(1);
    expect(shop.wait_for_state(id, "confirmed"), "locked amount not accepted");
    for (Cents moved : {Cents{45'000}, Cents{15'000}}) {
        shop.rates->set_all(moved);
        shop.stack->rates().refresh();
        auto r = get_json(shop, "/v1/rates?pair=BTC-CAD", kEmployeeToken);
        expect(r["price"] == format_cents(moved), "rate did not move to " + format_cents(moved));
        auto probe = shop.create_sale(1234, "probe");
        expect(probe["rate"] == format_cents(moved), "new sales do not see the moved rate");
        expect(fingerprint() == before, "locked fields changed after the rate moved to " + format_cents(moved));
    }

    std::vector<payments::ChainEvent> replay;
    {
        std::lock_guard lk(rec_mutex);
        replay = recorded;
    }
    for (const auto& e : replay) shop.stack->processor().enqueue(e);
    shop.settle();
    expect(fingerprint() == before, "locked fields changed after re-delivering chain events");

    auto journal = shop.config.journal_path;
    shop.close();
    std::uint32_t next = 1'000'000;
    ManualClock clock;
    ledger::Ledger replayed(journal, {}, fixed_services(next, 99'999), clock.clock());
    auto r = *replayed.sale(id);
    auto again = std::to_string(r.fiat_cents) + "|" + r.fiat_currency + "|" + std::to_string(r.locked_rate) + "|" +
                 std::to_string(r.btc_sats);
    expect(before.rfind(again + "|", 0) == 0, "journal replay changed the locked fields");
    expect(r.state == ledger::InvoiceState::confirmed, "journal replay lost the state");
    return "rate moved +50% and -50%, " + std::to_string(replay.size()) +
           " events re-delivered and journal replayed; locked fields identical (" + before + ")";
}

std::string rate_fairness()
{
    std::mt19937_64 rng(31337);
    rates::CurrencyPair pair{"BTC", "CAD"};
    std::size_t cases = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 3 + rng() % 5;
        std::vector<rates::RateQuote> honest;
        for (std::size_t i = 0; i < n; ++i)
            honest.push_back({"s" + std::to_string(i), pair, 3'000'000 + static_cast<Cents>(rng() % 60'000), 1000});
        auto [lo, hi] = std::minmax_element(honest.begin(), honest.end(),
                                            [](const auto& a, const auto& b) { return a.price < b.price; });
        Cents spread = hi->price - lo->price;
        auto base = rates::aggregate(honest, 1000).aggregate_price;
        for (std::size_t bad = 0; bad < n; ++bad)
            for (bool up : {true, false}) {
                auto quotes = honest;
                quotes[bad].price = up ? quotes[bad].price * 10 : quotes[bad].price / 10;
                auto moved = rates::aggregate(quotes, 1000).aggregate_price;
                expect(std::llabs(moved - base) <= spread, "trial " + std::to_string(trial) + ": moved by " +
                                                               std::to_string(std::llabs(moved - base)) +
                                                               " with spread " + std::to_string(spread));
                ++cases;
            }
    }

    Shop shop;
    shop.rates->set("alpha", 30'000);
    shop.rates->set("beta", 30'100);
    shop.rates->set("gamma", 300'000); // corrupted 10x
    shop.stack->rates().refresh();
    auto r = get_json(shop, "/v1/rates?pair=BTC-CAD", kEmployeeToken);
    expect(r["price"] == "301.00", "median with one 10x source is " + r["price"].dump());

    shop.rates->fail("beta");
    shop.rates->fail("gamma");
    shop.stack->rates().refresh();
    shop.clock.advance(shop.config.rates.policy.staleness_seconds + 1);
    auto res = shop.client().Post("/v1/sales", Shop::bearer(kEmployeeToken), R"({"fiat_cents": 450})",
                                  "application/json");
    expect(res && res->status == 503, "sale without quorum returned " + (res ? std::to_string(res->status) : "nothing"));
    expect(json::parse(res->body)["code"] == "stale_rates", "wrong error code " + res->body);
    shop.rates->set_all(30'000);
    shop.stack->rates().refresh();
    shop.create_sale(450);
    return std::to_string(cases) + " single-source 10x corruptions within the honest spread; HTTP median 301.00 with a "
                                   "10x source; quorum loss -> 503 stale_rates";
}

std::string threshold_cashout()
{
    Shop shop;
    auto pay_and_mine = [&](Cents cents) {
        auto s = shop.create_sale(cents, "order");
        shop.pay(s);
        shop.node().mine(1);
        expect(shop.wait_for_state(s["sale_id"], "confirmed"), "sale did not confirm");
        return s;
    };
    auto cashout_view = [&] { return get_json(shop, "/v1/report", kAdminToken)["cashout"]; };

    for (int i = 0; i < 3; ++i) pay_and_mine(3000);
    auto c = cashout_view();
    expect(c["due"] == false && c["unswept_cents"] == 9000, "9000 cents should not be due: " + c.dump());
    pay_and_mine(1500);
    c = cashout_view();
    expect(c["due"] == true && c["reason"] == "threshold" && c["unswept_cents"] == 10'500,
           "10500 cents should be due by threshold: " + c.dump());

    auto dest = shop.owner->address();
    auto plan = shop.stack->treasury().plan(dest, 2);
    Sats sum_inputs = 0;
    for (const auto& in : plan.inputs) sum_inputs += in.value;
    expect(plan.inputs.size() == 4, "plan should spend 4 sale outputs");
    expect(plan.total_in == sum_inputs && plan.total_in == plan.total_out + plan.fee_sats,
           "total_in != total_out + fee");

    json body{{"passphrase", std::string(kPassphrase)}, {"feerate", 2}, {"destination", dest}};
    auto res = shop.client().Post("/v1/admin/cashout", Shop::bearer(kAdminToken), body.dump(), "application/json");
    expect(res && res->status == 200, "cash-out failed: " + (res ? res->body : "no response"));
    auto out = json::parse(res->body);
    auto txid = chain::Txid::from_hex(out["txid"].get<std::string>());
    expect(shop.node().in_mempool(txid), "sweep not accepted by the node");
    expect(out["total_in"] == out["total_out"].get<Sats>() + out["fee_sats"].get<Sats>(), "broadcast sweep unbalanced");
    shop.node().mine(1);
    shop.settle();
    expect(shop.node().tx_height(txid).has_value(), "sweep not mined");
    expect(shop.owner->balance() == out["total_out"].get<Sats>(), "owner did not receive total_out");
    expect(cashout_view()["due"] == false, "still due after the sweep");

    std::set<chain::OutPoint> first;
    for (const auto& in : shop.node().find_tx(txid)->inputs) first.insert(in.prevout);
    pay_and_mine(2000);
    auto later = shop.stack->treasury().plan(dest, 2);
    expect(later.inputs.size() == 1, "later plan should hold only the new sale");
    for (const auto& in : later.inputs)
        expect(!first.count(in.outpoint), "a swept input reappeared in a later plan");
    return "due flips at 10500 cents; plan " + std::to_string(plan.total_in) + " = " +
           std::to_string(plan.total_out) + " + " + std::to_string(plan.fee_sats) +
           "; sweep validated and mined; swept inputs absent from the next plan";
}

std::vector<Bytes> encodings_of(const crypto::PrivateKey& k, const keystore::Network& net)
{
    Bytes raw(k.bytes().begin(), k.bytes().end());
    auto hex = to_hex(raw);
    auto upper = hex;
    std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
    auto wif = keystore::encode_wif(k, net);
    return {raw, Bytes(hex.begin(), hex.end()), Bytes(upper.begin(), upper.end()), Bytes(wif.begin(), wif.end())};
}

std::string encryption_at_rest()
{
    std::size_t files = 0, secrets = 0;
    {
        Shop shop;
        for (int i = 0; i < 5; ++i) {
            auto s = shop.create_sale(3000, "order");
            shop.pay(s);
        }
        shop.node().mine(1);
        shop.settle();
        json body{{"passphrase", std::string(kPassphrase)}, {"feerate", 1}, {"destination", shop.owner->address()}};
        auto res = shop.client().Post("/v1/admin/cashout", Shop::bearer(kAdminToken), body.dump(), "application/json");
        expect(res && res->status == 200, "sweep failed: " + (res ? res->body : "no response"));
        shop.stack->ledger().checkpoint();
        auto root = shop.dir.path();
        shop.close();

        const auto& net = keystore::Network::regtest();
        auto master = keystore::generate_master(Bytes(32, 0x21), net);
        std::vector<Bytes> needles;
        auto add = [&](const keystore::ExtendedKey& node) {
            for (auto& e : encodings_of(node.private_key(), net)) needles.push_back(std::move(e));
            auto x = node.to_base58();
            needles.emplace_back(x.begin(), x.end());
            ++secrets;
        };
        add(master);
        auto account = keystore::derive_path(master, "m/0'");
        add(account);
        add(keystore::derive_path(master, "m/0'/0"));
        for (std::uint32_t i = 0; i < 8; ++i) add(keystore::derive_path(master, "m/0'/0/" + std::to_string(i)));

        for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
            if (!entry.is_regular_file()) continue;
            std::ifstream in(entry.path(), std::ios::binary);
            std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            ++files;
            for (const auto& n : needles)
                expect(data.find(std::string(n.begin(), n.end())) == std::string::npos,
                       "secret material found in " + entry.path().filename().string());
        }
    }

    std::mt19937_64 rng(4242);
    TempDir dir;
    keystore::KeystoreOptions ko;
    ko.kdf = {10, 8, 1};
    auto random_pass = [&] {
        std::string p;
        for (int i = 0; i < 12 + static_cast<int>(rng() % 12); ++i) p += static_cast<char>(33 + rng() % 94);
        return p;
    };
    for (int i = 0; i < 100; ++i) {
        Bytes entropy(32);
        for (auto& b : entropy) b = static_cast<std::uint8_t>(rng());
        auto master = keystore::generate_master(entropy, keystore::Network::regtest());
        auto pass = random_pass();
        auto path = dir.path() / ("k" + std::to_string(i));
        keystore::Keystore::create_hot(path, master, pass, ko);
        auto store = keystore::Keystore::open(path, ko);
        std::string wrong = rng() % 2 ? random_pass() : pass.substr(0, pass.size() - 1) + char(pass.back() ^ 1);
        if (wrong == pass) wrong += "x";
        try {
            (void)store.unlock_account(wrong);
            throw Failure("wrong passphrase unlocked key " + std::to_string(i));
        } catch (const Error& e) {
            expect(e.code() == Errc::bad_passphrase, "wrong passphrase gave " + std::string(code_name(e.code())));
        }
        expect(store.unlock_account(pass) == keystore::derive_path(master, "m/0'"), "right passphrase failed");
    }
    return std::to_string(files) + " persisted files free of " + std::to_string(secrets) +
           " private keys in raw/hex/WIF/xprv form; 100 random keys reject a wrong passphrase";
}

// Frozen from tests/oracles/oracle.py: path, xprv, xpub.
struct VectorNode {
    const char* path;
    const char* xprv;
    const char* xpub;
};

const VectorNode kVector1[] = {
    {"m", "xprv9s21ZrQH143K3QTDL4LXw2F7HEK3wJUD2nW2nRk4stbPy6cq3jPPqjiChkVvvNKmPGJxWUtg6LnF5kejMRNNU3TGtRBeJgk33yuGBxrMPHi",
     "xpub661MyMwAqRbcFtXgS5sYJABqqG9YLmC4Q1Rdap9gSE8NqtwybGhePY2gZ29ESFjqJoCu1Rupje8YtGqsefD265TMg7usUDFdp6W1EGMcet8"},
    {"m/0'", "xprv9uHRZZhk6KAJC1avXpDAp4MDc3sQKNxDiPvvkX8Br5ngLNv1TxvUxt4cV1rGL5hj6KCesnDYUhd7oWgT11eZG7XnxHrnYeSvkzY7d2bhkJ7",
     "xpub68Gmy5EdvgibQVfPdqkBBCHxA5htiqg55crXYuXoQRKfDBFA1WEjWgP6LHhwBZeNK1VTsfTFUHCdrfp1bgwQ9xv5ski8PX9rL2dZXvgGDnw"},
    {"m/0'/1", "xprv9wTYmMFdV23N2TdNG573QoEsfRrWKQgWeibmLntzniatZvR9BmLnvSxqu53Kw1UmYPxLgboyZQaXwTCg8MSY3H2EU4pWcQDnRnrVA1xe8fs",
     "xpub6ASuArnXKPbfEwhqN6e3mwBcDTgzisQN1wXN9BJcM47sSikHjJf3UFHKkNAWbWMiGj7Wf5uMash7SyYq527Hqck2AxYysAA7xmALppuCkwQ"},
    {"m/0'/1/2'", "xprv9z4pot5VBttmtdRTWfWQmoH1taj2axGVzFqSb8C9xaxKymcFzXBDptWmT7FwuEzG3ryjH4ktypQSAewRiNMjANTtpgP4mLTj34bhnZX7UiM",
     "xpub6D4BDPcP2GT577Vvch3R8wDkScZWzQzMMUm3PWbmWvVJrZwQY4VUNgqFJPMM3No2dFDFGTsxxpG5uJh7n7epu4trkrX7x7DogT5Uv6fcLW5"},
    {"m/0'/1/2'/2", "xprvA2JDeKCSNNZky6uBCviVfJSKyQ1mDYahRjijr5idH2WwLsEd4Hsb2Tyh8RfQMuPh7f7RtyzTtdrbdqqsunu5Mm3wDvUAKRHSC34sJ7in334",
     "xpub6FHa3pjLCk84BayeJxFW2SP4XRrFd1JYnxeLeU8EqN3vDfZmbqBqaGJAyiLjTAwm6ZLRQUMv1ZACTj37sR62cfN7fe5JnJ7dh8zL4fiyLHV"},
    {"m/0'/1/2'/2/1000000000", "xprvA41z7zogVVwxVSgdKUHDy1SKmdb533PjDz7J6N6mV6uS3ze1ai8FHa8kmHScGpWmj4WggLyQjgPie1rFSruoUihUZREPSL39UNdE3BBDu76",
     "xpub6H1LXWLaKsWFhvm6RVpEL9P4KfRZSW7abD2ttkWP3SSQvnyA8FSVqNTEcYFgJS2UaFcxupHiYkro49S8yGasTvXEYBVPamhGW6cFJodrTHy"},
};

const VectorNode kVector2[] = {
    {"m", "xprv9s21ZrQH143K31xYSDQpPDxsXRTUcvj2iNHm5NUtrGiGG5e2DtALGdso3pGz6ssrdK4PFmM8NSpSBHNqPqm55Qn3LqFtT2emdEXVYsCzC2U",
     "xpub661MyMwAqRbcFW31YEwpkMuc5THy2PSt5bDMsktWQcFF8syAmRUapSCGu8ED9W6oDMSgv6Zz8idoc4a6mr8BDzTJY47LJhkJ8UB7WEGuduB"},
    {"m/0", "xprv9vHkqa6EV4sPZHYqZznhT2NPtPCjKuDKGY38FBWLvgaDx45zo9WQRUT3dKYnjwih2yJD9mkrocEZXo1ex8G81dwSM1fwqWpWkeS3v86pgKt",
     "xpub69H7F5d8KSRgmmdJg2KhpAK8SR3DjMwAdkxj3ZuxV27CprR9LgpeyGmXUbC6wb7ERfvrnKZjXoUmmDznezpbZb7ap6r1D3tgFxHmwMkQTPH"},
    {"m/0/2147483647'", "xprv9wSp6B7kry3Vj9m1zSnLvN3xH8RdsPP1Mh7fAaR7aRLcQMKTR2vidYEeEg2mUCTAwCd6vnxVrcjfy2kRgVsFawNzmjuHc2YmYRmagcEPdU9",
     "xpub6ASAVgeehLbnwdqV6UKMHVzgqAG8Gr6riv3Fxxpj8ksbH9ebxaEyBLZ85ySDhKiLDBrQSARLq1uNRts8RuJiHjaDMBU4Zn9h8LZNnBC5y4a"},
    {"m/0/2147483647'/1", "xprv9zFnWC6h2cLgpmSA46vutJzBcfJ8yaJGg8cX1e5StJh45BBciYTRXSd25UEPVuesF9yog62tGAQtHjXajPPdbRCHuWS6T8XA2ECKADdw4Ef",
     "xpub6DF8uhdarytz3FWdA8TvFSvvAh8dP3283MY7p2V4SeE2wyWmG5mg5EwVvmdMVCQcoNJxGoWaU9DCWh89LojfZ537wTfunKau47EL2dhHKon"},
    {"m/0/2147483647'/1/2147483646'", "xprvA1RpRA33e1JQ7ifknakTFpgNXPmW2YvmhqLQYMmrj4xJXXWYpDPS3xz7iAxn8L39njGVyuoseXzU6rcxFLJ8HFsTjSyQbLYnMpCqE2VbFWc",
     "xpub6ERApfZwUNrhLCkDtcHTcxd75RbzS1ed54G1LkBUHQVHQKqhMkhgbmJbZRkrgZw4koxb5JaHWkY4ALHY2grBGRjaDMzQLcgJvLJuZZvRcEL"},
    {"m/0/2147483647'/1/2147483646'/2", "xprvA2nrNbFZABcdryreWet9Ea4LvTJcGsqrMzxHx98MMrotbir7yrKCEXw7nadnHM8Dq38EGfSh6dqA9QWTyefMLEcBYJUuekgW4BYPJcr9E7j",
     "xpub6FnCn6nSzZAw5Tw7cgR9bi15UV96gLZhjDstkXXxvCLsUXBGXPdSnLFbdpq8p9HmGsApME5hQTZ3emM2rnY5agb9rXpVGyy3bdW6EEgAtqt"},
};

std::string derivation()
{
    std::size_t nodes = 0;
    auto walk = [&](const char* seed_hex, const auto& chain) {
        auto master = keystore::generate_master(from_hex(seed_hex), keystore::Network::mainnet());
        for (const auto& v : chain) {
            auto node = keystore::derive_path(master, v.path);
            expect(node.to_base58() == v.xprv, std::string("xprv mismatch at ") + v.path);
            expect(node.neuter().to_base58() == v.xpub, std::string("xpub mismatch at ") + v.path);
            ++nodes;
        }
        // Public derivation along the non-hardened tails.
        auto last = keystore::derive_path(master, chain[std::size(chain) - 2].path);
        auto tail = keystore::derive_child(last.neuter(), keystore::ExtendedKey::from_base58(chain[std::size(chain) - 1].xpub).child_number, false);
        expect(tail.to_base58() == chain[std::size(chain) - 1].xpub, "public derivation of the last node differs");
    };
    walk("000102030405060708090a0b0c0d0e0f", kVector1);
    walk("fffcf9f6f3f0edeae7e4e1dedbd8d5d2cfccc9c6c3c0bdbab7b4b1aeaba8a5a29f9c999693908d8a8784817e7b7875726f6c6966"
         "63605d5a5754514e4b484542",
         kVector2);

    std::mt19937_64 rng(777);
    for (int i = 0; i < 1000; ++i) {
        Bytes entropy(32);
        for (auto& b : entropy) b = static_cast<std::uint8_t>(rng());
        auto parent = keystore::generate_master(entropy, keystore::Network::testnet());
        if (rng() % 2) parent = keystore::derive_child(parent, static_cast<std::uint32_t>(rng() % 100), true);
        auto index = static_cast<std::uint32_t>(rng() & 0x7fffffff);
        auto via_private = keystore::derive_child(parent, index, false).neuter().serialize();
        auto via_public = keystore::derive_child(parent.neuter(), index, false).serialize();
        expect(via_private == via_public, "derivations differ at index " + std::to_string(index));
    }
    return std::to_string(nodes) + " test-vector nodes match; 1000 random indices commute byte for byte";
}

// One deterministic 100-sale run. Stops with SIGKILL once the journal holds
// `kill_after` records (0: run to the end). `on_record` sees the canonical
// state after each record count.
void sale_run(const std::filesystem::path& journal, std::uint64_t kill_after,
              const std::function<void(std::uint64_t, const std::string&)>& on_record)
{
    ManualClock clock(1'750'000'000);
    std::uint32_t next = 0;
    ledger::LedgerOptions lo;
    lo.snapshot_every = 37;
    ledger::Ledger ledger(journal, lo, fixed_services(next, 30'000), clock.clock());
    std::mt19937_64 rng(100);
    std::uint64_t last = ledger.journal_records();
    auto after = [&] {
        auto n = ledger.journal_records();
        if (n == last) return;
        last = n;
        if (on_record) on_record(n, ledger.canonical_state());
        if (kill_after && n >= kill_after) ::kill(::getpid(), SIGKILL);
    };
    std::int64_t tip = 0;
    for (int i = 0; i < 100; ++i) {
        clock.advance(30);
        auto s = ledger.create_sale({150 + static_cast<Cents>(rng() % 9000), "CAD", "sale " + std::to_string(i), ""});
        after();
        chain::Txid txid;
        for (auto& b : txid.bytes) b = static_cast<std::uint8_t>(rng());
        switch (rng() % 5) {
        case 0:
            ledger.apply_state(s.sale_id, ledger::InvoiceState::expired);
            after();
            break;
        case 1:
            ledger.upsert_payment({txid, s.sale_id, s.btc_sats / 2, clock.now(), 0, ledger::PaymentStatus::mempool});
            after();
            ledger.apply_state(s.sale_id, ledger::InvoiceState::underpaid, txid);
            after();
            break;
        default:
            ledger.upsert_payment({txid, s.sale_id, s.btc_sats, clock.now(), 0, ledger::PaymentStatus::mempool});
            after();
            ledger.apply_state(s.sale_id, ledger::InvoiceState::paid_0conf, txid);
            after();
            if (rng() % 2) {
                ledger.set_tip(++tip);
                after();
                ledger.upsert_payment(
                    {txid, s.sale_id, s.btc_sats, clock.now(), tip, ledger::PaymentStatus::confirmed});
                after();
                ledger.apply_state(s.sale_id, ledger::InvoiceState::confirmed, txid);
                after();
            }
        }
    }
    ledger::SweepRecord sweep;
    sweep.txid.bytes.fill(0x5e);
    for (const auto& s : ledger.sales())
        if (s.state == ledger::InvoiceState::confirmed) sweep.sale_ids.push_back(s.sale_id);
    sweep.total_in = 1;
    sweep.destination = "owner";
    sweep.at = clock.now();
    ledger.record_sweep(sweep);
    after();
}

std::string recover(const std::filesystem::path& journal, std::uint64_t& records)
{
    ManualClock clock(1'750'000'000);
    std::uint32_t next = 0;
    ledger::LedgerOptions lo;
    lo.snapshot_every = 37;
    ledger::Ledger ledger(journal, lo, fixed_services(next, 30'000), clock.clock());
    records = ledger.journal_records();
    return ledger.canonical_state();
}

std::string file_bytes(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {(std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()};
}

std::string crash_safety()
{
    TempDir dir;
    std::map<std::uint64_t, std::string> reference;
    sale_run(dir.path() / "reference", 0, [&](std::uint64_t n, const std::string& s) { reference[n] = s; });
    std::uint64_t total = reference.rbegin()->first;
    expect(total >= 200, "reference run wrote only " + std::to_string(total) + " records");

    std::size_t kills = 0, torn = 0;
    for (std::uint64_t k = 1; k <= total; ++k) {
        auto journal = dir.path() / ("kill" + std::to_string(k));
        std::cout.flush();
        pid_t pid = ::fork();
        if (pid == 0) {
            sale_run(journal, k, {});
            ::_exit(3); // not reached: killed at record k
        }
        int status = 0;
        ::waitpid(pid, &status, 0);
        expect(WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL, "child was not killed at record " + std::to_string(k));
        ++kills;

        std::uint64_t got = 0;
        auto state = recover(journal, got);
        expect(got == k, "recovered " + std::to_string(got) + " records after a kill at " + std::to_string(k));
        expect(state == reference.at(k), "state after a kill at record " + std::to_string(k) + " is not the prefix");
        auto bytes = file_bytes(journal);
        std::uint64_t again_n = 0;
        expect(recover(journal, again_n) == state && again_n == k, "second recovery differs at " + std::to_string(k));
        expect(file_bytes(journal) == bytes, "second recovery rewrote the journal at " + std::to_string(k));

        // Torn write of the next record: a few bytes of it reach the disk.
        if (k < total && k % 7 == 0) {
            auto full = file_bytes(dir.path() / "reference");
            auto next_len = bytes.size() + 3 + (k % 11);
            if (next_len < full.size() && full.compare(0, bytes.size(), bytes) == 0) {
                std::ofstream(journal, std::ios::binary | std::ios::trunc).write(full.data(),
                                                                                  static_cast<std::streamsize>(next_len));
                std::filesystem::remove(ledger::Ledger::snapshot_path(journal));
                auto torn_state = recover(journal, got);
                expect(got == k && torn_state == reference.at(k), "torn tail after record " + std::to_string(k));
                expect(recover(journal, got) == torn_state, "torn-tail recovery not idempotent");
                ++torn;
            }
        }
        std::filesystem::remove(journal);
        std::filesystem::remove(ledger::Ledger::snapshot_path(journal));
    }
    return std::to_string(kills) + " kills (one after every record of a 100-sale run) and " + std::to_string(torn) +
           " torn tails recover the exact prefix, twice";
}

std::string utxo_oracle()
{
    static simnode::SimNode scratch;
    simnode::SimNodeOptions so;
    so.miner_address = simnode::SimWallet(scratch, "miner").address();
    simnode::SimNode node(so);
    simnode::SimWallet miner(node, "miner");
    std::vector<std::unique_ptr<simnode::SimWallet>> wallets;
    for (int i = 0; i < 5; ++i) wallets.push_back(std::make_unique<simnode::SimWallet>(node, "w" + std::to_string(i)));
    node.mine(3);

    std::mt19937_64 rng(10'000);
    std::size_t accepted = 0, blocks = 0, reorgs = 0, conflicts = 0, checks = 0;
    std::vector<chain::Transaction> recent;
    auto check = [&](int op) {
        ++checks;
        expect(node.utxo_set() == node.recompute_utxos(), "UTXO set diverged at op " + std::to_string(op));
        expect(node.utxo_total() + node.total_fees() == node.total_subsidy(), "value not conserved at op " +
                                                                                 std::to_string(op));
    };
    for (int op = 0; op < 10'000; ++op) {
        auto pick = rng() % 100;
        bool structural = false;
        try {
            if (pick < 55) {
                simnode::SimWallet& from = rng() % 3 == 0 ? miner : *wallets[rng() % wallets.size()];
                auto& to = *wallets[rng() % wallets.size()];
                auto tx = from.pay({{to.address(), static_cast<Sats>(1000 + rng() % 5'000'000)}},
                                   static_cast<Sats>(rng() % 3000));
                if (node.submit(tx).accepted) {
                    ++accepted;
                    recent.push_back(tx);
                }
            } else if (pick < 65 && !recent.empty()) {
                const auto& victim = recent[rng() % recent.size()];
                std::vector<simnode::SimWallet*> all{&miner};
                for (auto& w : wallets) all.push_back(w.get());
                for (auto* w : all) {
                    try {
                        node.submit(w->double_spend(victim, static_cast<Sats>(rng() % 4000)));
                        ++conflicts;
                        break;
                    } catch (const Error&) {
                    }
                }
            } else if (pick < 90) {
                node.mine_block();
                ++blocks;
                structural = true;
            } else {
                auto depth = std::min<std::int64_t>(static_cast<std::int64_t>(rng() % 4), node.tip_height());
                std::vector<std::vector<chain::Transaction>> repl(rng() % 3);
                auto side = node.side_pool();
                if (!repl.empty() && !side.empty() && rng() % 2) repl[0].push_back(side[rng() % side.size()]);
                try {
                    node.reorg(depth, repl);
                    ++reorgs;
                } catch (const Error& e) {
                    expect(e.code() == Errc::invalid_argument, std::string("reorg failed: ") + e.what());
                }
                structural = true;
            }
        } catch (const Error& e) {
            expect(e.code() == Errc::validation, std::string("unexpected error: ") + e.what());
        }
        if (recent.size() > 50) recent.erase(recent.begin());
        if (structural || op % 25 == 0) check(op);
    }
    check(10'000);
    expect(accepted > 1000 && reorgs > 100, "sequence too tame");
    return "10000 ops (" + std::to_string(accepted) + " txs, " + std::to_string(conflicts) + " double spends, " +
           std::to_string(blocks) + " blocks, " + std::to_string(reorgs) + " reorgs), " + std::to_string(checks) +
           " from-genesis comparisons equal";
}

struct Criterion {
    const char* name;
    std::string (*run)();
};

const Criterion kCriteria[] = {
    {"cafe-flow", cafe_flow},
    {"zero-conf-gate", zero_conf_gate},
    {"double-spend", double_spend},
    {"payee-privacy", payee_privacy},
    {"locked-price", locked_price},
    {"rate-fairness", rate_fairness},
    {"threshold-cashout", threshold_cashout},
    {"encryption-at-rest", encryption_at_rest},
    {"derivation", derivation},
    {"crash-safety", crash_safety},
    {"utxo-oracle", utxo_oracle},
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App cli{"Acceptance checks"};
    std::vector<std::string> only;
    cli.add_option("criteria", only, "Run only these criteria");
    CLI11_PARSE(cli, argc, argv);

    int failed = 0, ran = 0;
    for (const auto& c : kCriteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
        ++ran;
        auto t0 = SteadyClock::now();
        std::string line;
        bool ok = false;
        try {
            line = c.run();
            ok = true;
        } catch (const std::exception& e) {
            line = e.what();
        }
        if (!ok) ++failed;
        std::cout << (ok ? "PASS " : "FAIL ") << c.name << ": " << line << " [" << fmt(seconds_since(t0)) << "]"
                  << std::endl;
    }
    std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
