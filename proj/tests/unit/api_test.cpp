#include "doctest.h"

#include "shop_fixture.hpp"
#include "still/payments/uri.hpp"

#include <future>
#include <set>

using namespace still;
using namespace still::test;
using json = nlohmann::json;

namespace {

// Every error body carries exactly code, message and status, and nothing
// that names the host's files.
void check_error_body(const httplib::Result& res, int status, const std::string& code, const Shop& shop)
{
    REQUIRE(res);
    CHECK(res->status == status);
    auto j = json::parse(res->body, nullptr, false);
    REQUIRE(j.is_object());
    CHECK(j.size() == 3);
    CHECK(j["code"] == code);
    CHECK(j["status"] == status);
    CHECK(j["message"].is_string());
    CHECK(res->body.find(shop.dir.path().string()) == std::string::npos);
    CHECK(res->body.find("still-test-") == std::string::npos);
}

} // namespace

TEST_CASE("the route table is the whole surface")
{
    std::set<std::string> declared;
    for (const auto& r : api::route_table())
        declared.insert(r.method + " " + r.pattern + " " + std::string(api::access_name(r.access)));
    CHECK(declared == std::set<std::string>{
                          "GET /health public",
                          "POST /v1/sales cashier",
                          "GET /v1/sales/:id/status public",
                          "GET /v1/rates public",
                          "GET /v1/report employee",
                          "POST /v1/admin/cashout admin",
                      });

    Shop shop;
    auto c = shop.client();
    for (const auto& r : api::route_table()) {
        if (r.access == api::Access::anyone) continue;
        auto res = r.method == "GET" ? c.Get(r.pattern) : c.Post(r.pattern, "{}", "application/json");
        check_error_body(res, 401, "unauthorized", shop);
        auto bad = r.method == "GET" ? c.Get(r.pattern, Shop::bearer("not-a-token"))
                                     : c.Post(r.pattern, Shop::bearer("not-a-token"), "{}", "application/json");
        check_error_body(bad, 401, "unauthorized", shop);
    }
    for (const char* path : {"/", "/v1", "/v1/sales", "/v1/admin", "/v1/admin/keys", "/v1/sales/x/status/extra",
                             "/../etc/passwd", "/v1/report.csv", "/debug"}) {
        check_error_body(c.Get(path), 404, "not_found", shop);
        check_error_body(c.Get(path, Shop::bearer(kAdminToken)), 404, "not_found", shop);
    }
    check_error_body(c.Post("/health", "{}", "application/json"), 404, "not_found", shop);
    check_error_body(c.Delete("/v1/sales"), 404, "not_found", shop);

    auto health = c.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["status"] == "ok");
}

TEST_CASE("POST /v1/sales creates a locked-price sale")
{
    Shop shop;
    auto sale = shop.create_sale(450, "latte");
    CHECK(sale["btc_sats"] == 1'500'000);
    CHECK(sale["btc_amount"] == "0.015");
    CHECK(sale["rate"] == "300.00");
    CHECK(sale["currency"] == "CAD");
    CHECK(sale["state"] == "pending");
    CHECK(sale["note"] == "latte");
    CHECK(sale["expires_at"].get<Timestamp>() == shop.clock.now() + 900);
    auto uri = sale["uri"].get<std::string>();
    CHECK(uri == "bitcoin:" + sale["address"].get<std::string>() + "?amount=0.015&label=Caf%C3%A9%20%231");
    CHECK(sale["qr_payload"] == uri);
    auto parsed = payments::parse_payment_uri(uri);
    CHECK(parsed.amount == 1'500'000);

    auto c = shop.client();
    auto emp = Shop::bearer(kEmployeeToken);
    check_error_body(c.Post("/v1/sales", emp, R"({"fiat_cents": -5, "currency": "CAD"})", "application/json"), 400,
                     "validation", shop);
    check_error_body(c.Post("/v1/sales", emp, R"({"fiat_cents": 0})", "application/json"), 400, "validation", shop);
    check_error_body(c.Post("/v1/sales", emp, R"({"fiat_cents": "abc"})", "application/json"), 400, "validation",
                     shop);
    check_error_body(c.Post("/v1/sales", emp, R"({"fiat_cents": 4.5})", "application/json"), 400, "validation", shop);
    check_error_body(c.Post("/v1/sales", emp, R"({"note": "x"})", "application/json"), 400, "validation", shop);
    check_error_body(c.Post("/v1/sales", emp, "abc", "application/json"), 400, "validation", shop);
    check_error_body(c.Post("/v1/sales", emp, R"([450])", "application/json"), 400, "validation", shop);
    check_error_body(c.Post("/v1/sales", emp, R"({"fiat_cents": 450, "currency": "cad"})", "application/json"), 400,
                     "validation", shop);
    check_error_body(c.Post("/v1/sales", emp, R"({"fiat_cents": 450, "currency": "EUR"})", "application/json"), 400,
                     "unsupported_pair", shop);
    check_error_body(c.Post("/v1/sales", emp, json{{"fiat_cents", 450}, {"note", std::string(501, 'n')}}.dump(),
                            "application/json"),
                     400, "validation", shop);
    check_error_body(c.Post("/v1/sales", emp, std::string(100 * 1024, ' '), "application/json"), 413,
                     "payload_too_large", shop);
    // No address was spent on rejected requests.
    CHECK(shop.stack->keys().next_index() == 1);

    shop.clock.advance(121);
    check_error_body(c.Post("/v1/sales", emp, R"({"fiat_cents": 450})", "application/json"), 503, "stale_rates",
                     shop);
}

TEST_CASE("kiosk mode lets anyone create sales")
{
    ShopOptions o;
    o.public_sales = true;
    Shop shop(o);
    auto res = shop.client().Post("/v1/sales", R"({"fiat_cents": 450})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
}

TEST_CASE("status follows the payment and never writes")
{
    Shop shop;
    auto sale = shop.create_sale(450, "latte");
    auto id = sale["sale_id"].get<std::string>();
    check_error_body(shop.client().Get("/v1/sales/0000000000000000/status"), 404, "unknown_sale", shop);

    auto records = shop.stack->ledger().journal_records();
    for (int i = 0; i < 50; ++i) CHECK(shop.status(id)["state"] == "pending");
    CHECK(shop.stack->ledger().journal_records() == records);

    auto txid = shop.pay(sale);
    REQUIRE(shop.wait_for_state(id, "paid_0conf"));
    auto st = shop.status(id);
    CHECK(st["confirmations"] == 0);
    CHECK(st["paid_sats"] == 1'500'000);
    CHECK(st["txid"] == txid.hex());

    shop.node().mine(1);
    REQUIRE(shop.wait_for_state(id, "confirmed"));
    CHECK(shop.status(id)["confirmations"] == 1);
    shop.node().mine(1);
    shop.settle();
    CHECK(shop.status(id)["confirmations"] == 2);

    records = shop.stack->ledger().journal_records();
    for (int i = 0; i < 20; ++i) shop.status(id);
    CHECK(shop.stack->ledger().journal_records() == records);
}

TEST_CASE("status long-poll returns on change")
{
    Shop shop;
    auto sale = shop.create_sale(450);
    auto id = sale["sale_id"].get<std::string>();
    auto rev = sale["revision"].get<std::uint64_t>();

    auto start = std::chrono::steady_clock::now();
    auto idle = shop.status(id, "?wait=1&since=" + std::to_string(rev));
    CHECK(idle["state"] == "pending");
    CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(900));

    auto waiter = std::async(std::launch::async, [&] { return shop.status(id, "?wait=20&since=" + std::to_string(rev)); });
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    start = std::chrono::steady_clock::now();
    shop.pay(sale);
    auto changed = waiter.get();
    CHECK(changed["state"] == "paid_0conf");
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(3));

    check_error_body(shop.client().Get("/v1/sales/" + id + "/status?wait=abc"), 400, "validation", shop);
    check_error_body(shop.client().Get("/v1/sales/" + id + "/status?wait=-1"), 400, "validation", shop);
}

TEST_CASE("GET /v1/rates reports the median and its sources")
{
    Shop shop;
    shop.rates->set("alpha", 30'100);
    shop.rates->set("gamma", 29'900);
    shop.stack->rates().refresh();
    auto res = shop.client().Get("/v1/rates?pair=BTC-CAD");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    auto j = json::parse(res->body);
    CHECK(j["price"] == "300.00");
    CHECK(j["contributing"].size() == 3);
    CHECK(j["fresh"] == true);

    shop.rates->fail("beta");
    shop.stack->rates().refresh();
    j = json::parse(shop.client().Get("/v1/rates")->body);
    CHECK(j["contributing"].size() == 2);
    CHECK(j["failed_sources"] == json::array({"beta"}));
    CHECK(res->body.find("source down") == std::string::npos);

    check_error_body(shop.client().Get("/v1/rates?pair=BTC-XYZ"), 400, "unsupported_pair", shop);
    check_error_body(shop.client().Get("/v1/rates?pair=nonsense"), 400, "unsupported_pair", shop);
}

TEST_CASE("reports are role gated")
{
    Shop shop;
    for (int i = 0; i < 2; ++i) {
        auto sale = shop.create_sale(450, "item " + std::to_string(i));
        shop.pay(sale);
        REQUIRE(shop.wait_for_state(sale["sale_id"], "paid_0conf"));
    }
    shop.create_sale(999, "unpaid");
    auto c = shop.client();
    check_error_body(c.Get("/v1/report"), 401, "unauthorized", shop);

    auto emp = c.Get("/v1/report", Shop::bearer(kEmployeeToken));
    REQUIRE(emp);
    REQUIRE(emp->status == 200);
    auto e = json::parse(emp->body);
    CHECK(e["role"] == "employee");
    CHECK(e["rows"].size() == 3);
    CHECK_FALSE(e.contains("totals"));
    CHECK_FALSE(e.contains("cashout"));

    auto adm = json::parse(c.Get("/v1/report", Shop::bearer(kAdminToken))->body);
    CHECK(adm["rows"].size() == 3);
    REQUIRE(adm.contains("totals"));
    CHECK(adm["totals"]["paid_count"] == 2);
    CHECK(adm["totals"]["fiat_cents"]["CAD"] == 900);
    CHECK(adm["cashout"]["due"] == false);
    CHECK(adm["rows"][0]["explorer_url"].get<std::string>().rfind("https://explorer.example/tx/", 0) == 0);

    httplib::Headers csv_headers = Shop::bearer(kAdminToken);
    csv_headers.emplace("Accept", "text/csv");
    auto csv = c.Get("/v1/report", csv_headers);
    REQUIRE(csv);
    CHECK(csv->get_header_value("Content-Type").rfind("text/csv", 0) == 0);
    CHECK(csv->body.rfind("sale_id,created_at,note,fiat_amount,currency,btc_amount,rate,state,txid,explorer_url\r\n", 0) ==
          0);
    CHECK(std::count(csv->body.begin(), csv->body.end(), '\n') == 4);

    auto old = std::to_string(shop.clock.now() - 3 * kSecondsPerDay);
    auto older = std::to_string(shop.clock.now() - 2 * kSecondsPerDay);
    check_error_body(c.Get("/v1/report?from=" + old + "&to=" + older, Shop::bearer(kEmployeeToken)), 403, "forbidden",
                     shop);
    CHECK(c.Get("/v1/report?from=" + old + "&to=" + older, Shop::bearer(kAdminToken))->status == 200);
    check_error_body(c.Get("/v1/report?from=yesterday", Shop::bearer(kAdminToken)), 400, "validation", shop);
    check_error_body(c.Get("/v1/report?from=" + older + "&to=" + old, Shop::bearer(kAdminToken)), 400, "validation",
                     shop);
}

TEST_CASE("admin cash-out sweeps paid sales")
{
    Shop shop;
    auto c = shop.client();
    auto body = [&](std::string pass) {
        return json{{"destination", shop.owner->address()}, {"feerate", 3}, {"passphrase", pass}}.dump();
    };
    check_error_body(c.Post("/v1/admin/cashout", Shop::bearer(kEmployeeToken), body(std::string(kPassphrase)),
                            "application/json"),
                     403, "forbidden", shop);
    check_error_body(c.Post("/v1/admin/cashout", Shop::bearer(kAdminToken), body(std::string(kPassphrase)),
                            "application/json"),
                     409, "nothing_to_sweep", shop);

    for (int i = 0; i < 3; ++i) {
        auto sale = shop.create_sale(4'000);
        shop.pay(sale);
        REQUIRE(shop.wait_for_state(sale["sale_id"], "confirmed", std::chrono::seconds(1)) == false);
    }
    shop.node().mine(3);
    shop.settle();

    auto records = shop.stack->ledger().journal_records();
    check_error_body(c.Post("/v1/admin/cashout", Shop::bearer(kAdminToken), body("wrong"), "application/json"), 401,
                     "bad_passphrase", shop);
    CHECK(shop.stack->ledger().journal_records() == records);
    check_error_body(c.Post("/v1/admin/cashout", Shop::bearer(kAdminToken), R"({"feerate": 2})", "application/json"),
                     400, "validation", shop);

    auto res = c.Post("/v1/admin/cashout", Shop::bearer(kAdminToken), body(std::string(kPassphrase)),
                      "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    auto j = json::parse(res->body);
    CHECK(j["inputs"] == 3);
    CHECK(j["total_in"].get<Sats>() == j["total_out"].get<Sats>() + j["fee_sats"].get<Sats>());
    CHECK(j["fee_sats"] == 3 * (3 * 148 + 34 + 10));
    CHECK(j["sale_ids"].size() == 3);
    auto txid = chain::Txid::from_hex(j["txid"].get<std::string>());
    CHECK(shop.node().in_mempool(txid));
    shop.node().mine(1);
    CHECK(shop.node().confirmations(txid) == 1);
    check_error_body(c.Post("/v1/admin/cashout", Shop::bearer(kAdminToken), body(std::string(kPassphrase)),
                            "application/json"),
                     409, "nothing_to_sweep", shop);
}

TEST_CASE("watch-only deployments refuse cash-out")
{
    ShopOptions o;
    o.watch_only = true;
    Shop shop(o);
    auto sale = shop.create_sale(4'000);
    shop.pay(sale);
    shop.node().mine(1);
    shop.settle();
    auto res = shop.client().Post("/v1/admin/cashout", Shop::bearer(kAdminToken),
                                  json{{"destination", shop.owner->address()}, {"passphrase", "anything"}}.dump(),
                                  "application/json");
    check_error_body(res, 403, "watch_only", shop);
    auto health = json::parse(shop.client().Get("/health")->body);
    CHECK(health["mode"] == "watch-only");
}

TEST_CASE("a busy port is reported, not shared")
{
    Shop shop;
    api::Server second(*shop.stack);
    try {
        second.bind("127.0.0.1", shop.port);
        FAIL("second bind succeeded");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::address_in_use);
    }
}
