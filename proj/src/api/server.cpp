#include "still/api/server.hpp"

#include "still/core/money.hpp"
#include "still/core/time.hpp"
#include "still/payments/uri.hpp"

#include <httplib.h>
#include <json.hpp>
#include <openssl/crypto.h>

#include <functional>
#include <map>

namespace still::api {

using json = nlohmann::json;

namespace {

constexpr std::size_t kMaxBody = 64 * 1024;

struct HttpError {
    int status;
    std::string code;
    std::string message;
};

const HttpError& unauthorized()
{
    static const HttpError e{401, "unauthorized", "missing or invalid credentials"};
    return e;
}

void write_error(httplib::Response& res, int status, std::string_view code, std::string_view message)
{
    json body{{"code", code}, {"message", message}, {"status", status}};
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

bool token_equals(const std::string& a, const std::string& b)
{
    return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

json sale_view(const ledger::SaleRecord& s, const app::Config& config)
{
    json j{
        {"sale_id", s.sale_id},
        {"branch_id", s.branch_id},
        {"address", s.address},
        {"fiat_cents", s.fiat_cents},
        {"fiat_amount", format_cents(s.fiat_cents)},
        {"currency", s.fiat_currency},
        {"btc_sats", s.btc_sats},
        {"btc_amount", format_btc(s.btc_sats)},
        {"rate_cents", s.locked_rate},
        {"rate", format_cents(s.locked_rate)},
        {"note", s.note},
        {"created_at", s.created_at},
        {"expires_at", s.expires_at},
        {"state", ledger::state_name(s.state)},
        {"revision", s.revision},
    };
    auto uri = payments::build_payment_uri(s.address, s.btc_sats, config.branch.display_name);
    j["uri"] = uri;
    j["qr_payload"] = uri;
    return j;
}

json status_view(const ledger::SaleRecord& s, const std::vector<ledger::PaymentRecord>& payments, std::int64_t tip)
{
    Sats paid = 0;
    std::optional<std::int64_t> conf;
    for (const auto& p : payments) {
        if (p.status == ledger::PaymentStatus::conflicted) continue;
        paid += p.paid_sats;
        auto c = p.confirmations(tip);
        if (s.evidence_txid && p.txid == *s.evidence_txid) {
            conf = c;
            break;
        }
        conf = conf ? std::min(*conf, c) : c;
    }
    if (s.evidence_txid) {
        for (const auto& p : payments)
            if (p.txid == *s.evidence_txid) conf = p.confirmations(tip);
    }
    json j{
        {"sale_id", s.sale_id},
        {"state", ledger::state_name(s.state)},
        {"confirmations", conf.value_or(0)},
        {"paid_sats", paid},
        {"btc_sats", s.btc_sats},
        {"excess_sats", s.excess_sats},
        {"updated_at", s.updated_at},
        {"expires_at", s.expires_at},
        {"revision", s.revision},
        {"reorg_alert", s.reorg_alert},
    };
    j["txid"] = s.evidence_txid ? json(s.evidence_txid->hex()) : json(nullptr);
    return j;
}

json row_view(const ledger::ReportRow& r)
{
    return json{
        {"sale_id", r.sale_id},
        {"created_at", format_utc(r.created_at)},
        {"note", r.note},
        {"fiat_cents", r.fiat_cents},
        {"fiat_amount", format_cents(r.fiat_cents)},
        {"currency", r.currency},
        {"rate_cents", r.locked_rate},
        {"btc_sats", r.btc_sats},
        {"btc_amount", format_btc(r.btc_sats)},
        {"state", ledger::state_name(r.state)},
        {"address", r.address},
        {"txid", r.txid},
        {"explorer_url", r.explorer_url},
        {"excess_sats", r.excess_sats},
        {"reorg_alert", r.reorg_alert},
    };
}

json parse_body(const httplib::Request& req)
{
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(Errc::validation, "request body must be a JSON object");
    return j;
}

template <class T>
std::optional<T> field(const json& body, const char* name)
{
    auto it = body.find(name);
    if (it == body.end() || it->is_null()) return std::nullopt;
    if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw Error(Errc::validation, std::string(name) + " must be a string");
    } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw Error(Errc::validation, std::string(name) + " must be a boolean");
    } else {
        if (!it->is_number_integer()) throw Error(Errc::validation, std::string(name) + " must be an integer");
    }
    return it->get<T>();
}

std::int64_t query_int(const httplib::Request& req, const char* name, std::int64_t fallback)
{
    if (!req.has_param(name)) return fallback;
    auto text = req.get_param_value(name);
    try {
        std::size_t used = 0;
        auto v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(name);
        return v;
    } catch (const std::exception&) {
        throw Error(Errc::validation, std::string(name) + " must be an integer");
    }
}

} // namespace

std::string_view access_name(Access access)
{
    switch (access) {
    case Access::anyone: return "public";
    case Access::cashier: return "cashier";
    case Access::employee: return "employee";
    case Access::admin: return "admin";
    }
    return "public";
}

const std::vector<Route>& route_table()
{
    static const std::vector<Route> routes{
        {"GET", "/health", Access::anyone},
        {"POST", "/v1/sales", Access::cashier},
        {"GET", "/v1/sales/:id/status", Access::anyone},
        {"GET", "/v1/rates", Access::anyone},
        {"GET", "/v1/report", Access::employee},
        {"POST", "/v1/admin/cashout", Access::admin},
    };
    return routes;
}

int http_status(Errc code)
{
    switch (code) {
    case Errc::validation:
    case Errc::parse_error:
    case Errc::invalid_argument:
    case Errc::invalid_address:
    case Errc::bad_checksum:
    case Errc::sale_too_small:
    case Errc::unsupported_pair:
    case Errc::pair_mismatch:
    case Errc::dust_output:
        return 400;
    case Errc::unauthorized:
    case Errc::bad_passphrase:
    case Errc::empty_passphrase:
        return 401;
    case Errc::forbidden:
    case Errc::watch_only:
        return 403;
    case Errc::unknown_sale:
    case Errc::not_found:
        return 404;
    case Errc::nothing_to_sweep:
    case Errc::not_due:
    case Errc::illegal_transition:
        return 409;
    case Errc::tx_rejected:
        return 502;
    case Errc::stale_rates:
    case Errc::no_sources:
    case Errc::all_sources_failed:
        return 503;
    default:
        return 500;
    }
}

struct Server::Handlers {
    app::Stack& stack;
    std::atomic<bool>& stopping;

    // Role of the caller, or throws unauthorized for a bad token.
    ledger::Role role_of(const httplib::Request& req) const
    {
        if (!req.has_header("Authorization")) return ledger::Role::anyone;
        auto header = req.get_header_value("Authorization");
        constexpr std::string_view prefix = "Bearer ";
        if (header.rfind(prefix, 0) != 0) throw Error(Errc::unauthorized, "");
        auto token = header.substr(prefix.size());
        const auto& auth = stack.config().auth;
        bool admin = false, employee = false;
        for (const auto& t : auth.admin_tokens) admin |= token_equals(t, token);
        for (const auto& t : auth.employee_tokens) employee |= token_equals(t, token);
        if (admin) return ledger::Role::admin;
        if (employee) return ledger::Role::employee;
        throw Error(Errc::unauthorized, "");
    }

    ledger::Role authorize(const httplib::Request& req, Access access) const
    {
        auto role = role_of(req);
        switch (access) {
        case Access::anyone:
            break;
        case Access::cashier:
            if (role == ledger::Role::anyone && !stack.config().auth.public_sales) throw Error(Errc::unauthorized, "");
            break;
        case Access::employee:
            if (role == ledger::Role::anyone) throw Error(Errc::unauthorized, "");
            break;
        case Access::admin:
            if (role == ledger::Role::anyone) throw Error(Errc::unauthorized, "");
            if (role != ledger::Role::admin) throw Error(Errc::forbidden, "admin role required");
            break;
        }
        return role;
    }

    void health(const httplib::Request&, httplib::Response& res, ledger::Role)
    {
        json j{
            {"status", "ok"},
            {"network", stack.network().name()},
            {"mode", keystore::mode_name(stack.keys().mode())},
            {"branch_id", stack.config().branch.branch_id},
            {"branch_name", stack.config().branch.display_name},
            {"default_currency", stack.config().branch.default_currency},
            {"tip", stack.ledger().tip()},
        };
        res.set_content(j.dump(), "application/json");
    }

    void create_sale(const httplib::Request& req, httplib::Response& res, ledger::Role)
    {
        auto body = parse_body(req);
        auto cents = field<std::int64_t>(body, "fiat_cents");
        if (!cents) throw Error(Errc::validation, "fiat_cents is required");
        ledger::SaleRequest r;
        r.fiat_cents = *cents;
        r.currency = field<std::string>(body, "currency").value_or(stack.config().branch.default_currency);
        r.note = field<std::string>(body, "note").value_or("");
        auto sale = stack.ledger().create_sale(r);
        stack.processor().watch(sale);
        res.status = 201;
        res.set_content(sale_view(sale, stack.config()).dump(), "application/json");
    }

    void sale_status(const httplib::Request& req, httplib::Response& res, ledger::Role)
    {
        const auto& id = req.path_params.at("id");
        auto sale = stack.ledger().sale(id);
        if (!sale) throw Error(Errc::unknown_sale, "unknown sale");
        auto wait = query_int(req, "wait", 0);
        if (wait < 0) throw Error(Errc::validation, "wait must not be negative");
        if (wait > 0) {
            auto since = static_cast<std::uint64_t>(query_int(req, "since", static_cast<std::int64_t>(sale->revision)));
            auto limit = std::min<std::int64_t>(wait, stack.config().long_poll_max.count());
            auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(limit);
            // Short slices so shutdown is not held up by a parked request.
            while (sale->revision <= since && !stopping && std::chrono::steady_clock::now() < deadline) {
                auto slice = std::min<std::chrono::steady_clock::duration>(
                    std::chrono::milliseconds(250), deadline - std::chrono::steady_clock::now());
                *sale = stack.ledger().wait_for_change(
                    id, since, std::chrono::duration_cast<std::chrono::milliseconds>(slice));
            }
        }
        auto j = status_view(*sale, stack.ledger().payments(id), stack.ledger().tip());
        res.set_content(j.dump(), "application/json");
    }

    void rates(const httplib::Request& req, httplib::Response& res, ledger::Role)
    {
        auto pair = rates::CurrencyPair::parse(
            req.has_param("pair") ? req.get_param_value("pair") : stack.config().branch.default_currency);
        if (!stack.rates().supports(pair)) throw Error(Errc::unsupported_pair, "unsupported pair");
        auto entry = stack.rates().latest(pair);
        if (!entry || !entry->snapshot) throw Error(Errc::stale_rates, "no rate available yet");
        const auto& snap = *entry->snapshot;
        Timestamp now = stack.clock()();
        bool usable = true;
        try {
            (void)stack.rates().current(pair);
        } catch (const Error&) {
            usable = false;
        }
        json sources = json::array();
        for (const auto& q : snap.contributing)
            sources.push_back({{"source_id", q.source_id},
                               {"price_cents", q.price},
                               {"price", format_cents(q.price)},
                               {"fetched_at", q.fetched_at},
                               {"age_seconds", now - q.fetched_at}});
        json failed = json::array();
        for (const auto& e : entry->source_errors) failed.push_back(e.source_id);
        json j{
            {"pair", snap.pair.to_string()},
            {"price_cents", snap.aggregate_price},
            {"price", format_cents(snap.aggregate_price)},
            {"method", snap.method},
            {"contributing", sources},
            {"failed_sources", failed},
            {"computed_at", snap.computed_at},
            {"age_seconds", snap.age(now)},
            {"fresh", usable},
        };
        res.set_content(j.dump(), "application/json");
    }

    void report(const httplib::Request& req, httplib::Response& res, ledger::Role role)
    {
        Timestamp now = stack.clock()();
        auto parse_time = [&](const char* name, Timestamp fallback) {
            if (!req.has_param(name)) return fallback;
            try {
                return parse_utc(req.get_param_value(name));
            } catch (const Error&) {
                throw Error(Errc::validation, std::string(name) + " must be a date, timestamp or epoch seconds");
            }
        };
        // Ranges are half-open; the default includes sales made this second.
        Timestamp to = parse_time("to", now + 1);
        Timestamp from = parse_time("from", to - kSecondsPerDay);
        if (from > to) throw Error(Errc::validation, "from must not be after to");
        auto rep = stack.ledger().report(from, to, role, now);

        auto accept = req.get_header_value("Accept");
        if (accept.find("text/csv") != std::string::npos) {
            res.set_header("Content-Disposition", "attachment; filename=\"report.csv\"");
            res.set_content(ledger::report_csv(rep), "text/csv; charset=utf-8");
            return;
        }
        json rows = json::array();
        for (const auto& r : rep.rows) rows.push_back(row_view(r));
        json j{
            {"role", ledger::role_name(rep.role)},
            {"from", format_utc(rep.from)},
            {"to", format_utc(rep.to)},
            {"truncated", rep.truncated},
            {"rows", rows},
        };
        if (rep.totals) {
            json fiat = json::object();
            for (const auto& [cur, cents] : rep.totals->fiat_cents) fiat[cur] = cents;
            json balances = json::object();
            for (const auto& [addr, sats] : rep.totals->address_balances) balances[addr] = sats;
            j["totals"] = {{"paid_count", rep.totals->paid_count},
                           {"paid_sats", rep.totals->paid_sats},
                           {"fiat_cents", fiat},
                           {"address_balances", balances}};
            auto due = stack.treasury().status();
            j["cashout"] = {{"due", due.due},
                            {"reason", treasury::reason_name(due.reason)},
                            {"unswept_cents", due.unswept_cents},
                            {"threshold_cents", stack.treasury().policy().threshold_cents}};
        }
        res.set_content(j.dump(), "application/json");
    }

    void cashout(const httplib::Request& req, httplib::Response& res, ledger::Role)
    {
        auto body = parse_body(req);
        auto passphrase = field<std::string>(body, "passphrase");
        if (!passphrase) throw Error(Errc::validation, "passphrase is required");
        auto feerate = field<std::int64_t>(body, "feerate").value_or(1);
        if (feerate < 0) throw Error(Errc::validation, "feerate must not be negative");
        auto destination = field<std::string>(body, "destination").value_or("");
        auto out = stack.treasury().execute(destination, feerate, *passphrase);
        json j{
            {"txid", out.txid.hex()},
            {"tx_hex", out.tx.to_hex()},
            {"destination", out.plan.destination},
            {"inputs", out.plan.inputs.size()},
            {"total_in", out.plan.total_in},
            {"fee_sats", out.plan.fee_sats},
            {"total_out", out.plan.total_out},
            {"sale_ids", out.sale_ids},
        };
        res.set_content(j.dump(), "application/json");
    }
};

Server::Server(app::Stack& stack)
    : stack_(stack), http_(std::make_unique<httplib::Server>()),
      handlers_(std::make_unique<Handlers>(Handlers{stack, stopping_}))
{
    using Method = void (Handlers::*)(const httplib::Request&, httplib::Response&, ledger::Role);
    const std::map<std::string, Method> methods{
        {"GET /health", &Handlers::health},
        {"POST /v1/sales", &Handlers::create_sale},
        {"GET /v1/sales/:id/status", &Handlers::sale_status},
        {"GET /v1/rates", &Handlers::rates},
        {"GET /v1/report", &Handlers::report},
        {"POST /v1/admin/cashout", &Handlers::cashout},
    };

    http_->set_payload_max_length(kMaxBody);
    for (const auto& route : route_table()) {
        Method m = methods.at(route.method + " " + route.pattern);
        auto access = route.access;
        httplib::Server::Handler h = [this, m, access](const httplib::Request& req, httplib::Response& res) {
            try {
                auto role = handlers_->authorize(req, access);
                ((*handlers_).*m)(req, res, role);
            } catch (const Error& e) {
                int status = http_status(e.code());
                if (e.code() == Errc::unauthorized) {
                    write_error(res, unauthorized().status, unauthorized().code, unauthorized().message);
                } else if (status >= 500 && status != 502 && status != 503) {
                    // Internal failures stay opaque.
                    write_error(res, 500, "internal", "internal error");
                } else {
                    write_error(res, status, e.code_name(), e.what());
                }
            }
        };
        if (route.method == "GET") http_->Get(route.pattern, h);
        else http_->Post(route.pattern, h);
    }

    http_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        write_error(res, 500, "internal", "internal error");
    });
    http_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
        switch (res.status) {
        case 404: write_error(res, 404, "not_found", "no such resource"); break;
        case 413: write_error(res, 413, "payload_too_large", "request body too large"); break;
        case 400: write_error(res, 400, "validation", "malformed request"); break;
        default: write_error(res, res.status, "http_error", "request failed"); break;
        }
        return httplib::Server::HandlerResponse::Handled;
    });
}

Server::~Server()
{
    stop();
}

int Server::bind(const std::string& host, int port)
{
    // SO_REUSEADDR only: the library default (SO_REUSEPORT) would let a
    // second instance share a busy port silently.
    http_->set_socket_options([](int sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(Errc::address_in_use, "cannot bind " + host + ":" + std::to_string(port));
    port_ = bound;
    return bound;
}

void Server::listen()
{
    http_->listen_after_bind();
}

int Server::start(const std::string& host, int port)
{
    int p = bind(host, port);
    thread_ = std::thread([this] { listen(); });
    http_->wait_until_ready();
    return p;
}

void Server::stop()
{
    stopping_ = true;
    if (http_) http_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace still::api
