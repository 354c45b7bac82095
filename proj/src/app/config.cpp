#include "still/app/config.hpp"

#include "still/core/bytes.hpp"
#include "still/core/error.hpp"
#include "still/core/record_file.hpp"

#include <cstdlib>
#include <set>
#include <yaml-cpp/yaml.h>

namespace still::app {

namespace {

class Reader {
public:
    explicit Reader(std::string name) : name_(std::move(name)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const
    {
        const auto& m = node.Mark();
        if (m.is_null()) throw Error(Errc::config_error, name_ + ": " + what);
        throw Error(Errc::config_error,
                    name_ + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1) + ": " + what);
    }

    void require_map(const YAML::Node& node, const std::string& what) const
    {
        if (!node.IsMap()) fail(node, what + " must be a mapping");
    }

    void only_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed) const
    {
        std::set<std::string_view> ok(allowed);
        for (const auto& kv : node) {
            auto key = kv.first.as<std::string>();
            if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "'");
        }
    }

    template <class T>
    void get(const YAML::Node& parent, const char* key, T& out) const
    {
        auto node = parent[key];
        if (!node) return;
        if (!node.IsScalar()) fail(node, std::string(key) + ": expected a scalar");
        try {
            out = node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, std::string(key) + ": invalid value '" + node.Scalar() + "'");
        }
    }

    std::vector<std::string> strings(const YAML::Node& parent, const char* key) const
    {
        std::vector<std::string> out;
        auto node = parent[key];
        if (!node) return out;
        if (!node.IsSequence()) fail(node, std::string(key) + ": expected a list");
        for (const auto& item : node) {
            if (!item.IsScalar()) fail(item, std::string(key) + ": expected strings");
            out.push_back(item.Scalar());
        }
        return out;
    }

    std::string name_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string resolve_url(const std::filesystem::path& base, const std::string& url)
{
    constexpr std::string_view scheme = "file://";
    if (url.rfind(scheme, 0) != 0) return url;
    std::string rest = url.substr(scheme.size());
    if (!rest.empty() && rest[0] == '/') return url;
    return std::string(scheme) + (base / rest).string();
}

} // namespace

std::pair<std::string, int> parse_bind(const std::string& text)
{
    auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
        throw Error(Errc::config_error, "bind address must be host:port");
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) throw std::invalid_argument("port");
    } catch (const std::exception&) {
        throw Error(Errc::config_error, "bind port is not a number");
    }
    if (port < 0 || port > 65535) throw Error(Errc::config_error, "bind port out of range");
    return {text.substr(0, colon), port};
}

treasury::CashOutPolicy Config::cashout_policy() const
{
    treasury::CashOutPolicy p;
    p.threshold_cents = branch.cashout_threshold_cents;
    p.interval_days = branch.cashout_interval_days;
    p.destination_address = branch.cashout_destination;
    p.currency = branch.default_currency;
    p.min_confirmations = sweep_min_confirmations;
    return p;
}

void Config::validate() const
{
    (void)keystore::Network::from_name(network);
    policy.validate();
    cashout_policy().validate();
    if (branch.default_currency.size() != 3) throw Error(Errc::config_error, "default_currency must be ISO-4217");
    if (expiry_seconds <= 0) throw Error(Errc::config_error, "expiry_seconds must be positive");
    if (long_poll_max.count() < 0 || long_poll_max.count() > 25)
        throw Error(Errc::config_error, "long_poll_seconds must be within 0..25");
    if (rates.pairs.empty()) throw Error(Errc::config_error, "rates.pairs must not be empty");
    if (rates.sources.empty()) throw Error(Errc::config_error, "rates.sources must not be empty");
    if (chain.kind == ChainKind::explorer && chain.explorer_api.empty())
        throw Error(Errc::config_error, "chain.explorer_api is required for the explorer source");
    if (auth.admin_tokens.empty()) throw Error(Errc::config_error, "auth.admin_tokens must not be empty");
    for (const auto* list : {&auth.employee_tokens, &auth.admin_tokens})
        for (const auto& t : *list)
            if (t.size() < 16) throw Error(Errc::config_error, "auth tokens must be at least 16 characters");
}

Config parse_config(const std::string& text, const std::filesystem::path& base_dir, const std::string& name)
{
    Reader r(name);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(Errc::config_error, name + ":" + std::to_string(e.mark.line + 1) + ":" +
                                            std::to_string(e.mark.column + 1) + ": " + e.msg);
    }
    Config c;
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    r.require_map(root, "top level");
    r.only_keys(root, {"server", "network", "keystore", "journal", "durable", "snapshot_every", "explorer_url_template",
                       "branch", "payments", "rates", "auth", "chain"});

    if (auto s = root["server"]) {
        r.require_map(s, "server");
        r.only_keys(s, {"bind", "long_poll_seconds"});
        if (auto b = s["bind"]) {
            try {
                std::tie(c.bind_host, c.bind_port) = parse_bind(b.as<std::string>());
            } catch (const Error& e) {
                r.fail(b, e.what());
            }
        }
        std::int64_t lp = c.long_poll_max.count();
        r.get(s, "long_poll_seconds", lp);
        c.long_poll_max = std::chrono::seconds(lp);
    }
    r.get(root, "network", c.network);
    try {
        (void)keystore::Network::from_name(c.network);
    } catch (const Error&) {
        r.fail(root["network"], "unknown network '" + c.network + "'");
    }
    std::string path;
    if (root["keystore"]) {
        r.get(root, "keystore", path);
        c.keystore_path = path;
    }
    if (root["journal"]) {
        r.get(root, "journal", path);
        c.journal_path = path;
    }
    c.keystore_path = resolve(base_dir, c.keystore_path.string());
    c.journal_path = resolve(base_dir, c.journal_path.string());
    r.get(root, "durable", c.durable);
    r.get(root, "snapshot_every", c.snapshot_every);
    r.get(root, "explorer_url_template", c.explorer_template);

    if (auto b = root["branch"]) {
        r.require_map(b, "branch");
        r.only_keys(b, {"id", "display_name", "default_currency", "zero_conf_max_fiat_cents", "cashout_threshold_cents",
                        "cashout_interval_days", "cashout_destination"});
        r.get(b, "id", c.branch.branch_id);
        r.get(b, "display_name", c.branch.display_name);
        r.get(b, "default_currency", c.branch.default_currency);
        r.get(b, "zero_conf_max_fiat_cents", c.branch.zero_conf_max_fiat_cents);
        r.get(b, "cashout_threshold_cents", c.branch.cashout_threshold_cents);
        r.get(b, "cashout_interval_days", c.branch.cashout_interval_days);
        r.get(b, "cashout_destination", c.branch.cashout_destination);
        if (c.branch.cashout_threshold_cents <= 0)
            r.fail(b["cashout_threshold_cents"], "cashout_threshold_cents must be positive");
        if (c.branch.cashout_interval_days <= 0)
            r.fail(b["cashout_interval_days"], "cashout_interval_days must be positive");
        if (c.branch.zero_conf_max_fiat_cents < 0)
            r.fail(b["zero_conf_max_fiat_cents"], "zero_conf_max_fiat_cents must not be negative");
    }
    c.policy.zero_conf_max_fiat_cents = c.branch.zero_conf_max_fiat_cents;
    c.policy.bands.front().max_fiat_cents = c.branch.zero_conf_max_fiat_cents;

    if (auto p = root["payments"]) {
        r.require_map(p, "payments");
        r.only_keys(p, {"expiry_seconds", "underpay_tolerance_bp", "confirmation_bands", "allow_reorg_regression",
                        "sweep_min_confirmations"});
        r.get(p, "expiry_seconds", c.expiry_seconds);
        r.get(p, "underpay_tolerance_bp", c.policy.underpay_tolerance_bp);
        r.get(p, "allow_reorg_regression", c.policy.allow_reorg_regression);
        r.get(p, "sweep_min_confirmations", c.sweep_min_confirmations);
        if (auto bands = p["confirmation_bands"]) {
            if (!bands.IsSequence() || bands.size() == 0) r.fail(bands, "confirmation_bands must be a non-empty list");
            c.policy.bands.clear();
            for (const auto& band : bands) {
                r.require_map(band, "confirmation band");
                r.only_keys(band, {"max_fiat_cents", "confirmations"});
                payments::ConfirmationBand cb;
                cb.max_fiat_cents = INT64_MAX;
                r.get(band, "max_fiat_cents", cb.max_fiat_cents);
                r.get(band, "confirmations", cb.confirmations);
                c.policy.bands.push_back(cb);
            }
        }
        try {
            c.policy.validate();
        } catch (const Error& e) {
            r.fail(p, e.what());
        }
    }

    if (auto rt = root["rates"]) {
        r.require_map(rt, "rates");
        r.only_keys(rt, {"pairs", "staleness_seconds", "quorum", "refresh_seconds", "tolerance_bp",
                         "fetch_timeout_ms", "sources"});
        for (const auto& text : r.strings(rt, "pairs")) {
            try {
                c.rates.pairs.push_back(rates::CurrencyPair::parse(text));
            } catch (const Error&) {
                r.fail(rt["pairs"], "invalid pair '" + text + "'");
            }
        }
        r.get(rt, "staleness_seconds", c.rates.policy.staleness_seconds);
        r.get(rt, "quorum", c.rates.policy.quorum);
        r.get(rt, "tolerance_bp", c.rates.tolerance_bp);
        std::int64_t refresh = 30, timeout = 5000;
        r.get(rt, "refresh_seconds", refresh);
        r.get(rt, "fetch_timeout_ms", timeout);
        if (refresh <= 0) r.fail(rt["refresh_seconds"], "refresh_seconds must be positive");
        c.rate_refresh = std::chrono::seconds(refresh);
        c.rates.fetch_timeout = std::chrono::milliseconds(timeout);
        if (auto sources = rt["sources"]) {
            if (!sources.IsSequence()) r.fail(sources, "sources must be a list");
            for (const auto& src : sources) {
                r.require_map(src, "rate source");
                r.only_keys(src, {"id", "url", "field", "pair"});
                rates::SourceConfig sc;
                std::string pair;
                r.get(src, "id", sc.source_id);
                r.get(src, "url", sc.url);
                r.get(src, "field", sc.field);
                r.get(src, "pair", pair);
                if (sc.source_id.empty() || sc.url.empty() || sc.field.empty() || pair.empty())
                    r.fail(src, "rate sources need id, url, field and pair");
                try {
                    sc.pair = rates::CurrencyPair::parse(pair);
                } catch (const Error&) {
                    r.fail(src["pair"], "invalid pair '" + pair + "'");
                }
                sc.url = resolve_url(base_dir, sc.url);
                c.rates.sources.push_back(std::move(sc));
            }
        }
    }
    if (c.rates.pairs.empty()) c.rates.pairs.push_back(rates::CurrencyPair{c.branch.default_currency});

    if (auto a = root["auth"]) {
        r.require_map(a, "auth");
        r.only_keys(a, {"employee_tokens", "admin_tokens", "public_sales"});
        c.auth.employee_tokens = r.strings(a, "employee_tokens");
        c.auth.admin_tokens = r.strings(a, "admin_tokens");
        r.get(a, "public_sales", c.auth.public_sales);
    }

    if (auto ch = root["chain"]) {
        r.require_map(ch, "chain");
        r.only_keys(ch, {"kind", "explorer_api", "poll_seconds"});
        std::string kind = "simnode";
        r.get(ch, "kind", kind);
        if (kind == "simnode") c.chain.kind = ChainKind::simnode;
        else if (kind == "explorer") c.chain.kind = ChainKind::explorer;
        else r.fail(ch["kind"], "chain.kind must be simnode or explorer");
        r.get(ch, "explorer_api", c.chain.explorer_api);
        double poll = 5;
        r.get(ch, "poll_seconds", poll);
        if (poll <= 0) r.fail(ch["poll_seconds"], "poll_seconds must be positive");
        c.chain.poll_interval = std::chrono::milliseconds(static_cast<std::int64_t>(poll * 1000));
    }

    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(Errc::config_error, name + ": " + e.what());
    }
    return c;
}

Config load_config(const std::filesystem::path& path)
{
    Bytes raw;
    try {
        raw = read_file(path);
    } catch (const Error&) {
        throw Error(Errc::config_error, "cannot read config file " + path.string());
    }
    auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    auto c = parse_config(std::string(raw.begin(), raw.end()), base, path.filename().string());
    c.source = path;
    return c;
}

void apply_env_overrides(Config& config)
{
    if (const char* bind = std::getenv("STILL_BIND"); bind && *bind)
        std::tie(config.bind_host, config.bind_port) = parse_bind(bind);
}

} // namespace still::app
