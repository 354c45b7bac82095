#include "still/rates/sources.hpp"

#include "still/core/error.hpp"

#include <fstream>
#include <future>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace still::rates {

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to)
{
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

class DefaultTransport : public Transport {
public:
    std::string get(const std::string& url, std::chrono::milliseconds timeout) override
    {
        if (url.rfind("file://", 0) == 0) {
            std::ifstream in(url.substr(7));
            if (!in) throw Error(Errc::io_error, "fixture file not readable");
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw Error(Errc::invalid_argument, "unsupported URL");
        auto path_start = url.find('/', scheme_end + 3);
        std::string origin = url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_follow_location(true);
        auto res = client.Get(path);
        if (!res) throw Error(Errc::io_error, "request failed: " + httplib::to_string(res.error()));
        if (res->status != 200) throw Error(Errc::io_error, "HTTP status " + std::to_string(res->status));
        return res->body;
    }
};

} // namespace

std::unique_ptr<Transport> make_default_transport()
{
    return std::make_unique<DefaultTransport>();
}

std::string expand_url(const std::string& url_template, const CurrencyPair& pair)
{
    std::string out = url_template;
    replace_all(out, "{fiat}", pair.fiat);
    replace_all(out, "{crypto}", pair.crypto);
    return out;
}

Cents extract_price(const std::string& body, const std::string& field, const CurrencyPair& pair)
{
    auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw Error(Errc::parse_error, "response is not JSON");
    const nlohmann::json* node = &doc;
    std::stringstream path(field);
    std::string segment;
    while (std::getline(path, segment, '.')) {
        if (segment.empty()) continue;
        if (node->is_array()) {
            char* end = nullptr;
            unsigned long idx = std::strtoul(segment.c_str(), &end, 10);
            if (*end != '\0' || idx >= node->size()) throw Error(Errc::parse_error, "price field not found");
            node = &(*node)[idx];
        } else if (node->is_object() && node->contains(segment)) {
            node = &(*node)[segment];
        } else {
            throw Error(Errc::parse_error, "price field not found");
        }
    }
    if (node->is_string()) return parse_price(node->get<std::string>(), pair.fiat);
    if (node->is_number()) return parse_price(node->dump(), pair.fiat);
    throw Error(Errc::parse_error, "price field is not a number");
}

FetchResult fetch_quotes(const std::vector<SourceConfig>& sources, const CurrencyPair& pair, Transport& transport,
                         const Clock& clock, std::chrono::milliseconds timeout)
{
    std::vector<const SourceConfig*> selected;
    for (const auto& s : sources)
        if (s.pair == pair) selected.push_back(&s);
    if (selected.empty()) throw Error(Errc::no_sources, "no rate sources configured for " + pair.to_string());

    std::vector<std::future<RateQuote>> pending;
    pending.reserve(selected.size());
    for (const auto* src : selected) {
        pending.push_back(std::async(std::launch::async, [src, &pair, &transport, &clock, timeout] {
            std::string body = transport.get(expand_url(src->url, pair), timeout);
            return RateQuote{src->source_id, pair, extract_price(body, src->field, pair), clock()};
        }));
    }

    FetchResult out;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        try {
            out.quotes.push_back(pending[i].get());
        } catch (const std::exception& e) {
            out.errors.push_back({selected[i]->source_id, e.what()});
        }
    }
    if (out.quotes.empty()) throw Error(Errc::all_sources_failed, "no rate source answered");
    return out;
}

} // namespace still::rates
