#pragma once

#include "still/rates/rates.hpp"

#include <chrono>
#include <memory>
#include <string>
#include <vector>

namespace still::rates {

// One configured price feed. `url` may contain {fiat} and {crypto}
// placeholders (lower case substituted with upper-case codes). `field` is a
// dotted path into the JSON response; numeric segments index arrays, e.g.
// "data.0.last". The addressed value may be a JSON number or a string such
// as "300.00" or "300.00 CAD".
struct SourceConfig {
    std::string source_id;
    std::string url;
    std::string field;
    CurrencyPair pair;
};

struct SourceError {
    std::string source_id;
    std::string message;
};

struct FetchResult {
    std::vector<RateQuote> quotes;
    std::vector<SourceError> errors;
};

// Retrieves response bodies. Implementations throw on timeout or failure.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string get(const std::string& url, std::chrono::milliseconds timeout) = 0;
};

// http://, https:// (cpp-httplib) and file:// (local fixture files).
std::unique_ptr<Transport> make_default_transport();

std::string expand_url(const std::string& url_template, const CurrencyPair& pair);
// Throws Errc::parse_error when the body is not JSON, the path is missing,
// or the value is not a positive price.
Cents extract_price(const std::string& body, const std::string& field, const CurrencyPair& pair);

// Queries every source for `pair` concurrently. Unreachable sources land in
// `errors`. Throws Errc::no_sources if none is configured for the pair and
// Errc::all_sources_failed if none answered.
FetchResult fetch_quotes(const std::vector<SourceConfig>& sources, const CurrencyPair& pair, Transport& transport,
                         const Clock& clock, std::chrono::milliseconds timeout = std::chrono::seconds(5));

} // namespace still::rates
