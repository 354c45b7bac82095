#include "still/simnode/scenario.hpp"

#include "still/core/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace still::simnode {

namespace {

std::string upper(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what)
{
    throw Error(Errc::parse_error, "line " + std::to_string(line) + ": " + what);
}

// Whitespace split; double quotes group words.
std::vector<std::string> tokenize(std::string_view text, std::size_t line)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        if (text[i] == '#') break;
        std::string tok;
        if (text[i] == '"') {
            auto end = text.find('"', i + 1);
            if (end == std::string_view::npos) fail(line, "unterminated quote");
            tok = std::string(text.substr(i + 1, end - i - 1));
            i = end + 1;
        } else {
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) tok += text[i++];
        }
        out.push_back(std::move(tok));
    }
    return out;
}

std::int64_t parse_int(const std::string& s, std::size_t line, const char* what)
{
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < 0) fail(line, std::string("invalid ") + what);
    return v;
}

// Removes "<KEY> <value>" from the token list; returns the value.
std::optional<std::string> take_option(std::vector<std::string>& toks, std::string_view key, std::size_t line)
{
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (upper(toks[i]) != key) continue;
        if (i + 1 >= toks.size()) fail(line, std::string(key) + " needs a value");
        std::string v = toks[i + 1];
        toks.erase(toks.begin() + static_cast<std::ptrdiff_t>(i), toks.begin() + static_cast<std::ptrdiff_t>(i + 2));
        return v;
    }
    return std::nullopt;
}

void expect_args(const std::vector<std::string>& toks, std::size_t min, std::size_t max, std::size_t line,
                 const char* usage)
{
    if (toks.size() < min || toks.size() > max) fail(line, std::string("usage: ") + usage);
}

} // namespace

std::string_view op_name(Op op)
{
    switch (op) {
    case Op::fund: return "FUND";
    case Op::rate: return "RATE";
    case Op::sale: return "SALE";
    case Op::pay: return "PAY";
    case Op::mine: return "MINE";
    case Op::conflict: return "CONFLICT";
    case Op::reorg: return "REORG";
    case Op::advance: return "ADVANCE";
    case Op::expect: return "EXPECT";
    }
    return "?";
}

Sats parse_amount(std::string_view text)
{
    std::string t(text);
    std::string u = upper(t);
    if (u.size() > 3 && u.compare(u.size() - 3, 3, "SAT") == 0) {
        std::string digits = t.substr(0, t.size() - 3);
        Sats v = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
        if (ec != std::errc() || p != digits.data() + digits.size() || v <= 0)
            throw Error(Errc::parse_error, "invalid satoshi amount");
        return v;
    }
    Sats v = parse_btc(t);
    if (v <= 0) throw Error(Errc::parse_error, "amount must be positive");
    return v;
}

std::vector<Command> parse_scenario(std::string_view text)
{
    std::vector<Command> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        auto toks = tokenize(line, line_no);
        if (toks.empty()) continue;
        Command c;
        c.line = line_no;
        std::string verb = upper(toks.front());
        toks.erase(toks.begin());
        try {
            if (verb == "FUND") {
                c.op = Op::fund;
                expect_args(toks, 2, 2, line_no, "FUND <wallet> <amount>");
                c.target = toks[0];
                c.sats = parse_amount(toks[1]);
            } else if (verb == "RATE") {
                c.op = Op::rate;
                expect_args(toks, 2, 2, line_no, "RATE <fiat> <price>");
                c.target = upper(toks[0]);
                c.cents = parse_cents(toks[1]);
                if (c.cents <= 0) fail(line_no, "rate must be positive");
            } else if (verb == "SALE") {
                c.op = Op::sale;
                if (auto as = take_option(toks, "AS", line_no)) c.as = *as;
                if (toks.size() < 2) fail(line_no, "usage: SALE <fiat-amount> <fiat> [note...] [AS <name>]");
                c.cents = parse_cents(toks[0]);
                c.currency = upper(toks[1]);
                for (std::size_t i = 2; i < toks.size(); ++i) c.note += (i > 2 ? " " : "") + toks[i];
            } else if (verb == "PAY") {
                c.op = Op::pay;
                if (auto as = take_option(toks, "AS", line_no)) c.as = *as;
                if (auto from = take_option(toks, "FROM", line_no)) c.from = *from;
                expect_args(toks, 1, 2, line_no, "PAY <sale> [<amount>|EXACT] [FROM <wallet>] [AS <name>]");
                c.target = toks[0];
                if (toks.size() == 2 && upper(toks[1]) != "EXACT") c.sats = parse_amount(toks[1]);
            } else if (verb == "MINE") {
                c.op = Op::mine;
                expect_args(toks, 0, 1, line_no, "MINE [<n>]");
                c.count = toks.empty() ? 1 : parse_int(toks[0], line_no, "block count");
            } else if (verb == "CONFLICT") {
                c.op = Op::conflict;
                if (auto as = take_option(toks, "AS", line_no)) c.as = *as;
                expect_args(toks, 1, 1, line_no, "CONFLICT <tx> [AS <name>]");
                c.target = toks[0];
            } else if (verb == "REORG") {
                c.op = Op::reorg;
                if (auto r = take_option(toks, "REPLACE", line_no)) c.replace = parse_int(*r, line_no, "replacement count");
                if (auto w = take_option(toks, "WITH", line_no)) c.with = *w;
                expect_args(toks, 1, 1, line_no, "REORG <depth> [REPLACE <n>] [WITH <tx>]");
                c.count = parse_int(toks[0], line_no, "depth");
                if (!c.with.empty() && c.replace == 0) c.replace = 1;
            } else if (verb == "ADVANCE") {
                c.op = Op::advance;
                expect_args(toks, 1, 1, line_no, "ADVANCE <seconds>");
                c.count = parse_int(toks[0], line_no, "seconds");
            } else if (verb == "EXPECT") {
                c.op = Op::expect;
                if (auto n = take_option(toks, "CONFIRMATIONS", line_no))
                    c.confirmations = parse_int(*n, line_no, "confirmation count");
                expect_args(toks, 2, 2, line_no, "EXPECT <sale> <state> [CONFIRMATIONS <n>]");
                c.target = toks[0];
                std::string state = toks[1];
                std::transform(state.begin(), state.end(), state.begin(),
                               [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
                c.state = ledger::parse_state(state);
            } else {
                fail(line_no, "unknown command " + verb);
            }
        } catch (const Error& e) {
            if (std::string_view(e.what()).rfind("line ", 0) == 0) throw;
            fail(line_no, e.what());
        }
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace still::simnode
