#pragma once

#include "still/core/money.hpp"
#include "still/ledger/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace still::simnode {

// Line-oriented scenario scripts. One command per line, '#' starts a
// comment, keywords are case-insensitive, names are case-sensitive.
//
//   FUND <wallet> <amount>                  faucet pays a wallet, mined at once
//   RATE <fiat> <price>                     set every mock source, e.g. RATE CAD 300.00
//   SALE <fiat-amount> <fiat> [note...] [AS <name>]
//   PAY <sale> [<amount>|EXACT] [FROM <wallet>] [AS <name>]
//   MINE [<n>]                              default 1
//   CONFLICT <tx> [AS <name>]               payer double-spends <tx> with a higher fee
//   REORG <depth> [REPLACE <n>] [WITH <tx>] detach blocks, connect n empty
//                                           replacements, the first holding <tx>
//   ADVANCE <seconds>                       move the logical clock
//   EXPECT <sale> <state> [CONFIRMATIONS <n>]
//
// Amounts are BTC decimals ("0.015") or satoshis with a suffix ("1500sat").
// <sale> and <tx> are names bound with AS, or literal ids. The wallet of a
// PAY defaults to "customer".
enum class Op { fund, rate, sale, pay, mine, conflict, reorg, advance, expect };

struct Command {
    std::size_t line = 0;
    Op op = Op::mine;
    std::string target;         // wallet, sale or tx reference, or fiat code
    std::optional<Sats> sats;   // FUND / PAY amount
    Cents cents = 0;            // SALE amount, RATE price
    std::string currency;       // SALE
    std::string note;           // SALE
    std::string from = "customer";
    std::string as;
    std::int64_t count = 0;     // MINE n, REORG depth, ADVANCE seconds
    std::int64_t replace = 0;   // REORG
    std::string with;           // REORG
    ledger::InvoiceState state = ledger::InvoiceState::pending; // EXPECT
    std::optional<std::int64_t> confirmations;                  // EXPECT
};

// Throws Errc::parse_error with a "line N: ..." message.
std::vector<Command> parse_scenario(std::string_view text);
// "0.015" or "1500sat".
Sats parse_amount(std::string_view text);
std::string_view op_name(Op op);

} // namespace still::simnode
