#include "still/ledger/types.hpp"

#include "still/core/error.hpp"

namespace still::ledger {

std::string_view state_name(InvoiceState s)
{
    switch (s) {
    case InvoiceState::pending: return "pending";
    case InvoiceState::paid_0conf: return "paid_0conf";
    case InvoiceState::confirmed: return "confirmed";
    case InvoiceState::underpaid: return "underpaid";
    case InvoiceState::expired: return "expired";
    case InvoiceState::late_paid: return "late_paid";
    case InvoiceState::double_spent: return "double_spent";
    }
    return "unknown";
}

InvoiceState parse_state(std::string_view name)
{
    for (auto s : kAllStates)
        if (state_name(s) == name) return s;
    throw Error(Errc::parse_error, "unknown invoice state");
}

bool is_legal_transition(InvoiceState from, InvoiceState to, bool allow_regression)
{
    using S = InvoiceState;
    switch (from) {
    case S::pending:
        return to == S::paid_0conf || to == S::underpaid || to == S::expired || to == S::confirmed ||
               to == S::double_spent;
    case S::underpaid:
        return to == S::paid_0conf || to == S::expired || to == S::confirmed || to == S::double_spent;
    case S::paid_0conf:
        return to == S::confirmed || to == S::double_spent;
    case S::confirmed:
        return allow_regression && (to == S::paid_0conf || to == S::pending || to == S::double_spent);
    case S::expired:
        return to == S::late_paid;
    case S::late_paid:
    case S::double_spent:
        return false;
    }
    return false;
}

bool is_paid(InvoiceState s)
{
    return s == InvoiceState::paid_0conf || s == InvoiceState::confirmed;
}

bool is_open(InvoiceState s)
{
    return s == InvoiceState::pending || s == InvoiceState::underpaid;
}

std::string_view payment_status_name(PaymentStatus s)
{
    switch (s) {
    case PaymentStatus::mempool: return "mempool";
    case PaymentStatus::confirmed: return "confirmed";
    case PaymentStatus::conflicted: return "conflicted";
    }
    return "unknown";
}

PaymentStatus parse_payment_status(std::string_view name)
{
    for (auto s : {PaymentStatus::mempool, PaymentStatus::confirmed, PaymentStatus::conflicted})
        if (payment_status_name(s) == name) return s;
    throw Error(Errc::parse_error, "unknown payment status");
}

std::string_view role_name(Role r)
{
    switch (r) {
    case Role::anyone: return "public";
    case Role::employee: return "employee";
    case Role::admin: return "admin";
    }
    return "unknown";
}

} // namespace still::ledger
