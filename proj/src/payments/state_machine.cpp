#include "still/payments/state_machine.hpp"

#include <algorithm>

namespace still::payments {

namespace {

using ledger::InvoiceState;
using ledger::PaymentRecord;
using ledger::PaymentStatus;

struct Evaluation {
    MatchResult match;
    bool satisfied = false;
    std::int64_t min_conf = 0;
};

Evaluation evaluate(const SaleTrack& track, const MatchPolicy& policy, std::int64_t tip)
{
    Evaluation ev;
    Sats total = 0;
    bool any = false;
    std::int64_t min_conf = 0;
    for (const auto& p : track.payments) {
        if (p.status == PaymentStatus::conflicted) continue;
        total += p.paid_sats;
        std::int64_t c = p.confirmations(tip);
        min_conf = any ? std::min(min_conf, c) : c;
        any = true;
    }
    ev.match = classify_total(track.sale.btc_sats, total, policy.underpay_tolerance_bp);
    ev.satisfied = ev.match.kind == MatchKind::exact || ev.match.kind == MatchKind::over;
    ev.min_conf = min_conf;
    return ev;
}

bool valid_payment(const SaleTrack& track, const chain::Txid& txid)
{
    return std::any_of(track.payments.begin(), track.payments.end(), [&](const PaymentRecord& p) {
        return p.txid == txid && p.status != PaymentStatus::conflicted;
    });
}

PaymentRecord* find_payment(SaleTrack& track, const chain::Txid& txid)
{
    for (auto& p : track.payments)
        if (p.txid == txid) return &p;
    return nullptr;
}

void finish(EventOutcome& out, const SaleTrack& before, const SaleTrack& after, const MatchPolicy& policy,
            std::int64_t tip, std::optional<chain::Txid> fresh_txid)
{
    Evaluation ev = evaluate(after, policy, tip);
    if (ev.satisfied && ev.match.excess_sats != before.sale.excess_sats) out.excess_sats = ev.match.excess_sats;

    std::optional<chain::Txid> evidence;
    if (fresh_txid) {
        evidence = fresh_txid;
    } else if (before.sale.evidence_txid && valid_payment(after, *before.sale.evidence_txid)) {
        evidence = before.sale.evidence_txid;
    } else {
        for (const auto& p : after.payments)
            if (p.status != PaymentStatus::conflicted) {
                evidence = p.txid;
                break;
            }
    }
    if (evidence && evidence != before.sale.evidence_txid) out.evidence = evidence;
}

} // namespace

EventOutcome on_event(const SaleTrack& track, const ChainEvent& event, const MatchPolicy& policy,
                      const keystore::Network& network, std::int64_t tip)
{
    EventOutcome out;
    SaleTrack next = track;
    std::optional<chain::Txid> fresh_txid;
    bool conflict_hit = false;
    bool reorg_hit = false;

    if (const auto* e = std::get_if<TxSeen>(&event.kind)) {
        Sats amount = paid_to(e->tx, track.sale.address, network);
        if (amount <= 0) return out;
        auto txid = e->tx.txid();
        if (auto* known = find_payment(next, txid)) {
            // A later in-block sighting of a payment first seen unmined.
            if (e->block_height <= 0 || known->block_height > 0 || known->status == PaymentStatus::conflicted)
                return out;
            known->block_height = e->block_height;
            known->status = PaymentStatus::confirmed;
            out.payment_updates.push_back(*known);
        } else {
            PaymentRecord p;
            p.txid = txid;
            p.sale_id = track.sale.sale_id;
            p.paid_sats = amount;
            p.first_seen_at = event.observed_at;
            p.block_height = e->block_height;
            p.status = e->block_height > 0 ? PaymentStatus::confirmed : PaymentStatus::mempool;
            next.payments.push_back(p);
            out.payment_updates.push_back(p);
            fresh_txid = txid;
        }
    } else if (const auto* e = std::get_if<BlockMined>(&event.kind)) {
        for (auto& p : next.payments) {
            if (std::find(e->txids.begin(), e->txids.end(), p.txid) == e->txids.end()) continue;
            if (p.block_height == e->height && p.status == PaymentStatus::confirmed) continue;
            p.block_height = e->height;
            p.status = PaymentStatus::confirmed;
            out.payment_updates.push_back(p);
        }
    } else if (const auto* e = std::get_if<Conflict>(&event.kind)) {
        auto* p = find_payment(next, e->txid);
        if (p && p->status != PaymentStatus::conflicted && p->confirmations(tip) == 0) {
            p->status = PaymentStatus::conflicted;
            p->block_height = 0;
            out.payment_updates.push_back(*p);
            conflict_hit = true;
        }
    } else if (const auto* e = std::get_if<Reorg>(&event.kind)) {
        for (auto& p : next.payments) {
            if (p.block_height <= e->new_height) continue;
            p.block_height = 0;
            if (p.status == PaymentStatus::confirmed) p.status = PaymentStatus::mempool;
            out.payment_updates.push_back(p);
            reorg_hit = true;
        }
    }

    Evaluation prior = evaluate(track, policy, tip);
    Evaluation ev = evaluate(next, policy, tip);
    std::int64_t need = policy.confirmed_threshold(track.sale.fiat_cents);
    bool zero_ok = policy.zero_conf_allowed(track.sale.fiat_cents);
    auto go = [&](InvoiceState to) { out.transitions.push_back(to); };

    switch (track.sale.state) {
    case InvoiceState::pending:
    case InvoiceState::underpaid:
        if (fresh_txid && event.observed_at >= track.sale.expires_at && !prior.satisfied) {
            go(InvoiceState::expired);
            go(InvoiceState::late_paid);
        } else if (ev.satisfied) {
            if (ev.min_conf >= need) {
                go(InvoiceState::confirmed);
            } else if (zero_ok) {
                go(InvoiceState::paid_0conf);
            }
        } else if (conflict_hit) {
            go(InvoiceState::double_spent);
        } else if (ev.match.kind == MatchKind::under && track.sale.state == InvoiceState::pending) {
            go(InvoiceState::underpaid);
        }
        break;
    case InvoiceState::paid_0conf:
        if (ev.satisfied && ev.min_conf >= need) {
            go(InvoiceState::confirmed);
        } else if (!ev.satisfied && conflict_hit) {
            go(InvoiceState::double_spent);
        }
        break;
    case InvoiceState::confirmed:
        if ((reorg_hit || conflict_hit) && (!ev.satisfied || ev.min_conf < need)) {
            if (!policy.allow_reorg_regression) {
                if (!track.sale.reorg_alert) out.reorg_alert = true;
            } else if (!ev.satisfied) {
                go(InvoiceState::double_spent);
            } else {
                go(zero_ok ? InvoiceState::paid_0conf : InvoiceState::pending);
            }
        }
        break;
    case InvoiceState::expired:
        if (fresh_txid) go(InvoiceState::late_paid);
        break;
    case InvoiceState::late_paid:
    case InvoiceState::double_spent:
        break;
    }

    finish(out, track, next, policy, tip, fresh_txid);
    return out;
}

EventOutcome on_tick(const SaleTrack& track, const MatchPolicy& policy, Timestamp now, std::int64_t tip)
{
    EventOutcome out;
    if (!ledger::is_open(track.sale.state) || now < track.sale.expires_at) return out;
    if (evaluate(track, policy, tip).satisfied) return out;
    out.transitions.push_back(InvoiceState::expired);
    return out;
}

void apply_outcome(SaleTrack& track, const EventOutcome& outcome)
{
    for (const auto& u : outcome.payment_updates) {
        if (auto* p = find_payment(track, u.txid)) {
            *p = u;
        } else {
            track.payments.push_back(u);
        }
    }
    if (!outcome.transitions.empty()) track.sale.state = outcome.transitions.back();
    if (outcome.evidence) track.sale.evidence_txid = outcome.evidence;
    if (outcome.excess_sats) track.sale.excess_sats = *outcome.excess_sats;
    if (outcome.reorg_alert) track.sale.reorg_alert = true;
}

} // namespace still::payments
