#include "still/treasury/treasury.hpp"

#include "still/core/error.hpp"

#include <algorithm>
#include <set>

namespace still::treasury {

void CashOutPolicy::validate() const
{
    if (threshold_cents <= 0) throw Error(Errc::config_error, "cash-out threshold must be positive");
    if (interval_days <= 0) throw Error(Errc::config_error, "cash-out interval must be positive");
    if (min_confirmations < 0) throw Error(Errc::config_error, "minimum confirmations must not be negative");
}

std::string_view reason_name(DueReason reason)
{
    switch (reason) {
    case DueReason::threshold: return "threshold";
    case DueReason::interval: return "interval";
    case DueReason::none: break;
    }
    return "none";
}

CashOutStatus cashout_due(Cents unswept_cents, std::optional<Timestamp> last_sweep_at, const CashOutPolicy& policy,
                          Timestamp now)
{
    CashOutStatus s;
    s.unswept_cents = unswept_cents;
    s.last_sweep_at = last_sweep_at;
    if (unswept_cents >= policy.threshold_cents) {
        s.due = true;
        s.reason = DueReason::threshold;
    } else if (last_sweep_at && now - *last_sweep_at >= policy.interval_days * kSecondsPerDay) {
        s.due = true;
        s.reason = DueReason::interval;
    }
    return s;
}

CashOutStatus cashout_due(const ledger::Ledger& ledger, const CashOutPolicy& policy, Timestamp now)
{
    Cents total = 0;
    std::optional<Timestamp> oldest;
    for (const auto& s : ledger.sales()) {
        if (s.swept || !(ledger::is_paid(s.state) || s.state == ledger::InvoiceState::late_paid)) continue;
        if (s.fiat_currency == policy.currency) total += s.fiat_cents;
        if (!oldest || s.created_at < *oldest) oldest = s.created_at;
    }
    std::optional<Timestamp> last;
    for (const auto& w : ledger.sweeps()) last = std::max(last.value_or(w.at), w.at);
    if (!last) last = oldest;
    return cashout_due(total, last, policy, now);
}

std::int64_t estimate_size(std::size_t inputs)
{
    return static_cast<std::int64_t>(inputs) * chain::kP2pkhInputSize + chain::kP2pkhOutputSize +
           chain::kTxOverhead;
}

Sats sweep_fee(std::size_t inputs, Sats feerate)
{
    return std::max(kFeeFloor, feerate * estimate_size(inputs));
}

chain::Transaction SweepPlan::unsigned_tx(const keystore::Network& network) const
{
    chain::Transaction tx;
    for (const auto& in : inputs) tx.inputs.push_back(chain::TxIn{in.outpoint, {}, 0xffffffff});
    tx.outputs.push_back(chain::TxOut{total_out, chain::script_for_address(destination, network)});
    return tx;
}

SweepPlan build_sweep(std::vector<SweepInput> inputs, const std::string& destination, Sats feerate,
                      const keystore::Network& network)
{
    (void)chain::script_for_address(destination, network);
    if (feerate < 0) throw Error(Errc::validation, "feerate must not be negative");
    if (inputs.empty()) throw Error(Errc::nothing_to_sweep, "nothing to sweep");
    SweepPlan plan;
    plan.destination = destination;
    for (const auto& in : inputs) {
        if (in.value <= 0) throw Error(Errc::validation, "input value must be positive");
        plan.total_in += in.value;
    }
    plan.fee_sats = sweep_fee(inputs.size(), feerate);
    plan.total_out = plan.total_in - plan.fee_sats;
    if (plan.total_out <= kDustLimit) throw Error(Errc::dust_output, "dust output");
    plan.inputs = std::move(inputs);
    return plan;
}

chain::Transaction sign_sweep(const SweepPlan& plan, const keystore::Keystore& keystore, std::string_view passphrase)
{
    if (keystore.mode() != keystore::KeystoreMode::hot)
        throw Error(Errc::watch_only, "watch-only store cannot sign");
    std::vector<std::uint32_t> indices;
    for (const auto& in : plan.inputs) indices.push_back(in.derivation_index);
    auto keys = keystore.private_keys(indices, passphrase);
    auto tx = plan.unsigned_tx(keystore.network());
    for (std::size_t i = 0; i < plan.inputs.size(); ++i)
        chain::sign_p2pkh_input(tx, i, keys[i], plan.inputs[i].script_pubkey);
    return tx;
}

Treasury::Treasury(ledger::Ledger& ledger, keystore::Keystore& keystore, payments::ChainSource& source,
                   CashOutPolicy policy, Clock clock)
    : ledger_(ledger), keystore_(keystore), source_(source), policy_(std::move(policy)), clock_(std::move(clock))
{
    policy_.validate();
}

CashOutStatus Treasury::status() const
{
    return cashout_due(ledger_, policy_, clock_());
}

std::vector<SweepInput> Treasury::collect()
{
    std::set<chain::OutPoint> taken;
    for (const auto& w : ledger_.sweeps())
        taken.insert(w.inputs.begin(), w.inputs.end());
    auto tip = source_.tip_height();
    std::vector<SweepInput> out;
    for (const auto& s : ledger_.sales()) {
        if (ledger_.payments(s.sale_id).empty()) continue;
        for (const auto& u : source_.utxos(s.address)) {
            if (taken.count(u.outpoint)) continue;
            std::int64_t conf = u.height > 0 ? tip - u.height + 1 : 0;
            if (conf < policy_.min_confirmations) continue;
            out.push_back(SweepInput{u.outpoint, u.value, u.script_pubkey, s.derivation_index, s.sale_id});
        }
    }
    return out;
}

SweepPlan Treasury::plan(const std::string& destination, Sats feerate)
{
    std::lock_guard lk(mutex_);
    return build_sweep(collect(), destination, feerate, keystore_.network());
}

SweepOutcome Treasury::execute(std::string destination, Sats feerate, std::string_view passphrase, bool require_due)
{
    std::lock_guard lk(mutex_);
    if (destination.empty()) destination = policy_.destination_address;
    if (destination.empty()) throw Error(Errc::validation, "no destination address");
    if (keystore_.mode() != keystore::KeystoreMode::hot)
        throw Error(Errc::watch_only, "watch-only store cannot sign");
    keystore_.verify_passphrase(passphrase);
    if (require_due && !status().due) throw Error(Errc::not_due, "cash-out is not due");

    SweepOutcome r;
    r.plan = build_sweep(collect(), destination, feerate, keystore_.network());
    r.tx = sign_sweep(r.plan, keystore_, passphrase);
    r.txid = source_.broadcast(r.tx);

    ledger::SweepRecord rec;
    rec.txid = r.txid;
    for (const auto& in : r.plan.inputs) {
        rec.inputs.push_back(in.outpoint);
        if (std::find(rec.sale_ids.begin(), rec.sale_ids.end(), in.sale_id) == rec.sale_ids.end())
            rec.sale_ids.push_back(in.sale_id);
    }
    rec.total_in = r.plan.total_in;
    rec.fee = r.plan.fee_sats;
    rec.destination = destination;
    rec.at = clock_();
    ledger_.record_sweep(rec);
    r.sale_ids = rec.sale_ids;
    return r;
}

} // namespace still::treasury
