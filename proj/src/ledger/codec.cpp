#include "codec.hpp"

namespace still::ledger {

namespace {

json opt_txid(const std::optional<chain::Txid>& t)
{
    return t ? json(t->hex()) : json(nullptr);
}

std::optional<chain::Txid> opt_txid(const json& j)
{
    if (j.is_null()) return std::nullopt;
    return chain::Txid::from_hex(j.get<std::string>());
}

} // namespace

json to_json(const SaleRecord& s)
{
    return {
        {"sale_id", s.sale_id},
        {"branch_id", s.branch_id},
        {"fiat_cents", s.fiat_cents},
        {"fiat_currency", s.fiat_currency},
        {"locked_rate", s.locked_rate},
        {"btc_sats", s.btc_sats},
        {"address", s.address},
        {"derivation_index", s.derivation_index},
        {"note", s.note},
        {"created_at", s.created_at},
        {"state", state_name(s.state)},
        {"expires_at", s.expires_at},
        {"updated_at", s.updated_at},
        {"excess_sats", s.excess_sats},
        {"evidence_txid", opt_txid(s.evidence_txid)},
        {"reorg_alert", s.reorg_alert},
        {"swept", s.swept},
        {"revision", s.revision},
    };
}

SaleRecord sale_from_json(const json& j)
{
    SaleRecord s;
    s.sale_id = j.at("sale_id").get<std::string>();
    s.branch_id = j.at("branch_id").get<std::string>();
    s.fiat_cents = j.at("fiat_cents").get<Cents>();
    s.fiat_currency = j.at("fiat_currency").get<std::string>();
    s.locked_rate = j.at("locked_rate").get<Cents>();
    s.btc_sats = j.at("btc_sats").get<Sats>();
    s.address = j.at("address").get<std::string>();
    s.derivation_index = j.at("derivation_index").get<std::uint32_t>();
    s.note = j.at("note").get<std::string>();
    s.created_at = j.at("created_at").get<Timestamp>();
    s.state = parse_state(j.at("state").get<std::string>());
    s.expires_at = j.at("expires_at").get<Timestamp>();
    s.updated_at = j.value("updated_at", s.created_at);
    s.excess_sats = j.value("excess_sats", Sats{0});
    s.evidence_txid = opt_txid(j.value("evidence_txid", json(nullptr)));
    s.reorg_alert = j.value("reorg_alert", false);
    s.swept = j.value("swept", false);
    s.revision = j.value("revision", std::uint64_t{0});
    return s;
}

json to_json(const PaymentRecord& p)
{
    return {
        {"txid", p.txid.hex()},
        {"sale_id", p.sale_id},
        {"paid_sats", p.paid_sats},
        {"first_seen_at", p.first_seen_at},
        {"block_height", p.block_height},
        {"status", payment_status_name(p.status)},
    };
}

PaymentRecord payment_from_json(const json& j)
{
    PaymentRecord p;
    p.txid = chain::Txid::from_hex(j.at("txid").get<std::string>());
    p.sale_id = j.at("sale_id").get<std::string>();
    p.paid_sats = j.at("paid_sats").get<Sats>();
    p.first_seen_at = j.at("first_seen_at").get<Timestamp>();
    p.block_height = j.at("block_height").get<std::int64_t>();
    p.status = parse_payment_status(j.at("status").get<std::string>());
    return p;
}

json to_json(const Transition& t)
{
    return {{"from", state_name(t.from)}, {"to", state_name(t.to)}, {"at", t.at}, {"txid", opt_txid(t.txid)}};
}

Transition transition_from_json(const json& j)
{
    Transition t;
    t.from = parse_state(j.at("from").get<std::string>());
    t.to = parse_state(j.at("to").get<std::string>());
    t.at = j.at("at").get<Timestamp>();
    t.txid = opt_txid(j.value("txid", json(nullptr)));
    return t;
}

json to_json(const SweepRecord& s)
{
    json inputs = json::array();
    for (const auto& in : s.inputs) inputs.push_back({{"txid", in.txid.hex()}, {"vout", in.vout}});
    return {
        {"txid", s.txid.hex()}, {"sale_ids", s.sale_ids}, {"inputs", inputs},          {"total_in", s.total_in},
        {"fee", s.fee},         {"destination", s.destination}, {"at", s.at},
    };
}

SweepRecord sweep_from_json(const json& j)
{
    SweepRecord s;
    s.txid = chain::Txid::from_hex(j.at("txid").get<std::string>());
    s.sale_ids = j.at("sale_ids").get<std::vector<std::string>>();
    for (const auto& in : j.at("inputs"))
        s.inputs.push_back({chain::Txid::from_hex(in.at("txid").get<std::string>()), in.at("vout").get<std::uint32_t>()});
    s.total_in = j.at("total_in").get<Sats>();
    s.fee = j.at("fee").get<Sats>();
    s.destination = j.at("destination").get<std::string>();
    s.at = j.at("at").get<Timestamp>();
    return s;
}

} // namespace still::ledger
