#pragma once

#include "still/ledger/types.hpp"

#include <json.hpp>

namespace still::ledger {

using nlohmann::json;

json to_json(const SaleRecord& s);
SaleRecord sale_from_json(const json& j);
json to_json(const PaymentRecord& p);
PaymentRecord payment_from_json(const json& j);
json to_json(const Transition& t);
Transition transition_from_json(const json& j);
json to_json(const SweepRecord& s);
SweepRecord sweep_from_json(const json& j);

} // namespace still::ledger
