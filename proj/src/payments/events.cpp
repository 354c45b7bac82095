#include "still/payments/events.hpp"

namespace still::payments {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

} // namespace

std::string event_key(const ChainEvent& event)
{
    return std::visit(Overloaded{
                          [](const TxSeen& e) {
                              return "T:" + e.tx.txid().hex() + ':' + std::to_string(e.block_height);
                          },
                          [](const BlockMined& e) {
                              return "B:" + std::to_string(e.height) + ':' + to_hex(e.block_hash);
                          },
                          [](const Conflict& e) { return "C:" + e.txid.hex() + ':' + e.conflicting_txid.hex(); },
                          [](const Reorg& e) { return "R:" + std::to_string(e.new_height) + ':' + to_hex(e.tip_hash); },
                      },
                      event.kind);
}

std::string describe(const ChainEvent& event)
{
    return std::visit(Overloaded{
                          [](const TxSeen& e) { return "tx seen " + e.tx.txid().hex(); },
                          [](const BlockMined& e) {
                              return "block " + std::to_string(e.height) + " with " + std::to_string(e.txids.size()) +
                                     " txs";
                          },
                          [](const Conflict& e) {
                              return "conflict " + e.txid.hex() + " by " + e.conflicting_txid.hex();
                          },
                          [](const Reorg& e) { return "reorg to height " + std::to_string(e.new_height); },
                      },
                      event.kind);
}

} // namespace still::payments
