#include "still/ledger/ledger.hpp"

#include "codec.hpp"
#include "still/core/error.hpp"
#include "still/crypto/hash.hpp"

#include <algorithm>
#include <cctype>

namespace still::ledger {

namespace {

constexpr std::string_view kMagic{"STILLJ\x01", 7};
constexpr std::size_t kMaxNote = 500;
constexpr int kSnapshotFormat = 1;

std::string make_sale_id(const std::string& address)
{
    auto digest = crypto::sha256(as_bytes(address));
    return to_hex(ByteView(digest.data(), 8));
}

bool valid_currency(const std::string& c)
{
    return c.size() == 3 && std::all_of(c.begin(), c.end(), [](unsigned char ch) { return std::isupper(ch); });
}

[[noreturn]] void corrupt(const char* what)
{
    throw Error(Errc::store_corrupt, what);
}

} // namespace

struct Ledger::State {
    bool allow_regression = false;
    std::unordered_map<std::string, SaleRecord> sales;
    std::vector<std::string> order;
    std::unordered_map<std::string, std::string> by_address;
    std::unordered_map<std::string, std::vector<PaymentRecord>> payments;
    std::unordered_map<chain::Txid, std::vector<std::string>> by_tx;
    std::unordered_map<std::string, std::vector<Transition>> transitions;
    std::vector<SweepRecord> sweeps;
    std::int64_t tip = 0;
    std::uint64_t seq = 0;

    SaleRecord& must_find(const std::string& id)
    {
        auto it = sales.find(id);
        if (it == sales.end()) corrupt("journal references an unknown sale");
        return it->second;
    }

    void insert_sale(SaleRecord s)
    {
        if (sales.count(s.sale_id) || by_address.count(s.address)) corrupt("journal repeats a sale or address");
        by_address[s.address] = s.sale_id;
        order.push_back(s.sale_id);
        std::string id = s.sale_id;
        sales.emplace(std::move(id), std::move(s));
    }

    void put_payment(const PaymentRecord& p)
    {
        auto& list = payments[p.sale_id];
        auto it = std::find_if(list.begin(), list.end(), [&](const PaymentRecord& q) { return q.txid == p.txid; });
        if (it == list.end()) {
            list.push_back(p);
            by_tx[p.txid].push_back(p.sale_id);
        } else {
            *it = p;
        }
    }

    void apply(char type, const json& body)
    {
        ++seq;
        switch (type) {
        case 'C': {
            SaleRecord s = sale_from_json(body);
            s.revision = seq;
            insert_sale(std::move(s));
            break;
        }
        case 'S': {
            auto& s = must_find(body.at("sale_id").get<std::string>());
            Transition t = transition_from_json(body);
            if (t.from != s.state) corrupt("journal state change does not match current state");
            if (t.from != t.to && !is_legal_transition(t.from, t.to, allow_regression))
                corrupt("journal contains an illegal transition");
            s.state = t.to;
            s.updated_at = t.at;
            if (t.txid) s.evidence_txid = t.txid;
            if (body.contains("excess_sats")) s.excess_sats = body["excess_sats"].get<Sats>();
            s.revision = seq;
            transitions[s.sale_id].push_back(t);
            break;
        }
        case 'P': {
            PaymentRecord p = payment_from_json(body);
            auto& s = must_find(p.sale_id);
            put_payment(p);
            s.updated_at = std::max(s.updated_at, body.value("at", s.updated_at));
            s.revision = seq;
            break;
        }
        case 'H': {
            std::int64_t old_tip = tip;
            tip = body.at("height").get<std::int64_t>();
            // Wake status watchers whose confirmation count moved.
            for (const auto& [id, list] : payments) {
                for (const auto& p : list) {
                    if (p.block_height > 0 && p.confirmations(old_tip) != p.confirmations(tip)) {
                        sales[id].revision = seq;
                        break;
                    }
                }
            }
            break;
        }
        case 'A': {
            auto& s = must_find(body.at("sale_id").get<std::string>());
            s.reorg_alert = true;
            s.updated_at = body.at("at").get<Timestamp>();
            s.revision = seq;
            break;
        }
        case 'W': {
            SweepRecord w = sweep_from_json(body);
            for (const auto& id : w.sale_ids) {
                auto& s = must_find(id);
                s.swept = true;
                s.revision = seq;
            }
            sweeps.push_back(std::move(w));
            break;
        }
        default:
            corrupt("unknown journal record type");
        }
    }

    json dump() const
    {
        json j;
        j["format"] = kSnapshotFormat;
        j["seq"] = seq;
        j["tip"] = tip;
        json ss = json::array(), ps = json::array(), ts = json::object(), ws = json::array();
        for (const auto& id : order) {
            ss.push_back(to_json(sales.at(id)));
            if (auto it = payments.find(id); it != payments.end())
                for (const auto& p : it->second) ps.push_back(to_json(p));
            if (auto it = transitions.find(id); it != transitions.end()) {
                json list = json::array();
                for (const auto& t : it->second) list.push_back(to_json(t));
                ts[id] = std::move(list);
            }
        }
        for (const auto& w : sweeps) ws.push_back(to_json(w));
        j["sales"] = std::move(ss);
        j["payments"] = std::move(ps);
        j["transitions"] = std::move(ts);
        j["sweeps"] = std::move(ws);
        return j;
    }

    void load(const json& j)
    {
        if (j.at("format").get<int>() != kSnapshotFormat) corrupt("unsupported snapshot format");
        seq = j.at("seq").get<std::uint64_t>();
        tip = j.at("tip").get<std::int64_t>();
        for (const auto& s : j.at("sales")) insert_sale(sale_from_json(s));
        for (const auto& p : j.at("payments")) put_payment(payment_from_json(p));
        for (const auto& [id, list] : j.at("transitions").items())
            for (const auto& t : list) transitions[id].push_back(transition_from_json(t));
        for (const auto& w : j.at("sweeps")) sweeps.push_back(sweep_from_json(w));
    }
};

std::filesystem::path Ledger::snapshot_path(const std::filesystem::path& journal)
{
    auto p = journal;
    p += ".snap";
    return p;
}

Ledger::Ledger(std::filesystem::path journal, LedgerOptions options, SaleServices services, Clock clock)
    : path_(std::move(journal)),
      options_(std::move(options)),
      services_(std::move(services)),
      clock_(std::move(clock)),
      state_(std::make_unique<State>())
{
    state_->allow_regression = options_.allow_reorg_regression;
    if (!std::filesystem::exists(path_)) {
        file_ = std::make_unique<RecordFile>(RecordFile::create(path_, kMagic, options_.durable));
        std::error_code ec;
        std::filesystem::remove(snapshot_path(path_), ec);
        return;
    }

    auto scan = RecordFile::scan(path_, kMagic);
    recovery_.records = scan.records.size();
    recovery_.truncated = scan.truncated();
    recovery_.dropped_bytes = scan.file_size - scan.valid_end;

    std::size_t start = 0;
    auto snap = snapshot_path(path_);
    if (std::filesystem::exists(snap)) {
        try {
            Bytes raw = read_file(snap);
            json j = json::parse(raw.begin(), raw.end());
            auto count = j.at("records").get<std::size_t>();
            auto crc = j.at("last_crc").get<std::uint32_t>();
            if (count > 0 && count <= scan.records.size() && crc32(scan.records[count - 1]) == crc) {
                auto loaded = std::make_unique<State>();
                loaded->allow_regression = options_.allow_reorg_regression;
                loaded->load(j.at("state"));
                if (loaded->seq == count) {
                    state_ = std::move(loaded);
                    start = count;
                    recovery_.used_snapshot = true;
                }
            }
        } catch (const std::exception&) {
            // Unusable snapshot: fall back to a full replay.
        }
    }

    for (std::size_t i = start; i < scan.records.size(); ++i) {
        const Bytes& rec = scan.records[i];
        if (rec.empty()) corrupt("empty journal record");
        json body;
        try {
            body = json::parse(rec.begin() + 1, rec.end());
        } catch (const json::exception&) {
            corrupt("journal record is not valid JSON");
        }
        try {
            state_->apply(static_cast<char>(rec[0]), body);
        } catch (const json::exception&) {
            corrupt("journal record is missing fields");
        }
        ++recovery_.replayed;
    }
    if (!scan.records.empty()) last_crc_ = crc32(scan.records.back());
    file_ = std::make_unique<RecordFile>(RecordFile::open_append(path_, scan.valid_end, options_.durable));
}

Ledger::~Ledger() = default;

void Ledger::commit(char type, const std::string& body)
{
    Bytes payload;
    payload.reserve(body.size() + 1);
    payload.push_back(static_cast<std::uint8_t>(type));
    payload.insert(payload.end(), body.begin(), body.end());
    file_->append(payload);
    last_crc_ = crc32(payload);
    state_->apply(type, json::parse(body));
    if (options_.snapshot_every > 0 && ++since_snapshot_ >= options_.snapshot_every) {
        since_snapshot_ = 0;
        try {
            write_snapshot_locked();
        } catch (const Error&) {
            // The journal alone is authoritative; a missing snapshot only
            // costs replay time.
        }
    }
    {
        std::lock_guard lk(change_mutex_);
        ++changes_;
    }
    change_cv_.notify_all();
}

void Ledger::write_snapshot_locked()
{
    json j;
    j["records"] = state_->seq;
    j["last_crc"] = last_crc_;
    j["state"] = state_->dump();
    std::string text = j.dump();
    write_file_atomic(snapshot_path(path_), as_bytes(text), options_.durable);
}

void Ledger::checkpoint()
{
    std::unique_lock lk(mutex_);
    if (state_->seq == 0) return;
    write_snapshot_locked();
    since_snapshot_ = 0;
}

SaleRecord Ledger::create_sale(const SaleRequest& request)
{
    if (request.fiat_cents <= 0) throw Error(Errc::validation, "fiat_cents must be a positive integer");
    if (!valid_currency(request.currency)) throw Error(Errc::validation, "currency must be a three-letter code");
    if (request.note.size() > kMaxNote) throw Error(Errc::validation, "note is too long");
    if (!services_.current_rate || !services_.allocate_address)
        throw Error(Errc::internal, "ledger has no sale services");

    auto snapshot = services_.current_rate(rates::CurrencyPair{request.currency});
    Sats sats = rates::convert(request.fiat_cents, snapshot->aggregate_price);
    auto allocated = services_.allocate_address();
    Timestamp now = clock_();

    SaleRecord s;
    s.sale_id = make_sale_id(allocated.address);
    s.branch_id = request.branch_id.empty() ? options_.branch_id : request.branch_id;
    s.fiat_cents = request.fiat_cents;
    s.fiat_currency = request.currency;
    s.locked_rate = snapshot->aggregate_price;
    s.btc_sats = sats;
    s.address = allocated.address;
    s.derivation_index = allocated.index;
    s.note = request.note;
    s.created_at = now;
    s.updated_at = now;
    s.expires_at = now + options_.expiry_seconds;

    std::unique_lock lk(mutex_);
    if (state_->by_address.count(s.address) || state_->sales.count(s.sale_id))
        throw Error(Errc::internal, "address already assigned to a sale");
    commit('C', to_json(s).dump());
    return state_->sales.at(s.sale_id);
}

SaleRecord Ledger::apply_state(const std::string& sale_id, InvoiceState to, std::optional<chain::Txid> evidence,
                               std::optional<Sats> excess_sats)
{
    std::unique_lock lk(mutex_);
    auto it = state_->sales.find(sale_id);
    if (it == state_->sales.end()) throw Error(Errc::unknown_sale, "unknown sale");
    const SaleRecord& s = it->second;
    if (s.state == to) {
        bool evidence_changes = evidence && evidence != s.evidence_txid;
        bool excess_changes = excess_sats && *excess_sats != s.excess_sats;
        if (!evidence_changes && !excess_changes) return s;
    } else if (!is_legal_transition(s.state, to, options_.allow_reorg_regression)) {
        throw Error(Errc::illegal_transition, "transition not allowed from the current state");
    }
    json body = to_json(Transition{s.state, to, clock_(), evidence});
    body["sale_id"] = sale_id;
    if (excess_sats) body["excess_sats"] = *excess_sats;
    commit('S', body.dump());
    return state_->sales.at(sale_id);
}

void Ledger::upsert_payment(const PaymentRecord& payment)
{
    if (payment.paid_sats <= 0) throw Error(Errc::validation, "payment must be positive");
    std::unique_lock lk(mutex_);
    if (!state_->sales.count(payment.sale_id)) throw Error(Errc::unknown_sale, "unknown sale");
    auto& list = state_->payments[payment.sale_id];
    auto it = std::find_if(list.begin(), list.end(), [&](const PaymentRecord& p) { return p.txid == payment.txid; });
    if (it != list.end() && *it == payment) return;
    json body = to_json(payment);
    body["at"] = clock_();
    commit('P', body.dump());
}

void Ledger::set_tip(std::int64_t height)
{
    if (height < 0) throw Error(Errc::validation, "height must be nonnegative");
    std::unique_lock lk(mutex_);
    if (state_->tip == height) return;
    commit('H', json{{"height", height}}.dump());
}

void Ledger::flag_reorg(const std::string& sale_id, std::optional<chain::Txid> txid)
{
    std::unique_lock lk(mutex_);
    auto it = state_->sales.find(sale_id);
    if (it == state_->sales.end()) throw Error(Errc::unknown_sale, "unknown sale");
    if (it->second.reorg_alert) return;
    json body{{"sale_id", sale_id}, {"at", clock_()}, {"txid", txid ? json(txid->hex()) : json(nullptr)}};
    commit('A', body.dump());
}

void Ledger::record_sweep(const SweepRecord& sweep)
{
    std::unique_lock lk(mutex_);
    for (const auto& id : sweep.sale_ids)
        if (!state_->sales.count(id)) throw Error(Errc::unknown_sale, "unknown sale");
    commit('W', to_json(sweep).dump());
}

std::optional<SaleRecord> Ledger::sale(const std::string& sale_id) const
{
    std::shared_lock lk(mutex_);
    auto it = state_->sales.find(sale_id);
    if (it == state_->sales.end()) return std::nullopt;
    return it->second;
}

std::optional<SaleRecord> Ledger::sale_by_address(const std::string& address) const
{
    std::shared_lock lk(mutex_);
    auto it = state_->by_address.find(address);
    if (it == state_->by_address.end()) return std::nullopt;
    return state_->sales.at(it->second);
}

std::vector<SaleRecord> Ledger::sales() const
{
    std::shared_lock lk(mutex_);
    std::vector<SaleRecord> out;
    out.reserve(state_->order.size());
    for (const auto& id : state_->order) out.push_back(state_->sales.at(id));
    return out;
}

std::vector<SaleRecord> Ledger::open_sales() const
{
    std::shared_lock lk(mutex_);
    std::vector<SaleRecord> out;
    for (const auto& id : state_->order) {
        const auto& s = state_->sales.at(id);
        if (is_open(s.state)) out.push_back(s);
    }
    return out;
}

std::vector<PaymentRecord> Ledger::payments(const std::string& sale_id) const
{
    std::shared_lock lk(mutex_);
    auto it = state_->payments.find(sale_id);
    if (it == state_->payments.end()) return {};
    return it->second;
}

std::vector<std::string> Ledger::sales_for_tx(const chain::Txid& txid) const
{
    std::shared_lock lk(mutex_);
    auto it = state_->by_tx.find(txid);
    if (it == state_->by_tx.end()) return {};
    return it->second;
}

std::vector<Transition> Ledger::transitions(const std::string& sale_id) const
{
    std::shared_lock lk(mutex_);
    auto it = state_->transitions.find(sale_id);
    if (it == state_->transitions.end()) return {};
    return it->second;
}

std::vector<SweepRecord> Ledger::sweeps() const
{
    std::shared_lock lk(mutex_);
    return state_->sweeps;
}

std::int64_t Ledger::tip() const
{
    std::shared_lock lk(mutex_);
    return state_->tip;
}

std::size_t Ledger::sale_count() const
{
    std::shared_lock lk(mutex_);
    return state_->order.size();
}

std::uint64_t Ledger::journal_records() const
{
    std::shared_lock lk(mutex_);
    return state_->seq;
}

SaleRecord Ledger::wait_for_change(const std::string& sale_id, std::uint64_t since,
                                   std::chrono::milliseconds timeout) const
{
    auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        std::uint64_t observed;
        {
            std::lock_guard lk(change_mutex_);
            observed = changes_;
        }
        if (auto s = sale(sale_id); !s) {
            throw Error(Errc::unknown_sale, "unknown sale");
        } else if (s->revision > since) {
            return *s;
        }
        std::unique_lock lk(change_mutex_);
        if (!change_cv_.wait_until(lk, deadline, [&] { return changes_ != observed; })) {
            lk.unlock();
            return *sale(sale_id);
        }
    }
}

Report Ledger::report(Timestamp from, Timestamp to, Role role, Timestamp now) const
{
    if (role == Role::anyone) throw Error(Errc::unauthorized, "authentication required");
    if (to < from) throw Error(Errc::validation, "report range ends before it starts");

    Report r;
    r.role = role;
    r.from = from;
    r.to = to;
    if (role == Role::employee) {
        Timestamp window_start = now - options_.employee_window_seconds;
        if (to <= window_start) throw Error(Errc::forbidden, "range is outside the employee window");
        if (from < window_start) {
            r.from = window_start;
            r.truncated = true;
        }
    }

    std::shared_lock lk(mutex_);
    ReportTotals totals;
    for (const auto& id : state_->order) {
        const auto& s = state_->sales.at(id);
        if (s.created_at < r.from || s.created_at >= r.to) continue;
        ReportRow row;
        row.sale_id = s.sale_id;
        row.created_at = s.created_at;
        row.note = s.note;
        row.fiat_cents = s.fiat_cents;
        row.currency = s.fiat_currency;
        row.locked_rate = s.locked_rate;
        row.btc_sats = s.btc_sats;
        row.state = s.state;
        row.address = s.address;
        row.excess_sats = s.excess_sats;
        row.reorg_alert = s.reorg_alert;

        std::optional<chain::Txid> txid = s.evidence_txid;
        Sats received = 0;
        if (auto it = state_->payments.find(id); it != state_->payments.end()) {
            for (const auto& p : it->second) {
                if (p.status == PaymentStatus::conflicted) continue;
                received += p.paid_sats;
                if (!txid) txid = p.txid;
            }
            if (!txid && !it->second.empty()) txid = it->second.front().txid;
        }
        if (txid) {
            row.txid = txid->hex();
            if (!options_.explorer_template.empty()) row.explorer_url = explorer_url(options_.explorer_template, *txid);
        }
        if (is_paid(s.state)) {
            ++totals.paid_count;
            totals.paid_sats += s.btc_sats;
            totals.fiat_cents[s.fiat_currency] += s.fiat_cents;
        }
        if (received > 0) totals.address_balances[s.address] = s.swept ? 0 : received;
        r.rows.push_back(std::move(row));
    }
    if (role == Role::admin) r.totals = std::move(totals);
    return r;
}

std::string Ledger::canonical_state() const
{
    std::shared_lock lk(mutex_);
    return state_->dump().dump();
}

std::string explorer_url(const std::string& url_template, const chain::Txid& txid)
{
    std::string out = url_template;
    const std::string key = "{txid}";
    if (auto pos = out.find(key); pos != std::string::npos) out.replace(pos, key.size(), txid.hex());
    return out;
}

namespace {

std::string csv_field(const std::string& v)
{
    if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace

std::string report_csv(const Report& report)
{
    std::string out = "sale_id,created_at,note,fiat_amount,currency,btc_amount,rate,state,txid,explorer_url\r\n";
    for (const auto& r : report.rows) {
        out += csv_field(r.sale_id) + ',' + format_utc(r.created_at) + ',' + csv_field(r.note) + ',' +
               format_cents(r.fiat_cents) + ',' + r.currency + ',' + format_btc(r.btc_sats) + ',' +
               format_cents(r.locked_rate) + ',' + std::string(state_name(r.state)) + ',' + r.txid + ',' +
               csv_field(r.explorer_url) + "\r\n";
    }
    return out;
}

} // namespace still::ledger
