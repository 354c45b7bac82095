// Operator tool: key store setup, server, demos, exports, reports, cash-out.
#include "still/api/server.hpp"
#include "still/app/config.hpp"
#include "still/app/demo.hpp"
#include "still/app/stack.hpp"
#include "still/core/error.hpp"
#include "still/core/money.hpp"
#include "still/crypto/hash.hpp"
#include "still/keystore/keystore.hpp"
#include "still/ledger/ledger.hpp"
#include "still/simnode/scenario.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <termios.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace still;

namespace {

enum Exit { ok = 0, failure = 1, usage = 2, config = 3, auth = 4, state = 5 };

int exit_code(Errc code)
{
    switch (code) {
    case Errc::invalid_argument:
    case Errc::invalid_address:
    case Errc::bad_checksum:
    case Errc::invalid_key:
    case Errc::hardened_from_public:
    case Errc::validation:
    case Errc::unsupported_pair:
        return usage;
    case Errc::config_error:
    case Errc::parse_error:
        return config;
    case Errc::bad_passphrase:
    case Errc::empty_passphrase:
    case Errc::unauthorized:
    case Errc::forbidden:
        return auth;
    case Errc::internal:
        return failure;
    default:
        return state;
    }
}

// Reads one line from an inherited descriptor, without the newline.
std::string read_fd_line(int fd)
{
    std::string line;
    char c = 0;
    for (;;) {
        auto n = ::read(fd, &c, 1);
        if (n < 0) throw Error(Errc::io_error, "cannot read passphrase from fd " + std::to_string(fd));
        if (n == 0 || c == '\n') break;
        line += c;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

// Prompts on the controlling terminal with echo off.
std::string prompt_tty(const std::string& prompt)
{
    std::FILE* tty = std::fopen("/dev/tty", "r+");
    if (!tty) throw Error(Errc::invalid_argument, "no terminal for the passphrase prompt; use --passphrase-fd");
    int fd = ::fileno(tty);
    std::fputs(prompt.c_str(), tty);
    std::fflush(tty);
    termios old{};
    bool restore = ::tcgetattr(fd, &old) == 0;
    if (restore) {
        termios quiet = old;
        quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
        ::tcsetattr(fd, TCSAFLUSH, &quiet);
    }
    std::string line = read_fd_line(fd);
    if (restore) ::tcsetattr(fd, TCSAFLUSH, &old);
    std::fputs("\n", tty);
    std::fclose(tty);
    return line;
}

std::string passphrase(int fd, bool confirm)
{
    if (fd >= 0) return read_fd_line(fd);
    auto first = prompt_tty("Passphrase: ");
    if (confirm && prompt_tty("Repeat passphrase: ") != first)
        throw Error(Errc::bad_passphrase, "passphrases do not match");
    return first;
}

app::Config load(const std::string& path)
{
    std::string p = path;
    if (p.empty()) {
        const char* env = std::getenv("STILL_CONFIG");
        if (!env || !*env) throw Error(Errc::invalid_argument, "no config given; use --config or STILL_CONFIG");
        p = env;
    }
    auto c = app::load_config(p);
    app::apply_env_overrides(c);
    if (!fs::exists(c.keystore_path))
        throw Error(Errc::config_error, "keystore not found: " + c.keystore_path.string());
    return c;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::config_error, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct InitArgs {
    std::string network = "mainnet";
    std::string mode = "hot";
    std::string xpub;
    std::string out;
    std::string journal;
    int passphrase_fd = -1;
};

int run_init(const InitArgs& a)
{
    const auto& net = keystore::Network::from_name(a.network);
    fs::path out = a.out;
    fs::path journal = a.journal.empty() ? fs::path(out).replace_extension(".journal") : fs::path(a.journal);
    if (fs::exists(out)) throw Error(Errc::store_exists, "already exists: " + out.string());
    if (fs::exists(journal)) throw Error(Errc::store_exists, "already exists: " + journal.string());

    std::optional<keystore::Keystore> store;
    if (a.mode == "hot") {
        if (!a.xpub.empty()) throw Error(Errc::invalid_argument, "--xpub is for watch-only mode");
        auto pass = passphrase(a.passphrase_fd, a.passphrase_fd < 0);
        if (pass.empty()) throw Error(Errc::empty_passphrase, "passphrase must not be empty");
        Bytes entropy(32);
        crypto::random_bytes(entropy);
        store.emplace(keystore::Keystore::create_hot(out, keystore::generate_master(entropy, net), pass));
    } else {
        if (a.xpub.empty()) throw Error(Errc::invalid_argument, "watch-only mode needs --xpub");
        auto account = keystore::ExtendedKey::from_base58(a.xpub, net.tag);
        store.emplace(keystore::Keystore::create_watch_only(out, account));
    }

    ledger::SaleServices none;
    none.allocate_address = []() -> keystore::AllocatedAddress {
        throw Error(Errc::internal, "no key store attached");
    };
    none.current_rate = [](const rates::CurrencyPair&) -> std::shared_ptr<const rates::RateSnapshot> {
        throw Error(Errc::stale_rates, "no rates attached");
    };
    ledger::Ledger(journal, {}, none, system_clock());

    std::cout << "keystore: " << out.string() << "\n"
              << "journal:  " << journal.string() << "\n"
              << "mode:     " << keystore::mode_name(store->mode()) << "\n"
              << "network:  " << net.name() << "\n"
              << "account:  " << store->account_public().to_base58() << "\n";
    return ok;
}

int run_serve(const std::string& config_path)
{
    auto cfg = load(config_path);
    // Signals go to a dedicated waiter, never to worker threads.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    app::Stack stack(cfg);
    api::Server server(stack);
    int port = server.bind(cfg.bind_host, cfg.bind_port);
    stack.start();
    std::cerr << "listening on " << cfg.bind_host << ":" << port << " (" << stack.config().network << ", "
              << keystore::mode_name(stack.keys().mode()) << ")" << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    });
    server.listen();
    // listen() can also end on its own; release the waiter.
    ::kill(::getpid(), SIGTERM);
    waiter.join();
    stack.stop();
    return ok;
}

int run_demo(const std::string& path)
{
    auto script = simnode::parse_scenario(read_file(path));
    auto result = app::run_scenario(script);
    for (const auto& line : result.timeline) std::cout << line << "\n";
    if (!result.final_states.empty()) {
        std::cout << "final:";
        for (const auto& [name, st] : result.final_states) std::cout << " " << name << "=" << ledger::state_name(st);
        std::cout << "\n";
    }
    for (const auto& f : result.failures) std::cerr << "error: expectation_failed: " << f << "\n";
    return result.ok() ? ok : state;
}

int run_export(const std::string& config_path, std::uint32_t index, int fd)
{
    auto cfg = load(config_path);
    auto keys = keystore::Keystore::open(cfg.keystore_path);
    if (keys.mode() == keystore::KeystoreMode::watch_only)
        throw Error(Errc::watch_only, "watch-only store holds no private keys");
    if (!keys.record(index)) throw Error(Errc::unknown_index, "index " + std::to_string(index) + " was never used");
    auto pass = passphrase(fd, false);
    std::cout << keys.export_wif(index, pass) << "\n";
    return ok;
}

int run_report(const std::string& config_path, const std::string& from, const std::string& to)
{
    app::Stack stack(load(config_path));
    Timestamp now = system_now();
    auto when = [](const std::string& flag, const std::string& text) {
        try {
            return parse_utc(text);
        } catch (const Error& e) {
            throw Error(Errc::invalid_argument, flag + ": " + e.what());
        }
    };
    Timestamp t = to.empty() ? now + 1 : when("--to", to);
    Timestamp f = from.empty() ? 0 : when("--from", from);
    if (f > t) throw Error(Errc::invalid_argument, "--from is after --to");
    std::cout << ledger::report_csv(stack.ledger().report(f, t, ledger::Role::admin, now));
    return ok;
}

struct CashoutArgs {
    std::string dest;
    std::int64_t feerate = 1;
    bool force = false;
    int passphrase_fd = -1;
};

int run_cashout(const std::string& config_path, const CashoutArgs& a)
{
    auto cfg = load(config_path);
    app::Stack stack(cfg);
    auto& treasury = stack.treasury();
    auto status = treasury.status();
    if (!a.force && !status.due)
        throw Error(Errc::not_due, "cash-out is not due (" + format_cents(status.unswept_cents) + " " +
                                       cfg.cashout_policy().currency + " unswept); use --force");
    if (stack.keys().mode() == keystore::KeystoreMode::watch_only)
        throw Error(Errc::watch_only, "watch-only store cannot sign a sweep");
    auto pass = passphrase(a.passphrase_fd, false);
    stack.chain().poll();
    auto outcome = treasury.execute(a.dest, a.feerate, pass, !a.force);
    std::cout << "txid:    " << outcome.txid.hex() << "\n"
              << "inputs:  " << outcome.plan.inputs.size() << "\n"
              << "amount:  " << format_btc(outcome.plan.total_out) << " BTC\n"
              << "fee:     " << outcome.plan.fee_sats << " sat\n"
              << "to:      " << outcome.plan.destination << "\n";
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App cli{"Bitcoin point-of-sale server and operator tool", "still"};
    cli.require_subcommand(1);
    cli.set_help_all_flag("--help-all", "Show help for every subcommand");

    InitArgs init;
    auto* c_init = cli.add_subcommand("init", "Create a key store and an empty journal");
    c_init->add_option("--network", init.network, "mainnet, testnet or regtest")->capture_default_str();
    c_init->add_option("--mode", init.mode, "hot or watch-only")
        ->check(CLI::IsMember({"hot", "watch-only"}))
        ->capture_default_str();
    c_init->add_option("--xpub", init.xpub, "Account public key (watch-only)");
    c_init->add_option("--out", init.out, "Key store path")->required();
    c_init->add_option("--journal", init.journal, "Journal path (default: key store path with .journal)");
    c_init->add_option("--passphrase-fd", init.passphrase_fd, "Read the passphrase from this descriptor");

    std::string config_path;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Config file (default: $STILL_CONFIG)");
    };

    auto* c_serve = cli.add_subcommand("serve", "Run the HTTP API until SIGINT or SIGTERM");
    add_config(c_serve);

    std::string scenario;
    auto* c_demo = cli.add_subcommand("demo", "Run a scenario on a simulated chain and print the timeline");
    c_demo->add_option("--scenario", scenario, "Scenario script")->required();

    auto* c_keys = cli.add_subcommand("keys", "Key store operations");
    c_keys->require_subcommand(1);
    std::uint32_t export_index = 0;
    int export_fd = -1;
    auto* c_export = c_keys->add_subcommand("export", "Print the WIF private key of one sale address");
    add_config(c_export);
    c_export->add_option("--index", export_index, "Derivation index")->required();
    c_export->add_option("--passphrase-fd", export_fd, "Read the passphrase from this descriptor");

    auto* c_report = cli.add_subcommand("report", "Ledger reports");
    c_report->require_subcommand(1);
    std::string from, to;
    auto* c_dump = c_report->add_subcommand("dump", "Write the sales report as CSV to stdout");
    add_config(c_dump);
    c_dump->add_option("--from", from, "Start, inclusive (YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ)");
    c_dump->add_option("--to", to, "End, exclusive (default: now)");

    CashoutArgs cash;
    auto* c_cash = cli.add_subcommand("cashout", "Sweep paid sales to the owner's address");
    add_config(c_cash);
    c_cash->add_option("--dest", cash.dest, "Destination address (default: branch cash-out address)");
    c_cash->add_option("--feerate", cash.feerate, "Fee rate in sat/vbyte")->check(CLI::NonNegativeNumber);
    c_cash->add_flag("--force", cash.force, "Sweep even if the cash-out policy is not due");
    c_cash->add_option("--passphrase-fd", cash.passphrase_fd, "Read the passphrase from this descriptor");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = cli.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (c_init->parsed()) return run_init(init);
        if (c_serve->parsed()) return run_serve(config_path);
        if (c_demo->parsed()) return run_demo(scenario);
        if (c_export->parsed()) return run_export(config_path, export_index, export_fd);
        if (c_dump->parsed()) return run_report(config_path, from, to);
        if (c_cash->parsed()) return run_cashout(config_path, cash);
    } catch (const Error& e) {
        std::cerr << "error: " << code_name(e.code()) << ": " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return failure;
    }
    return usage;
}
