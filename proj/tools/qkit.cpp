// qkit command line: run .qp programs, generate Shor circuits, factor, serve.
//
// Exit codes: 0 success, 1 domain failure (no factors, runtime error in the
// program), 2 usage / parse / validation errors, 3 resource limits.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "qkit/service.hpp"
#include "qkit/shor.hpp"

using namespace qkit;

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;
constexpr int kExitResource = 3;

std::uint64_t parse_bytes(const std::string& text)
{
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &pos);
    } catch (const std::exception&) {
        throw ConfigError("bad byte count '" + text + "'");
    }
    const std::string suffix = text.substr(pos);
    std::uint64_t mult = 1;
    if (suffix.empty() || suffix == "B")
        mult = 1;
    else if (suffix == "K" || suffix == "KiB")
        mult = 1ull << 10;
    else if (suffix == "M" || suffix == "MiB")
        mult = 1ull << 20;
    else if (suffix == "G" || suffix == "GiB")
        mult = 1ull << 30;
    else
        throw ConfigError("bad byte count '" + text + "' (use a plain number or K/M/G suffix)");
    return v * mult;
}

std::uint64_t default_seed()
{
    if (const char* env = std::getenv("QKIT_SEED"))
        return std::stoull(env);
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::uint64_t default_budget()
{
    if (const char* env = std::getenv("QKIT_MEMORY_BUDGET"))
        return parse_bytes(env);
    return kDefaultMemoryBudget;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int report_error(const Error& e)
{
    if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
        for (const auto& d : pe->diagnostics())
            std::cerr << d.to_string() << "\n";
        return kExitUsage;
    }
    std::cerr << "qkit: " << e.what() << "\n";
    switch (e.kind()) {
    case ErrorKind::Resource: return kExitResource;
    case ErrorKind::Execution:
    case ErrorKind::Internal: return kExitDomain;
    default: return kExitUsage;
    }
}

struct RunArgs {
    std::string file;
    std::optional<std::uint64_t> seed;
    std::string mode = "sparse";
    std::string state_format = "amplitudes";
    bool trace = false;
    bool deferred = false;
    std::string log;
    std::string memory_budget;
};

int cmd_run(const RunArgs& args)
{
    const auto text = read_file(args.file);
    const Program program = parse(text);
    ExecutionConfig config;
    config.seed = args.seed ? *args.seed : default_seed();
    config.mode = storage_mode_from_string(args.mode);
    config.measurement = args.deferred ? MeasurementMode::Deferred : MeasurementMode::InPlace;
    config.trace_states = args.trace;
    config.memory_budget = args.memory_budget.empty() ? default_budget() : parse_bytes(args.memory_budget);
    const auto format = state_format_from_string(args.state_format);
    config.log_format = format;
    if (!args.log.empty())
        config.log_path = args.log;

    const auto trace = execute(program, GateRegistry::builtin(), config);
    if (args.trace) {
        for (const auto& s : trace.snapshots) {
            std::cout << "[line " << s.line << "] " << s.text << "  (" << s.nonzero_count << " nonzero"
                      << (s.full ? "" : ", summary") << ")\n";
            for (const auto& [i, p] : s.top_probabilities)
                std::cout << "    " << basis_bitstring(i, trace.num_qubits) << " " << p << "\n";
        }
    }
    std::cout << format_run_output(trace, format);
    return 0;
}

struct GenArgs {
    std::uint64_t N = 0;
    std::uint64_t a = 2;
    std::string approach = "nx2n";
    std::string out;
};

int cmd_shor_gen(const GenArgs& args)
{
    const ShorParams params{args.N, args.a, shor_approach_from_string(args.approach)};
    const auto script = generate_shor_script(params);
    std::filesystem::path path = shor_program_filename(params);
    if (!args.out.empty()) {
        const std::filesystem::path out = args.out;
        path = std::filesystem::is_directory(out) ? out / path : out;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << script))
        throw ConfigError("cannot write '" + path.string() + "'");
    std::cout << path.string() << "\n";
    std::cerr << params.total_qubits() << " qubits, " << params.phase_bits() << " phase bits\n";
    return 0;
}

struct FactorArgs {
    std::uint64_t N = 0;
    std::optional<std::uint64_t> a;
    std::string approach = "nx2n";
    int runs = 10;
    std::optional<std::uint64_t> seed;
    bool try_multiples = false;
    std::uint64_t multiple_bound = 16;
    bool no_combine = false;
    std::string mode = "sparse";
    std::string memory_budget;
};

int cmd_factor(const FactorArgs& args)
{
    FactorOptions options;
    options.a = args.a;
    options.approach = shor_approach_from_string(args.approach);
    options.seed = args.seed ? *args.seed : default_seed();
    options.max_runs = args.runs;
    options.try_multiples = args.try_multiples;
    options.multiple_bound = args.multiple_bound;
    options.combine_runs = !args.no_combine;
    options.mode = storage_mode_from_string(args.mode);
    options.memory_budget = args.memory_budget.empty() ? default_budget() : parse_bytes(args.memory_budget);
    std::cout << "seed: " << options.seed << "\n";
    const auto result = factor(args.N, options);
    std::cout << format_factor_report(result);
    return result.success ? 0 : kExitDomain;
}

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::uint64_t> seed;
    std::string memory_budget;
    std::size_t snapshot_cap = 65536;
};

int cmd_serve(const ServeArgs& args)
{
    ServiceConfig config;
    config.default_seed = args.seed ? *args.seed : default_seed();
    config.memory_budget = args.memory_budget.empty() ? default_budget() : parse_bytes(args.memory_budget);
    config.snapshot_cap = args.snapshot_cap;
    Service service(config);
    std::cout << "seed: " << config.default_seed << "\n";
    std::cout << "listening on http://" << args.host << ":" << args.port << std::endl;
    serve(service, args.host, args.port);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qkit: quantum program simulator and Shor factorization"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Execute a .qp program");
    run_cmd->add_option("file", run.file, "Program file")->required();
    run_cmd->add_option("--seed", run.seed, "RNG seed (default: QKIT_SEED or random)");
    run_cmd->add_option("--mode", run.mode, "sparse|dense (aliases memory|performance)");
    run_cmd->add_option("--state-format", run.state_format, "amplitudes|probabilities|plain");
    run_cmd->add_flag("--trace", run.trace, "Print a state summary after every instruction");
    run_cmd->add_flag("--deferred", run.deferred, "Defer measurements to the end of the program");
    run_cmd->add_option("--log", run.log, "Append a run log to this file");
    run_cmd->add_option("--memory-budget", run.memory_budget, "State memory limit, e.g. 2G");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("shor-gen", "Write a Shor factorization program");
    gen_cmd->add_option("--N", gen.N, "Number to factor")->required();
    gen_cmd->add_option("--a", gen.a, "Base coprime to N")->capture_default_str();
    gen_cmd->add_option("--approach", gen.approach, "nx2n|3nx1")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Output file or directory");

    FactorArgs fac;
    auto* fac_cmd = app.add_subcommand("factor", "Factor N by simulating Shor's algorithm");
    fac_cmd->add_option("--N", fac.N, "Number to factor")->required();
    fac_cmd->add_option("--a", fac.a, "Base (default: 2, then 3, 5, 7, ...)");
    fac_cmd->add_option("--approach", fac.approach, "nx2n|3nx1")->capture_default_str();
    fac_cmd->add_option("--runs", fac.runs, "Maximum simulation runs")->capture_default_str()->check(CLI::PositiveNumber);
    fac_cmd->add_option("--seed", fac.seed, "Seed of the first run; run k uses seed+k");
    fac_cmd->add_flag("--try-multiples", fac.try_multiples, "Also try small multiples of the order");
    fac_cmd->add_option("--multiple-bound", fac.multiple_bound, "Largest multiple tried")->capture_default_str();
    fac_cmd->add_flag("--no-combine", fac.no_combine, "Do not combine orders of earlier runs by lcm");
    fac_cmd->add_option("--mode", fac.mode, "sparse|dense")->capture_default_str();
    fac_cmd->add_option("--memory-budget", fac.memory_budget, "State memory limit, e.g. 2G");

    ServeArgs srv;
    auto* srv_cmd = app.add_subcommand("serve", "Run the local JSON API");
    srv_cmd->add_option("--host", srv.host, "Bind address")->capture_default_str();
    srv_cmd->add_option("--port", srv.port, "Port")->capture_default_str();
    srv_cmd->add_option("--seed", srv.seed, "Default session seed");
    srv_cmd->add_option("--memory-budget", srv.memory_budget, "Per-session state memory limit");
    srv_cmd->add_option("--snapshot-cap", srv.snapshot_cap, "Largest state sent in full")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*gen_cmd)
            return cmd_shor_gen(gen);
        if (*fac_cmd)
            return cmd_factor(fac);
        if (*srv_cmd)
            return cmd_serve(srv);
    } catch (const Error& e) {
        return report_error(e);
    } catch (const std::exception& e) {
        std::cerr << "qkit: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
