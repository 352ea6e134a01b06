#include "qkit/shor.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <numeric>

namespace qkit {

const char* to_string(ShorApproach approach) { return approach == ShorApproach::Nx2n ? "nx2n" : "3nx1"; }

ShorApproach shor_approach_from_string(const std::string& name)
{
    if (name == "nx2n")
        return ShorApproach::Nx2n;
    if (name == "3nx1")
        return ShorApproach::ThreeNx1;
    throw ConfigError("unknown approach '" + name + "' (expected nx2n or 3nx1)");
}

int bit_length(std::uint64_t v) { return 64 - std::countl_zero(v); }

static int bit_length128(unsigned __int128 v)
{
    const auto hi = static_cast<std::uint64_t>(v >> 64);
    return hi ? 64 + bit_length(hi) : bit_length(static_cast<std::uint64_t>(v));
}

int ShorParams::work_qubits() const { return bit_length(N); }

int ShorParams::phase_bits() const
{
    const unsigned __int128 n = N;
    return bit_length128(n * n - 1);
}

int ShorParams::total_qubits() const
{
    return approach == ShorApproach::Nx2n ? work_qubits() + 1 : work_qubits() + phase_bits();
}

void ShorParams::validate() const
{
    if (N < 15)
        throw ValidationError("N must be at least 15, got " + std::to_string(N));
    if (N % 2 == 0)
        throw ValidationError("N must be odd, got " + std::to_string(N) + " (trivial factor 2)");
    if (a < 2)
        throw ValidationError("a must be at least 2");
    if (const auto g = gcd(a, N); g != 1)
        throw ValidationError("gcd(a, N) = " + std::to_string(g) + " for a=" + std::to_string(a) + ", N=" +
                              std::to_string(N) + ": " + std::to_string(g) + " is a trivial factor");
    if (total_qubits() > kMaxQubits)
        throw ValidationError("circuit needs " + std::to_string(total_qubits()) + " qubits (max " +
                              std::to_string(kMaxQubits) + ")");
    if (phase_bits() > 64)
        throw ValidationError("phase register wider than 64 bits");
}

static Param int_param(const char* key, std::uint64_t v)
{
    return {key, ParamValue::integer(static_cast<std::int64_t>(v))};
}

static void append_qft(Program& p, int count)
{
    for (int c = 0; c < count; ++c) {
        p.instructions.push_back(Instruction::gate_op("Hadamard", {TargetItem::single(c)}));
        for (int d = c + 1; d < count; ++d) {
            const int i = d - c - 1;
            p.instructions.push_back(Instruction::gate_op(
                "CPHASE", {TargetItem::single(d), TargetItem::single(c)},
                {{"phi", ParamValue::pi_fraction(1, std::int64_t{1} << (i + 1))}}));
        }
    }
    for (int i = 0; i < count / 2; ++i)
        p.instructions.push_back(
            Instruction::gate_op("SWAP", {TargetItem::single(i), TargetItem::single(count - i - 1)}));
}

static void finalize(Program& p)
{
    resolve_targets(p);
    number_lines(p);
}

Program build_qft_program(int num_qubits)
{
    Program p;
    p.num_qubits = num_qubits;
    p.instructions.push_back(Instruction::add_qubits(num_qubits));
    append_qft(p, num_qubits);
    finalize(p);
    return p;
}

Program build_shor_program(const ShorParams& params)
{
    params.validate();
    Program p;
    const int nc = params.phase_bits();

    if (params.approach == ShorApproach::Nx2n) {
        const int nq = params.work_qubits() + 1;
        p.num_qubits = nq;
        p.num_cbits = nc;
        p.instructions.push_back(Instruction::add_qubits(nq));
        p.instructions.push_back(Instruction::add_cbits(nc));
        p.instructions.push_back(Instruction::gate_op("SigmaX", {TargetItem::single(nq - 1)}));
        for (int e = 0; e < nc; ++e) {
            p.instructions.push_back(Instruction::gate_op("Hadamard", {TargetItem::single(0)}));
            p.instructions.push_back(Instruction::gate_op(
                "QuModExpUaj", {TargetItem::span(0, nq)},
                {int_param("a", params.a), int_param("j", static_cast<std::uint64_t>(nc - e - 1)),
                 int_param("N", params.N)}));
            if (e > 0) {
                std::vector<TargetItem> items{TargetItem::single(0)};
                for (int i = -e; i < 0; ++i)
                    items.push_back(TargetItem::single(i));
                p.instructions.push_back(Instruction::gate_op("RPhase", std::move(items)));
            }
            p.instructions.push_back(Instruction::gate_op("Hadamard", {TargetItem::single(0)}));
            p.instructions.push_back(Instruction::measure({TargetItem::single(0)}));
            p.instructions.push_back(
                Instruction::gate_op("Copy", {TargetItem::single(0), TargetItem::single(-(e + 1))}));
            p.instructions.push_back(
                Instruction::gate_op("SigmaX", {TargetItem::single(0), TargetItem::single(-(e + 1))}));
        }
        p.instructions.push_back(Instruction::measure({TargetItem::span(1, nq)}));
    } else {
        const int nw = params.work_qubits();
        const int nt = nw + nc;
        p.num_qubits = nt;
        p.instructions.push_back(Instruction::add_qubits(nt));
        p.instructions.push_back(Instruction::gate_op("SigmaX", {TargetItem::single(nt - 1)}));
        p.instructions.push_back(Instruction::gate_op("Hadamard", {TargetItem::span(0, nc)}));
        for (int c = 0; c < nc; ++c)
            p.instructions.push_back(Instruction::gate_op(
                "QuModExpUaj", {TargetItem::single(nc - c - 1), TargetItem::span(nc, nt)},
                {int_param("a", params.a), int_param("j", static_cast<std::uint64_t>(c)), int_param("N", params.N)}));
        p.instructions.push_back(Instruction::measure({TargetItem::span(nc, nt)}));
        append_qft(p, nc);
        p.instructions.push_back(Instruction::measure({TargetItem::span(0, nc)}));
    }
    finalize(p);
    return p;
}

std::string shor_program_filename(const ShorParams& params)
{
    return "Shor-N" + std::to_string(params.N) + "-a" + std::to_string(params.a) + "-" + to_string(params.approach) +
           ".qp";
}

std::string generate_shor_script(const ShorParams& params)
{
    const auto program = build_shor_program(params);
    std::string header = "#! Shor's factorization of N=" + std::to_string(params.N) + " with a=" +
                         std::to_string(params.a) + ", " + to_string(params.approach) + " approach.\n";
    if (params.approach == ShorApproach::Nx2n)
        header += "#! " + std::to_string(params.total_qubits()) + " qubits, " + std::to_string(params.phase_bits()) +
                  " classical bits, " + std::to_string(params.phase_bits()) + " stages.\n";
    else
        header += "#! " + std::to_string(params.work_qubits()) + " work qubits, " +
                  std::to_string(params.phase_bits()) + " control qubits.\n";
    return header + emit(program);
}

ShorReadout read_shor_result(const ShorParams& params, const ExecutionTrace& trace)
{
    ShorReadout out;
    if (params.approach == ShorApproach::Nx2n) {
        out.bits = trace.cbits.to_string();
        out.value = trace.cbits.to_integer();
        return out;
    }
    const int nc = params.phase_bits();
    std::map<int, int> last_bit;
    for (const auto& o : trace.outcomes())
        for (std::size_t n = 0; n < o.qubits.size(); ++n)
            last_bit[o.qubits[n]] = o.bits[n];
    for (int q = 0; q < nc; ++q) {
        auto it = last_bit.find(q);
        if (it == last_bit.end())
            throw ExecutionError("control qubit " + std::to_string(q) + " was never measured");
        out.bits.push_back(it->second ? '1' : '0');
        out.value = (out.value << 1) | static_cast<std::uint64_t>(it->second);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::uint64_t> continued_fraction_order(std::uint64_t m, int L, std::uint64_t N)
{
    std::vector<std::uint64_t> out;
    if (m == 0)
        return out;
    if (L < 1 || L > 64)
        throw ValidationError("phase register width must be in [1, 64]");
    unsigned __int128 num = m;
    unsigned __int128 den = static_cast<unsigned __int128>(1) << L;
    if (num >= den)
        throw ValidationError("measured value " + std::to_string(m) + " does not fit " + std::to_string(L) + " bits");
    unsigned __int128 k_prev = 1, k_cur = 0;  // k_{-2}, k_{-1}
    while (den != 0) {
        const unsigned __int128 a = num / den;
        const unsigned __int128 k_next = a * k_cur + k_prev;
        k_prev = k_cur;
        k_cur = k_next;
        if (k_cur >= N)
            break;
        const auto q = static_cast<std::uint64_t>(k_cur);
        if (q > 0 && (out.empty() || q > out.back()))
            out.push_back(q);
        const unsigned __int128 rem = num - a * den;
        num = den;
        den = rem;
    }
    return out;
}

std::optional<FactorPair> extract_factors(std::uint64_t N, std::uint64_t a, std::uint64_t r, bool try_multiples,
                                          std::uint64_t multiple_bound)
{
    if (r < 1 || N < 3)
        return std::nullopt;
    const std::uint64_t last = try_multiples ? std::max<std::uint64_t>(multiple_bound, 1) : 1;
    for (std::uint64_t mult = 1; mult <= last; ++mult) {
        const std::uint64_t rp = r * mult;
        if (rp % 2 != 0 || pow_mod(a, rp, N) != 1)
            continue;
        const std::uint64_t x = pow_mod(a, rp / 2, N);
        if (x == N - 1)
            continue;
        const std::uint64_t g1 = gcd((x + N - 1) % N, N);
        const std::uint64_t g2 = gcd((x + 1) % N, N);
        if (g1 <= 1 || g1 >= N || g2 <= 1 || g2 >= N)
            continue;
        const std::uint64_t p = std::min(g1, N / g1);
        return FactorPair{p, N / p};
    }
    return std::nullopt;
}

std::uint64_t classical_order(std::uint64_t a, std::uint64_t N)
{
    if (N < 2 || gcd(a % N, N) != 1)
        throw ValidationError("order needs gcd(a, N) = 1");
    std::uint64_t r = 1;
    std::uint64_t v = a % N;
    while (v != 1) {
        v = mul_mod(v, a, N);
        ++r;
    }
    return r;
}

bool is_prime(std::uint64_t n)
{
    if (n < 2)
        return false;
    for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0)
            return n == p;
    }
    std::uint64_t d = n - 1;
    int s = 0;
    while (d % 2 == 0) {
        d /= 2;
        ++s;
    }
    for (std::uint64_t base : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        std::uint64_t x = pow_mod(base, d, n);
        if (x == 1 || x == n - 1)
            continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite)
            return false;
    }
    return true;
}

std::optional<std::uint64_t> perfect_power_base(std::uint64_t N)
{
    if (N < 4)
        return std::nullopt;
    auto power_equals = [](std::uint64_t b, int k, std::uint64_t target) {
        unsigned __int128 v = 1;
        for (int i = 0; i < k; ++i) {
            v *= b;
            if (v > target)
                return false;
        }
        return v == target;
    };
    for (int k = 63; k >= 2; --k) {
        const auto guess = static_cast<std::uint64_t>(std::llround(std::pow(static_cast<double>(N), 1.0 / k)));
        for (std::uint64_t b = guess > 2 ? guess - 1 : 2; b <= guess + 1; ++b)
            if (b >= 2 && power_equals(b, k, N))
                return b;
    }
    return std::nullopt;
}

bool is_exact_order(std::uint64_t a, std::uint64_t r, std::uint64_t N)
{
    if (r < 1 || pow_mod(a, r, N) != 1 % N)
        return false;
    std::uint64_t rest = r;
    for (std::uint64_t p = 2; p * p <= rest; ++p) {
        if (rest % p != 0)
            continue;
        while (rest % p == 0)
            rest /= p;
        if (pow_mod(a, r / p, N) == 1)
            return false;
    }
    return rest == 1 || pow_mod(a, r / rest, N) != 1;
}

static std::uint64_t next_prime_base(std::uint64_t a)
{
    do
        ++a;
    while (!is_prime(a));
    return a;
}

static FactorizationResult classical_result(FactorizationResult result, std::uint64_t g, std::string note)
{
    result.success = true;
    result.classical = true;
    const auto p = std::min(g, result.N / g);
    result.factors = FactorPair{p, result.N / p};
    result.note = std::move(note);
    return result;
}

FactorizationResult factor(std::uint64_t N, const FactorOptions& options)
{
    if (N < 4 || N % 2 == 0)
        throw ValidationError("N must be an odd composite, got " + std::to_string(N));
    if (is_prime(N))
        throw ValidationError(std::to_string(N) + " is prime");
    if (options.max_runs < 1)
        throw ValidationError("at least one run is required");

    FactorizationResult result;
    result.N = N;
    result.approach = options.approach;
    result.a = options.a.value_or(2);

    if (const auto base = perfect_power_base(N))
        return classical_result(std::move(result), *base,
                                std::to_string(N) + " is a perfect power of " + std::to_string(*base));
    if (N < 15)
        throw ValidationError("N must be at least 15, got " + std::to_string(N));
    if (result.a < 2)
        throw ValidationError("a must be at least 2");

    const GateRegistry registry = GateRegistry::builtin();
    std::optional<Program> program;
    std::uint64_t a = 0;
    // Orders of earlier runs on the current base, and their running lcm.
    std::vector<std::uint64_t> earlier;
    std::uint64_t combined = 1;

    for (int run = 0; run < options.max_runs; ++run) {
        if (!program) {
            a = a == 0 ? result.a : next_prime_base(a);
            if (a >= N)
                break;
            if (const auto g = gcd(a, N); g != 1) {
                result.a = a;
                return classical_result(std::move(result), g, "gcd(a, N) = " + std::to_string(g));
            }
            program = build_shor_program(ShorParams{N, a, options.approach});
            earlier.clear();
            combined = 1;
        }
        const ShorParams params{N, a, options.approach};

        ExecutionConfig config;
        config.seed = options.seed + static_cast<std::uint64_t>(run);
        config.mode = options.mode;
        config.memory_budget = options.memory_budget;
        const auto trace = execute(*program, registry, config);

        ShorRun record;
        record.index = run;
        record.seed = config.seed;
        record.a = a;
        record.readout = read_shor_result(params, trace);
        record.candidates = continued_fraction_order(record.readout.value, params.phase_bits(), N);
        record.timing = timing_report(trace);
        record.seconds = trace.total_seconds;
        record.peak_stored_entries = trace.peak_stored_entries;

        for (auto c : record.candidates) {
            if (auto f = extract_factors(N, a, c, options.try_multiples, options.multiple_bound)) {
                record.order = c;
                record.factors = f;
                break;
            }
        }
        if (!record.order) {
            for (auto c : record.candidates)
                if (pow_mod(a, c, N) == 1) {
                    record.order = c;
                    break;
                }
            if (!record.order && !record.candidates.empty())
                record.order = record.candidates.back();
        }
        if (!record.factors && options.combine_runs && !earlier.empty()) {
            std::vector<std::uint64_t> partners = earlier;
            partners.push_back(combined);
            for (auto c : record.candidates)
                for (auto e : partners) {
                    const auto l = std::lcm(e, c);
                    if (l >= N || l == c || (record.combined_order && l >= *record.combined_order))
                        continue;
                    if (auto f = extract_factors(N, a, l, options.try_multiples, options.multiple_bound)) {
                        record.combined_order = l;
                        record.factors = f;
                    }
                }
        }
        if (record.order) {
            earlier.push_back(*record.order);
            if (std::lcm(combined, *record.order) < N)
                combined = std::lcm(combined, *record.order);
        }
        const bool found = record.factors.has_value();
        // An exact order that cannot split N means this base never will.
        const bool dead_base = !found && !options.a && record.order &&
                               (is_exact_order(a, *record.order, N) || is_exact_order(a, combined, N));
        result.runs.push_back(std::move(record));
        if (found) {
            result.success = true;
            result.a = a;
            result.factors = result.runs.back().factors;
            break;
        }
        if (dead_base)
            program.reset();
    }
    return result;
}

std::string format_factor_report(const FactorizationResult& r)
{
    std::string out;
    const std::uint64_t first_a = r.runs.empty() ? r.a : r.runs.front().a;
    out += "Shor's factorization of N=" + std::to_string(r.N) + " with a=" + std::to_string(first_a) + " (" +
           to_string(r.approach) + ")\n";
    if (r.classical) {
        out += "Classical factor: " + r.note + "\n";
        out += "Factors: " + std::to_string(r.factors->first) + " and " + std::to_string(r.factors->second) + "\n";
        out += "Prime factors of " + std::to_string(r.N) + " found!\n";
        return out;
    }
    for (const auto& run : r.runs) {
        const std::string prefix = "Run " + std::to_string(run.index + 1) + ": ";
        out += "Run " + std::to_string(run.index + 1) + " seed: " + std::to_string(run.seed) + "\n";
        const std::string indent(prefix.size(), ' ');
        bool first = true;
        std::size_t pos = 0;
        while (pos < run.timing.size()) {
            const auto nl = run.timing.find('\n', pos);
            out += (first ? prefix : indent) + run.timing.substr(pos, nl - pos) + "\n";
            first = false;
            pos = nl == std::string::npos ? run.timing.size() : nl + 1;
        }
    }
    out += "*****\nMeasured States | Integer Rep.\n";
    for (const auto& run : r.runs)
        out += "Run " + std::to_string(run.index + 1) + ": " + run.readout.bits + " | " +
               std::to_string(run.readout.value) + "\n";
    out += "*****\nExtract prime Factors:\n";
    std::uint64_t shown_a = first_a;
    for (const auto& run : r.runs) {
        if (run.a != shown_a) {
            out += "Switching to a=" + std::to_string(run.a) + ":\n";
            shown_a = run.a;
        }
        out += "Using " + run.readout.bits + " (" + std::to_string(run.readout.value) + "):\n";
        out += "Order from continued fractions: " + (run.order ? std::to_string(*run.order) : std::string("none")) +
               "\n";
        if (run.combined_order)
            out += "Order from lcm with earlier runs: " + std::to_string(*run.combined_order) + "\n";
        if (run.factors) {
            out += "Factors using GCD: " + std::to_string(run.factors->first) + " and " +
                   std::to_string(run.factors->second) + "\n";
            out += "Prime factors of " + std::to_string(r.N) + " found!\n";
        }
    }
    out += "*****\n";
    if (!r.success)
        out += "No factors found after " + std::to_string(r.runs.size()) + " run(s).\n";
    return out;
}

}  // namespace qkit
