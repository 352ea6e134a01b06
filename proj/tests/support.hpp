#pragma once

// Independent reference computations used by unit and acceptance tests.
// Nothing here calls into the engine's gate kernels: the reference simulator
// builds full matrices and multiplies them out directly.

#include <cmath>
#include <array>
#include <complex>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qkit/executor.hpp"
#include "qkit/qp.hpp"
#include "qkit/shor.hpp"

namespace oracle {

using cd = std::complex<double>;

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m)
{
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

/// a^e mod m by repeated multiplication (only for small e).
inline std::uint64_t slow_pow(std::uint64_t a, std::uint64_t e, std::uint64_t m)
{
    std::uint64_t v = 1 % m;
    for (std::uint64_t i = 0; i < e; ++i)
        v = mulmod(v, a % m, m);
    return v;
}

inline std::uint64_t order(std::uint64_t a, std::uint64_t N)
{
    std::uint64_t r = 1, v = a % N;
    while (v != 1) {
        v = mulmod(v, a, N);
        ++r;
    }
    return r;
}

inline std::uint64_t smallest_factor(std::uint64_t N)
{
    for (std::uint64_t p = 2; p * p <= N; ++p)
        if (N % p == 0)
            return p;
    return N;
}

inline std::uint64_t gcd(std::uint64_t a, std::uint64_t b)
{
    while (b) {
        a %= b;
        std::swap(a, b);
    }
    return a;
}

inline std::uint64_t lcm(std::uint64_t a, std::uint64_t b) { return a / gcd(a, b) * b; }

/// Carmichael function by prime factorization.
inline std::uint64_t carmichael(std::uint64_t N)
{
    std::uint64_t result = 1;
    for (std::uint64_t p = 2; N > 1; ++p) {
        if (p * p > N)
            p = N;
        if (N % p)
            continue;
        std::uint64_t pk = 1;
        int k = 0;
        while (N % p == 0) {
            N /= p;
            pk *= p;
            ++k;
        }
        std::uint64_t lam = pk / p * (p - 1);
        if (p == 2 && k >= 3)
            lam /= 2;
        result = lcm(result, lam);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Reference dense simulator. Qubit q is bit (n-1-q) of the basis index.

struct Sim {
    int n;
    std::vector<cd> amp;

    explicit Sim(int qubits) : n(qubits), amp(std::size_t{1} << qubits) { amp[0] = 1.0; }

    std::size_t dim() const { return amp.size(); }
    int bit(std::size_t index, int q) const { return static_cast<int>((index >> (n - 1 - q)) & 1); }
    std::size_t flip(std::size_t index, int q) const { return index ^ (std::size_t{1} << (n - 1 - q)); }

    /// Full 2^n x 2^n matrix of a 1-qubit gate embedded at `q`, multiplied in.
    void apply_1q(int q, const std::array<cd, 4>& u)
    {
        std::vector<cd> out(dim());
        for (std::size_t row = 0; row < dim(); ++row)
            for (std::size_t col = 0; col < dim(); ++col) {
                if ((row ^ col) & ~(std::size_t{1} << (n - 1 - q)))
                    continue;
                out[row] += u[bit(row, q) * 2 + bit(col, q)] * amp[col];
            }
        amp = std::move(out);
    }

    void apply_diag(const std::function<cd(std::size_t)>& phase)
    {
        for (std::size_t i = 0; i < dim(); ++i)
            amp[i] *= phase(i);
    }

    void apply_perm(const std::function<std::size_t(std::size_t)>& f)
    {
        std::vector<cd> out(dim());
        for (std::size_t i = 0; i < dim(); ++i)
            out[f(i)] += amp[i];
        amp = std::move(out);
    }

    double prob(int q, int b) const
    {
        double p = 0;
        for (std::size_t i = 0; i < dim(); ++i)
            if (bit(i, q) == b)
                p += std::norm(amp[i]);
        return p;
    }

    void project(int q, int b)
    {
        const double p = prob(q, b);
        for (std::size_t i = 0; i < dim(); ++i)
            amp[i] = bit(i, q) == b ? amp[i] / std::sqrt(p) : cd{};
    }
};

inline std::array<cd, 4> H()
{
    const double s = 1.0 / std::sqrt(2.0);
    return {cd{s}, cd{s}, cd{s}, cd{-s}};
}
inline std::array<cd, 4> X() { return {cd{}, cd{1}, cd{1}, cd{}}; }

/// DFT amplitude <y|F|k> = e^{2 pi i k y / 2^c} / sqrt(2^c).
inline cd dft(std::uint64_t k, std::uint64_t y, int c)
{
    const double q = std::ldexp(1.0, c);
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(k * y % (1ull << c)) / q;
    return std::polar(1.0 / std::sqrt(q), ang);
}

/// Phase-estimation distribution over L-bit outcomes y:
/// P(y) = |{x}|-weighted sum_w |sum_{x : a^x = w} e^{2 pi i x y / Q}|^2 / Q^2, Q = 2^L.
inline std::vector<double> shor_distribution(std::uint64_t N, std::uint64_t a, int L)
{
    const std::uint64_t Q = 1ull << L;
    std::map<std::uint64_t, std::vector<std::uint64_t>> by_value;
    std::uint64_t v = 1;
    for (std::uint64_t x = 0; x < Q; ++x) {
        by_value[v].push_back(x);
        v = mulmod(v, a, N);
    }
    std::vector<double> p(Q);
    for (std::uint64_t y = 0; y < Q; ++y) {
        double total = 0;
        for (const auto& [w, xs] : by_value) {
            cd s{};
            for (auto x : xs)
                s += std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(x * y % Q) / static_cast<double>(Q));
            total += std::norm(s);
        }
        p[y] = total / static_cast<double>(Q * Q);
    }
    return p;
}

/// Textbook semiclassical (one control qubit) phase estimation, every
/// measurement branch enumerated. Stage e reads bit e of the result counted
/// from the least significant end, using U^(2^(L-1-e)) and a phase
/// correction from the bits already measured.
inline std::vector<double> semiclassical_distribution(std::uint64_t N, std::uint64_t a, int L)
{
    const int w = qkit::bit_length(N);
    const int n = w + 1;
    std::vector<double> dist(std::size_t{1} << L);

    std::function<void(Sim, int, std::uint64_t, double)> stage = [&](Sim s, int e, std::uint64_t bits, double p) {
        if (p < 1e-18)
            return;
        if (e == L) {
            // Stage 0 measured the least significant bit.
            std::uint64_t y = 0;
            for (int k = 0; k < L; ++k)
                y |= ((bits >> k) & 1) << (L - 1 - k);
            dist[y] += p;
            return;
        }
        s.apply_1q(0, H());
        const std::uint64_t mult = slow_pow(a, 1ull << (L - 1 - e), N);
        s.apply_perm([&](std::size_t i) {
            if (!s.bit(i, 0))
                return i;
            const std::size_t mask = (std::size_t{1} << w) - 1;
            const std::size_t y = i & mask;
            return y < N ? (i & ~mask) | mulmod(y, mult, N) : i;
        });
        // Earlier result bits b_0..b_{e-1}; bit b_{e-k} gets weight 2^-k.
        double theta = 0;
        for (int k = 1; k <= e; ++k)
            theta -= std::numbers::pi * static_cast<double>((bits >> (k - 1)) & 1) / std::ldexp(1.0, k);
        s.apply_diag([&](std::size_t i) { return s.bit(i, 0) ? std::polar(1.0, theta) : cd{1}; });
        s.apply_1q(0, H());
        for (int b = 0; b < 2; ++b) {
            const double pb = s.prob(0, b);
            if (pb < 1e-18)
                continue;
            Sim t = s;
            t.project(0, b);
            if (b)
                t.apply_1q(0, X());
            stage(std::move(t), e + 1, (bits << 1) | static_cast<std::uint64_t>(b), p * pb);
        }
    };

    Sim init(n);
    init.amp[0] = 0;
    init.amp[1] = 1;  // work register = |1>
    stage(init, 0, 0, 1.0);
    return dist;
}

}  // namespace oracle

namespace support {

/// Exact classical-register distribution of a program with mid-circuit
/// measurements: every single-qubit Measure branches on both outcomes, the
/// engine's own gates and collapse drive each branch. Multi-qubit Measures
/// are skipped (they do not feed the classical register).
inline std::map<std::uint64_t, double> branch_distribution(const qkit::Program& program)
{
    using namespace qkit;
    const auto registry = program.registry(GateRegistry::builtin());
    std::map<std::uint64_t, double> dist;
    std::function<void(QuantumState, ClassicalRegister, std::size_t, double)> walk =
        [&](QuantumState st, ClassicalRegister cb, std::size_t pc, double p) {
            for (; pc < program.instructions.size(); ++pc) {
                const auto& in = program.instructions[pc];
                if (in.kind == InstructionKind::AddQubits || in.kind == InstructionKind::AddCbits)
                    continue;
                if (in.kind == InstructionKind::Measure) {
                    const auto qs = in.quantum_targets();
                    if (qs.size() != 1)
                        continue;
                    for (int b = 0; b < 2; ++b) {
                        const int bit = b;
                        const double pb = st.probability_of(qs, std::span<const int>(&bit, 1));
                        if (pb < 1e-15)
                            continue;
                        QuantumState next = st;
                        next.collapse(qs, std::span<const int>(&bit, 1));
                        walk(std::move(next), cb, pc + 1, p * pb);
                    }
                    return;
                }
                apply_gate_instruction(st, cb, in, registry);
            }
            dist[cb.to_integer()] += p;
        };
    walk(QuantumState(program.num_qubits, StorageMode::Sparse), ClassicalRegister(program.num_cbits), 0, 1.0);
    return dist;
}

/// Copy of `program` without Measure instructions.
inline qkit::Program without_measurements(const qkit::Program& program)
{
    qkit::Program out = program;
    std::erase_if(out.instructions,
                  [](const qkit::Instruction& i) { return i.kind == qkit::InstructionKind::Measure; });
    qkit::number_lines(out);
    return out;
}

/// Control-register marginal of a 3n x 1 program, from the dense state with
/// every measurement removed.
inline std::vector<double> three_n_distribution(const qkit::ShorParams& params)
{
    using namespace qkit;
    const auto program = without_measurements(build_shor_program(params));
    ExecutionConfig config;
    config.mode = StorageMode::Dense;
    const auto trace = execute(program, GateRegistry::builtin(), config);
    std::vector<int> control(static_cast<std::size_t>(params.phase_bits()));
    for (int q = 0; q < params.phase_bits(); ++q)
        control[static_cast<std::size_t>(q)] = q;
    std::vector<double> out(std::size_t{1} << params.phase_bits());
    for (const auto& [v, p] : trace.final_state->marginal(control))
        out[v] = p;
    return out;
}

/// Random valid program on up to `max_qubits` qubits using every builtin
/// gate family, a few classical bits and optional mid-circuit measurement.
inline std::string random_program(std::mt19937_64& rng, int max_qubits = 10, bool measurements = true)
{
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int n = pick(2, max_qubits);
    const int nc = pick(1, 4);
    std::string s = "# random program\nAddQubits " + std::to_string(n) + "\nAddCbits " + std::to_string(nc) + "\n";
    auto distinct = [&](int k) {
        std::vector<int> qs(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            qs[static_cast<std::size_t>(i)] = i;
        std::shuffle(qs.begin(), qs.end(), rng);
        qs.resize(static_cast<std::size_t>(k));
        return qs;
    };
    const char* one_q[] = {"Hadamard", "SigmaX", "SigmaY", "SigmaZ"};
    bool measured_c[8] = {};
    const int ops = pick(5, 30);
    for (int k = 0; k < ops; ++k) {
        switch (pick(0, 8)) {
        case 0:
        case 1: {
            const int q = pick(0, n - 1);
            s += std::string("GateOp ") + one_q[pick(0, 3)] + " " + std::to_string(q) + "\n";
            break;
        }
        case 2: {
            const int lo = pick(0, n - 1);
            const int hi = pick(lo + 1, n);
            s += std::string("GateOp ") + one_q[pick(0, 3)] + " " + std::to_string(lo) + ":" + std::to_string(hi) + "\n";
            break;
        }
        case 3: {
            const auto q = distinct(2);
            const int den = 1 << pick(0, 5);
            s += "GateOp CPHASE " + std::to_string(q[0]) + "," + std::to_string(q[1]) + " phi=" +
                 (den == 1 ? std::string("PI") : "PI/" + std::to_string(den)) + "\n";
            break;
        }
        case 4: {
            const auto q = distinct(2);
            s += "GateOp SWAP " + std::to_string(q[0]) + "," + std::to_string(q[1]) + "\n";
            break;
        }
        case 5: {
            if (n < 3)
                break;
            // Control qubit 0; work register on the top qubits.
            const int w = pick(2, std::min(4, n - 1));
            const int modulus = pick((1 << (w - 1)) + 1, (1 << w) - 1);
            int a = pick(2, 40);
            while (oracle::gcd(static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(modulus)) != 1)
                ++a;
            s += "GateOp QuModExpUaj 0," + std::to_string(n - w) + ":" + std::to_string(n) + " a=" +
                 std::to_string(a) + " j=" + std::to_string(pick(0, 3)) + " N=" + std::to_string(modulus) + "\n";
            break;
        }
        case 6: {
            if (!measurements)
                break;
            const int q = pick(0, n - 1);
            const int c = pick(1, nc);
            s += "Measure " + std::to_string(q) + "\n";
            s += "GateOp Copy " + std::to_string(q) + ",-" + std::to_string(c) + "\n";
            measured_c[c] = true;
            break;
        }
        case 7: {
            // Classically controlled gate on any classical bit.
            const int c = pick(1, nc);
            s += std::string("GateOp ") + one_q[pick(0, 3)] + " " + std::to_string(pick(0, n - 1)) + ",-" +
                 std::to_string(c) + "\n";
            break;
        }
        case 8: {
            const int c = pick(1, nc);
            s += "GateOp RPhase " + std::to_string(pick(0, n - 1)) + ",-" + std::to_string(c) + "\n";
            break;
        }
        }
    }
    if (measurements && pick(0, 1))
        s += "Measure 0:" + std::to_string(n) + "\n";
    return s;
}

}  // namespace support
