#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qkit/executor.hpp"
#include "qkit/qp.hpp"

namespace qkit {

/// ThreeNx1: 2n control qubits, one QFT at the end.
/// Nx2n: one recycled control qubit, semiclassical QFT over 2n stages.
enum class ShorApproach { ThreeNx1, Nx2n };

const char* to_string(ShorApproach approach);
ShorApproach shor_approach_from_string(const std::string& name);

struct ShorParams {
    std::uint64_t N = 15;
    std::uint64_t a = 2;
    ShorApproach approach = ShorApproach::Nx2n;

    int work_qubits() const;   // bit_length(N)
    int phase_bits() const;    // bit_length(N^2 - 1)
    int total_qubits() const;  // work + 1 (Nx2n) or work + phase bits (ThreeNx1)
    /// Throws ValidationError for N < 15, even N, a < 2, gcd(a, N) != 1, or
    /// a register that does not fit 63 qubits / 64 classical bits.
    void validate() const;
};

using FactorPair = std::pair<std::uint64_t, std::uint64_t>;

int bit_length(std::uint64_t v);

Program build_shor_program(const ShorParams& params);
/// Canonical `.qp` text with a leading comment header.
std::string generate_shor_script(const ShorParams& params);
/// Shor-N<N>-a<a>-<approach>.qp
std::string shor_program_filename(const ShorParams& params);

/// AddQubits c followed by the Hadamard/CPHASE ladder and the SWAP reversal.
Program build_qft_program(int num_qubits);

/// Phase-estimate integer: the classical register (Nx2n) or the final
/// control-register measurement (ThreeNx1), most significant bit first.
struct ShorReadout {
    std::string bits;
    std::uint64_t value = 0;
};
ShorReadout read_shor_result(const ShorParams& params, const ExecutionTrace& trace);

/// Denominators 0 < q < N of the convergents of m / 2^L, ascending and
/// without repeats. Empty for m = 0.
std::vector<std::uint64_t> continued_fraction_order(std::uint64_t m, int L, std::uint64_t N);

/// Factors from an order candidate r (and its multiples up to
/// multiple_bound * r when try_multiples is set). Returned pair is sorted,
/// both entries nontrivial and multiplying to N.
std::optional<FactorPair> extract_factors(std::uint64_t N, std::uint64_t a, std::uint64_t r,
                                          bool try_multiples = false, std::uint64_t multiple_bound = 16);

/// Smallest r >= 1 with a^r = 1 mod N, by direct iteration.
std::uint64_t classical_order(std::uint64_t a, std::uint64_t N);
/// True when a^r = 1 mod N and no a^(r/p) = 1 for a prime p dividing r.
bool is_exact_order(std::uint64_t a, std::uint64_t r, std::uint64_t N);

bool is_prime(std::uint64_t n);
/// Smallest b with b^k = N for some k >= 2, if N is a perfect power.
std::optional<std::uint64_t> perfect_power_base(std::uint64_t N);

struct FactorOptions {
    std::optional<std::uint64_t> a;
    ShorApproach approach = ShorApproach::Nx2n;
    std::uint64_t seed = 0;
    int max_runs = 10;
    bool try_multiples = false;
    std::uint64_t multiple_bound = 16;
    /// Also try the lcm of this run's candidates with the orders of earlier
    /// runs on the same base (each run usually recovers a divisor of r).
    bool combine_runs = true;
    StorageMode mode = StorageMode::Sparse;
    std::uint64_t memory_budget = kDefaultMemoryBudget;
};

struct ShorRun {
    int index = 0;
    std::uint64_t seed = 0;
    std::uint64_t a = 0;
    ShorReadout readout;
    std::vector<std::uint64_t> candidates;
    std::optional<std::uint64_t> order;
    /// Set when the factors came from lcm(order, earlier orders).
    std::optional<std::uint64_t> combined_order;
    std::optional<FactorPair> factors;
    std::string timing;
    double seconds = 0.0;
    std::size_t peak_stored_entries = 0;
};

struct FactorizationResult {
    std::uint64_t N = 0;
    std::uint64_t a = 0;
    ShorApproach approach = ShorApproach::Nx2n;
    std::vector<ShorRun> runs;
    bool success = false;
    std::optional<FactorPair> factors;
    /// Factors found without simulation (common factor with a, perfect power).
    bool classical = false;
    std::string note;
};

/// Runs up to max_runs simulations (seed + run index each) and stops at the
/// first run whose continued-fraction order yields factors. Without an
/// explicit a, bases 2, 3, 5, 7, ... are tried in turn; a base is dropped
/// once a run recovers its exact order and that order cannot split N (odd,
/// or a^(r/2) = -1 mod N). Throws ValidationError for N that is even, prime,
/// or below 15.
FactorizationResult factor(std::uint64_t N, const FactorOptions& options);

/// Per-run timing, measured states, and factor extraction, one block each.
std::string format_factor_report(const FactorizationResult& result);

}  // namespace qkit
