#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

namespace qkit {

using Amplitude = std::complex<double>;
using BasisIndex = std::uint64_t;

enum class StorageMode { Sparse, Dense };

const char* to_string(StorageMode mode);
StorageMode storage_mode_from_string(const std::string& name);

inline constexpr int kMaxQubits = 63;
/// Sparse entries with |amplitude|^2 below this are dropped after each gate.
inline constexpr double kPruneThreshold = 1e-24;
inline constexpr double kUnitarityTolerance = 1e-10;
inline constexpr std::uint64_t kDefaultMemoryBudget = 8ull << 30;

/// Row-major 2x2 matrix: {u00, u01, u10, u11}.
using Matrix2 = std::array<Amplitude, 4>;

/// Maps a k-bit register value to its image; must be a bijection on [0, 2^k).
using PermutationFn = std::function<std::uint64_t(std::uint64_t)>;

inline Amplitude cmul(Amplitude a, Amplitude b)
{
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline double abs2(Amplitude a) { return a.real() * a.real() + a.imag() * a.imag(); }

/// Seeded Mersenne Twister stream (mt19937_64). One stream per execution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::uint64_t next() { return engine_(); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

struct MeasurementOutcome {
    std::vector<int> qubits;
    std::vector<int> bits;
    double probability = 0.0;

    /// Observed bits read as an integer, first listed qubit most significant.
    std::uint64_t value() const;
    std::string bitstring() const;
};

struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const;
};

class ClassicalRegister {
public:
    ClassicalRegister() = default;
    explicit ClassicalRegister(std::size_t size) : bits_(size, 0) {}

    std::size_t size() const noexcept { return bits_.size(); }
    int get(std::size_t index) const;
    void set(std::size_t index, int value);

    /// C[0] printed first.
    std::string to_string() const;
    /// C[0] is the most significant bit. Requires size() <= 64.
    std::uint64_t to_integer() const;

    bool operator==(const ClassicalRegister&) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Amplitudes of an n-qubit register. Qubit q lives at basis-index bit
/// (n-1-q), so qubit 0 is the most significant bit of the printed bitstring.
///
/// Sparse mode keeps only nonzero amplitudes in a hash map keyed by basis
/// index; dense mode holds all 2^n amplitudes. Both modes share the same
/// arithmetic per amplitude so a program run in either mode yields the same
/// measurement outcomes for the same random stream.
class QuantumState {
public:
    /// |00...0>. Throws ConfigError when num_qubits is outside [1, 63] and
    /// ResourceError when a dense allocation exceeds memory_budget.
    QuantumState(int num_qubits, StorageMode mode, std::uint64_t memory_budget = kDefaultMemoryBudget);

    int num_qubits() const noexcept { return num_qubits_; }
    StorageMode mode() const noexcept { return mode_; }
    std::uint64_t memory_budget() const noexcept { return memory_budget_; }
    void set_memory_budget(std::uint64_t bytes) { memory_budget_ = bytes; }

    BasisIndex qubit_mask(int qubit) const { return BasisIndex{1} << (num_qubits_ - 1 - qubit); }

    /// Stored entries in sparse mode, nonzero amplitudes in dense mode.
    std::size_t nonzero_count() const;
    Amplitude amplitude(BasisIndex index) const;
    /// Nonzero amplitudes sorted by basis index.
    std::vector<std::pair<BasisIndex, Amplitude>> entries() const;
    double norm_squared() const;

    /// Applies U to `target` on the subspace where all quantum controls are 1.
    /// Does nothing when any classical control value is 0.
    void apply_1q(int target, const Matrix2& u, std::span<const int> quantum_controls = {},
                  std::span<const int> classical_controls = {});
    /// General 2^k x 2^k row-major unitary on `targets` (first target is the
    /// most significant bit of the matrix index).
    void apply_matrix(std::span<const int> targets, std::span<const Amplitude> u,
                      std::span<const int> quantum_controls = {});
    /// diag(1, e^{i theta}) on `target`.
    void apply_phase(int target, double theta);
    void apply_cphase(int control, int target, double phi);
    void apply_swap(int a, int b);
    /// Remaps the k-bit value read from `targets` (first target most
    /// significant) through `perm` wherever all quantum controls are 1.
    void apply_permutation(std::span<const int> targets, const PermutationFn& perm,
                           std::span<const int> quantum_controls = {});

    double probability_of(std::span<const int> qubits, std::span<const int> bits) const;
    /// Outcome distribution over `qubits`, ascending by outcome value,
    /// accumulated in basis-index order.
    std::vector<std::pair<std::uint64_t, double>> marginal(std::span<const int> qubits) const;
    MeasurementOutcome measure(std::span<const int> qubits, Rng& rng);
    /// Projects onto the given bits and renormalizes; returns the pre-collapse
    /// probability of that outcome. Throws InternalError on a zero-norm outcome.
    double collapse(std::span<const int> qubits, std::span<const int> bits);

    BlochVector bloch_vector(int qubit) const;

    void convert_mode(StorageMode target);
    QuantumState converted(StorageMode target) const;

    /// Bytes needed for a dense n-qubit array (saturates at UINT64_MAX).
    static std::uint64_t dense_bytes(int num_qubits);

private:
    void check_qubit(int qubit) const;
    void check_distinct(std::span<const int> a, std::span<const int> b = {}) const;
    BasisIndex mask_of(std::span<const int> qubits) const;
    void prune();
    void check_sparse_budget() const;
    template <class Fn> void for_each_entry(Fn&& fn) const;

    int num_qubits_;
    StorageMode mode_;
    std::uint64_t memory_budget_;
    absl::flat_hash_map<BasisIndex, Amplitude> sparse_;
    std::vector<Amplitude> dense_;
};

/// Reads and writes a k-bit field scattered over basis-index bits, listed
/// most significant first.
class BitField {
public:
    BitField(const QuantumState& state, std::span<const int> qubits);

    std::uint64_t read(BasisIndex index) const;
    BasisIndex write(BasisIndex index, std::uint64_t value) const;
    BasisIndex mask() const noexcept { return mask_; }
    int width() const noexcept { return static_cast<int>(masks_.size()); }

private:
    std::vector<BasisIndex> masks_;
    BasisIndex mask_ = 0;
    bool contiguous_ = false;
    int shift_ = 0;
};

Matrix2 hadamard_matrix();
Matrix2 pauli_x_matrix();
Matrix2 pauli_y_matrix();
Matrix2 pauli_z_matrix();
Matrix2 phase_matrix(double theta);

/// Max entrywise deviation of U^dagger U from identity is within tolerance.
bool is_unitary(std::span<const Amplitude> u, std::size_t dim, double tolerance = kUnitarityTolerance);

}  // namespace qkit
