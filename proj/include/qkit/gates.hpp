#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qkit/state.hpp"

namespace qkit {

enum class GateKind {
    Builtin1q,      // Hadamard, SigmaX, SigmaY, SigmaZ
    CPhase,         // diag(1,1,1,e^{i phi}) on two qubits
    Swap,
    RPhase,         // classically conditioned phase correction
    Copy,           // measured qubit -> classical bit
    ModExp,         // controlled y -> y * a^(2^j) mod N
    UnitaryMatrix,  // user matrix on k qubits
    Permutation,    // user bijection on k-bit values
};

const char* to_string(GateKind kind);

struct GateDef {
    std::string name;
    GateKind kind = GateKind::Builtin1q;
    /// Quantum targets the gate acts on; 0 means "one or more" (broadcast 1q
    /// gates and modular exponentiation, whose work width is taken from the
    /// instruction).
    int arity = 1;
    std::vector<std::string> params;
    bool builtin = false;

    /// Builtin1q / UnitaryMatrix: row-major 2^arity x 2^arity.
    std::vector<Amplitude> matrix;
    /// Permutation gates.
    PermutationFn permutation;
    /// Lookup table form of `permutation` when it was defined from one.
    std::vector<std::uint64_t> table;
};

/// Named gate catalogue. Built-ins are always present; custom gates are
/// added once and then resolvable by every program that uses the registry.
class GateRegistry {
public:
    /// Registry holding exactly the built-in gates.
    static GateRegistry builtin();

    const GateDef* find(std::string_view name) const;
    const GateDef& at(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }

    /// Throws GateDefinitionError on a duplicate name, a dimension that is
    /// not a power of two, or a non-unitary matrix.
    void register_matrix(const std::string& name, std::vector<Amplitude> matrix);
    /// Bijectivity is checked exhaustively for k <= 20 and by 10^6 random
    /// probes above.
    void register_permutation(const std::string& name, int num_qubits, PermutationFn fn);
    void register_permutation_table(const std::string& name, int num_qubits, std::vector<std::uint64_t> table);

    std::vector<const GateDef*> list() const;

private:
    void insert(GateDef def);
    std::map<std::string, GateDef, std::less<>> gates_;
};

std::uint64_t gcd(std::uint64_t a, std::uint64_t b);
std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m);
std::uint64_t pow_mod(std::uint64_t a, std::uint64_t e, std::uint64_t m);

/// Multiplication by a^(2^j) mod N on values below N; identity on [N, 2^k).
class ModExpMap {
public:
    /// Throws GateDefinitionError when N < 3 or gcd(a, N) != 1.
    ModExpMap(std::uint64_t a, std::uint64_t j, std::uint64_t modulus);

    std::uint64_t operator()(std::uint64_t y) const
    {
        return y < modulus_ ? mul_mod(y, multiplier_, modulus_) : y;
    }
    std::uint64_t multiplier() const noexcept { return multiplier_; }
    std::uint64_t modulus() const noexcept { return modulus_; }

private:
    std::uint64_t modulus_;
    std::uint64_t multiplier_;
};

std::uint64_t modexp_action(std::uint64_t a, std::uint64_t j, std::uint64_t modulus, std::uint64_t y);

/// Semiclassical phase correction: -pi * sum_k bits[k-1] / 2^k, so the first
/// listed bit carries weight 1/2. Throws ValidationError on an empty list.
double rphase_angle(std::span<const int> bits);

/// Writes the measured qubit value into register[cbit].
void copy_action(ClassicalRegister& reg, int qubit_value, std::size_t cbit);

}  // namespace qkit
