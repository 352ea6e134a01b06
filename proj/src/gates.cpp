#include "qkit/gates.hpp"

#include <cmath>
#include <numbers>

#include <absl/container/flat_hash_set.h>

#include "qkit/errors.hpp"

namespace qkit {

const char* to_string(GateKind kind)
{
    switch (kind) {
    case GateKind::Builtin1q: return "builtin_1q";
    case GateKind::CPhase: return "cphase";
    case GateKind::Swap: return "swap";
    case GateKind::RPhase: return "rphase";
    case GateKind::Copy: return "copy";
    case GateKind::ModExp: return "modexp";
    case GateKind::UnitaryMatrix: return "unitary_matrix";
    case GateKind::Permutation: return "permutation_fn";
    }
    return "unknown";
}

namespace {

GateDef one_qubit(const std::string& name, const Matrix2& m)
{
    GateDef def;
    def.name = name;
    def.kind = GateKind::Builtin1q;
    def.arity = 0;
    def.builtin = true;
    def.matrix.assign(m.begin(), m.end());
    return def;
}

GateDef simple(const std::string& name, GateKind kind, int arity, std::vector<std::string> params = {})
{
    GateDef def;
    def.name = name;
    def.kind = kind;
    def.arity = arity;
    def.params = std::move(params);
    def.builtin = true;
    return def;
}

void check_bijection(const std::string& name, int k, const PermutationFn& fn)
{
    const std::uint64_t domain = k >= 64 ? 0 : std::uint64_t{1} << k;
    auto image = [&](std::uint64_t v) {
        const auto w = fn(v);
        if (k < 64 && w >= domain)
            throw GateDefinitionError("gate '" + name + "' maps " + std::to_string(v) + " outside [0, 2^" +
                                      std::to_string(k) + ")");
        return w;
    };
    if (k <= 20) {
        std::vector<bool> hit(domain, false);
        for (std::uint64_t v = 0; v < domain; ++v) {
            const auto w = image(v);
            if (hit[w])
                throw GateDefinitionError("gate '" + name + "' is not a bijection (value " + std::to_string(w) +
                                          " has two preimages)");
            hit[w] = true;
        }
        return;
    }
    Rng rng(0x9e3779b97f4a7c15ull);
    absl::flat_hash_map<std::uint64_t, std::uint64_t> seen;
    for (int probe = 0; probe < 1'000'000; ++probe) {
        std::uint64_t v = rng.next();
        if (k < 64)
            v &= domain - 1;
        const auto w = image(v);
        auto [it, fresh] = seen.emplace(w, v);
        if (!fresh && it->second != v)
            throw GateDefinitionError("gate '" + name + "' is not a bijection (value " + std::to_string(w) +
                                      " has two preimages)");
    }
}

}  // namespace

GateRegistry GateRegistry::builtin()
{
    GateRegistry r;
    r.insert(one_qubit("Hadamard", hadamard_matrix()));
    r.insert(one_qubit("SigmaX", pauli_x_matrix()));
    r.insert(one_qubit("SigmaY", pauli_y_matrix()));
    r.insert(one_qubit("SigmaZ", pauli_z_matrix()));
    r.insert(simple("CPHASE", GateKind::CPhase, 2, {"phi"}));
    r.insert(simple("SWAP", GateKind::Swap, 2));
    r.insert(simple("RPhase", GateKind::RPhase, 1));
    r.insert(simple("Copy", GateKind::Copy, 1));
    r.insert(simple("QuModExpUaj", GateKind::ModExp, 0, {"a", "j", "N"}));
    return r;
}

const GateDef* GateRegistry::find(std::string_view name) const
{
    auto it = gates_.find(name);
    return it == gates_.end() ? nullptr : &it->second;
}

const GateDef& GateRegistry::at(std::string_view name) const
{
    if (const auto* def = find(name))
        return *def;
    throw GateDefinitionError("unknown gate '" + std::string(name) + "'");
}

void GateRegistry::insert(GateDef def)
{
    if (gates_.count(def.name))
        throw GateDefinitionError("gate '" + def.name + "' is already defined");
    auto name = def.name;
    gates_.emplace(std::move(name), std::move(def));
}

void GateRegistry::register_matrix(const std::string& name, std::vector<Amplitude> matrix)
{
    if (contains(name))
        throw GateDefinitionError("gate '" + name + "' is already defined");
    const auto dim = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(matrix.size()))));
    if (dim < 2 || dim * dim != matrix.size() || (dim & (dim - 1)) != 0)
        throw GateDefinitionError("gate '" + name + "' matrix must be 2^k x 2^k");
    if (!is_unitary(matrix, dim))
        throw GateDefinitionError("gate '" + name + "' matrix is not unitary");
    int k = 0;
    while ((std::size_t{1} << k) < dim)
        ++k;
    GateDef def;
    def.name = name;
    def.kind = GateKind::UnitaryMatrix;
    def.arity = k;
    def.matrix = std::move(matrix);
    insert(std::move(def));
}

void GateRegistry::register_permutation(const std::string& name, int num_qubits, PermutationFn fn)
{
    if (contains(name))
        throw GateDefinitionError("gate '" + name + "' is already defined");
    if (num_qubits < 1 || num_qubits > kMaxQubits)
        throw GateDefinitionError("gate '" + name + "' must act on 1 to 63 qubits");
    if (!fn)
        throw GateDefinitionError("gate '" + name + "' has no function");
    check_bijection(name, num_qubits, fn);
    GateDef def;
    def.name = name;
    def.kind = GateKind::Permutation;
    def.arity = num_qubits;
    def.permutation = std::move(fn);
    insert(std::move(def));
}

void GateRegistry::register_permutation_table(const std::string& name, int num_qubits,
                                              std::vector<std::uint64_t> table)
{
    if (num_qubits < 1 || num_qubits > 20 || table.size() != (std::size_t{1} << num_qubits))
        throw GateDefinitionError("gate '" + name + "' table must list 2^k images for 1 <= k <= 20");
    auto shared = std::make_shared<const std::vector<std::uint64_t>>(table);
    register_permutation(name, num_qubits, [shared](std::uint64_t v) { return (*shared)[v]; });
    gates_.find(name)->second.table = std::move(table);
}

std::vector<const GateDef*> GateRegistry::list() const
{
    std::vector<const GateDef*> out;
    out.reserve(gates_.size());
    for (const auto& [name, def] : gates_)
        out.push_back(&def);
    return out;
}

// ---------------------------------------------------------------------------

std::uint64_t gcd(std::uint64_t a, std::uint64_t b)
{
    while (b) {
        const auto t = a % b;
        a = b;
        b = t;
    }
    return a;
}

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m)
{
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t pow_mod(std::uint64_t a, std::uint64_t e, std::uint64_t m)
{
    if (m == 1)
        return 0;
    std::uint64_t result = 1;
    a %= m;
    while (e) {
        if (e & 1u)
            result = mul_mod(result, a, m);
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    return result;
}

ModExpMap::ModExpMap(std::uint64_t a, std::uint64_t j, std::uint64_t modulus) : modulus_(modulus)
{
    if (modulus < 3)
        throw GateDefinitionError("modular exponentiation needs N >= 3");
    if (gcd(a % modulus, modulus) != 1)
        throw GateDefinitionError("modular exponentiation needs gcd(a, N) = 1, got gcd(" + std::to_string(a) +
                                  ", " + std::to_string(modulus) + ") = " + std::to_string(gcd(a, modulus)));
    multiplier_ = a % modulus;
    for (std::uint64_t s = 0; s < j; ++s)
        multiplier_ = mul_mod(multiplier_, multiplier_, modulus);
}

std::uint64_t modexp_action(std::uint64_t a, std::uint64_t j, std::uint64_t modulus, std::uint64_t y)
{
    return ModExpMap(a, j, modulus)(y);
}

double rphase_angle(std::span<const int> bits)
{
    if (bits.empty())
        throw ValidationError("RPhase needs at least one classical source bit");
    double weight = 0.5;
    double sum = 0.0;
    for (int b : bits) {
        if (b)
            sum += weight;
        weight *= 0.5;
    }
    return -std::numbers::pi * sum;
}

void copy_action(ClassicalRegister& reg, int qubit_value, std::size_t cbit) { reg.set(cbit, qubit_value); }

}  // namespace qkit
