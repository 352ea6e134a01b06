#include "qkit/state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "qkit/errors.hpp"

namespace qkit {

namespace {

// Rough footprint of one flat_hash_map slot plus control byte, at the
// default load factor.
constexpr std::uint64_t kSparseBytesPerEntry = 32;

std::string bytes_report(std::uint64_t required, std::uint64_t budget)
{
    return "requires " + std::to_string(required) + " bytes, budget is " + std::to_string(budget) + " bytes";
}

}  // namespace

const char* to_string(StorageMode mode) { return mode == StorageMode::Sparse ? "sparse" : "dense"; }

StorageMode storage_mode_from_string(const std::string& name)
{
    if (name == "sparse" || name == "memory")
        return StorageMode::Sparse;
    if (name == "dense" || name == "performance")
        return StorageMode::Dense;
    throw ConfigError("unknown storage mode '" + name + "' (expected sparse or dense)");
}

std::uint64_t MeasurementOutcome::value() const
{
    std::uint64_t v = 0;
    for (int b : bits)
        v = (v << 1) | static_cast<std::uint64_t>(b);
    return v;
}

std::string MeasurementOutcome::bitstring() const
{
    std::string s;
    s.reserve(bits.size());
    for (int b : bits)
        s.push_back(b ? '1' : '0');
    return s;
}

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

int ClassicalRegister::get(std::size_t index) const
{
    if (index >= bits_.size())
        throw ValidationError("classical bit " + std::to_string(index) + " out of range (register has " +
                              std::to_string(bits_.size()) + " bits)");
    return bits_[index];
}

void ClassicalRegister::set(std::size_t index, int value)
{
    if (index >= bits_.size())
        throw ValidationError("classical bit " + std::to_string(index) + " out of range (register has " +
                              std::to_string(bits_.size()) + " bits)");
    bits_[index] = value ? 1 : 0;
}

std::string ClassicalRegister::to_string() const
{
    std::string s;
    s.reserve(bits_.size());
    for (auto b : bits_)
        s.push_back(b ? '1' : '0');
    return s;
}

std::uint64_t ClassicalRegister::to_integer() const
{
    if (bits_.size() > 64)
        throw ValidationError("classical register wider than 64 bits has no 64-bit integer form");
    std::uint64_t v = 0;
    for (auto b : bits_)
        v = (v << 1) | b;
    return v;
}

// ---------------------------------------------------------------------------

BitField::BitField(const QuantumState& state, std::span<const int> qubits)
{
    masks_.reserve(qubits.size());
    for (int q : qubits) {
        masks_.push_back(state.qubit_mask(q));
        mask_ |= masks_.back();
    }
    // Ascending consecutive qubits form one contiguous run of index bits.
    contiguous_ = !qubits.empty();
    for (std::size_t i = 1; i < qubits.size(); ++i)
        if (qubits[i] != qubits[i - 1] + 1)
            contiguous_ = false;
    if (contiguous_)
        shift_ = state.num_qubits() - 1 - qubits.back();
}

std::uint64_t BitField::read(BasisIndex index) const
{
    if (contiguous_)
        return (index & mask_) >> shift_;
    std::uint64_t v = 0;
    for (BasisIndex m : masks_)
        v = (v << 1) | ((index & m) ? 1u : 0u);
    return v;
}

BasisIndex BitField::write(BasisIndex index, std::uint64_t value) const
{
    if (contiguous_)
        return (index & ~mask_) | ((value << shift_) & mask_);
    index &= ~mask_;
    const auto k = masks_.size();
    for (std::size_t i = 0; i < k; ++i)
        if ((value >> (k - 1 - i)) & 1u)
            index |= masks_[i];
    return index;
}

// ---------------------------------------------------------------------------

Matrix2 hadamard_matrix()
{
    const double h = std::numbers::sqrt2 / 2.0;
    return {Amplitude{h, 0}, Amplitude{h, 0}, Amplitude{h, 0}, Amplitude{-h, 0}};
}
Matrix2 pauli_x_matrix() { return {Amplitude{0, 0}, Amplitude{1, 0}, Amplitude{1, 0}, Amplitude{0, 0}}; }
Matrix2 pauli_y_matrix() { return {Amplitude{0, 0}, Amplitude{0, -1}, Amplitude{0, 1}, Amplitude{0, 0}}; }
Matrix2 pauli_z_matrix() { return {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{-1, 0}}; }
Matrix2 phase_matrix(double theta)
{
    return {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, std::polar(1.0, theta)};
}

bool is_unitary(std::span<const Amplitude> u, std::size_t dim, double tolerance)
{
    if (u.size() != dim * dim)
        return false;
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            Amplitude acc{};
            for (std::size_t k = 0; k < dim; ++k)
                acc += std::conj(u[k * dim + r]) * u[k * dim + c];
            const Amplitude expected = r == c ? Amplitude{1, 0} : Amplitude{0, 0};
            if (std::abs(acc - expected) > tolerance)
                return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------

std::uint64_t QuantumState::dense_bytes(int num_qubits)
{
    if (num_qubits >= 60)
        return std::numeric_limits<std::uint64_t>::max();
    return (std::uint64_t{1} << num_qubits) * sizeof(Amplitude);
}

QuantumState::QuantumState(int num_qubits, StorageMode mode, std::uint64_t memory_budget)
    : num_qubits_(num_qubits), mode_(mode), memory_budget_(memory_budget)
{
    if (num_qubits < 1 || num_qubits > kMaxQubits)
        throw ConfigError("number of qubits must be in [1, " + std::to_string(kMaxQubits) + "], got " +
                          std::to_string(num_qubits));
    if (mode == StorageMode::Dense) {
        const auto need = dense_bytes(num_qubits);
        if (need > memory_budget)
            throw ResourceError("dense state of " + std::to_string(num_qubits) + " qubits " +
                                    bytes_report(need, memory_budget),
                                need);
        dense_.assign(std::size_t{1} << num_qubits, Amplitude{});
        dense_[0] = Amplitude{1, 0};
    } else {
        sparse_.emplace(BasisIndex{0}, Amplitude{1, 0});
    }
}

void QuantumState::check_qubit(int qubit) const
{
    if (qubit < 0 || qubit >= num_qubits_)
        throw ValidationError("qubit " + std::to_string(qubit) + " out of range for " +
                              std::to_string(num_qubits_) + "-qubit state");
}

void QuantumState::check_distinct(std::span<const int> a, std::span<const int> b) const
{
    BasisIndex seen = 0;
    auto visit = [&](int q) {
        check_qubit(q);
        const auto m = qubit_mask(q);
        if (seen & m)
            throw ValidationError("qubit " + std::to_string(q) + " used more than once in one operation");
        seen |= m;
    };
    for (int q : a)
        visit(q);
    for (int q : b)
        visit(q);
}

BasisIndex QuantumState::mask_of(std::span<const int> qubits) const
{
    BasisIndex m = 0;
    for (int q : qubits)
        m |= qubit_mask(q);
    return m;
}

template <class Fn> void QuantumState::for_each_entry(Fn&& fn) const
{
    if (mode_ == StorageMode::Sparse) {
        for (const auto& [i, a] : sparse_)
            fn(i, a);
    } else {
        for (std::size_t i = 0; i < dense_.size(); ++i)
            if (dense_[i] != Amplitude{})
                fn(static_cast<BasisIndex>(i), dense_[i]);
    }
}

void QuantumState::prune()
{
    if (mode_ != StorageMode::Sparse)
        return;
    for (auto it = sparse_.begin(); it != sparse_.end();) {
        if (abs2(it->second) < kPruneThreshold)
            sparse_.erase(it++);
        else
            ++it;
    }
}

void QuantumState::check_sparse_budget() const
{
    if (mode_ != StorageMode::Sparse)
        return;
    const std::uint64_t need = static_cast<std::uint64_t>(sparse_.size()) * kSparseBytesPerEntry;
    if (need > memory_budget_)
        throw ResourceError("sparse state with " + std::to_string(sparse_.size()) + " entries " +
                                bytes_report(need, memory_budget_),
                            need);
}

std::size_t QuantumState::nonzero_count() const
{
    if (mode_ == StorageMode::Sparse)
        return sparse_.size();
    return static_cast<std::size_t>(
        std::count_if(dense_.begin(), dense_.end(), [](const Amplitude& a) { return a != Amplitude{}; }));
}

Amplitude QuantumState::amplitude(BasisIndex index) const
{
    if (num_qubits_ < 64 && index >> num_qubits_)
        throw ValidationError("basis index out of range");
    if (mode_ == StorageMode::Dense)
        return dense_[index];
    auto it = sparse_.find(index);
    return it == sparse_.end() ? Amplitude{} : it->second;
}

std::vector<std::pair<BasisIndex, Amplitude>> QuantumState::entries() const
{
    std::vector<std::pair<BasisIndex, Amplitude>> out;
    out.reserve(mode_ == StorageMode::Sparse ? sparse_.size() : 0);
    for_each_entry([&](BasisIndex i, const Amplitude& a) { out.emplace_back(i, a); });
    if (mode_ == StorageMode::Sparse)
        std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    return out;
}

double QuantumState::norm_squared() const
{
    double total = 0.0;
    for_each_entry([&](BasisIndex, const Amplitude& a) { total += abs2(a); });
    return total;
}

// ---------------------------------------------------------------------------
// Gate kernels

void QuantumState::apply_1q(int target, const Matrix2& u, std::span<const int> quantum_controls,
                            std::span<const int> classical_controls)
{
    const int t[1] = {target};
    check_distinct(t, quantum_controls);
    if (!is_unitary(u, 2))
        throw GateDefinitionError("single-qubit matrix is not unitary");
    for (int c : classical_controls)
        if (c == 0)
            return;

    const BasisIndex tmask = qubit_mask(target);
    const BasisIndex cmask = mask_of(quantum_controls);
    const bool diagonal = u[1] == Amplitude{} && u[2] == Amplitude{};

    if (mode_ == StorageMode::Dense) {
        const std::size_t size = dense_.size();
        if (diagonal) {
            for (std::size_t i = 0; i < size; ++i)
                if ((i & cmask) == cmask)
                    dense_[i] = cmul((i & tmask) ? u[3] : u[0], dense_[i]);
            return;
        }
        for (std::size_t i = 0; i < size; ++i) {
            if ((i & tmask) || (i & cmask) != cmask)
                continue;
            const Amplitude a0 = dense_[i];
            const Amplitude a1 = dense_[i | tmask];
            dense_[i] = cmul(u[0], a0) + cmul(u[1], a1);
            dense_[i | tmask] = cmul(u[2], a0) + cmul(u[3], a1);
        }
        return;
    }

    if (diagonal) {
        for (auto& [i, a] : sparse_)
            if ((i & cmask) == cmask)
                a = cmul((i & tmask) ? u[3] : u[0], a);
        return;
    }

    absl::flat_hash_map<BasisIndex, Amplitude> out;
    out.reserve(sparse_.size() * 2);
    for (const auto& [i, a] : sparse_) {
        if ((i & cmask) != cmask) {
            out[i] += a;
            continue;
        }
        const int col = (i & tmask) ? 1 : 0;
        const BasisIndex i0 = i & ~tmask;
        if (u[col] != Amplitude{})
            out[i0] += cmul(u[col], a);
        if (u[2 + col] != Amplitude{})
            out[i0 | tmask] += cmul(u[2 + col], a);
    }
    sparse_ = std::move(out);
    prune();
    check_sparse_budget();
}

void QuantumState::apply_matrix(std::span<const int> targets, std::span<const Amplitude> u,
                                std::span<const int> quantum_controls)
{
    if (targets.empty() || targets.size() > 10)
        throw ValidationError("matrix gates act on 1 to 10 qubits");
    check_distinct(targets, quantum_controls);
    const std::size_t dim = std::size_t{1} << targets.size();
    if (u.size() != dim * dim)
        throw GateDefinitionError("matrix dimension does not match " + std::to_string(targets.size()) +
                                  " target qubits");
    if (!is_unitary(u, dim))
        throw GateDefinitionError("matrix is not unitary");

    const BitField field(*this, targets);
    const BasisIndex cmask = mask_of(quantum_controls);

    if (mode_ == StorageMode::Dense) {
        std::vector<Amplitude> in(dim), res(dim);
        std::vector<BasisIndex> idx(dim);
        for (std::size_t base = 0; base < dense_.size(); ++base) {
            if ((base & field.mask()) || (base & cmask) != cmask)
                continue;
            for (std::size_t c = 0; c < dim; ++c) {
                idx[c] = field.write(base, c);
                in[c] = dense_[idx[c]];
            }
            for (std::size_t r = 0; r < dim; ++r) {
                Amplitude acc{};
                for (std::size_t c = 0; c < dim; ++c)
                    acc += cmul(u[r * dim + c], in[c]);
                res[r] = acc;
            }
            for (std::size_t r = 0; r < dim; ++r)
                dense_[idx[r]] = res[r];
        }
        return;
    }

    absl::flat_hash_map<BasisIndex, Amplitude> out;
    out.reserve(sparse_.size() * 2);
    for (const auto& [i, a] : sparse_) {
        if ((i & cmask) != cmask) {
            out[i] += a;
            continue;
        }
        const std::uint64_t col = field.read(i);
        for (std::size_t r = 0; r < dim; ++r) {
            const Amplitude m = u[r * dim + col];
            if (m != Amplitude{})
                out[field.write(i, r)] += cmul(m, a);
        }
    }
    sparse_ = std::move(out);
    prune();
    check_sparse_budget();
}

void QuantumState::apply_phase(int target, double theta)
{
    check_qubit(target);
    const BasisIndex tmask = qubit_mask(target);
    const Amplitude ph = std::polar(1.0, theta);
    if (mode_ == StorageMode::Dense) {
        for (std::size_t i = 0; i < dense_.size(); ++i)
            if (i & tmask)
                dense_[i] = cmul(ph, dense_[i]);
        return;
    }
    for (auto& [i, a] : sparse_)
        if (i & tmask)
            a = cmul(ph, a);
}

void QuantumState::apply_cphase(int control, int target, double phi)
{
    const int q[2] = {control, target};
    check_distinct(q);
    const BasisIndex both = qubit_mask(control) | qubit_mask(target);
    const Amplitude ph = std::polar(1.0, phi);
    if (mode_ == StorageMode::Dense) {
        for (std::size_t i = 0; i < dense_.size(); ++i)
            if ((i & both) == both)
                dense_[i] = cmul(ph, dense_[i]);
        return;
    }
    for (auto& [i, a] : sparse_)
        if ((i & both) == both)
            a = cmul(ph, a);
}

void QuantumState::apply_swap(int a, int b)
{
    const int q[2] = {a, b};
    check_distinct(q);
    const BasisIndex ma = qubit_mask(a);
    const BasisIndex mb = qubit_mask(b);
    if (mode_ == StorageMode::Dense) {
        for (std::size_t i = 0; i < dense_.size(); ++i)
            if ((i & ma) && !(i & mb))
                std::swap(dense_[i], dense_[(i & ~ma) | mb]);
        return;
    }
    absl::flat_hash_map<BasisIndex, Amplitude> out;
    out.reserve(sparse_.size());
    for (const auto& [i, amp] : sparse_) {
        const bool ba = i & ma;
        const bool bb = i & mb;
        BasisIndex j = i;
        if (ba != bb)
            j ^= ma | mb;
        out.emplace(j, amp);
    }
    sparse_ = std::move(out);
}

void QuantumState::apply_permutation(std::span<const int> targets, const PermutationFn& perm,
                                     std::span<const int> quantum_controls)
{
    if (targets.empty())
        throw ValidationError("permutation needs at least one target qubit");
    check_distinct(targets, quantum_controls);
    const BitField field(*this, targets);
    const BasisIndex cmask = mask_of(quantum_controls);
    const int k = field.width();
    const std::uint64_t limit = k >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k);

    auto image = [&](std::uint64_t v) {
        const std::uint64_t w = perm(v);
        if (k < 64 && w >= limit)
            throw GateDefinitionError("permutation maps " + std::to_string(v) + " outside its " +
                                      std::to_string(k) + "-bit domain");
        return w;
    };

    if (mode_ == StorageMode::Dense) {
        std::vector<Amplitude> out(dense_.size(), Amplitude{});
        for (std::size_t i = 0; i < dense_.size(); ++i) {
            if ((i & cmask) != cmask) {
                out[i] = dense_[i];
                continue;
            }
            out[field.write(i, image(field.read(i)))] = dense_[i];
        }
        dense_ = std::move(out);
        return;
    }

    absl::flat_hash_map<BasisIndex, Amplitude> out;
    out.reserve(sparse_.size());
    for (const auto& [i, a] : sparse_) {
        const BasisIndex j = (i & cmask) == cmask ? field.write(i, image(field.read(i))) : i;
        if (!out.emplace(j, a).second)
            throw GateDefinitionError("permutation is not a bijection (two inputs map to the same value)");
    }
    sparse_ = std::move(out);
}

// ---------------------------------------------------------------------------
// Measurement

double QuantumState::probability_of(std::span<const int> qubits, std::span<const int> bits) const
{
    if (qubits.size() != bits.size())
        throw ValidationError("probability_of needs one bit per qubit");
    for (int q : qubits)
        check_qubit(q);
    BasisIndex mask = 0, want = 0;
    for (std::size_t n = 0; n < qubits.size(); ++n) {
        const auto m = qubit_mask(qubits[n]);
        if (bits[n] != 0 && bits[n] != 1)
            throw ValidationError("bit values must be 0 or 1");
        if ((mask & m) && (((want & m) != 0) != (bits[n] == 1)))
            return 0.0;
        mask |= m;
        if (bits[n])
            want |= m;
    }
    double p = 0.0;
    for_each_entry([&](BasisIndex i, const Amplitude& a) {
        if ((i & mask) == want)
            p += abs2(a);
    });
    return std::clamp(p, 0.0, 1.0);
}

std::vector<std::pair<std::uint64_t, double>> QuantumState::marginal(std::span<const int> qubits) const
{
    check_distinct(qubits);
    const BitField field(*this, qubits);
    std::map<std::uint64_t, double> acc;
    auto add = [&](BasisIndex i, const Amplitude& a) { acc[field.read(i)] += abs2(a); };
    if (mode_ == StorageMode::Sparse) {
        for (const auto& [i, a] : entries())
            add(i, a);
    } else {
        for_each_entry(add);
    }
    return {acc.begin(), acc.end()};
}

MeasurementOutcome QuantumState::measure(std::span<const int> qubits, Rng& rng)
{
    if (qubits.empty())
        throw ValidationError("measurement needs at least one qubit");
    const auto dist = marginal(qubits);
    double total = 0.0;
    for (const auto& [v, p] : dist)
        total += p;
    if (!(total > 0.0))
        throw InternalError("cannot measure a zero-norm state");

    const double target = rng.uniform() * total;
    double running = 0.0;
    std::size_t pick = dist.size() - 1;
    for (std::size_t n = 0; n < dist.size(); ++n) {
        running += dist[n].second;
        if (target < running) {
            pick = n;
            break;
        }
    }
    while (dist[pick].second <= 0.0 && pick > 0)
        --pick;

    const auto [value, p] = dist[pick];
    const BitField field(*this, qubits);
    const double inv = 1.0 / std::sqrt(p);
    if (mode_ == StorageMode::Dense) {
        for (std::size_t i = 0; i < dense_.size(); ++i) {
            if (field.read(i) == value)
                dense_[i] = Amplitude{dense_[i].real() * inv, dense_[i].imag() * inv};
            else
                dense_[i] = Amplitude{};
        }
    } else {
        for (auto it = sparse_.begin(); it != sparse_.end();) {
            if (field.read(it->first) == value) {
                it->second = Amplitude{it->second.real() * inv, it->second.imag() * inv};
                ++it;
            } else {
                sparse_.erase(it++);
            }
        }
    }

    MeasurementOutcome out;
    out.qubits.assign(qubits.begin(), qubits.end());
    const int k = static_cast<int>(qubits.size());
    for (int n = 0; n < k; ++n)
        out.bits.push_back(static_cast<int>((value >> (k - 1 - n)) & 1u));
    out.probability = p / total;
    return out;
}

double QuantumState::collapse(std::span<const int> qubits, std::span<const int> bits)
{
    if (qubits.size() != bits.size())
        throw ValidationError("collapse needs one bit per qubit");
    check_distinct(qubits);
    std::uint64_t value = 0;
    for (int b : bits) {
        if (b != 0 && b != 1)
            throw ValidationError("bit values must be 0 or 1");
        value = (value << 1) | static_cast<std::uint64_t>(b);
    }
    double p = 0.0;
    for (const auto& [v, pv] : marginal(qubits))
        if (v == value)
            p = pv;
    if (!(p > 0.0))
        throw InternalError("collapse onto a zero-probability outcome");

    const BitField field(*this, qubits);
    const double inv = 1.0 / std::sqrt(p);
    if (mode_ == StorageMode::Dense) {
        for (std::size_t i = 0; i < dense_.size(); ++i)
            dense_[i] = field.read(i) == value ? Amplitude{dense_[i].real() * inv, dense_[i].imag() * inv}
                                               : Amplitude{};
    } else {
        for (auto it = sparse_.begin(); it != sparse_.end();) {
            if (field.read(it->first) == value) {
                it->second = Amplitude{it->second.real() * inv, it->second.imag() * inv};
                ++it;
            } else {
                sparse_.erase(it++);
            }
        }
    }
    return p;
}

BlochVector QuantumState::bloch_vector(int qubit) const
{
    check_qubit(qubit);
    const BasisIndex m = qubit_mask(qubit);
    double rho00 = 0.0, rho11 = 0.0;
    Amplitude rho01{};
    for_each_entry([&](BasisIndex i, const Amplitude& a) {
        if (i & m) {
            rho11 += abs2(a);
        } else {
            rho00 += abs2(a);
            const Amplitude b = amplitude(i | m);
            rho01 += a * std::conj(b);
        }
    });
    return {2.0 * rho01.real(), -2.0 * rho01.imag(), rho00 - rho11};
}

void QuantumState::convert_mode(StorageMode target)
{
    if (target == mode_)
        return;
    if (target == StorageMode::Dense) {
        const auto need = dense_bytes(num_qubits_);
        if (need > memory_budget_)
            throw ResourceError("dense state of " + std::to_string(num_qubits_) + " qubits " +
                                    bytes_report(need, memory_budget_),
                                need);
        std::vector<Amplitude> dense(std::size_t{1} << num_qubits_, Amplitude{});
        for (const auto& [i, a] : sparse_)
            dense[i] = a;
        dense_ = std::move(dense);
        sparse_.clear();
    } else {
        absl::flat_hash_map<BasisIndex, Amplitude> sparse;
        for (std::size_t i = 0; i < dense_.size(); ++i)
            if (dense_[i] != Amplitude{} && abs2(dense_[i]) >= kPruneThreshold)
                sparse.emplace(static_cast<BasisIndex>(i), dense_[i]);
        sparse_ = std::move(sparse);
        dense_.clear();
        dense_.shrink_to_fit();
    }
    mode_ = target;
}

QuantumState QuantumState::converted(StorageMode target) const
{
    QuantumState copy = *this;
    copy.convert_mode(target);
    return copy;
}

}  // namespace qkit
