#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "qkit/state.hpp"
#include "qkit/errors.hpp"
#include "support.hpp"

using namespace qkit;

namespace {

constexpr StorageMode kModes[] = {StorageMode::Sparse, StorageMode::Dense};

std::vector<int> all_qubits(int n)
{
    std::vector<int> q;
    for (int i = 0; i < n; ++i)
        q.push_back(i);
    return q;
}

QuantumState basis(int n, BasisIndex index, StorageMode mode = StorageMode::Sparse)
{
    QuantumState s(n, mode);
    s.apply_permutation(all_qubits(n), [index](std::uint64_t v) { return v ^ index; });
    return s;
}

QuantumState bell(StorageMode mode = StorageMode::Sparse)
{
    QuantumState s(2, mode);
    s.apply_1q(0, hadamard_matrix());
    const int c[] = {0};
    s.apply_1q(1, pauli_x_matrix(), c);
    return s;
}

void random_layer(QuantumState& s, std::mt19937_64& rng)
{
    const int n = s.num_qubits();
    std::uniform_int_distribution<int> q(0, n - 1);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    for (int k = 0; k < 3 * n; ++k) {
        const int a = q(rng);
        int b = q(rng);
        if (b == a)
            b = (a + 1) % n;
        switch (k % 5) {
        case 0: s.apply_1q(a, hadamard_matrix()); break;
        case 1: s.apply_cphase(a, b, ang(rng)); break;
        case 2: s.apply_phase(a, ang(rng)); break;
        case 3: s.apply_1q(a, pauli_y_matrix()); break;
        case 4: {
            const int ctl[] = {b};
            s.apply_1q(a, {Amplitude{std::cos(0.3)}, Amplitude{0, std::sin(0.3)}, Amplitude{0, std::sin(0.3)},
                           Amplitude{std::cos(0.3)}},
                       ctl);
            break;
        }
        }
    }
}

}  // namespace

TEST_CASE("initial state and basis preparation")
{
    for (auto mode : kModes) {
        QuantumState s(3, mode);
        CHECK(s.nonzero_count() == 1);
        CHECK(s.amplitude(0) == Amplitude{1.0});
        const auto t = basis(3, 0b101, mode);
        CHECK(t.amplitude(0b101) == Amplitude{1.0});
    }
}

TEST_CASE("qubit count limits")
{
    CHECK_THROWS_AS(QuantumState(0, StorageMode::Sparse), ConfigError);
    CHECK_THROWS_AS(QuantumState(64, StorageMode::Sparse), ConfigError);
    CHECK_NOTHROW(QuantumState(63, StorageMode::Sparse));
}

TEST_CASE("qubit 0 is the most significant basis bit")
{
    QuantumState s(3, StorageMode::Sparse);
    s.apply_1q(0, pauli_x_matrix());
    CHECK(s.amplitude(0b100) == Amplitude{1.0});
    CHECK(s.qubit_mask(2) == 1);
}

TEST_CASE("apply_cphase")
{
    for (auto mode : kModes) {
        auto s = basis(2, 0b11, mode);
        s.apply_cphase(0, 1, std::numbers::pi);
        CHECK(std::abs(s.amplitude(0b11) - Amplitude{-1.0}) < 1e-15);

        auto t = basis(2, 0b11, mode);
        t.apply_cphase(0, 1, std::numbers::pi / 2);
        CHECK(std::abs(t.amplitude(0b11) - Amplitude{0, 1}) < 1e-15);

        auto u = basis(2, 0b10, mode);
        u.apply_cphase(0, 1, 1.234);
        CHECK(u.amplitude(0b10) == Amplitude{1.0});

        CHECK_THROWS_AS(u.apply_cphase(1, 1, 0.5), ValidationError);
    }
}

TEST_CASE("apply_swap")
{
    for (auto mode : kModes) {
        auto s = basis(2, 0b01, mode);
        s.apply_swap(0, 1);
        CHECK(s.amplitude(0b10) == Amplitude{1.0});
        CHECK(s.nonzero_count() == 1);

        std::mt19937_64 rng(3);
        QuantumState r(4, mode);
        random_layer(r, rng);
        auto before = r.entries();
        r.apply_swap(1, 3);
        r.apply_swap(1, 3);
        CHECK(r.entries() == before);

        // (|001> + |100>)/sqrt2
        auto sym = basis(3, 0b001, mode);
        sym.apply_1q(0, hadamard_matrix());
        const int c[] = {0};
        sym.apply_1q(2, pauli_x_matrix(), c);
        REQUIRE(sym.nonzero_count() == 2);
        REQUIRE(std::abs(sym.amplitude(0b100)) > 0.7);
        auto e = sym.entries();
        sym.apply_swap(0, 2);
        CHECK(sym.entries() == e);

        CHECK_THROWS_AS(sym.apply_swap(2, 2), ValidationError);
    }
}

TEST_CASE("apply_permutation")
{
    for (auto mode : kModes) {
        std::mt19937_64 rng(11);
        QuantumState s(4, mode);
        random_layer(s, rng);
        const auto before = s.entries();
        const std::vector<int> t = {1, 3};
        s.apply_permutation(t, [](std::uint64_t v) { return v; });
        CHECK(s.entries() == before);

        QuantumState z(3, mode);
        z.apply_permutation(std::vector<int>{0, 2}, [](std::uint64_t v) { return (v + 1) % 4; });
        CHECK(z.amplitude(0b001) == Amplitude{1.0});

        const std::size_t count = s.nonzero_count();
        s.apply_permutation(std::vector<int>{0, 1, 2}, [](std::uint64_t v) { return (5 * v + 3) % 8; });
        CHECK(s.nonzero_count() == count);
    }
}

TEST_CASE("sparse permutation rejects collisions")
{
    QuantumState s(2, StorageMode::Sparse);
    s.apply_1q(0, hadamard_matrix());
    s.apply_1q(1, hadamard_matrix());
    CHECK_THROWS(s.apply_permutation(std::vector<int>{0, 1}, [](std::uint64_t) { return 0; }));
}

TEST_CASE("probability_of")
{
    for (auto mode : kModes) {
        QuantumState plus(1, mode);
        plus.apply_1q(0, hadamard_matrix());
        const int q0[] = {0};
        const int one[] = {1};
        const int zero[] = {0};
        CHECK(plus.probability_of(q0, one) == doctest::Approx(0.5).epsilon(1e-15));

        QuantumState z(3, mode);
        const int zeros[] = {0, 0, 0};
        CHECK(z.probability_of(all_qubits(3), zeros) == 1.0);

        CHECK(bell(mode).probability_of(q0, zero) == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("measure collapses and renormalizes")
{
    for (auto mode : kModes) {
        auto one = basis(1, 1, mode);
        Rng rng(1);
        const int q0[] = {0};
        const auto o = one.measure(q0, rng);
        CHECK(o.bits == std::vector<int>{1});
        CHECK(o.probability == 1.0);

        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto b = bell(mode);
            Rng r(seed);
            const auto out = b.measure(q0, r);
            const BasisIndex expect = out.bits[0] ? 0b11 : 0b00;
            CHECK(b.nonzero_count() == 1);
            CHECK(std::abs(b.amplitude(expect)) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::abs(b.norm_squared() - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("measurement is reproducible for a fixed seed")
{
    std::mt19937_64 gen(5);
    QuantumState base(5, StorageMode::Sparse);
    random_layer(base, gen);
    std::vector<std::vector<int>> first;
    for (int rep = 0; rep < 2; ++rep) {
        auto s = base;
        Rng rng(42);
        std::vector<std::vector<int>> bits;
        for (int q = 0; q < 5; ++q) {
            const int t[] = {q};
            bits.push_back(s.measure(t, rng).bits);
        }
        if (rep == 0)
            first = bits;
        else
            CHECK(bits == first);
    }
}

TEST_CASE("collapse idempotence")
{
    std::mt19937_64 gen(9);
    for (auto mode : kModes) {
        for (int trial = 0; trial < 10; ++trial) {
            QuantumState s(4, mode);
            random_layer(s, gen);
            Rng rng(static_cast<std::uint64_t>(trial));
            const int qs[] = {1, 3};
            const auto a = s.measure(qs, rng);
            const auto b = s.measure(qs, rng);
            CHECK(a.bits == b.bits);
            CHECK(b.probability == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("measurement statistics follow probability_of")
{
    std::mt19937_64 gen(21);
    QuantumState s(3, StorageMode::Sparse);
    random_layer(s, gen);
    const std::vector<int> qs = {0, 2};
    const int samples = 100000;
    std::map<std::uint64_t, int> counts;
    Rng rng(77);
    for (int k = 0; k < samples; ++k) {
        auto t = s;
        counts[t.measure(qs, rng).value()]++;
    }
    for (std::uint64_t v = 0; v < 4; ++v) {
        const int bits[] = {static_cast<int>(v >> 1), static_cast<int>(v & 1)};
        const double p = s.probability_of(qs, bits);
        const double sigma = std::sqrt(samples * p * (1 - p));
        CHECK(std::abs(counts[v] - samples * p) <= 4 * sigma + 1e-9);
    }
}

TEST_CASE("marginal matches between modes bit for bit")
{
    std::mt19937_64 gen(4);
    QuantumState s(6, StorageMode::Sparse);
    random_layer(s, gen);
    const auto d = s.converted(StorageMode::Dense);
    const std::vector<int> qs = {4, 1, 2};
    CHECK(s.marginal(qs) == d.marginal(qs));
}

TEST_CASE("norm is preserved by every gate kernel")
{
    std::mt19937_64 gen(8);
    for (auto mode : kModes) {
        QuantumState s(7, mode);
        for (int layer = 0; layer < 5; ++layer) {
            random_layer(s, gen);
            CHECK(std::abs(s.norm_squared() - 1.0) <= 1e-10);
        }
    }
}

TEST_CASE("sparse and dense kernels agree")
{
    std::mt19937_64 g1(13), g2(13);
    QuantumState s(6, StorageMode::Sparse);
    QuantumState d(6, StorageMode::Dense);
    random_layer(s, g1);
    random_layer(d, g2);
    const auto es = s.entries();
    for (const auto& [i, a] : d.entries())
        CHECK(std::abs(s.amplitude(i) - a) <= 1e-10);
    CHECK(es.size() == d.entries().size());
}

TEST_CASE("matrix kernel agrees with the reference simulator")
{
    // Random 2-qubit unitary from a product of known gates, as a full matrix.
    std::mt19937_64 gen(2);
    QuantumState probe(2, StorageMode::Dense);
    std::vector<Amplitude> u(16);
    for (int col = 0; col < 4; ++col) {
        auto s = basis(2, static_cast<BasisIndex>(col), StorageMode::Dense);
        s.apply_1q(0, hadamard_matrix());
        s.apply_cphase(0, 1, 0.7);
        s.apply_1q(1, pauli_y_matrix());
        for (int row = 0; row < 4; ++row)
            u[static_cast<std::size_t>(row * 4 + col)] = s.amplitude(static_cast<BasisIndex>(row));
    }
    REQUIRE(is_unitary(u, 4));

    // Apply on targets (2, 0) of a 3-qubit random state, compare with a
    // direct index computation.
    for (auto mode : kModes) {
        QuantumState s(3, mode);
        std::mt19937_64 g(17);
        random_layer(s, g);
        const auto before = s.converted(StorageMode::Dense);
        s.apply_matrix(std::vector<int>{2, 0}, u);
        for (BasisIndex out = 0; out < 8; ++out) {
            const int r = static_cast<int>(((out & 1) << 1) | ((out >> 2) & 1));
            Amplitude expect{};
            for (int c = 0; c < 4; ++c) {
                const BasisIndex in = (out & 0b010) | static_cast<BasisIndex>(c >> 1) | (static_cast<BasisIndex>(c & 1) << 2);
                expect += u[static_cast<std::size_t>(r * 4 + c)] * before.amplitude(in);
            }
            CHECK(std::abs(s.amplitude(out) - expect) < 1e-12);
        }
    }
}

TEST_CASE("bloch vectors")
{
    for (auto mode : kModes) {
        QuantumState z(1, mode);
        auto b = z.bloch_vector(0);
        CHECK(b.x == doctest::Approx(0));
        CHECK(b.z == doctest::Approx(1));

        QuantumState p(1, mode);
        p.apply_1q(0, hadamard_matrix());
        b = p.bloch_vector(0);
        CHECK(b.x == doctest::Approx(1));
        CHECK(std::abs(b.y) < 1e-12);
        CHECK(std::abs(b.z) < 1e-12);

        // |+i> = S|+> points along +y.
        p.apply_phase(0, std::numbers::pi / 2);
        CHECK(p.bloch_vector(0).y == doctest::Approx(1));

        b = bell(mode).bloch_vector(0);
        CHECK(b.norm() < 1e-10);
    }
}

TEST_CASE("bloch norm bound and product-state purity")
{
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 20; ++trial) {
        QuantumState s(4, StorageMode::Sparse);
        random_layer(s, gen);
        for (int q = 0; q < 4; ++q)
            CHECK(s.bloch_vector(q).norm() <= 1 + 1e-10);
    }
    QuantumState prod(3, StorageMode::Sparse);
    prod.apply_1q(0, hadamard_matrix());
    prod.apply_phase(0, 0.4);
    prod.apply_1q(2, hadamard_matrix());
    for (int q = 0; q < 3; ++q)
        CHECK(std::abs(prod.bloch_vector(q).norm() - 1.0) < 1e-10);
}

TEST_CASE("convert_mode")
{
    QuantumState s(3, StorageMode::Sparse);
    auto d = s.converted(StorageMode::Dense);
    CHECK(d.mode() == StorageMode::Dense);
    for (BasisIndex i = 0; i < 8; ++i)
        CHECK(d.amplitude(i) == (i == 0 ? Amplitude{1.0} : Amplitude{}));

    std::mt19937_64 gen(6);
    QuantumState r(5, StorageMode::Sparse);
    random_layer(r, gen);
    auto back = r.converted(StorageMode::Dense).converted(StorageMode::Sparse);
    CHECK(back.entries() == r.entries());
}

TEST_CASE("dense allocation above the budget reports the required bytes")
{
    CHECK(QuantumState::dense_bytes(34) == (1ull << 34) * 16);
    try {
        QuantumState big(34, StorageMode::Dense, 16ull << 30);
        FAIL("expected ResourceError");
    } catch (const ResourceError& e) {
        CHECK(e.required_bytes == (1ull << 34) * 16);
    }
    QuantumState sparse(34, StorageMode::Sparse, 16ull << 30);
    CHECK_THROWS_AS(sparse.convert_mode(StorageMode::Dense), ResourceError);
}

TEST_CASE("storage mode names")
{
    CHECK(storage_mode_from_string("sparse") == StorageMode::Sparse);
    CHECK(storage_mode_from_string("memory") == StorageMode::Sparse);
    CHECK(storage_mode_from_string("performance") == StorageMode::Dense);
    CHECK_THROWS_AS(storage_mode_from_string("fast"), ConfigError);
}

TEST_CASE("classical register")
{
    ClassicalRegister c(8);
    c.set(1, 1);
    CHECK(c.to_string() == "01000000");
    CHECK(c.to_integer() == 64);
    CHECK_THROWS(c.set(8, 1));
}

TEST_CASE("bit field reads scattered qubits most significant first")
{
    QuantumState s(5, StorageMode::Sparse);
    BitField f(s, std::vector<int>{3, 0});
    // qubit 3 -> bit 1, qubit 0 -> bit 4
    CHECK(f.read(0b10000) == 0b01);
    CHECK(f.read(0b00010) == 0b10);
    CHECK(f.write(0, 0b11) == 0b10010);
}
