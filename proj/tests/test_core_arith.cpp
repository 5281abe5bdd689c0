#include <doctest.h>

#include <random>

#include "rcollatz/errors.hpp"
#include "rcollatz/odd_int.hpp"

using namespace rcollatz;

namespace {

// Valuation by repeated halving, independent of the trailing-zero count.
int v2_by_halving(mpz_class n) {
    int d = 0;
    while (n % 2 == 0) {
        n /= 2;
        ++d;
    }
    return d;
}

mpz_class random_odd(std::mt19937_64& gen, unsigned bits) {
    mpz_class z = 0;
    for (unsigned i = 0; i < bits; i += 64) {
        z <<= 64;
        z += mpz_class(static_cast<unsigned long>(gen()));
    }
    z >>= (bits + 63) / 64 * 64 - bits;
    z |= 1;
    return z;
}

}  // namespace

TEST_CASE("v2 examples") {
    CHECK(v2(std::uint64_t{2}) == 1);
    CHECK(v2(std::uint64_t{4}) == 2);
    CHECK(v2(std::uint64_t{96}) == 5);
    CHECK(v2(mpz_class(96)) == 5);
    CHECK(v2(mpz_class(1) << 300) == 300);
}

TEST_CASE("v2 rejects odd and non-positive input") {
    CHECK_THROWS_AS(v2(std::uint64_t{3}), ContractViolation);
    CHECK_THROWS_AS(v2(std::uint64_t{0}), ContractViolation);
    CHECK_THROWS_AS(v2(mpz_class(-4)), ContractViolation);
    CHECK_THROWS_AS(v2(mpz_class(7)), ContractViolation);
}

TEST_CASE("v2 agrees with repeated halving") {
    std::mt19937_64 gen(7);
    for (int i = 0; i < 500; ++i) {
        const mpz_class odd = random_odd(gen, 1 + gen() % 400);
        const unsigned shift = 1 + gen() % 130;
        const mpz_class n = odd << shift;
        REQUIRE(v2(n) == v2_by_halving(n));
        REQUIRE(v2(n) == static_cast<int>(shift));
    }
}

TEST_CASE("OddInt construction and canonical form") {
    CHECK(OddInt{}.is_one());
    CHECK_THROWS_AS(OddInt::from_u64(4), ContractViolation);
    CHECK_THROWS_AS(OddInt::from_u64(0), ContractViolation);
    CHECK_THROWS_AS(OddInt::parse("12"), ContractViolation);
    CHECK_THROWS_AS(OddInt::parse("-3"), ContractViolation);
    CHECK_THROWS_AS(OddInt::parse(""), ContractViolation);

    const OddInt small = OddInt::parse("18446744073709551615");  // 2^64 - 1
    CHECK(small.is_small());
    const OddInt big = OddInt::parse("18446744073709551617");  // 2^64 + 1
    CHECK_FALSE(big.is_small());
    CHECK(big.bit_length() == 65);
    CHECK(small < big);
    CHECK(OddInt::from_mpz(mpz_class("18446744073709551615")) == small);
    CHECK(big.to_string() == "18446744073709551617");
    CHECK(big.log() == doctest::Approx(64 * std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("step examples") {
    auto s = step(OddInt{}, 1);
    CHECK(s.d == 2);
    CHECK(s.m == 2);
    CHECK(s.x_next.is_one());

    s = step(OddInt{}, -1);
    CHECK(s.d == 1);
    CHECK(s.m == 1);
    CHECK(s.x_next.is_one());

    s = step(OddInt::from_u64(7), 1);
    CHECK(s.d == 1);
    CHECK(s.m == 1);
    CHECK(s.x_next == OddInt::from_u64(11));

    s = step(OddInt::from_u64(3), 5);
    CHECK(s.d == 1);
    CHECK(s.x_next == OddInt::from_u64(7));

    // 3 * 1 + 5 = 8 caps m at 3
    s = step(OddInt{}, 5);
    CHECK(s.d == 3);
    CHECK(s.m == 3);
}

TEST_CASE("classical_step examples") {
    auto s = classical_step(OddInt{});
    CHECK(s.x_next.is_one());
    CHECK(s.d == 2);
    CHECK(classical_step(OddInt::from_u64(7)).x_next == OddInt::from_u64(11));
    s = classical_step(OddInt::from_u64(17));
    CHECK(s.x_next == OddInt::from_u64(13));
    CHECK(s.d == 2);
}

TEST_CASE("step rejects invalid xi") {
    CHECK_THROWS_AS(step(OddInt{}, 2), InvalidXi);
    CHECK_THROWS_AS(step(OddInt{}, -3), InvalidXi);
    CHECK_THROWS_AS(step(OddInt{}, 0), InvalidXi);
}

TEST_CASE("property: reconstruction and closure from 1 to beyond 2^256") {
    std::mt19937_64 gen(2024);
    const std::int64_t xis[] = {-1, 1, 3, 5, 7, 9, 101};
    for (int i = 0; i < 3000; ++i) {
        const unsigned bits = 1 + gen() % 300;
        const mpz_class xv = random_odd(gen, bits);
        const OddInt x = OddInt::from_mpz(xv);
        const std::int64_t xi = xis[gen() % std::size(xis)];
        const StepOutcome s = step(x, xi);
        const mpz_class next = s.x_next.to_mpz();
        REQUIRE(s.d >= 1);
        REQUIRE(next >= 1);
        REQUIRE(mpz_odd_p(next.get_mpz_t()) != 0);
        REQUIRE(s.m == std::min(3, s.d));
        REQUIRE((next << s.d) == 3 * xv + xi);
    }
}

TEST_CASE("property: small and big paths agree near 2^64") {
    const mpz_class two64 = mpz_class(1) << 64;
    for (long delta = -41; delta <= 41; delta += 2) {
        const mpz_class xv = two64 + delta;
        for (std::int64_t xi : {-1L, 1L, 3L, 7L}) {
            const StepOutcome s = step(OddInt::from_mpz(xv), xi);
            REQUIRE((s.x_next.to_mpz() << s.d) == 3 * xv + xi);
        }
    }
}

TEST_CASE("mod-8 classes of 3x + {1,3,5,7} are exactly {0,2,4,6}") {
    std::mt19937_64 gen(8);
    for (int i = 0; i < 2000; ++i) {
        const mpz_class x = i < 1000 ? mpz_class(2 * i + 1) : random_odd(gen, 1 + gen() % 200);
        std::vector<unsigned long> residues;
        for (int xi : {1, 3, 5, 7}) {
            residues.push_back(mpz_fdiv_ui(mpz_class(3 * x + xi).get_mpz_t(), 8));
        }
        std::sort(residues.begin(), residues.end());
        REQUIRE(residues == std::vector<unsigned long>{0, 2, 4, 6});
    }
}

TEST_CASE("compare_scaled") {
    const OddInt a = OddInt::from_u64(5);
    const OddInt b = OddInt::from_u64(3);
    CHECK(compare_scaled(a, 1, mpz_class(3), b) > 0);   // 10 > 9
    CHECK(compare_scaled(a, 0, mpz_class(3), b) < 0);   // 5 < 9
    CHECK(compare_scaled(b, 0, mpz_class(1), b) == 0);
}
