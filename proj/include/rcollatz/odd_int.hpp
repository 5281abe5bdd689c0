#pragma once

// Arbitrary-precision positive odd integers and the 3x + xi step map.
//
// OddInt keeps values below 2^64 in a machine word and promotes to GMP only
// when a state outgrows it. The representation is canonical (a value that
// fits in 64 bits is always stored small), so equality and hashing work on
// the representation directly.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>

#include <gmpxx.h>

namespace rcollatz {

class OddInt {
public:
    /// The state 1.
    OddInt() = default;

    /// Throws ContractViolation when `value` is even or zero.
    static OddInt from_u64(std::uint64_t value);
    static OddInt from_mpz(const mpz_class& value);
    /// Parses a decimal string; throws ContractViolation on malformed, even
    /// or non-positive input.
    static OddInt parse(std::string_view decimal);

    bool is_small() const noexcept { return std::holds_alternative<std::uint64_t>(rep_); }
    /// Only meaningful when is_small().
    std::uint64_t small_value() const noexcept { return std::get<std::uint64_t>(rep_); }
    bool is_one() const noexcept { return is_small() && small_value() == 1; }

    mpz_class to_mpz() const;
    std::size_t bit_length() const noexcept;
    /// Natural logarithm in double precision.
    double log() const noexcept;
    std::string to_string() const;
    std::size_t hash() const noexcept;

    friend bool operator==(const OddInt& a, const OddInt& b) noexcept;
    friend std::strong_ordering operator<=>(const OddInt& a, const OddInt& b) noexcept;

private:
    friend struct OddIntAccess;
    explicit OddInt(std::uint64_t v) : rep_(v) {}
    explicit OddInt(mpz_class v) : rep_(std::move(v)) {}

    std::variant<std::uint64_t, mpz_class> rep_{std::uint64_t{1}};
};

/// One transition of the chain: 2^d * x_next = 3 * x_prev + xi, x_next odd.
struct StepOutcome {
    std::int64_t xi = 1;
    int d = 1;
    int m = 1;  // min(3, d)
    OddInt x_next;
};

/// 2-adic valuation of a positive even integer. Throws ContractViolation on
/// odd or non-positive input.
int v2(const mpz_class& n);
int v2(std::uint64_t n);

/// One randomized step x -> (3x + xi) / 2^v2(3x + xi). Throws InvalidXi when
/// xi is even or below -1.
StepOutcome step(const OddInt& x, std::int64_t xi);

/// The odd-step Collatz map, i.e. step(x, 1).
inline StepOutcome classical_step(const OddInt& x) { return step(x, 1); }

/// Exact comparison of 2^a_shift * a against multiplier * b.
std::strong_ordering compare_scaled(const OddInt& a, unsigned a_shift, const mpz_class& multiplier,
                                    const OddInt& b);

}  // namespace rcollatz

template <>
struct std::hash<rcollatz::OddInt> {
    std::size_t operator()(const rcollatz::OddInt& x) const noexcept { return x.hash(); }
};
