#include "rcollatz/odd_int.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "rcollatz/errors.hpp"

namespace rcollatz {

using u128 = unsigned __int128;

struct OddIntAccess {
    static OddInt make_small(std::uint64_t v) { return OddInt(v); }

    static OddInt make_big(mpz_class v) {
        if (mpz_fits_ulong_p(v.get_mpz_t()) != 0) {
            return OddInt(static_cast<std::uint64_t>(mpz_get_ui(v.get_mpz_t())));
        }
        return OddInt(std::move(v));
    }

    static OddInt make_u128(u128 v) {
        const auto hi = static_cast<std::uint64_t>(v >> 64);
        const auto lo = static_cast<std::uint64_t>(v);
        if (hi == 0) return OddInt(lo);
        mpz_class z;
        mpz_import(z.get_mpz_t(), 1, 1, sizeof(hi), 0, 0, &hi);
        z <<= 64;
        z += mpz_class(static_cast<unsigned long>(lo));
        return OddInt(std::move(z));
    }

    static const mpz_class& big(const OddInt& x) { return std::get<mpz_class>(x.rep_); }
};

static_assert(sizeof(unsigned long) == sizeof(std::uint64_t), "GMP ui interop assumes 64-bit long");

OddInt OddInt::from_u64(std::uint64_t value) {
    if (value == 0 || value % 2 == 0) {
        throw ContractViolation("OddInt requires a positive odd value, got " + std::to_string(value));
    }
    return OddInt(value);
}

OddInt OddInt::from_mpz(const mpz_class& value) {
    if (sgn(value) <= 0 || mpz_even_p(value.get_mpz_t()) != 0) {
        throw ContractViolation("OddInt requires a positive odd value, got " + value.get_str());
    }
    return OddIntAccess::make_big(value);
}

OddInt OddInt::parse(std::string_view decimal) {
    if (decimal.empty() || decimal.find_first_not_of("0123456789") != std::string_view::npos) {
        throw ContractViolation("not a positive decimal integer: '" + std::string(decimal) + "'");
    }
    return from_mpz(mpz_class(std::string(decimal), 10));
}

mpz_class OddInt::to_mpz() const {
    if (is_small()) return mpz_class(static_cast<unsigned long>(small_value()));
    return std::get<mpz_class>(rep_);
}

std::size_t OddInt::bit_length() const noexcept {
    if (is_small()) return static_cast<std::size_t>(std::bit_width(small_value()));
    return mpz_sizeinbase(std::get<mpz_class>(rep_).get_mpz_t(), 2);
}

double OddInt::log() const noexcept {
    if (is_small()) return std::log(static_cast<double>(small_value()));
    long exp = 0;
    const double mant = mpz_get_d_2exp(&exp, std::get<mpz_class>(rep_).get_mpz_t());
    return std::log(mant) + static_cast<double>(exp) * std::numbers::ln2;
}

std::string OddInt::to_string() const {
    if (is_small()) return std::to_string(small_value());
    return std::get<mpz_class>(rep_).get_str();
}

std::size_t OddInt::hash() const noexcept {
    if (is_small()) return std::hash<std::uint64_t>{}(small_value());
    const mpz_srcptr z = std::get<mpz_class>(rep_).get_mpz_t();
    std::size_t h = 0xcbf29ce484222325ULL;
    const std::size_t limbs = mpz_size(z);
    for (std::size_t i = 0; i < limbs; ++i) {
        h ^= static_cast<std::size_t>(mpz_getlimbn(z, static_cast<mp_size_t>(i)));
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool operator==(const OddInt& a, const OddInt& b) noexcept {
    if (a.is_small() != b.is_small()) return false;
    if (a.is_small()) return a.small_value() == b.small_value();
    return cmp(OddIntAccess::big(a), OddIntAccess::big(b)) == 0;
}

std::strong_ordering operator<=>(const OddInt& a, const OddInt& b) noexcept {
    if (a.is_small() && b.is_small()) return a.small_value() <=> b.small_value();
    if (a.is_small()) return std::strong_ordering::less;
    if (b.is_small()) return std::strong_ordering::greater;
    return cmp(OddIntAccess::big(a), OddIntAccess::big(b)) <=> 0;
}

int v2(const mpz_class& n) {
    if (sgn(n) <= 0 || mpz_odd_p(n.get_mpz_t()) != 0) {
        throw ContractViolation("v2 requires a positive even integer, got " + n.get_str());
    }
    return static_cast<int>(mpz_scan1(n.get_mpz_t(), 0));
}

int v2(std::uint64_t n) {
    if (n == 0 || n % 2 != 0) {
        throw ContractViolation("v2 requires a positive even integer, got " + std::to_string(n));
    }
    return std::countr_zero(n);
}

StepOutcome step(const OddInt& x, std::int64_t xi) {
    if (xi < -1 || xi % 2 == 0) {
        throw InvalidXi("xi must be odd and >= -1, got " + std::to_string(xi));
    }
    StepOutcome out;
    out.xi = xi;
    if (x.is_small()) {
        // 3x + xi < 2^66 and xi >= -1, so the sum is positive and fits in 128 bits.
        const u128 s = static_cast<u128>(static_cast<__int128>(x.small_value()) * 3 + xi);
        const auto lo = static_cast<std::uint64_t>(s);
        const int d = lo != 0 ? std::countr_zero(lo)
                              : 64 + std::countr_zero(static_cast<std::uint64_t>(s >> 64));
        out.d = d;
        out.x_next = OddIntAccess::make_u128(s >> d);
    } else {
        mpz_class s = OddIntAccess::big(x) * 3;
        if (xi >= 0) {
            s += static_cast<unsigned long>(xi);
        } else {
            s -= static_cast<unsigned long>(-xi);
        }
        const auto d = mpz_scan1(s.get_mpz_t(), 0);
        mpz_tdiv_q_2exp(s.get_mpz_t(), s.get_mpz_t(), d);
        out.d = static_cast<int>(d);
        out.x_next = OddIntAccess::make_big(std::move(s));
    }
    out.m = out.d < 3 ? out.d : 3;
    return out;
}

std::strong_ordering compare_scaled(const OddInt& a, unsigned a_shift, const mpz_class& multiplier,
                                    const OddInt& b) {
    mpz_class lhs = a.to_mpz();
    lhs <<= a_shift;
    const mpz_class rhs = multiplier * b.to_mpz();
    return cmp(lhs, rhs) <=> 0;
}

}  // namespace rcollatz
