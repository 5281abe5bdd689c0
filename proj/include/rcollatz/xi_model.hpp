#pragma once

// The i.i.d. noise law of xi: finite distributions over odd integers >= -1,
// named presets, JSON I/O, and seedable splittable random streams.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

namespace rcollatz {

using Rational = mpq_class;

/// Canonical "p/q" form (always with a denominator, e.g. "1/1").
std::string to_fraction_string(const Rational& q);

struct XiAtom {
    std::int64_t value = 1;
    Rational prob;
};

class XiDistribution {
public:
    XiDistribution() = default;

    /// Stores atoms sorted by value, without validating them. Use validate().
    explicit XiDistribution(std::vector<XiAtom> atoms);

    /// Builds from decimal probabilities. Each probability is converted to an
    /// exact rational; if the total is within 1e-12 of 1 the atoms are
    /// renormalized so the sum is exactly 1, otherwise they are kept as given.
    static XiDistribution from_decimal(const std::vector<std::pair<std::int64_t, double>>& atoms);

    const std::vector<XiAtom>& atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }

    /// Probability of `value` (zero when not an atom).
    Rational prob_of(std::int64_t value) const;
    bool has_atom(std::int64_t value) const { return sgn(prob_of(value)) > 0; }
    std::int64_t max_value() const;
    Rational mean() const;

    nlohmann::json to_json() const;

private:
    std::vector<XiAtom> atoms_;
};

/// First violated invariant, or nullopt when the distribution is valid.
std::optional<std::string> validate(const XiDistribution& dist);

XiDistribution make_uniform_1357();
/// xi in {-1, 1}, each 1/2.
XiDistribution make_pm1();
/// xi in {1, 3}, each 1/2.
XiDistribution make_one_three();
/// xi uniform on {1, 3, 5}.
XiDistribution make_one_three_five();

/// Parses {"atoms": [{"value": int, "prob": "p/q" | number}, ...]}.
/// Throws ConfigError on malformed documents; the result is not validated.
XiDistribution xi_from_json(const nlohmann::json& doc);

/// Accepts a preset name ("uniform1357", "pm1", "oneThree", "oneThreeFive")
/// or an inline JSON document. Throws ConfigError for unknown names, malformed
/// JSON, or a distribution that fails validate().
XiDistribution parse_xi_spec(std::string_view spec);

/// A seedable random stream. Identical (seed, stream_id) pairs reproduce the
/// same sequence; distinct stream ids give independent streams. Each stream
/// belongs to one worker.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64() { return engine_(); }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

/// Inverse-CDF sampler over a validated distribution. Cut points are the exact
/// cumulative probabilities scaled to 2^64 and floored.
class XiSampler {
public:
    /// Throws ContractViolation when `dist` fails validate().
    explicit XiSampler(const XiDistribution& dist);

    std::int64_t operator()(RngStream& rng) const {
        const std::uint64_t u = rng.next_u64();
        for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
            if (u < cuts_[i]) return values_[i];
        }
        return values_.back();
    }

private:
    std::vector<std::int64_t> values_;
    std::vector<std::uint64_t> cuts_;
};

/// One draw. Builds a sampler per call; hot loops should hold an XiSampler.
std::int64_t sample(const XiDistribution& dist, RngStream& rng);

}  // namespace rcollatz
