#pragma once

// Explicit positive-probability paths from state 1 to any odd target, built by
// iterating a one-step predecessor with xi in {1, 3, 5}, and their replay
// verification.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcollatz/odd_int.hpp"
#include "rcollatz/xi_model.hpp"

namespace rcollatz {

struct Predecessor {
    OddInt state;
    std::int64_t xi = 1;
};

/// For odd m >= 3 returns (p, xi) with 3p + xi = 2m, p odd, p < m:
///   m = 6k + 3 -> (4k + 1, 3)
///   m = 6k + 5 -> (4k + 3, 1)
///   m = 6k + 7 -> (4k + 3, 5)
/// Returns nullopt for m = 1, which needs no predecessor.
std::optional<Predecessor> predecessor(const OddInt& m);
/// Integer overload; throws ContractViolation for even or zero m.
std::optional<Predecessor> predecessor(std::uint64_t m);

struct PathStep {
    OddInt state;
    std::int64_t xi = 1;
};

/// A path 1 = steps[0].state -> ... -> target; empty when target is 1.
struct PathCertificate {
    OddInt target;
    std::vector<PathStep> steps;
    Rational probability = 1;

    std::size_t length() const noexcept { return steps.size(); }
};

/// Builds the path tail-first from m down to 1 and reverses it. The
/// probability is the product of the step probabilities under `dist`, whose
/// support must contain 1, 3 and 5 (ContractViolation otherwise).
PathCertificate path_from_one(const OddInt& m, const XiDistribution& dist = make_uniform_1357());

struct CertificateCheck {
    bool ok = true;
    /// Index of the first step that fails; equals length() for failures of
    /// the certificate as a whole (endpoint or probability).
    std::optional<std::size_t> failing_index;
    std::string reason;
};

/// Replays every step through step() and checks: first state 1, each step
/// lands on the next state with d = 1, states strictly increase, the last
/// step lands on target, and the probability matches `dist`.
CertificateCheck verify_certificate(const PathCertificate& cert,
                                    const XiDistribution& dist = make_uniform_1357());

/// {target, steps: [{state, xi}], prob: "p/q"}
nlohmann::json certificate_to_json(const PathCertificate& cert);

}  // namespace rcollatz
