#include "rcollatz/reach.hpp"

#include <algorithm>

#include "rcollatz/errors.hpp"

namespace rcollatz {

namespace {

void require_support(const XiDistribution& dist) {
    for (std::int64_t v : {1, 3, 5}) {
        if (!dist.has_atom(v)) {
            throw ContractViolation("path construction needs xi = " + std::to_string(v) +
                                    " with positive probability; use the reachable-set probe instead");
        }
    }
}

}  // namespace

std::optional<Predecessor> predecessor(const OddInt& m) {
    if (m.is_one()) return std::nullopt;
    if (m.is_small()) return predecessor(m.small_value());
    const mpz_class v = m.to_mpz();
    const unsigned long r = mpz_fdiv_ui(v.get_mpz_t(), 6);
    mpz_class k;
    if (r == 3) {
        k = (v - 3) / 6;
        return Predecessor{OddInt::from_mpz(4 * k + 1), 3};
    }
    if (r == 5) {
        k = (v - 5) / 6;
        return Predecessor{OddInt::from_mpz(4 * k + 3), 1};
    }
    k = (v - 7) / 6;
    return Predecessor{OddInt::from_mpz(4 * k + 3), 5};
}

std::optional<Predecessor> predecessor(std::uint64_t m) {
    if (m == 0 || m % 2 == 0) {
        throw ContractViolation("predecessor needs an odd positive integer, got " + std::to_string(m));
    }
    if (m == 1) return std::nullopt;
    switch (m % 6) {
        case 3:
            return Predecessor{OddInt::from_u64(4 * ((m - 3) / 6) + 1), 3};
        case 5:
            return Predecessor{OddInt::from_u64(4 * ((m - 5) / 6) + 3), 1};
        default:  // m % 6 == 1, m >= 7
            return Predecessor{OddInt::from_u64(4 * ((m - 7) / 6) + 3), 5};
    }
}

PathCertificate path_from_one(const OddInt& m, const XiDistribution& dist) {
    require_support(dist);
    PathCertificate cert;
    cert.target = m;
    OddInt cursor = m;
    while (auto pred = predecessor(cursor)) {
        cert.steps.push_back({pred->state, pred->xi});
        cursor = std::move(pred->state);
    }
    std::reverse(cert.steps.begin(), cert.steps.end());
    cert.probability = 1;
    for (const auto& s : cert.steps) cert.probability *= dist.prob_of(s.xi);
    cert.probability.canonicalize();
    return cert;
}

CertificateCheck verify_certificate(const PathCertificate& cert, const XiDistribution& dist) {
    auto fail = [](std::size_t index, std::string reason) {
        return CertificateCheck{false, index, std::move(reason)};
    };
    const std::size_t len = cert.steps.size();
    if (len == 0) {
        if (!cert.target.is_one()) return fail(0, "empty path but target is not 1");
    } else if (!cert.steps.front().state.is_one()) {
        return fail(0, "path does not start at 1");
    }
    Rational prob = 1;
    for (std::size_t i = 0; i < len; ++i) {
        const PathStep& s = cert.steps[i];
        if (s.xi != 1 && s.xi != 3 && s.xi != 5) return fail(i, "xi outside {1, 3, 5}");
        const StepOutcome out = step(s.state, s.xi);
        const OddInt& expected = i + 1 < len ? cert.steps[i + 1].state : cert.target;
        if (out.x_next != expected) return fail(i, "replay lands on " + out.x_next.to_string());
        if (out.d != 1) return fail(i, "step divides by 2^" + std::to_string(out.d));
        if (!(out.x_next > s.state)) return fail(i, "states do not increase");
        prob *= dist.prob_of(s.xi);
    }
    prob.canonicalize();
    if (prob != cert.probability) {
        return fail(len, "probability " + to_fraction_string(cert.probability) + " != " +
                             to_fraction_string(prob));
    }
    return {};
}

nlohmann::json certificate_to_json(const PathCertificate& cert) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : cert.steps) steps.push_back({{"state", s.state.to_string()}, {"xi", s.xi}});
    return {{"target", cert.target.to_string()},
            {"steps", std::move(steps)},
            {"prob", to_fraction_string(cert.probability)}};
}

}  // namespace rcollatz
