#include "rcollatz/xi_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rcollatz/errors.hpp"

namespace rcollatz {

namespace {

constexpr double kDecimalSumTolerance = 1e-12;

Rational exact_from_double(double p) {
    Rational q(p);  // exact binary value
    q.canonicalize();
    return q;
}

void renormalize_if_close(std::vector<XiAtom>& atoms) {
    Rational total = 0;
    for (const auto& a : atoms) total += a.prob;
    if (sgn(total) > 0 && std::abs(total.get_d() - 1.0) <= kDecimalSumTolerance) {
        for (auto& a : atoms) {
            a.prob /= total;
            a.prob.canonicalize();
        }
    }
}

}  // namespace

std::string to_fraction_string(const Rational& q) {
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

XiDistribution::XiDistribution(std::vector<XiAtom> atoms) : atoms_(std::move(atoms)) {
    for (auto& a : atoms_) a.prob.canonicalize();
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const XiAtom& a, const XiAtom& b) { return a.value < b.value; });
}

XiDistribution XiDistribution::from_decimal(
    const std::vector<std::pair<std::int64_t, double>>& atoms) {
    std::vector<XiAtom> out;
    out.reserve(atoms.size());
    for (const auto& [value, p] : atoms) out.push_back({value, exact_from_double(p)});
    renormalize_if_close(out);
    return XiDistribution(std::move(out));
}

Rational XiDistribution::prob_of(std::int64_t value) const {
    Rational total = 0;
    for (const auto& a : atoms_) {
        if (a.value == value) total += a.prob;
    }
    return total;
}

std::int64_t XiDistribution::max_value() const {
    if (atoms_.empty()) throw ContractViolation("empty xi distribution");
    return atoms_.back().value;
}

Rational XiDistribution::mean() const {
    Rational total = 0;
    for (const auto& a : atoms_) total += a.prob * Rational(static_cast<long>(a.value));
    total.canonicalize();
    return total;
}

nlohmann::json XiDistribution::to_json() const {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : atoms_) {
        atoms.push_back({{"value", a.value}, {"prob", to_fraction_string(a.prob)}});
    }
    return {{"atoms", std::move(atoms)}};
}

std::optional<std::string> validate(const XiDistribution& dist) {
    if (dist.atoms().empty()) return "distribution has no atoms";
    std::set<std::int64_t> seen;
    Rational total = 0;
    for (const auto& a : dist.atoms()) {
        if (a.value % 2 == 0) return "even value " + std::to_string(a.value);
        if (a.value < -1) return "value " + std::to_string(a.value) + " is below -1";
        if (!seen.insert(a.value).second) return "duplicate value " + std::to_string(a.value);
        if (sgn(a.prob) <= 0) {
            return "non-positive probability for value " + std::to_string(a.value);
        }
        total += a.prob;
    }
    if (total != 1) {
        return "probabilities sum to " + to_fraction_string(total) + " (" +
               std::to_string(total.get_d()) + "), not 1";
    }
    return std::nullopt;
}

XiDistribution make_uniform_1357() {
    return XiDistribution({{1, Rational(1, 4)}, {3, Rational(1, 4)}, {5, Rational(1, 4)},
                           {7, Rational(1, 4)}});
}

XiDistribution make_pm1() { return XiDistribution({{-1, Rational(1, 2)}, {1, Rational(1, 2)}}); }

XiDistribution make_one_three() {
    return XiDistribution({{1, Rational(1, 2)}, {3, Rational(1, 2)}});
}

XiDistribution make_one_three_five() {
    return XiDistribution({{1, Rational(1, 3)}, {3, Rational(1, 3)}, {5, Rational(1, 3)}});
}

XiDistribution xi_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("atoms") || !doc.at("atoms").is_array()) {
        throw ConfigError(R"(xi distribution must be an object with an "atoms" array)");
    }
    std::vector<XiAtom> atoms;
    bool any_decimal = false;
    for (const auto& item : doc.at("atoms")) {
        if (!item.is_object() || !item.contains("value") || !item.contains("prob")) {
            throw ConfigError("each atom needs \"value\" and \"prob\"");
        }
        const auto& v = item.at("value");
        if (!v.is_number_integer()) throw ConfigError("atom value must be an integer");
        XiAtom atom;
        atom.value = v.get<std::int64_t>();
        const auto& p = item.at("prob");
        if (p.is_string()) {
            try {
                atom.prob = Rational(p.get<std::string>(), 10);
            } catch (const std::invalid_argument&) {
                throw ConfigError("malformed probability '" + p.get<std::string>() + "'");
            }
            if (atom.prob.get_den() == 0) throw ConfigError("zero denominator in probability");
            atom.prob.canonicalize();
        } else if (p.is_number_integer()) {
            atom.prob = Rational(p.get<long>());
        } else if (p.is_number_float()) {
            atom.prob = exact_from_double(p.get<double>());
            any_decimal = true;
        } else {
            throw ConfigError("probability must be a \"p/q\" string or a number");
        }
        atoms.push_back(std::move(atom));
    }
    if (any_decimal) renormalize_if_close(atoms);
    return XiDistribution(std::move(atoms));
}

XiDistribution parse_xi_spec(std::string_view spec) {
    XiDistribution dist;
    if (spec == "uniform1357") {
        dist = make_uniform_1357();
    } else if (spec == "pm1") {
        dist = make_pm1();
    } else if (spec == "oneThree") {
        dist = make_one_three();
    } else if (spec == "oneThreeFive") {
        dist = make_one_three_five();
    } else if (!spec.empty() && spec.front() == '{') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(spec);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("malformed xi JSON: ") + e.what());
        }
        dist = xi_from_json(doc);
    } else {
        throw ConfigError("unknown xi preset '" + std::string(spec) +
                          "' (expected uniform1357, pm1, oneThree, oneThreeFive or JSON)");
    }
    if (auto why = validate(dist)) throw ConfigError("invalid xi distribution: " + *why);
    return dist;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    engine_.seed(seq);
}

XiSampler::XiSampler(const XiDistribution& dist) {
    if (auto why = validate(dist)) throw ContractViolation("cannot sample: " + *why);
    const mpz_class scale = mpz_class(1) << 64;
    const mpz_class max_cut = scale - 1;
    Rational cumulative = 0;
    for (const auto& a : dist.atoms()) {
        values_.push_back(a.value);
        cumulative += a.prob;
        mpz_class cut = (cumulative.get_num() * scale) / cumulative.get_den();
        if (cut > max_cut) cut = max_cut;
        std::uint64_t c = 0;
        mpz_export(&c, nullptr, -1, sizeof(c), 0, 0, cut.get_mpz_t());
        cuts_.push_back(c);
    }
}

std::int64_t sample(const XiDistribution& dist, RngStream& rng) { return XiSampler(dist)(rng); }

}  // namespace rcollatz
