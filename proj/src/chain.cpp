#include "rcollatz/chain.hpp"

#include <cstdio>
#include <unordered_map>

#include "rcollatz/errors.hpp"

namespace rcollatz {

namespace {

const double kLn2 = std::numbers::ln2;
const double kLn3 = std::log(3.0);
const double kLn5 = std::log(5.0);

}  // namespace

void ChainConfig::validate() const {
    const double eps_max = 1.75 * kLn2 - kLn3;
    if (!(epsilon > 0.0 && epsilon < eps_max)) {
        throw ConfigError("epsilon must lie in (0, " + std::to_string(eps_max) + "), got " +
                          std::to_string(epsilon));
    }
    if (!(threshold_m > 1.0)) {
        throw ConfigError("threshold M must exceed 1, got " + std::to_string(threshold_m));
    }
    if (bit_cap < 2) throw ConfigError("bit cap must be at least 2");
    if (xi) {
        if (auto why = rcollatz::validate(*xi)) throw ConfigError("invalid xi distribution: " + *why);
    }
}

XiDistribution ChainConfig::effective_xi() const {
    if (xi) return *xi;
    return XiDistribution({{1, Rational(1)}});
}

const char* to_string(Terminal t) {
    switch (t) {
        case Terminal::kCompleted:
            return "completed";
        case Terminal::kOverflowed:
            return "overflowed";
        case Terminal::kAbsorbed:
            return "absorbed";
    }
    return "unknown";
}

bool one_is_absorbing(const XiDistribution& dist) {
    for (const auto& a : dist.atoms()) {
        if (!step(OddInt{}, a.value).x_next.is_one()) return false;
    }
    return !dist.atoms().empty();
}

RunSummary run_randomized(const ChainConfig& cfg, RngStream& rng, std::span<StepSink* const> sinks) {
    cfg.validate();
    const XiDistribution dist = cfg.effective_xi();
    const XiSampler sampler(dist);
    const bool absorbing = one_is_absorbing(dist);

    RunSummary summary;
    OddInt x = cfg.x0;
    double y = x.log();
    if (absorbing && x.is_one()) summary.absorbed_at = 0;
    for (StepSink* s : sinks) s->begin(x, y);

    if (!(cfg.stop_on_absorption && summary.absorbed_at)) {
        for (std::uint64_t n = 1; n <= cfg.max_steps; ++n) {
            StepOutcome out = step(x, sampler(rng));
            if (out.x_next.bit_length() > cfg.bit_cap) {
                summary.terminal = Terminal::kOverflowed;
                break;
            }
            const double y_next = out.x_next.log();
            const StepEvent event{n, x, out, y, y_next};
            for (StepSink* s : sinks) s->on_step(event);
            x = std::move(out.x_next);
            y = y_next;
            summary.steps = n;
            if (absorbing && !summary.absorbed_at && x.is_one()) {
                summary.absorbed_at = n;
                if (cfg.stop_on_absorption) break;
            }
        }
    }
    if (summary.terminal != Terminal::kOverflowed && absorbing && x.is_one()) {
        summary.terminal = Terminal::kAbsorbed;
    }
    summary.final_state = std::move(x);
    for (StepSink* s : sinks) s->end(summary);
    return summary;
}

TrajectoryCsvWriter::TrajectoryCsvWriter(std::ostream& out, bool header) : out_(out) {
    if (header) out_ << "step,xi,d,m,x_next,y_next\n";
}

void TrajectoryCsvWriter::on_step(const StepEvent& e) {
    char y[32];
    std::snprintf(y, sizeof(y), "%.17g", e.y_next);
    out_ << e.index << ',' << e.outcome.xi << ',' << e.outcome.d << ',' << e.outcome.m << ','
         << e.outcome.x_next.to_string() << ',' << y << '\n';
}

ClassicalResult run_classical(const OddInt& x0, std::uint64_t max_steps) {
    ClassicalResult result;
    std::unordered_map<OddInt, std::uint64_t> first_visit;
    OddInt x = x0;
    result.states.push_back(x);
    first_visit.emplace(x, 0);
    result.peak_bits = x.bit_length();
    if (x.is_one()) result.steps_to_one = 0;
    for (std::uint64_t n = 1; n <= max_steps; ++n) {
        x = classical_step(x).x_next;
        result.peak_bits = std::max(result.peak_bits, x.bit_length());
        if (x.is_one() && !result.steps_to_one) result.steps_to_one = n;
        result.states.push_back(x);
        auto [it, inserted] = first_visit.emplace(x, n);
        if (!inserted) {
            result.cycle = CycleReport{it->second, n - it->second};
            break;
        }
    }
    return result;
}

ExcursionDetector::ExcursionDetector(double threshold, double y0) : threshold_(threshold) {
    if (y0 >= threshold_) {
        above_ = true;
        records_.push_back({1, 0, std::nullopt});
    }
}

void ExcursionDetector::push(std::uint64_t index, double y) {
    last_index_ = index;
    if (above_ && y < threshold_) {
        records_.back().end = index;
        above_ = false;
    } else if (!above_ && y >= threshold_) {
        records_.push_back({records_.size() + 1, index, std::nullopt});
        above_ = true;
    }
}

std::vector<ExcursionRecord> detect_excursions(std::span<const double> y, double threshold) {
    if (y.empty()) return {};
    ExcursionDetector detector(threshold, y[0]);
    for (std::size_t i = 1; i < y.size(); ++i) detector.push(i, y[i]);
    detector.finish(y.size() - 1);
    return detector.records();
}

GrowthChecker::GrowthChecker(unsigned k) : k_(k) {
    if (k == 0) throw ContractViolation("growth window length must be >= 1");
    mpz_ui_pow_ui(three_pow_k_.get_mpz_t(), 3, k);
}

void GrowthChecker::begin(const OddInt& x0, double) {
    recent_.clear();
    recent_.push_back(x0);
    run_ = 0;
}

void GrowthChecker::on_step(const StepEvent& e) {
    recent_.push_back(e.outcome.x_next);
    if (recent_.size() > k_ + 1) recent_.pop_front();
    // The growth bound needs xi >= 1 as well as d = 1.
    if (e.outcome.m == 1 && e.outcome.xi >= 1) {
        ++run_;
    } else {
        run_ = 0;
    }
    if (run_ >= k_) {
        ++windows_;
        if (compare_scaled(recent_.back(), k_, three_pow_k_, recent_.front()) <= 0) ++violations_;
    }
}

BoundChecker::BoundChecker(std::int64_t xi_max, double epsilon, double threshold_m)
    : xi_max_(xi_max),
      epsilon_(epsilon),
      threshold_m_(threshold_m),
      split_applicable_(xi_max <= 7 &&
                        std::log1p(static_cast<double>(xi_max) / 3.0 * std::exp(-threshold_m)) <=
                            epsilon) {}

void BoundChecker::on_step(const StepEvent& e) {
    ++steps_;
    const int m = e.outcome.m;
    // 2^m * x_next <= 3 x + xi_max, exactly.
    if (e.x_prev.is_small() && e.outcome.x_next.is_small()) {
        using u128 = unsigned __int128;
        const u128 lhs = static_cast<u128>(e.outcome.x_next.small_value()) << m;
        const auto rhs = static_cast<u128>(static_cast<__int128>(e.x_prev.small_value()) * 3 + xi_max_);
        if (lhs > rhs) ++exact_violations_;
    } else {
        const mpz_class lhs = e.outcome.x_next.to_mpz() << m;
        const mpz_class rhs = e.x_prev.to_mpz() * 3 + xi_max_;
        if (lhs > rhs) ++exact_violations_;
    }

    const double y0 = e.y_prev;
    const double y1 = e.y_next;
    const double slack = kLogSlack * std::max(1.0, std::abs(y0));
    const double step_drift = kLn3 - m * kLn2;
    if (y1 < 0.0) ++log_violations_;
    const double log_bound =
        y0 + std::log1p(static_cast<double>(xi_max_) / 3.0 * std::exp(-y0)) + step_drift;
    if (y1 > log_bound + slack) ++log_violations_;

    if (split_applicable_) {
        if (y0 >= threshold_m_) {
            if (y1 > y0 + epsilon_ + step_drift + slack) ++above_violations_;
        } else if (y1 > y0 + kLn5 + slack) {
            ++below_violations_;
        }
    }
}

void AbsorptionTracker::begin(const OddInt& x0, double) {
    first_hit_.reset();
    departures_ = 0;
    if (x0.is_one()) first_hit_ = 0;
}

void AbsorptionTracker::on_step(const StepEvent& e) {
    if (first_hit_ && e.x_prev.is_one() && !e.outcome.x_next.is_one()) ++departures_;
    if (!first_hit_ && e.outcome.x_next.is_one()) first_hit_ = e.index;
}

}  // namespace rcollatz
