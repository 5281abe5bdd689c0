#include "rcollatz/stats.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "rcollatz/errors.hpp"

namespace rcollatz {

namespace {

double step_drift(int m) { return std::log(3.0) - m * std::numbers::ln2; }

}  // namespace

StatsAccumulator::StatsAccumulator(AccumulatorOptions options) : options_(options) {
    if (options_.occupation_cutoff % 2 == 0) {
        throw ConfigError("occupation cutoff must be odd, got " +
                          std::to_string(options_.occupation_cutoff));
    }
    occupation_.assign((options_.occupation_cutoff + 1) / 2, 0);
}

void StatsAccumulator::begin_segment(const OddInt& x0) {
    ++segments_;
    index_ = 0;
    prev_m_ = 0;
    last_visit_.reset();
    record_state(x0);
}

void StatsAccumulator::observe(int m, const OddInt& state) {
    if (m < 1 || m > 3) throw ContractViolation("m must lie in {1,2,3}, got " + std::to_string(m));
    ++index_;
    ++total_steps_;
    ++m_counts_[m - 1];
    if (prev_m_ != 0) ++pair_counts_[prev_m_ - 1][m - 1];
    prev_m_ = m;
    record_state(state);
}

void StatsAccumulator::record_state(const OddInt& state) {
    if (state.is_one()) {
        ++visits_;
        if (last_visit_) ++returns_[index_ - *last_visit_];
        last_visit_ = index_;
    }
    if (index_ >= options_.burn_in) {
        ++occupation_total_;
        if (state.is_small() && state.small_value() <= options_.occupation_cutoff) {
            ++occupation_[(state.small_value() - 1) / 2];
        } else {
            ++occupation_above_;
        }
    }
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
    if (other.options_.occupation_cutoff != options_.occupation_cutoff ||
        other.options_.burn_in != options_.burn_in) {
        throw ContractViolation("cannot merge accumulators with different options");
    }
    total_steps_ += other.total_steps_;
    segments_ += other.segments_;
    for (int a = 0; a < 3; ++a) {
        m_counts_[a] += other.m_counts_[a];
        for (int b = 0; b < 3; ++b) pair_counts_[a][b] += other.pair_counts_[a][b];
    }
    visits_ += other.visits_;
    for (const auto& [gap, count] : other.returns_) returns_[gap] += count;
    for (std::size_t i = 0; i < occupation_.size(); ++i) occupation_[i] += other.occupation_[i];
    occupation_above_ += other.occupation_above_;
    occupation_total_ += other.occupation_total_;
}

double StatsAccumulator::drift_sum() const noexcept {
    double s = 0;
    for (int m = 1; m <= 3; ++m) s += static_cast<double>(m_counts_[m - 1]) * step_drift(m);
    return s;
}

double StatsAccumulator::drift_sq_sum() const noexcept {
    double s = 0;
    for (int m = 1; m <= 3; ++m) {
        const double w = step_drift(m);
        s += static_cast<double>(m_counts_[m - 1]) * w * w;
    }
    return s;
}

MDistribution m_distribution(const StatsAccumulator& acc) {
    if (acc.total_steps() == 0) throw NoData("no steps recorded");
    MDistribution out;
    out.n = acc.total_steps();
    const auto n = static_cast<double>(out.n);
    for (int i = 0; i < 3; ++i) {
        const double p = static_cast<double>(acc.m_counts()[i]) / n;
        out.p[i] = p;
        out.std_error[i] = std::sqrt(p * (1 - p) / n);
    }
    return out;
}

DriftEstimate drift_estimate(const StatsAccumulator& acc) {
    if (acc.total_steps() < 2) throw NoData("drift needs at least two steps");
    DriftEstimate out;
    out.n = acc.total_steps();
    const auto n = static_cast<double>(out.n);

    // m-moments from integer sums, so the result does not depend on merge order.
    std::uint64_t sum_m = 0;
    std::uint64_t sum_m2 = 0;
    for (int m = 1; m <= 3; ++m) {
        sum_m += acc.m_counts()[m - 1] * static_cast<std::uint64_t>(m);
        sum_m2 += acc.m_counts()[m - 1] * static_cast<std::uint64_t>(m * m);
    }
    out.m_mean = static_cast<double>(sum_m) / n;
    const double ss = static_cast<double>(sum_m2) - static_cast<double>(sum_m) * out.m_mean;
    out.m_variance = ss / (n - 1);

    out.mean = std::log(3.0) - std::numbers::ln2 * out.m_mean;
    out.std_error = std::numbers::ln2 * std::sqrt(out.m_variance / n);
    return out;
}

ChiSquareResult chi_square_independence(const std::array<std::array<std::uint64_t, 3>, 3>& table) {
    ChiSquareResult out;
    std::array<double, 3> rows{};
    std::array<double, 3> cols{};
    double total = 0;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const auto c = static_cast<double>(table[a][b]);
            rows[a] += c;
            cols[b] += c;
            total += c;
        }
    }
    out.pairs = static_cast<std::uint64_t>(total);
    if (total == 0) return out;
    int live_rows = 0;
    int live_cols = 0;
    for (int i = 0; i < 3; ++i) {
        live_rows += rows[i] > 0;
        live_cols += cols[i] > 0;
    }
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const double expected = rows[a] * cols[b] / total;
            if (expected > 0) {
                const double diff = static_cast<double>(table[a][b]) - expected;
                out.statistic += diff * diff / expected;
            }
        }
    }
    out.dof = (live_rows - 1) * (live_cols - 1);
    if (out.dof > 0) {
        const boost::math::chi_squared dist(out.dof);
        out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
    }
    return out;
}

ChiSquareResult m_independence_test(const StatsAccumulator& acc) {
    if (acc.total_steps() < kMinIndependenceSteps) {
        throw InsufficientData("independence test needs at least " +
                               std::to_string(kMinIndependenceSteps) + " steps, got " +
                               std::to_string(acc.total_steps()));
    }
    return chi_square_independence(acc.pair_counts());
}

ReturnTimeStats return_time_stats(const StatsAccumulator& acc) {
    ReturnTimeStats out;
    out.visits = acc.visits_to_one();
    out.histogram = acc.return_time_histogram();
    long double sum = 0;
    long double sum_sq = 0;
    for (const auto& [gap, count] : out.histogram) {
        out.returns += count;
        sum += static_cast<long double>(gap) * count;
        sum_sq += static_cast<long double>(gap) * gap * count;
    }
    if (out.returns == 0) {
        throw NoData("fewer than two visits to state 1 (" + std::to_string(out.visits) + " recorded)");
    }
    const auto n = static_cast<long double>(out.returns);
    out.mean = static_cast<double>(sum / n);
    out.variance = out.returns > 1 ? static_cast<double>((sum_sq - sum * sum / n) / (n - 1)) : 0.0;
    return out;
}

double OccupationFrequencies::frequency(std::uint64_t state) const {
    if (state % 2 == 0 || state > cutoff) return 0.0;
    return static_cast<double>(counts[(state - 1) / 2]) / static_cast<double>(total);
}

OccupationFrequencies occupation_frequencies(const StatsAccumulator& acc) {
    if (acc.occupation_total() == 0) {
        throw ConfigError("burn-in of " + std::to_string(acc.options().burn_in) +
                          " leaves no occupation samples");
    }
    return {acc.options().occupation_cutoff, acc.options().burn_in, acc.occupation_total(),
            acc.occupation_counts(), acc.occupation_above_cutoff()};
}

double kac_product(const StatsAccumulator& acc) {
    return occupation_frequencies(acc).frequency(1) * return_time_stats(acc).mean;
}

void TailSample::merge(const TailSample& o) {
    completed += o.completed;
    completed_excess += o.completed_excess;
    censored += o.censored;
    censored_total += o.censored_total;
}

TailFit fit_geometric_tail(const TailSample& sample) {
    if (sample.completed < kMinTailSamples) {
        throw InsufficientData("geometric tail fit needs at least " + std::to_string(kMinTailSamples) +
                               " completed lengths, got " + std::to_string(sample.completed));
    }
    TailFit fit;
    fit.sample_count = sample.completed;
    fit.censored_count = sample.censored;

    const auto n = static_cast<double>(sample.completed);
    const auto a = static_cast<double>(sample.completed_excess + sample.censored_total);
    const double q_floor = std::exp(-TailFit::kRateCap);
    auto loglik = [&](double q) { return n * std::log1p(-q) + (a > 0 ? a * std::log(q) : 0.0); };

    const double drop =
        boost::math::quantile(boost::math::chi_squared(1), 0.95) / 2.0;  // profile-likelihood cut
    const double q_hat = std::max(a / (n + a), q_floor);
    const double target = loglik(q_hat) - drop;

    // loglik is concave in q with its maximum at q_hat.
    auto solve = [&](double inside, double outside) {
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (inside + outside);
            (loglik(mid) >= target ? inside : outside) = mid;
        }
        return 0.5 * (inside + outside);
    };
    const double q_hi = solve(q_hat, 1.0);
    const double q_lo = (q_hat <= q_floor || loglik(q_floor) >= target) ? q_floor : solve(q_hat, q_floor);

    fit.rate_estimate = std::min(-std::log(q_hat), TailFit::kRateCap);
    fit.ci_low = -std::log(q_hi);
    fit.ci_high = std::min(-std::log(q_lo), TailFit::kRateCap);
    return fit;
}

TailFit fit_geometric_tail(std::span<const std::uint64_t> completed,
                           std::span<const std::uint64_t> censored) {
    TailSample sample;
    for (auto l : completed) {
        if (l == 0) throw ContractViolation("geometric lengths must be >= 1");
        sample.add_completed(l);
    }
    for (auto o : censored) sample.add_censored(o);
    return fit_geometric_tail(sample);
}

ExcursionTails excursion_tail_samples(const std::vector<ExcursionRecord>& records,
                                      std::uint64_t last_index) {
    ExcursionTails out;
    std::uint64_t below_since = 0;  // start of the current below-threshold run
    bool below = true;
    for (const auto& r : records) {
        if (r.start > below_since) out.sojourns.add_completed(r.start - below_since);
        if (r.end) {
            out.durations.add_completed(*r.end - r.start);
            below_since = *r.end;
            below = true;
        } else {
            out.durations.add_censored(last_index - r.start);
            below = false;
        }
    }
    if (below) out.sojourns.add_censored(last_index - below_since);
    return out;
}

ExcursionTailFits fit_excursion_tail(const std::vector<ExcursionRecord>& records,
                                     std::uint64_t last_index) {
    const ExcursionTails tails = excursion_tail_samples(records, last_index);
    return {fit_geometric_tail(tails.durations), fit_geometric_tail(tails.sojourns)};
}

}  // namespace rcollatz
