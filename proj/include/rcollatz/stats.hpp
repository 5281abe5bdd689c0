#pragma once

// Mergeable streaming statistics over chain step events and the estimators
// built on them.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rcollatz/chain.hpp"

namespace rcollatz {

struct AccumulatorOptions {
    std::uint64_t occupation_cutoff = 9999;  // odd states 1..cutoff get their own counter
    std::uint64_t burn_in = 1000;            // occupation counts X_n only for n >= burn_in
};

/// Streaming statistics for one or more trajectory segments (replicas).
///
/// Every stored quantity is an integer count, so merge() is exact, associative
/// and commutative: merging per-replica accumulators equals feeding all
/// replicas, each opened with begin_segment(), through a single accumulator.
/// Pairs (m_n, m_{n+1}) and return times never straddle a segment boundary.
class StatsAccumulator final : public StepSink {
public:
    explicit StatsAccumulator(AccumulatorOptions options = {});

    /// Starts a new segment at state x0 (index 0).
    void begin_segment(const OddInt& x0);
    /// Records one step of the current segment: its capped exponent m and the
    /// new state.
    void observe(int m, const OddInt& state);

    void begin(const OddInt& x0, double) override { begin_segment(x0); }
    void on_step(const StepEvent& e) override { observe(e.outcome.m, e.outcome.x_next); }

    /// Throws ContractViolation when the options differ.
    void merge(const StatsAccumulator& other);

    const AccumulatorOptions& options() const noexcept { return options_; }
    std::uint64_t total_steps() const noexcept { return total_steps_; }
    std::uint64_t segments() const noexcept { return segments_; }
    const std::array<std::uint64_t, 3>& m_counts() const noexcept { return m_counts_; }
    /// pair_counts()[a][b] counts consecutive (m_n = a+1, m_{n+1} = b+1).
    const std::array<std::array<std::uint64_t, 3>, 3>& pair_counts() const noexcept { return pair_counts_; }
    std::uint64_t visits_to_one() const noexcept { return visits_; }
    const std::map<std::uint64_t, std::uint64_t>& return_time_histogram() const noexcept { return returns_; }
    /// Index (x - 1) / 2 for odd x <= occupation_cutoff.
    const std::vector<std::uint64_t>& occupation_counts() const noexcept { return occupation_; }
    std::uint64_t occupation_above_cutoff() const noexcept { return occupation_above_; }
    std::uint64_t occupation_total() const noexcept { return occupation_total_; }

    /// Running sums of (ln 3 - m ln 2) and its square, derived from m_counts.
    double drift_sum() const noexcept;
    double drift_sq_sum() const noexcept;

private:
    void record_state(const OddInt& state);

    AccumulatorOptions options_;
    std::uint64_t total_steps_ = 0;
    std::uint64_t segments_ = 0;
    std::array<std::uint64_t, 3> m_counts_{};
    std::array<std::array<std::uint64_t, 3>, 3> pair_counts_{};
    std::uint64_t visits_ = 0;
    std::map<std::uint64_t, std::uint64_t> returns_;
    std::vector<std::uint64_t> occupation_;
    std::uint64_t occupation_above_ = 0;
    std::uint64_t occupation_total_ = 0;

    // Per-segment cursor, not merged.
    std::uint64_t index_ = 0;
    int prev_m_ = 0;
    std::optional<std::uint64_t> last_visit_;
};

struct MDistribution {
    std::array<double, 3> p{};
    std::array<double, 3> std_error{};
    std::uint64_t n = 0;
};

/// Empirical law of m with binomial standard errors. Throws NoData when empty.
MDistribution m_distribution(const StatsAccumulator& acc);

struct DriftEstimate {
    double mean = 0;    // of ln 3 - m ln 2
    double std_error = 0;
    double target = kUniformDrift;
    double m_mean = 0;
    double m_variance = 0;  // sample variance of m
    std::uint64_t n = 0;
};

/// Throws NoData with fewer than two steps.
DriftEstimate drift_estimate(const StatsAccumulator& acc);

struct ChiSquareResult {
    double statistic = 0;
    int dof = 0;
    double p_value = 1;
    std::uint64_t pairs = 0;
};

inline constexpr std::uint64_t kMinIndependenceSteps = 10'000;

/// Pearson chi-square of the (m_n, m_{n+1}) table against the product of its
/// marginals. Categories with an empty margin are dropped from the degrees of
/// freedom. Throws InsufficientData below kMinIndependenceSteps.
ChiSquareResult m_independence_test(const StatsAccumulator& acc);

/// Same test on an explicit 3x3 table.
ChiSquareResult chi_square_independence(const std::array<std::array<std::uint64_t, 3>, 3>& table);

struct ReturnTimeStats {
    std::uint64_t visits = 0;
    std::uint64_t returns = 0;
    double mean = 0;
    double variance = 0;
    std::map<std::uint64_t, std::uint64_t> histogram;
};

/// Gaps between consecutive visits to state 1 (X_0 = 1 counts as a visit).
/// Throws NoData when no gap was observed.
ReturnTimeStats return_time_stats(const StatsAccumulator& acc);

struct OccupationFrequencies {
    std::uint64_t cutoff = 0;
    std::uint64_t burn_in = 0;
    std::uint64_t total = 0;                 // samples after burn-in
    std::vector<std::uint64_t> counts;       // index (x - 1) / 2
    std::uint64_t above_cutoff = 0;

    double frequency(std::uint64_t state) const;
    double overflow_mass() const { return static_cast<double>(above_cutoff) / static_cast<double>(total); }
};

/// Throws ConfigError when no sample survives the burn-in.
OccupationFrequencies occupation_frequencies(const StatsAccumulator& acc);

/// pi_hat(1) * mean return time; Kac's identity says this tends to 1.
double kac_product(const StatsAccumulator& acc);

/// Maximum-likelihood geometric tail with right censoring:
/// P(L > l) = q^l, rate = -ln q. The profile-likelihood 95% interval is
/// reported on the rate scale. The rate is capped at kRateCap, which is what a
/// sample with no lengths above 1 produces.
struct TailFit {
    std::uint64_t sample_count = 0;
    std::uint64_t censored_count = 0;
    double rate_estimate = 0;
    double ci_low = 0;
    double ci_high = 0;

    static constexpr double kRateCap = 50.0;
};

inline constexpr std::size_t kMinTailSamples = 30;

/// `completed` holds lengths >= 1; `censored` holds observed lower bounds o
/// meaning L > o. Throws InsufficientData with fewer than kMinTailSamples
/// completed lengths.
TailFit fit_geometric_tail(std::span<const std::uint64_t> completed,
                           std::span<const std::uint64_t> censored);

/// Sufficient statistics for fit_geometric_tail, so long runs need not keep
/// every duration.
struct TailSample {
    std::uint64_t completed = 0;
    std::uint64_t completed_excess = 0;  // sum of (L - 1)
    std::uint64_t censored = 0;
    std::uint64_t censored_total = 0;    // sum of o

    void add_completed(std::uint64_t length) { ++completed; completed_excess += length - 1; }
    void add_censored(std::uint64_t observed) { ++censored; censored_total += observed; }
    void merge(const TailSample& o);
};

TailFit fit_geometric_tail(const TailSample& sample);

struct ExcursionTails {
    TailSample durations;  // D_k - N_k
    TailSample sojourns;   // N_k - D_{k-1} (N_1 itself for k = 1, when positive)
};

/// Splits one trajectory's excursion records into above- and below-threshold
/// run lengths; runs cut off by the stream end become censored.
ExcursionTails excursion_tail_samples(const std::vector<ExcursionRecord>& records,
                                      std::uint64_t last_index);

struct ExcursionTailFits {
    TailFit durations;
    TailFit sojourns;
};

ExcursionTailFits fit_excursion_tail(const std::vector<ExcursionRecord>& records,
                                     std::uint64_t last_index);

}  // namespace rcollatz
