#pragma once

// Trajectory engines for the classical and randomized chains, and the
// streaming consumers ("sinks") that observe a randomized run step by step.

#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "rcollatz/odd_int.hpp"
#include "rcollatz/xi_model.hpp"

namespace rcollatz {

/// ln 3 - (7/4) ln 2 = -(1/4) ln(128/81): mean log-drift under the uniform {1,3,5,7} law.
inline const double kUniformDrift = -0.25 * std::log(128.0 / 81.0);
inline const double kDefaultThresholdM = std::log(23.0);

struct ChainConfig {
    OddInt x0;
    /// Empty means the classical chain (xi = 1 always).
    std::optional<XiDistribution> xi;
    std::uint64_t max_steps = 1'000'000;
    std::size_t bit_cap = 4096;
    double threshold_m = kDefaultThresholdM;
    double epsilon = 0.1;
    /// Stop as soon as an absorbing state 1 is entered.
    bool stop_on_absorption = false;

    /// Throws ConfigError. Requires 0 < epsilon < (7/4) ln 2 - ln 3,
    /// threshold_m > 1, bit_cap >= 2 and a valid xi law.
    void validate() const;
    XiDistribution effective_xi() const;
};

enum class Terminal { kCompleted, kOverflowed, kAbsorbed };
const char* to_string(Terminal t);

/// One step as seen by a sink. `index` is n >= 1, the index of x_next.
struct StepEvent {
    std::uint64_t index;
    const OddInt& x_prev;
    const StepOutcome& outcome;
    double y_prev;
    double y_next;
};

struct RunSummary {
    Terminal terminal = Terminal::kCompleted;
    OddInt final_state;
    std::uint64_t steps = 0;
    /// First index at which an absorbing state 1 was occupied.
    std::optional<std::uint64_t> absorbed_at;
};

class StepSink {
public:
    virtual ~StepSink() = default;
    virtual void begin(const OddInt& /*x0*/, double /*y0*/) {}
    virtual void on_step(const StepEvent& event) = 0;
    virtual void end(const RunSummary& /*summary*/) {}
};

/// True when every atom of `dist` maps 1 to itself.
bool one_is_absorbing(const XiDistribution& dist);

/// Runs the randomized chain for cfg.max_steps steps or until the state's bit
/// length exceeds cfg.bit_cap. Every step is delivered to every sink in order;
/// a step that would overflow is not delivered. Throws ConfigError on an
/// invalid configuration.
RunSummary run_randomized(const ChainConfig& cfg, RngStream& rng, std::span<StepSink* const> sinks);

/// Materialized trajectory, for callers that opt in via TrajectoryRecorder.
struct Trajectory {
    OddInt x0;
    std::vector<StepOutcome> steps;
    Terminal terminal = Terminal::kCompleted;
};

class TrajectoryRecorder final : public StepSink {
public:
    void begin(const OddInt& x0, double) override {
        trajectory_ = Trajectory{x0, {}, Terminal::kCompleted};
    }
    void on_step(const StepEvent& e) override { trajectory_.steps.push_back(e.outcome); }
    void end(const RunSummary& s) override { trajectory_.terminal = s.terminal; }
    const Trajectory& trajectory() const noexcept { return trajectory_; }

private:
    Trajectory trajectory_;
};

/// Streams the trajectory as CSV: step,xi,d,m,x_next,y_next.
class TrajectoryCsvWriter final : public StepSink {
public:
    explicit TrajectoryCsvWriter(std::ostream& out, bool header = true);
    void on_step(const StepEvent& e) override;

private:
    std::ostream& out_;
};

// ---- classical map -------------------------------------------------------

/// Eventual periodicity x_{n+b} = x_n for n >= preperiod, b minimal.
struct CycleReport {
    std::uint64_t preperiod = 0;
    std::uint64_t period = 1;
};

struct ClassicalResult {
    std::vector<OddInt> states;  // x_0 .. x_last
    std::optional<CycleReport> cycle;
    std::optional<std::uint64_t> steps_to_one;
    std::size_t peak_bits = 0;
    bool undecided() const noexcept { return !cycle.has_value(); }
};

/// Iterates the odd-step map up to max_steps times, recording first-visit
/// indices so the first repeat yields the minimal period and preperiod.
ClassicalResult run_classical(const OddInt& x0, std::uint64_t max_steps);

// ---- excursions above the threshold M -----------------------------------

/// A maximal run with Y >= M: starts at `start` (N_k) and ends at the first
/// later index with Y < M (D_k). `end` is empty for an excursion still open
/// when the stream ended.
struct ExcursionRecord {
    std::uint64_t k = 1;
    std::uint64_t start = 0;
    std::optional<std::uint64_t> end;
    bool open() const noexcept { return !end.has_value(); }
};

/// Incremental stopping-time tracker for Y_n = ln X_n against a threshold.
class ExcursionDetector {
public:
    ExcursionDetector(double threshold, double y0);

    void push(std::uint64_t index, double y);
    /// Marks the stream end at `last_index`; an excursion still running stays
    /// open in records().
    void finish(std::uint64_t last_index) { last_index_ = last_index; }

    double threshold() const noexcept { return threshold_; }
    const std::vector<ExcursionRecord>& records() const noexcept { return records_; }
    std::uint64_t last_index() const noexcept { return last_index_; }

private:
    double threshold_;
    bool above_ = false;
    std::uint64_t last_index_ = 0;
    std::vector<ExcursionRecord> records_;
};

/// Y sequence with Y[0] = Y_0; returns records after finish(Y.size() - 1).
std::vector<ExcursionRecord> detect_excursions(std::span<const double> y, double threshold);

class ExcursionSink final : public StepSink {
public:
    explicit ExcursionSink(double threshold) : detector_(threshold, 0.0) {}
    void begin(const OddInt&, double y0) override { detector_ = ExcursionDetector(detector_.threshold(), y0); }
    void on_step(const StepEvent& e) override { detector_.push(e.index, e.y_next); }
    void end(const RunSummary& s) override { detector_.finish(s.steps); }
    const ExcursionDetector& detector() const noexcept { return detector_; }

private:
    ExcursionDetector detector_;
};

// ---- invariant checkers ---------------------------------------------------

/// Growth windows: whenever k consecutive steps all have m = 1 and xi >= 1,
/// checks 2^k X_{n+k} > 3^k X_n exactly and counts violations.
class GrowthChecker final : public StepSink {
public:
    explicit GrowthChecker(unsigned k);
    void begin(const OddInt& x0, double) override;
    void on_step(const StepEvent& e) override;

    std::uint64_t windows_checked() const noexcept { return windows_; }
    std::uint64_t violations() const noexcept { return violations_; }

private:
    unsigned k_;
    mpz_class three_pow_k_;
    std::deque<OddInt> recent_;  // last k + 1 states
    unsigned run_ = 0;           // current run of qualifying steps
    std::uint64_t windows_ = 0;
    std::uint64_t violations_ = 0;
};

/// Per-step upper and lower bounds on X_n and Y_n = ln X_n for a law whose
/// largest atom is xi_max:
///   exact:  1 <= x_next and 2^m x_next <= 3x + xi_max
///   log:    Y_n <= Y_{n-1} + ln(1 + (xi_max/3) e^{-Y_{n-1}}) + ln 3 - m ln 2
///   split:  Y_n <= Y_{n-1} + eps + ln 3 - m ln 2   when Y_{n-1} >= M
///           Y_n <= Y_{n-1} + ln 5                  when Y_{n-1} <  M
/// The split form is checked only when it follows from the log form
/// (xi_max <= 7 and ln(1 + (xi_max/3) e^{-M}) <= eps).
class BoundChecker final : public StepSink {
public:
    BoundChecker(std::int64_t xi_max, double epsilon, double threshold_m);
    void on_step(const StepEvent& e) override;

    bool split_applicable() const noexcept { return split_applicable_; }
    std::uint64_t steps() const noexcept { return steps_; }
    std::uint64_t exact_violations() const noexcept { return exact_violations_; }
    std::uint64_t log_violations() const noexcept { return log_violations_; }
    std::uint64_t above_violations() const noexcept { return above_violations_; }
    std::uint64_t below_violations() const noexcept { return below_violations_; }
    std::uint64_t total_violations() const noexcept {
        return exact_violations_ + log_violations_ + above_violations_ + below_violations_;
    }

    /// Floating slack for the log-scale bounds, which are tight at xi = xi_max.
    static constexpr double kLogSlack = 1e-12;

private:
    std::int64_t xi_max_;
    double epsilon_;
    double threshold_m_;
    bool split_applicable_;
    std::uint64_t steps_ = 0;
    std::uint64_t exact_violations_ = 0;
    std::uint64_t log_violations_ = 0;
    std::uint64_t above_violations_ = 0;
    std::uint64_t below_violations_ = 0;
};

/// Tracks first entry into state 1 and any departure from 1 afterwards.
class AbsorptionTracker final : public StepSink {
public:
    void begin(const OddInt& x0, double) override;
    void on_step(const StepEvent& e) override;

    std::optional<std::uint64_t> first_hit() const noexcept { return first_hit_; }
    std::uint64_t departures_after_hit() const noexcept { return departures_; }

private:
    std::optional<std::uint64_t> first_hit_;
    std::uint64_t departures_ = 0;
};

}  // namespace rcollatz
