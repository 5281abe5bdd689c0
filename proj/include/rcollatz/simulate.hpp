#pragma once

// Multi-replica driver: runs R independent replicas of the randomized chain on
// a worker pool and merges their statistics into one result.

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "rcollatz/chain.hpp"
#include "rcollatz/stats.hpp"

namespace rcollatz {

struct SimulateOptions {
    ChainConfig chain;  // chain.xi is always set here
    std::uint64_t seed = 42;
    std::uint64_t replicas = 4;
    unsigned jobs = 0;
    AccumulatorOptions accumulator;
    unsigned growth_k = 5;
    /// Keep every replica's excursion records (the excursions command needs them).
    bool keep_excursions = false;
    /// Trajectory of replica 0 is streamed here when set.
    std::ostream* trajectory = nullptr;

    nlohmann::json to_json() const;
};

struct ReplicaOutcome {
    Terminal terminal = Terminal::kCompleted;
    std::uint64_t steps = 0;
    std::optional<std::uint64_t> absorbed_at;
    std::uint64_t departures_after_absorption = 0;
};

struct BoundCounts {
    bool split_applicable = false;
    std::uint64_t steps = 0;
    std::uint64_t exact = 0;
    std::uint64_t log = 0;
    std::uint64_t above = 0;
    std::uint64_t below = 0;
    std::uint64_t growth_windows = 0;
    std::uint64_t growth_violations = 0;

    std::uint64_t total() const noexcept { return exact + log + above + below + growth_violations; }
    void merge(const BoundCounts& o);
};

struct SimulationResult {
    StatsAccumulator stats;
    ExcursionTails tails;
    BoundCounts bounds;
    std::vector<ReplicaOutcome> replicas;  // by stream id
    /// Per replica, only with keep_excursions.
    std::vector<std::vector<ExcursionRecord>> excursions;

    explicit SimulationResult(AccumulatorOptions o) : stats(o) {}
};

/// Replica r uses RngStream(seed, r). Per-worker accumulators hold only
/// integer counts, so the merged result does not depend on the job count.
SimulationResult run_simulation(const SimulateOptions& opts);

/// Analysis report: m law, drift, independence, returns, occupation summary,
/// tail fits, bound checks, absorption and terminals. Estimators that lack
/// data report null with a reason instead of failing the run.
nlohmann::json simulation_report(const SimulateOptions& opts, const SimulationResult& result);

nlohmann::json tail_fit_json(const TailSample& sample);

/// state,count,frequency for visited odd states up to the occupation cutoff.
void write_occupation_csv(std::ostream& out, const StatsAccumulator& stats);

}  // namespace rcollatz
