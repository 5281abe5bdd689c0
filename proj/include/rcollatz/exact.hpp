#pragma once

// Exact analysis of the chain truncated to odd states <= cutoff: sparse
// rational transition table, stationary law by power iteration, optimistic
// expected return times, and reachable-set exploration.

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "rcollatz/xi_model.hpp"

namespace rcollatz {

/// Target id of the lumped super-state for everything above the cutoff.
inline constexpr std::uint64_t kOverflowState = 0;

enum class OverflowPolicy {
    kAbsorbRenormalize,  // condition on staying in range; escaping mass reported per sweep
    kReportOnly,         // keep the substochastic table for inspection only
};

struct TransitionEntry {
    std::uint64_t target = kOverflowState;
    Rational prob;
};

struct TransitionRow {
    std::uint64_t state = 1;
    std::vector<TransitionEntry> entries;  // in-range targets ascending, then overflow
    std::array<Rational, 3> m_law;         // P(d = 1), P(d = 2), P(d >= 3)
};

class TransitionTable {
public:
    TransitionTable(std::uint64_t cutoff, OverflowPolicy policy, std::vector<TransitionRow> rows);

    std::uint64_t cutoff() const noexcept { return cutoff_; }
    OverflowPolicy policy() const noexcept { return policy_; }
    std::size_t size() const noexcept { return rows_.size(); }
    const std::vector<TransitionRow>& rows() const noexcept { return rows_; }
    /// Row of odd state x <= cutoff.
    const TransitionRow& row(std::uint64_t x) const;
    /// Exact P(x -> y); y may be kOverflowState.
    Rational prob(std::uint64_t x, std::uint64_t y) const;

    static std::size_t index_of(std::uint64_t x) noexcept { return (x - 1) / 2; }
    static std::uint64_t state_at(std::size_t i) noexcept { return 2 * i + 1; }

private:
    std::uint64_t cutoff_;
    OverflowPolicy policy_;
    std::vector<TransitionRow> rows_;
};

inline constexpr std::uint64_t kMaxCutoff = std::uint64_t{1} << 40;

/// Enumerates every atom for every odd x <= cutoff and merges duplicate
/// targets. Throws ConfigError for an invalid law or an even/out-of-range
/// cutoff. Rows are built on up to `jobs` threads.
TransitionTable build_table(const XiDistribution& dist, std::uint64_t cutoff,
                            OverflowPolicy policy = OverflowPolicy::kAbsorbRenormalize,
                            unsigned jobs = 1);

struct StationaryResult {
    std::uint64_t cutoff = 0;
    double tol = 0;
    std::vector<double> pi;      // index (x - 1) / 2, sums to 1
    double overflow_mass = 0;    // mass escaping above the cutoff in one sweep from pi
    std::uint64_t iterations = 0;
    double residual = 0;         // L1 distance between the last two iterates

    double at(std::uint64_t state) const { return pi.at((state - 1) / 2); }
    /// In-range mass after one sweep from pi; together with overflow_mass it
    /// accounts for all probability.
    double retained_mass() const { return 1.0 - overflow_mass; }
};

/// Power iteration on the in-range block, renormalizing after each sweep,
/// until successive iterates differ by less than `tol` in L1. Starts from the
/// uniform law. Throws ContractViolation unless the table uses
/// kAbsorbRenormalize, and BudgetExceeded after `max_iterations`.
StationaryResult stationary(const TransitionTable& table, double tol,
                            std::uint64_t max_iterations = 1'000'000);

struct ReturnTimeBounds {
    std::uint64_t target = 1;
    /// Expected return time with every escape above the cutoff counted as an
    /// immediate return: a lower bound for the untruncated chain.
    double lower = 0;
    /// The truncation gives no upper bound.
    std::optional<double> upper;
    /// Probability, starting at target, of escaping above the cutoff before
    /// returning; the size of the optimistic shortcut.
    double escape_before_return = 0;
    /// Expected hitting time of target (or overflow) from each in-range state.
    std::vector<double> hitting_times;
    int refinement_steps = 0;
};

/// Solves the first-step equations with a sparse LU factorization and
/// long-double iterative refinement. Throws ContractViolation when target is
/// out of range and Unreachable when some state reachable from target cannot
/// get back to it (or escape) inside the truncation.
ReturnTimeBounds expected_return_time(const TransitionTable& table, std::uint64_t target);

struct ReachableSet {
    std::uint64_t from = 1;
    std::uint64_t state_cap = 0;
    std::uint64_t depth_cap = 0;
    /// depth[(x - 1) / 2] = first BFS depth reaching x, or -1.
    std::vector<std::int64_t> depth;
    std::uint64_t reached = 0;
    bool hit_state_cap = false;  // some transition left [1, state_cap]
    bool hit_depth_cap = false;  // the frontier was non-empty when depth_cap stopped the search

    bool contains(std::uint64_t x) const {
        return x % 2 == 1 && x <= state_cap && depth[(x - 1) / 2] >= 0;
    }
    std::vector<std::uint64_t> unreached() const;
};

/// Breadth-first closure of {from} under positive-probability transitions,
/// restricted to odd states <= state_cap.
ReachableSet reachable_set(const XiDistribution& dist, std::uint64_t from, std::uint64_t state_cap,
                           std::uint64_t depth_cap);

/// Sparse triplets: row_state,target_state_or_OVERFLOW,prob_num,prob_den.
void write_table_csv(std::ostream& out, const TransitionTable& table);
/// state,pi
void write_stationary_csv(std::ostream& out, const StationaryResult& result);
nlohmann::json stationary_metadata(const StationaryResult& result);

}  // namespace rcollatz
