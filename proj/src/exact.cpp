#include "rcollatz/exact.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <map>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "rcollatz/errors.hpp"
#include "rcollatz/odd_int.hpp"
#include "rcollatz/parallel.hpp"

namespace rcollatz {

TransitionTable::TransitionTable(std::uint64_t cutoff, OverflowPolicy policy,
                                 std::vector<TransitionRow> rows)
    : cutoff_(cutoff), policy_(policy), rows_(std::move(rows)) {}

const TransitionRow& TransitionTable::row(std::uint64_t x) const {
    if (x % 2 == 0 || x > cutoff_) {
        throw ContractViolation("state " + std::to_string(x) + " is not an odd state <= " +
                                std::to_string(cutoff_));
    }
    return rows_[index_of(x)];
}

Rational TransitionTable::prob(std::uint64_t x, std::uint64_t y) const {
    for (const auto& e : row(x).entries) {
        if (e.target == y) return e.prob;
    }
    return 0;
}

TransitionTable build_table(const XiDistribution& dist, std::uint64_t cutoff, OverflowPolicy policy,
                            unsigned jobs) {
    if (auto why = validate(dist)) throw ConfigError("invalid xi distribution: " + *why);
    if (cutoff % 2 == 0 || cutoff > kMaxCutoff) {
        throw ConfigError("cutoff must be odd and at most 2^40, got " + std::to_string(cutoff));
    }
    std::vector<TransitionRow> rows((cutoff + 1) / 2);
    parallel_for(rows.size(), jobs, [&](std::size_t i, unsigned) {
        TransitionRow& row = rows[i];
        row.state = TransitionTable::state_at(i);
        row.m_law = {Rational(0), Rational(0), Rational(0)};
        const OddInt x = OddInt::from_u64(row.state);
        std::map<std::uint64_t, Rational> merged;
        Rational overflow = 0;
        for (const auto& atom : dist.atoms()) {
            const StepOutcome out = step(x, atom.value);
            row.m_law[out.m - 1] += atom.prob;
            if (out.x_next.is_small() && out.x_next.small_value() <= cutoff) {
                merged[out.x_next.small_value()] += atom.prob;
            } else {
                overflow += atom.prob;
            }
        }
        for (auto& [target, p] : merged) row.entries.push_back({target, std::move(p)});
        if (sgn(overflow) > 0) row.entries.push_back({kOverflowState, overflow});
    });
    return TransitionTable(cutoff, policy, std::move(rows));
}

namespace {

struct Incoming {
    std::vector<std::size_t> offsets;  // CSR over targets
    std::vector<std::size_t> sources;
    std::vector<double> probs;
};

Incoming transpose(const TransitionTable& table) {
    const std::size_t n = table.size();
    Incoming in;
    in.offsets.assign(n + 1, 0);
    for (const auto& row : table.rows()) {
        for (const auto& e : row.entries) {
            if (e.target != kOverflowState) ++in.offsets[TransitionTable::index_of(e.target) + 1];
        }
    }
    for (std::size_t i = 0; i < n; ++i) in.offsets[i + 1] += in.offsets[i];
    in.sources.resize(in.offsets[n]);
    in.probs.resize(in.offsets[n]);
    std::vector<std::size_t> fill(in.offsets.begin(), in.offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& e : table.rows()[i].entries) {
            if (e.target == kOverflowState) continue;
            const std::size_t slot = fill[TransitionTable::index_of(e.target)]++;
            in.sources[slot] = i;
            in.probs[slot] = e.prob.get_d();
        }
    }
    return in;
}

}  // namespace

StationaryResult stationary(const TransitionTable& table, double tol, std::uint64_t max_iterations) {
    if (table.policy() != OverflowPolicy::kAbsorbRenormalize) {
        throw ContractViolation("stationary() needs a table built with the absorb-and-renormalize policy");
    }
    if (!(tol > 0)) throw ContractViolation("tolerance must be positive");
    const std::size_t n = table.size();
    const Incoming in = transpose(table);

    StationaryResult result;
    result.cutoff = table.cutoff();
    result.tol = tol;
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    double residual = 0;
    for (std::uint64_t it = 1; it <= max_iterations; ++it) {
        double kept = 0;
        for (std::size_t y = 0; y < n; ++y) {
            double s = 0;
            for (std::size_t k = in.offsets[y]; k < in.offsets[y + 1]; ++k) s += pi[in.sources[k]] * in.probs[k];
            next[y] = s;
            kept += s;
        }
        if (!(kept > 0)) throw Error("all probability escapes the truncation");
        residual = 0;
        for (std::size_t y = 0; y < n; ++y) {
            next[y] /= kept;
            residual += std::abs(next[y] - pi[y]);
        }
        pi.swap(next);
        result.overflow_mass = 1.0 - kept;
        if (residual < tol) {
            result.pi = std::move(pi);
            result.iterations = it;
            result.residual = residual;
            return result;
        }
    }
    throw BudgetExceeded("power iteration did not reach tolerance within " +
                             std::to_string(max_iterations) + " sweeps",
                         residual, max_iterations);
}

ReturnTimeBounds expected_return_time(const TransitionTable& table, std::uint64_t target) {
    if (target % 2 == 0 || target > table.cutoff()) {
        throw ContractViolation("target " + std::to_string(target) + " is outside the table");
    }
    const std::size_t n = table.size();
    const std::size_t t = TransitionTable::index_of(target);
    const Incoming in = transpose(table);

    // States that can reach target or overflow.
    std::vector<char> can_finish(n, 0);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& e : table.rows()[i].entries) {
            if (e.target == kOverflowState || e.target == target) {
                can_finish[i] = 1;
                queue.push_back(i);
                break;
            }
        }
    }
    while (!queue.empty()) {
        const std::size_t y = queue.front();
        queue.pop_front();
        if (y == t) continue;  // arriving at target ends the walk
        for (std::size_t k = in.offsets[y]; k < in.offsets[y + 1]; ++k) {
            const std::size_t x = in.sources[k];
            if (!can_finish[x]) {
                can_finish[x] = 1;
                queue.push_back(x);
            }
        }
    }
    // States with infinite expected time: those that can reach a stuck state
    // without passing through target.
    std::vector<char> infinite(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!can_finish[i]) {
            infinite[i] = 1;
            queue.push_back(i);
        }
    }
    while (!queue.empty()) {
        const std::size_t y = queue.front();
        queue.pop_front();
        if (y == t) continue;
        for (std::size_t k = in.offsets[y]; k < in.offsets[y + 1]; ++k) {
            const std::size_t x = in.sources[k];
            if (!infinite[x]) {
                infinite[x] = 1;
                queue.push_back(x);
            }
        }
    }
    if (infinite[t]) {
        throw Unreachable("state " + std::to_string(target) +
                          " cannot be returned to within the truncation at cutoff " +
                          std::to_string(table.cutoff()));
    }

    std::vector<std::ptrdiff_t> slot(n, -1);
    std::vector<std::size_t> states;
    for (std::size_t i = 0; i < n; ++i) {
        if (!infinite[i]) {
            slot[i] = static_cast<std::ptrdiff_t>(states.size());
            states.push_back(i);
        }
    }
    const auto dim = static_cast<Eigen::Index>(states.size());

    // (I - Q) h = 1 and (I - Q) g = P(. -> overflow), Q = P without column target.
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(dim);
    Eigen::VectorXd escape_rhs = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        triplets.emplace_back(r, r, 1.0);
        for (const auto& e : table.rows()[states[r]].entries) {
            if (e.target == kOverflowState) {
                escape_rhs[r] += e.prob.get_d();
            } else if (e.target != target) {
                triplets.emplace_back(r, slot[TransitionTable::index_of(e.target)], -e.prob.get_d());
            }
        }
    }
    Eigen::SparseMatrix<double> a(dim, dim);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw Unreachable("singular first-step system");

    ReturnTimeBounds out;
    out.target = target;
    auto refine = [&](const Eigen::VectorXd& rhs, int* steps) {
        Eigen::VectorXd x = lu.solve(rhs);
        for (int iter = 0; iter < 8; ++iter) {
            Eigen::VectorXd r(dim);
            long double worst = 0;
            long double scale = 1;
            for (Eigen::Index i = 0; i < dim; ++i) {
                long double acc = static_cast<long double>(rhs[i]) - x[i];
                for (const auto& e : table.rows()[states[i]].entries) {
                    if (e.target != kOverflowState && e.target != target) {
                        acc += static_cast<long double>(e.prob.get_d()) *
                               x[slot[TransitionTable::index_of(e.target)]];
                    }
                }
                r[i] = static_cast<double>(acc);
                worst = std::max(worst, std::abs(acc));
                scale = std::max(scale, static_cast<long double>(std::abs(x[i])));
            }
            if (worst <= 1e-15L * scale) break;
            x += lu.solve(r);
            if (steps) ++*steps;
        }
        return x;
    };
    const Eigen::VectorXd h = refine(ones, &out.refinement_steps);
    const Eigen::VectorXd g = refine(escape_rhs, nullptr);

    out.hitting_times.assign(n, std::numeric_limits<double>::infinity());
    for (Eigen::Index r = 0; r < dim; ++r) out.hitting_times[states[r]] = h[r];
    out.lower = h[slot[t]];
    out.escape_before_return = g[slot[t]];
    return out;
}

std::vector<std::uint64_t> ReachableSet::unreached() const {
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (depth[i] < 0) out.push_back(2 * i + 1);
    }
    return out;
}

ReachableSet reachable_set(const XiDistribution& dist, std::uint64_t from, std::uint64_t state_cap,
                           std::uint64_t depth_cap) {
    if (auto why = validate(dist)) throw ConfigError("invalid xi distribution: " + *why);
    if (state_cap == 0 || depth_cap == 0) throw ContractViolation("caps must be >= 1");
    if (from % 2 == 0 || from > state_cap) {
        throw ContractViolation("start state must be odd and within the state cap");
    }
    if (state_cap > kMaxCutoff) throw ContractViolation("state cap above 2^40");

    ReachableSet out;
    out.from = from;
    out.state_cap = state_cap;
    out.depth_cap = depth_cap;
    out.depth.assign((state_cap + 1) / 2, -1);
    out.depth[(from - 1) / 2] = 0;
    out.reached = 1;

    std::vector<std::uint64_t> frontier{from};
    std::vector<std::uint64_t> next;
    for (std::uint64_t level = 0; !frontier.empty(); ++level) {
        next.clear();
        for (std::uint64_t x : frontier) {
            const OddInt state = OddInt::from_u64(x);
            for (const auto& atom : dist.atoms()) {
                const OddInt y = step(state, atom.value).x_next;
                if (!y.is_small() || y.small_value() > state_cap) {
                    out.hit_state_cap = true;
                    continue;
                }
                auto& d = out.depth[(y.small_value() - 1) / 2];
                if (d >= 0) continue;
                if (level == depth_cap) {
                    out.hit_depth_cap = true;
                    continue;
                }
                d = static_cast<std::int64_t>(level + 1);
                ++out.reached;
                next.push_back(y.small_value());
            }
        }
        frontier.swap(next);
    }
    return out;
}

void write_table_csv(std::ostream& out, const TransitionTable& table) {
    out << "row_state,target_state_or_OVERFLOW,prob_num,prob_den\n";
    for (const auto& row : table.rows()) {
        for (const auto& e : row.entries) {
            out << row.state << ',';
            if (e.target == kOverflowState) {
                out << "OVERFLOW";
            } else {
                out << e.target;
            }
            out << ',' << e.prob.get_num().get_str() << ',' << e.prob.get_den().get_str() << '\n';
        }
    }
}

void write_stationary_csv(std::ostream& out, const StationaryResult& result) {
    out << "state,pi\n";
    char buf[40];
    for (std::size_t i = 0; i < result.pi.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", result.pi[i]);
        out << TransitionTable::state_at(i) << ',' << buf << '\n';
    }
}

nlohmann::json stationary_metadata(const StationaryResult& result) {
    return {{"cutoff", result.cutoff},           {"tol", result.tol},
            {"iterations", result.iterations},   {"residual", result.residual},
            {"overflow_mass", result.overflow_mass}};
}

}  // namespace rcollatz
