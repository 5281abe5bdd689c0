#include "rcollatz/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rcollatz/errors.hpp"
#include "rcollatz/parallel.hpp"

namespace rcollatz {

namespace {

struct WorkerState {
    StatsAccumulator stats;
    ExcursionTails tails;
    BoundCounts bounds;
};

template <class Fn>
nlohmann::json guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const NoData& e) {
        return {{"value", nullptr}, {"reason", e.what()}};
    } catch (const InsufficientData& e) {
        return {{"value", nullptr}, {"reason", e.what()}};
    } catch (const ConfigError& e) {
        return {{"value", nullptr}, {"reason", e.what()}};
    }
}

nlohmann::json fit_json(const TailFit& f) {
    return {{"sample_count", f.sample_count},
            {"censored_count", f.censored_count},
            {"rate_estimate", f.rate_estimate},
            {"ci_low", f.ci_low},
            {"ci_high", f.ci_high}};
}

}  // namespace

nlohmann::json SimulateOptions::to_json() const {
    return {{"x0", chain.x0.to_string()},
            {"xi", chain.effective_xi().to_json()},
            {"steps", chain.max_steps},
            {"bit_cap", chain.bit_cap},
            {"M", chain.threshold_m},
            {"epsilon", chain.epsilon},
            {"seed", seed},
            {"replicas", replicas},
            {"burn_in", accumulator.burn_in},
            {"occupation_cutoff", accumulator.occupation_cutoff},
            {"growth_k", growth_k}};
}

void BoundCounts::merge(const BoundCounts& o) {
    split_applicable = split_applicable || o.split_applicable;
    steps += o.steps;
    exact += o.exact;
    log += o.log;
    above += o.above;
    below += o.below;
    growth_windows += o.growth_windows;
    growth_violations += o.growth_violations;
}

SimulationResult run_simulation(const SimulateOptions& opts) {
    opts.chain.validate();
    if (opts.replicas == 0) throw ConfigError("replicas must be >= 1");
    const XiDistribution dist = opts.chain.effective_xi();
    const unsigned jobs = std::max(1u, std::min<unsigned>(resolve_jobs(opts.jobs),
                                                          static_cast<unsigned>(std::min<std::uint64_t>(opts.replicas, 1024))));

    std::vector<WorkerState> workers;
    workers.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) workers.push_back({StatsAccumulator(opts.accumulator), {}, {}});

    SimulationResult result(opts.accumulator);
    result.replicas.resize(opts.replicas);
    if (opts.keep_excursions) result.excursions.resize(opts.replicas);

    parallel_for(opts.replicas, jobs, [&](std::size_t r, unsigned w) {
        WorkerState& ws = workers[w];
        RngStream rng(opts.seed, r);
        ExcursionSink excursions(opts.chain.threshold_m);
        GrowthChecker growth(opts.growth_k);
        BoundChecker bounds(dist.max_value(), opts.chain.epsilon, opts.chain.threshold_m);
        AbsorptionTracker absorption;
        std::optional<TrajectoryCsvWriter> trajectory;
        std::vector<StepSink*> sinks{&ws.stats, &excursions, &growth, &bounds, &absorption};
        if (r == 0 && opts.trajectory) {
            trajectory.emplace(*opts.trajectory);
            sinks.push_back(&*trajectory);
        }

        const RunSummary summary = run_randomized(opts.chain, rng, sinks);

        const auto& records = excursions.detector().records();
        const ExcursionTails t = excursion_tail_samples(records, excursions.detector().last_index());
        ws.tails.durations.merge(t.durations);
        ws.tails.sojourns.merge(t.sojourns);
        if (opts.keep_excursions) result.excursions[r] = records;

        BoundCounts b;
        b.split_applicable = bounds.split_applicable();
        b.steps = bounds.steps();
        b.exact = bounds.exact_violations();
        b.log = bounds.log_violations();
        b.above = bounds.above_violations();
        b.below = bounds.below_violations();
        b.growth_windows = growth.windows_checked();
        b.growth_violations = growth.violations();
        ws.bounds.merge(b);

        result.replicas[r] = {summary.terminal, summary.steps, summary.absorbed_at,
                              absorption.departures_after_hit()};
    });

    for (const WorkerState& ws : workers) {
        result.stats.merge(ws.stats);
        result.tails.durations.merge(ws.tails.durations);
        result.tails.sojourns.merge(ws.tails.sojourns);
        result.bounds.merge(ws.bounds);
    }
    return result;
}

nlohmann::json tail_fit_json(const TailSample& sample) {
    return guarded([&]() -> nlohmann::json { return fit_json(fit_geometric_tail(sample)); });
}

nlohmann::json simulation_report(const SimulateOptions& opts, const SimulationResult& res) {
    const StatsAccumulator& acc = res.stats;
    nlohmann::json report;
    report["config"] = opts.to_json();
    report["total_steps"] = acc.total_steps();

    report["m_distribution"] = guarded([&]() -> nlohmann::json {
        const MDistribution m = m_distribution(acc);
        return {{"p", m.p}, {"std_error", m.std_error}, {"n", m.n}, {"counts", acc.m_counts()}};
    });
    report["drift"] = guarded([&]() -> nlohmann::json {
        const DriftEstimate d = drift_estimate(acc);
        return {{"mean", d.mean},     {"std_error", d.std_error}, {"target", d.target},
                {"m_mean", d.m_mean}, {"m_variance", d.m_variance}, {"n", d.n}};
    });
    report["independence"] = guarded([&]() -> nlohmann::json {
        const ChiSquareResult c = m_independence_test(acc);
        return {{"statistic", c.statistic},
                {"dof", c.dof},
                {"p_value", c.p_value},
                {"pairs", c.pairs},
                {"pair_counts", acc.pair_counts()}};
    });
    report["returns"] = guarded([&]() -> nlohmann::json {
        const ReturnTimeStats r = return_time_stats(acc);
        nlohmann::json head = nlohmann::json::array();
        for (const auto& [gap, count] : r.histogram) {
            if (gap > 20) break;
            head.push_back({gap, count});
        }
        nlohmann::json out = {{"visits", r.visits},
                              {"returns", r.returns},
                              {"mean", r.mean},
                              {"variance", r.variance},
                              {"histogram_head", head}};
        try {
            out["kac_product"] = kac_product(acc);
        } catch (const Error&) {
            out["kac_product"] = nullptr;
        }
        return out;
    });
    report["occupation"] = guarded([&]() -> nlohmann::json {
        const OccupationFrequencies occ = occupation_frequencies(acc);
        nlohmann::json low = nlohmann::json::object();
        for (std::uint64_t x = 1; x <= std::min<std::uint64_t>(15, occ.cutoff); x += 2) {
            low[std::to_string(x)] = occ.frequency(x);
        }
        return {{"cutoff", occ.cutoff},
                {"burn_in", occ.burn_in},
                {"samples", occ.total},
                {"overflow_mass", occ.overflow_mass()},
                {"low_states", low}};
    });
    report["tails"] = {{"threshold_M", opts.chain.threshold_m},
                       {"durations", tail_fit_json(res.tails.durations)},
                       {"sojourns", tail_fit_json(res.tails.sojourns)}};

    const BoundCounts& b = res.bounds;
    report["bounds"] = {{"steps_checked", b.steps},
                        {"exact_violations", b.exact},
                        {"log_violations", b.log},
                        {"split_applicable", b.split_applicable},
                        {"above_M_violations", b.above},
                        {"below_M_violations", b.below},
                        {"growth_k", opts.growth_k},
                        {"growth_windows", b.growth_windows},
                        {"growth_violations", b.growth_violations}};

    std::uint64_t counts[3] = {0, 0, 0};
    for (const auto& r : res.replicas) ++counts[static_cast<int>(r.terminal)];
    report["terminals"] = {{"completed", counts[0]}, {"overflowed", counts[1]}, {"absorbed", counts[2]}};

    const bool absorbing = one_is_absorbing(opts.chain.effective_xi());
    nlohmann::json absorption = {{"one_is_absorbing", absorbing}};
    if (absorbing) {
        std::uint64_t departures = 0;
        std::vector<std::uint64_t> hits;
        for (const auto& r : res.replicas) {
            departures += r.departures_after_absorption;
            if (r.absorbed_at) hits.push_back(*r.absorbed_at);
        }
        nlohmann::json by_horizon = nlohmann::json::array();
        std::vector<std::uint64_t> horizons;
        for (std::uint64_t h = 10; h < opts.chain.max_steps; h *= 10) horizons.push_back(h);
        horizons.push_back(opts.chain.max_steps);
        for (std::uint64_t h : horizons) {
            const auto n = std::count_if(hits.begin(), hits.end(), [h](std::uint64_t t) { return t <= h; });
            by_horizon.push_back({{"horizon", h},
                                  {"absorbed", n},
                                  {"frequency", static_cast<double>(n) / static_cast<double>(res.replicas.size())}});
        }
        absorption["replicas"] = res.replicas.size();
        absorption["absorbed"] = hits.size();
        absorption["departures_after_absorption"] = departures;
        absorption["by_horizon"] = by_horizon;
        absorption["note"] = "finite-horizon estimate; says nothing about runs that never absorb";
    }
    report["absorption"] = absorption;
    return report;
}

void write_occupation_csv(std::ostream& out, const StatsAccumulator& stats) {
    out << "state,count,frequency\n";
    const OccupationFrequencies occ = occupation_frequencies(stats);
    char buf[32];
    for (std::size_t i = 0; i < occ.counts.size(); ++i) {
        if (occ.counts[i] == 0) continue;
        std::snprintf(buf, sizeof(buf), "%.17g",
                      static_cast<double>(occ.counts[i]) / static_cast<double>(occ.total));
        out << 2 * i + 1 << ',' << occ.counts[i] << ',' << buf << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", occ.overflow_mass());
    out << "above_cutoff," << occ.above_cutoff << ',' << buf << '\n';
}

}  // namespace rcollatz
