#include <doctest.h>

#include <sstream>

#include "rcollatz/chain.hpp"
#include "rcollatz/errors.hpp"

using namespace rcollatz;

namespace {

ChainConfig uniform_config(std::uint64_t x0, std::uint64_t steps) {
    ChainConfig cfg;
    cfg.x0 = OddInt::from_u64(x0);
    cfg.xi = make_uniform_1357();
    cfg.max_steps = steps;
    return cfg;
}

Trajectory record(const ChainConfig& cfg, std::uint64_t seed, std::uint64_t stream = 0) {
    RngStream rng(seed, stream);
    TrajectoryRecorder rec;
    StepSink* sinks[] = {&rec};
    run_randomized(cfg, rng, sinks);
    return rec.trajectory();
}

}  // namespace

TEST_CASE("config validation") {
    ChainConfig cfg = uniform_config(1, 10);
    CHECK_NOTHROW(cfg.validate());
    cfg.epsilon = 0.12;  // above ln 2 * 7/4 - ln 3 ~ 0.1144
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.epsilon = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.epsilon = 0.1;
    cfg.threshold_m = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.threshold_m = kDefaultThresholdM;
    cfg.xi = XiDistribution({{2, Rational(1)}});
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    RngStream rng(1, 0);
    CHECK_THROWS_AS(run_randomized(cfg, rng, {}), ConfigError);
}

TEST_CASE("randomized run is replayable and consistent step to step") {
    const ChainConfig cfg = uniform_config(1, 10);
    const Trajectory a = record(cfg, 42);
    const Trajectory b = record(cfg, 42);
    REQUIRE(a.steps.size() == 10);
    OddInt prev = a.x0;
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].xi == b.steps[i].xi);
        CHECK(a.steps[i].x_next == b.steps[i].x_next);
        const StepOutcome replay = step(prev, a.steps[i].xi);
        CHECK(replay.x_next == a.steps[i].x_next);
        CHECK(replay.d == a.steps[i].d);
        prev = a.steps[i].x_next;
    }
    const Trajectory other_stream = record(cfg, 42, 1);
    bool differs = false;
    for (std::size_t i = 0; i < 10; ++i) differs |= other_stream.steps[i].xi != a.steps[i].xi;
    CHECK(differs);
}

TEST_CASE("degenerate xi = 1 keeps the chain at 1") {
    ChainConfig cfg = uniform_config(1, 100);
    cfg.xi = XiDistribution({{1, Rational(1)}});
    const Trajectory t = record(cfg, 5);
    for (const auto& s : t.steps) {
        REQUIRE(s.x_next.is_one());
        REQUIRE(s.m == 2);
    }
}

TEST_CASE("pm1: state 1 is absorbing") {
    ChainConfig cfg = uniform_config(5, 500);
    cfg.xi = make_pm1();
    CHECK(one_is_absorbing(make_pm1()));
    CHECK_FALSE(one_is_absorbing(make_uniform_1357()));
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        RngStream rng(seed, 0);
        AbsorptionTracker tracker;
        StepSink* sinks[] = {&tracker};
        const RunSummary s = run_randomized(cfg, rng, sinks);
        CHECK(tracker.departures_after_hit() == 0);
        if (tracker.first_hit()) {
            CHECK(s.terminal == Terminal::kAbsorbed);
            CHECK(s.absorbed_at == tracker.first_hit());
        }
    }
}

TEST_CASE("stop_on_absorption ends the run at first entry") {
    ChainConfig cfg = uniform_config(1, 100);
    cfg.xi = make_pm1();
    cfg.stop_on_absorption = true;
    RngStream rng(1, 0);
    const RunSummary s = run_randomized(cfg, rng, {});
    CHECK(s.steps == 0);
    CHECK(s.terminal == Terminal::kAbsorbed);
}

TEST_CASE("overflow on a guaranteed-growth law") {
    // xi = 1 with x = 2^k - 1: 3x + 1 = 3 * 2^k - 2 has valuation 1 for k >= 2,
    // giving 3 * 2^(k-1) - 1, which grows by 3/2 each step while k shrinks.
    ChainConfig cfg = uniform_config(1, 1000);
    cfg.xi = XiDistribution({{1, Rational(1)}});
    cfg.x0 = OddInt::from_mpz((mpz_class(1) << 100) - 1);
    cfg.bit_cap = 120;
    RngStream rng(1, 0);
    const RunSummary s = run_randomized(cfg, rng, {});
    CHECK(s.terminal == Terminal::kOverflowed);
    CHECK(s.final_state.bit_length() <= 120);
}

TEST_CASE("trajectory CSV") {
    const ChainConfig cfg = uniform_config(1, 3);
    std::ostringstream out;
    TrajectoryCsvWriter writer(out);
    StepSink* sinks[] = {&writer};
    RngStream rng(42, 0);
    run_randomized(cfg, rng, sinks);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "step,xi,d,m,x_next,y_next");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("classical: x0 = 1 is a fixed point") {
    const ClassicalResult r = run_classical(OddInt{}, 10);
    REQUIRE(r.cycle);
    CHECK(r.cycle->period == 1);
    CHECK(r.cycle->preperiod == 0);
    CHECK(r.steps_to_one == 0);
}

TEST_CASE("classical: orbit of 7") {
    const ClassicalResult r = run_classical(OddInt::from_u64(7), 100);
    const std::uint64_t expected[] = {7, 11, 17, 13, 5, 1, 1};
    REQUIRE(r.states.size() == std::size(expected));
    for (std::size_t i = 0; i < std::size(expected); ++i) CHECK(r.states[i] == OddInt::from_u64(expected[i]));
    CHECK(r.steps_to_one == 5);
    REQUIRE(r.cycle);
    CHECK(r.cycle->preperiod == 5);
    CHECK(r.cycle->period == 1);
}

TEST_CASE("classical: 27 reaches 1 in 41 odd steps") {
    const ClassicalResult r = run_classical(OddInt::from_u64(27), 200);
    CHECK(r.steps_to_one == 41);
    CHECK_FALSE(r.undecided());
}

TEST_CASE("classical: budget exhaustion is undecided") {
    const ClassicalResult r = run_classical(OddInt::from_u64(27), 10);
    CHECK(r.undecided());
    CHECK_FALSE(r.steps_to_one);
}

TEST_CASE("excursions: synthetic sequence") {
    const double y[] = {0.5, 1.2, 1.5, 0.8, 1.1, 0.2};
    const auto recs = detect_excursions(y, 1.0);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].k == 1);
    CHECK(recs[0].start == 1);
    CHECK(recs[0].end == 3u);
    CHECK(recs[1].k == 2);
    CHECK(recs[1].start == 4);
    CHECK(recs[1].end == 5u);
}

TEST_CASE("excursions: start above threshold gives N_1 = 0, open runs are kept") {
    const double y[] = {2.0, 3.0, 0.5, 1.5};
    const auto recs = detect_excursions(y, 1.0);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].start == 0);
    CHECK(recs[0].end == 2u);
    CHECK(recs[1].start == 3);
    CHECK(recs[1].open());
}

TEST_CASE("excursions: never above threshold") {
    const double y[] = {0.1, 0.2, 0.3};
    CHECK(detect_excursions(y, 1.0).empty());
}

TEST_CASE("property: excursion records satisfy their stopping-time definitions") {
    ChainConfig cfg = uniform_config(1, 200'000);
    RngStream rng(9, 0);
    std::vector<double> ys;
    struct YSink final : StepSink {
        std::vector<double>* ys;
        void begin(const OddInt&, double y0) override { ys->push_back(y0); }
        void on_step(const StepEvent& e) override { ys->push_back(e.y_next); }
    } ysink;
    ysink.ys = &ys;
    ExcursionSink exc(cfg.threshold_m);
    StepSink* sinks[] = {&ysink, &exc};
    run_randomized(cfg, rng, sinks);
    const auto& recs = exc.detector().records();
    REQUIRE(recs.size() > 100);
    const double M = cfg.threshold_m;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        REQUIRE(r.k == i + 1);
        REQUIRE(ys[r.start] >= M);
        if (r.start > 0) REQUIRE(ys[r.start - 1] < M);
        if (i > 0) REQUIRE(*recs[i - 1].end < r.start);
        const std::uint64_t stop = r.end ? *r.end : ys.size();
        for (std::uint64_t n = r.start + 1; n < stop; ++n) REQUIRE(ys[n] >= M);
        if (r.end) {
            REQUIRE(r.start < *r.end);
            REQUIRE(ys[*r.end] < M);
        }
    }
    // Same records from the offline detector.
    const auto offline = detect_excursions(ys, M);
    REQUIRE(offline.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(offline[i].start == recs[i].start);
        CHECK(offline[i].end == recs[i].end);
    }
}

TEST_CASE("growth checker: single steps with d = 1 grow by more than 3/2") {
    GrowthChecker g(1);
    const OddInt x = OddInt::from_u64(7);
    g.begin(x, x.log());
    const StepOutcome s = step(x, 1);  // 22 / 2 = 11 > 10.5
    g.on_step({1, x, s, x.log(), s.x_next.log()});
    CHECK(g.windows_checked() == 1);
    CHECK(g.violations() == 0);
}

TEST_CASE("growth checker: windows containing m = 2 are skipped") {
    GrowthChecker g(2);
    OddInt x = OddInt::from_u64(7);
    g.begin(x, 0);
    const StepOutcome s1 = step(x, 1);  // m = 1
    g.on_step({1, x, s1, 0, 0});
    x = s1.x_next;                      // 11
    const StepOutcome s2 = step(x, 1);  // 34 / 2 = 17, m = 1
    g.on_step({2, x, s2, 0, 0});
    CHECK(g.windows_checked() == 1);
    x = s2.x_next;                      // 17
    const StepOutcome s3 = step(x, 1);  // 52 / 4, m = 2
    g.on_step({3, x, s3, 0, 0});
    CHECK(g.windows_checked() == 1);
}

TEST_CASE("growth and bound checkers report zero violations on uniform1357") {
    const ChainConfig cfg = uniform_config(1, 100'000);
    RngStream rng(17, 0);
    GrowthChecker growth(5);
    BoundChecker bounds(7, cfg.epsilon, cfg.threshold_m);
    StepSink* sinks[] = {&growth, &bounds};
    run_randomized(cfg, rng, sinks);
    CHECK(bounds.split_applicable());
    CHECK(growth.windows_checked() > 0);
    CHECK(growth.violations() == 0);
    CHECK(bounds.steps() == 100'000);
    CHECK(bounds.total_violations() == 0);
}

TEST_CASE("bound checker detects a violating step") {
    // Claim xi_max = 1 while feeding an xi = 7 step.
    BoundChecker bounds(1, 0.1, kDefaultThresholdM);
    const OddInt x = OddInt::from_u64(1);
    const StepOutcome s = step(x, 7);  // 10 / 2 = 5 > (3 + 1) / 2
    bounds.on_step({1, x, s, 0.0, s.x_next.log()});
    CHECK(bounds.exact_violations() == 1);
    CHECK(bounds.log_violations() == 1);
}

TEST_CASE("bound checker: the tight case x = 1, xi = 7 is not a violation") {
    BoundChecker bounds(7, 0.1, kDefaultThresholdM);
    const OddInt x = OddInt::from_u64(1);
    const StepOutcome s = step(x, 7);  // exactly (3 + 7) / 2 = 5 = 5x
    bounds.on_step({1, x, s, 0.0, s.x_next.log()});
    CHECK(bounds.total_violations() == 0);
}
