#include "rcollatz/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "rcollatz/exact.hpp"
#include "rcollatz/manifest.hpp"
#include "rcollatz/parallel.hpp"
#include "rcollatz/reach.hpp"
#include "rcollatz/simulate.hpp"

namespace fs = std::filesystem;

namespace rcollatz::cli {

namespace {

/// Where a command's files go: a directory with a manifest, or stdout.
class Outputs {
public:
    Outputs(std::string dir, std::ostream& out) : dir_(std::move(dir)), out_(out) {}

    bool to_dir() const { return !dir_.empty(); }
    const std::string& dir() const { return dir_; }
    RunManifest& manifest() { return manifest_; }

    void begin(const std::string& command, const std::vector<std::string>& argv) {
        manifest_.command = command;
        manifest_.argv = argv;
        manifest_.version = version();
        manifest_.started = utc_timestamp();
        if (to_dir()) fs::create_directories(dir_);
    }

    /// Writes a named output. Without a directory only `on_stdout` outputs are
    /// printed.
    void emit(const std::string& name, const std::string& content, bool on_stdout) {
        if (!to_dir()) {
            if (on_stdout) out_ << content;
            return;
        }
        std::ofstream f(fs::path(dir_) / name, std::ios::binary);
        f << content;
        if (!f) throw Error("cannot write " + name);
        manifest_.outputs[name];
    }

    /// Output streamed straight to a file; needs a directory.
    std::ofstream open(const std::string& name) {
        if (!to_dir()) throw UsageError(name + " needs --out-dir");
        manifest_.outputs[name];
        return std::ofstream(fs::path(dir_) / name, std::ios::binary);
    }

    void finish() {
        if (to_dir()) manifest_.finalize(dir_);
    }

    void note(const std::string& line) {
        if (to_dir()) out_ << line << '\n';
    }

private:
    std::string dir_;
    std::ostream& out_;
    RunManifest manifest_;
};

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::uint64_t> odd_values(const std::string& range) {
    auto [a, b] = parse_range(range);
    if (a % 2 == 0) ++a;
    if (a > b) throw UsageError("range " + range + " contains no odd value");
    std::vector<std::uint64_t> v;
    v.reserve((b - a) / 2 + 1);
    for (std::uint64_t x = a; x <= b; x += 2) {
        v.push_back(x);
        if (x > b - 2) break;
    }
    return v;
}

std::uint64_t odd_cutoff(const std::string& text, const char* flag) {
    const std::uint64_t c = parse_count(text);
    if (c % 2 == 0) throw UsageError(std::string(flag) + " must be odd");
    return c;
}

// ---- simulate --------------------------------------------------------------

struct SimArgs {
    std::string x0 = "1";
    std::string steps = "1e6";
    std::string xi = "uniform1357";
    std::uint64_t seed = 42;
    std::string replicas = "4";
    std::size_t bit_cap = 4096;
    double epsilon = 0.1;
    double M = kDefaultThresholdM;
    std::string burn_in = "1000";
    std::string cutoff = "9999";
    unsigned growth_k = 5;
    bool trajectory = false;
};

SimulateOptions to_options(const SimArgs& a, unsigned jobs) {
    SimulateOptions o;
    o.chain.x0 = OddInt::parse(a.x0);
    o.chain.xi = parse_xi_spec(a.xi);
    o.chain.max_steps = parse_count(a.steps);
    o.chain.bit_cap = a.bit_cap;
    o.chain.epsilon = a.epsilon;
    o.chain.threshold_m = a.M;
    o.seed = a.seed;
    o.replicas = parse_count(a.replicas);
    o.jobs = jobs;
    o.accumulator.burn_in = parse_count(a.burn_in);
    o.accumulator.occupation_cutoff = odd_cutoff(a.cutoff, "--cutoff");
    o.growth_k = a.growth_k;
    if (o.replicas == 0) throw UsageError("--replicas must be >= 1");
    if (a.growth_k == 0) throw UsageError("--growth-k must be >= 1");
    return o;
}

nlohmann::json seeds_json(std::uint64_t seed, std::uint64_t replicas) {
    return {{"seed", seed}, {"stream_ids", {0, replicas - 1}}};
}

int cmd_simulate(const SimArgs& a, unsigned jobs, Outputs& o) {
    SimulateOptions opts = to_options(a, jobs);
    opts.chain.validate();
    std::ofstream trajectory;
    if (a.trajectory) {
        trajectory = o.open("trajectory.csv");
        opts.trajectory = &trajectory;
    }
    const SimulationResult res = run_simulation(opts);
    trajectory.close();

    o.emit("report.json", simulation_report(opts, res).dump(2) + "\n", true);
    if (o.to_dir() && res.stats.occupation_total() > 0) {
        std::ostringstream occ;
        write_occupation_csv(occ, res.stats);
        o.emit("occupation.csv", occ.str(), false);
    }

    nlohmann::json overflowed = nlohmann::json::array();
    for (std::size_t r = 0; r < res.replicas.size(); ++r) {
        if (res.replicas[r].terminal == Terminal::kOverflowed) overflowed.push_back(r);
    }
    o.manifest().config = opts.to_json();
    o.manifest().seeds = seeds_json(opts.seed, opts.replicas);
    o.manifest().status = {{"overflowed_replicas", overflowed}};
    o.note("simulate: " + std::to_string(res.stats.total_steps()) + " steps over " +
           std::to_string(opts.replicas) + " replicas, " + std::to_string(overflowed.size()) + " overflowed");
    return kExitOk;
}

// ---- classical -------------------------------------------------------------

struct ClassicalArgs {
    std::string x0;
    std::string range;
    std::string max_steps = "10000";
};

std::string classical_row(const OddInt& x0, std::uint64_t max_steps, bool& reached_one) {
    const ClassicalResult r = run_classical(x0, max_steps);
    std::ostringstream row;
    row << x0.to_string() << ',';
    reached_one = r.steps_to_one.has_value();
    if (r.undecided()) {
        row << ",,," << r.peak_bits << ",undecided";
    } else {
        const std::uint64_t reach = r.steps_to_one ? *r.steps_to_one : r.cycle->preperiod;
        row << reach << ',' << r.cycle->period << ',' << r.cycle->preperiod << ',' << r.peak_bits << ','
            << (r.steps_to_one ? "one" : "cycle");
    }
    row << '\n';
    return row.str();
}

int cmd_classical(const ClassicalArgs& a, unsigned jobs, Outputs& o) {
    if (a.x0.empty() == a.range.empty()) throw UsageError("give exactly one of --x0 and --range");
    const std::uint64_t max_steps = parse_count(a.max_steps);
    std::vector<std::string> rows;
    std::uint64_t reached = 0;
    if (!a.x0.empty()) {
        bool one = false;
        rows.push_back(classical_row(OddInt::parse(a.x0), max_steps, one));
        reached = one;
    } else {
        const std::vector<std::uint64_t> xs = odd_values(a.range);
        rows.resize(xs.size());
        std::vector<char> one(xs.size(), 0);
        parallel_for(xs.size(), jobs, [&](std::size_t i, unsigned) {
            bool hit = false;
            rows[i] = classical_row(OddInt::from_u64(xs[i]), max_steps, hit);
            one[i] = hit;
        });
        reached = std::count(one.begin(), one.end(), 1);
    }
    std::string csv = "x0,steps_to_1_or_cycle,b,n_0,peak_bits,status\n";
    for (const auto& r : rows) csv += r;
    o.emit("classical.csv", csv, true);
    o.manifest().config = {{"x0", a.x0}, {"range", a.range}, {"max_steps", max_steps}};
    o.manifest().seeds = nullptr;
    o.note("classical: " + std::to_string(reached) + " of " + std::to_string(rows.size()) + " reached 1");
    return kExitOk;
}

// ---- stationary ------------------------------------------------------------

struct StationaryArgs {
    std::string xi = "uniform1357";
    std::string cutoff = "9999";
    double tol = 1e-12;
    std::string max_iter = "1e6";
    bool export_table = false;
    bool cross_check = false;
    std::string steps = "1e7";
    std::uint64_t seed = 42;
    std::string burn_in = "1000";
    std::string compare_cutoff = "99";
};

int cmd_stationary(const StationaryArgs& a, unsigned jobs, Outputs& o) {
    const XiDistribution dist = parse_xi_spec(a.xi);
    const std::uint64_t cutoff = odd_cutoff(a.cutoff, "--cutoff");
    if (!(a.tol > 0)) throw UsageError("--tol must be positive");
    const std::uint64_t compare = odd_cutoff(a.compare_cutoff, "--compare-cutoff");
    const TransitionTable table = build_table(dist, cutoff, OverflowPolicy::kAbsorbRenormalize, jobs);

    nlohmann::json config = {{"xi", dist.to_json()},  {"cutoff", cutoff},       {"tol", a.tol},
                             {"max_iter", a.max_iter}, {"cross_check", a.cross_check}};
    o.manifest().config = config;
    o.manifest().seeds = nullptr;

    StationaryResult pi;
    try {
        pi = stationary(table, a.tol, parse_count(a.max_iter));
    } catch (const BudgetExceeded& e) {
        o.manifest().status = {{"converged", false}, {"residual", e.residual()}, {"iterations", e.iterations()}};
        o.finish();
        throw;
    }

    nlohmann::json meta = stationary_metadata(pi);
    meta["xi"] = dist.to_json();
    meta["p_one_to_one"] = to_fraction_string(table.prob(1, 1));
    try {
        const ReturnTimeBounds r = expected_return_time(table, 1);
        meta["return_time_to_1"] = {{"lower_bound", r.lower},
                                    {"upper_bound", nullptr},
                                    {"escape_before_return", r.escape_before_return}};
    } catch (const Unreachable& e) {
        meta["return_time_to_1"] = {{"value", nullptr}, {"reason", e.what()}};
    }

    if (a.cross_check) {
        SimulateOptions sim;
        sim.chain.xi = dist;
        sim.chain.max_steps = parse_count(a.steps);
        sim.seed = a.seed;
        sim.replicas = 1;
        sim.jobs = 1;
        sim.accumulator = {compare, parse_count(a.burn_in)};
        const SimulationResult res = run_simulation(sim);
        const OccupationFrequencies occ = occupation_frequencies(res.stats);
        double tv = 0;
        double exact_mass = 0;
        double mc_mass = 0;
        for (std::uint64_t x = 1; x <= compare; x += 2) {
            const double p = x <= cutoff ? pi.at(x) : 0.0;
            tv += std::abs(p - occ.frequency(x));
            exact_mass += p;
            mc_mass += occ.frequency(x);
        }
        meta["cross_check"] = {{"steps", sim.chain.max_steps},
                               {"seed", sim.seed},
                               {"burn_in", sim.accumulator.burn_in},
                               {"compare_cutoff", compare},
                               {"tv_distance", tv / 2},
                               {"exact_mass", exact_mass},
                               {"monte_carlo_mass", mc_mass}};
        o.manifest().seeds = seeds_json(sim.seed, 1);
    }

    o.emit("stationary.json", meta.dump(2) + "\n", true);
    if (o.to_dir()) {
        std::ostringstream csv;
        write_stationary_csv(csv, pi);
        o.emit("pi.csv", csv.str(), false);
    }
    if (a.export_table) {
        if (!o.to_dir()) throw UsageError("--export-table needs --out-dir");
        std::ostringstream csv;
        write_table_csv(csv, table);
        o.emit("table.csv", csv.str(), false);
    }
    o.manifest().status = {{"converged", true}, {"residual", pi.residual}, {"iterations", pi.iterations}};
    o.note("stationary: pi(1) = " + fmt_double(pi.at(1)) + " after " + std::to_string(pi.iterations) +
           " sweeps");
    return kExitOk;
}

// ---- reach -----------------------------------------------------------------

struct ReachArgs {
    std::string m;
    std::string range;
    std::string xi = "uniform1357";
    bool verify = true;
};

int cmd_reach(const ReachArgs& a, unsigned jobs, Outputs& o) {
    if (a.m.empty() == a.range.empty()) throw UsageError("give exactly one of --m and --range");
    const XiDistribution dist = parse_xi_spec(a.xi);
    o.manifest().config = {{"m", a.m}, {"range", a.range}, {"xi", dist.to_json()}, {"verify", a.verify}};
    o.manifest().seeds = nullptr;

    if (!a.m.empty()) {
        const PathCertificate cert = path_from_one(OddInt::parse(a.m), dist);
        nlohmann::json j = certificate_to_json(cert);
        j["length"] = cert.length();
        bool ok = true;
        if (a.verify) {
            const CertificateCheck check = verify_certificate(cert, dist);
            ok = check.ok;
            j["verified"] = check.ok;
            if (!check.ok) j["failure"] = {{"index", *check.failing_index}, {"reason", check.reason}};
        }
        o.emit("certificate.json", j.dump(2) + "\n", true);
        o.manifest().status = {{"failures", ok ? 0 : 1}};
        return ok ? kExitOk : kExitVerification;
    }

    const std::vector<std::uint64_t> ms = odd_values(a.range);
    std::vector<std::string> rows(ms.size());
    std::vector<char> ok(ms.size(), 1);
    // A law without {1, 3, 5} is refused before any work.
    path_from_one(OddInt{}, dist);
    parallel_for(ms.size(), jobs, [&](std::size_t i, unsigned) {
        const PathCertificate cert = path_from_one(OddInt::from_u64(ms[i]), dist);
        if (a.verify) ok[i] = verify_certificate(cert, dist).ok;
        rows[i] = std::to_string(ms[i]) + ',' + std::to_string(cert.length()) + ',' +
                  cert.probability.get_num().get_str() + ',' + cert.probability.get_den().get_str() + ',' +
                  (a.verify ? (ok[i] ? "true" : "false") : "unchecked") + '\n';
    });
    std::string csv = "m,path_len,prob_num,prob_den,ok\n";
    for (const auto& r : rows) csv += r;
    o.emit("certificates.csv", csv, true);
    const auto failures = std::count(ok.begin(), ok.end(), 0);
    o.manifest().status = {{"failures", failures}};
    o.note("reach: " + std::to_string(ms.size()) + " certificates, " + std::to_string(failures) + " failed");
    return failures == 0 ? kExitOk : kExitVerification;
}

// ---- excursions ------------------------------------------------------------

struct ExcursionArgs {
    std::string x0 = "1";
    std::string steps = "1e6";
    std::string xi = "uniform1357";
    std::uint64_t seed = 42;
    std::string replicas = "1";
    std::size_t bit_cap = 4096;
    double epsilon = 0.1;
    double M = kDefaultThresholdM;
    unsigned growth_k = 5;
};

int cmd_excursions(const ExcursionArgs& a, unsigned jobs, Outputs& o) {
    SimArgs s;
    s.x0 = a.x0;
    s.steps = a.steps;
    s.xi = a.xi;
    s.seed = a.seed;
    s.replicas = a.replicas;
    s.bit_cap = a.bit_cap;
    s.epsilon = a.epsilon;
    s.M = a.M;
    s.growth_k = a.growth_k;
    s.burn_in = "0";
    s.cutoff = "1";
    SimulateOptions opts = to_options(s, jobs);
    opts.keep_excursions = true;
    const SimulationResult res = run_simulation(opts);

    std::string csv = "replica,k,N_k,D_k,duration\n";
    std::uint64_t completed = 0;
    std::uint64_t open = 0;
    for (std::size_t r = 0; r < res.excursions.size(); ++r) {
        for (const ExcursionRecord& e : res.excursions[r]) {
            csv += std::to_string(r) + ',' + std::to_string(e.k) + ',' + std::to_string(e.start) + ',';
            if (e.end) {
                csv += std::to_string(*e.end) + ',' + std::to_string(*e.end - e.start) + '\n';
                ++completed;
            } else {
                csv += ",\n";
                ++open;
            }
        }
    }

    nlohmann::json config = opts.to_json();
    config.erase("burn_in");
    config.erase("occupation_cutoff");
    const BoundCounts& b = res.bounds;
    nlohmann::json tails = {{"config", config},
                            {"excursions", {{"completed", completed}, {"open", open}}},
                            {"durations", tail_fit_json(res.tails.durations)},
                            {"sojourns", tail_fit_json(res.tails.sojourns)},
                            {"bounds",
                             {{"steps_checked", b.steps},
                              {"exact_violations", b.exact},
                              {"log_violations", b.log},
                              {"split_applicable", b.split_applicable},
                              {"above_M_violations", b.above},
                              {"below_M_violations", b.below},
                              {"growth_windows", b.growth_windows},
                              {"growth_violations", b.growth_violations}}}};
    if (completed == 0) tails["notice"] = "no completed excursion above M in this run";

    o.emit("tails.json", tails.dump(2) + "\n", true);
    o.emit("excursions.csv", csv, false);
    o.manifest().config = config;
    o.manifest().seeds = seeds_json(opts.seed, opts.replicas);
    o.manifest().status = {{"bound_violations", b.total()}};
    o.note("excursions: " + std::to_string(completed) + " completed, " + std::to_string(open) + " open");
    return kExitOk;
}

// ---- reachable -------------------------------------------------------------

struct ReachableArgs {
    std::string xi = "uniform1357";
    std::string from = "1";
    std::string state_cap = "999";
    std::string depth_cap = "1e5";
};

int cmd_reachable(const ReachableArgs& a, Outputs& o) {
    const XiDistribution dist = parse_xi_spec(a.xi);
    const std::uint64_t from = parse_count(a.from);
    const std::uint64_t cap = odd_cutoff(a.state_cap, "--state-cap");
    if (from % 2 == 0 || from > cap) throw UsageError("--from must be odd and <= --state-cap");
    const ReachableSet r = reachable_set(dist, from, cap, parse_count(a.depth_cap));
    std::int64_t max_depth = 0;
    for (auto d : r.depth) max_depth = std::max(max_depth, d);
    nlohmann::json j = {{"xi", dist.to_json()},
                        {"from", r.from},
                        {"state_cap", r.state_cap},
                        {"depth_cap", r.depth_cap},
                        {"reached", r.reached},
                        {"odd_states_in_range", (cap + 1) / 2},
                        {"max_depth", max_depth},
                        {"hit_state_cap", r.hit_state_cap},
                        {"hit_depth_cap", r.hit_depth_cap},
                        {"unreached", r.unreached()}};
    o.emit("reachable.json", j.dump(2) + "\n", true);
    o.manifest().config = {{"xi", dist.to_json()}, {"from", from}, {"state_cap", cap}, {"depth_cap", a.depth_cap}};
    o.manifest().seeds = nullptr;
    return kExitOk;
}

// ---- replay ----------------------------------------------------------------

int cmd_replay(const std::string& manifest_path, std::string out_dir, std::ostream& out, std::ostream& err) {
    std::ifstream in(manifest_path);
    if (!in) throw UsageError("cannot read " + manifest_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("manifest is not JSON: ") + e.what());
    }
    const RunManifest original = RunManifest::from_json(j);
    if (original.version != version()) {
        err << "warning: manifest written by version " << original.version << ", this is " << version() << '\n';
    }
    if (out_dir.empty()) out_dir = (fs::path(manifest_path).parent_path() / "replay").string();

    std::vector<std::string> args = original.argv;
    bool replaced = false;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--out-dir" && i + 1 < args.size()) {
            args[i + 1] = out_dir;
            replaced = true;
        } else if (args[i].rfind("--out-dir=", 0) == 0) {
            args[i] = "--out-dir=" + out_dir;
            replaced = true;
        }
    }
    if (!replaced) throw UsageError("manifest argv has no --out-dir");

    std::ostringstream inner_out;
    const int code = run(args, inner_out, err);
    if (code != kExitOk) return code;

    std::ifstream again(fs::path(out_dir) / "manifest.json");
    const RunManifest replayed = RunManifest::from_json(nlohmann::json::parse(again));
    bool identical = replayed.outputs.size() == original.outputs.size();
    for (const auto& [name, digest] : original.outputs) {
        const auto it = replayed.outputs.find(name);
        const bool same = it != replayed.outputs.end() && it->second == digest;
        identical = identical && same;
        out << (same ? "identical " : "DIFFERS   ") << name << '\n';
    }
    out << (identical ? "replay: byte-identical\n" : "replay: outputs differ\n");
    return identical ? kExitOk : kExitVerification;
}

}  // namespace

const char* version() { return RCOLLATZ_VERSION_STRING; }

std::uint64_t parse_count(const std::string& text) {
    std::uint64_t v = 0;
    const char* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec == std::errc() && p == end && !text.empty()) return v;
    double d = 0;
    auto [q, ec2] = std::from_chars(text.data(), end, d);
    if (ec2 != std::errc() || q != end || !(d >= 0) || d >= 1.8e19 || std::floor(d) != d) {
        throw UsageError("expected a non-negative integer, got '" + text + "'");
    }
    return static_cast<std::uint64_t>(d);
}

std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& text) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) throw UsageError("expected a range a..b, got '" + text + "'");
    const std::uint64_t a = parse_count(text.substr(0, dots));
    const std::uint64_t b = parse_count(text.substr(dots + 2));
    if (a > b) throw UsageError("empty range '" + text + "'");
    return {a, b};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Randomized Collatz chain experiments", "rcollatz"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version());

    unsigned jobs = 0;
    std::string out_dir;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--jobs", jobs, "worker threads (0: available parallelism)")->envname("RCOLLATZ_JOBS");
        sub->add_option("--out-dir", out_dir, "write outputs and manifest.json here instead of stdout");
    };

    SimArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "run replicas of the randomized chain and analyse them");
    simulate->add_option("--x0", sim.x0, "odd starting state")->capture_default_str();
    simulate->add_option("--steps", sim.steps, "steps per replica")->capture_default_str();
    simulate->add_option("--xi", sim.xi, "preset name or inline JSON law")->capture_default_str();
    simulate->add_option("--seed", sim.seed)->capture_default_str();
    simulate->add_option("--replicas", sim.replicas)->capture_default_str();
    simulate->add_option("--bit-cap", sim.bit_cap, "stop a replica whose state exceeds this many bits")
        ->capture_default_str();
    simulate->add_option("--epsilon", sim.epsilon)->capture_default_str();
    simulate->add_option("--M", sim.M, "excursion threshold on ln X")->capture_default_str();
    simulate->add_option("--burn-in", sim.burn_in)->capture_default_str();
    simulate->add_option("--cutoff", sim.cutoff, "largest state with its own occupation counter")
        ->capture_default_str();
    simulate->add_option("--growth-k", sim.growth_k)->capture_default_str();
    simulate->add_flag("--trajectory", sim.trajectory, "write trajectory.csv for replica 0");
    common(simulate);

    ClassicalArgs cls;
    CLI::App* classical = app.add_subcommand("classical", "iterate the classical odd-step map");
    classical->add_option("--x0", cls.x0);
    classical->add_option("--range", cls.range, "a..b, odd values only");
    classical->add_option("--max-steps", cls.max_steps)->capture_default_str();
    common(classical);

    StationaryArgs st;
    CLI::App* stat = app.add_subcommand("stationary", "exact stationary law of the truncated chain");
    stat->add_option("--xi", st.xi)->capture_default_str();
    stat->add_option("--cutoff", st.cutoff)->capture_default_str();
    stat->add_option("--tol", st.tol)->capture_default_str();
    stat->add_option("--max-iter", st.max_iter)->capture_default_str();
    stat->add_flag("--export-table", st.export_table, "write the sparse transition table");
    stat->add_flag("--cross-check", st.cross_check, "compare with a Monte Carlo occupation run");
    stat->add_option("--steps", st.steps, "Monte Carlo steps for --cross-check")->capture_default_str();
    stat->add_option("--seed", st.seed)->capture_default_str();
    stat->add_option("--burn-in", st.burn_in)->capture_default_str();
    stat->add_option("--compare-cutoff", st.compare_cutoff)->capture_default_str();
    common(stat);

    ReachArgs rc;
    CLI::App* reach = app.add_subcommand("reach", "positive-probability paths from 1");
    reach->add_option("--m", rc.m, "odd target");
    reach->add_option("--range", rc.range, "a..b, odd targets only");
    reach->add_option("--xi", rc.xi)->capture_default_str();
    reach->add_flag("--verify,!--no-verify", rc.verify, "replay every certificate (default on)");
    common(reach);

    ExcursionArgs ex;
    CLI::App* excursions = app.add_subcommand("excursions", "excursions of ln X above M and their tails");
    excursions->add_option("--x0", ex.x0)->capture_default_str();
    excursions->add_option("--steps", ex.steps)->capture_default_str();
    excursions->add_option("--xi", ex.xi)->capture_default_str();
    excursions->add_option("--seed", ex.seed)->capture_default_str();
    excursions->add_option("--replicas", ex.replicas)->capture_default_str();
    excursions->add_option("--bit-cap", ex.bit_cap)->capture_default_str();
    excursions->add_option("--epsilon", ex.epsilon)->capture_default_str();
    excursions->add_option("--M", ex.M)->capture_default_str();
    excursions->add_option("--growth-k", ex.growth_k)->capture_default_str();
    common(excursions);

    ReachableArgs ra;
    CLI::App* reachable = app.add_subcommand("reachable", "states reachable from a start state below a cap");
    reachable->add_option("--xi", ra.xi)->capture_default_str();
    reachable->add_option("--from", ra.from)->capture_default_str();
    reachable->add_option("--state-cap", ra.state_cap)->capture_default_str();
    reachable->add_option("--depth-cap", ra.depth_cap)->capture_default_str();
    common(reachable);

    std::string manifest_path;
    CLI::App* replay = app.add_subcommand("replay", "re-run a manifest and compare output digests");
    replay->add_option("--manifest", manifest_path)->required();
    common(replay);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (replay->parsed()) return cmd_replay(manifest_path, out_dir, out, err);

        Outputs o(out_dir, out);
        o.begin(app.get_subcommands().front()->get_name(), args);
        int code = kExitOk;
        if (simulate->parsed()) code = cmd_simulate(sim, jobs, o);
        if (classical->parsed()) code = cmd_classical(cls, jobs, o);
        if (stat->parsed()) code = cmd_stationary(st, jobs, o);
        if (reach->parsed()) code = cmd_reach(rc, jobs, o);
        if (excursions->parsed()) code = cmd_excursions(ex, jobs, o);
        if (reachable->parsed()) code = cmd_reachable(ra, o);
        o.finish();
        return code;
    } catch (const BudgetExceeded& e) {
        err << "error: " << e.what() << " (residual " << e.residual() << " after " << e.iterations()
            << " iterations)\n";
        return kExitNonConvergence;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ContractViolation& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidXi& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace rcollatz::cli
