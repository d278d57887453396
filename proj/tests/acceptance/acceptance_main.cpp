// Acceptance runner: one PASS/FAIL line per criterion.
//   replisim_acceptance            run all criteria
//   replisim_acceptance --only 4   run one criterion

#include "replisim/distributions.hpp"
#include "replisim/engine.hpp"
#include "replisim/errors.hpp"
#include "replisim/harness.hpp"
#include "replisim/locality.hpp"
#include "replisim/metrics.hpp"
#include "replisim/orderings.hpp"

#include "oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace replisim;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<std::uint64_t> seed_range(std::uint64_t first, int count)
{
    std::vector<std::uint64_t> s;
    for (int i = 0; i < count; ++i) s.push_back(first + static_cast<std::uint64_t>(i));
    return s;
}

std::vector<double> arrivals(const JobSet& jobs)
{
    std::vector<double> a;
    for (const auto& j : jobs.jobs) a.push_back(j.arrival);
    return a;
}

std::vector<double> dues(const JobSet& jobs)
{
    std::vector<double> d;
    for (const auto& j : jobs.jobs) d.push_back(j.due);
    return d;
}

// Paired differences a - b: "a <= b" is rejected only when the lower limit is above 0.
bool weakly_below(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i) diff.push_back(a[i] - b[i]);
    return mean_ci(diff).low <= 0.0;
}

bool strictly_below(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i) diff.push_back(a[i] - b[i]);
    return mean_ci(diff).high < 0.0;
}

ServiceDistribution random_law(std::mt19937_64& g, bool allow_zero)
{
    std::uniform_real_distribution<double> u(0.2, 2.0);
    switch (std::uniform_int_distribution<int>(allow_zero ? 0 : 1, 5)(g)) {
    case 0: return ServiceDistribution::zero();
    case 1: return ServiceDistribution::constant(u(g));
    case 2: return ServiceDistribution::exponential(u(g));
    case 3: return ServiceDistribution::shifted_exponential(0.5 * u(g), u(g));
    case 4: return ServiceDistribution::lomax(u(g), 1.5 + 3.0 * u(g));
    default: {
        const double p = std::uniform_real_distribution<double>(0.1, 0.9)(g);
        return ServiceDistribution::hyperexponential({p, 1.0 - p}, {u(g), 5.0 * u(g)});
    }
    }
}

Outcome criterion1()
{
    const std::vector<std::string> central{"fut-nr",  "fut-nir",  "fut-lpr",  "fut-r",   "edd-nr",  "edd-nir",
                                           "edd-lpr", "edd-r",    "fcfs-nr",  "fcfs-nir", "fcfs-lpr", "fcfs-r",
                                           "rand-nr", "rand-nir", "awe-2",    "awe-3"};
    const std::vector<std::string> grouped{"edd-gr", "fcfs-gr", "edd-nr", "fcfs-nir"};
    std::mt19937_64 g(20240601);
    long long jobs_checked = 0;
    int runs = 0;
    int bad_runs = 0;
    std::string first_bad;
    for (int r = 0; r < 10000; ++r) {
        const bool distributed = r % 10 == 9;
        const int groups = distributed ? 2 : 1;
        ServerConfig cfg;
        const int per_group = std::uniform_int_distribution<int>(1, 3)(g);
        for (int h = 0; h < groups; ++h) {
            // Group rules need one service class per group.
            const auto group_law = random_law(g, false);
            for (int l = 0; l < per_group; ++l) {
                ServerSpec s;
                s.service = distributed ? group_law : random_law(g, false);
                s.overhead = std::bernoulli_distribution(0.5)(g) ? ServiceDistribution::zero() : random_law(g, true);
                s.group = h;
                s.id = h * per_group + l;
                cfg.servers.push_back(s);
            }
        }
        WorkloadSpec w;
        w.n = std::uniform_int_distribution<int>(1, 30)(g);
        w.arrivals = std::bernoulli_distribution(0.5)(g) ? ArrivalModel{PairedBurst{1.0}} : ArrivalModel{Poisson{1.0}};
        w.sizes = TwoPoint{1, std::uniform_int_distribution<int>(2, 6)(g), 0.5};
        w.dues = ArrivalPlusTwoPoint{5.0, 0.5};
        if (distributed) w.split = GroupSplit{groups, GroupSplit::Mode::PerTask};
        const double cap = static_cast<double>(cfg.m());
        w = with_rate(w, calibrate_lambda(std::uniform_real_distribution<double>(0.2, 0.9)(g), w, cap));
        const auto seed = static_cast<std::uint64_t>(r + 1);
        const auto jobs = generate_jobs(w, seed);
        Trace trace;
        std::string name;
        if (distributed) {
            name = grouped[static_cast<std::size_t>(r / 10) % grouped.size()];
            const auto topo = GroupTopology::from_servers(cfg);
            const auto constraint = LocalityConstraint::from_jobs(jobs, LocalityConstraint::Mode::PerTask);
            trace = run_distributed(jobs, cfg, topo, constraint, parse_group_rule(name), seed).merged;
        } else {
            name = central[static_cast<std::size_t>(r) % central.size()];
            trace = run_simulation(jobs, cfg, parse_policy(name), seed).trace;
        }
        ++runs;
        bool ok = trace.finished;
        for (int i = 0; ok && i < jobs.n(); ++i) {
            const auto ii = static_cast<std::size_t>(i);
            ok = !std::isnan(trace.V[ii]) && !std::isnan(trace.C[ii]) && trace.V[ii] <= trace.C[ii];
            ++jobs_checked;
        }
        if (!ok) {
            ++bad_runs;
            if (first_bad.empty()) first_bad = name + " seed " + std::to_string(seed);
        }
    }
    std::ostringstream os;
    os << runs << " runs, " << jobs_checked << " jobs, " << bad_runs << " runs with V > C or unfinished";
    if (!first_bad.empty()) os << " (first: " << first_bad << ")";
    return {bad_runs == 0, os.str()};
}

Outcome criterion2()
{
    auto cfg = resolve_config("fig5");
    cfg.workload.n = 500;
    cfg.seeds = seed_range(1, 20);
    const auto r = verify_gap(cfg, "fut-nr", BoundKind::NbuSum, 0.8);
    const bool bounds_ok = std::abs(r.bound - 2.146) < 5e-4 && std::abs(r.closed_form - 3.498) < 5e-4;
    const bool pass = bounds_ok && r.gap.count == 20 && r.gap.high <= 2.146 && r.gap.high <= 3.498;
    std::ostringstream os;
    os << "gap " << r.gap.mean << " upper CI " << r.gap.high << " vs per-job bound " << r.bound << " and closed form "
       << r.closed_form;
    return {pass, os.str()};
}

Outcome criterion3()
{
    auto cfg = resolve_config("fig7");
    cfg.workload.n = 500;
    cfg.seeds = seed_range(1, 20);
    const auto r = verify_gap(cfg, "fut-r", BoundKind::Exponential, 0.8);
    std::ostringstream os;
    os << "gap " << r.gap.mean << " CI [" << r.gap.low << ", " << r.gap.high << "] vs bound " << r.bound;
    return {r.gap.count == 20 && r.gap.high <= 1.0 / 3.0, os.str()};
}

Outcome criterion4()
{
    const std::vector<std::string> policies{"fut-nr", "fut-nir", "fut-r", "edd-nr", "edd-nir",
                                            "edd-r",  "fcfs-nr", "fcfs-nir", "fcfs-r"};
    const std::vector<Proposition> props{Proposition::Remaining,        Proposition::Unassigned,
                                         Proposition::DueRemaining,     Proposition::DueUnassigned,
                                         Proposition::ArrivalRemaining, Proposition::ArrivalUnassigned};
    const std::vector<double> mu{1.4, 1.0, 0.6};
    int pairs = 0;
    int hypotheses = 0;
    int violations = 0;
    std::string first;
    for (int s = 1; s <= 200; ++s) {
        std::mt19937_64 g(static_cast<std::uint64_t>(s) * 7919u);
        ServerConfig cfg;
        const int family = s % 3;
        for (int l = 0; l < 3; ++l) {
            ServerSpec spec;
            const double m = mu[static_cast<std::size_t>(l)];
            if (family == 0)
                spec.service = ServiceDistribution::shifted_exponential(1.0 / (3.0 * m), 1.5 * m);
            else if (family == 1)
                spec.service = ServiceDistribution::lomax(14.0 / 3.0, std::vector<double>{7, 5, 3}[static_cast<std::size_t>(l)]);
            else
                spec.service = ServiceDistribution::exponential(m);
            spec.id = l;
            cfg.servers.push_back(spec);
        }
        WorkloadSpec w;
        w.n = 10 + s % 41;
        w.sizes = TwoPoint{1, 5, 0.5};
        w.dues = ArrivalPlusTwoPoint{10.0, 0.5};
        w = with_rate(w, calibrate_lambda(0.7, w, 3.0));
        const auto jobs = generate_jobs(w, static_cast<std::uint64_t>(s));
        auto ip = std::uniform_int_distribution<std::size_t>(0, policies.size() - 1)(g);
        RunOptions opt;
        if (s % 2 == 0) {
            // Half the pairs put the policy favoured for the service class first.
            const std::size_t prio = std::uniform_int_distribution<std::size_t>(0, 2)(g);
            const std::size_t disc = family == 0 ? std::uniform_int_distribution<std::size_t>(0, 1)(g) : 2;
            ip = prio * 3 + disc;
            opt.coupling = family == 0 ? Coupling::Residual : Coupling::CompletionClock;
        }
        auto ipi = std::uniform_int_distribution<std::size_t>(0, policies.size() - 2)(g);
        if (ipi >= ip) ++ipi;
        const auto [rp, rpi] = coupled_run(jobs, cfg, parse_policy(policies[ip]), parse_policy(policies[ipi]),
                                           static_cast<std::uint64_t>(s), opt);
        if (!rp.trace.finished || !rpi.trace.finished) continue;
        ++pairs;
        for (auto prop : props) {
            const auto [h, c] = evaluate_proposition(prop, rp, rpi);
            if (!h) continue;
            ++hypotheses;
            if (!c) {
                ++violations;
                if (first.empty())
                    first = policies[ip] + " vs " + policies[ipi] + " " + to_string(prop) + " seed " + std::to_string(s);
            }
        }
    }
    std::ostringstream os;
    os << pairs << " coupled pairs, " << hypotheses << " hypotheses held, " << violations << " implication violations";
    if (!first.empty()) os << " (first: " << first << ")";
    return {pairs == 200 && violations == 0, os.str()};
}

Outcome criterion5()
{
    auto cfg = resolve_config("fig6");
    cfg.workload.n = 500;
    cfg.run.coupling = Coupling::DrawIndex;
    const std::vector<std::string> others{"fut-nr", "fut-nir", "fcfs-nr"};
    const auto davg = parse_metric("d_avg");
    std::vector<double> best;
    std::vector<std::vector<double>> rest(others.size());
    int unfinished = 0;
    for (std::uint64_t s = 1; s <= 1000; ++s) {
        const auto jobs = jobs_for(cfg, 0.8, s);
        const auto a = arrivals(jobs);
        const auto d = dues(jobs);
        const auto tr = run_policy(cfg, jobs, "fut-r", s);
        unfinished += !tr.finished;
        best.push_back(compute_metric(davg, tr.C, a, d));
        for (std::size_t k = 0; k < others.size(); ++k) {
            const auto t = run_policy(cfg, jobs, others[k], s);
            unfinished += !t.finished;
            rest[k].push_back(compute_metric(davg, t.C, a, d));
        }
    }
    bool pass = unfinished == 0;
    std::ostringstream os;
    for (std::size_t k = 0; k < others.size(); ++k) {
        const auto rep = empirical_st_dominance(best, rest[k], 0.99);
        pass = pass && rep.verdict == Dominance::ALeB;
        os << "fut-r vs " << others[k] << ": " << to_string(rep.verdict) << " (excess " << rep.excess_a << " / "
           << rep.excess_b << ", band " << rep.band << ")  ";
    }
    os << unfinished << " unfinished";
    return {pass, os.str()};
}

Outcome criterion6()
{
    auto cfg = resolve_config("fig6");
    cfg.workload.n = 100;
    cfg.workload.sizes = TwoPoint{1, 10, 0.5};
    cfg.workload.dues = ArrivalPlusTwoPoint{50.0, 0.5};
    cfg.run.coupling = Coupling::CompletionClock;
    const std::vector<std::string> baselines{"fut-nr", "edd-nr", "fcfs-nr", "rand-nr"};
    std::ostringstream os;
    bool pass = true;
    for (const auto& b : baselines) {
        int ok = 0;
        for (std::uint64_t s = 1; s <= 200; ++s) {
            const auto jobs = jobs_for(cfg, 0.8, s);
            const auto [rr, rb] = coupled_run(jobs, cfg.servers, parse_policy("fut-r"), parse_policy(b), s, cfg.run);
            if (rr.trace.finished && rb.trace.finished && check_work_efficiency(rr.trace, rb.trace).holds) ++ok;
        }
        pass = pass && ok == 200;
        os << b << " " << ok << "/200  ";
    }
    return {pass, os.str()};
}

Outcome criterion7()
{
    auto cfg = resolve_config("fig5");
    cfg.workload.n = 100;
    cfg.run.coupling = Coupling::Residual;
    const std::vector<std::string> baselines{"rand-nr", "rand-nir", "awe-2"};
    std::ostringstream os;
    bool pass = true;
    for (const auto& b : baselines) {
        int ok = 0;
        for (std::uint64_t s = 1; s <= 200; ++s) {
            const auto jobs = jobs_for(cfg, 0.8, s);
            const auto [rp, rb] = coupled_run(jobs, cfg.servers, parse_policy("fut-nr"), parse_policy(b), s, cfg.run);
            if (rp.trace.finished && rb.trace.finished && check_weak_work_efficiency(rp.trace, rb.trace, rp.trajectory).holds)
                ++ok;
        }
        pass = pass && ok >= 190;
        os << b << " " << ok << "/200  ";
    }
    return {pass, os.str()};
}

Outcome criterion8()
{
    const auto se = ServiceDistribution::shifted_exponential(1.0 / 3.0, 1.5);
    const auto lo = ServiceDistribution::lomax(14.0 / 3.0, 3.0);
    const auto ex = ServiceDistribution::exponential(1.0);
    const auto se_nbu = check_nbu(se), se_nwu = check_nwu(se);
    const auto lo_nbu = check_nbu(lo), lo_nwu = check_nwu(lo);
    const auto ex_nbu = check_nbu(ex), ex_nwu = check_nwu(ex);
    const bool pass = se_nbu.holds && !se_nwu.holds && !lo_nbu.holds && lo_nwu.holds && ex_nbu.holds && ex_nwu.holds &&
                      ex_nbu.max_abs_slack <= 1e-9 && ex_nwu.max_abs_slack <= 1e-9;
    std::ostringstream os;
    os << "shifted-exp NBU " << se_nbu.holds << " NWU " << se_nwu.holds << "; Lomax NBU " << lo_nbu.holds << " NWU "
       << lo_nwu.holds << "; exponential NBU " << ex_nbu.holds << " NWU " << ex_nwu.holds << " slack "
       << std::max(ex_nbu.max_abs_slack, ex_nwu.max_abs_slack);
    return {pass, os.str()};
}

std::vector<double> metric_per_seed(const ExperimentConfig& cfg, const std::string& policy, const MetricSpec& m, Basis on,
                                    double rho)
{
    std::vector<double> out;
    for (auto s : cfg.seeds) {
        const auto jobs = jobs_for(cfg, rho, s);
        const auto t = run_policy(cfg, jobs, policy, s);
        if (!t.finished) throw IntegrityError(policy + " did not finish for seed " + std::to_string(s));
        out.push_back(compute_metric(m, on == Basis::C ? t.C : t.V, arrivals(jobs), dues(jobs)));
    }
    return out;
}

Outcome criterion9()
{
    const auto davg = parse_metric("d_avg");
    std::ostringstream os;
    bool pass = true;

    auto f5 = resolve_config("fig5");
    f5.workload.n = 500;
    f5.seeds = seed_range(1, 20);
    const auto nr = metric_per_seed(f5, "fut-nr", davg, Basis::C, 0.8);
    const auto nir = metric_per_seed(f5, "fut-nir", davg, Basis::C, 0.8);
    const auto fcfs = metric_per_seed(f5, "fcfs-nr", davg, Basis::C, 0.8);
    const auto fcfsr = metric_per_seed(f5, "fcfs-r", davg, Basis::C, 0.8);
    const bool a = weakly_below(nr, nir) && weakly_below(nir, fcfs) && strictly_below(nr, fcfsr);
    os << "fig5 " << (a ? "ok" : "FAIL") << " (fut-nr " << mean_ci(nr).mean << ", fut-nir " << mean_ci(nir).mean
       << ", fcfs-nr " << mean_ci(fcfs).mean << ", fcfs-r " << mean_ci(fcfsr).mean << ")  ";
    pass = pass && a;

    auto f6 = resolve_config("fig6");
    f6.workload.n = 500;
    f6.seeds = seed_range(1, 20);
    const auto r = metric_per_seed(f6, "fut-r", davg, Basis::C, 0.8);
    bool b = true;
    os << "fig6 fut-r " << mean_ci(r).mean;
    for (const std::string other : {"fut-nr", "fut-nir", "fcfs-nr"}) {
        const auto v = metric_per_seed(f6, other, davg, Basis::C, 0.8);
        b = b && strictly_below(r, v);
        os << ", " << other << " " << mean_ci(v).mean;
    }
    os << (b ? " ok  " : " FAIL  ");
    pass = pass && b;

    auto f17 = resolve_config("fig17");
    f17.seeds = seed_range(1, 20);
    const auto lmax = parse_metric("l_max");
    const auto lb = metric_per_seed(f17, "edd-gr", lmax, Basis::V, 0.8);
    bool c = true;
    for (const auto& p : f17.policies) c = c && weakly_below(lb, metric_per_seed(f17, p, lmax, Basis::C, 0.8));
    os << "fig17 lower bound " << mean_ci(lb).mean << (c ? " ok" : " FAIL");
    pass = pass && c;
    return {pass, os.str()};
}

Outcome criterion10()
{
    const auto stats = oracle::compare_all_small_instances();
    std::mt19937_64 g(99);
    int mismatches = 0;
    int positives = 0;
    for (int t = 0; t < 10000; ++t) {
        const int n = std::uniform_int_distribution<int>(1, 8)(g);
        std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
        for (auto& v : y) v = std::uniform_int_distribution<int>(0, 9)(g);
        if (t % 2 == 0) {
            x = oracle::robin_hood(y, g);
        } else {
            for (auto& v : x) v = std::uniform_int_distribution<int>(0, 9)(g);
        }
        const bool m1 = majorizes(x, y), m2 = oracle::majorized(x, y);
        const bool b1 = weakly_majorized_below(x, y), b2 = oracle::weak_below(x, y);
        const bool a1 = weakly_majorized_above(x, y), a2 = oracle::weak_above(x, y);
        mismatches += (m1 != m2) + (b1 != b2) + (a1 != a2);
        positives += m2;
    }
    std::ostringstream os;
    os << stats.instances << " engine instances, " << stats.mismatches << " mismatches";
    if (!stats.first_mismatch.empty()) os << " (first: " << stats.first_mismatch << ")";
    os << "; majorization: 10000 vector pairs (" << positives << " majorized), " << mismatches << " mismatches";
    return {stats.mismatches == 0 && stats.instances > 0 && mismatches == 0, os.str()};
}

}  // namespace

int main(int argc, char** argv)
{
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"V <= C on randomized runs", criterion1},
        {"NBU gap bound (fut-nr)", criterion2},
        {"exponential gap bound (fut-r)", criterion3},
        {"ordering implication suite", criterion4},
        {"NWU stochastic dominance of fut-r", criterion5},
        {"work-efficiency coupling under Lomax", criterion6},
        {"weak work-efficiency vs randomized baselines", criterion7},
        {"distribution classification", criterion8},
        {"figure-shape corroboration", criterion9},
        {"small-instance oracle equivalence", criterion10},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (only != 0 && only != id) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %-4s %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
