#include "doctest.h"

#include "replisim/errors.hpp"
#include "replisim/harness.hpp"
#include "replisim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace replisim;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "name": "small",
  "workload": {
    "n": 40,
    "arrivals": {"model": "paired_burst"},
    "sizes": {"model": "two_point", "values": [1, 10], "p": 0.5},
    "dues": {"model": "arrival"}
  },
  "servers": [
    {"service": {"family": "exponential", "rate": 1.4}},
    {"service": {"family": "exponential", "rate": 1.0}},
    {"service": {"family": "exponential", "rate": 0.6}}
  ],
  "capacity": "no_replication",
  "policies": ["fcfs-nr", "fut-nr"],
  "metrics": ["d_avg", "d_max"],
  "basis": ["C", "V"],
  "lower_bound": "fut-nr",
  "seeds": {"first": 1, "count": 4},
  "sweep": {"rho": [0.3, 0.6]}
})";

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("replisim_unit_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("gap bounds against hand values")
{
    const std::vector<double> mu{1.4, 1.0, 0.6};
    // 1/0.6 + 1/1.6 + 1/3
    CHECK(gap_bound(mu, std::vector<int>{10}, 3).per_job_sum == doctest::Approx(2.625));
    CHECK(gap_bound(mu, std::vector<int>{1}, 3).per_job_sum == doctest::Approx(1.0 / 0.6));
    CHECK(gap_bound(mu, std::vector<int>{1, 10}, 3).closed_form == doctest::Approx((std::log(3.0) + 1.0) / 0.6));
    CHECK(gap_bound(mu, SizeModel{TwoPoint{1, 10, 0.5}}, 3).per_job_sum == doctest::Approx(0.5 * (1.0 / 0.6) + 0.5 * 2.625));
    CHECK(gap_bound(mu, std::vector<int>{2}, 3).per_job_sum == doctest::Approx(1.0 / 0.6 + 1.0 / 1.6));
    CHECK(gap_bound_exponential(mu) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(gap_bound(mu, std::vector<int>{}, 3), DomainError);
}

TEST_CASE("mean and normal interval")
{
    const auto ci = mean_ci({1.0, 2.0, 3.0, 4.0});
    CHECK(ci.mean == doctest::Approx(2.5));
    const double half = 1.959963984540054 * std::sqrt(5.0 / 3.0) / 2.0;
    CHECK(ci.low == doctest::Approx(2.5 - half));
    CHECK(ci.high == doctest::Approx(2.5 + half));
    CHECK(ci.count == 4);
    const auto one = mean_ci({7.0});
    CHECK(one.low == 7.0);
    CHECK(one.high == 7.0);
}

TEST_CASE("config parsing")
{
    const auto c = parse_config(kSmall);
    CHECK(c.name == "small");
    CHECK(c.servers.m() == 3);
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4});
    CHECK(c.policies.size() == 2);
    CHECK(c.metrics.size() == 2);
    CHECK(lambda_for(c, 0.8) == doctest::Approx(0.8 * 3.0 / 5.5));
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    std::string bad = kSmall;
    bad.replace(bad.find("fcfs-nr"), 7, "fcfs-zz");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = kSmall;
    bad.replace(bad.find("\"exponential\", \"rate\": 1.0"), 26, "\"exponential\", \"rate\": -1");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("every preset loads")
{
    const auto names = preset_names();
    CHECK(names.size() == 14);
    for (const auto& n : names) CHECK_NOTHROW(resolve_config(n));
    CHECK_THROWS_AS(resolve_config("no_such_preset"), ConfigError);
}

TEST_CASE("gap verification rejects mismatched policies and laws")
{
    const auto c = parse_config(kSmall);
    CHECK_THROWS_AS(verify_gap(c, "fcfs-nr", BoundKind::Exponential, 0.5), ConfigError);
    CHECK_THROWS_AS(verify_gap(c, "fut-nr", BoundKind::Exponential, 0.5), ConfigError);
    CHECK_NOTHROW(verify_gap(c, "fut-r", BoundKind::Exponential, 0.5));
    CHECK_THROWS_AS(verify_gap(resolve_config("fig6"), "fut-nr", BoundKind::NbuSum, 0.5), ConfigError);
    CHECK_THROWS_AS(verify_gap(resolve_config("fig17"), "fut-nr", BoundKind::NbuSum, 0.5), ConfigError);
}

TEST_CASE("experiment series and rows")
{
    const auto c = parse_config(kSmall);
    const auto r = run_experiment(c);
    std::set<std::pair<std::string, std::string>> series;
    for (const auto& s : r.summary) series.insert({s.policy, s.metric});
    // two policies times two metrics times two bases, plus two lower-bound series
    CHECK(series.size() == 10);
    CHECK(series.count({"lower-bound", "d_avg"}) == 1);
    CHECK(series.count({"fut-nr", "d_max[V]"}) == 1);
    CHECK(r.rows.size() == 10u * 2u * 4u);
    for (const auto& s : r.summary) CHECK(s.count == 4);
    CHECK_FALSE(r.ccdf_mode);
}

TEST_CASE("a single seed reproduces the direct metric")
{
    auto c = parse_config(kSmall);
    c.seeds = {3};
    const auto r = run_experiment(c);
    const auto jobs = jobs_for(c, 0.6, 3);
    const auto t = run_policy(c, jobs, "fut-nr", 3);
    std::vector<double> a, d;
    for (const auto& j : jobs.jobs) {
        a.push_back(j.arrival);
        d.push_back(j.due);
    }
    const double direct = compute_metric(parse_metric("d_avg"), t.C, a, d);
    const double direct_v = compute_metric(parse_metric("d_avg"), t.V, a, d);
    for (const auto& s : r.summary) {
        if (s.sweep != 0.6) continue;
        if (s.policy == "fut-nr" && s.metric == "d_avg") CHECK(s.mean == direct);
        if (s.policy == "lower-bound" && s.metric == "d_avg") CHECK(s.mean == direct_v);
    }
}

TEST_CASE("seed order does not change the summary")
{
    auto c = parse_config(kSmall);
    const auto a = run_experiment(c);
    c.seeds = {4, 2, 1, 3};
    const auto b = run_experiment(c);
    REQUIRE(a.summary.size() == b.summary.size());
    for (std::size_t i = 0; i < a.summary.size(); ++i) {
        CHECK(a.summary[i].policy == b.summary[i].policy);
        CHECK(a.summary[i].mean == b.summary[i].mean);
        CHECK(a.summary[i].ci_high == b.summary[i].ci_high);
    }
}

TEST_CASE("outputs are byte-identical across reruns")
{
    const auto c = parse_config(kSmall);
    const auto d1 = scratch("rerun1"), d2 = scratch("rerun2");
    emit_outputs(run_experiment(c), d1.string());
    emit_outputs(run_experiment(c), d2.string());
    for (const char* f : {"results.csv", "summary.csv", "plot.py"}) {
        REQUIRE(fs::exists(d1 / f));
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    CHECK(slurp(d1 / "results.csv").rfind("experiment,policy,sweep,seed,metric,value\n", 0) == 0);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("an empty report writes header-only files")
{
    ExperimentReport r;
    r.name = "empty";
    const auto dir = scratch("empty");
    emit_outputs(r, dir.string());
    CHECK(slurp(dir / "results.csv") == "experiment,policy,sweep,seed,metric,value\n");
    CHECK(slurp(dir / "summary.csv") == "policy,sweep,metric,count,mean,ci_low,ci_high,unstable\n");
    fs::remove_all(dir);
}

TEST_CASE("CCDF mode")
{
    std::string text = kSmall;
    text.replace(text.find("\"rho\": [0.3, 0.6]"), 17, "\"ccdf\": {\"rho\": 0.5}");
    const auto c = parse_config(text);
    const auto r = run_experiment(c);
    CHECK(r.ccdf_mode);
    REQUIRE_FALSE(r.ccdf.empty());
    for (const auto& p : r.ccdf) {
        CHECK(p.ccdf >= 0.0);
        CHECK(p.ccdf < 1.0);
    }
    // the largest value of each series has an empty tail
    std::map<std::pair<std::string, std::string>, CcdfPoint> last;
    for (const auto& p : r.ccdf) {
        auto key = std::make_pair(p.policy, p.metric);
        if (!last.count(key) || p.t > last[key].t) last[key] = p;
    }
    for (const auto& [k, p] : last) CHECK(p.ccdf == 0.0);
    const auto dir = scratch("ccdf");
    emit_outputs(r, dir.string());
    CHECK(fs::exists(dir / "ccdf.csv"));
    fs::remove_all(dir);
}

TEST_CASE("per-task locality flags metrics without a guarantee")
{
    auto c = resolve_config("fig17");
    c.workload.n = 20;
    c.seeds = {1};
    c.sweep.rho = {0.3};
    c.metrics = {parse_metric("l_max"), parse_metric("d_avg")};
    const auto r = run_experiment(c);
    int flagged = 0;
    for (const auto& w : r.warnings) flagged += w.find("d_avg") != std::string::npos;
    CHECK(flagged == 1);
    for (const auto& w : r.warnings) CHECK(w.find("l_max") == std::string::npos);
}

TEST_CASE("ordering suite on a small preset")
{
    auto c = resolve_config("fig6");
    c.seeds = {1, 2, 3};
    const auto s = ordering_suite(c, {{"fut-nr", "fcfs-nr"}}, {Proposition::Remaining, Proposition::WorkEfficiency});
    REQUIRE(s.entries.size() == 2);
    for (const auto& e : s.entries) CHECK(e.runs == 3);
    CHECK(s.implication_violations == 0);
    CHECK(parse_proposition("weak_work_efficiency") == Proposition::WeakWorkEfficiency);
    CHECK(to_string(Proposition::DueUnassigned) == "due_unassigned");
    CHECK_THROWS_AS(parse_proposition("nope"), ConfigError);
}

}
