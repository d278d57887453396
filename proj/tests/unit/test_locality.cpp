#include "doctest.h"

#include "replisim/engine.hpp"
#include "replisim/errors.hpp"
#include "replisim/locality.hpp"

#include <algorithm>

using namespace replisim;

namespace {

ServerConfig grouped_servers()
{
    ServerConfig c;
    c.servers.push_back(ServerSpec{ServiceDistribution::shifted_exponential(0.2, 1.5), ServiceDistribution::zero(), 0, -1});
    c.servers.push_back(ServerSpec{ServiceDistribution::shifted_exponential(0.3, 1.0), ServiceDistribution::zero(), 0, -1});
    c.servers.push_back(ServerSpec{ServiceDistribution::lomax(2.0, 3.0), ServiceDistribution::zero(), 1, -1});
    c.servers.push_back(ServerSpec{ServiceDistribution::exponential(1.0), ServiceDistribution::zero(), 2, -1});
    return c;
}

}  // namespace

TEST_SUITE("locality") {

TEST_CASE("topology groups servers and tags each group")
{
    const auto t = GroupTopology::from_servers(grouped_servers());
    REQUIRE(t.g() == 3);
    CHECK(t.members[0] == std::vector<int>{0, 1});
    CHECK(t.tags[0] == DistClass::NBU);
    CHECK(t.tags[1] == DistClass::NWU);
    CHECK(t.tags[2] == DistClass::Exponential);
    CHECK_NOTHROW(t.validate(4));
    CHECK_THROWS_AS(t.validate(5), ConfigError);
    GroupTopology bad = t;
    bad.members[1].push_back(0);
    CHECK_THROWS_AS(bad.validate(4), ConfigError);
}

TEST_CASE("split_job per task and per job")
{
    const JobSpec j{7, 1.0, 5, 3.0, {2, 0, 3}};
    JobSet js;
    js.jobs = {j};
    const auto per_task = LocalityConstraint::from_jobs(js, LocalityConstraint::Mode::PerTask);
    const auto subs = split_job(j, 0, per_task, 3);
    REQUIRE(subs.size() == 2);
    CHECK(subs[0].group == 0);
    CHECK(subs[0].size == 2);
    CHECK(subs[1].group == 2);
    CHECK(subs[1].size == 3);
    CHECK(subs[1].arrival == 1.0);
    CHECK(subs[1].due == 3.0);
    CHECK_THROWS_AS(LocalityConstraint::from_jobs(js, LocalityConstraint::Mode::PerJob), ConfigError);

    LocalityConstraint per_job;
    per_job.mode = LocalityConstraint::Mode::PerJob;
    per_job.job_group = {1};
    const auto one = split_job(j, 0, per_job, 3);
    REQUIRE(one.size() == 1);
    CHECK(one[0].group == 1);
    CHECK(one[0].size == 5);
    per_job.job_group = {4};
    CHECK_THROWS_AS(split_job(j, 0, per_job, 3), ConfigError);
}

TEST_CASE("group rules")
{
    const auto gr = parse_group_rule("edd-gr");
    CHECK(gr.name() == "edd-gr");
    CHECK(gr.local_policy(DistClass::NBU).discipline == Discipline::NIR);
    CHECK(gr.local_policy(DistClass::NWU).discipline == Discipline::R);
    CHECK(gr.local_policy(DistClass::Exponential).discipline == Discipline::R);
    CHECK(gr.local_policy(DistClass::NWU).priority == Priority::EDD);
    CHECK_THROWS_AS(gr.local_policy(DistClass::Neither), ConfigError);
    const auto fixed = parse_group_rule("fcfs-nr");
    CHECK(fixed.kind == GroupRule::Kind::Fixed);
    CHECK(fixed.local_policy(DistClass::NWU).name() == "fcfs-nr");
    CHECK_THROWS_AS(parse_group_rule("bogus"), ConfigError);
}

TEST_CASE("one group is the centralized system")
{
    ServerConfig servers;
    for (double mu : {1.4, 1.0, 0.6}) servers.servers.push_back(ServerSpec{ServiceDistribution::exponential(mu), ServiceDistribution::zero(), 0, -1});
    WorkloadSpec w;
    w.n = 60;
    w.sizes = TwoPoint{1, 10, 0.5};
    const auto jobs = generate_jobs(with_rate(w, calibrate_lambda(0.6, w, 3.0)), 1);
    const auto topo = GroupTopology::from_servers(servers);
    const auto constraint = LocalityConstraint::from_jobs(jobs, LocalityConstraint::Mode::PerTask);
    GroupRule rule = parse_group_rule("fut-nir");
    const auto d = run_distributed(jobs, servers, topo, constraint, rule, 4);
    const auto c = run_simulation(jobs, servers, parse_policy("fut-nir"), 4);
    CHECK(d.finished);
    CHECK(d.merged.C == c.trace.C);
    CHECK(d.merged.V == c.trace.V);
    CHECK(d.merged.copies == c.trace.copies);
}

TEST_CASE("fut-gr needs per-job constraints")
{
    const auto servers = grouped_servers();
    JobSet js;
    js.jobs = {JobSpec{1, 0.0, 3, 0.0, {1, 1, 1}}};
    const auto topo = GroupTopology::from_servers(servers);
    const auto c = LocalityConstraint::from_jobs(js, LocalityConstraint::Mode::PerTask);
    CHECK_THROWS_AS(run_distributed(js, servers, topo, c, parse_group_rule("fut-gr"), 1), ConfigError);
    CHECK_NOTHROW(run_distributed(js, servers, topo, c, parse_group_rule("edd-gr"), 1));
}

TEST_CASE("merged times take the latest sub-job")
{
    const auto servers = grouped_servers();
    JobSet js;
    js.jobs = {JobSpec{1, 0.0, 4, 1.0, {1, 2, 1}}, JobSpec{2, 0.5, 2, 2.0, {0, 0, 2}}};
    const auto topo = GroupTopology::from_servers(servers);
    const auto c = LocalityConstraint::from_jobs(js, LocalityConstraint::Mode::PerTask);
    const auto r = run_distributed(js, servers, topo, c, parse_group_rule("edd-gr"), 3);
    REQUIRE(r.finished);
    const auto m = merge_subjob_times(r.sub, js);
    CHECK(m.C[0] == std::max({r.sub.C[0][0], r.sub.C[0][1], r.sub.C[0][2]}));
    CHECK(m.V[0] == std::max({r.sub.V[0][0], r.sub.V[0][1], r.sub.V[0][2]}));
    // Job 2 has no tasks in groups 1 and 2, whose zero entries must be ignored.
    CHECK(m.C[1] == r.sub.C[1][2]);
    CHECK(m.D[1] == doctest::Approx(m.C[1] - 0.5));
    CHECK(m.L[1] == doctest::Approx(m.C[1] - 2.0));
    CHECK(r.merged.C == m.C);
    JobSet other = js;
    other.jobs.pop_back();
    CHECK_THROWS_AS(merge_subjob_times(r.sub, other), JobSetMismatch);
}

}
