#include "replisim/locality.hpp"

#include "replisim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace replisim {

void GroupTopology::validate(int m) const
{
    if (members.empty()) throw ConfigError("topology: need at least one group");
    if (tags.size() != members.size()) throw ConfigError("topology: one class tag per group");
    std::vector<int> seen(static_cast<std::size_t>(m), 0);
    for (const auto& grp : members) {
        if (grp.empty()) throw ConfigError("topology: empty group");
        for (int l : grp) {
            if (l < 0 || l >= m) throw ConfigError("topology: server index out of range");
            if (seen[static_cast<std::size_t>(l)]++) throw ConfigError("topology: server in two groups");
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ConfigError("topology: server not in any group");
}

GroupTopology GroupTopology::from_servers(const ServerConfig& servers)
{
    std::map<int, std::vector<int>> by_group;
    for (int l = 0; l < servers.m(); ++l) by_group[servers.servers[static_cast<std::size_t>(l)].group].push_back(l);
    GroupTopology t;
    for (auto& [g, members] : by_group) {
        DistClass tag = classify(servers.servers[static_cast<std::size_t>(members.front())].service);
        for (int l : members) {
            const DistClass c = classify(servers.servers[static_cast<std::size_t>(l)].service);
            if (c != tag) {
                // mixed classes: exponential is both NBU and NWU, anything else is unclassified
                if (tag == DistClass::Exponential)
                    tag = c;
                else if (c != DistClass::Exponential)
                    tag = DistClass::Neither;
            }
        }
        t.members.push_back(std::move(members));
        t.tags.push_back(tag);
    }
    return t;
}

LocalityConstraint LocalityConstraint::from_jobs(const JobSet& jobs, Mode mode)
{
    LocalityConstraint c;
    c.mode = mode;
    const int g = jobs.groups();
    for (const auto& j : jobs.jobs) {
        if (mode == Mode::PerTask) {
            std::vector<int> map;
            if (g == 0) {
                map.assign(static_cast<std::size_t>(j.size), 0);
            } else {
                for (int h = 0; h < g; ++h) map.insert(map.end(), static_cast<std::size_t>(j.group_sizes[static_cast<std::size_t>(h)]), h);
            }
            c.task_group.push_back(std::move(map));
        } else {
            int u = 0;
            if (g > 0) {
                int nonzero = 0;
                for (int h = 0; h < g; ++h)
                    if (j.group_sizes[static_cast<std::size_t>(h)] > 0) {
                        u = h;
                        ++nonzero;
                    }
                if (nonzero != 1) throw ConfigError("per-job locality: job " + std::to_string(j.id) + " spans several groups");
            }
            c.job_group.push_back(u);
        }
    }
    return c;
}

std::vector<SubJob> split_job(const JobSpec& job, int index, const LocalityConstraint& constraint, int groups)
{
    std::vector<int> count(static_cast<std::size_t>(groups), 0);
    if (constraint.mode == LocalityConstraint::Mode::PerJob) {
        if (index < 0 || index >= static_cast<int>(constraint.job_group.size()))
            throw ConfigError("locality: job " + std::to_string(job.id) + " has no group");
        const int u = constraint.job_group[static_cast<std::size_t>(index)];
        if (u < 0 || u >= groups) throw ConfigError("locality: job " + std::to_string(job.id) + " mapped to a missing group");
        count[static_cast<std::size_t>(u)] = job.size;
    } else {
        if (index < 0 || index >= static_cast<int>(constraint.task_group.size()) ||
            static_cast<int>(constraint.task_group[static_cast<std::size_t>(index)].size()) != job.size)
            throw ConfigError("locality: tasks of job " + std::to_string(job.id) + " are not all mapped");
        for (int h : constraint.task_group[static_cast<std::size_t>(index)]) {
            if (h < 0 || h >= groups) throw ConfigError("locality: task mapped to a missing group");
            ++count[static_cast<std::size_t>(h)];
        }
    }
    std::vector<SubJob> out;
    for (int h = 0; h < groups; ++h)
        if (count[static_cast<std::size_t>(h)] > 0) out.push_back(SubJob{h, count[static_cast<std::size_t>(h)], job.arrival, job.due});
    return out;
}

std::string GroupRule::name() const
{
    if (kind == Kind::Fixed) return fixed.name();
    return to_string(priority) + "-gr";
}

PolicyHandle GroupRule::local_policy(DistClass tag) const
{
    if (kind == Kind::Fixed) return fixed;
    PolicyHandle h;
    h.priority = priority;
    switch (tag) {
    case DistClass::NBU: h.discipline = nbu_discipline; break;
    case DistClass::NWU: h.discipline = Discipline::R; break;
    case DistClass::Exponential: h.discipline = exponential_discipline; break;
    case DistClass::Neither: throw ConfigError("group rule: group without an NBU/NWU class tag");
    }
    return h;
}

GroupRule parse_group_rule(const std::string& name)
{
    GroupRule r;
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s.size() > 3 && s.compare(s.size() - 3, 3, "-gr") == 0) {
        r.kind = GroupRule::Kind::GR;
        const auto head = s.substr(0, s.size() - 3);
        if (head == "fut")
            r.priority = Priority::FUT;
        else if (head == "edd")
            r.priority = Priority::EDD;
        else if (head == "fcfs")
            r.priority = Priority::FCFS;
        else
            throw ConfigError("unknown group policy '" + name + "'");
        return r;
    }
    r.kind = GroupRule::Kind::Fixed;
    r.fixed = parse_policy(name);
    return r;
}

DistributedResult run_distributed(const JobSet& jobs, const ServerConfig& servers, const GroupTopology& topology,
                                  const LocalityConstraint& constraint, const GroupRule& rule, std::uint64_t seed,
                                  const RunOptions& options)
{
    servers.validate();
    topology.validate(servers.m());
    jobs.validate(false);
    if (rule.kind == GroupRule::Kind::GR && rule.priority == Priority::FUT &&
        constraint.mode == LocalityConstraint::Mode::PerTask)
        throw ConfigError("fut-gr needs per-job locality constraints");

    const int n = jobs.n();
    const int g = topology.g();
    DistributedResult out;
    out.sub.n = n;
    out.sub.g = g;
    out.sub.V.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(g), 0.0));
    out.sub.C = out.sub.V;
    out.sub.size.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(g), 0));

    std::vector<JobSet> sub_jobs(static_cast<std::size_t>(g));
    std::vector<std::vector<int>> origin(static_cast<std::size_t>(g));
    std::vector<std::vector<int>> task_offset(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(g), 0));
    for (int i = 0; i < n; ++i) {
        const auto& j = jobs.jobs[static_cast<std::size_t>(i)];
        int offset = 0;
        for (const auto& sj : split_job(j, i, constraint, g)) {
            const auto h = static_cast<std::size_t>(sj.group);
            JobSpec spec;
            spec.id = j.id;
            spec.arrival = sj.arrival;
            spec.size = sj.size;
            spec.due = sj.due;
            sub_jobs[h].jobs.push_back(spec);
            origin[h].push_back(i);
            out.sub.size[static_cast<std::size_t>(i)][h] = sj.size;
            task_offset[static_cast<std::size_t>(i)][h] = offset;
            offset += sj.size;
        }
    }

    out.finished = true;
    std::vector<std::vector<Event>> group_events;
    for (int h = 0; h < g; ++h) {
        const auto hi = static_cast<std::size_t>(h);
        ServerConfig local;
        for (int l : topology.members[hi]) {
            ServerSpec s = servers.servers[static_cast<std::size_t>(l)];
            s.id = servers.id_of(l);
            s.group = h;
            local.servers.push_back(s);
        }
        const PolicyHandle policy = rule.local_policy(topology.tags[hi]);
        auto result = run_simulation(sub_jobs[hi], local, policy, seed, options);
        if (!result.trace.finished) out.finished = false;
        auto& tr = result.trace;
        for (std::size_t k = 0; k < origin[hi].size(); ++k) {
            const auto i = static_cast<std::size_t>(origin[hi][k]);
            out.sub.V[i][hi] = tr.V[k];
            out.sub.C[i][hi] = tr.C[k];
        }
        // re-express job and task indices in terms of the parent job set
        for (auto& c : tr.copies) {
            const int i = origin[hi][static_cast<std::size_t>(c.job)];
            c.task += task_offset[static_cast<std::size_t>(i)][hi];
            c.job = i;
        }
        for (auto& e : tr.events) {
            const int i = origin[hi][static_cast<std::size_t>(e.job)];
            if (e.task >= 0) e.task += task_offset[static_cast<std::size_t>(i)][hi];
            e.job = i;
        }
        group_events.push_back(tr.events);
        out.groups.push_back(std::move(tr));
    }

    Trace& merged = out.merged;
    merged.jobs = jobs;
    merged.policy = g == 1 ? out.groups.front().policy : rule.name();
    merged.m = servers.m();
    merged.finished = out.finished;
    merged.tasks.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) merged.tasks[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(jobs.jobs[static_cast<std::size_t>(i)].size));
    for (const auto& tr : out.groups) {
        merged.copies.insert(merged.copies.end(), tr.copies.begin(), tr.copies.end());
        merged.completions.insert(merged.completions.end(), tr.completions.begin(), tr.completions.end());
    }
    for (int h = 0; h < g; ++h) {
        const auto& tr = out.groups[static_cast<std::size_t>(h)];
        for (std::size_t k = 0; k < origin[static_cast<std::size_t>(h)].size(); ++k) {
            const auto i = static_cast<std::size_t>(origin[static_cast<std::size_t>(h)][k]);
            const int off = task_offset[i][static_cast<std::size_t>(h)];
            for (std::size_t q = 0; q < tr.tasks[k].size(); ++q) merged.tasks[i][static_cast<std::size_t>(off) + q] = tr.tasks[k][q];
        }
    }
    std::stable_sort(merged.copies.begin(), merged.copies.end(), [](const TaskCopy& a, const TaskCopy& b) { return a.start < b.start; });
    std::sort(merged.completions.begin(), merged.completions.end());
    {
        std::vector<std::size_t> pos(static_cast<std::size_t>(g), 0);
        while (true) {
            int best = -1;
            for (int h = 0; h < g; ++h) {
                const auto& ev = group_events[static_cast<std::size_t>(h)];
                if (pos[static_cast<std::size_t>(h)] >= ev.size()) continue;
                if (best < 0 || ev[pos[static_cast<std::size_t>(h)]].time < group_events[static_cast<std::size_t>(best)][pos[static_cast<std::size_t>(best)]].time) best = h;
            }
            if (best < 0) break;
            merged.events.push_back(group_events[static_cast<std::size_t>(best)][pos[static_cast<std::size_t>(best)]++]);
        }
    }
    if (g == 1) {
        merged.V = out.groups.front().V;
        merged.C = out.groups.front().C;
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        merged.V.assign(static_cast<std::size_t>(n), nan);
        merged.C.assign(static_cast<std::size_t>(n), nan);
        if (out.finished) {
            const auto times = merge_subjob_times(out.sub, jobs);
            merged.V = times.V;
            merged.C = times.C;
        }
    }
    return out;
}

MergedTimes merge_subjob_times(const SubJobTrace& sub, const JobSet& jobs)
{
    if (jobs.n() != sub.n) throw JobSetMismatch("merge: job count differs from the sub-job trace");
    MergedTimes t;
    for (int i = 0; i < sub.n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        double v = -std::numeric_limits<double>::infinity();
        double c = v;
        bool any = false;
        for (int h = 0; h < sub.g; ++h) {
            const auto hi = static_cast<std::size_t>(h);
            if (sub.size[ii][hi] == 0) continue;
            if (std::isnan(sub.C[ii][hi]) || std::isnan(sub.V[ii][hi]))
                throw IntegrityError("merge: sub-job of job " + std::to_string(i + 1) + " in group " + std::to_string(h + 1) + " unfinished");
            v = std::max(v, sub.V[ii][hi]);
            c = std::max(c, sub.C[ii][hi]);
            any = true;
        }
        if (!any) throw IntegrityError("merge: job " + std::to_string(i + 1) + " has no tasks");
        const auto& j = jobs.jobs[ii];
        t.V.push_back(v);
        t.C.push_back(c);
        t.D.push_back(c - j.arrival);
        t.L.push_back(c - j.due);
    }
    return t;
}

void write_subjob_csv(std::ostream& os, const SubJobTrace& sub)
{
    os << "job,group,V,C\n";
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (int i = 0; i < sub.n; ++i)
        for (int h = 0; h < sub.g; ++h)
            os << i + 1 << ',' << h + 1 << ',' << sub.V[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)] << ','
               << sub.C[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)] << '\n';
    os.precision(old);
}

}  // namespace replisim
