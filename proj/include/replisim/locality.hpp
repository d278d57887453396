#pragma once

#include "replisim/engine.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace replisim {

struct GroupTopology {
    std::vector<std::vector<int>> members;  ///< server positions in the ServerConfig, per group
    std::vector<DistClass> tags;

    int g() const noexcept { return static_cast<int>(members.size()); }
    /// Throws ConfigError unless the groups partition 0..m-1.
    void validate(int m) const;
    /// Groups from ServerSpec::group, tagged by each group's service law.
    static GroupTopology from_servers(const ServerConfig& servers);
};

struct LocalityConstraint {
    enum class Mode { PerTask, PerJob };
    Mode mode = Mode::PerTask;
    /// PerTask: group of every task, per job. PerJob: unused.
    std::vector<std::vector<int>> task_group;
    /// PerJob: the group u(i) of every job. PerTask: unused.
    std::vector<int> job_group;

    /// Built from the k_ih columns of a job set.
    static LocalityConstraint from_jobs(const JobSet& jobs, Mode mode);
};

struct SubJob {
    int group = 0;
    int size = 0;
    double arrival = 0.0;
    double due = 0.0;
};

/// Sub-jobs of job `index` (0-based), zero-size groups dropped.
std::vector<SubJob> split_job(const JobSpec& job, int index, const LocalityConstraint& constraint, int groups);

struct GroupRule {
    enum class Kind {
        GR,     ///< LPR in NBU groups, R in NWU groups, configurable for exponential groups
        Fixed,  ///< the same local policy in every group
    };
    Kind kind = Kind::GR;
    Priority priority = Priority::EDD;
    Discipline nbu_discipline = Discipline::NIR;
    Discipline exponential_discipline = Discipline::R;
    PolicyHandle fixed;

    std::string name() const;
    PolicyHandle local_policy(DistClass tag) const;
};

/// Accepts `edd-gr`, `fcfs-gr`, `fut-gr` or any single-server-set policy name.
GroupRule parse_group_rule(const std::string& name);

struct SubJobTrace {
    int n = 0;
    int g = 0;
    std::vector<std::vector<double>> V;  ///< [job][group], 0 when k_ih = 0
    std::vector<std::vector<double>> C;
    std::vector<std::vector<int>> size;
};

struct MergedTimes {
    std::vector<double> V, C, D, L;
};

struct DistributedResult {
    SubJobTrace sub;
    Trace merged;
    std::vector<Trace> groups;
    bool finished = false;
};

DistributedResult run_distributed(const JobSet& jobs, const ServerConfig& servers, const GroupTopology& topology,
                                  const LocalityConstraint& constraint, const GroupRule& rule, std::uint64_t seed,
                                  const RunOptions& options = {});

/// Max over groups with k_ih > 0.
MergedTimes merge_subjob_times(const SubJobTrace& sub, const JobSet& jobs);

void write_subjob_csv(std::ostream& os, const SubJobTrace& sub);

}  // namespace replisim
