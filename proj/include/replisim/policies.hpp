#pragma once

#include "replisim/model.hpp"
#include "replisim/rng.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace replisim {

enum class Priority { FUT, EDD, FCFS, Random };
enum class Discipline { NR, NIR, LPR, R, AWE };

std::string to_string(Priority p);
std::string to_string(Discipline d);

/// Read-only view of the system at a decision instant.
struct DecisionContext {
    double now = 0.0;
    const std::vector<JobStatus>* jobs = nullptr;
    const std::vector<int>* waiting = nullptr;  ///< jobs with unassigned tasks, ascending
    const std::vector<int>* active = nullptr;   ///< arrived jobs with remaining tasks, ascending
    const std::vector<ServerStatus>* servers = nullptr;
    const ServerConfig* config = nullptr;
    RngStream* policy_rng = nullptr;  ///< only used by the randomized baselines

    const JobStatus& job(int i) const { return (*jobs)[static_cast<std::size_t>(i)]; }
    const ServerStatus& server(int l) const { return (*servers)[static_cast<std::size_t>(l)]; }
    bool queue_empty() const { return waiting->empty(); }
};

struct DuplicateCopy {
    int server = -1;
    TaskRef task;
    double elapsed = 0.0;
};

/// Returns the task an idle server should replicate, or nullopt to stay idle.
using ReplicateHook = std::function<std::optional<TaskRef>(const DecisionContext&, int server)>;
/// Called when the hazard-rate rule leaves the choice open; true = run to completion.
using CompleteHook = std::function<bool(const DecisionContext&, const DuplicateCopy&)>;

struct PolicyHandle {
    Priority priority = Priority::FUT;
    Discipline discipline = Discipline::NR;
    int awe_d = 2;
    ReplicateHook replicate;
    CompleteHook complete;
    std::string label;  ///< overrides name() when set

    std::string name() const;
};

/// Accepts `fut-nr`, `edd-nir`, `fcfs-r`, `fut-lpr`, `rand-nr`, `rand-nir`, `awe-2`, ...
PolicyHandle parse_policy(std::string_view name);

struct Action {
    enum class Kind { Idle, Assign, Replicate };
    Kind kind = Kind::Idle;
    TaskRef task;
};

/// Job with the smallest key among jobs with unassigned tasks; ties to the lowest id.
std::optional<int> select_job(const DecisionContext& ctx, Priority priority);

/// Task to replicate by default: the priority job's least-copied task, ties to the lowest index.
std::optional<TaskRef> default_replica(const DecisionContext& ctx, Priority priority, int server);

Action on_server_idle(const DecisionContext& ctx, const PolicyHandle& handle, int server);

/// Replicates one task of the priority job on every server. Requires all servers idle.
Action r_barrier_assign(const DecisionContext& ctx, const PolicyHandle& handle);

/// One flag per duplicate: true = run to completion, false = cancel.
std::vector<bool> on_duplicate_completion(const DecisionContext& ctx, const PolicyHandle& handle,
                                          const std::vector<DuplicateCopy>& duplicates);

}  // namespace replisim
