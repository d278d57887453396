#pragma once

#include "replisim/model.hpp"
#include "replisim/policies.hpp"
#include "replisim/workload.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace replisim {

enum class CopyOutcome {
    Completed,  ///< first completed copy of its task
    Redundant,  ///< ran to completion after another copy had already finished
    Cancelled,
};

std::string to_string(CopyOutcome o);

struct TaskCopy {
    int job = -1;  ///< 0-based
    int task = -1;
    int server = -1;  ///< global server id
    double start = 0.0;
    CopyOutcome outcome = CopyOutcome::Completed;
    double end = 0.0;           ///< completion time, or end of the cancellation
    double cancel_start = 0.0;  ///< only for Cancelled

    friend bool operator==(const TaskCopy&, const TaskCopy&) = default;
};

enum class EventKind { Arrival, Start, ReplicaStart, Completion, RedundantCompletion, CancelStart, CancelDone };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    int job = -1;
    int task = -1;
    int server = -1;

    friend bool operator==(const Event&, const Event&) = default;
};

struct TaskTimes {
    double first_start = 0.0;
    double completion = 0.0;

    friend bool operator==(const TaskTimes&, const TaskTimes&) = default;
};

struct Trace {
    JobSet jobs;
    std::string policy;
    int m = 0;
    bool finished = false;
    std::vector<TaskCopy> copies;  ///< in start order
    std::vector<Event> events;     ///< in processing order
    std::vector<double> V;
    std::vector<double> C;
    std::vector<double> completions;  ///< sorted valid task completion times
    std::vector<std::vector<TaskTimes>> tasks;

    friend bool operator==(const Trace&, const Trace&) = default;
};

/// Piecewise-constant xi(t) and gamma(t), stored as right-continuous jumps.
class StateTrajectory {
public:
    struct Step {
        double time = 0.0;
        int job = -1;
        int d_remaining = 0;
        int d_unassigned = 0;
    };

    StateTrajectory() = default;
    StateTrajectory(std::vector<int> sizes, std::vector<Step> steps);

    int n() const noexcept { return static_cast<int>(sizes_.size()); }
    const std::vector<int>& sizes() const noexcept { return sizes_; }
    const std::vector<Step>& steps() const noexcept { return steps_; }
    /// Distinct jump times, ascending.
    std::vector<double> times() const;

    struct Snapshot {
        std::vector<int> remaining;
        std::vector<int> unassigned;
    };
    /// State at time t, including every jump at t.
    Snapshot at(double t) const;

    /// Replays the jumps forward in time.
    class Cursor {
    public:
        explicit Cursor(const StateTrajectory& traj);
        void advance_to(double t);
        const std::vector<int>& remaining() const noexcept { return remaining_; }
        const std::vector<int>& unassigned() const noexcept { return unassigned_; }
        long long total_unassigned() const noexcept { return total_unassigned_; }

    private:
        const StateTrajectory* traj_;
        std::size_t next_ = 0;
        std::vector<int> remaining_;
        std::vector<int> unassigned_;
        long long total_unassigned_ = 0;
    };

private:
    std::vector<int> sizes_;
    std::vector<Step> steps_;
};

enum class Coupling {
    /// Server l's j-th copy gets the j-th draw of its service stream.
    DrawIndex,
    /// The j-th task completion of the whole system happens when the summed
    /// integrated hazard of the busy servers reaches the j-th unit exponential.
    CompletionClock,
    /// The second policy of a coupled run starts each copy on server l with
    /// the quantile of the first policy's residual service on server l at
    /// that instant, when that server is serving there; fresh draws otherwise.
    Residual,
};

struct RunOptions {
    Coupling coupling = Coupling::DrawIndex;
    /// Abort when time passes this multiple of the zero-load makespan estimate; <= 0 disables.
    double guard_factor = 100.0;
    /// Trace whose server residuals drive Residual coupling; set by coupled_run.
    const Trace* reference = nullptr;
};

struct SimulationResult {
    Trace trace;
    StateTrajectory trajectory;
};

SimulationResult run_simulation(const JobSet& jobs, const ServerConfig& servers, const PolicyHandle& policy,
                                std::uint64_t seed, const RunOptions& options = {});

std::pair<SimulationResult, SimulationResult> coupled_run(const JobSet& jobs, const ServerConfig& servers,
                                                          const PolicyHandle& a, const PolicyHandle& b,
                                                          std::uint64_t seed, const RunOptions& options = {});

/// Rebuilds xi and gamma from the trace events. Throws IntegrityError on inconsistencies.
StateTrajectory state_trajectory(const Trace& trace);

/// Throw IntegrityError listing unfinished jobs.
std::vector<double> start_time_vector(const Trace& trace);
std::vector<double> completion_vector(const Trace& trace);
std::vector<double> sorted(std::vector<double> v);

void write_trace_csv(std::ostream& os, const Trace& trace);
void write_job_summary_csv(std::ostream& os, const Trace& trace);

}  // namespace replisim
