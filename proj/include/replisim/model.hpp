#pragma once

#include "replisim/distributions.hpp"

#include <vector>

namespace replisim {

struct ServerSpec {
    ServiceDistribution service = ServiceDistribution::exponential(1.0);
    ServiceDistribution overhead = ServiceDistribution::zero();
    int group = 0;
    /// Global server id; keys the server's random streams. -1 means "use the position".
    int id = -1;
};

struct ServerConfig {
    std::vector<ServerSpec> servers;

    int m() const noexcept { return static_cast<int>(servers.size()); }
    int id_of(int l) const { return servers[static_cast<std::size_t>(l)].id >= 0 ? servers[static_cast<std::size_t>(l)].id : l; }
    bool zero_overhead() const;
    std::vector<ServiceDistribution> services() const;
    /// Throws ConfigError when empty.
    void validate() const;
};

struct TaskRef {
    int job = -1;  ///< 0-based job index
    int task = -1;

    friend bool operator==(const TaskRef&, const TaskRef&) = default;
};

/// Per-job scheduler state visible to policies.
struct JobStatus {
    double arrival = 0.0;
    double due = 0.0;
    int size = 0;
    bool arrived = false;
    int remaining = 0;   ///< xi: tasks not yet completed
    int unassigned = 0;  ///< gamma: tasks not yet started
    int next_task = 0;   ///< next fresh task index
    std::vector<int> copies;  ///< copies of each task currently in service
    std::vector<char> done;
};

enum class ServerMode { Idle, Serving, Cancelling };

struct ServerStatus {
    ServerMode mode = ServerMode::Idle;
    TaskRef task;
    double start = 0.0;  ///< start of the current copy or cancellation
};

}  // namespace replisim
