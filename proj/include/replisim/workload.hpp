#pragma once

#include "replisim/distributions.hpp"
#include "replisim/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace replisim {

struct JobSpec {
    int id = 0;  ///< 1-based, equals arrival order
    double arrival = 0.0;
    int size = 1;
    double due = 0.0;
    std::vector<int> group_sizes;  ///< k_ih per group; empty when there are no groups

    friend bool operator==(const JobSpec&, const JobSpec&) = default;
};

struct JobSet {
    std::vector<JobSpec> jobs;

    int n() const noexcept { return static_cast<int>(jobs.size()); }
    int k_max() const;
    long long k_sum() const;
    int groups() const;

    /// Throws ConfigError when arrivals decrease, sizes are < 1, etc.
    void validate(bool require_zero_start = true) const;

    friend bool operator==(const JobSet&, const JobSet&) = default;
};

/// Jobs arrive two at a time; lambda is the average job arrival rate.
struct PairedBurst {
    double lambda = 1.0;
};
struct Deterministic {
    std::vector<double> times;
};
struct Poisson {
    double lambda = 1.0;
};
using ArrivalModel = std::variant<PairedBurst, Deterministic, Poisson>;

struct TwoPoint {
    int v1 = 1;
    int v2 = 10;
    double p = 0.5;  ///< probability of v1
};
struct ConstantSize {
    int k = 1;
};
using SizeModel = std::variant<TwoPoint, ConstantSize>;

struct AtArrival {};
struct ArrivalPlusTwoPoint {
    double offset = 50.0;
    double p = 0.5;  ///< probability of adding the offset
};
struct ArrivalPlusConstant {
    double offset = 0.0;
};
using DueModel = std::variant<AtArrival, ArrivalPlusTwoPoint, ArrivalPlusConstant>;

/// How a job's tasks are spread over server groups.
struct GroupSplit {
    enum class Mode {
        PerTask,  ///< each group independently draws a sub-job size from the size model
        PerJob,   ///< the whole job goes to one group chosen uniformly at random
    };
    int groups = 1;
    Mode mode = Mode::PerTask;
};

struct WorkloadSpec {
    int n = 0;
    ArrivalModel arrivals = PairedBurst{};
    SizeModel sizes = ConstantSize{};
    DueModel dues = AtArrival{};
    std::optional<GroupSplit> split;

    void validate() const;
};

double mean_size(const SizeModel& sizes);
/// Mean job size including the group split (per-task splits sum over groups).
double mean_job_size(const WorkloadSpec& spec);
double job_rate(const ArrivalModel& arrivals);

/// Arrival times of n jobs for paired bursts given the exponential gaps.
///
/// A gap is consumed before every job with even 0-based index; the first
/// one is discarded because the first job arrives at 0.
std::vector<double> paired_burst_arrivals(int n, std::span<const double> gaps);

JobSet generate_jobs(const WorkloadSpec& spec, std::uint64_t seed);

double traffic_intensity(double job_rate, double mean_size, double capacity);
double traffic_intensity(const WorkloadSpec& spec, double capacity);
double traffic_intensity(const JobSet& jobs, double capacity);
double calibrate_lambda(double rho, double mean_size, double capacity);
double calibrate_lambda(double rho, const WorkloadSpec& spec, double capacity);
/// Copy of the workload with its arrival rate set to lambda.
WorkloadSpec with_rate(WorkloadSpec spec, double lambda);

/// Sum of 1/E[X_l]: capacity when each task runs on one server.
double capacity_no_replication(std::span<const ServiceDistribution> services);
/// 1/E[min_l X_l]: capacity when every task runs on all servers.
double capacity_full_replication(std::span<const ServiceDistribution> services);

void write_jobs_csv(std::ostream& os, const JobSet& jobs);
JobSet read_jobs_csv(std::istream& is);

}  // namespace replisim
