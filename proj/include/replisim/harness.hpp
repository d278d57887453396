#pragma once

#include "replisim/engine.hpp"
#include "replisim/locality.hpp"
#include "replisim/metrics.hpp"
#include "replisim/orderings.hpp"
#include "replisim/workload.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace replisim {

struct CapacitySpec {
    enum class Mode { NoReplication, FullReplication, Explicit };
    Mode mode = Mode::NoReplication;
    double value = 0.0;
};

struct LocalitySpec {
    LocalityConstraint::Mode mode = LocalityConstraint::Mode::PerTask;
    Discipline nbu_discipline = Discipline::NIR;
    Discipline exponential_discipline = Discipline::R;
};

struct SweepSpec {
    enum class Mode { Rho, Ccdf };
    Mode mode = Mode::Rho;
    std::vector<double> rho{0.8};
};

enum class BoundKind { NbuSum, Exponential };

struct BoundSpec {
    std::string policy = "fut-nr";
    BoundKind kind = BoundKind::NbuSum;
    double rho = 0.8;
};

enum class Proposition {
    Remaining,           ///< tail sums of xi
    Unassigned,          ///< tail sums of gamma against xi
    DueRemaining,        ///< due-threshold sums of xi
    DueUnassigned,       ///< due-threshold sums of gamma against xi
    ArrivalRemaining,    ///< arrival-threshold sums of xi
    ArrivalUnassigned,   ///< arrival-threshold sums of gamma against xi
    WorkEfficiency,
    WeakWorkEfficiency,
};

std::string to_string(Proposition p);
Proposition parse_proposition(const std::string& name);

struct OrderingSpec {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<Proposition> propositions;
    std::optional<int> n;  ///< overrides the workload size
    double rho = 0.8;
};

struct ExperimentConfig {
    std::string name = "experiment";
    WorkloadSpec workload;
    ServerConfig servers;
    std::optional<LocalitySpec> locality;  ///< set for distributed experiments
    CapacitySpec capacity;
    std::vector<std::string> policies;
    std::vector<MetricSpec> metrics{MetricSpec{}};
    bool basis_c = true;
    bool basis_v = true;
    std::optional<std::string> lower_bound;  ///< policy whose V-based metric is the lower-bound series
    std::vector<std::uint64_t> seeds;
    SweepSpec sweep;
    RunOptions run;
    std::optional<BoundSpec> bounds;
    std::optional<OrderingSpec> orderings;
    std::string output_dir = "results";

    void validate() const;
};

/// Parses the JSON experiment format documented in README.md.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// `name` may be a file path or the name of a shipped preset (fig5 ... fig18).
ExperimentConfig resolve_config(const std::string& name);
std::vector<std::string> preset_names();

double capacity_of(const ExperimentConfig& config);
double lambda_for(const ExperimentConfig& config, double rho);
JobSet jobs_for(const ExperimentConfig& config, double rho, std::uint64_t seed);

/// Trace of one policy on one workload, centralized or distributed per the config.
Trace run_policy(const ExperimentConfig& config, const JobSet& jobs, const std::string& policy, std::uint64_t seed);

struct ResultRow {
    std::string experiment;
    std::string policy;
    double sweep = 0.0;
    std::uint64_t seed = 0;
    std::string metric;
    double value = 0.0;
};

struct SummaryRow {
    std::string policy;
    double sweep = 0.0;
    std::string metric;
    int count = 0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int unstable = 0;  ///< runs stopped by the instability guard
};

struct CcdfPoint {
    std::string policy;
    std::string metric;
    double t = 0.0;
    double ccdf = 0.0;
};

struct ExperimentReport {
    std::string name;
    bool ccdf_mode = false;
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summary;
    std::vector<CcdfPoint> ccdf;
    std::vector<std::string> warnings;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

struct MeanCI {
    double mean = 0.0;
    double low = 0.0;
    double high = 0.0;
    int count = 0;
};

/// Normal-approximation 95% interval over the given sample.
MeanCI mean_ci(const std::vector<double>& x, double z = 1.959963984540054);

struct GapBounds {
    double per_job_sum = 0.0;
    double closed_form = 0.0;
};

/// (1/n) sum_i sum_{l <= k_i ^ m} 1 / (mu_1 + ... + mu_l) with mu ascending, and (ln(k_max ^ m) + 1) / mu_1.
GapBounds gap_bound(std::vector<double> mu, const std::vector<int>& sizes, int m);
/// Same, averaged over the size distribution instead of realized sizes.
GapBounds gap_bound(std::vector<double> mu, const SizeModel& sizes, int m);
/// 1 / sum(mu).
double gap_bound_exponential(const std::vector<double>& mu);

struct GapBoundReport {
    std::string policy;
    BoundKind kind = BoundKind::NbuSum;
    MeanCI gap;
    std::vector<double> per_seed;
    double bound = 0.0;         ///< per-job sum (or 1/sum mu)
    double closed_form = 0.0;   ///< only for the NBU bound
    bool pass = false;
};

GapBoundReport verify_gap(const ExperimentConfig& config, const std::string& policy, BoundKind kind, double rho);
GapBoundReport verify_gap(const ExperimentConfig& config);

struct SuiteEntry {
    std::string p;
    std::string pi;
    Proposition proposition = Proposition::Remaining;
    int runs = 0;
    int hypothesis_holds = 0;
    int conclusion_holds = 0;
    int implication_violations = 0;
    std::vector<std::uint64_t> violating_seeds;
};

struct SuiteReport {
    std::vector<SuiteEntry> entries;
    int implication_violations = 0;
};

SuiteReport ordering_suite(const ExperimentConfig& config, const std::vector<std::pair<std::string, std::string>>& pairs,
                           const std::vector<Proposition>& propositions);
SuiteReport ordering_suite(const ExperimentConfig& config);

/// Evaluates one proposition on a coupled pair; returns (hypothesis held, conclusion held).
std::pair<bool, bool> evaluate_proposition(Proposition prop, const SimulationResult& p, const SimulationResult& pi);

/// Writes results.csv, summary.csv, ccdf.csv (CCDF mode) and plot.py into `dir`.
void emit_outputs(const ExperimentReport& report, const std::string& dir);
std::string plot_script(const ExperimentReport& report);

}  // namespace replisim
