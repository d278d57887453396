#pragma once

#include <string>
#include <vector>

namespace replisim {

enum class MetricKind { DAvg, DMax, LMax, TMs, DMs, TPf, DPf };

struct MetricClasses {
    bool dsym = false;
    bool dsch1 = false;
    bool dsch2 = false;
};

struct MetricSpec {
    MetricKind kind = MetricKind::DAvg;
    double epsilon = 1e-3;  ///< for TPf and DPf

    MetricClasses classes() const;
    /// True when the metric is nondecreasing in every completion time.
    bool increasing() const;
    /// True for metrics built on C - d, false for those built on C - a.
    bool due_based() const;
    std::string name() const;
};

MetricSpec parse_metric(const std::string& name);

struct DelayVectors {
    std::vector<double> C, V, a, d;
};

enum class Basis { C, V };

double compute_metric(const MetricSpec& spec, const DelayVectors& vectors, Basis on);
/// Metric of completion-like times `x` against arrivals a and dues d.
double compute_metric(const MetricSpec& spec, const std::vector<double>& x, const std::vector<double>& a,
                      const std::vector<double>& d);

inline constexpr double kMajorizationTolerance = 1e-9;

/// x majorized by y: descending partial sums of x <= those of y, equal totals.
bool majorizes(const std::vector<double>& x, const std::vector<double>& y);
/// x weakly majorized by y from below (descending partial sums).
bool weakly_majorized_below(const std::vector<double>& x, const std::vector<double>& y);
/// x weakly majorized by y from above (ascending partial sums of x >= those of y).
bool weakly_majorized_above(const std::vector<double>& x, const std::vector<double>& y);

struct SchurReport {
    int checked = 0;
    int violations = 0;
    int first_violation = -1;
    double worst_excess = 0.0;
};

/// Checks f(x + shift) <= f(y + shift) for every pair with x majorized by y.
/// The shift is d for due-based metrics and a otherwise. Throws DomainError
/// when a pair is not a majorization pair.
SchurReport schur_convex_witness(const MetricSpec& spec,
                                 const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                                 const std::vector<double>& a, const std::vector<double>& d);

}  // namespace replisim
