#pragma once

#include "replisim/engine.hpp"

#include <optional>
#include <string>
#include <vector>

namespace replisim {

struct Witness {
    double time = 0.0;
    double index = 0.0;  ///< tail position j, or threshold tau
    double lhs = 0.0;
    double rhs = 0.0;
};

struct OrderingReport {
    std::string id;
    bool holds = true;
    std::optional<Witness> witness;
    std::string conclusion;
    bool conclusion_holds = true;
    /// Smallest rhs - lhs over all checked points (0 when both sides always agree).
    double min_slack = 0.0;
};

/// A trace together with its state trajectory.
struct RunView {
    const Trace& trace;
    const StateTrajectory& trajectory;
};

/// Tail sums of sorted xi_P below those of xi_pi at all times; conclusion on sorted C and D_avg.
OrderingReport check_remaining_ordering(const RunView& p, const RunView& pi);
/// Same with gamma on the P side; conclusion on sorted V(P) against sorted C(pi).
OrderingReport check_unassigned_ordering(const RunView& p, const RunView& pi);
/// Sums over jobs due by tau; conclusion L_max(C or V of P) <= L_max(C(pi)).
OrderingReport check_due_ordering(const RunView& p, const RunView& pi, bool use_gamma);
/// Sums over jobs arrived by tau; conclusion D_max(C or V of P) <= D_max(C(pi)).
OrderingReport check_arrival_ordering(const RunView& p, const RunView& pi, bool use_gamma);

struct EfficiencyReport {
    bool holds = true;
    int first_violation = -1;  ///< 0-based index into the sorted completion vectors
};

EfficiencyReport check_work_efficiency(const Trace& p, const Trace& pi);

struct TaskInterval {
    int job = -1;
    int task = -1;
    double tau = 0.0;
    double nu = 0.0;
};

struct WeakEfficiencyReport {
    bool holds = true;
    int intervals = 0;  ///< qualifying intervals
    std::optional<TaskInterval> unmatched;
};

WeakEfficiencyReport check_weak_work_efficiency(const Trace& p, const Trace& pi, const StateTrajectory& traj_p);
/// Matches intervals to points injectively, greedily by right endpoint.
std::optional<TaskInterval> unmatched_interval(std::vector<TaskInterval> intervals, std::vector<double> points);

enum class PriorityRule { FutStart, FutComplete, EddStart, EddComplete, FcfsStart, FcfsComplete };

struct PriorityReport {
    bool holds = true;
    std::optional<Event> witness;
};

PriorityReport check_priority_hypothesis(const Trace& trace, PriorityRule rule);

enum class Dominance { ALeB, BLeA, Crossing, Inconclusive };
std::string to_string(Dominance d);

struct DominanceReport {
    Dominance verdict = Dominance::Inconclusive;
    bool a_le_b = false;  ///< no point where A's tail exceeds B's by more than the band
    bool b_le_a = false;
    double excess_a = 0.0;  ///< sup of ccdf_A - ccdf_B
    double excess_b = 0.0;
    double band = 0.0;
};

/// Two-sample band sqrt(ln(2/alpha) / 2 * (1/nA + 1/nB)) with alpha = 1 - confidence.
double dkw_band(std::size_t na, std::size_t nb, double confidence);
DominanceReport empirical_st_dominance(const std::vector<double>& a, const std::vector<double>& b, double confidence = 0.99);
DominanceReport empirical_st_dominance_with_band(const std::vector<double>& a, const std::vector<double>& b, double band);

}  // namespace replisim
