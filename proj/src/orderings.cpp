#include "replisim/orderings.hpp"

#include "replisim/errors.hpp"
#include "replisim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

namespace replisim {

namespace {

void require_same_jobs(const Trace& a, const Trace& b)
{
    const auto& x = a.jobs.jobs;
    const auto& y = b.jobs.jobs;
    if (x.size() != y.size()) throw JobSetMismatch("traces cover different job counts");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i].arrival != y[i].arrival || x[i].size != y[i].size || x[i].due != y[i].due)
            throw JobSetMismatch("traces disagree on job " + std::to_string(i + 1));
}

void require_finished(const Trace& t)
{
    if (!t.finished) throw IntegrityError("ordering check on an unfinished trace");
}

std::vector<double> union_times(const StateTrajectory& a, const StateTrajectory& b)
{
    auto ta = a.times();
    auto tb = b.times();
    std::vector<double> out;
    std::merge(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<double> field(const Trace& t, double JobSpec::*member)
{
    std::vector<double> v;
    for (const auto& j : t.jobs.jobs) v.push_back(j.*member);
    return v;
}

bool sorted_leq(const std::vector<double>& x, const std::vector<double>& y)
{
    const auto sx = sorted(x);
    const auto sy = sorted(y);
    for (std::size_t i = 0; i < sx.size(); ++i)
        if (sx[i] > sy[i]) return false;
    return true;
}

bool leq_tol(double x, double y) { return x <= y + 1e-9 * std::max({1.0, std::abs(x), std::abs(y)}); }

void record(OrderingReport& r, double time, double index, double lhs, double rhs)
{
    const double slack = rhs - lhs;
    r.min_slack = std::min(r.min_slack, slack);
    if (lhs > rhs && r.holds) {
        r.holds = false;
        r.witness = Witness{time, index, lhs, rhs};
    }
}

OrderingReport tail_sum_ordering(const RunView& p, const RunView& pi, bool use_gamma, const char* id)
{
    require_same_jobs(p.trace, pi.trace);
    require_finished(p.trace);
    require_finished(pi.trace);
    OrderingReport r;
    r.id = id;
    const int n = p.trace.jobs.n();
    StateTrajectory::Cursor cp(p.trajectory);
    StateTrajectory::Cursor cq(pi.trajectory);
    std::vector<int> xp(static_cast<std::size_t>(n));
    std::vector<int> xq(static_cast<std::size_t>(n));
    for (double t : union_times(p.trajectory, pi.trajectory)) {
        cp.advance_to(t);
        cq.advance_to(t);
        xp = use_gamma ? cp.unassigned() : cp.remaining();
        xq = cq.remaining();
        std::sort(xp.begin(), xp.end(), std::greater<>());
        std::sort(xq.begin(), xq.end(), std::greater<>());
        long long sp = 0;
        long long sq = 0;
        for (int j = n - 1; j >= 0; --j) {
            sp += xp[static_cast<std::size_t>(j)];
            sq += xq[static_cast<std::size_t>(j)];
            record(r, t, j + 1, static_cast<double>(sp), static_cast<double>(sq));
        }
    }
    const auto a = field(p.trace, &JobSpec::arrival);
    const auto& xP = use_gamma ? p.trace.V : p.trace.C;
    const MetricSpec avg{MetricKind::DAvg};
    r.conclusion = use_gamma ? "sorted V(P) <= sorted C(pi) and D_avg(V(P)) <= D_avg(C(pi))"
                             : "sorted C(P) <= sorted C(pi) and D_avg(C(P)) <= D_avg(C(pi))";
    r.conclusion_holds = sorted_leq(xP, pi.trace.C) &&
                         (n == 0 || leq_tol(compute_metric(avg, xP, a, a), compute_metric(avg, pi.trace.C, a, a)));
    return r;
}

OrderingReport threshold_ordering(const RunView& p, const RunView& pi, bool use_gamma, bool by_due, const char* id)
{
    require_same_jobs(p.trace, pi.trace);
    require_finished(p.trace);
    require_finished(pi.trace);
    OrderingReport r;
    r.id = id;
    const int n = p.trace.jobs.n();
    const auto a = field(p.trace, &JobSpec::arrival);
    const auto d = field(p.trace, &JobSpec::due);
    const auto& key = by_due ? d : a;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return key[static_cast<std::size_t>(x)] < key[static_cast<std::size_t>(y)]; });

    StateTrajectory::Cursor cp(p.trajectory);
    StateTrajectory::Cursor cq(pi.trajectory);
    for (double t : union_times(p.trajectory, pi.trajectory)) {
        cp.advance_to(t);
        cq.advance_to(t);
        const auto& xp = use_gamma ? cp.unassigned() : cp.remaining();
        const auto& xq = cq.remaining();
        long long sp = 0;
        long long sq = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto i = static_cast<std::size_t>(order[k]);
            sp += xp[i];
            sq += xq[i];
            const bool boundary = k + 1 == order.size() || key[static_cast<std::size_t>(order[k + 1])] != key[i];
            if (boundary) record(r, t, key[i], static_cast<double>(sp), static_cast<double>(sq));
        }
    }
    const auto& xP = use_gamma ? p.trace.V : p.trace.C;
    const MetricSpec spec{MetricKind::LMax};
    const auto& thr = by_due ? d : a;
    r.conclusion = std::string(by_due ? "L_max(" : "D_max(") + (use_gamma ? "V(P)" : "C(P)") + ") <= " +
                   (by_due ? "L_max" : "D_max") + "(C(pi))";
    r.conclusion_holds = n == 0 || compute_metric(spec, xP, a, thr) <= compute_metric(spec, pi.trace.C, a, thr);
    return r;
}

}  // namespace

OrderingReport check_remaining_ordering(const RunView& p, const RunView& pi)
{
    return tail_sum_ordering(p, pi, false, "remaining");
}

OrderingReport check_unassigned_ordering(const RunView& p, const RunView& pi)
{
    return tail_sum_ordering(p, pi, true, "unassigned");
}

OrderingReport check_due_ordering(const RunView& p, const RunView& pi, bool use_gamma)
{
    return threshold_ordering(p, pi, use_gamma, true, use_gamma ? "due-unassigned" : "due-remaining");
}

OrderingReport check_arrival_ordering(const RunView& p, const RunView& pi, bool use_gamma)
{
    return threshold_ordering(p, pi, use_gamma, false, use_gamma ? "arrival-unassigned" : "arrival-remaining");
}

EfficiencyReport check_work_efficiency(const Trace& p, const Trace& pi)
{
    if (p.completions.size() != pi.completions.size())
        throw DomainError("work efficiency: the traces have different numbers of task completions");
    EfficiencyReport r;
    for (std::size_t j = 0; j < p.completions.size(); ++j) {
        if (!leq_tol(p.completions[j], pi.completions[j])) {
            r.holds = false;
            r.first_violation = static_cast<int>(j);
            break;
        }
    }
    return r;
}

std::optional<TaskInterval> unmatched_interval(std::vector<TaskInterval> intervals, std::vector<double> points)
{
    std::sort(intervals.begin(), intervals.end(), [](const auto& x, const auto& y) {
        return x.nu != y.nu ? x.nu < y.nu : x.tau < y.tau;
    });
    std::multiset<double> free(points.begin(), points.end());
    for (const auto& iv : intervals) {
        auto it = free.lower_bound(iv.tau);
        if (it == free.end() || *it > iv.nu) return iv;
        free.erase(it);
    }
    return std::nullopt;
}

WeakEfficiencyReport check_weak_work_efficiency(const Trace& p, const Trace& pi, const StateTrajectory& traj_p)
{
    require_same_jobs(p, pi);
    // P's total unassigned count as a right-continuous step function
    std::vector<double> times;
    std::vector<long long> values;
    {
        StateTrajectory::Cursor c(traj_p);
        for (double t : traj_p.times()) {
            c.advance_to(t);
            times.push_back(t);
            values.push_back(c.total_unassigned());
        }
    }
    std::vector<std::size_t> next_zero(times.size() + 1, times.size());
    for (std::size_t k = times.size(); k-- > 0;) next_zero[k] = values[k] == 0 ? k : next_zero[k + 1];

    auto busy_throughout = [&](double tau, double nu) {
        auto it = std::upper_bound(times.begin(), times.end(), tau);
        if (it == times.begin()) return false;
        const auto k = static_cast<std::size_t>(it - times.begin()) - 1;
        if (values[k] == 0) return false;
        const auto z = next_zero[k];
        return z == times.size() || times[z] > nu;
    };

    WeakEfficiencyReport r;
    std::vector<TaskInterval> intervals;
    for (std::size_t i = 0; i < pi.tasks.size(); ++i)
        for (std::size_t q = 0; q < pi.tasks[i].size(); ++q) {
            const auto& tt = pi.tasks[i][q];
            if (busy_throughout(tt.first_start, tt.completion))
                intervals.push_back(TaskInterval{static_cast<int>(i), static_cast<int>(q), tt.first_start, tt.completion});
        }
    r.intervals = static_cast<int>(intervals.size());
    std::vector<double> starts;
    for (const auto& e : p.events)
        if (e.kind == EventKind::Start) starts.push_back(e.time);
    r.unmatched = unmatched_interval(std::move(intervals), std::move(starts));
    r.holds = !r.unmatched.has_value();
    return r;
}

PriorityReport check_priority_hypothesis(const Trace& trace, PriorityRule rule)
{
    const int n = trace.jobs.n();
    std::vector<int> xi(static_cast<std::size_t>(n), 0);
    std::vector<int> gamma(static_cast<std::size_t>(n), 0);
    const bool at_start = rule == PriorityRule::FutStart || rule == PriorityRule::EddStart || rule == PriorityRule::FcfsStart;
    auto key = [&](int i) -> double {
        const auto& j = trace.jobs.jobs[static_cast<std::size_t>(i)];
        switch (rule) {
        case PriorityRule::FutStart: return gamma[static_cast<std::size_t>(i)];
        case PriorityRule::FutComplete: return xi[static_cast<std::size_t>(i)];
        case PriorityRule::EddStart:
        case PriorityRule::EddComplete: return j.due;
        case PriorityRule::FcfsStart:
        case PriorityRule::FcfsComplete: return j.arrival;
        }
        return 0.0;
    };
    PriorityReport r;
    for (const auto& e : trace.events) {
        const auto i = static_cast<std::size_t>(e.job);
        const bool checked = (at_start && e.kind == EventKind::Start) || (!at_start && e.kind == EventKind::Completion);
        if (checked && r.holds) {
            double best = std::numeric_limits<double>::infinity();
            for (int o = 0; o < n; ++o) {
                const int count = at_start ? gamma[static_cast<std::size_t>(o)] : xi[static_cast<std::size_t>(o)];
                if (count > 0) best = std::min(best, key(o));
            }
            if (key(e.job) > best) {
                r.holds = false;
                r.witness = e;
            }
        }
        switch (e.kind) {
        case EventKind::Arrival:
            xi[i] = gamma[i] = trace.jobs.jobs[i].size;
            break;
        case EventKind::Start: --gamma[i]; break;
        case EventKind::Completion: --xi[i]; break;
        default: break;
        }
    }
    return r;
}

std::string to_string(Dominance d)
{
    switch (d) {
    case Dominance::ALeB: return "A<=st B";
    case Dominance::BLeA: return "B<=st A";
    case Dominance::Crossing: return "crossing";
    case Dominance::Inconclusive: return "inconclusive";
    }
    return "?";
}

double dkw_band(std::size_t na, std::size_t nb, double confidence)
{
    if (na == 0 || nb == 0) throw DomainError("dominance: empty sample");
    if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("dominance: confidence must lie in (0,1)");
    const double alpha = 1.0 - confidence;
    return std::sqrt(std::log(2.0 / alpha) / 2.0 * (1.0 / static_cast<double>(na) + 1.0 / static_cast<double>(nb)));
}

DominanceReport empirical_st_dominance_with_band(const std::vector<double>& a, const std::vector<double>& b, double band)
{
    if (a.empty() || b.empty()) throw DomainError("dominance: empty sample");
    auto sa = sorted(a);
    auto sb = sorted(b);
    std::vector<double> support;
    std::merge(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(support));
    support.erase(std::unique(support.begin(), support.end()), support.end());
    DominanceReport r;
    r.band = band;
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    for (double x : support) {
        const double fa = static_cast<double>(sa.end() - std::upper_bound(sa.begin(), sa.end(), x)) / na;
        const double fb = static_cast<double>(sb.end() - std::upper_bound(sb.begin(), sb.end(), x)) / nb;
        r.excess_a = std::max(r.excess_a, fa - fb);
        r.excess_b = std::max(r.excess_b, fb - fa);
    }
    r.a_le_b = r.excess_a <= band;
    r.b_le_a = r.excess_b <= band;
    if (r.a_le_b && !r.b_le_a)
        r.verdict = Dominance::ALeB;
    else if (r.b_le_a && !r.a_le_b)
        r.verdict = Dominance::BLeA;
    else if (!r.a_le_b && !r.b_le_a)
        r.verdict = Dominance::Crossing;
    else
        r.verdict = Dominance::Inconclusive;
    return r;
}

DominanceReport empirical_st_dominance(const std::vector<double>& a, const std::vector<double>& b, double confidence)
{
    return empirical_st_dominance_with_band(a, b, dkw_band(a.size(), b.size(), confidence));
}

}  // namespace replisim
