#include "replisim/metrics.hpp"

#include "replisim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace replisim {

MetricClasses MetricSpec::classes() const
{
    switch (kind) {
    case MetricKind::DAvg: return {true, true, true};
    case MetricKind::LMax:
    case MetricKind::TMs:
    case MetricKind::TPf: return {false, true, false};
    case MetricKind::DMax:
    case MetricKind::DMs:
    case MetricKind::DPf: return {false, false, true};
    }
    return {};
}

bool MetricSpec::increasing() const
{
    // -sum log(x + eps) falls as x grows
    return kind != MetricKind::TPf && kind != MetricKind::DPf;
}

bool MetricSpec::due_based() const
{
    return kind == MetricKind::LMax || kind == MetricKind::TMs || kind == MetricKind::TPf;
}

std::string MetricSpec::name() const
{
    switch (kind) {
    case MetricKind::DAvg: return "d_avg";
    case MetricKind::DMax: return "d_max";
    case MetricKind::LMax: return "l_max";
    case MetricKind::TMs: return "t_ms";
    case MetricKind::DMs: return "d_ms";
    case MetricKind::TPf: return "t_pf";
    case MetricKind::DPf: return "d_pf";
    }
    return "?";
}

MetricSpec parse_metric(const std::string& name)
{
    for (auto k : {MetricKind::DAvg, MetricKind::DMax, MetricKind::LMax, MetricKind::TMs, MetricKind::DMs,
                   MetricKind::TPf, MetricKind::DPf}) {
        MetricSpec s{k};
        if (s.name() == name) return s;
    }
    throw ConfigError("unknown metric '" + name + "'");
}

double compute_metric(const MetricSpec& spec, const std::vector<double>& x, const std::vector<double>& a,
                      const std::vector<double>& d)
{
    const std::size_t n = x.size();
    if (n == 0) throw DomainError("metric of an empty job set is undefined");
    if (a.size() != n || d.size() != n) throw DomainError("metric: vector lengths differ");
    if ((spec.kind == MetricKind::TPf || spec.kind == MetricKind::DPf) && !(spec.epsilon > 0.0))
        throw DomainError("metric: epsilon must be > 0");
    const double nn = static_cast<double>(n);
    double acc = 0.0;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double delay = x[i] - a[i];
        const double late = x[i] - d[i];
        switch (spec.kind) {
        case MetricKind::DAvg: acc += delay; break;
        case MetricKind::DMax: mx = std::max(mx, delay); break;
        case MetricKind::LMax: mx = std::max(mx, late); break;
        case MetricKind::TMs: {
            const double t = std::max(late, 0.0);
            acc += t * t;
            break;
        }
        case MetricKind::DMs: acc += delay * delay; break;
        case MetricKind::TPf: acc -= std::log(std::max(late, 0.0) + spec.epsilon); break;
        case MetricKind::DPf: acc -= std::log(delay + spec.epsilon); break;
        }
    }
    switch (spec.kind) {
    case MetricKind::DMax:
    case MetricKind::LMax: return mx;
    case MetricKind::DAvg:
    case MetricKind::TMs:
    case MetricKind::DMs: return acc / nn;
    case MetricKind::TPf:
    case MetricKind::DPf: return acc;
    }
    return acc;
}

double compute_metric(const MetricSpec& spec, const DelayVectors& v, Basis on)
{
    return compute_metric(spec, on == Basis::C ? v.C : v.V, v.a, v.d);
}

namespace {

void same_length(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) throw DomainError("majorization: vector lengths differ");
}

template <class Cmp>
bool partial_sums_leq(std::vector<double> x, std::vector<double> y, Cmp order, bool reverse_sense)
{
    std::sort(x.begin(), x.end(), order);
    std::sort(y.begin(), y.end(), order);
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        sx += x[j];
        sy += y[j];
        if (!reverse_sense && sx > sy + kMajorizationTolerance) return false;
        if (reverse_sense && sx < sy - kMajorizationTolerance) return false;
    }
    return true;
}

double total(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

bool majorizes(const std::vector<double>& x, const std::vector<double>& y)
{
    same_length(x, y);
    if (std::abs(total(x) - total(y)) > kMajorizationTolerance) return false;
    return partial_sums_leq(x, y, std::greater<>(), false);
}

bool weakly_majorized_below(const std::vector<double>& x, const std::vector<double>& y)
{
    same_length(x, y);
    return partial_sums_leq(x, y, std::greater<>(), false);
}

bool weakly_majorized_above(const std::vector<double>& x, const std::vector<double>& y)
{
    same_length(x, y);
    return partial_sums_leq(x, y, std::less<>(), true);
}

SchurReport schur_convex_witness(const MetricSpec& spec,
                                 const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                                 const std::vector<double>& a, const std::vector<double>& d)
{
    const auto& shift = spec.due_based() ? d : a;
    SchurReport r;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& [x, y] = pairs[p];
        if (x.size() != shift.size() || y.size() != shift.size()) throw DomainError("schur witness: length mismatch");
        if (!majorizes(x, y)) throw DomainError("schur witness: pair " + std::to_string(p) + " is not a majorization pair");
        std::vector<double> cx(x.size());
        std::vector<double> cy(y.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            cx[i] = x[i] + shift[i];
            cy[i] = y[i] + shift[i];
        }
        const double fx = compute_metric(spec, cx, a, d);
        const double fy = compute_metric(spec, cy, a, d);
        ++r.checked;
        const double excess = fx - fy;
        const double tol = 1e-9 * std::max({1.0, std::abs(fx), std::abs(fy)});
        if (excess > tol) {
            if (r.first_violation < 0) r.first_violation = static_cast<int>(p);
            ++r.violations;
            r.worst_excess = std::max(r.worst_excess, excess);
        }
    }
    return r;
}

}  // namespace replisim
