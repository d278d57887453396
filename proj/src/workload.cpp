#include "replisim/workload.hpp"

#include "replisim/errors.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace replisim {

int JobSet::k_max() const
{
    int k = 0;
    for (const auto& j : jobs) k = std::max(k, j.size);
    return k;
}

long long JobSet::k_sum() const
{
    long long s = 0;
    for (const auto& j : jobs) s += j.size;
    return s;
}

int JobSet::groups() const
{
    return jobs.empty() ? 0 : static_cast<int>(jobs.front().group_sizes.size());
}

void JobSet::validate(bool require_zero_start) const
{
    const int g = groups();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& j = jobs[i];
        const std::string where = "job " + std::to_string(i + 1) + ": ";
        if (!std::isfinite(j.arrival) || j.arrival < 0.0) throw ConfigError(where + "arrival must be finite and >= 0");
        if (i == 0 && require_zero_start && j.arrival != 0.0) throw ConfigError(where + "first arrival must be 0");
        if (i > 0 && j.arrival < jobs[i - 1].arrival) throw ConfigError(where + "arrivals must be nondecreasing");
        if (j.size < 1) throw ConfigError(where + "size must be >= 1");
        if (!std::isfinite(j.due) || j.due < 0.0) throw ConfigError(where + "due time must be finite and >= 0");
        if (static_cast<int>(j.group_sizes.size()) != g) throw ConfigError(where + "inconsistent group count");
        if (g > 0) {
            int s = 0;
            for (int k : j.group_sizes) {
                if (k < 0) throw ConfigError(where + "negative group size");
                s += k;
            }
            if (s != j.size) throw ConfigError(where + "group sizes must sum to the job size");
        }
    }
}

void WorkloadSpec::validate() const
{
    if (n < 0) throw ConfigError("workload: n must be >= 0");
    std::visit(
        [this](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Deterministic>) {
                if (static_cast<int>(a.times.size()) != n)
                    throw ConfigError("workload: deterministic arrival list must have n entries");
            } else {
                if (!(std::isfinite(a.lambda) && a.lambda > 0.0)) throw ConfigError("workload: lambda must be > 0");
            }
        },
        arrivals);
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, TwoPoint>) {
                if (!(s.p >= 0.0 && s.p <= 1.0)) throw ConfigError("workload: two-point p must lie in [0,1]");
                if (s.v1 < 1 || s.v2 < 1) throw ConfigError("workload: sizes must be >= 1");
            } else {
                if (s.k < 1) throw ConfigError("workload: sizes must be >= 1");
            }
        },
        sizes);
    std::visit(
        [](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, ArrivalPlusTwoPoint>) {
                if (!(d.p >= 0.0 && d.p <= 1.0)) throw ConfigError("workload: due p must lie in [0,1]");
                if (!(d.offset >= 0.0)) throw ConfigError("workload: due offset must be >= 0");
            } else if constexpr (std::is_same_v<T, ArrivalPlusConstant>) {
                if (!(d.offset >= 0.0)) throw ConfigError("workload: due offset must be >= 0");
            }
        },
        dues);
    if (split && split->groups < 1) throw ConfigError("workload: group count must be >= 1");
}

double mean_size(const SizeModel& sizes)
{
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, TwoPoint>)
                return s.p * s.v1 + (1.0 - s.p) * s.v2;
            else
                return static_cast<double>(s.k);
        },
        sizes);
}

double mean_job_size(const WorkloadSpec& spec)
{
    const double m = mean_size(spec.sizes);
    if (spec.split && spec.split->mode == GroupSplit::Mode::PerTask) return m * spec.split->groups;
    return m;
}

double job_rate(const ArrivalModel& arrivals)
{
    return std::visit(
        [](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, Deterministic>) {
                if (a.times.size() < 2) return 0.0;
                const double span = a.times.back() - a.times.front();
                return span > 0.0 ? static_cast<double>(a.times.size()) / span : 0.0;
            } else {
                return a.lambda;
            }
        },
        arrivals);
}

std::vector<double> paired_burst_arrivals(int n, std::span<const double> gaps)
{
    std::vector<double> a(static_cast<std::size_t>(std::max(n, 0)));
    std::size_t next_gap = 0;
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i % 2 == 0) {
            if (next_gap >= gaps.size()) throw ConfigError("paired bursts: not enough gaps");
            const double g = gaps[next_gap++];
            if (i > 0) t += g;
        }
        a[static_cast<std::size_t>(i)] = t;
    }
    return a;
}

namespace {

int draw_size(const SizeModel& sizes, RngStream& rng)
{
    return std::visit(
        [&rng](const auto& s) -> int {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, TwoPoint>)
                return rng.uniform() < s.p ? s.v1 : s.v2;
            else
                return s.k;
        },
        sizes);
}

}  // namespace

JobSet generate_jobs(const WorkloadSpec& spec, std::uint64_t seed)
{
    spec.validate();
    const int n = spec.n;
    JobSet set;
    if (n == 0) return set;

    RngStream arrival_rng(seed, 0, Purpose::Arrival);
    std::vector<double> arrivals;
    if (const auto* pb = std::get_if<PairedBurst>(&spec.arrivals)) {
        // lambda jobs per second arrive in pairs, so pairs come at rate lambda/2
        const auto gap_law = ServiceDistribution::exponential(pb->lambda / 2.0);
        std::vector<double> gaps(static_cast<std::size_t>((n + 1) / 2));
        for (auto& g : gaps) g = gap_law.sample(arrival_rng);
        arrivals = paired_burst_arrivals(n, gaps);
    } else if (const auto* po = std::get_if<Poisson>(&spec.arrivals)) {
        const auto gap_law = ServiceDistribution::exponential(po->lambda);
        arrivals.resize(static_cast<std::size_t>(n));
        double t = 0.0;
        for (int i = 0; i < n; ++i) {
            const double g = gap_law.sample(arrival_rng);
            if (i > 0) t += g;
            arrivals[static_cast<std::size_t>(i)] = t;
        }
    } else {
        arrivals = std::get<Deterministic>(spec.arrivals).times;
    }

    std::vector<RngStream> size_rng;
    const int g = spec.split ? spec.split->groups : 0;
    for (int h = 0; h < std::max(g, 1); ++h) size_rng.emplace_back(seed, static_cast<std::uint32_t>(h), Purpose::Size);
    RngStream due_rng(seed, 0, Purpose::Due);
    RngStream group_rng(seed, 0, Purpose::Group);

    set.jobs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        JobSpec j;
        j.id = i + 1;
        j.arrival = arrivals[static_cast<std::size_t>(i)];
        if (spec.split && spec.split->mode == GroupSplit::Mode::PerTask) {
            j.group_sizes.resize(static_cast<std::size_t>(g));
            j.size = 0;
            for (int h = 0; h < g; ++h) {
                j.group_sizes[static_cast<std::size_t>(h)] = draw_size(spec.sizes, size_rng[static_cast<std::size_t>(h)]);
                j.size += j.group_sizes[static_cast<std::size_t>(h)];
            }
        } else {
            j.size = draw_size(spec.sizes, size_rng[0]);
            if (spec.split) {
                j.group_sizes.assign(static_cast<std::size_t>(g), 0);
                const int u = std::min(g - 1, static_cast<int>(group_rng.uniform() * g));
                j.group_sizes[static_cast<std::size_t>(u)] = j.size;
            }
        }
        j.due = std::visit(
            [&](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, AtArrival>)
                    return j.arrival;
                else if constexpr (std::is_same_v<T, ArrivalPlusTwoPoint>)
                    return due_rng.uniform() < d.p ? j.arrival + d.offset : j.arrival;
                else
                    return j.arrival + d.offset;
            },
            spec.dues);
        set.jobs.push_back(std::move(j));
    }
    set.validate(false);
    return set;
}

double traffic_intensity(double job_rate, double mean_size, double capacity)
{
    if (!(capacity > 0.0) || !std::isfinite(capacity)) throw ConfigError("traffic intensity: capacity must be > 0");
    return job_rate * mean_size / capacity;
}

double traffic_intensity(const WorkloadSpec& spec, double capacity)
{
    return traffic_intensity(job_rate(spec.arrivals), mean_job_size(spec), capacity);
}

double traffic_intensity(const JobSet& jobs, double capacity)
{
    if (jobs.n() < 2) return traffic_intensity(0.0, 0.0, capacity);
    const double span = jobs.jobs.back().arrival - jobs.jobs.front().arrival;
    const double rate = span > 0.0 ? jobs.n() / span : 0.0;
    return traffic_intensity(rate, static_cast<double>(jobs.k_sum()) / jobs.n(), capacity);
}

double calibrate_lambda(double rho, double mean_size, double capacity)
{
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("calibrate_lambda: target rho must be in (0, inf)");
    if (!(mean_size > 0.0)) throw ConfigError("calibrate_lambda: mean job size must be > 0");
    if (!(capacity > 0.0) || !std::isfinite(capacity)) throw ConfigError("calibrate_lambda: capacity must be > 0");
    return rho * capacity / mean_size;
}

double calibrate_lambda(double rho, const WorkloadSpec& spec, double capacity)
{
    return calibrate_lambda(rho, mean_job_size(spec), capacity);
}

WorkloadSpec with_rate(WorkloadSpec spec, double lambda)
{
    if (auto* pb = std::get_if<PairedBurst>(&spec.arrivals)) pb->lambda = lambda;
    if (auto* po = std::get_if<Poisson>(&spec.arrivals)) po->lambda = lambda;
    return spec;
}

double capacity_no_replication(std::span<const ServiceDistribution> services)
{
    if (services.empty()) throw ConfigError("capacity: no servers");
    double c = 0.0;
    for (const auto& s : services) c += 1.0 / s.mean();
    return c;
}

double capacity_full_replication(std::span<const ServiceDistribution> services)
{
    if (services.empty()) throw ConfigError("capacity: no servers");
    const bool all_exp = std::all_of(services.begin(), services.end(),
                                     [](const auto& s) { return s.family() == Family::Exponential; });
    if (all_exp) {
        double r = 0.0;
        for (const auto& s : services) r += s.rate();
        return r;
    }
    const bool same_lomax = std::all_of(services.begin(), services.end(), [&](const auto& s) {
        return s.family() == Family::Lomax && s.sigma() == services.front().sigma();
    });
    if (same_lomax) {
        double a = 0.0;
        for (const auto& s : services) a += s.alpha();
        if (a <= 1.0) throw DomainError("capacity: minimum has infinite mean");
        return (a - 1.0) / services.front().sigma();
    }

    auto joint = [&](double x) {
        double p = 1.0;
        for (const auto& s : services) p *= s.ccdf(std::max(0.0, x));
        return p;
    };
    // split at the kinks of the integrand, then finish with a half-infinite rule
    std::vector<double> knots{0.0};
    for (const auto& s : services) {
        if (s.family() == Family::ShiftedExponential && s.shift() > 0.0) knots.push_back(s.shift());
        if (s.family() == Family::Constant && s.value() > 0.0) knots.push_back(s.value());
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(joint, knots[i], knots[i + 1], 15, 1e-14);
    const double last = knots.back();
    const bool bounded = std::any_of(services.begin(), services.end(),
                                     [](const auto& s) { return s.family() == Family::Constant; });
    if (!bounded) {
        boost::math::quadrature::exp_sinh<double> tail;
        total += tail.integrate([&](double u) { return joint(last + u); }, 1e-14);
    }
    if (!(total > 0.0)) throw DomainError("capacity: minimum has zero mean");
    return 1.0 / total;
}

void write_jobs_csv(std::ostream& os, const JobSet& jobs)
{
    const int g = jobs.groups();
    os << "job_id,arrival,size,due";
    for (int h = 1; h <= g; ++h) os << ",k_" << h;
    os << '\n';
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& j : jobs.jobs) {
        os << j.id << ',' << j.arrival << ',' << j.size << ',' << j.due;
        for (int k : j.group_sizes) os << ',' << k;
        os << '\n';
    }
    os.precision(old);
}

JobSet read_jobs_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("jobs csv: missing header");
    int columns = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
    if (columns < 4 || line.rfind("job_id,arrival,size,due", 0) != 0) throw ConfigError("jobs csv: unexpected header");
    JobSet set;
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (static_cast<int>(cells.size()) != columns) throw ConfigError("jobs csv: wrong column count on row " + std::to_string(row));
        try {
            JobSpec j;
            j.id = std::stoi(cells[0]);
            j.arrival = std::stod(cells[1]);
            j.size = std::stoi(cells[2]);
            j.due = std::stod(cells[3]);
            for (int c = 4; c < columns; ++c) j.group_sizes.push_back(std::stoi(cells[static_cast<std::size_t>(c)]));
            set.jobs.push_back(std::move(j));
        } catch (const std::logic_error&) {
            throw ConfigError("jobs csv: bad number on row " + std::to_string(row));
        }
    }
    set.validate(false);
    return set;
}

}  // namespace replisim
