#include "replisim/harness.hpp"

#include "replisim/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#ifndef REPLISIM_PRESET_DIR
#define REPLISIM_PRESET_DIR "configs"
#endif

namespace replisim {

using nlohmann::json;

namespace {

const std::vector<std::string> kPresets{"fig5",  "fig6",  "fig7",  "fig8",  "fig9",  "fig10", "fig11",
                                        "fig12", "fig13", "fig14", "fig15", "fig16", "fig17", "fig18"};

[[noreturn]] void bad(const std::string& what) { throw ConfigError(what); }

double num(const json& j, const char* key)
{
    if (!j.contains(key) || !j.at(key).is_number()) bad(std::string("missing numeric field '") + key + "'");
    return j.at(key).get<double>();
}

double num_or(const json& j, const char* key, double fallback)
{
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) bad(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

std::string str_or(const json& j, const char* key, const std::string& fallback)
{
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) bad(std::string("field '") + key + "' must be a string");
    return j.at(key).get<std::string>();
}

ServiceDistribution parse_law(const json& j)
{
    if (j.is_number()) return ServiceDistribution::constant(j.get<double>());
    if (!j.is_object()) bad("service law must be an object or a number");
    const std::string family = str_or(j, "family", "");
    if (family == "zero") return ServiceDistribution::zero();
    if (family == "constant") return ServiceDistribution::constant(num(j, "value"));
    if (family == "exponential") {
        if (j.contains("mu")) return ServiceDistribution::exponential(num(j, "mu"));
        return ServiceDistribution::exponential(num(j, "rate"));
    }
    if (family == "shifted_exponential") {
        if (j.contains("mu")) {
            // Mean 1/mu with a third of it deterministic.
            const double mu = num(j, "mu");
            if (!(mu > 0.0)) bad("shifted_exponential mu must be > 0");
            return ServiceDistribution::shifted_exponential(1.0 / (3.0 * mu), 1.5 * mu);
        }
        return ServiceDistribution::shifted_exponential(num(j, "shift"), num(j, "rate"));
    }
    if (family == "lomax") return ServiceDistribution::lomax(num(j, "sigma"), num(j, "alpha"));
    if (family == "hyperexponential") {
        if (!j.contains("probs") || !j.contains("rates")) bad("hyperexponential needs probs and rates");
        return ServiceDistribution::hyperexponential(j.at("probs").get<std::vector<double>>(),
                                                     j.at("rates").get<std::vector<double>>());
    }
    bad("unknown service family '" + family + "'");
}

WorkloadSpec parse_workload(const json& j)
{
    WorkloadSpec w;
    w.n = static_cast<int>(num(j, "n"));
    if (j.contains("arrivals")) {
        const auto& a = j.at("arrivals");
        const std::string model = str_or(a, "model", "paired_burst");
        if (model == "paired_burst")
            w.arrivals = PairedBurst{num_or(a, "lambda", 1.0)};
        else if (model == "poisson")
            w.arrivals = Poisson{num_or(a, "lambda", 1.0)};
        else if (model == "deterministic")
            w.arrivals = Deterministic{a.at("times").get<std::vector<double>>()};
        else
            bad("unknown arrival model '" + model + "'");
    }
    if (j.contains("sizes")) {
        const auto& s = j.at("sizes");
        const std::string model = str_or(s, "model", "constant");
        if (model == "two_point") {
            if (!s.contains("values") || s.at("values").size() != 2) bad("two_point sizes need two values");
            w.sizes = TwoPoint{s.at("values").at(0).get<int>(), s.at("values").at(1).get<int>(), num_or(s, "p", 0.5)};
        } else if (model == "constant") {
            w.sizes = ConstantSize{static_cast<int>(num(s, "k"))};
        } else {
            bad("unknown size model '" + model + "'");
        }
    }
    if (j.contains("dues")) {
        const auto& d = j.at("dues");
        const std::string model = str_or(d, "model", "arrival");
        if (model == "arrival")
            w.dues = AtArrival{};
        else if (model == "arrival_plus_two_point")
            w.dues = ArrivalPlusTwoPoint{num(d, "offset"), num_or(d, "p", 0.5)};
        else if (model == "arrival_plus_constant")
            w.dues = ArrivalPlusConstant{num(d, "offset")};
        else
            bad("unknown due model '" + model + "'");
    }
    if (j.contains("groups")) {
        const auto& g = j.at("groups");
        GroupSplit split;
        split.groups = static_cast<int>(num(g, "count"));
        const std::string mode = str_or(g, "mode", "per_task");
        if (mode == "per_task")
            split.mode = GroupSplit::Mode::PerTask;
        else if (mode == "per_job")
            split.mode = GroupSplit::Mode::PerJob;
        else
            bad("unknown group mode '" + mode + "'");
        w.split = split;
    }
    return w;
}

Discipline parse_discipline(const std::string& s)
{
    if (s == "nr") return Discipline::NR;
    if (s == "nir") return Discipline::NIR;
    if (s == "lpr") return Discipline::LPR;
    if (s == "r") return Discipline::R;
    bad("unknown discipline '" + s + "'");
}

std::vector<std::uint64_t> parse_seeds(const json& j)
{
    std::vector<std::uint64_t> seeds;
    if (j.is_array()) {
        for (const auto& s : j) seeds.push_back(s.get<std::uint64_t>());
    } else if (j.is_object()) {
        const auto first = static_cast<std::uint64_t>(num_or(j, "first", 1));
        const auto count = static_cast<int>(num_or(j, "count", 20));
        for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
    } else {
        bad("seeds must be a list or {first, count}");
    }
    return seeds;
}

bool is_distributed(const ExperimentConfig& config) { return config.locality.has_value(); }

std::string fmt(double x)
{
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
    return os.str();
}

/// Runs f(0..count-1) on worker threads; results land at their own index.
void parallel_for(int count, const std::function<void(int)>& f)
{
    const int workers = std::min<int>(count, static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next++; i < count; i = next++) f(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<double> arrivals_of(const JobSet& jobs)
{
    std::vector<double> a;
    for (const auto& j : jobs.jobs) a.push_back(j.arrival);
    return a;
}

std::vector<double> dues_of(const JobSet& jobs)
{
    std::vector<double> d;
    for (const auto& j : jobs.jobs) d.push_back(j.due);
    return d;
}

std::vector<double> service_rates(const ServerConfig& servers)
{
    std::vector<double> mu;
    for (const auto& s : servers.servers) mu.push_back(1.0 / s.service.mean());
    return mu;
}

}  // namespace

std::string to_string(Proposition p)
{
    switch (p) {
    case Proposition::Remaining: return "remaining";
    case Proposition::Unassigned: return "unassigned";
    case Proposition::DueRemaining: return "due_remaining";
    case Proposition::DueUnassigned: return "due_unassigned";
    case Proposition::ArrivalRemaining: return "arrival_remaining";
    case Proposition::ArrivalUnassigned: return "arrival_unassigned";
    case Proposition::WorkEfficiency: return "work_efficiency";
    case Proposition::WeakWorkEfficiency: return "weak_work_efficiency";
    }
    return "?";
}

Proposition parse_proposition(const std::string& name)
{
    for (auto p : {Proposition::Remaining, Proposition::Unassigned, Proposition::DueRemaining, Proposition::DueUnassigned,
                   Proposition::ArrivalRemaining, Proposition::ArrivalUnassigned, Proposition::WorkEfficiency,
                   Proposition::WeakWorkEfficiency})
        if (to_string(p) == name) return p;
    bad("unknown proposition '" + name + "'");
}

void ExperimentConfig::validate() const
{
    workload.validate();
    servers.validate();
    if (policies.empty()) bad("config needs at least one policy");
    if (metrics.empty()) bad("config needs at least one metric");
    if (seeds.empty()) bad("config needs at least one seed");
    if (!basis_c && !basis_v) bad("config evaluates neither C nor V");
    if (sweep.rho.empty()) bad("sweep needs at least one rho");
    for (double r : sweep.rho)
        if (!(r > 0.0)) bad("rho values must be > 0");
    if (locality) {
        if (!workload.split) bad("distributed configs need workload.groups");
        const auto topo = GroupTopology::from_servers(servers);
        if (topo.g() != workload.split->groups) bad("workload.groups.count does not match the server groups");
        for (const auto& p : policies) {
            auto rule = parse_group_rule(p);
            if (rule.kind == GroupRule::Kind::GR && rule.priority == Priority::FUT &&
                locality->mode == LocalityConstraint::Mode::PerTask)
                bad("fut-gr is only defined under per-job locality");
        }
    } else {
        for (const auto& p : policies) parse_policy(p);
    }
    if (lower_bound) {
        if (std::find(policies.begin(), policies.end(), *lower_bound) == policies.end())
            bad("lower_bound policy '" + *lower_bound + "' is not in the policy list");
    }
}

ExperimentConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::exception& e) {
        bad(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        ExperimentConfig c;
        c.name = str_or(j, "name", "experiment");
        if (!j.contains("workload")) bad("config needs a workload section");
        c.workload = parse_workload(j.at("workload"));
        if (!j.contains("servers") || !j.at("servers").is_array()) bad("config needs a servers list");
        int id = 0;
        for (const auto& s : j.at("servers")) {
            ServerSpec spec;
            spec.service = parse_law(s.at("service"));
            if (s.contains("overhead")) spec.overhead = parse_law(s.at("overhead"));
            spec.group = static_cast<int>(num_or(s, "group", 0));
            spec.id = id++;
            c.servers.servers.push_back(spec);
        }
        if (j.contains("locality")) {
            const auto& l = j.at("locality");
            LocalitySpec loc;
            const std::string mode = str_or(l, "mode", "per_task");
            if (mode == "per_task")
                loc.mode = LocalityConstraint::Mode::PerTask;
            else if (mode == "per_job")
                loc.mode = LocalityConstraint::Mode::PerJob;
            else
                bad("unknown locality mode '" + mode + "'");
            loc.nbu_discipline = parse_discipline(str_or(l, "nbu_discipline", "nir"));
            loc.exponential_discipline = parse_discipline(str_or(l, "exponential_discipline", "r"));
            c.locality = loc;
        }
        if (j.contains("capacity")) {
            const auto& cap = j.at("capacity");
            if (cap.is_number()) {
                c.capacity = {CapacitySpec::Mode::Explicit, cap.get<double>()};
            } else {
                const auto s = cap.get<std::string>();
                if (s == "no_replication")
                    c.capacity.mode = CapacitySpec::Mode::NoReplication;
                else if (s == "full_replication")
                    c.capacity.mode = CapacitySpec::Mode::FullReplication;
                else
                    bad("unknown capacity '" + s + "'");
            }
        }
        if (j.contains("policies")) c.policies = j.at("policies").get<std::vector<std::string>>();
        if (j.contains("metrics")) {
            c.metrics.clear();
            for (const auto& m : j.at("metrics")) {
                if (m.is_string()) {
                    c.metrics.push_back(parse_metric(m.get<std::string>()));
                } else {
                    auto spec = parse_metric(m.at("name").get<std::string>());
                    spec.epsilon = num_or(m, "epsilon", spec.epsilon);
                    c.metrics.push_back(spec);
                }
            }
        }
        if (j.contains("basis")) {
            const auto b = j.at("basis").get<std::vector<std::string>>();
            c.basis_c = std::find(b.begin(), b.end(), "C") != b.end();
            c.basis_v = std::find(b.begin(), b.end(), "V") != b.end();
        }
        if (j.contains("lower_bound") && !j.at("lower_bound").is_null())
            c.lower_bound = j.at("lower_bound").get<std::string>();
        c.seeds = j.contains("seeds") ? parse_seeds(j.at("seeds")) : parse_seeds(json::object());
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            if (s.contains("ccdf")) {
                c.sweep.mode = SweepSpec::Mode::Ccdf;
                c.sweep.rho = {num_or(s.at("ccdf"), "rho", 0.8)};
            } else if (s.contains("rho")) {
                c.sweep.mode = SweepSpec::Mode::Rho;
                c.sweep.rho = s.at("rho").get<std::vector<double>>();
            } else {
                bad("sweep needs rho or ccdf");
            }
        }
        const std::string coupling = str_or(j, "coupling", "draw_index");
        if (coupling == "draw_index")
            c.run.coupling = Coupling::DrawIndex;
        else if (coupling == "completion_clock")
            c.run.coupling = Coupling::CompletionClock;
        else if (coupling == "residual")
            c.run.coupling = Coupling::Residual;
        else
            bad("unknown coupling '" + coupling + "'");
        c.run.guard_factor = num_or(j, "guard_factor", c.run.guard_factor);
        if (j.contains("bounds")) {
            const auto& b = j.at("bounds");
            BoundSpec spec;
            spec.policy = str_or(b, "policy", spec.policy);
            const std::string kind = str_or(b, "kind", "nbu_sum");
            if (kind == "nbu_sum")
                spec.kind = BoundKind::NbuSum;
            else if (kind == "exponential")
                spec.kind = BoundKind::Exponential;
            else
                bad("unknown bound kind '" + kind + "'");
            spec.rho = num_or(b, "rho", spec.rho);
            c.bounds = spec;
        }
        if (j.contains("orderings")) {
            const auto& o = j.at("orderings");
            OrderingSpec spec;
            for (const auto& p : o.at("pairs")) spec.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
            for (const auto& p : o.at("propositions")) spec.propositions.push_back(parse_proposition(p.get<std::string>()));
            if (o.contains("n")) spec.n = o.at("n").get<int>();
            spec.rho = num_or(o, "rho", spec.rho);
            c.orderings = spec;
        }
        if (j.contains("output")) c.output_dir = str_or(j.at("output"), "dir", c.output_dir);
        c.validate();
        return c;
    } catch (const json::exception& e) {
        bad(std::string("malformed config: ") + e.what());
    } catch (const DomainError& e) {
        bad(std::string("invalid parameter: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) bad("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<std::string> preset_names() { return kPresets; }

ExperimentConfig resolve_config(const std::string& name)
{
    namespace fs = std::filesystem;
    if (fs::exists(name)) return load_config(name);
    if (std::find(kPresets.begin(), kPresets.end(), name) != kPresets.end()) {
        std::vector<fs::path> dirs;
        if (const char* env = std::getenv("REPLISIM_CONFIG_DIR")) dirs.emplace_back(env);
        dirs.emplace_back(REPLISIM_PRESET_DIR);
        for (const auto& d : dirs) {
            const auto p = d / (name + ".json");
            if (fs::exists(p)) return load_config(p.string());
        }
    }
    bad("no config file or preset named '" + name + "'");
}

double capacity_of(const ExperimentConfig& config)
{
    switch (config.capacity.mode) {
    case CapacitySpec::Mode::Explicit: return config.capacity.value;
    case CapacitySpec::Mode::NoReplication: {
        const auto s = config.servers.services();
        return capacity_no_replication(s);
    }
    case CapacitySpec::Mode::FullReplication: {
        const auto s = config.servers.services();
        return capacity_full_replication(s);
    }
    }
    return 0.0;
}

double lambda_for(const ExperimentConfig& config, double rho)
{
    return calibrate_lambda(rho, config.workload, capacity_of(config));
}

JobSet jobs_for(const ExperimentConfig& config, double rho, std::uint64_t seed)
{
    return generate_jobs(with_rate(config.workload, lambda_for(config, rho)), seed);
}

Trace run_policy(const ExperimentConfig& config, const JobSet& jobs, const std::string& policy, std::uint64_t seed)
{
    if (!is_distributed(config)) return run_simulation(jobs, config.servers, parse_policy(policy), seed, config.run).trace;
    auto rule = parse_group_rule(policy);
    rule.nbu_discipline = config.locality->nbu_discipline;
    rule.exponential_discipline = config.locality->exponential_discipline;
    const auto topo = GroupTopology::from_servers(config.servers);
    const auto constraint = LocalityConstraint::from_jobs(jobs, config.locality->mode);
    auto result = run_distributed(jobs, config.servers, topo, constraint, rule, seed, config.run);
    return std::move(result.merged);
}

MeanCI mean_ci(const std::vector<double>& x, double z)
{
    MeanCI r;
    r.count = static_cast<int>(x.size());
    if (x.empty()) {
        r.mean = r.low = r.high = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    // Sum in sorted order so the result does not depend on the seed order.
    auto s = x;
    std::sort(s.begin(), s.end());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    const double sd = s.size() > 1 ? std::sqrt(ss / static_cast<double>(s.size() - 1)) : 0.0;
    const double half = z * sd / std::sqrt(static_cast<double>(s.size()));
    r.mean = mean;
    r.low = mean - half;
    r.high = mean + half;
    return r;
}

ExperimentReport run_experiment(const ExperimentConfig& config)
{
    config.validate();
    ExperimentReport report;
    report.name = config.name;
    report.ccdf_mode = config.sweep.mode == SweepSpec::Mode::Ccdf;

    const auto& rhos = config.sweep.rho;
    const auto& seeds = config.seeds;
    const std::size_t np = config.policies.size();
    const std::size_t nm = config.metrics.size();

    if (config.capacity.mode != CapacitySpec::Mode::Explicit && config.servers.zero_overhead()) {
        // Beyond the full-replication capacity no policy keeps up.
        const double ceiling = std::max(capacity_no_replication(config.servers.services()),
                                        capacity_full_replication(config.servers.services()));
        for (double r : rhos)
            if (r * capacity_of(config) >= ceiling)
                report.warnings.push_back("rho " + fmt(r) + " exceeds the effective capacity");
    }

    if (config.locality && config.locality->mode == LocalityConstraint::Mode::PerTask)
        for (const auto& m : config.metrics)
            if (m.kind != MetricKind::LMax && m.kind != MetricKind::DMax)
                report.warnings.push_back(m.name() + " has no optimality guarantee under per-task locality");

    struct Cell {
        bool finished = false;
        std::vector<double> c;  ///< per metric
        std::vector<double> v;
    };
    // cells[(point * seeds + seed) * policies + policy]
    std::vector<Cell> cells(rhos.size() * seeds.size() * np);
    const int units = static_cast<int>(rhos.size() * seeds.size());
    parallel_for(units, [&](int u) {
        const std::size_t point = static_cast<std::size_t>(u) / seeds.size();
        const std::size_t si = static_cast<std::size_t>(u) % seeds.size();
        const auto jobs = jobs_for(config, rhos[point], seeds[si]);
        const auto a = arrivals_of(jobs);
        const auto d = dues_of(jobs);
        for (std::size_t p = 0; p < np; ++p) {
            const auto trace = run_policy(config, jobs, config.policies[p], seeds[si]);
            Cell& cell = cells[static_cast<std::size_t>(u) * np + p];
            cell.finished = trace.finished;
            if (!trace.finished) continue;
            for (const auto& m : config.metrics) {
                cell.c.push_back(compute_metric(m, trace.C, a, d));
                cell.v.push_back(compute_metric(m, trace.V, a, d));
            }
        }
    });

    std::map<std::string, int> policy_rank;
    for (std::size_t p = 0; p < np; ++p) policy_rank[config.policies[p]] = static_cast<int>(p);

    struct Series {
        std::string policy;
        std::string metric;
        std::size_t p;
        std::size_t m;
        bool use_v;
    };
    std::vector<Series> series;
    for (std::size_t m = 0; m < nm; ++m) {
        const std::string name = config.metrics[m].name();
        for (std::size_t p = 0; p < np; ++p) {
            if (config.basis_c) series.push_back({config.policies[p], name, p, m, false});
            if (config.basis_v) series.push_back({config.policies[p], name + "[V]", p, m, true});
        }
        if (config.lower_bound)
            series.push_back({"lower-bound", name, static_cast<std::size_t>(policy_rank[*config.lower_bound]), m, true});
    }

    for (std::size_t point = 0; point < rhos.size(); ++point) {
        for (const auto& s : series) {
            std::vector<double> values;
            int unstable = 0;
            for (std::size_t si = 0; si < seeds.size(); ++si) {
                const Cell& cell = cells[(point * seeds.size() + si) * np + s.p];
                if (!cell.finished) {
                    ++unstable;
                    continue;
                }
                const double v = s.use_v ? cell.v[s.m] : cell.c[s.m];
                values.push_back(v);
                report.rows.push_back({config.name, s.policy, rhos[point], seeds[si], s.metric, v});
            }
            const auto ci = mean_ci(values);
            report.summary.push_back({s.policy, rhos[point], s.metric, ci.count, ci.mean, ci.low, ci.high, unstable});
            if (unstable > 0)
                report.warnings.push_back(s.policy + " at rho " + fmt(rhos[point]) + ": " + std::to_string(unstable) +
                                          " run(s) hit the instability guard");
            if (report.ccdf_mode && !values.empty()) {
                std::sort(values.begin(), values.end());
                const double total = static_cast<double>(values.size());
                for (std::size_t i = 0; i < values.size(); ++i) {
                    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
                    report.ccdf.push_back({s.policy, s.metric, values[i], static_cast<double>(values.size() - i - 1) / total});
                }
            }
        }
    }
    std::sort(report.warnings.begin(), report.warnings.end());
    report.warnings.erase(std::unique(report.warnings.begin(), report.warnings.end()), report.warnings.end());
    return report;
}

GapBounds gap_bound(std::vector<double> mu, const std::vector<int>& sizes, int m)
{
    if (mu.empty()) throw DomainError("gap_bound needs at least one service rate");
    if (sizes.empty()) throw DomainError("gap_bound needs at least one job");
    if (m < 1 || m > static_cast<int>(mu.size())) m = static_cast<int>(mu.size());
    std::sort(mu.begin(), mu.end());
    std::vector<double> term(static_cast<std::size_t>(m) + 1, 0.0);  // term[k] = sum_{l<=k} 1/(mu_1+...+mu_l)
    double partial = 0.0;
    for (int l = 1; l <= m; ++l) {
        partial += mu[static_cast<std::size_t>(l - 1)];
        term[static_cast<std::size_t>(l)] = term[static_cast<std::size_t>(l - 1)] + 1.0 / partial;
    }
    double total = 0.0;
    int k_max = 0;
    for (int k : sizes) {
        if (k < 1) throw DomainError("job sizes must be >= 1");
        total += term[static_cast<std::size_t>(std::min(k, m))];
        k_max = std::max(k_max, k);
    }
    GapBounds b;
    b.per_job_sum = total / static_cast<double>(sizes.size());
    b.closed_form = (std::log(static_cast<double>(std::min(k_max, m))) + 1.0) / mu.front();
    return b;
}

GapBounds gap_bound(std::vector<double> mu, const SizeModel& sizes, int m)
{
    if (const auto* c = std::get_if<ConstantSize>(&sizes)) return gap_bound(std::move(mu), std::vector<int>{c->k}, m);
    const auto& tp = std::get<TwoPoint>(sizes);
    const auto b1 = gap_bound(mu, std::vector<int>{tp.v1}, m);
    const auto b2 = gap_bound(mu, std::vector<int>{tp.v2}, m);
    GapBounds b;
    b.per_job_sum = tp.p * b1.per_job_sum + (1.0 - tp.p) * b2.per_job_sum;
    const auto both = gap_bound(std::move(mu), std::vector<int>{tp.p > 0.0 ? tp.v1 : tp.v2, tp.p < 1.0 ? tp.v2 : tp.v1}, m);
    b.closed_form = both.closed_form;
    return b;
}

double gap_bound_exponential(const std::vector<double>& mu)
{
    if (mu.empty()) throw DomainError("gap_bound_exponential needs at least one service rate");
    return 1.0 / std::accumulate(mu.begin(), mu.end(), 0.0);
}

GapBoundReport verify_gap(const ExperimentConfig& config, const std::string& policy, BoundKind kind, double rho)
{
    const auto handle = parse_policy(policy);
    if (kind == BoundKind::NbuSum) {
        if (handle.priority != Priority::FUT ||
            (handle.discipline != Discipline::NR && handle.discipline != Discipline::NIR && handle.discipline != Discipline::LPR))
            bad("the NBU gap bound applies to fut-nr, fut-nir and fut-lpr, not '" + policy + "'");
        for (const auto& s : config.servers.servers)
            if (!check_nbu(s.service).holds) bad("the NBU gap bound needs NBU service laws");
    } else {
        if (handle.priority != Priority::FUT || handle.discipline != Discipline::R)
            bad("the exponential gap bound applies to fut-r, not '" + policy + "'");
        for (const auto& s : config.servers.servers)
            if (s.service.family() != Family::Exponential) bad("the exponential gap bound needs exponential service");
    }
    if (is_distributed(config)) bad("gap bounds are defined for a single server set");

    GapBoundReport r;
    r.policy = policy;
    r.kind = kind;
    r.per_seed.assign(config.seeds.size(), std::numeric_limits<double>::quiet_NaN());
    const auto davg = parse_metric("d_avg");
    std::vector<char> finished(config.seeds.size(), 0);
    parallel_for(static_cast<int>(config.seeds.size()), [&](int i) {
        const auto seed = config.seeds[static_cast<std::size_t>(i)];
        const auto jobs = jobs_for(config, rho, seed);
        const auto trace = run_simulation(jobs, config.servers, handle, seed, config.run).trace;
        if (!trace.finished) return;
        const auto a = arrivals_of(jobs);
        const auto d = dues_of(jobs);
        r.per_seed[static_cast<std::size_t>(i)] = compute_metric(davg, trace.C, a, d) - compute_metric(davg, trace.V, a, d);
        finished[static_cast<std::size_t>(i)] = 1;
    });
    std::vector<double> gaps;
    for (std::size_t i = 0; i < finished.size(); ++i)
        if (finished[i]) gaps.push_back(r.per_seed[i]);
    r.gap = mean_ci(gaps);
    const auto mu = service_rates(config.servers);
    if (kind == BoundKind::NbuSum) {
        const auto b = gap_bound(mu, config.workload.sizes, config.servers.m());
        r.bound = b.per_job_sum;
        r.closed_form = b.closed_form;
    } else {
        r.bound = gap_bound_exponential(mu);
        r.closed_form = r.bound;
    }
    const bool complete = gaps.size() == config.seeds.size();
    r.pass = complete && r.gap.high <= r.bound && r.gap.high <= r.closed_form;
    return r;
}

GapBoundReport verify_gap(const ExperimentConfig& config)
{
    if (!config.bounds) bad("config has no bounds section");
    return verify_gap(config, config.bounds->policy, config.bounds->kind, config.bounds->rho);
}

std::pair<bool, bool> evaluate_proposition(Proposition prop, const SimulationResult& p, const SimulationResult& pi)
{
    const RunView vp{p.trace, p.trajectory};
    const RunView vpi{pi.trace, pi.trajectory};
    OrderingReport rep;
    switch (prop) {
    case Proposition::Remaining: rep = check_remaining_ordering(vp, vpi); break;
    case Proposition::Unassigned: rep = check_unassigned_ordering(vp, vpi); break;
    case Proposition::DueRemaining: rep = check_due_ordering(vp, vpi, false); break;
    case Proposition::DueUnassigned: rep = check_due_ordering(vp, vpi, true); break;
    case Proposition::ArrivalRemaining: rep = check_arrival_ordering(vp, vpi, false); break;
    case Proposition::ArrivalUnassigned: rep = check_arrival_ordering(vp, vpi, true); break;
    case Proposition::WorkEfficiency: {
        const bool h = check_work_efficiency(p.trace, pi.trace).holds;
        return {h, h};
    }
    case Proposition::WeakWorkEfficiency: {
        const bool h = check_weak_work_efficiency(p.trace, pi.trace, p.trajectory).holds;
        return {h, h};
    }
    }
    return {rep.holds, rep.conclusion_holds};
}

SuiteReport ordering_suite(const ExperimentConfig& config, const std::vector<std::pair<std::string, std::string>>& pairs,
                           const std::vector<Proposition>& propositions)
{
    if (is_distributed(config)) bad("ordering suites run on a single server set");
    std::vector<std::pair<PolicyHandle, PolicyHandle>> handles;
    for (const auto& [a, b] : pairs) handles.emplace_back(parse_policy(a), parse_policy(b));
    ExperimentConfig local = config;
    double rho = 0.8;
    if (config.orderings) {
        if (config.orderings->n) local.workload.n = *config.orderings->n;
        rho = config.orderings->rho;
    }
    const std::size_t np = pairs.size();
    const std::size_t nq = propositions.size();
    // outcome[(seed * pairs + pair) * props + prop]: bit 0 hypothesis, bit 1 conclusion, bit 2 ran
    std::vector<int> outcome(config.seeds.size() * np * nq, 0);
    parallel_for(static_cast<int>(config.seeds.size()), [&](int s) {
        const auto seed = config.seeds[static_cast<std::size_t>(s)];
        const auto jobs = jobs_for(local, rho, seed);
        for (std::size_t k = 0; k < np; ++k) {
            const auto [rp, rpi] = coupled_run(jobs, config.servers, handles[k].first, handles[k].second, seed, config.run);
            if (!rp.trace.finished || !rpi.trace.finished) continue;
            for (std::size_t q = 0; q < nq; ++q) {
                const auto [h, c] = evaluate_proposition(propositions[q], rp, rpi);
                outcome[(static_cast<std::size_t>(s) * np + k) * nq + q] = 4 | (h ? 1 : 0) | (c ? 2 : 0);
            }
        }
    });
    SuiteReport report;
    for (std::size_t k = 0; k < np; ++k) {
        for (std::size_t q = 0; q < nq; ++q) {
            SuiteEntry e;
            e.p = pairs[k].first;
            e.pi = pairs[k].second;
            e.proposition = propositions[q];
            for (std::size_t s = 0; s < config.seeds.size(); ++s) {
                const int o = outcome[(s * np + k) * nq + q];
                if (!(o & 4)) continue;
                ++e.runs;
                if (o & 1) ++e.hypothesis_holds;
                if (o & 2) ++e.conclusion_holds;
                if ((o & 1) && !(o & 2)) {
                    ++e.implication_violations;
                    e.violating_seeds.push_back(config.seeds[s]);
                }
            }
            report.implication_violations += e.implication_violations;
            report.entries.push_back(std::move(e));
        }
    }
    return report;
}

SuiteReport ordering_suite(const ExperimentConfig& config)
{
    if (!config.orderings) bad("config has no orderings section");
    return ordering_suite(config, config.orderings->pairs, config.orderings->propositions);
}

std::string plot_script(const ExperimentReport& report)
{
    std::ostringstream os;
    os << "#!/usr/bin/env python3\n"
          "# Plots summary.csv (metric against rho) or ccdf.csv (tail against t) from this directory.\n"
          "import csv\n"
          "import os\n"
          "import sys\n"
          "from collections import defaultdict\n\n"
          "import matplotlib\n"
          "matplotlib.use(\"Agg\")\n"
          "import matplotlib.pyplot as plt\n\n"
       << "TITLE = " << std::quoted(report.name) << "\n"
       << "CCDF = " << (report.ccdf_mode ? "True" : "False") << "\n"
       << "HERE = os.path.dirname(os.path.abspath(__file__))\n\n"
          "def load(name):\n"
          "    with open(os.path.join(HERE, name), newline=\"\") as f:\n"
          "        return list(csv.DictReader(f))\n\n"
          "def main():\n"
          "    rows = load(\"ccdf.csv\" if CCDF else \"summary.csv\")\n"
          "    metrics = sorted({r[\"metric\"] for r in rows if not r[\"metric\"].endswith(\"[V]\")})\n"
          "    if not metrics:\n"
          "        print(\"nothing to plot\")\n"
          "        return 0\n"
          "    fig, axes = plt.subplots(1, len(metrics), figsize=(5 * len(metrics), 4), squeeze=False)\n"
          "    for ax, metric in zip(axes[0], metrics):\n"
          "        series = defaultdict(list)\n"
          "        for r in rows:\n"
          "            if r[\"metric\"] == metric:\n"
          "                series[r[\"policy\"]].append(r)\n"
          "        for policy, pts in series.items():\n"
          "            style = \"k--\" if policy == \"lower-bound\" else \"-o\"\n"
          "            if CCDF:\n"
          "                xs = [float(p[\"t\"]) for p in pts]\n"
          "                ys = [float(p[\"ccdf\"]) for p in pts]\n"
          "                ax.step(xs, ys, style.replace(\"o\", \"\"), where=\"post\", label=policy.upper())\n"
          "            else:\n"
          "                pts.sort(key=lambda p: float(p[\"sweep\"]))\n"
          "                xs = [float(p[\"sweep\"]) for p in pts]\n"
          "                ys = [float(p[\"mean\"]) for p in pts]\n"
          "                if metric in (\"t_ms\", \"d_ms\"):\n"
          "                    ys = [y ** 0.5 for y in ys]\n"
          "                ax.plot(xs, ys, style, label=policy.upper())\n"
          "        ax.set_xlabel(\"t\" if CCDF else \"traffic intensity rho\")\n"
          "        ax.set_ylabel(\"CCDF of \" + metric if CCDF else metric)\n"
          "        ax.set_title(TITLE)\n"
          "        ax.legend()\n"
          "    fig.tight_layout()\n"
          "    out = os.path.join(HERE, TITLE + \".png\")\n"
          "    fig.savefig(out, dpi=150)\n"
          "    print(out)\n"
          "    return 0\n\n"
          "if __name__ == \"__main__\":\n"
          "    sys.exit(main())\n";
    return os.str();
}

void emit_outputs(const ExperimentReport& report, const std::string& dir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    auto open = [&](const std::string& name) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write '" + (fs::path(dir) / name).string() + "'");
        return f;
    };
    {
        auto f = open("results.csv");
        f << "experiment,policy,sweep,seed,metric,value\n";
        for (const auto& r : report.rows)
            f << r.experiment << ',' << r.policy << ',' << fmt(r.sweep) << ',' << r.seed << ',' << r.metric << ','
              << fmt(r.value) << '\n';
    }
    {
        auto f = open("summary.csv");
        f << "policy,sweep,metric,count,mean,ci_low,ci_high,unstable\n";
        for (const auto& r : report.summary)
            f << r.policy << ',' << fmt(r.sweep) << ',' << r.metric << ',' << r.count << ',' << fmt(r.mean) << ','
              << fmt(r.ci_low) << ',' << fmt(r.ci_high) << ',' << r.unstable << '\n';
    }
    if (report.ccdf_mode) {
        auto f = open("ccdf.csv");
        f << "policy,metric,t,ccdf\n";
        for (const auto& r : report.ccdf) f << r.policy << ',' << r.metric << ',' << fmt(r.t) << ',' << fmt(r.ccdf) << '\n';
    }
    {
        auto f = open("plot.py");
        f << plot_script(report);
    }
}

}  // namespace replisim
