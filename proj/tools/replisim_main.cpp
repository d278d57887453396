#include "replisim/errors.hpp"
#include "replisim/harness.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace replisim;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kCheckFailed = 2;

std::string output_dir(const ExperimentConfig& config, const std::string& flag)
{
    if (const char* env = std::getenv("REPLISIM_OUTPUT_DIR"); env && *env) return env;
    if (!flag.empty()) return flag;
    return config.output_dir;
}

void apply_overrides(ExperimentConfig& config, int seed_count, int n)
{
    if (seed_count > 0) {
        const auto first = config.seeds.front();
        config.seeds.clear();
        for (int i = 0; i < seed_count; ++i) config.seeds.push_back(first + static_cast<std::uint64_t>(i));
    }
    if (n > 0) config.workload.n = n;
    config.validate();
}

std::string kind_name(BoundKind k) { return k == BoundKind::NbuSum ? "nbu_sum" : "exponential"; }

int cmd_run(ExperimentConfig config, const std::string& out, bool trace)
{
    const auto report = run_experiment(config);
    const auto dir = output_dir(config, out);
    emit_outputs(report, dir);
    if (trace) {
        const auto jobs = jobs_for(config, config.sweep.rho.front(), config.seeds.front());
        const auto t = run_policy(config, jobs, config.policies.front(), config.seeds.front());
        std::ofstream tf(fs::path(dir) / "trace.csv");
        write_trace_csv(tf, t);
        std::ofstream jf(fs::path(dir) / "jobs_summary.csv");
        write_job_summary_csv(jf, t);
    }
    for (const auto& s : report.summary)
        std::cout << s.policy << "  rho=" << s.sweep << "  " << s.metric << "  mean=" << s.mean << "  ci=[" << s.ci_low
                  << ", " << s.ci_high << "]" << (s.unstable ? "  UNSTABLE" : "") << '\n';
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "wrote " << dir << '\n';
    return kOk;
}

int cmd_verify(const ExperimentConfig& config, const std::string& out)
{
    const auto r = verify_gap(config);
    std::ostringstream os;
    os << "policy " << r.policy << " bound " << kind_name(r.kind) << '\n'
       << "gap mean " << r.gap.mean << " ci [" << r.gap.low << ", " << r.gap.high << "] over " << r.gap.count << " seeds\n"
       << "bound " << r.bound << " closed form " << r.closed_form << '\n'
       << (r.pass ? "PASS" : "FAIL") << '\n';
    std::cout << os.str();
    const auto dir = output_dir(config, out);
    fs::create_directories(dir);
    std::ofstream(fs::path(dir) / "bounds.txt") << os.str();
    return r.pass ? kOk : kCheckFailed;
}

int cmd_orderings(const ExperimentConfig& config, const std::string& out)
{
    const auto r = ordering_suite(config);
    std::ostringstream os;
    os << "p,pi,proposition,runs,hypothesis_holds,conclusion_holds,implication_violations\n";
    for (const auto& e : r.entries)
        os << e.p << ',' << e.pi << ',' << to_string(e.proposition) << ',' << e.runs << ',' << e.hypothesis_holds << ','
           << e.conclusion_holds << ',' << e.implication_violations << '\n';
    std::cout << os.str() << "total implication violations: " << r.implication_violations << '\n';
    const auto dir = output_dir(config, out);
    fs::create_directories(dir);
    std::ofstream(fs::path(dir) / "orderings.csv") << os.str();
    return r.implication_violations == 0 ? kOk : kCheckFailed;
}

int cmd_export(const ExperimentConfig& config, const std::string& out, double rho)
{
    const auto jobs = jobs_for(config, rho > 0.0 ? rho : config.sweep.rho.front(), config.seeds.front());
    const auto dir = output_dir(config, out);
    fs::create_directories(dir);
    const auto path = fs::path(dir) / "jobs.csv";
    std::ofstream f(path);
    write_jobs_csv(f, jobs);
    std::cout << "wrote " << path.string() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"replisim: scheduling with task replication in multi-server queues"};
    app.require_subcommand(1);
    std::string config_name;
    std::string out;
    int seed_count = 0;
    int n = 0;
    bool trace = false;
    double rho = 0.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_name, "config file or preset name (fig5 ... fig18)")->required();
        sub->add_option("-o,--out", out, "output directory (REPLISIM_OUTPUT_DIR takes precedence)");
        sub->add_option("--seeds", seed_count, "number of seeds, counting from the first configured seed");
        sub->add_option("-n,--jobs", n, "number of jobs per run");
    };
    auto* run = app.add_subcommand("run", "run the experiment and write CSVs and a plot script");
    add_common(run);
    run->add_flag("--trace", trace, "also write the trace of the first policy, seed and sweep point");
    auto* verify = app.add_subcommand("verify-bounds", "compare the measured C-V gap with the analytic bound");
    add_common(verify);
    auto* orderings = app.add_subcommand("orderings", "run the sample-path ordering suite");
    add_common(orderings);
    auto* exp = app.add_subcommand("export-jobs", "write the generated job set of the first seed as CSV");
    add_common(exp);
    exp->add_option("--rho", rho, "traffic intensity (defaults to the first sweep point)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        auto config = resolve_config(config_name);
        apply_overrides(config, seed_count, n);
        if (run->parsed()) return cmd_run(config, out, trace);
        if (verify->parsed()) return cmd_verify(config, out);
        if (orderings->parsed()) return cmd_orderings(config, out);
        return cmd_export(config, out, rho);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
}
