#include "replisim/policies.hpp"

#include "replisim/errors.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace replisim {

std::string to_string(Priority p)
{
    switch (p) {
    case Priority::FUT: return "fut";
    case Priority::EDD: return "edd";
    case Priority::FCFS: return "fcfs";
    case Priority::Random: return "rand";
    }
    return "?";
}

std::string to_string(Discipline d)
{
    switch (d) {
    case Discipline::NR: return "nr";
    case Discipline::NIR: return "nir";
    case Discipline::LPR: return "lpr";
    case Discipline::R: return "r";
    case Discipline::AWE: return "awe";
    }
    return "?";
}

std::string PolicyHandle::name() const
{
    if (!label.empty()) return label;
    if (discipline == Discipline::AWE) return "awe-" + std::to_string(awe_d);
    return to_string(priority) + "-" + to_string(discipline);
}

PolicyHandle parse_policy(std::string_view name)
{
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto dash = s.find('-');
    if (dash == std::string::npos) throw ConfigError("unknown policy '" + std::string(name) + "'");
    const std::string head = s.substr(0, dash);
    const std::string tail = s.substr(dash + 1);
    PolicyHandle h;
    if (head == "awe") {
        h.priority = Priority::FCFS;
        h.discipline = Discipline::AWE;
        try {
            std::size_t used = 0;
            h.awe_d = std::stoi(tail, &used);
            if (used != tail.size() || h.awe_d < 1) throw std::invalid_argument("d");
        } catch (const std::logic_error&) {
            throw ConfigError("awe-d needs a positive integer d, got '" + std::string(name) + "'");
        }
        return h;
    }
    if (head == "fut")
        h.priority = Priority::FUT;
    else if (head == "edd")
        h.priority = Priority::EDD;
    else if (head == "fcfs")
        h.priority = Priority::FCFS;
    else if (head == "rand")
        h.priority = Priority::Random;
    else
        throw ConfigError("unknown priority rule in policy '" + std::string(name) + "'");
    if (tail == "nr")
        h.discipline = Discipline::NR;
    else if (tail == "nir")
        h.discipline = Discipline::NIR;
    else if (tail == "lpr")
        h.discipline = Discipline::LPR;
    else if (tail == "r")
        h.discipline = Discipline::R;
    else
        throw ConfigError("unknown replication discipline in policy '" + std::string(name) + "'");
    return h;
}

namespace {

double start_key(const JobStatus& j, Priority p)
{
    switch (p) {
    case Priority::FUT: return j.unassigned;
    case Priority::EDD: return j.due;
    case Priority::FCFS: return j.arrival;
    case Priority::Random: return 0.0;
    }
    return 0.0;
}

double replica_key(const JobStatus& j, Priority p)
{
    return p == Priority::FUT ? static_cast<double>(j.remaining) : start_key(j, p);
}

int pick_random(const std::vector<int>& ids, RngStream* rng)
{
    if (!rng) throw PolicyViolation("randomized policy used without a policy stream");
    const auto n = ids.size();
    const auto k = std::min(n - 1, static_cast<std::size_t>(rng->uniform() * static_cast<double>(n)));
    return ids[k];
}

std::optional<int> least_copied_task(const DecisionContext& ctx, int job)
{
    const auto& j = ctx.job(job);
    const int m = ctx.config->m();
    int best = -1;
    for (int q = 0; q < j.next_task; ++q) {
        const auto qi = static_cast<std::size_t>(q);
        if (j.done[qi] || j.copies[qi] < 1 || j.copies[qi] >= m) continue;
        if (best < 0 || j.copies[qi] < j.copies[static_cast<std::size_t>(best)]) best = q;
    }
    if (best < 0) return std::nullopt;
    return best;
}

}  // namespace

std::optional<int> select_job(const DecisionContext& ctx, Priority priority)
{
    const auto& waiting = *ctx.waiting;
    if (waiting.empty()) return std::nullopt;
    if (priority == Priority::Random) return pick_random(waiting, ctx.policy_rng);
    int best = waiting.front();
    double best_key = start_key(ctx.job(best), priority);
    for (int i : waiting) {
        const double k = start_key(ctx.job(i), priority);
        if (k < best_key) {
            best = i;
            best_key = k;
        }
    }
    return best;
}

std::optional<TaskRef> default_replica(const DecisionContext& ctx, Priority priority, int /*server*/)
{
    std::vector<int> candidates;
    for (int i : *ctx.active)
        if (least_copied_task(ctx, i)) candidates.push_back(i);
    if (candidates.empty()) return std::nullopt;
    int job = candidates.front();
    if (priority == Priority::Random) {
        job = pick_random(candidates, ctx.policy_rng);
    } else {
        double best_key = replica_key(ctx.job(job), priority);
        for (int i : candidates) {
            const double k = replica_key(ctx.job(i), priority);
            if (k < best_key) {
                job = i;
                best_key = k;
            }
        }
    }
    return TaskRef{job, *least_copied_task(ctx, job)};
}

Action on_server_idle(const DecisionContext& ctx, const PolicyHandle& handle, int server)
{
    if (auto job = select_job(ctx, handle.priority)) return {Action::Kind::Assign, TaskRef{*job, ctx.job(*job).next_task}};
    std::optional<TaskRef> replica;
    switch (handle.discipline) {
    case Discipline::NR:
    case Discipline::R:
    case Discipline::AWE: break;
    case Discipline::NIR:
        replica = handle.replicate ? handle.replicate(ctx, server) : default_replica(ctx, handle.priority, server);
        break;
    case Discipline::LPR:
        if (handle.replicate) replica = handle.replicate(ctx, server);
        break;
    }
    if (replica) return {Action::Kind::Replicate, *replica};
    return {};
}

Action r_barrier_assign(const DecisionContext& ctx, const PolicyHandle& handle)
{
    for (const auto& s : *ctx.servers)
        if (s.mode != ServerMode::Idle) throw IntegrityError("r_barrier_assign called while a server is busy");
    if (auto job = select_job(ctx, handle.priority)) return {Action::Kind::Assign, TaskRef{*job, ctx.job(*job).next_task}};
    return {};
}

std::vector<bool> on_duplicate_completion(const DecisionContext& ctx, const PolicyHandle& handle,
                                          const std::vector<DuplicateCopy>& duplicates)
{
    std::vector<bool> run(duplicates.size(), false);
    for (std::size_t c = 0; c < duplicates.size(); ++c) {
        const auto& dup = duplicates[c];
        const auto& spec = ctx.config->servers[static_cast<std::size_t>(dup.server)];
        if (handle.discipline == Discipline::R || spec.overhead.is_zero()) continue;
        const ResidualLaw residual(spec.service, dup.elapsed);
        if (hazard_rate_leq(residual, ResidualLaw(spec.overhead)).holds)
            run[c] = true;
        else if (handle.complete)
            run[c] = handle.complete(ctx, dup);
    }
    return run;
}

}  // namespace replisim
