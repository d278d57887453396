#include "replisim/engine.hpp"

#include "replisim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

namespace replisim {

std::string to_string(CopyOutcome o)
{
    switch (o) {
    case CopyOutcome::Completed: return "completed";
    case CopyOutcome::Redundant: return "redundant";
    case CopyOutcome::Cancelled: return "cancelled";
    }
    return "?";
}

bool ServerConfig::zero_overhead() const
{
    return std::all_of(servers.begin(), servers.end(), [](const auto& s) { return s.overhead.is_zero(); });
}

std::vector<ServiceDistribution> ServerConfig::services() const
{
    std::vector<ServiceDistribution> out;
    for (const auto& s : servers) out.push_back(s.service);
    return out;
}

void ServerConfig::validate() const
{
    if (servers.empty()) throw ConfigError("server config: need at least one server");
    for (const auto& s : servers)
        if (s.service.is_zero()) throw ConfigError("server config: service time must not be identically zero");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void erase_value(std::vector<int>& v, int x)
{
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) v.erase(it);
}

class Engine {
public:
    Engine(const JobSet& jobs, const ServerConfig& cfg, const PolicyHandle& policy, std::uint64_t seed,
           const RunOptions& options)
        : jobs_(jobs), cfg_(cfg), policy_(policy), options_(options), n_(jobs.n()), m_(cfg.m()),
          policy_rng_(seed, 0, Purpose::Policy), clock_rng_(seed, static_cast<std::uint32_t>(cfg.m() ? cfg.id_of(0) : 0), Purpose::Clock),
          choice_rng_(seed, static_cast<std::uint32_t>(cfg.m() ? cfg.id_of(0) : 0), Purpose::ClockChoice)
    {
        cfg_.validate();
        jobs_.validate(false);
        clock_mode_ = options.coupling == Coupling::CompletionClock;
        if (clock_mode_) {
            for (const auto& s : cfg_.servers)
                if (!s.service.absolutely_continuous())
                    throw ConfigError("completion-clock coupling needs absolutely continuous service times");
        }
        if (options.coupling == Coupling::Residual && options.reference) {
            reference_.resize(static_cast<std::size_t>(m_));
            ref_next_.assign(static_cast<std::size_t>(m_), 0);
            for (const auto& c : options.reference->copies) {
                if (c.outcome == CopyOutcome::Cancelled) continue;
                for (int l = 0; l < m_; ++l)
                    if (cfg_.id_of(l) == c.server) reference_[static_cast<std::size_t>(l)].emplace_back(c.start, c.end);
            }
        }
        for (int l = 0; l < m_; ++l) {
            const auto id = static_cast<std::uint32_t>(cfg_.id_of(l));
            service_rng_.emplace_back(seed, id, Purpose::Service);
            overhead_rng_.emplace_back(seed, id, Purpose::Overhead);
            replica_rng_.emplace_back(seed, id, Purpose::Replica);
        }
        js_.resize(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) {
            const auto& spec = jobs_.jobs[static_cast<std::size_t>(i)];
            auto& j = js_[static_cast<std::size_t>(i)];
            j.arrival = spec.arrival;
            j.due = spec.due;
            j.size = spec.size;
        }
        ss_.resize(static_cast<std::size_t>(m_));
        finish_.assign(static_cast<std::size_t>(m_), kInf);
        copy_of_.assign(static_cast<std::size_t>(m_), -1);
        if (policy_.discipline == Discipline::AWE) {
            labels_.resize(static_cast<std::size_t>(m_));
            label_load_.assign(static_cast<std::size_t>(m_), 0);
            label_server_.resize(static_cast<std::size_t>(n_));
        }

        tr_.jobs = jobs_;
        tr_.policy = policy_.name();
        tr_.m = m_;
        tr_.V.assign(static_cast<std::size_t>(n_), std::numeric_limits<double>::quiet_NaN());
        tr_.C = tr_.V;
        tr_.tasks.resize(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) tr_.tasks[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(js_[static_cast<std::size_t>(i)].size));

        guard_ = kInf;
        if (options_.guard_factor > 0.0 && n_ > 0) {
            try {
                double per_task = 0.0;
                for (const auto& s : cfg_.servers) per_task = std::max(per_task, s.service.mean() + s.overhead.mean());
                const double estimate = jobs_.jobs.back().arrival + static_cast<double>(jobs_.k_sum()) * per_task;
                guard_ = options_.guard_factor * std::max(estimate, per_task);
            } catch (const DomainError&) {
                guard_ = kInf;
            }
        }
    }

    SimulationResult run()
    {
        if (clock_mode_) draw_clock_target();
        while (true) {
            if (jobs_done_ == n_ && next_arrival_ == n_ && all_idle()) {
                tr_.finished = true;
                break;
            }
            const double t_arrival = next_arrival_ < n_ ? arrival(next_arrival_) : kInf;
            double t_next = std::min(t_arrival, *std::min_element(finish_.begin(), finish_.end()));
            int clock_server = -1;
            if (clock_mode_ && any_serving()) {
                advance_clock(now_);
                if (auto fire = clock_fire_time(t_next)) {
                    t_next = *fire;
                    clock_server = -2;  // resolved below once the firing time is known
                }
            }
            if (t_next == kInf) throw IntegrityError("simulation stalled with unfinished jobs");
            if (t_next > guard_) {
                tr_.finished = false;
                break;
            }
            if (clock_mode_) advance_clock(t_next);
            now_ = t_next;
            if (clock_server == -2) clock_server = pick_clock_server();

            for (int l = 0; l < m_; ++l) {
                const auto li = static_cast<std::size_t>(l);
                if (l == clock_server) {
                    complete_copy(l);
                    reset_clock();
                } else if (finish_[li] == now_ && ss_[li].mode != ServerMode::Idle) {
                    if (ss_[li].mode == ServerMode::Cancelling)
                        finish_cancel(l);
                    else
                        complete_copy(l);
                }
            }
            while (next_arrival_ < n_ && arrival(next_arrival_) == now_) arrive(next_arrival_++);
            decide();
        }
        SimulationResult out;
        out.trace = std::move(tr_);
        out.trajectory = state_trajectory(out.trace);
        return out;
    }

private:
    double arrival(int i) const { return jobs_.jobs[static_cast<std::size_t>(i)].arrival; }
    JobStatus& job(int i) { return js_[static_cast<std::size_t>(i)]; }

    bool all_idle() const
    {
        return std::all_of(ss_.begin(), ss_.end(), [](const auto& s) { return s.mode == ServerMode::Idle; });
    }
    bool any_serving() const
    {
        return std::any_of(ss_.begin(), ss_.end(), [](const auto& s) { return s.mode == ServerMode::Serving; });
    }

    DecisionContext context()
    {
        DecisionContext ctx;
        ctx.now = now_;
        ctx.jobs = &js_;
        ctx.waiting = &waiting_;
        ctx.active = &active_;
        ctx.servers = &ss_;
        ctx.config = &cfg_;
        ctx.policy_rng = &policy_rng_;
        return ctx;
    }

    void log(EventKind kind, TaskRef t, int server)
    {
        tr_.events.push_back(Event{now_, kind, t.job, t.task, server < 0 ? -1 : cfg_.id_of(server)});
    }

    // completion clock ----------------------------------------------------

    void draw_clock_target() { clock_target_ = -std::log(clock_rng_.uniform()); }

    double clock_increment(double t) const
    {
        double sum = 0.0;
        for (int l = 0; l < m_; ++l) {
            const auto& s = ss_[static_cast<std::size_t>(l)];
            if (s.mode != ServerMode::Serving) continue;
            const auto& law = cfg_.servers[static_cast<std::size_t>(l)].service;
            sum += law.cumulative_hazard(t - s.start) - law.cumulative_hazard(std::max(0.0, clock_last_ - s.start));
        }
        return sum;
    }

    void advance_clock(double t)
    {
        if (t <= clock_last_) return;
        clock_acc_ += clock_increment(t);
        clock_last_ = t;
    }

    void reset_clock()
    {
        clock_acc_ = 0.0;
        clock_last_ = now_;
        draw_clock_target();
    }

    std::optional<double> clock_fire_time(double horizon) const
    {
        const double need = clock_target_ - clock_acc_;
        if (need <= 0.0) return clock_last_;
        double lo = clock_last_;
        double hi = horizon;
        if (hi == kInf) {
            double step = 1.0;
            hi = lo + step;
            while (clock_increment(hi) < need) {
                step *= 2.0;
                hi = lo + step;
                if (step > 1e300) return std::nullopt;
            }
        } else if (clock_increment(hi) < need) {
            return std::nullopt;
        }
        for (int it = 0; it < 2000; ++it) {
            const double mid = lo + 0.5 * (hi - lo);
            if (mid <= lo || mid >= hi) break;
            if (clock_increment(mid) < need)
                lo = mid;
            else
                hi = mid;
        }
        return hi;
    }

    int pick_clock_server()
    {
        std::vector<double> w(static_cast<std::size_t>(m_), 0.0);
        double total = 0.0;
        for (int l = 0; l < m_; ++l) {
            const auto& s = ss_[static_cast<std::size_t>(l)];
            if (s.mode != ServerMode::Serving) continue;
            w[static_cast<std::size_t>(l)] = cfg_.servers[static_cast<std::size_t>(l)].service.hazard(now_ - s.start);
            total += w[static_cast<std::size_t>(l)];
        }
        if (!(total > 0.0)) {
            total = 0.0;
            for (int l = 0; l < m_; ++l) {
                const auto& s = ss_[static_cast<std::size_t>(l)];
                if (s.mode != ServerMode::Serving) continue;
                const auto& law = cfg_.servers[static_cast<std::size_t>(l)].service;
                w[static_cast<std::size_t>(l)] = law.cumulative_hazard(now_ - s.start) + 1e-300;
                total += w[static_cast<std::size_t>(l)];
            }
        }
        const double u = choice_rng_.uniform() * total;
        double acc = 0.0;
        int last = -1;
        for (int l = 0; l < m_; ++l) {
            if (w[static_cast<std::size_t>(l)] <= 0.0) continue;
            last = l;
            acc += w[static_cast<std::size_t>(l)];
            if (u < acc) return l;
        }
        return last;
    }

    // events --------------------------------------------------------------

    void arrive(int i)
    {
        auto& j = job(i);
        j.arrived = true;
        j.remaining = j.size;
        j.unassigned = j.size;
        j.copies.assign(static_cast<std::size_t>(j.size), 0);
        j.done.assign(static_cast<std::size_t>(j.size), 0);
        waiting_.push_back(i);
        active_.push_back(i);
        log(EventKind::Arrival, TaskRef{i, -1}, -1);
        if (policy_.discipline == Discipline::AWE) label_tasks(i);
    }

    void label_tasks(int i)
    {
        auto& j = job(i);
        const int d = std::min(policy_.awe_d, m_);
        label_server_[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(j.size), -1);
        std::vector<int> pool(static_cast<std::size_t>(m_));
        for (int q = 0; q < j.size; ++q) {
            std::iota(pool.begin(), pool.end(), 0);
            int best = -1;
            for (int c = 0; c < d; ++c) {
                const int left = m_ - c;
                const int k = c + std::min(left - 1, static_cast<int>(policy_rng_.uniform() * left));
                std::swap(pool[static_cast<std::size_t>(c)], pool[static_cast<std::size_t>(k)]);
                const int l = pool[static_cast<std::size_t>(c)];
                if (best < 0 || label_load_[static_cast<std::size_t>(l)] < label_load_[static_cast<std::size_t>(best)] ||
                    (label_load_[static_cast<std::size_t>(l)] == label_load_[static_cast<std::size_t>(best)] && l < best))
                    best = l;
            }
            labels_[static_cast<std::size_t>(best)].push_back(TaskRef{i, q});
            ++label_load_[static_cast<std::size_t>(best)];
            label_server_[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)] = best;
        }
    }

    void complete_copy(int l)
    {
        const auto li = static_cast<std::size_t>(l);
        const TaskRef t = ss_[li].task;
        auto& j = job(t.job);
        const auto q = static_cast<std::size_t>(t.task);
        auto& copy = tr_.copies[static_cast<std::size_t>(copy_of_[li])];
        copy.end = now_;
        --j.copies[q];
        ss_[li] = ServerStatus{};
        finish_[li] = kInf;
        copy_of_[li] = -1;
        if (j.done[q]) {
            copy.outcome = CopyOutcome::Redundant;
            log(EventKind::RedundantCompletion, t, l);
            return;
        }
        copy.outcome = CopyOutcome::Completed;
        j.done[q] = 1;
        --j.remaining;
        tr_.tasks[static_cast<std::size_t>(t.job)][q].completion = now_;
        tr_.completions.push_back(now_);
        log(EventKind::Completion, t, l);
        if (policy_.discipline == Discipline::AWE) --label_load_[static_cast<std::size_t>(label_server_[static_cast<std::size_t>(t.job)][q])];
        if (j.remaining == 0) {
            tr_.C[static_cast<std::size_t>(t.job)] = now_;
            erase_value(active_, t.job);
            ++jobs_done_;
        }

        std::vector<DuplicateCopy> dups;
        for (int l2 = 0; l2 < m_; ++l2) {
            const auto& s = ss_[static_cast<std::size_t>(l2)];
            // A copy finishing at this same instant completes as redundant.
            if (s.mode == ServerMode::Serving && s.task == t && finish_[static_cast<std::size_t>(l2)] != now_)
                dups.push_back(DuplicateCopy{l2, t, now_ - s.start});
        }
        if (dups.empty()) return;
        const auto run = on_duplicate_completion(context(), policy_, dups);
        for (std::size_t c = 0; c < dups.size(); ++c)
            if (!run[c]) cancel(dups[c].server);
    }

    void cancel(int l)
    {
        const auto li = static_cast<std::size_t>(l);
        const TaskRef t = ss_[li].task;
        auto& copy = tr_.copies[static_cast<std::size_t>(copy_of_[li])];
        copy.outcome = CopyOutcome::Cancelled;
        copy.cancel_start = now_;
        --job(t.job).copies[static_cast<std::size_t>(t.task)];
        log(EventKind::CancelStart, t, l);
        const auto& overhead = cfg_.servers[li].overhead;
        const double o = overhead.is_zero() ? 0.0 : overhead.sample(overhead_rng_[li]);
        if (o > 0.0) {
            ss_[li].mode = ServerMode::Cancelling;
            ss_[li].start = now_;
            finish_[li] = now_ + o;
            copy.end = now_ + o;
        } else {
            copy.end = now_;
            log(EventKind::CancelDone, t, l);
            ss_[li] = ServerStatus{};
            finish_[li] = kInf;
            copy_of_[li] = -1;
        }
    }

    void finish_cancel(int l)
    {
        const auto li = static_cast<std::size_t>(l);
        log(EventKind::CancelDone, ss_[li].task, l);
        ss_[li] = ServerStatus{};
        finish_[li] = kInf;
        copy_of_[li] = -1;
    }

    void start_copy(int l, TaskRef t, bool fresh)
    {
        const auto li = static_cast<std::size_t>(l);
        auto& j = job(t.job);
        const auto q = static_cast<std::size_t>(t.task);
        if (j.copies[q] == 0 && fresh) tr_.tasks[static_cast<std::size_t>(t.job)][q].first_start = now_;
        ++j.copies[q];
        ss_[li].mode = ServerMode::Serving;
        ss_[li].task = t;
        ss_[li].start = now_;
        TaskCopy copy;
        copy.job = t.job;
        copy.task = t.task;
        copy.server = cfg_.id_of(l);
        copy.start = now_;
        copy.end = kInf;
        copy_of_[li] = static_cast<int>(tr_.copies.size());
        tr_.copies.push_back(copy);
        if (clock_mode_)
            finish_[li] = kInf;
        else if (const auto x = residual_coupled(l))
            finish_[li] = now_ + *x;
        else
            finish_[li] = now_ + cfg_.servers[li].service.sample(fresh ? service_rng_[li] : replica_rng_[li]);
        log(fresh ? EventKind::Start : EventKind::ReplicaStart, t, l);
    }

    // Service time F^-1(1 - S(e + r) / S(e)) where the reference copy on this
    // server has age e and residual r. A copy that ran to completion here
    // outlives its reference copy, so only cancelled copies see one twice.
    std::optional<double> residual_coupled(int l)
    {
        if (reference_.empty()) return std::nullopt;
        const auto li = static_cast<std::size_t>(l);
        const auto& copies = reference_[li];
        auto& k = ref_next_[li];
        while (k < copies.size() && copies[k].second <= now_) ++k;
        if (k == copies.size() || copies[k].first > now_) return std::nullopt;
        const auto& law = cfg_.servers[li].service;
        const double age = now_ - copies[k].first;
        const double survive_age = law.ccdf(age);
        const double survive_end = law.ccdf(copies[k].second - copies[k].first);
        if (!(survive_age > 0.0)) return std::nullopt;
        const double u = 1.0 - survive_end / survive_age;
        if (!(u >= 0.0 && u < 1.0)) return std::nullopt;
        return law.quantile(u);
    }

    [[noreturn]] void violation(const std::string& what, int l, TaskRef t) const
    {
        std::ostringstream os;
        os << policy_.name() << " at t=" << now_ << ", server " << l << ", job " << t.job + 1 << " task " << t.task + 1
           << ": " << what;
        throw PolicyViolation(os.str());
    }

    void start_fresh(int l, TaskRef t)
    {
        if (ss_[static_cast<std::size_t>(l)].mode != ServerMode::Idle) violation("server is busy (preemption)", l, t);
        if (t.job < 0 || t.job >= n_) violation("no such job", l, t);
        auto& j = job(t.job);
        if (!j.arrived) violation("job has not arrived", l, t);
        if (j.unassigned <= 0) violation("job has no unassigned task", l, t);
        if (policy_.discipline != Discipline::AWE) {
            if (t.task != j.next_task) violation("fresh task index out of order", l, t);
            ++j.next_task;
        }
        --j.unassigned;
        if (j.unassigned == 0) {
            tr_.V[static_cast<std::size_t>(t.job)] = now_;
            erase_value(waiting_, t.job);
        }
        start_copy(l, t, true);
    }

    void start_replica(int l, TaskRef t)
    {
        if (ss_[static_cast<std::size_t>(l)].mode != ServerMode::Idle) violation("server is busy (preemption)", l, t);
        if (t.job < 0 || t.job >= n_) violation("no such job", l, t);
        const auto& j = job(t.job);
        if (!j.arrived || t.task < 0 || t.task >= j.size) violation("no such task", l, t);
        const auto q = static_cast<std::size_t>(t.task);
        if (j.done[q]) violation("task already completed", l, t);
        if (j.copies[q] < 1) violation("replica of a task that is not in service", l, t);
        start_copy(l, t, false);
    }

    void decide()
    {
        const auto ctx = context();
        switch (policy_.discipline) {
        case Discipline::R: {
            if (!all_idle() || waiting_.empty()) return;
            const Action a = r_barrier_assign(ctx, policy_);
            if (a.kind != Action::Kind::Assign) return;
            start_fresh(0, a.task);
            for (int l = 1; l < m_; ++l) start_replica(l, a.task);
            return;
        }
        case Discipline::AWE:
            for (int l = 0; l < m_; ++l) {
                auto& queue = labels_[static_cast<std::size_t>(l)];
                if (ss_[static_cast<std::size_t>(l)].mode != ServerMode::Idle || queue.empty()) continue;
                const TaskRef t = queue.front();
                queue.pop_front();
                start_fresh(l, t);
            }
            return;
        default:
            for (int l = 0; l < m_; ++l) {
                if (ss_[static_cast<std::size_t>(l)].mode != ServerMode::Idle) continue;
                const Action a = on_server_idle(ctx, policy_, l);
                if (a.kind == Action::Kind::Assign)
                    start_fresh(l, a.task);
                else if (a.kind == Action::Kind::Replicate)
                    start_replica(l, a.task);
            }
            return;
        }
    }

    const JobSet& jobs_;
    const ServerConfig& cfg_;
    const PolicyHandle& policy_;
    RunOptions options_;
    int n_;
    int m_;
    bool clock_mode_ = false;
    double guard_ = kInf;

    std::vector<JobStatus> js_;
    std::vector<ServerStatus> ss_;
    std::vector<double> finish_;
    std::vector<int> copy_of_;
    std::vector<int> waiting_;
    std::vector<int> active_;
    std::vector<RngStream> service_rng_;
    std::vector<RngStream> overhead_rng_;
    std::vector<RngStream> replica_rng_;
    RngStream policy_rng_;
    RngStream clock_rng_;
    RngStream choice_rng_;
    std::vector<std::vector<std::pair<double, double>>> reference_;
    std::vector<std::size_t> ref_next_;
    std::vector<std::deque<TaskRef>> labels_;
    std::vector<int> label_load_;
    std::vector<std::vector<int>> label_server_;

    double clock_target_ = 0.0;
    double clock_acc_ = 0.0;
    double clock_last_ = 0.0;

    Trace tr_;
    double now_ = 0.0;
    int next_arrival_ = 0;
    int jobs_done_ = 0;
};

}  // namespace

SimulationResult run_simulation(const JobSet& jobs, const ServerConfig& servers, const PolicyHandle& policy,
                                std::uint64_t seed, const RunOptions& options)
{
    return Engine(jobs, servers, policy, seed, options).run();
}

std::pair<SimulationResult, SimulationResult> coupled_run(const JobSet& jobs, const ServerConfig& servers,
                                                          const PolicyHandle& a, const PolicyHandle& b,
                                                          std::uint64_t seed, const RunOptions& options)
{
    if (options.coupling == Coupling::Residual) {
        RunOptions first = options;
        first.coupling = Coupling::DrawIndex;
        first.reference = nullptr;
        auto ra = run_simulation(jobs, servers, a, seed, first);
        RunOptions second = options;
        second.reference = &ra.trace;
        auto rb = run_simulation(jobs, servers, b, seed, second);
        return {std::move(ra), std::move(rb)};
    }
    auto ra = run_simulation(jobs, servers, a, seed, options);
    auto rb = run_simulation(jobs, servers, b, seed, options);
    return {std::move(ra), std::move(rb)};
}

StateTrajectory::StateTrajectory(std::vector<int> sizes, std::vector<Step> steps)
    : sizes_(std::move(sizes)), steps_(std::move(steps))
{
}

std::vector<double> StateTrajectory::times() const
{
    std::vector<double> t;
    for (const auto& s : steps_)
        if (t.empty() || t.back() != s.time) t.push_back(s.time);
    return t;
}

StateTrajectory::Snapshot StateTrajectory::at(double t) const
{
    Cursor c(*this);
    c.advance_to(t);
    return Snapshot{c.remaining(), c.unassigned()};
}

StateTrajectory::Cursor::Cursor(const StateTrajectory& traj)
    : traj_(&traj), remaining_(static_cast<std::size_t>(traj.n()), 0), unassigned_(static_cast<std::size_t>(traj.n()), 0)
{
}

void StateTrajectory::Cursor::advance_to(double t)
{
    const auto& steps = traj_->steps_;
    while (next_ < steps.size() && steps[next_].time <= t) {
        const auto& s = steps[next_++];
        remaining_[static_cast<std::size_t>(s.job)] += s.d_remaining;
        unassigned_[static_cast<std::size_t>(s.job)] += s.d_unassigned;
        total_unassigned_ += s.d_unassigned;
    }
}

StateTrajectory state_trajectory(const Trace& trace)
{
    const int n = trace.jobs.n();
    std::vector<int> sizes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sizes[static_cast<std::size_t>(i)] = trace.jobs.jobs[static_cast<std::size_t>(i)].size;
    std::vector<int> xi(static_cast<std::size_t>(n), 0);
    std::vector<int> gamma(static_cast<std::size_t>(n), 0);
    std::vector<char> arrived(static_cast<std::size_t>(n), 0);
    std::vector<StateTrajectory::Step> steps;
    double last = -kInf;
    auto fail = [](const Event& e, const std::string& what) {
        std::ostringstream os;
        os << "trace integrity: " << what << " at t=" << e.time << " (job " << e.job + 1 << ")";
        throw IntegrityError(os.str());
    };
    for (const auto& e : trace.events) {
        if (e.time < last) fail(e, "events out of time order");
        last = e.time;
        if (e.job < 0 || e.job >= n) fail(e, "unknown job");
        const auto i = static_cast<std::size_t>(e.job);
        switch (e.kind) {
        case EventKind::Arrival:
            if (arrived[i]) fail(e, "job arrives twice");
            arrived[i] = 1;
            xi[i] = gamma[i] = sizes[i];
            steps.push_back({e.time, e.job, sizes[i], sizes[i]});
            break;
        case EventKind::Start:
            if (!arrived[i] || gamma[i] <= 0) fail(e, "start without an unassigned task");
            --gamma[i];
            steps.push_back({e.time, e.job, 0, -1});
            break;
        case EventKind::Completion:
            if (!arrived[i] || xi[i] <= 0) fail(e, "completion without a remaining task");
            --xi[i];
            if (gamma[i] > xi[i]) fail(e, "more unassigned than remaining tasks");
            steps.push_back({e.time, e.job, -1, 0});
            break;
        default: break;
        }
    }
    if (trace.finished)
        for (int i = 0; i < n; ++i)
            if (xi[static_cast<std::size_t>(i)] != 0) throw IntegrityError("trace integrity: finished trace with remaining tasks");
    return StateTrajectory(std::move(sizes), std::move(steps));
}

namespace {

void require_finished(const Trace& trace)
{
    if (trace.finished) return;
    std::ostringstream os;
    os << "run did not finish; unfinished jobs:";
    int listed = 0;
    for (std::size_t i = 0; i < trace.C.size(); ++i)
        if (std::isnan(trace.C[i])) {
            if (listed++ < 20) os << ' ' << i + 1;
        }
    if (listed > 20) os << " ... (" << listed << " total)";
    throw IntegrityError(os.str());
}

}  // namespace

std::vector<double> start_time_vector(const Trace& trace)
{
    require_finished(trace);
    return trace.V;
}

std::vector<double> completion_vector(const Trace& trace)
{
    require_finished(trace);
    return trace.C;
}

std::vector<double> sorted(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v;
}

void write_trace_csv(std::ostream& os, const Trace& trace)
{
    os << "job,task,server,start,end,outcome\n";
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& c : trace.copies)
        os << c.job + 1 << ',' << c.task + 1 << ',' << c.server + 1 << ',' << c.start << ',' << c.end << ','
           << to_string(c.outcome) << '\n';
    os.precision(old);
}

void write_job_summary_csv(std::ostream& os, const Trace& trace)
{
    os << "job,arrival,due,size,V,C\n";
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < trace.jobs.jobs.size(); ++i) {
        const auto& j = trace.jobs.jobs[i];
        os << j.id << ',' << j.arrival << ',' << j.due << ',' << j.size << ',' << trace.V[i] << ',' << trace.C[i] << '\n';
    }
    os.precision(old);
}

}  // namespace replisim
