#include "replisim/distributions.hpp"

#include "replisim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace replisim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what)
{
    if (!ok) throw ConfigError(what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }
bool finite_pos(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

std::string to_string(Family f)
{
    switch (f) {
    case Family::Constant: return "constant";
    case Family::Exponential: return "exponential";
    case Family::ShiftedExponential: return "shifted_exponential";
    case Family::Lomax: return "lomax";
    case Family::HyperExponential: return "hyperexponential";
    }
    return "?";
}

std::string to_string(DistClass c)
{
    switch (c) {
    case DistClass::NBU: return "nbu";
    case DistClass::NWU: return "nwu";
    case DistClass::Exponential: return "exponential";
    case DistClass::Neither: return "neither";
    }
    return "?";
}

ServiceDistribution ServiceDistribution::constant(double value)
{
    require(finite_nonneg(value), "constant: value must be finite and >= 0");
    ServiceDistribution d;
    d.family_ = Family::Constant;
    d.value_ = value;
    return d;
}

ServiceDistribution ServiceDistribution::exponential(double rate)
{
    require(finite_pos(rate), "exponential: rate must be > 0");
    ServiceDistribution d;
    d.family_ = Family::Exponential;
    d.rate_ = rate;
    return d;
}

ServiceDistribution ServiceDistribution::shifted_exponential(double shift, double rate)
{
    require(finite_nonneg(shift), "shifted_exponential: shift must be >= 0");
    require(finite_pos(rate), "shifted_exponential: rate must be > 0");
    ServiceDistribution d;
    d.family_ = Family::ShiftedExponential;
    d.shift_ = shift;
    d.rate_ = rate;
    return d;
}

ServiceDistribution ServiceDistribution::lomax(double sigma, double alpha)
{
    require(finite_pos(sigma), "lomax: sigma must be > 0");
    require(finite_pos(alpha), "lomax: alpha must be > 0");
    ServiceDistribution d;
    d.family_ = Family::Lomax;
    d.sigma_ = sigma;
    d.alpha_ = alpha;
    return d;
}

ServiceDistribution ServiceDistribution::hyperexponential(std::vector<double> probs, std::vector<double> rates)
{
    require(!probs.empty() && probs.size() == rates.size(),
            "hyperexponential: need matching, nonempty branch probabilities and rates");
    for (double p : probs) require(finite_nonneg(p) && p <= 1.0, "hyperexponential: branch probability outside [0,1]");
    for (double r : rates) require(finite_pos(r), "hyperexponential: branch rate must be > 0");
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    require(std::abs(total - 1.0) <= 1e-12, "hyperexponential: branch probabilities must sum to 1");
    ServiceDistribution d;
    d.family_ = Family::HyperExponential;
    d.probs_ = std::move(probs);
    d.rates_ = std::move(rates);
    return d;
}

double ServiceDistribution::ccdf(double x) const
{
    if (!(x >= 0.0)) throw DomainError("ccdf: x must be >= 0");
    switch (family_) {
    case Family::Constant: return x < value_ ? 1.0 : 0.0;
    case Family::Exponential: return std::exp(-rate_ * x);
    case Family::ShiftedExponential: return x < shift_ ? 1.0 : std::exp(-rate_ * (x - shift_));
    case Family::Lomax: return std::pow(1.0 + x / sigma_, -alpha_);
    case Family::HyperExponential: {
        double s = 0.0;
        for (std::size_t b = 0; b < probs_.size(); ++b) s += probs_[b] * std::exp(-rates_[b] * x);
        return std::min(1.0, s);
    }
    }
    return 0.0;
}

double ServiceDistribution::quantile(double p) const
{
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in [0,1)");
    switch (family_) {
    case Family::Constant: return value_;
    case Family::Exponential: return -std::log1p(-p) / rate_;
    case Family::ShiftedExponential: return shift_ - std::log1p(-p) / rate_;
    case Family::Lomax: return sigma_ * std::expm1(-std::log1p(-p) / alpha_);
    case Family::HyperExponential: {
        if (p == 0.0) return 0.0;
        const double target = 1.0 - p;
        double lo = 0.0;
        double hi = -std::log1p(-p) / *std::min_element(rates_.begin(), rates_.end());
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (ccdf(mid) > target)
                lo = mid;
            else
                hi = mid;
        }
        return hi;
    }
    }
    return 0.0;
}

double ServiceDistribution::sample(RngStream& stream) const
{
    return quantile(stream.uniform());
}

double ServiceDistribution::mean() const
{
    switch (family_) {
    case Family::Constant: return value_;
    case Family::Exponential: return 1.0 / rate_;
    case Family::ShiftedExponential: return shift_ + 1.0 / rate_;
    case Family::Lomax:
        if (alpha_ <= 1.0) throw DomainError("lomax: mean is infinite for alpha <= 1");
        return sigma_ / (alpha_ - 1.0);
    case Family::HyperExponential: {
        double m = 0.0;
        for (std::size_t b = 0; b < probs_.size(); ++b) m += probs_[b] / rates_[b];
        return m;
    }
    }
    return 0.0;
}

double ServiceDistribution::cumulative_hazard(double x) const
{
    if (!(x >= 0.0)) throw DomainError("cumulative_hazard: x must be >= 0");
    switch (family_) {
    case Family::Constant: return x < value_ ? 0.0 : kInf;
    case Family::Exponential: return rate_ * x;
    case Family::ShiftedExponential: return x < shift_ ? 0.0 : rate_ * (x - shift_);
    case Family::Lomax: return alpha_ * std::log1p(x / sigma_);
    case Family::HyperExponential: {
        const double s = ccdf(x);
        return s > 0.0 ? -std::log(s) : kInf;
    }
    }
    return 0.0;
}

double ServiceDistribution::hazard(double x) const
{
    if (!(x >= 0.0)) throw DomainError("hazard: x must be >= 0");
    switch (family_) {
    case Family::Constant: return x < value_ ? 0.0 : kInf;
    case Family::Exponential: return rate_;
    case Family::ShiftedExponential: return x < shift_ ? 0.0 : rate_;
    case Family::Lomax: return alpha_ / (sigma_ + x);
    case Family::HyperExponential: {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t b = 0; b < probs_.size(); ++b) {
            const double w = probs_[b] * std::exp(-rates_[b] * x);
            num += w * rates_[b];
            den += w;
        }
        return den > 0.0 ? num / den : *std::min_element(rates_.begin(), rates_.end());
    }
    }
    return 0.0;
}

std::string ServiceDistribution::describe() const
{
    std::ostringstream os;
    os << to_string(family_) << '(';
    switch (family_) {
    case Family::Constant: os << value_; break;
    case Family::Exponential: os << "rate=" << rate_; break;
    case Family::ShiftedExponential: os << "shift=" << shift_ << ", rate=" << rate_; break;
    case Family::Lomax: os << "sigma=" << sigma_ << ", alpha=" << alpha_; break;
    case Family::HyperExponential:
        for (std::size_t b = 0; b < probs_.size(); ++b) os << (b ? ", " : "") << probs_[b] << '@' << rates_[b];
        break;
    }
    os << ')';
    return os.str();
}

ResidualLaw::ResidualLaw(ServiceDistribution base, double elapsed)
    : base_(std::move(base)), elapsed_(elapsed), base_ccdf_(0.0)
{
    if (!(elapsed >= 0.0)) throw DomainError("residual law: elapsed must be >= 0");
    base_ccdf_ = base_.ccdf(elapsed);
    if (!(base_ccdf_ > 0.0)) throw DomainError("residual law: conditioning on a null event");
}

double ResidualLaw::ccdf(double s) const
{
    if (!(s >= 0.0)) throw DomainError("residual ccdf: s must be >= 0");
    if (elapsed_ == 0.0) return base_.ccdf(s);
    return base_.ccdf(elapsed_ + s) / base_ccdf_;
}

double ResidualLaw::quantile(double p) const
{
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in [0,1)");
    if (elapsed_ == 0.0) return base_.quantile(p);
    const double q = 1.0 - (1.0 - p) * base_ccdf_;
    return std::max(0.0, base_.quantile(std::min(q, std::nextafter(1.0, 0.0))) - elapsed_);
}

double residual_ccdf(const ResidualLaw& law, double s) { return law.ccdf(s); }

namespace {

std::vector<double> geometric_points(double top, int points)
{
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(points));
    g.push_back(0.0);
    if (points <= 1 || !(top > 0.0)) return g;
    const double bottom = top * 1e-4;
    const int rest = points - 1;
    for (int i = 0; i < rest; ++i) {
        const double frac = rest == 1 ? 1.0 : static_cast<double>(i) / (rest - 1);
        g.push_back(bottom * std::pow(top / bottom, frac));
    }
    return g;
}

Grid square(const std::vector<double>& a, const std::vector<double>& b)
{
    Grid grid;
    grid.reserve(a.size() * b.size());
    for (double x : a)
        for (double y : b) grid.emplace_back(x, y);
    return grid;
}

ClassificationReport classify_on_grid(const ServiceDistribution& dist, const Grid& grid, bool nbu)
{
    if (grid.empty()) throw DomainError("classification grid is empty");
    ClassificationReport r;
    r.absolutely_continuous = dist.absolutely_continuous();
    r.worst_violation = -kInf;
    for (auto [tau, t] : grid) {
        if (!(tau >= 0.0 && t >= 0.0)) throw DomainError("classification grid entries must be >= 0");
        const double joint = dist.ccdf(tau + t);
        const double product = dist.ccdf(tau) * dist.ccdf(t);
        const double diff = joint - product;
        const double violation = nbu ? diff : -diff;
        r.max_abs_slack = std::max(r.max_abs_slack, std::abs(diff));
        if (violation > r.worst_violation) {
            r.worst_violation = violation;
            r.tau = tau;
            r.t = t;
        }
    }
    r.holds = r.worst_violation <= kClassTolerance;
    if (!nbu && !r.absolutely_continuous) r.holds = false;
    return r;
}

}  // namespace

Grid default_grid(const ServiceDistribution& dist, int points)
{
    const auto g = geometric_points(dist.quantile(0.999), points);
    return square(g, g);
}

ClassificationReport check_nbu(const ServiceDistribution& dist, const Grid& grid)
{
    return classify_on_grid(dist, grid, true);
}

ClassificationReport check_nbu(const ServiceDistribution& dist) { return check_nbu(dist, default_grid(dist)); }

ClassificationReport check_nwu(const ServiceDistribution& dist, const Grid& grid)
{
    return classify_on_grid(dist, grid, false);
}

ClassificationReport check_nwu(const ServiceDistribution& dist) { return check_nwu(dist, default_grid(dist)); }

HazardOrderReport hazard_rate_leq(const ResidualLaw& a, const ResidualLaw& b, const Grid& grid)
{
    HazardOrderReport r;
    for (auto [t, s] : grid) {
        const double pa = a.ccdf(t);
        const double pb = b.ccdf(t);
        if (!(pa > 0.0) || !(pb > 0.0)) throw DomainError("hazard_rate_leq: conditioning on a null event");
        const double lhs = a.ccdf(t + s) / pa;
        const double rhs = b.ccdf(t + s) / pb;
        if (lhs > rhs + kClassTolerance) {
            r.holds = false;
            r.t = t;
            r.s = s;
            r.lhs = lhs;
            r.rhs = rhs;
            return r;
        }
    }
    return r;
}

HazardOrderReport hazard_rate_leq(const ResidualLaw& a, const ResidualLaw& b, int points)
{
    const double qa = a.quantile(0.999);
    const double qb = b.quantile(0.999);
    std::vector<double> ages;
    for (double t : geometric_points(std::min(qa, qb), points))
        if (a.ccdf(t) > 0.0 && b.ccdf(t) > 0.0) ages.push_back(t);
    const auto steps = geometric_points(std::max(qa, qb), points);
    return hazard_rate_leq(a, b, square(ages, steps));
}

DistClass classify(const ServiceDistribution& dist)
{
    switch (dist.family()) {
    case Family::Exponential: return DistClass::Exponential;
    case Family::ShiftedExponential: return dist.shift() == 0.0 ? DistClass::Exponential : DistClass::NBU;
    case Family::Lomax: return DistClass::NWU;
    case Family::HyperExponential: {
        const auto& r = dist.rates();
        const bool single = std::all_of(r.begin(), r.end(), [&](double x) { return x == r.front(); });
        return single ? DistClass::Exponential : DistClass::NWU;
    }
    case Family::Constant: return DistClass::NBU;
    }
    return DistClass::Neither;
}

}  // namespace replisim
