#pragma once

#include "replisim/rng.hpp"

#include <string>
#include <utility>
#include <vector>

namespace replisim {

enum class Family { Constant, Exponential, ShiftedExponential, Lomax, HyperExponential };

std::string to_string(Family f);

/// Parametric law for a task service time or a cancellation overhead.
///
/// Every family is sampled by inversion and consumes exactly one uniform
/// per draw, so coupled streams stay aligned whatever the family.
class ServiceDistribution {
public:
    static ServiceDistribution constant(double value);
    static ServiceDistribution zero() { return constant(0.0); }
    static ServiceDistribution exponential(double rate);
    /// CCDF 1 below `shift`, exp(-rate (x - shift)) above.
    static ServiceDistribution shifted_exponential(double shift, double rate);
    /// CCDF (1 + x/sigma)^-alpha.
    static ServiceDistribution lomax(double sigma, double alpha);
    static ServiceDistribution hyperexponential(std::vector<double> probs, std::vector<double> rates);

    Family family() const noexcept { return family_; }
    bool is_zero() const noexcept { return family_ == Family::Constant && value_ == 0.0; }
    bool absolutely_continuous() const noexcept { return family_ != Family::Constant; }

    double value() const noexcept { return value_; }
    double rate() const noexcept { return rate_; }
    double shift() const noexcept { return shift_; }
    double sigma() const noexcept { return sigma_; }
    double alpha() const noexcept { return alpha_; }
    const std::vector<double>& probs() const noexcept { return probs_; }
    const std::vector<double>& rates() const noexcept { return rates_; }

    /// Pr[X > x]. Throws DomainError for x < 0.
    double ccdf(double x) const;
    /// Smallest x with Pr[X <= x] >= p, for p in [0, 1).
    double quantile(double p) const;
    double sample(RngStream& stream) const;
    /// Throws DomainError when the mean is infinite (Lomax with alpha <= 1).
    double mean() const;
    /// -ln Pr[X > x]; infinity past the support.
    double cumulative_hazard(double x) const;
    double hazard(double x) const;

    std::string describe() const;

    friend bool operator==(const ServiceDistribution&, const ServiceDistribution&) = default;

private:
    ServiceDistribution() = default;

    Family family_ = Family::Constant;
    double value_ = 0.0;
    double rate_ = 0.0;
    double shift_ = 0.0;
    double sigma_ = 0.0;
    double alpha_ = 0.0;
    std::vector<double> probs_;
    std::vector<double> rates_;
};

/// Law of X - elapsed given X > elapsed.
class ResidualLaw {
public:
    // NOLINTNEXTLINE(google-explicit-constructor)
    ResidualLaw(ServiceDistribution base, double elapsed = 0.0);

    const ServiceDistribution& base() const noexcept { return base_; }
    double elapsed() const noexcept { return elapsed_; }

    double ccdf(double s) const;
    double quantile(double p) const;

private:
    ServiceDistribution base_;
    double elapsed_;
    double base_ccdf_;
};

double residual_ccdf(const ResidualLaw& law, double s);

using Grid = std::vector<std::pair<double, double>>;

inline constexpr double kClassTolerance = 1e-9;

/// 64 x 64 grid of geometric points on [0, quantile(0.999)] (plus 0).
Grid default_grid(const ServiceDistribution& dist, int points = 64);

struct ClassificationReport {
    bool holds = false;
    bool absolutely_continuous = true;
    /// Largest signed amount by which the inequality fails; <= 0 when it holds everywhere.
    double worst_violation = 0.0;
    /// Largest |F(tau+t) - F(tau)F(t)| seen on the grid.
    double max_abs_slack = 0.0;
    double tau = 0.0;
    double t = 0.0;
};

ClassificationReport check_nbu(const ServiceDistribution& dist, const Grid& grid);
ClassificationReport check_nbu(const ServiceDistribution& dist);
ClassificationReport check_nwu(const ServiceDistribution& dist, const Grid& grid);
ClassificationReport check_nwu(const ServiceDistribution& dist);

struct HazardOrderReport {
    bool holds = true;
    double t = 0.0;
    double s = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Checks Pr(A - t > s | A > t) <= Pr(B - t > s | B > t) on every (t, s) of the grid.
HazardOrderReport hazard_rate_leq(const ResidualLaw& a, const ResidualLaw& b, const Grid& grid);
/// Same on a default grid restricted to ages where both laws are still alive.
HazardOrderReport hazard_rate_leq(const ResidualLaw& a, const ResidualLaw& b, int points = 64);

enum class DistClass { NBU, NWU, Exponential, Neither };
std::string to_string(DistClass c);
DistClass classify(const ServiceDistribution& dist);

}  // namespace replisim
