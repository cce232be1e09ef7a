#include "apm/utility.hpp"

#include "apm/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace apm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_unit_open(double v, const char* what) {
    if (!(v > 0.0 && v < 1.0)) {
        throw InvalidUtility(std::string(what) + " must lie in (0, 1), got " + format_double(v));
    }
}

void validate(const UtilityKind& kind) {
    std::visit(Overloaded{
                   [](const ProofU1& k) { check_unit_open(k.epsilon, "proof_u1 epsilon"); },
                   [](const ProofUn& k) { check_unit_open(k.kappa, "proof_un kappa"); },
                   [](const PowerModerate& k) {
                       if (!(k.alpha >= 0.0 && k.alpha < 1.0)) {
                           throw InvalidUtility("power_moderate alpha must lie in [0, 1)");
                       }
                       if (!(k.p > 1.0) || !(k.lambda > 0.0)) {
                           throw InvalidUtility("power_moderate needs p > 1 and lambda > 0");
                       }
                   },
                   [](const ExponentialBounded&) {},
                   [](const LinearUtility& k) {
                       if (!(k.slope >= 0.0) || !std::isfinite(k.slope)) {
                           throw InvalidUtility("linear utility needs a finite nonnegative slope");
                       }
                   },
                   [](const CustomPiecewise& k) {
                       if (k.slopes.size() != k.breakpoints.size() + 1) {
                           throw InvalidUtility("custom utility needs exactly one more slope than breakpoints");
                       }
                       if (!std::is_sorted(k.breakpoints.begin(), k.breakpoints.end()) ||
                           std::adjacent_find(k.breakpoints.begin(), k.breakpoints.end()) != k.breakpoints.end()) {
                           throw InvalidUtility("custom utility breakpoints must be strictly increasing");
                       }
                       for (std::size_t j = 0; j < k.slopes.size(); ++j) {
                           if (!(k.slopes[j] >= 0.0) || !std::isfinite(k.slopes[j])) {
                               throw InvalidUtility("custom utility slopes must be finite and nonnegative");
                           }
                           if (j > 0 && k.slopes[j] > k.slopes[j - 1]) {
                               throw InvalidUtility("custom utility slopes must be nonincreasing (concavity)");
                           }
                       }
                   },
               },
               kind);
}

// Slope of the custom piecewise utility on the segment containing x, or to the left/right of x.
double custom_slope(const CustomPiecewise& k, double x, bool left) {
    const auto& bp = k.breakpoints;
    const auto it = left ? std::lower_bound(bp.begin(), bp.end(), x) : std::upper_bound(bp.begin(), bp.end(), x);
    return k.slopes[static_cast<std::size_t>(it - bp.begin())];
}

double custom_value(const CustomPiecewise& k, double x) {
    // integral of the slope from 0 to x
    const double lo = std::min(0.0, x);
    const double hi = std::max(0.0, x);
    double acc = 0.0;
    double seg_lo = -kInf;
    for (std::size_t j = 0; j < k.slopes.size(); ++j) {
        const double seg_hi = j < k.breakpoints.size() ? k.breakpoints[j] : kInf;
        const double a = std::max(lo, seg_lo);
        const double b = std::min(hi, seg_hi);
        if (b > a) {
            acc += k.slopes[j] * (b - a);
        }
        seg_lo = seg_hi;
    }
    return x < 0.0 ? -acc : acc;
}

}  // namespace

Utility::Utility(UtilityKind kind) : kind_(std::move(kind)) {
    validate(kind_);
    raw_at_zero_ = raw_value(0.0);
}

Utility Utility::proof_u1(double epsilon) { return Utility(ProofU1{epsilon}); }
Utility Utility::proof_un(double kappa) { return Utility(ProofUn{kappa}); }
Utility Utility::power_moderate(double alpha, double p, double lambda) {
    return Utility(PowerModerate{alpha, p, lambda});
}
Utility Utility::custom(std::vector<double> breakpoints, std::vector<double> slopes) {
    return Utility(CustomPiecewise{std::move(breakpoints), std::move(slopes)});
}

Utility Utility::scaled(double lambda) const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidUtility("utility scale must be positive and finite");
    }
    Utility out = *this;
    out.scale_ *= lambda;
    return out;
}

double Utility::raw_value(double x) const {
    return std::visit(Overloaded{
                          [x](const ProofU1& k) {
                              return x < 0.0 ? k.epsilon * x - 1.0 : -std::pow(1.0 + x, -k.epsilon);
                          },
                          [x](const ProofUn& k) { return x < 0.0 ? k.kappa * x + 1.0 : std::pow(1.0 + x, k.kappa); },
                          [x](const PowerModerate& k) {
                              if (x >= 0.0) {
                                  return k.alpha > 0.0 ? std::pow(1.0 + x, k.alpha) - 1.0 : 0.0;
                              }
                              return -k.lambda * std::pow(-x, k.p) + k.alpha * x;
                          },
                          [x](const ExponentialBounded&) { return -std::expm1(-x); },
                          [x](const LinearUtility& k) { return k.slope * x; },
                          [x](const CustomPiecewise& k) { return custom_value(k, x); },
                      },
                      kind_);
}

double Utility::right_deriv(double x) const {
    const double d = std::visit(
        Overloaded{
            [x](const ProofU1& k) { return x < 0.0 ? k.epsilon : k.epsilon * std::pow(1.0 + x, -k.epsilon - 1.0); },
            [x](const ProofUn& k) { return x < 0.0 ? k.kappa : k.kappa * std::pow(1.0 + x, k.kappa - 1.0); },
            [x](const PowerModerate& k) {
                if (x >= 0.0) {
                    return k.alpha > 0.0 ? k.alpha * std::pow(1.0 + x, k.alpha - 1.0) : 0.0;
                }
                return k.lambda * k.p * std::pow(-x, k.p - 1.0) + k.alpha;
            },
            [x](const ExponentialBounded&) { return std::exp(-x); },
            [](const LinearUtility& k) { return k.slope; },
            [x](const CustomPiecewise& k) { return custom_slope(k, x, false); },
        },
        kind_);
    return scale_ * d;
}

double Utility::left_deriv(double x) const {
    if (const auto* c = std::get_if<CustomPiecewise>(&kind_)) {
        return scale_ * custom_slope(*c, x, true);
    }
    if (const auto* p = std::get_if<PowerModerate>(&kind_); p && x == 0.0) {
        return scale_ * p->alpha;
    }
    // the remaining families are differentiable
    return right_deriv(x);
}

double Utility::deriv(double x) const {
    if (std::holds_alternative<CustomPiecewise>(kind_)) {
        return 0.5 * (left_deriv(x) + right_deriv(x));
    }
    return right_deriv(x);
}

std::string Utility::name() const {
    return std::visit(Overloaded{
                          [](const ProofU1&) { return "proof_u1"; },
                          [](const ProofUn&) { return "proof_un"; },
                          [](const PowerModerate&) { return "power_moderate"; },
                          [](const ExponentialBounded&) { return "exponential_bounded"; },
                          [](const LinearUtility&) { return "linear"; },
                          [](const CustomPiecewise&) { return "custom"; },
                      },
                      kind_);
}

std::string Utility::describe() const {
    std::ostringstream os;
    os << name();
    std::visit(Overloaded{
                   [&](const ProofU1& k) { os << "(epsilon=" << format_double(k.epsilon) << ")"; },
                   [&](const ProofUn& k) { os << "(kappa=" << format_double(k.kappa) << ")"; },
                   [&](const PowerModerate& k) {
                       os << "(alpha=" << format_double(k.alpha) << ",p=" << format_double(k.p)
                          << ",lambda=" << format_double(k.lambda) << ")";
                   },
                   [](const ExponentialBounded&) {},
                   [&](const LinearUtility& k) { os << "(slope=" << format_double(k.slope) << ")"; },
                   [&](const CustomPiecewise& k) { os << "(" << k.breakpoints.size() << " breakpoints)"; },
               },
               kind_);
    if (scale_ != 1.0) {
        os << "*" << format_double(scale_);
    }
    return os.str();
}

std::vector<double> Utility::kinks() const {
    if (const auto* c = std::get_if<CustomPiecewise>(&kind_)) {
        return c->breakpoints;
    }
    return {};
}

bool Utility::is_linear() const {
    if (std::holds_alternative<LinearUtility>(kind_)) {
        return true;
    }
    if (const auto* c = std::get_if<CustomPiecewise>(&kind_)) {
        return std::adjacent_find(c->slopes.begin(), c->slopes.end(), std::not_equal_to<>()) == c->slopes.end();
    }
    return false;
}

bool Utility::bounded_above() const {
    return std::visit(Overloaded{
                          [](const ProofU1&) { return true; },
                          [](const ProofUn&) { return false; },
                          [](const PowerModerate& k) { return k.alpha == 0.0; },
                          [](const ExponentialBounded&) { return true; },
                          [](const LinearUtility& k) { return k.slope == 0.0; },
                          [](const CustomPiecewise& k) { return k.slopes.back() == 0.0; },
                      },
                      kind_);
}

std::optional<GrowthCertificate> Utility::growth() const {
    std::optional<GrowthCertificate> g = std::visit(
        Overloaded{
            // normalized u1 <= 1
            [](const ProofU1&) -> std::optional<GrowthCertificate> { return GrowthCertificate{1.0, 0.0}; },
            [](const ProofUn& k) -> std::optional<GrowthCertificate> { return GrowthCertificate{2.0, k.kappa}; },
            [](const PowerModerate& k) -> std::optional<GrowthCertificate> {
                return GrowthCertificate{1.0, k.alpha};
            },
            [](const ExponentialBounded&) -> std::optional<GrowthCertificate> { return GrowthCertificate{1.0, 0.0}; },
            [](const LinearUtility&) -> std::optional<GrowthCertificate> { return std::nullopt; },
            [](const CustomPiecewise& k) -> std::optional<GrowthCertificate> {
                if (k.slopes.back() != 0.0) {
                    return std::nullopt;
                }
                const double top = k.breakpoints.empty() ? 0.0 : std::max(0.0, custom_value(k, k.breakpoints.back()));
                return GrowthCertificate{std::max(top, 1e-300), 0.0};
            },
        },
        kind_);
    if (g) {
        g->c1 *= scale_;
    }
    return g;
}

std::optional<double> Utility::sup_deriv() const {
    std::optional<double> s = std::visit(
        Overloaded{
            [](const ProofU1& k) -> std::optional<double> { return k.epsilon; },
            [](const ProofUn& k) -> std::optional<double> { return k.kappa; },
            [](const PowerModerate&) -> std::optional<double> { return std::nullopt; },
            [](const ExponentialBounded&) -> std::optional<double> { return std::nullopt; },
            [](const LinearUtility& k) -> std::optional<double> { return k.slope; },
            [](const CustomPiecewise& k) -> std::optional<double> { return k.slopes.front(); },
        },
        kind_);
    if (s) {
        *s *= scale_;
    }
    return s;
}

bool Utility::strictly_increasing() const {
    return std::visit(Overloaded{
                          [](const ProofU1&) { return true; },
                          [](const ProofUn&) { return true; },
                          [](const PowerModerate& k) { return k.alpha > 0.0; },
                          [](const ExponentialBounded&) { return true; },
                          [](const LinearUtility& k) { return k.slope > 0.0; },
                          [](const CustomPiecewise& k) { return k.slopes.back() > 0.0; },
                      },
                      kind_);
}

namespace {

std::vector<double> lena_grid(const LenaWindow& window) {
    // half linear, half geometric in |x|, all in [lower, 0]
    const std::size_t n = std::max<std::size_t>(window.grid_points, 4);
    const double span = -window.lower;
    std::vector<double> g;
    g.reserve(n);
    const std::size_t lin = n / 2;
    for (std::size_t j = 0; j < lin; ++j) {
        g.push_back(-span * static_cast<double>(j) / static_cast<double>(lin - 1));
    }
    const std::size_t geo = n - lin;
    const double lmin = std::log(1e-6);
    const double lmax = std::log(span);
    for (std::size_t j = 0; j < geo; ++j) {
        g.push_back(-std::exp(lmin + (lmax - lmin) * static_cast<double>(j) / static_cast<double>(geo - 1)));
    }
    return g;
}

}  // namespace

double lena_excess(const Utility& u, double c, double big_c, const LenaWindow& window) {
    double worst = -kInf;
    for (double x : lena_grid(window)) {
        const double excess = u(x) + c * std::abs(x) - big_c;
        if (std::isnan(excess)) {
            return kInf;
        }
        worst = std::max(worst, excess);
    }
    return worst;
}

LenaConstants lena_constants(const Utility& u, const LenaWindow& window) {
    LenaConstants out;
    for (double x = -1.0; x >= window.lower; x *= 2.0) {
        if (u.left_deriv(x + 1.0) > 0.0 && u(x) < 0.0) {
            out.x_star = x;
            out.c = u.left_deriv(x);
            out.big_c = out.c * std::abs(x) + std::abs(u(0.0));
            out.worst_excess = lena_excess(u, out.c, out.big_c, window);
            out.certified = out.worst_excess <= 1e-9 * std::max(1.0, out.big_c);
            return out;
        }
    }
    out.constant_u = true;
    return out;
}

double young_phi(const Utility& u, double x) { return -u(-x); }

double young_psi(const Utility& u, double y) {
    // Phi'(x) = u'(-x); the maximizer of x y - Phi(x) solves Phi'(x) = y.
    auto dphi = [&](double x) { return u.left_deriv(-x); };
    if (y <= dphi(0.0)) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = 1.0;
    while (dphi(hi) < y) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) {
            return kInf;
        }
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (dphi(mid) < y) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::max(lo * y - young_phi(u, lo), hi * y - young_phi(u, hi));
}

namespace {

std::vector<double> log_grid(double a, double b, std::size_t n) {
    std::vector<double> g(n);
    const double la = std::log(a);
    const double lb = std::log(b);
    for (std::size_t j = 0; j < n; ++j) {
        g[j] = n == 1 ? a : std::exp(la + (lb - la) * static_cast<double>(j) / static_cast<double>(n - 1));
    }
    return g;
}

struct RatioStats {
    double sup = 0.0;
    double inf = kInf;
    bool finite = true;
    std::size_t count = 0;
};

template <class F>
RatioStats upper_decade_ratio(const std::vector<double>& grid, double top, F f) {
    RatioStats r;
    for (double x : grid) {
        if (x < top / 10.0 * (1.0 - 1e-12)) {
            continue;
        }
        const double base = f(x);
        if (base <= 0.0) {
            continue;
        }
        const double ratio = f(2.0 * x) / base;
        ++r.count;
        if (!std::isfinite(ratio)) {
            r.finite = false;
            r.sup = kInf;
            continue;
        }
        r.sup = std::max(r.sup, ratio);
        r.inf = std::min(r.inf, ratio);
    }
    return r;
}

}  // namespace

YoungPair young_pair(const Utility& u, const YoungGrid& grid) {
    if (!(grid.x_min > 0.0 && grid.x_max > grid.x_min) || grid.points < 2) {
        throw std::invalid_argument("young_pair needs 0 < x_min < x_max and at least 2 points");
    }
    const bool own_y = grid.y_max > grid.y_min && grid.y_min > 0.0;
    const double y_min = own_y ? grid.y_min : grid.x_min;
    const double y_max = own_y ? grid.y_max : grid.x_max;

    YoungPair yp;
    yp.x = log_grid(grid.x_min, grid.x_max, grid.points);
    yp.y = log_grid(y_min, y_max, grid.points);
    for (double x : yp.x) {
        yp.phi.push_back(young_phi(u, x));
    }
    for (double y : yp.y) {
        yp.psi.push_back(young_psi(u, y));
    }

    const auto phi_stats = upper_decade_ratio(yp.x, grid.x_max, [&](double x) { return young_phi(u, x); });
    const auto psi_stats = upper_decade_ratio(yp.y, y_max, [&](double y) { return young_psi(u, y); });
    yp.phi_ratio_sup = phi_stats.count ? phi_stats.sup : kInf;
    yp.psi_ratio_sup = psi_stats.count ? psi_stats.sup : kInf;
    yp.growth_low = young_phi(u, grid.x_max / 10.0) / (grid.x_max / 10.0);
    yp.growth_high = young_phi(u, grid.x_max) / grid.x_max;

    auto stable = [](const RatioStats& r) { return r.count > 0 && r.finite && r.sup <= 1.5 * r.inf; };
    bool ok = true;
    if (!stable(phi_stats)) {
        ok = false;
        yp.reasons.push_back("Phi(2x)/Phi(x) unbounded or unstable over the upper decade (no Delta2 evidence)");
    }
    if (!stable(psi_stats)) {
        ok = false;
        yp.reasons.push_back("Psi(2y)/Psi(y) unbounded, infinite or unstable over the upper decade");
    }
    if (!(std::isfinite(yp.growth_high) && yp.growth_high > 1.01 * yp.growth_low)) {
        ok = false;
        yp.reasons.push_back("Phi(x)/x does not grow over the upper decade (Phi is not a Young function)");
    }
    yp.moderate = ok;
    yp.verdict = ok ? "moderate" : "not moderate (finite-grid evidence)";
    return yp;
}

}  // namespace apm
