#include "apm/shock_library.hpp"

#include "apm/numeric.hpp"
#include "apm/parallel.hpp"
#include "apm/philox.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace apm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate_law(const ShockLaw& law) {
    if (const auto* t = std::get_if<StudentTLaw>(&law); t && !(t->df > 2.0)) {
        throw std::invalid_argument("standardized Student t needs df > 2 (unit variance)");
    }
    if (const auto* p = std::get_if<BoundedTailPowerLaw>(&law); p && !(p->theta > 2.0)) {
        throw std::invalid_argument("bounded_tail_power needs theta > 2");
    }
}

double t_scale(double df) { return std::sqrt((df - 2.0) / df); }

double lomax_sigma(double theta) { return std::sqrt(2.0 / ((theta - 1.0) * (theta - 2.0))); }

// Law actually in force at index i (aba is Gaussian at index 1).
ShockLaw resolve(const ShockLaw& law, std::size_t i) {
    if (std::holds_alternative<TwoPointAbaLaw>(law) && i < 2) {
        return GaussianLaw{};
    }
    return law;
}

std::uint32_t stream_id(std::size_t i) {
    if (i == 0 || i > std::numeric_limits<std::uint32_t>::max()) {
        throw std::out_of_range("shock index out of range: " + std::to_string(i));
    }
    return static_cast<std::uint32_t>(i);
}

double gaussian_from_block(const Block128& b, bool odd) {
    const double r = std::sqrt(-2.0 * std::log(to_unit_open0(b.lo)));
    const double angle = 2.0 * std::numbers::pi * to_unit(b.hi);
    return odd ? r * std::sin(angle) : r * std::cos(angle);
}

double student_t_draw(std::uint64_t seed, std::uint32_t stream, std::uint64_t d, double df) {
    // Bailey's polar method; one auxiliary lane per attempt.
    for (std::uint32_t attempt = 0;; ++attempt) {
        const Block128 b = philox_block(seed, stream, d, 1u + attempt);
        const double u = 2.0 * to_unit(b.lo) - 1.0;
        const double v = 2.0 * to_unit(b.hi) - 1.0;
        const double w = u * u + v * v;
        if (w > 0.0 && w < 1.0) {
            return u * std::sqrt(df * (std::pow(w, -2.0 / df) - 1.0) / w);
        }
    }
}

}  // namespace

std::string law_name(const ShockLaw& law) {
    return std::visit(Overloaded{
                          [](const GaussianLaw&) { return std::string("gaussian"); },
                          [](const StudentTLaw& t) { return "student_t(df=" + format_double(t.df) + ")"; },
                          [](const RademacherLaw&) { return std::string("rademacher"); },
                          [](const TwoPointAbaLaw&) { return std::string("two_point_aba"); },
                          [](const BoundedTailPowerLaw& p) {
                              return "bounded_tail_power(theta=" + format_double(p.theta) + ")";
                          },
                      },
                      law);
}

TwoPointLaw aba_two_point(std::size_t i) {
    if (i < 2) {
        throw std::invalid_argument("aba_two_point needs i >= 2");
    }
    const double x = static_cast<double>(i);
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double inv3 = inv2 * inv;
    const double root = std::sqrt(1.0 + inv2 - inv2 * inv2 - inv3 * inv3);
    TwoPointLaw law;
    law.up = (inv + inv3) / root;
    law.down = (-x + inv3) / root;
    law.p_down = inv2;
    law.p_up = 1.0 - inv2;
    return law;
}

PowerTailBracket power_tail_bracket(const BoundedTailPowerLaw& law) {
    const double sigma = lomax_sigma(law.theta);
    // (1 + sigma z) <= (1 + sigma) z for z >= 1
    return {0.5 * std::pow(sigma, -law.theta), law.theta, 0.5 * std::pow(1.0 + sigma, -law.theta), law.theta};
}

ShockFamily::ShockFamily(ShockLaw law) : ShockFamily(std::vector<ShockLaw>{std::move(law)}) {}

ShockFamily::ShockFamily(std::vector<ShockLaw> cycle) : laws_(std::move(cycle)) {
    if (laws_.empty()) {
        throw std::invalid_argument("shock family needs at least one law");
    }
    for (const auto& l : laws_) {
        validate_law(l);
    }
}

const ShockLaw& ShockFamily::law_at(std::size_t i) const {
    if (i == 0) {
        throw std::out_of_range("shock index starts at 1");
    }
    return laws_[(i - 1) % laws_.size()];
}

bool ShockFamily::index_dependent() const {
    return std::any_of(laws_.begin(), laws_.end(),
                       [](const ShockLaw& l) { return std::holds_alternative<TwoPointAbaLaw>(l); });
}

bool ShockFamily::holds_only(std::size_t alternative) const {
    return std::all_of(laws_.begin(), laws_.end(), [&](const ShockLaw& l) { return l.index() == alternative; });
}

std::string ShockFamily::describe() const {
    if (laws_.size() == 1) {
        return law_name(laws_.front());
    }
    std::ostringstream os;
    os << "cycle(";
    for (std::size_t j = 0; j < laws_.size(); ++j) {
        os << (j ? "," : "") << law_name(laws_[j]);
    }
    os << ")";
    return os.str();
}

double ShockFamily::mean(std::size_t i) const {
    const ShockLaw law = resolve(law_at(i), i);
    if (std::holds_alternative<TwoPointAbaLaw>(law)) {
        const auto tp = aba_two_point(i);
        return tp.up * tp.p_up + tp.down * tp.p_down;
    }
    return 0.0;
}

double ShockFamily::variance(std::size_t i) const {
    const ShockLaw law = resolve(law_at(i), i);
    return std::visit(Overloaded{
                          [](const GaussianLaw&) { return 1.0; },
                          [](const StudentTLaw& t) { return t_scale(t.df) * t_scale(t.df) * t.df / (t.df - 2.0); },
                          [](const RademacherLaw&) { return 1.0; },
                          [i](const TwoPointAbaLaw&) {
                              const auto tp = aba_two_point(i);
                              const double m = tp.up * tp.p_up + tp.down * tp.p_down;
                              return tp.up * tp.up * tp.p_up + tp.down * tp.down * tp.p_down - m * m;
                          },
                          [](const BoundedTailPowerLaw& p) {
                              const double s = lomax_sigma(p.theta);
                              return 2.0 / ((p.theta - 1.0) * (p.theta - 2.0)) / (s * s);
                          },
                      },
                      law);
}

double ShockFamily::upper_tail(std::size_t i, double x) const {
    const ShockLaw law = resolve(law_at(i), i);
    return std::visit(Overloaded{
                          [x](const GaussianLaw&) { return 0.5 * std::erfc(x / std::numbers::sqrt2); },
                          [x](const StudentTLaw& t) {
                              const boost::math::students_t_distribution<double> dist(t.df);
                              return boost::math::cdf(boost::math::complement(dist, x / t_scale(t.df)));
                          },
                          [x](const RademacherLaw&) { return x < 1.0 ? (x < -1.0 ? 1.0 : 0.5) : 0.0; },
                          [x, i](const TwoPointAbaLaw&) {
                              const auto tp = aba_two_point(i);
                              return (tp.up > x ? tp.p_up : 0.0) + (tp.down > x ? tp.p_down : 0.0);
                          },
                          [x](const BoundedTailPowerLaw& p) {
                              if (x < 0.0) {
                                  return 1.0 - 0.5 * std::pow(1.0 - lomax_sigma(p.theta) * x, -p.theta);
                              }
                              return 0.5 * std::pow(1.0 + lomax_sigma(p.theta) * x, -p.theta);
                          },
                      },
                      law);
}

double ShockFamily::lower_tail(std::size_t i, double x) const {
    const ShockLaw law = resolve(law_at(i), i);
    if (std::holds_alternative<TwoPointAbaLaw>(law)) {
        const auto tp = aba_two_point(i);
        return (tp.up < -x ? tp.p_up : 0.0) + (tp.down < -x ? tp.p_down : 0.0);
    }
    if (std::holds_alternative<RademacherLaw>(law)) {
        return x < 1.0 ? (x < -1.0 ? 1.0 : 0.5) : 0.0;
    }
    // the remaining laws are symmetric and continuous
    return upper_tail(i, x);
}

double ShockFamily::truncated_second_moment(std::size_t i, double n) const {
    const ShockLaw law = resolve(law_at(i), i);
    const double a = std::max(n, 0.0);
    return std::visit(
        Overloaded{
            [a](const GaussianLaw&) { return 2.0 * (a * normal_pdf(a) + 0.5 * std::erfc(a / std::numbers::sqrt2)); },
            [a](const StudentTLaw& t) {
                const double s = t_scale(t.df);
                const boost::math::students_t_distribution<double> dist(t.df);
                auto integrand = [&](double x) { return x * x * boost::math::pdf(dist, x); };
                boost::math::quadrature::exp_sinh<double> integrator;
                const double lower = a / s;
                const double v = integrator.integrate([&](double u) { return integrand(lower + u); }, 0.0,
                                                      std::numeric_limits<double>::infinity());
                return 2.0 * s * s * v;
            },
            [a](const RademacherLaw&) { return a <= 1.0 ? 1.0 : 0.0; },
            [a, i](const TwoPointAbaLaw&) {
                const auto tp = aba_two_point(i);
                double v = 0.0;
                if (std::abs(tp.up) >= a) {
                    v += tp.up * tp.up * tp.p_up;
                }
                if (std::abs(tp.down) >= a) {
                    v += tp.down * tp.down * tp.p_down;
                }
                return v;
            },
            [a](const BoundedTailPowerLaw& p) {
                const double th = p.theta;
                const double s = lomax_sigma(th);
                const double q = 1.0 + s * a;
                const double y2 = th * (std::pow(q, 2.0 - th) / (th - 2.0) - 2.0 * std::pow(q, 1.0 - th) / (th - 1.0) +
                                        std::pow(q, -th) / th);
                return y2 / (s * s);
            },
        },
        law);
}

bool ShockFamily::unbounded_support(std::size_t i) const {
    const ShockLaw law = resolve(law_at(i), i);
    return !std::holds_alternative<RademacherLaw>(law) && !std::holds_alternative<TwoPointAbaLaw>(law);
}

double ShockFamily::draw(std::uint64_t seed, std::size_t i, std::uint64_t d) const {
    double out = 0.0;
    fill(seed, i, d, std::span<double>(&out, 1));
    return out;
}

void ShockFamily::fill(std::uint64_t seed, std::size_t i, std::uint64_t first_draw, std::span<double> out) const {
    const std::uint32_t stream = stream_id(i);
    const ShockLaw law = resolve(law_at(i), i);
    const std::size_t n = out.size();

    if (std::holds_alternative<GaussianLaw>(law)) {
        std::uint64_t cached = std::numeric_limits<std::uint64_t>::max();
        Block128 b;
        for (std::size_t j = 0; j < n; ++j) {
            const std::uint64_t d = first_draw + j;
            if (d / 2 != cached) {
                cached = d / 2;
                b = philox_block(seed, stream, cached, 0);
            }
            out[j] = gaussian_from_block(b, (d & 1u) != 0);
        }
        return;
    }
    if (const auto* t = std::get_if<StudentTLaw>(&law)) {
        const double s = t_scale(t->df);
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = s * student_t_draw(seed, stream, first_draw + j, t->df);
        }
        return;
    }
    if (std::holds_alternative<RademacherLaw>(law)) {
        std::uint64_t cached = std::numeric_limits<std::uint64_t>::max();
        Block128 b;
        for (std::size_t j = 0; j < n; ++j) {
            const std::uint64_t d = first_draw + j;
            if (d / 128 != cached) {
                cached = d / 128;
                b = philox_block(seed, stream, cached, 0);
            }
            const unsigned bit = static_cast<unsigned>(d % 128);
            const std::uint64_t word = bit < 64 ? b.lo : b.hi;
            out[j] = ((word >> (bit % 64)) & 1u) ? 1.0 : -1.0;
        }
        return;
    }

    // Laws driven by one uniform per draw.
    std::uint64_t cached = std::numeric_limits<std::uint64_t>::max();
    Block128 b;
    auto uniform_word = [&](std::uint64_t d) {
        if (d / 2 != cached) {
            cached = d / 2;
            b = philox_block(seed, stream, cached, 0);
        }
        return (d & 1u) ? b.hi : b.lo;
    };
    if (std::holds_alternative<TwoPointAbaLaw>(law)) {
        const auto tp = aba_two_point(i);
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = to_unit(uniform_word(first_draw + j)) < tp.p_down ? tp.down : tp.up;
        }
        return;
    }
    const auto& p = std::get<BoundedTailPowerLaw>(law);
    const double sigma = lomax_sigma(p.theta);
    for (std::size_t j = 0; j < n; ++j) {
        const std::uint64_t w = uniform_word(first_draw + j);
        // bit 0 carries the sign, the top 53 bits the magnitude
        const double u = to_unit(w);
        const double magnitude = std::pow(1.0 - u, -1.0 / p.theta) - 1.0;
        out[j] = ((w & 1u) ? -magnitude : magnitude) / sigma;
    }
}

ShockMatrix sample(const ShockFamily& family, std::size_t first_index, std::size_t count, std::size_t n,
                   std::uint64_t seed) {
    if (n == 0) {
        throw std::invalid_argument("sample needs n >= 1");
    }
    if (first_index == 0) {
        throw std::invalid_argument("shock indices start at 1");
    }
    ShockMatrix m;
    m.rows = n;
    m.first_index = first_index;
    m.cols = count;
    m.data.assign(n * count, 0.0);
    constexpr std::size_t kRowBlock = 1 << 14;
    const std::size_t per_col = block_count(n, kRowBlock);
    for_each_block(count * per_col, 1, [&](std::size_t task, std::size_t, std::size_t) {
        const std::size_t c = task / per_col;
        const std::size_t r0 = (task % per_col) * kRowBlock;
        const std::size_t r1 = std::min(n, r0 + kRowBlock);
        family.fill(seed, first_index + c, r0, std::span<double>(m.data.data() + c * n + r0, r1 - r0));
    });
    return m;
}

std::string to_string(RelevanceVerdict v) {
    switch (v) {
        case RelevanceVerdict::pass:
            return "pass";
        case RelevanceVerdict::violated:
            return "violated";
        case RelevanceVerdict::inconclusive:
            return "inconclusive (finite horizon)";
    }
    return "inconclusive (finite horizon)";
}

RelevanceReport check_assumption_relevant(const ShockFamily& family, std::span<const double> x_grid,
                                          std::span<const double> n_grid, std::size_t i_max) {
    if (x_grid.empty() || n_grid.empty() || i_max == 0) {
        throw std::invalid_argument("check_assumption_relevant needs nonempty grids and i_max >= 1");
    }
    RelevanceReport rep;
    rep.i_max = i_max;
    // Indices whose laws are distinct: the whole range when the law depends on i.
    const std::size_t scan = family.index_dependent() ? i_max : std::min(i_max, family.laws().size());
    const bool power_family = family.holds_only(4);

    for (double x : x_grid) {
        TailRow row;
        row.x = x;
        row.inf_upper = std::numeric_limits<double>::infinity();
        row.inf_lower = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i <= scan; ++i) {
            row.inf_upper = std::min(row.inf_upper, family.upper_tail(i, x));
            row.inf_lower = std::min(row.inf_lower, family.lower_tail(i, x));
        }
        if (power_family && x >= 1.0) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = 0.0;
            for (const auto& l : family.laws()) {
                const auto br = power_tail_bracket(std::get<BoundedTailPowerLaw>(l));
                lo = std::min(lo, br.lower_constant * std::pow(x, -br.eta));
                hi = std::max(hi, br.upper_constant * std::pow(x, -br.theta));
            }
            row.bracket_low = lo;
            row.bracket_high = hi;
        }
        rep.tails.push_back(row);
    }

    std::vector<double> sorted_n(n_grid.begin(), n_grid.end());
    std::sort(sorted_n.begin(), sorted_n.end());
    for (double n : sorted_n) {
        IntegrabilityRow row;
        row.n = n;
        for (std::size_t i = 1; i <= scan; ++i) {
            row.sup_tail_moment = std::max(row.sup_tail_moment, family.truncated_second_moment(i, n));
        }
        rep.integrability.push_back(row);
    }

    bool violated = false;
    if (family.holds_only(3)) {
        violated = true;
        rep.notes.push_back("lower tail vanishes: P(eps_i < -x) <= 1/i^2 -> 0 as i grows");
    }
    for (const auto& row : rep.tails) {
        if (row.inf_upper <= 0.0 || row.inf_lower <= 0.0) {
            violated = true;
            rep.notes.push_back("tail mass vanishes at x = " + format_double(row.x) +
                                (row.inf_upper <= 0.0 ? " (upper tail)" : " (lower tail)"));
        }
    }
    bool decreasing = true;
    for (std::size_t j = 1; j < rep.integrability.size(); ++j) {
        if (rep.integrability[j].sup_tail_moment > rep.integrability[j - 1].sup_tail_moment * (1.0 + 1e-12)) {
            decreasing = false;
        }
    }
    const double first = rep.integrability.front().sup_tail_moment;
    const double last = rep.integrability.back().sup_tail_moment;
    if (rep.integrability.size() > 1 && !(decreasing && (last <= 0.5 * first || last < 1e-3))) {
        violated = true;
        rep.notes.push_back("sup_i E[eps_i^2 1{|eps_i|>=N}] does not decrease toward 0 along the N grid");
    }

    if (!family.index_dependent()) {
        bool bounded = false;
        for (std::size_t i = 1; i <= family.laws().size(); ++i) {
            bounded = bounded || !family.unbounded_support(i);
        }
        if (bounded) {
            violated = true;
            rep.notes.push_back("a law with bounded support makes inf_i P(eps_i > x) = 0 beyond its support");
        } else if (!violated) {
            rep.notes.push_back("finite set of laws with two-sided unbounded support and finite variance");
        }
    }
    if (violated) {
        rep.verdict = RelevanceVerdict::violated;
    } else if (family.index_dependent()) {
        rep.verdict = RelevanceVerdict::inconclusive;
        rep.notes.push_back("index-dependent laws: no analytic uniform tail bound");
    } else {
        rep.verdict = RelevanceVerdict::pass;
    }
    return rep;
}

}  // namespace apm
