#include "apm/sequence.hpp"

#include "apm/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace apm {

double TailRule::operator()(std::size_t i) const {
    if (scale == 0.0) {
        return 0.0;
    }
    const auto x = static_cast<double>(i);
    double v = scale;
    if (ratio != 1.0) {
        v *= std::pow(ratio, x);
    }
    if (power != 0.0) {
        v *= std::pow(x, -power);
    }
    return v;
}

TailRule operator*(const TailRule& a, const TailRule& b) {
    return {a.scale * b.scale, a.ratio * b.ratio, a.power + b.power};
}

TailRule operator/(const TailRule& a, const TailRule& b) {
    if (b.scale == 0.0 || b.ratio == 0.0) {
        throw std::domain_error("tail rule division by a vanishing rule");
    }
    return {a.scale / b.scale, a.ratio / b.ratio, a.power - b.power};
}

TailSum tail_sum(const TailRule& rule, std::size_t n) {
    if (rule.scale == 0.0 || rule.ratio == 0.0) {
        return {true, 0.0};
    }
    const double ar = std::abs(rule.ratio);
    if (ar > 1.0) {
        return {false, 0.0};
    }
    if (ar == 1.0) {
        if (rule.power <= 1.0) {
            return {false, 0.0};
        }
        const double p = rule.power;
        if (rule.ratio > 0.0) {
            return {true, rule.scale * hurwitz_zeta(p, static_cast<double>(n) + 1.0)};
        }
        // alternating: even indices minus odd indices beyond n
        const double even = hurwitz_zeta(p, static_cast<double>(n / 2) + 1.0);
        const double odd = hurwitz_zeta(p, static_cast<double>((n + 1) / 2) + 0.5);
        return {true, rule.scale * std::pow(2.0, -p) * (even - odd)};
    }
    if (rule.power == 0.0) {
        const double first = rule.scale * std::pow(rule.ratio, static_cast<double>(n + 1));
        return {true, first / (1.0 - rule.ratio)};
    }
    CompensatedSum acc;
    constexpr std::size_t kMaxTerms = 100'000'000;
    for (std::size_t i = n + 1; i < n + kMaxTerms; ++i) {
        const double t = rule(i);
        acc.add(t);
        const auto x = static_cast<double>(i);
        const double rho = rule.power > 0.0 ? ar : ar * std::pow((x + 1.0) / x, -rule.power);
        if (rho < 1.0) {
            const double remainder = std::abs(t) * rho / (1.0 - rho);
            if (remainder <= 1e-17 * std::abs(acc.value()) || t == 0.0) {
                return {true, acc.value()};
            }
        }
    }
    return {true, acc.value()};
}

Sequence Sequence::finite(std::vector<double> values) {
    Sequence s;
    s.prefix_ = std::move(values);
    s.kind_ = TailKind::zero;
    return s;
}

Sequence Sequence::truncated(std::vector<double> values) {
    Sequence s;
    s.prefix_ = std::move(values);
    s.kind_ = TailKind::unknown;
    return s;
}

Sequence Sequence::with_rule(std::vector<double> prefix, TailRule rule) {
    Sequence s;
    s.prefix_ = std::move(prefix);
    if (rule.scale == 0.0 || rule.ratio == 0.0) {
        s.kind_ = TailKind::zero;
    } else {
        s.kind_ = TailKind::rule;
        s.rule_ = rule;
    }
    return s;
}

bool Sequence::defined_at(std::size_t i) const {
    return i >= 1 && (i <= prefix_.size() || kind_ != TailKind::unknown);
}

double Sequence::at(std::size_t i) const {
    if (i == 0) {
        throw std::out_of_range("sequence index starts at 1");
    }
    if (i <= prefix_.size()) {
        return prefix_[i - 1];
    }
    switch (kind_) {
        case TailKind::zero:
            return 0.0;
        case TailKind::rule:
            return (*rule_)(i);
        case TailKind::unknown:
            break;
    }
    throw std::out_of_range("sequence value at index " + std::to_string(i) +
                            " is beyond the known prefix of length " + std::to_string(prefix_.size()));
}

std::vector<double> Sequence::head(std::size_t k) const {
    std::vector<double> out(k);
    for (std::size_t i = 1; i <= k; ++i) {
        out[i - 1] = at(i);
    }
    return out;
}

std::optional<std::size_t> Sequence::support() const {
    if (kind_ != TailKind::zero) {
        return std::nullopt;
    }
    std::size_t last = 0;
    for (std::size_t i = 0; i < prefix_.size(); ++i) {
        if (prefix_[i] != 0.0) {
            last = i + 1;
        }
    }
    return last;
}

std::optional<double> Sequence::tail_norm_sq(std::size_t n) const {
    CompensatedSum acc;
    for (std::size_t i = n + 1; i <= prefix_.size(); ++i) {
        acc.add(prefix_[i - 1] * prefix_[i - 1]);
    }
    const std::size_t from = std::max(n, prefix_.size());
    switch (kind_) {
        case TailKind::zero:
            return acc.value();
        case TailKind::unknown:
            return std::nullopt;
        case TailKind::rule: {
            const TailSum t = tail_sum(rule_->squared(), from);
            if (!t.converges) {
                return std::nullopt;
            }
            acc.add(t.value);
            return acc.value();
        }
    }
    return std::nullopt;
}

std::string Sequence::describe() const {
    std::ostringstream os;
    os << "prefix[" << prefix_.size() << "]";
    switch (kind_) {
        case TailKind::zero:
            os << " + zeros";
            break;
        case TailKind::unknown:
            os << " (truncated)";
            break;
        case TailKind::rule:
            os << " + " << format_double(rule_->scale) << "*" << format_double(rule_->ratio) << "^i*i^-"
               << format_double(rule_->power);
            break;
    }
    return os.str();
}

double inner_product(const Sequence& a, const Sequence& b) {
    const std::size_t k = std::max(a.prefix_size(), b.prefix_size());
    CompensatedSum acc;
    for (std::size_t i = 1; i <= k; ++i) {
        const bool da = a.defined_at(i);
        const bool db = b.defined_at(i);
        const double va = da ? a.at(i) : std::numeric_limits<double>::quiet_NaN();
        const double vb = db ? b.at(i) : std::numeric_limits<double>::quiet_NaN();
        if ((da && va == 0.0) || (db && vb == 0.0)) {
            continue;
        }
        if (!da || !db) {
            throw std::domain_error("inner product needs index " + std::to_string(i) +
                                    " of a truncated sequence");
        }
        acc.add(va * vb);
    }
    if (a.tail_kind() == TailKind::zero || b.tail_kind() == TailKind::zero) {
        return acc.value();
    }
    if (a.tail_kind() == TailKind::unknown || b.tail_kind() == TailKind::unknown) {
        throw std::domain_error("inner product tail involves a truncated sequence");
    }
    const TailSum t = tail_sum(*a.rule() * *b.rule(), k);
    if (!t.converges) {
        throw std::domain_error("inner product tail diverges");
    }
    acc.add(t.value);
    return acc.value();
}

}  // namespace apm
