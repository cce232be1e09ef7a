#include "apm/market_model.hpp"

#include "apm/numeric.hpp"

#include <algorithm>

namespace apm {

void MarketParams::validate(std::size_t k) const {
    if (m == 0) {
        throw InvalidParameter("market needs at least one common factor (m >= 1)");
    }
    for (std::size_t r = 0; r < beta.size(); ++r) {
        if (beta[r].size() != m) {
            throw InvalidParameter("beta row for asset " + std::to_string(m + 1 + r) + " has " +
                                   std::to_string(beta[r].size()) + " entries, expected m = " + std::to_string(m));
        }
    }
    for (std::size_t i = 1; i <= k; ++i) {
        if (!bar_beta.defined_at(i) || !mu.defined_at(i)) {
            throw InvalidParameter("market coefficients undefined at asset " + std::to_string(i));
        }
        if (bar_beta.at(i) == 0.0) {
            throw InvalidParameter("bar_beta vanishes at asset " + std::to_string(i));
        }
    }
}

std::span<const double> MarketParams::loading(std::size_t i) const {
    if (i <= m || i > last_loaded_asset()) {
        return {};
    }
    return beta[i - m - 1];
}

ReducedParams::ReducedParams(Sequence b) : b_(std::move(b)) {
    partial_.reserve(b_.prefix_size() + 1);
    partial_.push_back(0.0);
    CompensatedSum acc;
    for (double v : b_.prefix()) {
        acc.add(v * v);
        partial_.push_back(acc.value());
    }
}

double ReducedParams::partial_sharpe(std::size_t k) const {
    if (k < partial_.size()) {
        return partial_[k];
    }
    CompensatedSum acc;
    acc.add(partial_.back());
    for (std::size_t i = partial_.size(); i <= k; ++i) {
        const double v = b_.at(i);
        acc.add(v * v);
    }
    return acc.value();
}

ReducedParams reduce_params(const MarketParams& params, std::size_t k) {
    if (k == 0) {
        throw InvalidParameter("reduce_params needs k >= 1");
    }
    params.validate(k);
    std::vector<double> b(k);
    for (std::size_t i = 1; i <= k; ++i) {
        const double own = -params.mu.at(i) / params.bar_beta.at(i);
        if (i <= params.m) {
            b[i - 1] = own;
            continue;
        }
        const auto load = params.loading(i);
        double factor_part = 0.0;
        for (std::size_t j = 1; j <= load.size(); ++j) {
            factor_part += params.mu.at(j) * load[j - 1] / (params.bar_beta.at(j) * params.bar_beta.at(i));
        }
        b[i - 1] = own + factor_part;
    }

    const bool idiosyncratic_tail = k >= params.last_loaded_asset();
    const bool mu_analytic = params.mu.tail_kind() != TailKind::unknown && params.mu.prefix_size() <= k;
    const bool bar_analytic = params.bar_beta.tail_kind() == TailKind::rule && params.bar_beta.prefix_size() <= k;
    if (idiosyncratic_tail && mu_analytic && bar_analytic) {
        if (params.mu.tail_kind() == TailKind::zero) {
            return ReducedParams(Sequence::finite(std::move(b)));
        }
        TailRule rule = *params.mu.rule() / *params.bar_beta.rule();
        rule.scale = -rule.scale;
        return ReducedParams(Sequence::with_rule(std::move(b), rule));
    }
    return ReducedParams(Sequence::truncated(std::move(b)));
}

std::string to_string(SeriesStatus s) {
    switch (s) {
        case SeriesStatus::summable:
            return "summable";
        case SeriesStatus::diverging:
            return "diverging";
        case SeriesStatus::unknown:
            return "inconclusive";
    }
    return "inconclusive";
}

SharpeSum sharpe_sum(const ReducedParams& reduced, std::size_t k) {
    if (k == 0) {
        throw InvalidParameter("sharpe_sum needs k >= 1");
    }
    SharpeSum out;
    out.k = k;
    out.partial = reduced.partial_sharpe(k);
    const Sequence& b = reduced.b();
    switch (b.tail_kind()) {
        case TailKind::zero:
            out.status = SeriesStatus::summable;
            out.total = reduced.partial_sharpe(b.prefix_size());
            break;
        case TailKind::unknown:
            out.status = SeriesStatus::unknown;
            break;
        case TailKind::rule: {
            const TailSum t = tail_sum(b.rule()->squared(), b.prefix_size());
            if (t.converges) {
                out.status = SeriesStatus::summable;
                out.total = reduced.partial_sharpe(b.prefix_size()) + t.value;
            } else {
                out.status = SeriesStatus::diverging;
            }
            break;
        }
    }
    return out;
}

Strategy::Strategy(Sequence phi) : phi_(std::move(phi)) {
    const auto sq = phi_.tail_norm_sq(0);
    if (!sq) {
        throw InvalidParameter("strategy is not square summable (or its tail is unknown)");
    }
    norm_sq_ = *sq;
}

Strategy raw_to_factor(std::span<const double> psi, const MarketParams& params) {
    const std::size_t k = psi.size();
    params.validate(k);
    std::vector<double> phi(k, 0.0);
    for (std::size_t i = 1; i <= k; ++i) {
        phi[i - 1] = params.bar_beta.at(i) * psi[i - 1];
    }
    for (std::size_t i = params.m + 1; i <= k; ++i) {
        const auto load = params.loading(i);
        for (std::size_t j = 1; j <= load.size() && j <= k; ++j) {
            phi[j - 1] += psi[i - 1] * load[j - 1];
        }
    }
    return Strategy::finite(std::move(phi));
}

RawPortfolio factor_to_raw(const Strategy& phi, const MarketParams& params) {
    if (phi.phi().tail_kind() != TailKind::zero) {
        throw InvalidParameter("factor_to_raw needs a finite-support strategy");
    }
    const std::size_t k = phi.phi().prefix_size();
    params.validate(k);
    RawPortfolio out;
    out.psi.assign(k + 1, 0.0);
    for (std::size_t i = params.m + 1; i <= k; ++i) {
        out.psi[i] = phi.at(i) / params.bar_beta.at(i);
    }
    for (std::size_t j = 1; j <= std::min(params.m, k); ++j) {
        double loaded = 0.0;
        for (std::size_t i = params.m + 1; i <= k; ++i) {
            const auto load = params.loading(i);
            if (!load.empty()) {
                loaded += out.psi[i] * load[j - 1];
            }
        }
        const double bb = params.bar_beta.at(j);
        if (bb == 0.0 || !std::isfinite(bb)) {
            throw InvalidParameter("singular factor transform at asset " + std::to_string(j) +
                                   " (corrupted parameters)");
        }
        out.psi[j] = (phi.at(j) - loaded) / bb;
    }
    CompensatedSum total;
    for (std::size_t i = 1; i <= k; ++i) {
        total.add(out.psi[i]);
    }
    out.psi[0] = -total.value();
    return out;
}

}  // namespace apm
