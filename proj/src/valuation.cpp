#include "apm/valuation.hpp"

#include "apm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apm {

namespace {

constexpr std::size_t kRowBlock = 4096;

bool symmetric_continuous(const ShockFamily& family) {
    return std::all_of(family.laws().begin(), family.laws().end(), [](const ShockLaw& l) {
        return std::holds_alternative<GaussianLaw>(l) || std::holds_alternative<StudentTLaw>(l) ||
               std::holds_alternative<BoundedTailPowerLaw>(l);
    });
}

}  // namespace

SamplePool SamplePool::build(const ShockFamily& family, std::size_t count, std::size_t n, std::uint64_t seed,
                             std::size_t first_index, bool antithetic) {
    if (count == 0 || n == 0) {
        throw std::invalid_argument("sample pool needs at least one index and one sample");
    }
    SamplePool pool;
    pool.family_ = family;
    pool.seed_ = seed;
    pool.antithetic_ = antithetic;
    if (!antithetic) {
        pool.shocks_ = sample(family, first_index, count, n, seed);
        return pool;
    }
    if (!symmetric_continuous(family) || n % 2 != 0) {
        throw std::invalid_argument("antithetic pools need a symmetric continuous family and even n");
    }
    const std::size_t half = n / 2;
    const ShockMatrix base = sample(family, first_index, count, half, seed);
    ShockMatrix& m = pool.shocks_;
    m.rows = n;
    m.first_index = first_index;
    m.cols = count;
    m.data.resize(n * count);
    for (std::size_t c = 0; c < count; ++c) {
        const double* src = base.data.data() + c * half;
        double* dst = m.data.data() + c * n;
        for (std::size_t r = 0; r < half; ++r) {
            dst[r] = src[r];
            dst[r + half] = -src[r];
        }
    }
    return pool;
}

void value_samples_dense(std::span<const double> phi, std::span<const double> b, const SamplePool& pool,
                         std::span<double> out) {
    const std::size_t k = phi.size();
    if (b.size() < k) {
        throw std::invalid_argument("value_samples: b shorter than phi");
    }
    if (pool.first_index() != 1 || (k > 0 && !pool.covers(k))) {
        throw std::invalid_argument("value_samples: strategy support exceeds the pool's index range");
    }
    if (out.size() != pool.size()) {
        throw std::invalid_argument("value_samples: output size mismatch");
    }
    for_each_block(pool.size(), kRowBlock, [&](std::size_t, std::size_t r0, std::size_t r1) {
        const std::size_t len = r1 - r0;
        std::vector<double> sum(len, 0.0);
        std::vector<double> comp(len, 0.0);
        for (std::size_t i = 1; i <= k; ++i) {
            const double w = phi[i - 1];
            if (w == 0.0) {
                continue;
            }
            const double bi = b[i - 1];
            const double* col = pool.column(i).data() + r0;
            for (std::size_t j = 0; j < len; ++j) {
                const double x = w * (col[j] - bi);
                const double t = sum[j] + x;
                comp[j] += std::abs(sum[j]) >= std::abs(x) ? (sum[j] - t) + x : (x - t) + sum[j];
                sum[j] = t;
            }
        }
        for (std::size_t j = 0; j < len; ++j) {
            out[r0 + j] = sum[j] + comp[j];
        }
    });
}

TruncationBound truncation_bound(const Strategy& phi, const ReducedParams& b, std::size_t n) {
    TruncationBound t;
    t.n = n;
    const auto phi_tail = phi.phi().tail_norm_sq(n);
    const auto b_tail = b.b().tail_norm_sq(n);
    if (!phi_tail) {
        throw std::domain_error("strategy tail past index " + std::to_string(n) + " is not square summable");
    }
    t.tail_variance = *phi_tail;
    if (t.tail_variance == 0.0) {
        return t;
    }
    if (!b_tail) {
        throw std::domain_error("b tail past index " + std::to_string(n) + " has no finite square sum");
    }
    t.mean_bound = std::sqrt(t.tail_variance) * std::sqrt(*b_tail);
    return t;
}

ValueSamples value_samples(const Strategy& phi, const ReducedParams& b, const SamplePool& pool) {
    ValueSamples out;
    std::size_t k = 0;
    if (const auto support = phi.segment()) {
        k = *support;
        if (k > pool.last_index()) {
            throw std::invalid_argument("value_samples: strategy support " + std::to_string(k) +
                                        " exceeds the pool (last index " + std::to_string(pool.last_index()) + ")");
        }
    } else {
        if (phi.phi().tail_kind() != TailKind::rule) {
            throw std::invalid_argument("value_samples: strategy support exceeds the pool and has no tail rule");
        }
        k = pool.last_index();
        out.truncation = truncation_bound(phi, b, k);
    }
    const std::vector<double> phi_head = phi.phi().head(k);
    const std::vector<double> b_head = b.head(k);
    out.values.assign(pool.size(), 0.0);
    value_samples_dense(phi_head, b_head, pool, out.values);
    return out;
}

ValueMoments value_moments(const Strategy& phi, const ReducedParams& b) {
    ValueMoments m;
    m.variance = phi.norm_sq();
    m.mean = -inner_product(phi.phi(), b.b());
    if (m.mean == 0.0) {
        m.mean = 0.0;  // no negative zero in reports
    }
    return m;
}

MeanSe expectation_under_density(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size() || values.empty()) {
        throw std::invalid_argument("expectation_under_density: size mismatch");
    }
    CompensatedSum ws;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw DensityNotNormalized("density weights must be finite and nonnegative");
        }
        ws.add(w);
    }
    const double wmean = ws.value() / static_cast<double>(weights.size());
    if (std::abs(wmean - 1.0) > 1e-8) {
        throw DensityNotNormalized("density weights have mean " + format_double(wmean) + ", expected 1");
    }
    std::vector<double> prod(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        prod[j] = weights[j] * values[j];
    }
    return mean_se(prod);
}

void write_pool_csv(std::ostream& os, const SamplePool& pool) {
    os << "# seed=" << pool.seed() << " family=" << pool.family().describe() << " indices=" << pool.first_index()
       << ".." << pool.last_index() << " antithetic=" << (pool.antithetic() ? 1 : 0) << "\n";
    os << "sample";
    for (std::size_t i = pool.first_index(); i <= pool.last_index(); ++i) {
        os << ",eps_" << i;
    }
    os << "\n";
    for (std::size_t j = 0; j < pool.size(); ++j) {
        os << j;
        for (std::size_t i = pool.first_index(); i <= pool.last_index(); ++i) {
            os << ',' << format_double(pool.column(i)[j]);
        }
        os << "\n";
    }
}

}  // namespace apm
