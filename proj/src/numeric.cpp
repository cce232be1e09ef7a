#include "apm/numeric.hpp"

#include <array>
#include <charconv>
#include <stdexcept>
#include <vector>

namespace apm {

double compensated_dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("compensated_dot: length mismatch");
    }
    CompensatedSum acc;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc.add(a[i] * b[i]);
    }
    return acc.value();
}

double hurwitz_zeta(double s, double q) {
    if (!(s > 1.0) || !(q > 0.0)) {
        throw std::domain_error("hurwitz_zeta requires s > 1 and q > 0");
    }
    // B_{2k} / (2k)!
    static constexpr std::array<double, 8> kBernoulliOverFactorial = {
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    };
    constexpr int kDirect = 16;
    double direct = 0.0;
    for (int j = kDirect - 1; j >= 0; --j) {
        direct += std::pow(q + j, -s);
    }
    const double a = q + kDirect;
    double tail = std::pow(a, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(a, -s);
    // rising factorial s(s+1)...(s+2k-2) times a^{-s-2k+1}
    double rising = s;
    double power = std::pow(a, -s - 1.0);
    for (std::size_t k = 0; k < kBernoulliOverFactorial.size(); ++k) {
        tail += kBernoulliOverFactorial[k] * rising * power;
        const double m = static_cast<double>(2 * k + 1);
        rising *= (s + m) * (s + m + 1.0);
        power /= a * a;
    }
    return direct + tail;
}

MeanSe mean_se(std::span<const double> x) {
    MeanSe out;
    if (x.empty()) {
        return out;
    }
    CompensatedSum s;
    for (double v : x) {
        s.add(v);
    }
    const double n = static_cast<double>(x.size());
    out.mean = s.value() / n;
    CompensatedSum ss;
    for (double v : x) {
        const double d = v - out.mean;
        ss.add(d * d);
    }
    out.sd = x.size() > 1 ? std::sqrt(ss.value() / (n - 1.0)) : 0.0;
    out.se = out.sd / std::sqrt(n);
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return std::string(buf.data(), end);
}

}  // namespace apm
