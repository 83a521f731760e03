#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mismatch/numerics.hpp"
#include "mismatch/types.hpp"

// Mismatched-decoding primitives on finite alphabets: the tilted information
// density and its dual rate functional, the exponent density, the two E0
// functionals, and the conditional divergences used to carve uncertainty
// balls around a metric.

namespace mismatch {

namespace detail {

// u(x) = a(x) + sum_l lambda_l (c_l(x) - E_Q[c_l]).  The cost recentering
// keeps the tilt zero-mean under Q whenever a is; for rate quantities the
// recentering cancels between numerator and denominator, for exponent
// quantities it does not, so it is always applied.
inline Vec tilt_vector(const MetricParams& mp, const InputDistribution& q, const Vec& mult) {
    const std::size_t n = q.size();
    Vec u(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) u[x] = mp.tilt(x);
    for (std::size_t l = 0; l < mult.size() && l < mp.costs.size(); ++l) {
        if (mult[l] == 0.0) continue;
        const Vec& c = mp.costs[l];
        double phi = 0.0;
        for (std::size_t x = 0; x < n; ++x) phi += q[x] * c[x];
        for (std::size_t x = 0; x < n; ++x) u[x] += mult[l] * (c[x] - phi);
    }
    return u;
}

inline Vec primary_tilt(const MetricParams& mp, const InputDistribution& q) {
    return tilt_vector(mp, q, mp.lambda);
}

inline Vec secondary_tilt(const MetricParams& mp, const InputDistribution& q) {
    return tilt_vector(mp, q, mp.lambda_bar);
}

// den(y) = sum_x Q(x) metric(y|x)^s e^{t(x)}
inline Vec tilted_output_mass(const InputDistribution& q, const DiscreteChannel& metric,
                              double s, const Vec& t) {
    Vec den(metric.num_outputs(), 0.0);
    for (std::size_t x = 0; x < q.size(); ++x) {
        if (q[x] == 0.0) continue;
        const double w = q[x] * std::exp(t[x]);
        for (std::size_t y = 0; y < metric.num_outputs(); ++y)
            den[y] += w * std::pow(metric(x, y), s);
    }
    return den;
}

}  // namespace detail

// log of  metric(y|x)^s e^{u(x)} / sum_xb Q(xb) metric(y|xb)^s e^{u(xb)}
inline double info_density(const MetricParams& mp, const InputDistribution& q,
                           const DiscreteChannel& metric, std::size_t x, std::size_t y) {
    require_matching_input(q, metric);
    require_positive_metric(metric);
    Vec u = detail::primary_tilt(mp, q);
    Vec den = detail::tilted_output_mass(q, metric, mp.s, u);
    return mp.s * std::log(metric(x, y)) + u[x] - std::log(den[y]);
}

// E_{Q x channel}[ info density of the metric ]
inline double rate_functional(const MetricParams& mp, const InputDistribution& q,
                              const DiscreteChannel& metric, const DiscreteChannel& channel) {
    require_matching_input(q, metric);
    require_same_shape(metric, channel);
    require_positive_metric(metric);
    Vec u = detail::primary_tilt(mp, q);
    Vec den = detail::tilted_output_mass(q, metric, mp.s, u);
    double acc = 0.0;
    for (std::size_t x = 0; x < q.size(); ++x) {
        if (q[x] == 0.0) continue;
        for (std::size_t y = 0; y < metric.num_outputs(); ++y) {
            if (channel(x, y) == 0.0) continue;
            acc += q[x] * channel(x, y) *
                   (mp.s * std::log(metric(x, y)) + u[x] - std::log(den[y]));
        }
    }
    return acc;
}

// epsilon(x, y) = ( sum_xb Q(xb) metric(y|xb)^s e^{ubar(xb)} /
//                   (metric(y|x)^s e^{u(x)}) )^rho
inline double exponent_density(const MetricParams& mp, double rho, const InputDistribution& q,
                               const DiscreteChannel& metric, std::size_t x, std::size_t y) {
    require_matching_input(q, metric);
    require_positive_metric(metric);
    Vec u = detail::primary_tilt(mp, q);
    Vec ub = detail::secondary_tilt(mp, q);
    Vec den = detail::tilted_output_mass(q, metric, mp.s, ub);
    return std::exp(rho * (std::log(den[y]) - mp.s * std::log(metric(x, y)) - u[x]));
}

namespace detail {

// epsilon table for all (x, y) at once; the shared numerator mass is
// computed a single time per output symbol.
inline Matrix exponent_density_table(const MetricParams& mp, double rho,
                                     const InputDistribution& q, const DiscreteChannel& metric) {
    Vec u = primary_tilt(mp, q);
    Vec ub = secondary_tilt(mp, q);
    Vec den = tilted_output_mass(q, metric, mp.s, ub);
    Matrix eps(metric.num_inputs(), metric.num_outputs());
    for (std::size_t x = 0; x < metric.num_inputs(); ++x)
        for (std::size_t y = 0; y < metric.num_outputs(); ++y)
            eps(x, y) =
                std::exp(rho * (std::log(den[y]) - mp.s * std::log(metric(x, y)) - u[x]));
    return eps;
}

}  // namespace detail

// -log E_{Q x channel}[ epsilon ]  (iid ensemble)
inline double e0_functional(const MetricParams& mp, double rho, const InputDistribution& q,
                            const DiscreteChannel& metric, const DiscreteChannel& channel) {
    require_same_shape(metric, channel);
    require_positive_metric(metric);
    require_matching_input(q, metric);
    Matrix eps = detail::exponent_density_table(mp, rho, q, metric);
    double acc = 0.0;
    for (std::size_t x = 0; x < q.size(); ++x)
        for (std::size_t y = 0; y < metric.num_outputs(); ++y)
            acc += q[x] * channel(x, y) * eps(x, y);
    return -std::log(acc);
}

// -E_Q[ log E_{channel}[ epsilon | X ] ]  (constant-composition ensemble)
inline double e0_cc_functional(const MetricParams& mp, double rho, const InputDistribution& q,
                               const DiscreteChannel& metric, const DiscreteChannel& channel) {
    require_same_shape(metric, channel);
    require_positive_metric(metric);
    require_matching_input(q, metric);
    Matrix eps = detail::exponent_density_table(mp, rho, q, metric);
    double acc = 0.0;
    for (std::size_t x = 0; x < q.size(); ++x) {
        if (q[x] == 0.0) continue;
        double row = 0.0;
        for (std::size_t y = 0; y < metric.num_outputs(); ++y)
            row += channel(x, y) * eps(x, y);
        acc -= q[x] * std::log(row);
    }
    return acc;
}

// D(w || p | q) = sum_x q(x) sum_y w(y|x) log(w(y|x)/p(y|x)), with the
// 0 log 0 = 0 convention; mass of w outside the support of p returns the
// infinite marker rather than throwing.
inline double kl_cond(const InputDistribution& q, const DiscreteChannel& p,
                      const DiscreteChannel& w) {
    require_same_shape(p, w);
    require_matching_input(q, p);
    double acc = 0.0;
    for (std::size_t x = 0; x < q.size(); ++x) {
        if (q[x] == 0.0) continue;
        for (std::size_t y = 0; y < w.num_outputs(); ++y) {
            double wy = w(x, y);
            if (wy == 0.0) continue;
            if (p(x, y) <= 0.0) return kInf;
            acc += q[x] * wy * std::log(wy / p(x, y));
        }
    }
    return acc;
}

// (1/2) sum_x q(x) sum_y (p(y|x) - w(y|x))^2 / w(y|x)
inline double chi2_cond(const InputDistribution& q, const DiscreteChannel& p,
                        const DiscreteChannel& w) {
    require_same_shape(p, w);
    require_matching_input(q, p);
    double acc = 0.0;
    for (std::size_t x = 0; x < q.size(); ++x) {
        if (q[x] == 0.0) continue;
        for (std::size_t y = 0; y < w.num_outputs(); ++y) {
            double d = p(x, y) - w(x, y);
            if (w(x, y) == 0.0) {
                if (d == 0.0) continue;
                return kInf;
            }
            acc += q[x] * d * d / w(x, y);
        }
    }
    return 0.5 * acc;
}

// Matched mutual information I(Q, W); zero channel entries are skipped.
inline double matched_mi(const InputDistribution& q, const DiscreteChannel& w) {
    require_matching_input(q, w);
    Vec out(w.num_outputs(), 0.0);
    for (std::size_t x = 0; x < q.size(); ++x)
        for (std::size_t y = 0; y < w.num_outputs(); ++y) out[y] += q[x] * w(x, y);
    double acc = 0.0;
    for (std::size_t x = 0; x < q.size(); ++x) {
        if (q[x] == 0.0) continue;
        for (std::size_t y = 0; y < w.num_outputs(); ++y) {
            if (w(x, y) == 0.0) continue;
            acc += q[x] * w(x, y) * std::log(w(x, y) / out[y]);
        }
    }
    return acc;
}

struct RateSolution {
    double value = 0.0;
    MetricParams params;
    OptimizerReport report;
};

// GMI: sup over s >= 0 of the rate functional with a = 0.
inline RateSolution gmi_rate(const InputDistribution& q, const DiscreteChannel& metric,
                             const DiscreteChannel& channel, double xtol = 1e-9) {
    RateSolution sol;
    auto obj = [&](double s) {
        MetricParams mp;
        mp.s = s;
        return rate_functional(mp, q, metric, channel);
    };
    sol.report = maximize_on_ray(obj, 32.0, xtol);
    if (!sol.report.converged)
        throw OptimizerDidNotConverge("gmi_rate: tilt search did not converge", sol.report);
    sol.params.s = sol.report.point[0];
    sol.value = sol.report.value;
    return sol;
}

// LM: sup over s >= 0 and tilts a(x) of the rate functional.  The gauge
// freedom a -> a + const is removed by pinning a to zero Q-mean: the heaviest
// input carries the dependent coordinate.
inline RateSolution lm_rate(const InputDistribution& q, const DiscreteChannel& metric,
                            const DiscreteChannel& channel, double value_tol = 1e-9) {
    const std::size_t n = q.size();
    std::size_t pivot = 0;
    for (std::size_t x = 1; x < n; ++x)
        if (q[x] > q[pivot]) pivot = x;

    auto unpack = [&](const Vec& v) {
        MetricParams mp;
        mp.s = v[0];
        mp.a.assign(n, 0.0);
        double mass = 0.0;
        std::size_t k = 1;
        for (std::size_t x = 0; x < n; ++x) {
            if (x == pivot) continue;
            mp.a[x] = v[k++];
            mass += q[x] * mp.a[x];
        }
        if (q[pivot] > 0.0) mp.a[pivot] = -mass / q[pivot];
        return mp;
    };

    auto obj = [&](const Vec& v) {
        return rate_functional(unpack(v), q, metric, channel);
    };

    Vec start(n, 0.0);
    start[0] = 1.0;
    Vec lo(n, -60.0), hi(n, 60.0);
    lo[0] = 0.0;
    hi[0] = 1e6;

    RateSolution sol;
    sol.report = maximize_coordinate_ascent(obj, start, lo, hi, value_tol);
    if (!sol.report.converged)
        throw OptimizerDidNotConverge("lm_rate: (s, a) search did not converge", sol.report);
    sol.params = unpack(sol.report.point);
    sol.value = sol.report.value;
    return sol;
}

}  // namespace mismatch
