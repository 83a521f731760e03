#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "mismatch/core.hpp"
#include "mismatch/numerics.hpp"
#include "mismatch/types.hpp"

// Worst-case rates and Gallager functions over an uncertainty ball around the
// decoding metric.  The chi-squared ball admits closed forms (optimum value,
// worst channel, feasibility radius); the relative-entropy ball is handled by
// an exact reference solver built on nested root finding.

namespace mismatch {

struct WorstCaseResult {
    double value = 0.0;
    MetricParams params;
    double rho = kNaN;            // set for exponent problems only
    Matrix worst_channel;         // rows sum to 1; entries can dip below 0 when infeasible
    double attained_distance = 0.0;
    double feasibility_radius = kInf;
    bool feasible = true;
    OptimizerReport search;
    std::string note;
};

// ---------------------------------------------------------------------------
// rate-side building blocks

// I^ML_{s,a}: the rate functional evaluated at the metric itself.
inline double i_ml(const MetricParams& mp, const InputDistribution& q,
                   const DiscreteChannel& metric) {
    return rate_functional(mp, q, metric, metric);
}

namespace detail {

inline Matrix info_density_table(const MetricParams& mp, const InputDistribution& q,
                                 const DiscreteChannel& metric) {
    Vec u = primary_tilt(mp, q);
    Vec den = tilted_output_mass(q, metric, mp.s, u);
    Matrix t(metric.num_inputs(), metric.num_outputs());
    for (std::size_t x = 0; x < metric.num_inputs(); ++x)
        for (std::size_t y = 0; y < metric.num_outputs(); ++y)
            t(x, y) = mp.s * std::log(metric(x, y)) + u[x] - std::log(den[y]);
    return t;
}

// E_Q[ Var_metric[ table | X ] ]
inline double conditional_variance(const Matrix& table, const InputDistribution& q,
                                   const DiscreteChannel& metric) {
    double v = 0.0;
    for (std::size_t x = 0; x < metric.num_inputs(); ++x) {
        if (q[x] == 0.0) continue;
        double mean = 0.0, sq = 0.0;
        for (std::size_t y = 0; y < metric.num_outputs(); ++y) {
            mean += metric(x, y) * table(x, y);
            sq += metric(x, y) * table(x, y) * table(x, y);
        }
        v += q[x] * (sq - mean * mean);
    }
    return std::max(v, 0.0);
}

// (table - E[table|x]) / sqrt(variance); shared by rate and exponent scores.
inline Matrix centered_normalized(const Matrix& table, const DiscreteChannel& metric,
                                  double variance) {
    Matrix phi(table.rows(), table.cols());
    double root = std::sqrt(variance);
    for (std::size_t x = 0; x < table.rows(); ++x) {
        double mean = 0.0;
        for (std::size_t y = 0; y < table.cols(); ++y) mean += metric(x, y) * table(x, y);
        for (std::size_t y = 0; y < table.cols(); ++y)
            phi(x, y) = (table(x, y) - mean) / root;
    }
    return phi;
}

inline double smallest_radius_where_negative(const Matrix& phi, double sign) {
    // the chi-squared worst channel scales entries by (1 + sign*sqrt(2r)*phi);
    // nonnegativity binds at cells where sign*phi < 0
    double rad = kInf;
    for (double p : phi.data()) {
        if (sign * p < 0.0) rad = std::min(rad, 0.5 / (p * p));
    }
    return rad;
}

}  // namespace detail

// V_{s,a} = E_Q[ Var_metric[ i_{s,a} | X ] ]
inline double rate_dispersion(const MetricParams& mp, const InputDistribution& q,
                              const DiscreteChannel& metric) {
    require_positive_metric(metric);
    require_matching_input(q, metric);
    Matrix t = detail::info_density_table(mp, q, metric);
    return detail::conditional_variance(t, q, metric);
}

// phi_{s,a}: information density centered per input and normalized to unit
// Q-averaged conditional variance.
inline Matrix rate_score(const MetricParams& mp, const InputDistribution& q,
                         const DiscreteChannel& metric) {
    require_positive_metric(metric);
    require_matching_input(q, metric);
    Matrix t = detail::info_density_table(mp, q, metric);
    double v = detail::conditional_variance(t, q, metric);
    if (v <= 0.0) throw DegenerateMetric("rate dispersion is zero");
    return detail::centered_normalized(t, metric, v);
}

// Largest radius keeping the chi-squared worst channel nonnegative: the
// channel multiplies the metric by (1 - sqrt(2r) phi), so positive scores
// bind.  +inf when no score is positive.
inline double feasibility_radius(const InputDistribution& q, const DiscreteChannel& metric,
                                 const MetricParams& mp) {
    Matrix phi = rate_score(mp, q, metric);
    return detail::smallest_radius_where_negative(phi, -1.0);
}

namespace detail {

inline Matrix scaled_channel(const DiscreteChannel& metric, const Matrix& phi, double factor) {
    Matrix w(metric.num_inputs(), metric.num_outputs());
    for (std::size_t x = 0; x < w.rows(); ++x)
        for (std::size_t y = 0; y < w.cols(); ++y)
            w(x, y) = metric(x, y) * (1.0 + factor * phi(x, y));
    return w;
}

inline double chi2_to_center(const InputDistribution& q, const Matrix& w,
                             const DiscreteChannel& center) {
    double acc = 0.0;
    for (std::size_t x = 0; x < w.rows(); ++x) {
        if (q[x] == 0.0) continue;
        for (std::size_t y = 0; y < w.cols(); ++y) {
            double d = w(x, y) - center(x, y);
            acc += q[x] * d * d / center(x, y);
        }
    }
    return 0.5 * acc;
}

inline double min_entry(const Matrix& m) {
    double v = kInf;
    for (double e : m.data()) v = std::min(v, e);
    return v;
}

}  // namespace detail

// Chi-squared worst channel at fixed parameters; requires r inside the
// feasibility radius so the result is a proper channel.
inline DiscreteChannel worst_channel_chi2(const InputDistribution& q,
                                          const DiscreteChannel& metric, double r,
                                          const MetricParams& mp) {
    double feas = feasibility_radius(q, metric, mp);
    if (!(r < feas))
        throw InfeasibleRadius("radius " + std::to_string(r) +
                               " is not below the feasibility radius " + std::to_string(feas));
    Matrix phi = rate_score(mp, q, metric);
    return DiscreteChannel(detail::scaled_channel(metric, phi, -std::sqrt(2.0 * r)));
}

// Worst-case rate over the chi-squared ball:
//   sup over s (and a for the cc ensemble) of  I^ML_{s,a} - sqrt(2 r V_{s,a})
inline WorstCaseResult worst_rate_chi2(const InputDistribution& q, const BallSpec& ball,
                                       Ensemble ensemble, double tol = 1e-9) {
    if (ball.kind != BallKind::chi_squared)
        throw Error("worst_rate_chi2 requires a chi-squared ball");
    const DiscreteChannel& metric = ball.center;
    require_matching_input(q, metric);
    const double r = ball.radius;

    auto objective = [&](const MetricParams& mp) {
        Matrix t = detail::info_density_table(mp, q, metric);
        double im = 0.0;
        for (std::size_t x = 0; x < metric.num_inputs(); ++x)
            for (std::size_t y = 0; y < metric.num_outputs(); ++y)
                im += q[x] * metric(x, y) * t(x, y);
        double v = detail::conditional_variance(t, q, metric);
        return im - std::sqrt(2.0 * r * v);
    };

    WorstCaseResult res;
    if (ensemble == Ensemble::iid) {
        auto f = [&](double s) {
            MetricParams mp;
            mp.s = s;
            return objective(mp);
        };
        res.search = maximize_on_ray(f, 32.0, tol);
        res.params.s = res.search.point[0];
    } else {
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
        Vec start(n, 0.0);
        start[0] = 1.0;
        Vec lo(n, -60.0), hi(n, 60.0);
        lo[0] = 0.0;
        hi[0] = 1e6;
        res.search = maximize_coordinate_ascent(
            [&](const Vec& v) { return objective(unpack(v)); }, start, lo, hi, tol);
        res.params = unpack(res.search.point);
    }
    res.value = res.search.value;

    Matrix t = detail::info_density_table(res.params, q, metric);
    double v = detail::conditional_variance(t, q, metric);
    if (v <= 0.0) {
        // flat information density: every channel in the ball attains I^ML
        res.worst_channel = metric.matrix();
        res.attained_distance = 0.0;
        res.feasibility_radius = kInf;
        res.note = "degenerate score; worst channel equals the center";
        return res;
    }
    Matrix phi = detail::centered_normalized(t, metric, v);
    res.feasibility_radius = detail::smallest_radius_where_negative(phi, -1.0);
    res.worst_channel = detail::scaled_channel(metric, phi, -std::sqrt(2.0 * r));
    res.attained_distance = detail::chi2_to_center(q, res.worst_channel, metric);
    res.feasible = r < res.feasibility_radius;
    if (!res.feasible) {
        int negatives = 0;
        for (double e : res.worst_channel.data())
            if (e < 0.0) ++negatives;
        res.note = "radius beyond feasibility: " + std::to_string(negatives) +
                   " negative entries, smallest " +
                   std::to_string(detail::min_entry(res.worst_channel));
    }
    return res;
}

// ---------------------------------------------------------------------------
// exact relative-entropy solver

namespace detail {

struct SphereSolution {
    Matrix w;
    double objective = 0.0;  // E_{Q x W}[score]
    double mult = kNaN;
    bool degenerate = false;
};

// Minimize E_{Q x W}[score] over channels on the sphere D(center||W|Q) = r.
// Stationarity gives W(y|x) = mult * center(y|x) / (score(x,y) + nu(x)); the
// per-row nu solves the normalization and the outer mult sets the divergence.
inline SphereSolution kl_sphere_minimize(const InputDistribution& q,
                                         const DiscreteChannel& center, const Matrix& score,
                                         double r) {
    const std::size_t nx = center.num_inputs(), ny = center.num_outputs();
    SphereSolution sol;
    sol.w = center.matrix();

    bool flat = true;
    for (std::size_t x = 0; x < nx && flat; ++x) {
        double mn = kInf, mx = -kInf;
        for (std::size_t y = 0; y < ny; ++y) {
            mn = std::min(mn, score(x, y));
            mx = std::max(mx, score(x, y));
        }
        if (mx - mn > 1e-12 * (1.0 + std::abs(mx))) flat = false;
    }
    if (flat) {
        // per-row constant scores: the functional is the same for every
        // channel, the divergence cannot leave zero
        sol.degenerate = true;
        double acc = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y) acc += q[x] * center(x, y) * score(x, y);
        sol.objective = acc;
        return sol;
    }

    auto solve_rows = [&](double mult, Matrix& w) {
        for (std::size_t x = 0; x < nx; ++x) {
            double mn = kInf;
            for (std::size_t y = 0; y < ny; ++y) mn = std::min(mn, score(x, y));
            double span = 0.0;
            for (std::size_t y = 0; y < ny; ++y)
                span = std::max(span, score(x, y) - mn);
            if (span <= 1e-12 * (1.0 + std::abs(mn))) {
                for (std::size_t y = 0; y < ny; ++y) w(x, y) = center(x, y);
                continue;
            }
            auto mass = [&](double nu) {
                double h = 0.0;
                for (std::size_t y = 0; y < ny; ++y)
                    h += mult * center(x, y) / (score(x, y) - mn + nu);
                return h;
            };
            // nu parametrized as offset above -min score; mass decreases from
            // +inf to 0 on (0, inf)
            double lo = 1e-300;
            double hi = std::max(1.0, std::abs(mn));
            int guard = 0;
            while (mass(hi) > 1.0 && guard++ < 300) hi *= 4.0;
            if (guard >= 300) throw RootBracketFailure("row normalization bracket, row " +
                                                       std::to_string(x));
            double nu = find_root([&](double u) { return mass(u) - 1.0; }, lo, hi, 1e-13, 1e-16);
            double rowsum = 0.0;
            for (std::size_t y = 0; y < ny; ++y) {
                w(x, y) = mult * center(x, y) / (score(x, y) - mn + nu);
                rowsum += w(x, y);
            }
            for (std::size_t y = 0; y < ny; ++y) w(x, y) /= rowsum;
        }
    };

    Matrix w(nx, ny);
    auto divergence = [&](double mult) {
        solve_rows(mult, w);
        double acc = 0.0;
        for (std::size_t x = 0; x < nx; ++x) {
            if (q[x] == 0.0) continue;
            for (std::size_t y = 0; y < ny; ++y)
                acc += q[x] * center(x, y) * std::log(center(x, y) / w(x, y));
        }
        return acc;
    };

    // divergence decreases in mult (mult -> inf recovers the center).  The
    // root's scale tracks the largest per-row score span, which can be huge
    // (the exponent density grows like exp(s rho ...)), so seed the bracket
    // there instead of at 1.
    double span = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        double mn = kInf, mx = -kInf;
        for (std::size_t y = 0; y < ny; ++y) {
            mn = std::min(mn, score(x, y));
            mx = std::max(mx, score(x, y));
        }
        span = std::max(span, mx - mn);
    }
    double seed = std::min(std::max(1.0, span), 1e280);
    double lo = seed, hi = seed;
    if (divergence(seed) > r) {
        int guard = 0;
        while (divergence(hi) > r && guard++ < 80) hi *= 4.0;
        if (guard >= 80) throw RootBracketFailure("divergence bracket (upper)");
    } else {
        int guard = 0;
        while (divergence(lo) <= r && guard++ < 80) lo /= 4.0;
        if (guard >= 80) throw RootBracketFailure("divergence bracket (lower)");
    }
    double t = find_root([&](double lt) { return divergence(std::exp(lt)) - r; }, std::log(lo),
                         std::log(hi), 1e-11, 1e-14);
    sol.mult = std::exp(t);
    solve_rows(sol.mult, sol.w);

    double acc = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) acc += q[x] * sol.w(x, y) * score(x, y);
    sol.objective = acc;
    return sol;
}

}  // namespace detail

// Reference solver for the relative-entropy ball: for fixed decoder
// parameters the inner problem minimizes the linear rate functional over the
// sphere; the outer supremum over (s[,a]) reuses the chi-squared search
// strategy.  The minimax order is inner-min, outer-max.
inline WorstCaseResult worst_rate_exact_kl(const InputDistribution& q, const BallSpec& ball,
                                           Ensemble ensemble, double tol = 1e-9) {
    if (ball.kind != BallKind::relative_entropy)
        throw Error("worst_rate_exact_kl requires a relative-entropy ball");
    const DiscreteChannel& metric = ball.center;
    require_matching_input(q, metric);
    const double r = ball.radius;

    if (r == 0.0) {
        WorstCaseResult res;
        RateSolution m = (ensemble == Ensemble::iid) ? gmi_rate(q, metric, metric, tol)
                                                     : lm_rate(q, metric, metric, tol);
        res.value = m.value;
        res.params = m.params;
        res.search = m.report;
        res.worst_channel = metric.matrix();
        res.attained_distance = 0.0;
        res.note = "zero radius: matched optimum at the center";
        return res;
    }

    auto objective = [&](const MetricParams& mp) {
        Matrix t = detail::info_density_table(mp, q, metric);
        return detail::kl_sphere_minimize(q, metric, t, r).objective;
    };

    WorstCaseResult res;
    if (ensemble == Ensemble::iid) {
        auto f = [&](double s) {
            MetricParams mp;
            mp.s = s;
            return objective(mp);
        };
        res.search = maximize_on_ray(f, 32.0, tol);
        res.params.s = res.search.point[0];
    } else {
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
        Vec start(n, 0.0);
        start[0] = 1.0;
        Vec lo(n, -60.0), hi(n, 60.0);
        lo[0] = 0.0;
        hi[0] = 1e6;
        res.search = maximize_coordinate_ascent(
            [&](const Vec& v) { return objective(unpack(v)); }, start, lo, hi, tol);
        res.params = unpack(res.search.point);
    }

    // re-solve at the optimum so the reported channel matches the params
    Matrix t = detail::info_density_table(res.params, q, metric);
    detail::SphereSolution inner = detail::kl_sphere_minimize(q, metric, t, r);
    res.value = inner.objective;
    res.worst_channel = inner.w;
    if (inner.degenerate) {
        res.attained_distance = 0.0;
        res.note = "degenerate score; constraint inactive";
    } else {
        res.attained_distance = kl_cond(q, DiscreteChannel(inner.w), metric);
    }
    try {
        res.feasibility_radius = feasibility_radius(q, metric, res.params);
    } catch (const DegenerateMetric&) {
        res.feasibility_radius = kInf;
    }
    return res;
}

// ---------------------------------------------------------------------------
// exponent side

// E^ML: the E0 functional evaluated at the metric itself.
inline double e_ml(const MetricParams& mp, double rho, const InputDistribution& q,
                   const DiscreteChannel& metric) {
    return e0_functional(mp, rho, q, metric, metric);
}

// V_{s,lambda,lambda_bar,rho} = E_Q[Var_metric[eps|X]] / E_{Q x metric}[eps]^2
inline double exponent_dispersion(const MetricParams& mp, double rho,
                                  const InputDistribution& q, const DiscreteChannel& metric) {
    require_positive_metric(metric);
    require_matching_input(q, metric);
    Matrix eps = detail::exponent_density_table(mp, rho, q, metric);
    double var = detail::conditional_variance(eps, q, metric);
    double mean = 0.0;
    for (std::size_t x = 0; x < q.size(); ++x)
        for (std::size_t y = 0; y < metric.num_outputs(); ++y)
            mean += q[x] * metric(x, y) * eps(x, y);
    return var / (mean * mean);
}

// psi: exponent density centered per input, normalized by the unconditional
// sqrt of E_Q[Var[eps|X]].
inline Matrix exponent_score(const MetricParams& mp, double rho, const InputDistribution& q,
                             const DiscreteChannel& metric) {
    require_positive_metric(metric);
    require_matching_input(q, metric);
    Matrix eps = detail::exponent_density_table(mp, rho, q, metric);
    double var = detail::conditional_variance(eps, q, metric);
    if (var <= 0.0) throw DegenerateMetric("exponent dispersion is zero");
    return detail::centered_normalized(eps, metric, var);
}

// The exponent worst channel scales the metric by (1 + sqrt(2r) psi), so
// negative scores bind.
inline double feasibility_radius_e0(const InputDistribution& q, const DiscreteChannel& metric,
                                    const MetricParams& mp, double rho) {
    Matrix psi = exponent_score(mp, rho, q, metric);
    return detail::smallest_radius_where_negative(psi, +1.0);
}

inline DiscreteChannel worst_channel_e0_chi2(const InputDistribution& q,
                                             const DiscreteChannel& metric, double r,
                                             const MetricParams& mp, double rho) {
    double feas = feasibility_radius_e0(q, metric, mp, rho);
    if (!(r < feas))
        throw InfeasibleRadius("radius " + std::to_string(r) +
                               " is not below the feasibility radius " + std::to_string(feas));
    Matrix psi = exponent_score(mp, rho, q, metric);
    return DiscreteChannel(detail::scaled_channel(metric, psi, std::sqrt(2.0 * r)));
}

namespace detail {

struct CostParamPack {
    std::size_t n = 0;
    // v = [s, lambda(2), lambda_bar(2), c1 free(n-1), c2 free(n-1)]
    MetricParams unpack(const Vec& v, const InputDistribution& q) const {
        MetricParams mp;
        mp.s = v[0];
        mp.lambda = {v[1], v[2]};
        mp.lambda_bar = {v[3], v[4]};
        mp.costs.assign(2, Vec(n, 0.0));
        std::size_t pivot = 0;
        for (std::size_t x = 1; x < n; ++x)
            if (q[x] > q[pivot]) pivot = x;
        std::size_t k = 5;
        for (int l = 0; l < 2; ++l) {
            double mass = 0.0;
            for (std::size_t x = 0; x < n; ++x) {
                if (x == pivot) continue;
                mp.costs[l][x] = v[k++];
                mass += q[x] * mp.costs[l][x];
            }
            if (q[pivot] > 0.0) mp.costs[l][pivot] = -mass / q[pivot];
        }
        return mp;
    }
    Vec start() const {
        Vec v(5 + 2 * (n - 1), 0.0);
        v[0] = 1.0;
        v[1] = 1.0;  // lambda = (1,0), lambda_bar = (0,1): keeps the cost
        v[4] = 1.0;  // coordinates live from the first sweep
        return v;
    }
    Vec lower() const {
        Vec v(5 + 2 * (n - 1), -60.0);
        v[0] = 0.0;
        return v;
    }
    Vec upper() const {
        Vec v(5 + 2 * (n - 1), 60.0);
        v[0] = 1e6;
        return v;
    }
};

template <class Objective>
OptimizerReport exponent_outer_search(Objective&& obj, const InputDistribution& q,
                                      Ensemble ensemble, double tol, MetricParams& out) {
    if (ensemble == Ensemble::iid) {
        auto f = [&](double s) {
            MetricParams mp;
            mp.s = s;
            return obj(mp);
        };
        OptimizerReport rep = maximize_on_ray(f, 32.0, tol);
        out = MetricParams{};
        out.s = rep.point[0];
        return rep;
    }
    CostParamPack pack{q.size()};
    OptimizerReport rep = maximize_coordinate_ascent(
        [&](const Vec& v) { return obj(pack.unpack(v, q)); }, pack.start(), pack.lower(),
        pack.upper(), tol);
    out = pack.unpack(rep.point, q);
    return rep;
}

}  // namespace detail

// Worst-case Gallager function over the chi-squared ball:
//   sup over s (iid) or (s, lambda, lambda_bar, costs) (cost ensemble) of
//   E^ML - log(1 + sqrt(2 r V))
inline WorstCaseResult worst_e0_chi2(const InputDistribution& q, const BallSpec& ball,
                                     double rho, Ensemble ensemble, double tol = 1e-9) {
    if (ball.kind != BallKind::chi_squared)
        throw Error("worst_e0_chi2 requires a chi-squared ball");
    if (!(rho >= 0.0 && rho <= 1.0)) throw Error("rho must lie in [0,1]");
    const DiscreteChannel& metric = ball.center;
    require_matching_input(q, metric);
    const double r = ball.radius;

    WorstCaseResult res;
    res.rho = rho;
    if (rho == 0.0) {
        res.value = 0.0;
        res.worst_channel = metric.matrix();
        res.feasibility_radius = kInf;
        res.note = "rho = 0: exponent density is identically 1";
        return res;
    }

    auto objective = [&](const MetricParams& mp) {
        Matrix eps = detail::exponent_density_table(mp, rho, q, metric);
        double mean = 0.0;
        for (std::size_t x = 0; x < metric.num_inputs(); ++x)
            for (std::size_t y = 0; y < metric.num_outputs(); ++y)
                mean += q[x] * metric(x, y) * eps(x, y);
        double var = detail::conditional_variance(eps, q, metric);
        return -std::log(mean) - std::log1p(std::sqrt(2.0 * r * var) / mean);
    };
    res.search = detail::exponent_outer_search(objective, q, ensemble, tol, res.params);
    res.value = res.search.value;

    Matrix eps = detail::exponent_density_table(res.params, rho, q, metric);
    double var = detail::conditional_variance(eps, q, metric);
    if (var <= 0.0) {
        res.worst_channel = metric.matrix();
        res.attained_distance = 0.0;
        res.feasibility_radius = kInf;
        res.note = "degenerate score; worst channel equals the center";
        return res;
    }
    Matrix psi = detail::centered_normalized(eps, metric, var);
    res.feasibility_radius = detail::smallest_radius_where_negative(psi, +1.0);
    res.worst_channel = detail::scaled_channel(metric, psi, std::sqrt(2.0 * r));
    res.attained_distance = detail::chi2_to_center(q, res.worst_channel, metric);
    res.feasible = r < res.feasibility_radius;
    if (!res.feasible) {
        int negatives = 0;
        for (double e : res.worst_channel.data())
            if (e < 0.0) ++negatives;
        res.note = "radius beyond feasibility: " + std::to_string(negatives) +
                   " negative entries, smallest " +
                   std::to_string(detail::min_entry(res.worst_channel));
    }
    return res;
}

// Reference solver for the exponent over the relative-entropy ball: the inner
// problem maximizes E_{Q x W}[eps] (linear in W) over the sphere, reusing the
// minimizer on the negated score; the value is -log of that maximum.
inline WorstCaseResult worst_e0_exact_kl(const InputDistribution& q, const BallSpec& ball,
                                         double rho, Ensemble ensemble, double tol = 1e-9) {
    if (ball.kind != BallKind::relative_entropy)
        throw Error("worst_e0_exact_kl requires a relative-entropy ball");
    if (!(rho >= 0.0 && rho <= 1.0)) throw Error("rho must lie in [0,1]");
    const DiscreteChannel& metric = ball.center;
    require_matching_input(q, metric);
    const double r = ball.radius;

    WorstCaseResult res;
    res.rho = rho;
    if (rho == 0.0) {
        res.value = 0.0;
        res.worst_channel = metric.matrix();
        res.feasibility_radius = kInf;
        res.note = "rho = 0: exponent density is identically 1";
        return res;
    }

    auto objective = [&](const MetricParams& mp) {
        Matrix eps = detail::exponent_density_table(mp, rho, q, metric);
        if (r == 0.0) {
            double mean = 0.0;
            for (std::size_t x = 0; x < metric.num_inputs(); ++x)
                for (std::size_t y = 0; y < metric.num_outputs(); ++y)
                    mean += q[x] * metric(x, y) * eps(x, y);
            return -std::log(mean);
        }
        for (double& e : eps.data()) e = -e;
        detail::SphereSolution inner = detail::kl_sphere_minimize(q, metric, eps, r);
        return -std::log(-inner.objective);
    };
    res.search = detail::exponent_outer_search(objective, q, ensemble, tol, res.params);
    res.value = res.search.value;

    Matrix eps = detail::exponent_density_table(res.params, rho, q, metric);
    if (r == 0.0) {
        res.worst_channel = metric.matrix();
        res.attained_distance = 0.0;
        res.note = "zero radius: matched optimum at the center";
    } else {
        for (double& e : eps.data()) e = -e;
        detail::SphereSolution inner = detail::kl_sphere_minimize(q, metric, eps, r);
        res.worst_channel = inner.w;
        res.attained_distance =
            inner.degenerate ? 0.0 : kl_cond(q, DiscreteChannel(inner.w), metric);
        if (inner.degenerate) res.note = "degenerate score; constraint inactive";
    }
    try {
        res.feasibility_radius = feasibility_radius_e0(q, metric, res.params, rho);
    } catch (const DegenerateMetric&) {
        res.feasibility_radius = kInf;
    }
    return res;
}

enum class WorstCaseSolver { chi2, exact_kl };

struct ExponentAssembly {
    double value = 0.0;
    double rho_star = 0.0;
    WorstCaseResult e0_at_optimum;
};

// Random-coding exponent at rate R: max over rho in [0,1] of worst-E0 - rho R.
inline ExponentAssembly worst_exponent(const InputDistribution& q, const BallSpec& ball,
                                       double rate, Ensemble ensemble, WorstCaseSolver solver,
                                       double tol = 1e-9) {
    if (!(rate >= 0.0)) throw Error("rate must be nonnegative");
    auto e0 = [&](double rho) {
        WorstCaseResult w = (solver == WorstCaseSolver::chi2)
                                ? worst_e0_chi2(q, ball, rho, ensemble, tol)
                                : worst_e0_exact_kl(q, ball, rho, ensemble, tol);
        return w.value - rho * rate;
    };
    OptimizerReport rep = maximize_unimodal_1d(e0, 0.0, 1.0, 1e-6);
    ExponentAssembly out;
    out.rho_star = rep.point[0];
    out.value = rep.value;
    out.e0_at_optimum = (solver == WorstCaseSolver::chi2)
                            ? worst_e0_chi2(q, ball, out.rho_star, ensemble, tol)
                            : worst_e0_exact_kl(q, ball, out.rho_star, ensemble, tol);
    return out;
}

// Closed-form lower bound: the s=1, a=0 slice of the chi-squared worst rate.
inline double lower_bound_rate(const InputDistribution& q, const DiscreteChannel& metric,
                               double r) {
    MetricParams mp;
    mp.s = 1.0;
    return i_ml(mp, q, metric) - std::sqrt(2.0 * r * rate_dispersion(mp, q, metric));
}

}  // namespace mismatch
