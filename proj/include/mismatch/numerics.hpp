#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <utility>
#include <vector>

#include "mismatch/types.hpp"

// Small numeric toolbox shared by the solvers: derivative-free 1-D and
// coordinate-wise maximization, a bracketing root finder, and adaptive
// Gauss-Kronrod quadrature.  All routines are deterministic; same inputs,
// same outputs, no RNG anywhere.

namespace mismatch {

struct OptimizerReport {
    Vec point;                    // argmax found
    double value = -kInf;         // objective at point
    int iterations = 0;           // function evaluations (1-D) or sweeps (ascent)
    bool converged = false;       // bracket/improvement tolerance reached
    double exit_width = kInf;     // bracket width (1-D) or last sweep gain
    bool unimodality_suspect = false;  // a tracked sample beat the final bracket
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
};

// Thrown by callers that insist on convergence; carries the best iterate so
// the caller can still inspect or resume from it.
struct OptimizerDidNotConverge : Error {
    OptimizerReport best;
    OptimizerDidNotConverge(const std::string& what, OptimizerReport b)
        : Error(what), best(std::move(b)) {}
};

namespace detail {

inline constexpr double kGolden = 0.6180339887498949;  // (sqrt(5)-1)/2

}  // namespace detail

// Golden-section search for a maximum of f on [lo, hi].  Every sample is
// tracked; if the final bracket midpoint is worse than the best sample seen
// (beyond 1e-9), the best sample wins and the report flags the bracket as
// suspect instead of silently returning a local ridge.
template <class F>
OptimizerReport maximize_unimodal_1d(F&& f, double lo, double hi, double xtol = 1e-9) {
    OptimizerReport rep;
    if (!(hi >= lo)) std::swap(lo, hi);

    double best_x = lo, best_f = -kInf;
    int evals = 0;
    auto eval = [&](double x) {
        double v = f(x);
        ++evals;
        if (v > best_f) {
            best_f = v;
            best_x = x;
        }
        return v;
    };

    eval(lo);
    eval(hi);

    double a = lo, b = hi;
    double x1 = b - detail::kGolden * (b - a);
    double x2 = a + detail::kGolden * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    while (b - a > xtol && evals < 400) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + detail::kGolden * (b - a);
            f2 = eval(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - detail::kGolden * (b - a);
            f1 = eval(x1);
        }
    }

    double xm = 0.5 * (a + b);
    double fm = eval(xm);
    rep.iterations = evals;
    rep.exit_width = b - a;
    rep.converged = (b - a) <= xtol;
    if (fm < best_f - 1e-9) {
        rep.unimodality_suspect = true;
        rep.point = {best_x};
        rep.value = best_f;
    } else {
        // fm and best_f agree to 1e-9; prefer the tracked best, it can only
        // be tighter.
        rep.point = {best_x};
        rep.value = best_f;
    }
    return rep;
}

// Maximize f on the ray [0, inf): start from [0, hi0] and keep doubling the
// upper edge while f still increases there, then golden-section the bracket.
template <class F>
OptimizerReport maximize_on_ray(F&& f, double hi0 = 32.0, double xtol = 1e-9) {
    double hi = hi0;
    int expansions = 0;
    while (expansions < 40) {
        double probe = hi * (1.0 - 1e-4);
        if (!(f(hi) > f(probe))) break;  // derivative at the edge nonpositive
        hi *= 2.0;
        ++expansions;
    }
    return maximize_unimodal_1d(f, 0.0, hi, xtol);
}

// Cyclic coordinate ascent inside box bounds.  Each coordinate keeps its own
// trust width; a line search that lands on an interior bracket edge widens
// that coordinate and retries, so the effective bracket is expanding.  Stops
// when a full sweep improves the objective by less than value_tol.
template <class F>
OptimizerReport maximize_coordinate_ascent(F&& f, Vec start, const Vec& lo, const Vec& hi,
                                           double value_tol = 1e-8, int max_sweeps = 400,
                                           double line_xtol = 1e-10) {
    const std::size_t n = start.size();
    OptimizerReport rep;
    rep.point = std::move(start);
    rep.value = f(rep.point);

    Vec width(n, 0.5);
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double sweep_start = rep.value;
        for (std::size_t i = 0; i < n; ++i) {
            if (lo[i] == hi[i]) continue;
            auto line = [&](double xi) {
                Vec p = rep.point;
                p[i] = xi;
                return f(p);
            };
            for (int attempt = 0; attempt < 8; ++attempt) {
                double a = std::max(lo[i], rep.point[i] - width[i]);
                double b = std::min(hi[i], rep.point[i] + width[i]);
                if (!(b > a)) break;
                OptimizerReport lr = maximize_unimodal_1d(line, a, b, line_xtol);
                double xi = lr.point[0];
                if (lr.value > rep.value) {
                    rep.point[i] = xi;
                    rep.value = lr.value;
                }
                bool at_lo_edge = (xi - a) < 16 * line_xtol && a > lo[i];
                bool at_hi_edge = (b - xi) < 16 * line_xtol && b < hi[i];
                if (at_lo_edge || at_hi_edge) {
                    width[i] *= 4.0;  // maximum may sit outside, expand and retry
                    continue;
                }
                break;
            }
        }
        rep.exit_width = rep.value - sweep_start;
        if (rep.exit_width <= value_tol) {
            rep.converged = true;
            ++sweep;
            break;
        }
    }
    rep.iterations = sweep;
    return rep;
}

// Bracketing root finder: Illinois-weighted secant when the step stays inside
// the bracket, bisection otherwise.  Halving the stale endpoint's weight after
// two same-side moves forces the secant across the root, so a steep endpoint
// cannot pin one side of the bracket for the whole iteration budget.  Requires
// a sign change on [lo, hi]; endpoints already within ftol count as roots.
template <class F>
double find_root(F&& f, double lo, double hi, double ftol = 1e-12, double xtol = 1e-15) {
    double fa = f(lo), fb = f(hi);
    if (std::abs(fa) <= ftol) return lo;
    if (std::abs(fb) <= ftol) return hi;
    if ((fa > 0.0) == (fb > 0.0))
        throw NoSignChange("find_root: no sign change on bracket");

    double a = lo, b = hi;
    double ga = fa, gb = fb;  // secant weights, down-scaled on the stale side
    int last = 0;
    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (a + b);
        double c = mid;
        if (gb != ga) {
            double sec = (a * gb - b * ga) / (gb - ga);
            // accept the secant point only if it is strictly interior
            if (sec > std::min(a, b) && sec < std::max(a, b)) c = sec;
        }
        // keep a minimum step so roundoff cannot stall the bracket
        double min_step = 0.25 * xtol * std::max(1.0, std::abs(c));
        if (std::abs(c - a) < min_step || std::abs(c - b) < min_step) c = mid;

        double fc = f(c);
        if (std::abs(fc) <= ftol) return c;
        if ((fc > 0.0) == (fa > 0.0)) {
            a = c;
            fa = ga = fc;
            if (last == -1) gb *= 0.5;
            last = -1;
        } else {
            b = c;
            fb = gb = fc;
            if (last == +1) ga *= 0.5;
            last = +1;
        }
        if (std::abs(b - a) <= xtol * std::max(1.0, std::abs(b))) break;
    }
    return std::abs(fa) < std::abs(fb) ? a : b;
}

namespace detail {

// Gauss-Kronrod 7-15 nodes on [-1, 1]; the Gauss points are the odd-index
// Kronrod abscissae.
inline constexpr double kKronrodX[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
inline constexpr double kKronrodW[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679, 0.1903505780647854, 0.2044329400752989, 0.2094821410847278};
inline constexpr double kGaussW[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189, 0.4179591836734694};

template <class F>
inline void gk15(F& f, double a, double b, double& value, double& err) {
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    double fc = f(c);
    double kron = kKronrodW[7] * fc;
    double gauss = kGaussW[3] * fc;
    for (int i = 0; i < 7; ++i) {
        double fl = f(c - h * kKronrodX[i]);
        double fr = f(c + h * kKronrodX[i]);
        kron += kKronrodW[i] * (fl + fr);
        if (i % 2 == 1) gauss += kGaussW[i / 2] * (fl + fr);
    }
    value = kron * h;
    err = std::abs((kron - gauss) * h);
}

struct Segment {
    double a, b, value, err;
    bool operator<(const Segment& o) const { return err < o.err; }
};

}  // namespace detail

// Adaptive quadrature of f over [lo, hi]: split the worst segment until the
// summed Kronrod error estimate drops under tol (relative to max(1, |I|)) or
// the segment budget runs out.  Never throws; a budget exhaustion comes back
// as converged = false with the best estimate so far.
template <class F>
QuadratureResult integrate_1d(F&& f, double lo, double hi, double tol = 1e-8,
                              int max_segments = 2000) {
    QuadratureResult res;
    if (lo == hi) {
        res.converged = true;
        return res;
    }
    double sign = 1.0;
    if (lo > hi) {
        std::swap(lo, hi);
        sign = -1.0;
    }

    std::priority_queue<detail::Segment> segs;
    detail::Segment s0{lo, hi, 0.0, 0.0};
    detail::gk15(f, lo, hi, s0.value, s0.err);
    segs.push(s0);
    double total_v = s0.value, total_e = s0.err;

    int n = 1;
    while (total_e > tol * std::max(1.0, std::abs(total_v)) && n < max_segments) {
        detail::Segment worst = segs.top();
        segs.pop();
        total_v -= worst.value;
        total_e -= worst.err;
        double mid = 0.5 * (worst.a + worst.b);
        detail::Segment l{worst.a, mid, 0.0, 0.0}, r{mid, worst.b, 0.0, 0.0};
        detail::gk15(f, l.a, l.b, l.value, l.err);
        detail::gk15(f, r.a, r.b, r.value, r.err);
        segs.push(l);
        segs.push(r);
        total_v += l.value + r.value;
        total_e += l.err + r.err;
        ++n;
    }

    res.value = sign * total_v;
    res.error = total_e;
    res.converged = total_e <= tol * std::max(1.0, std::abs(total_v));
    return res;
}

// Centered product weight N(x; var_x) N(u; var_u) for the 2-D integrals.
// `width` is the truncation half-width in weight standard deviations; the
// default covers payloads dominated by the weight, but payloads that grow
// against it (slowly decaying products) need a wider box.  With
// `payload_is_log` the callable returns log g(x,u) and the weight log is
// added before a single exp, which keeps huge payload/weight factors from
// overflowing individually.
struct GaussianWeight2D {
    double var_x = 1.0;
    double var_u = 1.0;
    double width = 10.0;
    bool payload_is_log = false;
};

// integral of N(x; var_x) N(u; var_u) g(x,u) over the truncated box.  The
// inner (u) pass runs at a small fraction of the requested tolerance so the
// outer error estimate dominates the report.
template <typename F>
QuadratureResult integrate_2d_gaussian_weighted(F&& g, const GaussianWeight2D& p,
                                                double tol = 1e-8) {
    const double sx = std::sqrt(p.var_x), su = std::sqrt(p.var_u);
    const double lx = p.width * sx, lu = p.width * su;
    const double log_norm = -std::log(2.0 * kPi * sx * su);
    const double inner_tol = std::max(tol * 1e-3, 1e-14);

    bool inner_ok = true;
    double inner_err = 0.0;
    auto outer = [&](double x) {
        const double lwx = -0.5 * x * x / p.var_x;
        auto inner = [&](double u) {
            const double lw = log_norm + lwx - 0.5 * u * u / p.var_u;
            if (p.payload_is_log) return std::exp(lw + g(x, u));
            return std::exp(lw) * g(x, u);
        };
        QuadratureResult slice = integrate_1d(inner, -lu, lu, inner_tol);
        inner_ok = inner_ok && slice.converged;
        inner_err = std::max(inner_err, slice.error);
        return slice.value;
    };
    QuadratureResult res = integrate_1d(outer, -lx, lx, tol);
    res.error += 2.0 * lx * inner_err;
    res.converged = res.converged && inner_ok;
    return res;
}

}  // namespace mismatch
