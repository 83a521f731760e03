#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "mismatch/numerics.hpp"
#include "mismatch/types.hpp"

// Gaussian codebooks with nearest-neighbor decoding: closed-form worst-case
// rates and exponent ingredients over the mismatch ball, the additive-noise
// specialization, and the worst-case noise densities (chi-squared closed form
// and the piecewise relative-entropy extremal).

namespace mismatch {

// Input power P, metric noise variance and mean.  snr() is the estimated
// signal-to-noise ratio P / sigma_hat2 that every closed form runs on.
struct GaussianSetup {
    double power = 1.0;
    double sigma_hat2 = 1.0;
    double mu_hat = 0.0;

    GaussianSetup(double p, double s2, double m = 0.0)
        : power(p), sigma_hat2(s2), mu_hat(m) {
        if (!(power > 0.0)) throw Error("input power must be positive");
        if (!(sigma_hat2 > 0.0)) throw Error("metric noise variance must be positive");
    }

    double snr() const { return power / sigma_hat2; }
};

// Rate part at tilt s, in nats.
inline double gaussian_rate_ml(const GaussianSetup& gs, double s) {
    if (!(s > 0.0)) throw Error("tilt s must be positive");
    const double g = gs.snr();
    return 0.5 * std::log1p(s * g) + g * (1.0 - s) / (2.0 * (1.0 / s + g));
}

// Dispersion at tilt s; scales the sqrt(2 r V) penalty.
inline double gaussian_rate_dispersion(const GaussianSetup& gs, double s) {
    if (!(s > 0.0)) throw Error("tilt s must be positive");
    const double g = gs.snr();
    const double d = 1.0 / s + g;
    return g * (2.0 + s * s * g) / (2.0 * d * d);
}

struct GaussianRate {
    double value = -kInf;
    double s_star = kNaN;
    OptimizerReport report;
};

// sup_s { rate part - sqrt(2 r V) }.
inline GaussianRate gmi_worst_gaussian(const GaussianSetup& gs, double r) {
    if (!(r >= 0.0)) throw Error("ball radius must be nonnegative");
    auto f = [&](double s) {
        if (s <= 0.0) return -kInf;
        return gaussian_rate_ml(gs, s) -
               std::sqrt(2.0 * r * gaussian_rate_dispersion(gs, s));
    };
    GaussianRate out;
    out.report = maximize_on_ray(f);
    out.value = out.report.value;
    out.s_star = out.report.point[0];
    return out;
}

// First-order expansion about the matched point: the s = 1 slice of the
// worst-case objective.  A lower bound on gmi_worst_gaussian.
inline double gmi_worst_gaussian_approx(const GaussianSetup& gs, double r) {
    if (!(r >= 0.0)) throw Error("ball radius must be nonnegative");
    const double g = gs.snr();
    return 0.5 * std::log1p(g) - std::sqrt(r * g * (2.0 + g)) / (1.0 + g);
}

// Power-cost tilt factor g = 1 - 2 lambda P; the cost-constrained closed
// forms are valid on g > 0, i.e. lambda < 1/(2P).
inline double gaussian_cost_g(const GaussianSetup& gs, double lambda) {
    return 1.0 - 2.0 * lambda * gs.power;
}

// Rate part with a power cost at (s, lambda).
inline double cost_rate_ml(const GaussianSetup& gs, double s, double lambda) {
    if (!(s > 0.0)) throw Error("tilt s must be positive");
    const double g = gs.snr();
    const double cg = gaussian_cost_g(gs, lambda);
    if (!(cg > 0.0)) throw OutsideValidity("cost tilt out of range: 1 - 2 lambda P <= 0");
    const double d = g + cg / s;
    return 0.5 * std::log(cg + s * g) + (g * (1.0 - s) + cg * (1.0 - cg) / s) / (2.0 * d);
}

inline double cost_rate_dispersion(const GaussianSetup& gs, double s, double lambda) {
    if (!(s > 0.0)) throw Error("tilt s must be positive");
    const double g = gs.snr();
    const double cg = gaussian_cost_g(gs, lambda);
    if (!(cg > 0.0)) throw OutsideValidity("cost tilt out of range: 1 - 2 lambda P <= 0");
    const double d = cg / s + g;
    return g * (2.0 * cg * cg + s * s * g) / (2.0 * d * d);
}

struct GaussianCostRate {
    double value = -kInf;
    double s_star = kNaN;
    double lambda_star = kNaN;
    OptimizerReport report;
};

// sup over (s, lambda >= 0) of the cost-constrained objective.  The lambda=0
// slice is exactly the GMI objective, so the result dominates it.
inline GaussianCostRate cost_worst_gaussian(const GaussianSetup& gs, double r) {
    if (!(r >= 0.0)) throw Error("ball radius must be nonnegative");
    const double lam_hi = (1.0 - 1e-9) / (2.0 * gs.power);
    auto f = [&](const Vec& v) {
        const double s = v[0], lam = v[1];
        if (s <= 0.0 || lam < 0.0 || gaussian_cost_g(gs, lam) <= 0.0) return -kInf;
        return cost_rate_ml(gs, s, lam) -
               std::sqrt(2.0 * r * cost_rate_dispersion(gs, s, lam));
    };
    GaussianRate base = gmi_worst_gaussian(gs, r);
    Vec start = {base.s_star, 0.0};
    Vec lo = {1e-8, 0.0}, hi = {1e6, lam_hi};
    GaussianCostRate out;
    out.report = maximize_coordinate_ascent(f, start, lo, hi, 1e-10);
    if (out.report.value < base.value) {
        // the 2-D search never loses to its own slice; keep the slice if the
        // ascent stalled a hair below it
        out.value = base.value;
        out.s_star = base.s_star;
        out.lambda_star = 0.0;
        return out;
    }
    out.value = out.report.value;
    out.s_star = out.report.point[0];
    out.lambda_star = out.report.point[1];
    return out;
}

// Exponent part at (s, rho).  The argument of the second log goes
// nonpositive exactly where the defining integral diverges.
inline double e0_ml_gaussian(const GaussianSetup& gs, double s, double rho) {
    if (!(s > 0.0)) throw Error("tilt s must be positive");
    if (!(rho >= 0.0 && rho <= 1.0)) throw Error("rho must lie in [0, 1]");
    const double g = gs.snr();
    const double arg = 1.0 + rho * g * (1.0 - s - rho * s) / (g + 1.0 / s);
    if (!(arg > 0.0)) throw OutsideValidity("exponent part undefined: log argument nonpositive");
    return 0.5 * rho * std::log1p(g * s) + 0.5 * std::log(arg);
}

// Exponent dispersion V = V1 - V2 at (s, rho).  Each piece carries its own
// validity region; both follow the convergence of the underlying second
// moments.
inline double v_gaussian(const GaussianSetup& gs, double s, double rho) {
    if (!(s > 0.0)) throw Error("tilt s must be positive");
    if (!(rho >= 0.0 && rho <= 1.0)) throw Error("rho must lie in [0, 1]");
    const double g = gs.snr();
    const double d1 = g + 1.0 / s;
    const double d2 = d1 + 2.0 * rho * g * (1.0 - s - 2.0 * rho * s);
    if (!(d2 > 0.0)) throw OutsideValidity("second moment undefined: squared-ratio integral diverges");
    const double v1 = (d1 + rho * g * (1.0 - s - rho * s)) / (std::sqrt(d1) * std::sqrt(d2));

    const double d0 = (1.0 - rho * s) * d1 + rho;
    const double t = rho * (1.0 - rho * s) * g;
    if (!(d0 > 0.0) || !(d0 + 2.0 * t > 0.0))
        throw OutsideValidity("second moment undefined: conditional-mean integral diverges");
    const double v2 = (d0 + t) / (std::sqrt(d0) * std::sqrt(d0 + 2.0 * t));
    return v1 - v2;
}

// Additive-noise worst case: knowing the channel is additive shrinks the
// penalty to a variance inflation of 1 + 2 sqrt(r).
inline double gauss_additive_worst(const GaussianSetup& gs, double r) {
    if (!(r >= 0.0)) throw Error("ball radius must be nonnegative");
    return 0.5 * std::log1p(gs.snr() / (1.0 + 2.0 * std::sqrt(r)));
}

// A fixed auxiliary cost removes the mean dependence and lands on the same
// value; kept as its own entry point so both call sites read naturally.
inline double fixed_cost_worst(const GaussianSetup& gs, double r) {
    return gauss_additive_worst(gs, r);
}

// Worst-case noise density over the ball, as an evaluible object.  lo/hi
// bound the truncation window the reported integrals used; moments are
// central about the metric mean.  z0, lambda, rho describe the modified
// region of the piecewise extremal and stay NaN for the chi-squared form.
// normalization_residual reports how far the modified region alone is from
// unit mass (total mass is the binding constraint).
struct NoiseDensity {
    std::function<double(double)> pdf;
    double lo = -kInf;
    double hi = kInf;
    double mass = kNaN;
    double second_moment = kNaN;
    double kl_from_center = kNaN;
    double z0 = kNaN;
    double lambda = kNaN;
    double rho = kNaN;
    double normalization_residual = kNaN;
    bool nonnegative = true;
    bool chi2_fallback = false;
    std::string note;
};

namespace detail {

inline double gauss_pdf(double z, double var) {
    return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * kPi * var);
}

}  // namespace detail

// Chi-squared-ball worst noise: the center density scaled by
// 1 + sqrt(r) (z^2 - sigma^2)/sigma^2.  Nonnegative everywhere iff r <= 1.
inline NoiseDensity worst_noise_chi2(const GaussianSetup& gs, double r) {
    if (!(r >= 0.0)) throw Error("ball radius must be nonnegative");
    const double s2 = gs.sigma_hat2, mu = gs.mu_hat;
    const double sr = std::sqrt(r);
    NoiseDensity out;
    const double win = 10.0 * std::max(std::sqrt(s2), std::sqrt(gs.power + s2));
    out.lo = mu - win;
    out.hi = mu + win;
    out.pdf = [s2, mu, sr](double z) {
        const double u = z - mu;
        return detail::gauss_pdf(u, s2) * (1.0 + sr * (u * u - s2) / s2);
    };
    out.second_moment = s2 * (1.0 + 2.0 * sr);
    out.nonnegative = r <= 1.0;
    out.mass = integrate_1d([&](double z) { return out.pdf(z); }, out.lo, out.hi, 1e-10).value;
    if (out.nonnegative) {
        out.kl_from_center = integrate_1d(
            [&](double z) {
                const double u = z - mu;
                const double w = detail::gauss_pdf(u, s2);
                const double p = out.pdf(z);
                if (w == 0.0 || p <= 0.0) return 0.0;
                return w * std::log(w / p);
            },
            out.lo, out.hi, 1e-10).value;
    } else {
        out.note = "density negative near the origin: r exceeds the nonnegativity bound 1";
    }
    return out;
}

namespace detail {

// One member of the piecewise family at a fixed edge z0: center density
// outside [-z0, z0], center times m / (lambda - z^2) inside, with m chosen
// so total mass is one.  All integrals exploit symmetry about the mean.
struct BrokenExtremal {
    double sigma2 = 1.0;
    double z0 = 0.0;
    double lambda = 0.0;   // > z0^2, so the inside factor stays positive
    double inside_scale = 0.0;  // m = (inside center mass) / I1
    double window = 0.0;

    double center_mass_inside() const {
        return 2.0 * integrate_1d([&](double z) { return gauss_pdf(z, sigma2); },
                                  0.0, z0, 1e-12).value;
    }
    double weighted_inside(double lam) const {
        return 2.0 * integrate_1d(
                   [&](double z) { return gauss_pdf(z, sigma2) / (lam - z * z); },
                   0.0, z0, 1e-12).value;
    }
    // divergence of the center from the family member, as a function of the
    // inside pole position; decreasing in lam
    double kl_at(double lam) const {
        const double m0 = center_mass_inside();
        const double i1 = weighted_inside(lam);
        const double logterm = 2.0 * integrate_1d(
                                   [&](double z) {
                                       return gauss_pdf(z, sigma2) * std::log(lam - z * z);
                                   },
                                   0.0, z0, 1e-12).value;
        return logterm - m0 * std::log(m0 / i1);
    }
    double second_moment() const {
        const double outside = 2.0 * integrate_1d(
                                   [&](double z) { return z * z * gauss_pdf(z, sigma2); },
                                   z0, window, 1e-12).value;
        const double inside = 2.0 * integrate_1d(
                                  [&](double z) {
                                      return z * z * gauss_pdf(z, sigma2) /
                                             (lambda - z * z);
                                  },
                                  0.0, z0, 1e-12).value;
        return outside + inside_scale * inside;
    }
};

// Solve the pole position so the divergence from the center hits r; the
// bracket is logarithmic in lambda - z0^2 because the divergence blows up at
// the left edge and decays toward zero on the right.
inline BrokenExtremal solve_broken_extremal(double sigma2, double window, double z0, double r) {
    BrokenExtremal be;
    be.sigma2 = sigma2;
    be.z0 = z0;
    be.window = window;
    const double t_lo = std::log(1e-9 * std::max(1.0, z0 * z0));
    const double t_hi = std::log(1e7 * std::max(1.0, sigma2));
    auto f = [&](double t) { return be.kl_at(z0 * z0 + std::exp(t)) - r; };
    const double t = find_root(f, t_lo, t_hi, 1e-12);
    be.lambda = z0 * z0 + std::exp(t);
    be.inside_scale = be.center_mass_inside() / be.weighted_inside(be.lambda);
    return be;
}

}  // namespace detail

// Relative-entropy-ball worst noise: piecewise density with free edges at
// +-z0, chosen to maximize the second moment subject to divergence r from
// the center.  Falls back to the chi-squared density (flagged) when no edge
// admits a solution.
inline NoiseDensity worst_noise_kl(const GaussianSetup& gs, double r) {
    if (!(r >= 0.0)) throw Error("ball radius must be nonnegative");
    const double s2 = gs.sigma_hat2, mu = gs.mu_hat;
    const double sd = std::sqrt(s2);
    const double win = 10.0 * std::max(sd, std::sqrt(gs.power + s2));

    if (r == 0.0) {
        NoiseDensity out;
        out.lo = mu - win;
        out.hi = mu + win;
        out.pdf = [s2, mu](double z) { return detail::gauss_pdf(z - mu, s2); };
        out.mass = 1.0;
        out.second_moment = s2;
        out.kl_from_center = 0.0;
        out.note = "zero radius: density equals the center";
        return out;
    }

    auto moment_at = [&](double z0) -> double {
        try {
            return detail::solve_broken_extremal(s2, win, z0, r).second_moment();
        } catch (const Error&) {
            return -kInf;
        }
    };

    // geometric scan for the best edge, then a local refinement
    const int n_grid = 33;
    const double z_lo = 0.1 * sd, z_hi = 6.0 * sd;
    double best_z = kNaN, best_m = -kInf;
    for (int i = 0; i < n_grid; ++i) {
        const double z = z_lo * std::pow(z_hi / z_lo, double(i) / (n_grid - 1));
        const double m = moment_at(z);
        if (m > best_m) {
            best_m = m;
            best_z = z;
        }
    }

    if (!(best_m > -kInf)) {
        NoiseDensity out = worst_noise_chi2(gs, r);
        out.chi2_fallback = true;
        out.note = "no piecewise extremal found on the edge grid; chi-squared density reported";
        return out;
    }

    const double ratio = std::pow(z_hi / z_lo, 1.0 / (n_grid - 1));
    const double bl = std::max(z_lo, best_z / ratio);
    const double bh = std::min(z_hi, best_z * ratio);
    OptimizerReport ref = maximize_unimodal_1d(moment_at, bl, bh, 1e-7 * sd);
    if (ref.value > best_m) best_z = ref.point[0];

    detail::BrokenExtremal be = detail::solve_broken_extremal(s2, win, best_z, r);

    NoiseDensity out;
    out.lo = mu - win;
    out.hi = mu + win;
    out.z0 = best_z;
    out.lambda = be.lambda;
    out.rho = -be.inside_scale;  // multiplier of the stationarity form center * rho/(z^2 - lambda)
    const double scale = be.inside_scale, lam = be.lambda, z0 = best_z;
    out.pdf = [s2, mu, scale, lam, z0](double z) {
        const double u = z - mu;
        const double w = detail::gauss_pdf(u, s2);
        if (std::abs(u) >= z0) return w;
        return w * scale / (lam - u * u);
    };
    out.normalization_residual = scale * be.weighted_inside(lam) - 1.0;
    out.second_moment = be.second_moment();
    out.mass = 1.0 - be.center_mass_inside() + scale * be.weighted_inside(lam);
    out.kl_from_center = be.kl_at(lam);
    return out;
}

}  // namespace mismatch
