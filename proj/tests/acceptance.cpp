// Acceptance gate: eleven numbered criteria, one [PASS]/[FAIL] line each.
// Each criterion accumulates subclause diagnostics and a wall-clock reading;
// the process exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <mismatch/gaussian.hpp>
#include <mismatch/structured.hpp>
#include <mismatch/worstcase.hpp>

#include "oracle_helpers.hpp"

using namespace mismatch;

namespace {

struct Criterion {
    int number;
    std::string title;
    bool ok = true;
    std::vector<std::string> notes;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    Criterion(int n, std::string t) : number(n), title(std::move(t)) {}

    void check(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            notes.push_back(what);
        }
    }
    void check_close(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            ok = false;
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s: got %.12g, want %.12g +- %.1e", what.c_str(),
                          got, want, tol);
            notes.push_back(buf);
        }
    }
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    void budget(double seconds) {
        double t = elapsed();
        if (t >= seconds) {
            ok = false;
            char buf[96];
            std::snprintf(buf, sizeof(buf), "runtime %.1fs exceeds the %.0fs budget", t,
                          seconds);
            notes.push_back(buf);
        }
    }
    bool finish() const {
        std::printf("[%s] %2d. %s (%.1fs)\n", ok ? "PASS" : "FAIL", number, title.c_str(),
                    elapsed());
        for (const std::string& n : notes) std::printf("        - %s\n", n.c_str());
        return ok;
    }
};

const InputDistribution kTernaryQ(Vec{0.3, 0.3, 0.4});
const DiscreteChannel kTernaryMetric = DiscreteChannel::from_rows(
    {{0.85, 0.05, 0.10}, {0.15, 0.825, 0.025}, {0.025, 0.10, 0.875}});
const DiscreteChannel kTernaryExpMetric = DiscreteChannel::from_rows(
    {{0.85, 0.05, 0.10}, {0.025, 0.945, 0.03}, {0.025, 0.10, 0.875}});

BallSpec chi_ball(const DiscreteChannel& c, double r) {
    return BallSpec(c, r, BallKind::chi_squared);
}
BallSpec kl_ball(const DiscreteChannel& c, double r) {
    return BallSpec(c, r, BallKind::relative_entropy);
}

// 1. zero-radius collapse of both solvers onto the matched mutual information
bool criterion_1() {
    Criterion c(1, "zero-radius collapse onto the matched mutual information");
    double mi = matched_mi(kTernaryQ, kTernaryMetric);
    WorstCaseResult chi = worst_rate_chi2(kTernaryQ, chi_ball(kTernaryMetric, 0.0),
                                          Ensemble::iid);
    WorstCaseResult kl = worst_rate_exact_kl(kTernaryQ, kl_ball(kTernaryMetric, 1e-8),
                                             Ensemble::iid);
    c.check_close(chi.value, mi, 1e-3, "chi2 value vs I_MI");
    c.check_close(kl.value, mi, 1e-3, "exact-kl value vs I_MI");
    c.check_close(chi.value, kl.value, 1e-3, "chi2 vs exact-kl");
    c.check_close(chi.params.s, 1.0, 1e-3, "chi2 optimal s");
    c.check_close(kl.params.s, 1.0, 1e-3, "exact-kl optimal s");
    c.budget(5.0);
    return c.finish();
}

// 2. chi-squared expansion vs exact solver across the radius grid, GMI and LM
bool criterion_2() {
    Criterion c(2, "expansion within 0.01 nats of the exact solver on the radius grid");
    const Vec grid{0.001, 0.002, 0.005, 0.01, 0.02, 0.05};
    for (Ensemble ens : {Ensemble::iid, Ensemble::constant_composition}) {
        const char* name = ens == Ensemble::iid ? "gmi" : "lm";
        double prev_chi = kInf, prev_kl = kInf;
        for (double r : grid) {
            double chi = worst_rate_chi2(kTernaryQ, chi_ball(kTernaryMetric, r), ens).value;
            double kl = worst_rate_exact_kl(kTernaryQ, kl_ball(kTernaryMetric, r), ens).value;
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%s gap at r=%g", name, r);
            c.check_close(chi, kl, 0.01, buf);
            std::snprintf(buf, sizeof(buf), "%s monotone at r=%g", name, r);
            c.check(chi <= prev_chi + 1e-9 && kl <= prev_kl + 1e-9, buf);
            prev_chi = chi;
            prev_kl = kl;
        }
    }
    c.budget(60.0);
    return c.finish();
}

// 3. the value drop divided by sqrt(r) holds a fixed band near zero
bool criterion_3() {
    Criterion c(3, "sqrt(r) scaling of the penalty near zero radius");
    double v0 = worst_rate_chi2(kTernaryQ, chi_ball(kTernaryMetric, 0.0), Ensemble::iid).value;
    auto slope = [&](double r) {
        double v = worst_rate_chi2(kTernaryQ, chi_ball(kTernaryMetric, r), Ensemble::iid).value;
        return (v0 - v) / std::sqrt(r);
    };
    double anchor = slope(1e-4);
    for (double r : {1e-5, 3e-5, 1e-4, 3e-4, 1e-3}) {
        double s = slope(r);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "slope %.6g at r=%g leaves +-20%% of %.6g", s, r,
                      anchor);
        c.check(std::abs(s - anchor) <= 0.2 * anchor, buf);
    }
    return c.finish();
}

// 4. feasibility radii: ternary optimum above 2.0, BSC(0.1) exactly 4.5
bool criterion_4() {
    Criterion c(4, "feasibility radius of the optimal parameters");
    WorstCaseResult res = worst_rate_chi2(kTernaryQ, chi_ball(kTernaryMetric, 0.01),
                                          Ensemble::iid);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "ternary feasibility %.4f not above 2.0",
                  res.feasibility_radius);
    c.check(res.feasibility_radius > 2.0, buf);

    InputDistribution u = InputDistribution::uniform(2);
    DiscreteChannel bsc = DiscreteChannel::from_rows({{0.9, 0.1}, {0.1, 0.9}});
    MetricParams mp;
    c.check_close(feasibility_radius(u, bsc, mp), 4.5, 1e-12, "BSC(0.1) closed form");
    return c.finish();
}

// 5. worst channels attain the closed-form penalties identically
bool criterion_5() {
    Criterion c(5, "penalty identities on random tuples at 10% of feasibility");
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t nx = 2 + trial % 4, ny = 2 + (trial / 4) % 4;
        InputDistribution q = oracle::random_input(rng, nx);
        DiscreteChannel metric = oracle::random_metric(rng, nx, ny);
        MetricParams mp;
        mp.s = 0.3 + 0.05 * trial;
        mp.a = oracle::random_zero_mean(rng, q, 0.5);

        double r = 0.1 * std::min(feasibility_radius(q, metric, mp), 10.0);
        DiscreteChannel w = worst_channel_chi2(q, metric, r, mp);
        double want = i_ml(mp, q, metric) -
                      std::sqrt(2.0 * r * rate_dispersion(mp, q, metric));
        char buf[64];
        std::snprintf(buf, sizeof(buf), "rate identity, trial %d", trial);
        c.check_close(rate_functional(mp, q, metric, w), want, 1e-12, buf);

        MetricParams ep = mp;
        ep.lambda = {0.15, -0.1};
        ep.lambda_bar = {-0.05, 0.1};
        ep.costs.assign(2, Vec());
        ep.costs[0] = oracle::random_zero_mean(rng, q, 0.7);
        ep.costs[1] = oracle::random_zero_mean(rng, q, 0.7);
        double rho = 0.15 + 0.016 * trial;
        double re = 0.1 * std::min(feasibility_radius_e0(q, metric, ep, rho), 10.0);
        DiscreteChannel we = worst_channel_e0_chi2(q, metric, re, ep, rho);
        double v = exponent_dispersion(ep, rho, q, metric);
        double ewant = e_ml(ep, rho, q, metric) - std::log1p(std::sqrt(2.0 * re * v));
        std::snprintf(buf, sizeof(buf), "exponent identity, trial %d", trial);
        c.check_close(e0_functional(ep, rho, q, metric, we), ewant, 1e-12, buf);
    }
    c.budget(10.0);
    return c.finish();
}

// 6. structured closed forms against the generic solver on expanded matrices
bool criterion_6() {
    Criterion c(6, "symmetric closed forms match the generic solver to 1e-10");
    std::mt19937 rng(2025);
    const double r = 0.01;
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 3 + trial % 4;
        SymmetricMetric m(oracle::random_simplex(rng, n));
        DiscreteChannel expanded = m.expand();
        InputDistribution q = InputDistribution::uniform(n);
        char buf[96];

        double closed = symmetric_worst_gmi(m, r).value;
        double generic = worst_rate_chi2(q, chi_ball(expanded, r), Ensemble::iid).value;
        std::snprintf(buf, sizeof(buf), "rate, trial %d (n=%zu)", trial, n);
        c.check_close(closed, generic, 1e-10, buf);

        for (double rho : {0.25, 0.7, 1.0}) {
            double ce = symmetric_worst_e0(m, rho, r).value;
            double ge = worst_e0_chi2(q, chi_ball(expanded, r), rho, Ensemble::iid).value;
            std::snprintf(buf, sizeof(buf), "e0 at rho=%.2f, trial %d", rho, trial);
            c.check_close(ce, ge, 1e-10, buf);
        }
    }
    return c.finish();
}

// 7. exponent orderings across the radius grid at rho = 0.7
bool criterion_7() {
    Criterion c(7, "exponent orderings and matched endpoint at rho = 0.7");
    const double rho = 0.7;
    const Vec grid{0.0, 0.002, 0.005, 0.01, 0.02};
    Vec chi_iid, chi_cost, kl_iid, kl_cost;
    for (double r : grid) {
        chi_iid.push_back(worst_e0_chi2(kTernaryQ, chi_ball(kTernaryExpMetric, r), rho,
                                        Ensemble::iid).value);
        chi_cost.push_back(worst_e0_chi2(kTernaryQ, chi_ball(kTernaryExpMetric, r), rho,
                                         Ensemble::cost_constrained).value);
        kl_iid.push_back(worst_e0_exact_kl(kTernaryQ, kl_ball(kTernaryExpMetric, r), rho,
                                           Ensemble::iid).value);
        kl_cost.push_back(worst_e0_exact_kl(kTernaryQ, kl_ball(kTernaryExpMetric, r), rho,
                                            Ensemble::cost_constrained).value);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "exact iid above cost at r=%g", grid[i]);
        c.check(kl_iid[i] <= kl_cost[i] + 1e-9, buf);
        std::snprintf(buf, sizeof(buf), "chi2 iid above cost at r=%g", grid[i]);
        c.check(chi_iid[i] <= chi_cost[i] + 1e-9, buf);
        if (i) {
            std::snprintf(buf, sizeof(buf), "monotonicity broken at r=%g", grid[i]);
            c.check(chi_iid[i] <= chi_iid[i - 1] + 1e-9 &&
                        chi_cost[i] <= chi_cost[i - 1] + 1e-9 &&
                        kl_iid[i] <= kl_iid[i - 1] + 1e-9 &&
                        kl_cost[i] <= kl_cost[i - 1] + 1e-9,
                    buf);
        }
    }
    double matched = oracle::matched_gallager_e0(kTernaryQ, kTernaryExpMetric, rho);
    c.check_close(chi_iid[0], matched, 1e-6, "chi2 iid matched endpoint");
    c.check_close(kl_iid[0], matched, 1e-6, "exact iid matched endpoint");
    c.check_close(chi_cost[0], kl_cost[0], 1e-6, "cost solvers agree at r=0");
    return c.finish();
}

// 8. every Gaussian display against its defining-integral oracle
bool criterion_8() {
    Criterion c(8, "Gaussian closed forms match defining integrals on the stated grid");
    const Vec svals{0.5, 1.0, 2.0}, gammas{0.5, 1.0, 2.0}, rhos{0.3, 0.8};
    char buf[128];
    for (double gamma : gammas) {
        GaussianSetup gs(gamma, 1.0);
        oracle::GaussOracle go;
        go.P = gamma;
        const double lam = 0.2 / gs.power;  // cost tilt with 1 - 2 lam P = 0.6
        for (double s : svals) {
            std::snprintf(buf, sizeof(buf), "rate part at s=%g gamma=%g", s, gamma);
            c.check_close(gaussian_rate_ml(gs, s), go.rate_ml(s, 0.0), 1e-6, buf);
            std::snprintf(buf, sizeof(buf), "rate dispersion at s=%g gamma=%g", s, gamma);
            c.check_close(gaussian_rate_dispersion(gs, s), go.rate_var(s, 0.0), 1e-6, buf);
            std::snprintf(buf, sizeof(buf), "cost rate part at s=%g gamma=%g", s, gamma);
            c.check_close(cost_rate_ml(gs, s, lam), go.rate_ml(s, lam), 1e-6, buf);
            std::snprintf(buf, sizeof(buf), "cost dispersion at s=%g gamma=%g", s, gamma);
            c.check_close(cost_rate_dispersion(gs, s, lam), go.rate_var(s, lam), 1e-6, buf);

            for (double rho : rhos) {
                // exponent part: the closed form must refuse exactly where the
                // defining integral diverges
                bool threw = false;
                double closed = kNaN;
                try {
                    closed = e0_ml_gaussian(gs, s, rho);
                } catch (const OutsideValidity&) {
                    threw = true;
                }
                bool diverges = go.moment_diverges(s, rho, 1.0);
                std::snprintf(buf, sizeof(buf),
                              "exponent part validity at s=%g gamma=%g rho=%g "
                              "(closed %s, integral %s)",
                              s, gamma, rho, threw ? "refuses" : "converges",
                              diverges ? "diverges" : "converges");
                c.check(threw == diverges, buf);
                if (!threw && !diverges) {
                    std::snprintf(buf, sizeof(buf), "exponent part at s=%g gamma=%g rho=%g",
                                  s, gamma, rho);
                    c.check_close(closed, go.e0_ml(s, rho), 1e-6, buf);
                }

                threw = false;
                try {
                    closed = v_gaussian(gs, s, rho);
                } catch (const OutsideValidity&) {
                    threw = true;
                }
                diverges = go.moment_diverges(s, rho, 2.0) || go.condmean_diverges(s, rho);
                std::snprintf(buf, sizeof(buf),
                              "exponent dispersion validity at s=%g gamma=%g rho=%g "
                              "(closed %s, integral %s)",
                              s, gamma, rho, threw ? "refuses" : "converges",
                              diverges ? "diverges" : "converges");
                c.check(threw == diverges, buf);
                if (!threw && !diverges) {
                    std::snprintf(buf, sizeof(buf),
                                  "exponent dispersion at s=%g gamma=%g rho=%g", s, gamma,
                                  rho);
                    c.check_close(closed, go.v(s, rho), 1e-6, buf);
                }
            }
        }
    }
    c.budget(30.0);
    return c.finish();
}

// 9. additive-noise identities
bool criterion_9() {
    Criterion c(9, "additive-noise identities");
    GaussianSetup gs(1.0, 1.0);
    c.check_close(gauss_additive_worst(gs, 0.01), 0.303060, 1e-6,
                  "additive worst rate at gamma=1, r=0.01");
    for (double r : {0.001, 0.01, 0.05})
        c.check_close(fixed_cost_worst(gs, r), gauss_additive_worst(gs, r), 1e-12,
                      "fixed-cost display");
    for (double r : {0.01, 0.05}) {
        NoiseDensity nd = worst_noise_chi2(gs, r);
        double want = 1.0 + 2.0 * std::sqrt(r);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "chi2 second moment at r=%g", r);
        c.check_close(oracle::density_second_moment(nd), want, 1e-8, buf);
        c.check_close(nd.second_moment, want, 1e-8, buf);
    }
    return c.finish();
}

// 10. the piecewise worst noise density at r = 0.05
bool criterion_10() {
    Criterion c(10, "piecewise worst noise density at r = 0.05");
    GaussianSetup gs(1.0, 1.0);
    NoiseDensity nd = worst_noise_kl(gs, 0.05);
    c.check(!nd.chi2_fallback, "no piecewise extremal found");
    c.check_close(oracle::density_mass(nd), 1.0, 1e-6, "mass");
    c.check_close(oracle::density_kl_from_center(nd, 1.0), 0.05, 1e-4,
                  "divergence from center");
    double in = nd.pdf(nd.z0 - 1e-9), out = nd.pdf(nd.z0 + 1e-9);
    c.check(std::isfinite(nd.z0) && std::abs(in - out) / out > 1e-6,
            "no jump detected at the edge");

    NoiseDensity cd = worst_noise_chi2(gs, 0.05);
    double excess_ratio = (nd.second_moment - 1.0) / (cd.second_moment - 1.0);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "second-moment excess ratio %.4f outside [0.8, 1.2]",
                  excess_ratio);
    c.check(excess_ratio >= 0.8 && excess_ratio <= 1.2, buf);

    double exact_rate = 0.5 * std::log1p(gs.power / nd.second_moment);
    double chi2_rate = 0.5 * std::log1p(gs.power / cd.second_moment);
    c.check_close(exact_rate, chi2_rate, 0.01, "rate from m2 vs chi2-based rate");
    c.budget(60.0);
    return c.finish();
}

// 11. exact solver against a dense grid on the 2x2 simplex
bool criterion_11() {
    Criterion c(11, "exact-kl worst rate matches the dense 2x2 grid search");
    std::mt19937 rng(2026);
    for (int trial = 0; trial < 5; ++trial) {
        InputDistribution q = oracle::random_input(rng, 2);
        DiscreteChannel metric = oracle::random_metric(rng, 2, 2);
        double r = 0.004 + 0.003 * trial;
        WorstCaseResult res = worst_rate_exact_kl(q, kl_ball(metric, r), Ensemble::iid);
        double grid = oracle::dense_kl_ball_min_2x2(res.params, q, metric, r, 1e-3);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "trial %d at r=%.3f", trial, r);
        c.check_close(grid, res.value, 2e-3, buf);
    }
    return c.finish();
}

}  // namespace

int main() {
    int failures = 0;
    failures += !criterion_1();
    failures += !criterion_2();
    failures += !criterion_3();
    failures += !criterion_4();
    failures += !criterion_5();
    failures += !criterion_6();
    failures += !criterion_7();
    failures += !criterion_8();
    failures += !criterion_9();
    failures += !criterion_10();
    failures += !criterion_11();
    std::printf("%d/11 criteria passed\n", 11 - failures);
    return failures;
}
