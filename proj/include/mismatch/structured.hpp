#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "mismatch/numerics.hpp"
#include "mismatch/types.hpp"

// Closed forms for symmetric and modulo-additive metrics under equiprobable
// inputs.  Everything reduces to one-dimensional searches over s driven by
// the row-moment function kappa.

namespace mismatch {

// A metric whose rows and columns are permutations of one another.  Stored as
// the first row plus a Latin-square layout mapping (x, y) to a slot of that
// row; the default layout is cyclic, layout[x][y] = (y - x) mod n.
class SymmetricMetric {
public:
    explicit SymmetricMetric(Vec first_row)
        : row_(std::move(first_row)), layout_(cyclic_layout(row_.size())) {
        validate();
    }

    SymmetricMetric(Vec first_row, std::vector<std::vector<std::size_t>> layout)
        : row_(std::move(first_row)), layout_(std::move(layout)) {
        validate();
    }

    std::size_t alphabet_size() const { return row_.size(); }
    const Vec& first_row() const { return row_; }
    const std::vector<std::vector<std::size_t>>& layout() const { return layout_; }

    double operator()(std::size_t x, std::size_t y) const { return row_[layout_[x][y]]; }

    DiscreteChannel expand() const {
        const std::size_t n = row_.size();
        Matrix m(n, n);
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y) m(x, y) = row_[layout_[x][y]];
        return DiscreteChannel(std::move(m));
    }

private:
    static std::vector<std::vector<std::size_t>> cyclic_layout(std::size_t n) {
        std::vector<std::vector<std::size_t>> l(n, std::vector<std::size_t>(n));
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y) l[x][y] = (y + n - x) % n;
        return l;
    }

    void validate() const {
        const std::size_t n = row_.size();
        if (n == 0) throw DimensionMismatch("empty symmetric metric row");
        double sum = 0.0;
        for (double v : row_) {
            if (!(v > 0.0)) throw NonPositiveMetric("symmetric metric row must be positive");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw InvalidDistribution("symmetric metric row sums to " + std::to_string(sum));
        if (layout_.size() != n) throw DimensionMismatch("layout rows do not match alphabet");
        // Latin square: each slot index appears exactly once per row and column
        for (std::size_t x = 0; x < n; ++x) {
            if (layout_[x].size() != n)
                throw DimensionMismatch("layout columns do not match alphabet");
            std::vector<bool> seen(n, false);
            for (std::size_t y = 0; y < n; ++y) {
                if (layout_[x][y] >= n || seen[layout_[x][y]])
                    throw DimensionMismatch("layout row is not a permutation");
                seen[layout_[x][y]] = true;
            }
        }
        for (std::size_t y = 0; y < n; ++y) {
            std::vector<bool> seen(n, false);
            for (std::size_t x = 0; x < n; ++x) {
                if (seen[layout_[x][y]])
                    throw DimensionMismatch("layout column is not a permutation");
                seen[layout_[x][y]] = true;
            }
        }
    }

    Vec row_;
    std::vector<std::vector<std::size_t>> layout_;
};

// kappa_t = sum_y row(y)^t
inline double kappa(const SymmetricMetric& metric, double t) {
    double acc = 0.0;
    for (double v : metric.first_row()) acc += std::pow(v, t);
    return acc;
}

struct StructuredValue {
    double value = 0.0;
    double s_star = 0.0;
};

namespace detail {

inline double row_log_mean(const Vec& row) {
    double acc = 0.0;
    for (double v : row) acc += v * std::log(v);
    return acc;
}

inline double row_log_var(const Vec& row) {
    double mean = row_log_mean(row);
    double acc = 0.0;
    for (double v : row) acc += v * std::log(v) * std::log(v);
    return std::max(acc - mean * mean, 0.0);
}

}  // namespace detail

// Worst-case GMI over the chi-squared ball for a symmetric metric with
// equiprobable inputs:
//   I^ML_s = log(n / kappa_s) + s E[log row],  V_s = s^2 Var[log row]
inline StructuredValue symmetric_worst_gmi(const SymmetricMetric& metric, double r,
                                           double xtol = 1e-9) {
    const double n = static_cast<double>(metric.alphabet_size());
    const double mean_log = detail::row_log_mean(metric.first_row());
    const double var_log = detail::row_log_var(metric.first_row());
    auto f = [&](double s) {
        return std::log(n / kappa(metric, s)) + s * mean_log -
               s * std::sqrt(2.0 * r * var_log);
    };
    OptimizerReport rep = maximize_on_ray(f, 32.0, xtol);
    return {rep.value, rep.point[0]};
}

// Worst-case iid Gallager function for a symmetric metric:
//   E^ML_s = rho log n - rho log kappa_s - log kappa_{1-s rho}
//   V_s    = kappa_{1-2 s rho} / kappa_{1-s rho}^2 - 1
inline StructuredValue symmetric_worst_e0(const SymmetricMetric& metric, double rho, double r,
                                          double xtol = 1e-9) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw Error("rho must lie in [0,1]");
    const double n = static_cast<double>(metric.alphabet_size());
    if (rho == 0.0) return {0.0, 0.0};
    auto f = [&](double s) {
        double k1 = kappa(metric, 1.0 - s * rho);
        double v = std::max(kappa(metric, 1.0 - 2.0 * s * rho) / (k1 * k1) - 1.0, 0.0);
        double eml = rho * std::log(n) - rho * std::log(kappa(metric, s)) - std::log(k1);
        return eml - std::log1p(std::sqrt(2.0 * r * v));
    };
    OptimizerReport rep = maximize_on_ray(f, 32.0, xtol);
    return {rep.value, rep.point[0]};
}

// Modulo-additive metric: diagonal p_bar, all off-diagonal entries p.
struct ModuloAdditiveMetric {
    double p = 0.0;
    std::size_t alphabet_size = 0;

    ModuloAdditiveMetric(double crossover, std::size_t n) : p(crossover), alphabet_size(n) {
        if (n < 2) throw DimensionMismatch("modulo-additive metric needs |X| >= 2");
        if (!(p > 0.0) || !(p <= 1.0 / static_cast<double>(n)))
            throw NonPositiveMetric("crossover must lie in (0, 1/|X|]");
    }

    double p_bar() const { return 1.0 - (static_cast<double>(alphabet_size) - 1.0) * p; }

    SymmetricMetric to_symmetric() const {
        Vec row(alphabet_size, p);
        row[0] = p_bar();
        return SymmetricMetric(row);
    }
};

struct ModuloAdditiveValue {
    double value = 0.0;
    double s_star = 0.0;
    double q_worst = 0.0;  // off-diagonal crossover of the worst channel
};

// Worst-case GMI for the modulo-additive metric; the worst channel stays
// modulo-additive with crossover p(1 + sqrt(2r) sqrt(p_bar/(1-p_bar))).
inline ModuloAdditiveValue modulo_additive_worst_gmi(const ModuloAdditiveMetric& metric,
                                                     double r, double xtol = 1e-9) {
    const double n = static_cast<double>(metric.alphabet_size);
    const double pb = metric.p_bar();
    const double p = metric.p;
    if (std::abs(pb - p) < 1e-15) {
        // uniform metric: information density vanishes identically
        return {0.0, 0.0, p};
    }
    auto f = [&](double s) {
        double i_ml = std::log(n / (std::pow(pb, s) + (1.0 - pb) * std::pow(p, s - 1.0))) +
                      s * (pb * std::log(pb) + (1.0 - pb) * std::log(p));
        double v = s * s * pb * (1.0 - pb) * std::pow(std::log(pb / p), 2.0);
        return i_ml - std::sqrt(2.0 * r * v);
    };
    OptimizerReport rep = maximize_on_ray(f, 32.0, xtol);
    double q_worst = p * (1.0 + std::sqrt(2.0 * r) * std::sqrt(pb / (1.0 - pb)));
    return {rep.value, rep.point[0], q_worst};
}

inline DiscreteChannel modulo_additive_worst_channel(const ModuloAdditiveMetric& metric,
                                                     double r) {
    ModuloAdditiveValue v = modulo_additive_worst_gmi(metric, r);
    const std::size_t n = metric.alphabet_size;
    Matrix m(n, n, v.q_worst);
    for (std::size_t x = 0; x < n; ++x)
        m(x, x) = 1.0 - (static_cast<double>(n) - 1.0) * v.q_worst;
    return DiscreteChannel(std::move(m));
}

}  // namespace mismatch
