#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mismatch {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kPi = 3.14159265358979323846;

// Error hierarchy.  Everything the library throws derives from Error so the
// CLI can map any solver failure to a single exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct NonPositiveMetric : Error {
    using Error::Error;
};
struct InvalidDistribution : Error {
    using Error::Error;
};
struct InfeasibleRadius : Error {
    using Error::Error;
};
struct DegenerateMetric : Error {
    using Error::Error;
};
struct OutsideValidity : Error {
    using Error::Error;
};
struct NoSignChange : Error {
    using Error::Error;
};
struct RootBracketFailure : Error {
    using Error::Error;
};

// Dense row-major matrix, just enough for small channel tables.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<Vec>& rows) {
        if (rows.empty()) throw DimensionMismatch("matrix needs at least one row");
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_)
                throw DimensionMismatch("ragged rows in matrix literal");
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// Probability vector over the input alphabet.  Entries must be nonnegative
// and sum to 1 within 1e-12.
class InputDistribution {
public:
    explicit InputDistribution(Vec p) : p_(std::move(p)) {
        if (p_.empty()) throw InvalidDistribution("empty input distribution");
        double sum = 0.0;
        for (double v : p_) {
            if (!(v >= 0.0)) throw InvalidDistribution("negative input probability");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw InvalidDistribution("input distribution sums to " + std::to_string(sum));
    }

    static InputDistribution uniform(std::size_t n) {
        return InputDistribution(Vec(n, 1.0 / static_cast<double>(n)));
    }

    std::size_t size() const { return p_.size(); }
    double operator[](std::size_t x) const { return p_[x]; }
    const Vec& probs() const { return p_; }

private:
    Vec p_;
};

// Row-stochastic transition table W(y|x); rows must sum to 1 within 1e-12.
// Zero entries are allowed here (true channels may kill outputs); decoding
// metrics additionally need strict positivity, checked separately.
class DiscreteChannel {
public:
    explicit DiscreteChannel(Matrix w) : w_(std::move(w)) { validate(); }

    static DiscreteChannel from_rows(const std::vector<Vec>& rows) {
        return DiscreteChannel(Matrix::from_rows(rows));
    }

    std::size_t num_inputs() const { return w_.rows(); }
    std::size_t num_outputs() const { return w_.cols(); }

    double operator()(std::size_t x, std::size_t y) const { return w_(x, y); }
    double& entry(std::size_t x, std::size_t y) { return w_(x, y); }
    const Matrix& matrix() const { return w_; }

    double min_entry() const {
        double m = kInf;
        for (double v : w_.data()) m = std::min(m, v);
        return m;
    }

private:
    void validate() const {
        if (w_.rows() == 0 || w_.cols() == 0)
            throw DimensionMismatch("empty channel matrix");
        for (std::size_t x = 0; x < w_.rows(); ++x) {
            double sum = 0.0;
            for (std::size_t y = 0; y < w_.cols(); ++y) {
                if (!(w_(x, y) >= 0.0))
                    throw InvalidDistribution("negative channel entry");
                sum += w_(x, y);
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw InvalidDistribution("channel row " + std::to_string(x) +
                                          " sums to " + std::to_string(sum));
        }
    }

    Matrix w_;
};

inline void require_positive_metric(const DiscreteChannel& metric) {
    if (!(metric.min_entry() > 0.0))
        throw NonPositiveMetric("decoding metric must be strictly positive");
}

inline void require_same_shape(const DiscreteChannel& a, const DiscreteChannel& b) {
    if (a.num_inputs() != b.num_inputs() || a.num_outputs() != b.num_outputs())
        throw DimensionMismatch("channel shapes differ");
}

inline void require_matching_input(const InputDistribution& q, const DiscreteChannel& w) {
    if (q.size() != w.num_inputs())
        throw DimensionMismatch("input distribution size does not match channel");
}

// Tilting parameters for the decoding-metric family: metric exponent s >= 0,
// additive input tilt a(x), and optional cost constraints.  For rate problems
// only (s, a, lambda, costs) matter; exponent problems use the second
// multiplier lambda_bar with its own role in the numerator.  Empty vectors
// mean "identically zero".
struct MetricParams {
    double s = 1.0;
    Vec a;                      // per-input tilt, gauge: zero mean under Q
    Vec lambda;                 // cost multipliers (one per cost function)
    Vec lambda_bar;             // second multiplier set, exponent problems only
    std::vector<Vec> costs;     // cost tables c_l(x), one Vec per constraint

    double tilt(std::size_t x) const { return a.empty() ? 0.0 : a[x]; }
};

// Exponent evaluation point: Gallager parameter and target rate in nats/use.
struct ExponentParams {
    double rho = 0.0;
    double rate = 0.0;

    ExponentParams() = default;
    ExponentParams(double rho_, double rate_) : rho(rho_), rate(rate_) {
        if (!(rho >= 0.0 && rho <= 1.0)) throw Error("rho must lie in [0, 1]");
        if (!(rate >= 0.0)) throw Error("rate must be nonnegative");
    }
};

enum class BallKind { relative_entropy, chi_squared };

// Uncertainty ball around a decoding metric: all channels within `radius` of
// `center` in the chosen divergence, conditioned on the input law.
struct BallSpec {
    DiscreteChannel center;
    double radius = 0.0;
    BallKind kind = BallKind::chi_squared;

    BallSpec(DiscreteChannel c, double r, BallKind k)
        : center(std::move(c)), radius(r), kind(k) {
        if (!(radius >= 0.0)) throw Error("ball radius must be nonnegative");
        require_positive_metric(center);
    }
};

enum class Ensemble { iid, constant_composition, cost_constrained };

inline std::string to_string(Ensemble e) {
    switch (e) {
        case Ensemble::iid: return "iid";
        case Ensemble::constant_composition: return "cc";
        case Ensemble::cost_constrained: return "cost";
    }
    return "?";
}

}  // namespace mismatch
