#pragma once

// Grünwald–Letnikov fractional-difference weights and the causal
// fractional-difference operator.
//
// The weight of lag j for order alpha is
//
//     c_j = (-1)^j * binom(alpha, j) = Gamma(j - alpha) / (Gamma(-alpha) * Gamma(j + 1)),
//
// evaluated here by the pole-free product recurrence c_0 = 1,
// c_j = c_{j-1} * (j - 1 - alpha) / j. The Gamma form is kept only as an
// independent cross-check.

#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "types.hpp"

namespace fos {

[[nodiscard]] inline double gl_weight_recursive(double alpha, std::size_t j) {
    double c = 1.0;
    for (std::size_t i = 1; i <= j; ++i) c *= (static_cast<double>(i) - 1.0 - alpha) / static_cast<double>(i);
    return c;
}

namespace detail {

struct LogGamma {
    double log_abs;
    int sign;
};

// log|Gamma(z)| and sign(Gamma(z)) for real z off the poles; negative
// arguments go through the reflection formula.
inline LogGamma log_gamma(double z) {
    if (z > 0.0) return {std::lgamma(z), 1};
    if (z == std::floor(z)) throw PoleError("Gamma pole at non-positive integer " + std::to_string(z));
    const double s = std::sin(std::numbers::pi * z);
    return {std::log(std::numbers::pi) - std::log(std::abs(s)) - std::lgamma(1.0 - z), s > 0.0 ? 1 : -1};
}

}  // namespace detail

/// Gamma-function evaluation of the same weight. Throws PoleError when alpha
/// is a non-negative integer (Gamma(-alpha) has a pole there).
[[nodiscard]] inline double gl_weight_gamma(double alpha, std::size_t j) {
    if (alpha >= 0.0 && alpha == std::floor(alpha))
        throw PoleError("gl_weight_gamma: Gamma(-alpha) is a pole for alpha = " + std::to_string(alpha));
    if (j == 0) return 1.0;
    const auto num = detail::log_gamma(static_cast<double>(j) - alpha);
    const auto den = detail::log_gamma(-alpha);
    const double log_fact = std::lgamma(static_cast<double>(j) + 1.0);
    return num.sign * den.sign * std::exp(num.log_abs - den.log_abs - log_fact);
}

/// Weights c_0 .. c_horizon for one order.
[[nodiscard]] inline std::vector<double> gl_weights(double alpha, std::size_t horizon) {
    std::vector<double> w(horizon + 1);
    w[0] = 1.0;
    for (std::size_t j = 1; j <= horizon; ++j)
        w[j] = w[j - 1] * (static_cast<double>(j) - 1.0 - alpha) / static_cast<double>(j);
    return w;
}

// Precomputed weights for a set of channels; read-only after construction.
class FracWeightTable {
public:
    FracWeightTable() = default;

    FracWeightTable(std::span<const double> orders, std::size_t horizon)
        : orders_(orders.begin(), orders.end()), horizon_(horizon),
          weights_(static_cast<Index>(orders.size()), static_cast<Index>(horizon) + 1) {
        for (std::size_t i = 0; i < orders_.size(); ++i) {
            const auto w = gl_weights(orders_[i], horizon);
            for (std::size_t j = 0; j <= horizon; ++j)
                weights_(static_cast<Index>(i), static_cast<Index>(j)) = w[j];
        }
    }

    [[nodiscard]] std::size_t channels() const noexcept { return orders_.size(); }
    [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
    [[nodiscard]] const std::vector<double>& orders() const noexcept { return orders_; }

    [[nodiscard]] double operator()(std::size_t channel, std::size_t lag) const {
        return weights_(static_cast<Index>(channel), static_cast<Index>(lag));
    }

    /// Diagonal of D(alpha, lag), i.e. the weights of every channel at one lag.
    [[nodiscard]] Vector column(std::size_t lag) const {
        if (lag > horizon_) throw IndexError("weight table lag " + std::to_string(lag) + " beyond horizon");
        return weights_.col(static_cast<Index>(lag));
    }

    [[nodiscard]] const Matrix& matrix() const noexcept { return weights_; }

private:
    std::vector<double> orders_;
    std::size_t horizon_ = 0;
    Matrix weights_;
};

[[nodiscard]] inline FracWeightTable build_weight_table(std::span<const double> alphas, std::size_t horizon) {
    return FracWeightTable(alphas, horizon);
}

[[nodiscard]] inline FracWeightTable build_weight_table(const Vector& alphas, std::size_t horizon) {
    return FracWeightTable(std::span<const double>(alphas.data(), static_cast<std::size_t>(alphas.size())), horizon);
}

/// Causal fractional difference of every channel of `series` (rows are time)
/// at sample k, using a table whose horizon covers k.
[[nodiscard]] inline Vector frac_difference(const Series& series, const FracWeightTable& table, Index k) {
    if (k < 0 || k >= series.rows())
        throw IndexError("frac_difference: index " + std::to_string(k) + " outside series of length " +
                         std::to_string(series.rows()));
    detail::require_dims(static_cast<std::size_t>(series.cols()) == table.channels(),
                         "frac_difference: channel count does not match weight table");
    if (static_cast<std::size_t>(k) > table.horizon()) throw IndexError("frac_difference: weight table too short");
    Vector out = Vector::Zero(series.cols());
    for (Index j = 0; j <= k; ++j)
        out += table.column(static_cast<std::size_t>(j)).cwiseProduct(series.row(k - j).transpose());
    return out;
}

[[nodiscard]] inline Vector frac_difference(const Series& series, const Vector& alphas, Index k) {
    if (k < 0 || k >= series.rows())
        throw IndexError("frac_difference: index " + std::to_string(k) + " outside series of length " +
                         std::to_string(series.rows()));
    return frac_difference(series, build_weight_table(alphas, static_cast<std::size_t>(k)), k);
}

}  // namespace fos
