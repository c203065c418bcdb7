#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "gecattack/core.hpp"

namespace gecattack {

// Two-player TrueSkill with draws (Herbrich et al., 2006), in the closed
// form the 1-vs-1 factor graph reduces to. Updates are purely deterministic;
// the seed field only feeds optional batch shuffling elsewhere.

struct TrueSkillConfig {
    double mu0 = 25.0;
    double sigma0 = 25.0 / 3.0;
    double beta = 25.0 / 6.0;
    double tau = 25.0 / 300.0;
    double draw_probability = 0.1;  // in [0,1)
    std::uint64_t seed = 0;
    bool rank_by_conservative = false;  // order by mu - 3*sigma instead of mu

    void validate() const {
        if (!(sigma0 > 0.0)) throw ConfigError("trueskill: sigma0 must be positive");
        if (!(beta > 0.0)) throw ConfigError("trueskill: beta must be positive");
        if (!(draw_probability >= 0.0 && draw_probability < 1.0))
            throw ConfigError("trueskill: draw_probability must be in [0,1)");
    }
};

struct Rating {
    double mu = 25.0;
    double sigma = 25.0 / 3.0;
};

namespace normal {

inline double pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014327;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865476); }

// Acklam's rational approximation refined with one Halley step; accurate to
// a few ulp over (0,1).
inline double inv_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inv_cdf: p outside (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = cdf(x) - p;
    const double u = e * std::sqrt(2.0 * 3.141592653589793238462643383279502884) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace normal

enum class PairOutcome { first_wins, draw };

namespace detail {

inline double v_win(double t, double eps) {
    const double denom = normal::cdf(t - eps);
    if (denom < 1e-300) return eps - t;  // asymptotic tail
    return normal::pdf(t - eps) / denom;
}

inline double w_win(double t, double eps) {
    const double v = v_win(t, eps);
    return v * (v + t - eps);
}

inline double v_draw(double t, double eps) {
    const double denom = normal::cdf(eps - t) - normal::cdf(-eps - t);
    if (denom < 1e-300) return -t;  // asymptotic tail
    return (normal::pdf(-eps - t) - normal::pdf(eps - t)) / denom;
}

inline double w_draw(double t, double eps) {
    const double denom = normal::cdf(eps - t) - normal::cdf(-eps - t);
    if (denom < 1e-300) return 1.0;
    const double v = v_draw(t, eps);
    return v * v + ((eps - t) * normal::pdf(eps - t) + (eps + t) * normal::pdf(eps + t)) / denom;
}

}  // namespace detail

// One rated game between `first` and `second`. Dynamics noise tau is folded
// into both priors before the update, matching the conventional sequential
// rating scheme.
inline std::pair<Rating, Rating> rate_pair(const Rating& first, const Rating& second,
                                           PairOutcome outcome, const TrueSkillConfig& cfg = {}) {
    cfg.validate();
    if (outcome == PairOutcome::draw && cfg.draw_probability == 0.0)
        throw ConfigError("trueskill: draw outcome requires draw_probability > 0");

    const double var1 = first.sigma * first.sigma + cfg.tau * cfg.tau;
    const double var2 = second.sigma * second.sigma + cfg.tau * cfg.tau;
    const double c2 = var1 + var2 + 2.0 * cfg.beta * cfg.beta;
    const double c = std::sqrt(c2);
    const double draw_margin =
        normal::inv_cdf(0.5 * (cfg.draw_probability + 1.0)) * std::sqrt(2.0) * cfg.beta;
    const double eps = draw_margin / c;
    const double t = (first.mu - second.mu) / c;

    Rating r1, r2;
    if (outcome == PairOutcome::first_wins) {
        const double v = detail::v_win(t, eps);
        const double w = detail::w_win(t, eps);
        r1.mu = first.mu + var1 / c * v;
        r2.mu = second.mu - var2 / c * v;
        r1.sigma = std::sqrt(var1 * (1.0 - var1 / c2 * w));
        r2.sigma = std::sqrt(var2 * (1.0 - var2 / c2 * w));
    } else {
        const double w = detail::w_draw(t, eps);
        r1.mu = first.mu + var1 / c * detail::v_draw(t, eps);
        r2.mu = second.mu + var2 / c * detail::v_draw(-t, eps);
        r1.sigma = std::sqrt(var1 * (1.0 - var1 / c2 * w));
        r2.sigma = std::sqrt(var2 * (1.0 - var2 / c2 * w));
    }
    return {r1, r2};
}

}  // namespace gecattack
