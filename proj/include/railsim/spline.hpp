#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace railsim {

// Natural cubic smoothing spline over strictly increasing abscissae.
// Minimizes sum((y_i - f(x_i))^2) + lambda * integral(f''(x)^2 dx);
// lambda = 0 gives the natural interpolating cubic spline.
class SmoothingSpline {
  public:
    SmoothingSpline() = default;

    // Throws std::invalid_argument on fewer than 4 samples, duplicate or
    // decreasing abscissae, or lambda < 0.
    static SmoothingSpline fit(const std::vector<std::pair<double, double>>& samples,
                               double lambda);

    // order: 0 value, 1 first derivative, 2 second derivative.
    // Throws std::out_of_range for x outside the knot range.
    double eval(double x, int order = 0) const;

    double min_x() const { return knots_.front(); }
    double max_x() const { return knots_.back(); }
    std::size_t knot_count() const { return knots_.size(); }
    double lambda() const { return lambda_; }

    // Fitted value at knot i (the "a" coefficient).
    double fitted_value(std::size_t i) const { return a_[i]; }

    // Penalized least-squares objective achieved by the fit, for the given
    // original ordinates.
    double objective(const std::vector<double>& y) const;

  private:
    std::vector<double> knots_;
    // Piecewise cubic on [knots_[i], knots_[i+1]]:
    //   f(x) = a[i] + b[i] dx + c[i] dx^2 + d[i] dx^3,  dx = x - knots_[i]
    std::vector<double> a_, b_, c_, d_;
    // Second derivative at each knot (natural: zero at the ends).
    std::vector<double> gamma_;
    double lambda_ = 0.0;

    std::size_t interval_for(double x) const;
};

}  // namespace railsim
