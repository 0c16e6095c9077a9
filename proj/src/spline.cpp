#include "railsim/spline.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace railsim {

SmoothingSpline SmoothingSpline::fit(
    const std::vector<std::pair<double, double>>& samples, double lambda) {
    const std::size_t n = samples.size();
    if (n < 4) throw std::invalid_argument("smoothing spline needs at least 4 samples");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    for (std::size_t i = 1; i < n; ++i) {
        if (!(samples[i].first > samples[i - 1].first))
            throw std::invalid_argument("abscissae must be strictly increasing");
    }

    std::vector<double> x(n), y(n), h(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = samples[i].first;
        y[i] = samples[i].second;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x[i + 1] - x[i];

    const auto m = static_cast<Eigen::Index>(n - 2);

    // Q (n x m): second-difference operator; R (m x m): inner products of the
    // natural-spline second-derivative basis (Reinsch's formulation).
    Eigen::SparseMatrix<double> Q(static_cast<Eigen::Index>(n), m);
    Eigen::SparseMatrix<double> R(m, m);
    {
        std::vector<Eigen::Triplet<double>> tq, tr;
        for (Eigen::Index j = 0; j < m; ++j) {
            const std::size_t i = static_cast<std::size_t>(j) + 1;
            tq.emplace_back(j, j, 1.0 / h[i - 1]);
            tq.emplace_back(j + 1, j, -1.0 / h[i - 1] - 1.0 / h[i]);
            tq.emplace_back(j + 2, j, 1.0 / h[i]);
            tr.emplace_back(j, j, (h[i - 1] + h[i]) / 3.0);
            if (j + 1 < m) {
                tr.emplace_back(j, j + 1, h[i] / 6.0);
                tr.emplace_back(j + 1, j, h[i] / 6.0);
            }
        }
        Q.setFromTriplets(tq.begin(), tq.end());
        R.setFromTriplets(tr.begin(), tr.end());
    }

    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
    Eigen::SparseMatrix<double> A = R;
    if (lambda > 0.0) A = A + Eigen::SparseMatrix<double>(lambda * (Q.transpose() * Q).eval());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(A);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("smoothing spline system is singular");
    const Eigen::VectorXd rhs = Q.transpose() * yv;
    const Eigen::VectorXd gamma_int = solver.solve(rhs);
    const Eigen::VectorXd a = yv - lambda * (Q * gamma_int);

    SmoothingSpline s;
    s.lambda_ = lambda;
    s.knots_ = x;
    s.a_.assign(a.data(), a.data() + n);
    s.gamma_.assign(n, 0.0);
    for (Eigen::Index j = 0; j < m; ++j) s.gamma_[static_cast<std::size_t>(j) + 1] = gamma_int[j];

    s.b_.resize(n - 1);
    s.c_.resize(n - 1);
    s.d_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        s.c_[i] = s.gamma_[i] / 2.0;
        s.d_[i] = (s.gamma_[i + 1] - s.gamma_[i]) / (6.0 * h[i]);
        s.b_[i] = (s.a_[i + 1] - s.a_[i]) / h[i] -
                  h[i] * (2.0 * s.gamma_[i] + s.gamma_[i + 1]) / 6.0;
    }
    return s;
}

std::size_t SmoothingSpline::interval_for(double x) const {
    if (x < knots_.front() || x > knots_.back())
        throw std::out_of_range("spline evaluation outside knot range");
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    if (i > 0) --i;
    if (i >= knots_.size() - 1) i = knots_.size() - 2;
    return i;
}

double SmoothingSpline::eval(double x, int order) const {
    if (knots_.empty()) throw std::logic_error("spline not fitted");
    const std::size_t i = interval_for(x);
    const double dx = x - knots_[i];
    switch (order) {
        case 0: return a_[i] + dx * (b_[i] + dx * (c_[i] + dx * d_[i]));
        case 1: return b_[i] + dx * (2.0 * c_[i] + dx * 3.0 * d_[i]);
        case 2: return 2.0 * c_[i] + 6.0 * d_[i] * dx;
        default: throw std::invalid_argument("order must be 0, 1, or 2");
    }
}

double SmoothingSpline::objective(const std::vector<double>& y) const {
    if (y.size() != knots_.size())
        throw std::invalid_argument("ordinate count mismatch");
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - a_[i];
        sse += r * r;
    }
    // integral of f''^2 = gamma^T R gamma over interior knots
    double penalty = 0.0;
    const std::size_t n = knots_.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hi_1 = knots_[i] - knots_[i - 1];
        const double hi = knots_[i + 1] - knots_[i];
        penalty += gamma_[i] * gamma_[i] * (hi_1 + hi) / 3.0;
        if (i + 2 < n) penalty += 2.0 * gamma_[i] * gamma_[i + 1] * hi / 6.0;
    }
    return sse + lambda_ * penalty;
}

}  // namespace railsim
