#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace blowup {

// Shape-preserving cubic Hermite interpolant (Fritsch-Carlson slopes) on an
// arbitrary strictly increasing grid. Monotone data stays monotone between
// nodes, which matters when interpolating radial profiles near their peak.
class MonotoneCubic {
  public:
    MonotoneCubic() = default;

    MonotoneCubic(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n)
            throw std::invalid_argument("interp: need >= 2 matching nodes");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1]))
                throw std::invalid_argument("interp: grid not increasing");
        m_.assign(n, 0.0);
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i)
            d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        m_[0] = d[0];
        m_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] * d[i] <= 0.0) {
                m_[i] = 0.0;
            } else {
                // weighted harmonic mean keeps slopes inside the monotone box
                double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
                double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
                m_[i] = (w0 + w1) / (w0 / d[i - 1] + w1 / d[i]);
            }
        }
    }

    double operator()(double xq) const { return eval(xq, nullptr); }

    double derivative(double xq) const {
        double dy;
        eval(xq, &dy);
        return dy;
    }

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }

  private:
    double eval(double xq, double* dy) const {
        if (xq <= x_.front()) xq = x_.front();
        if (xq >= x_.back()) xq = x_.back();
        auto it = std::upper_bound(x_.begin(), x_.end(), xq);
        std::size_t i = static_cast<std::size_t>(it - x_.begin());
        if (i == 0) i = 1;
        if (i >= x_.size()) i = x_.size() - 1;
        --i;
        double h = x_[i + 1] - x_[i];
        double t = (xq - x_[i]) / h;
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        if (dy) {
            double d00 = (6 * t2 - 6 * t) / h, d10 = 3 * t2 - 4 * t + 1;
            double d01 = (6 * t - 6 * t2) / h, d11 = 3 * t2 - 2 * t;
            *dy = y_[i] * d00 + m_[i] * d10 + y_[i + 1] * d01 + m_[i + 1] * d11;
        }
        return y_[i] * h00 + h * m_[i] * h10 + y_[i + 1] * h01 + h * m_[i + 1] * h11;
    }

    std::vector<double> x_, y_, m_;
};

// First derivative at node i from the 5-point Lagrange stencil centred as
// well as the grid allows; fourth-order on smooth (possibly nonuniform) grids.
inline double deriv5(const std::vector<double>& x, const std::vector<double>& y,
                     std::size_t i) {
    const std::size_t n = x.size();
    if (n < 5) throw std::invalid_argument("deriv5: need >= 5 nodes");
    std::size_t s = (i < 2) ? 0 : (i + 2 >= n ? n - 5 : i - 2);
    double xi = x[i], acc = 0.0;
    for (std::size_t j = s; j < s + 5; ++j) {
        // derivative of Lagrange basis l_j at xi
        double num = 0.0;
        for (std::size_t k = s; k < s + 5; ++k) {
            if (k == j) continue;
            double prod = 1.0;
            for (std::size_t l = s; l < s + 5; ++l) {
                if (l == j || l == k) continue;
                prod *= (xi - x[l]) / (x[j] - x[l]);
            }
            num += prod / (x[j] - x[k]);
        }
        acc += num * y[j];
    }
    return acc;
}

// Neumaier-compensated accumulator; keeps sums of wildly varying step sizes
// exact to the working precision (time accumulation near blow-up).
struct CompensatedSum {
    double hi = 0.0, lo = 0.0;

    void add(double v) {
        double t = hi + v;
        if (std::abs(hi) >= std::abs(v))
            lo += (hi - t) + v;
        else
            lo += (v - t) + hi;
        hi = t;
    }
    double value() const { return hi + lo; }
};

}  // namespace blowup
