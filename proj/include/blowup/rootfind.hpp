#pragma once

#include <cmath>
#include <stdexcept>

namespace blowup {

struct RootResult {
    double x = 0.0;
    int iters = 0;
    bool converged = false;
};

// Newton iteration safeguarded by a maintained bracket: any step that
// leaves [lo,hi] or fails to shrink the bracket falls back to bisection.
// f must have opposite signs at lo and hi.
template <class F, class DF>
inline RootResult newton_bisect(const F& f, const DF& df, double lo, double hi,
                                double rel_tol = 1e-12, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return {lo, 0, true};
    if (fhi == 0.0) return {hi, 0, true};
    if ((flo > 0) == (fhi > 0))
        throw std::invalid_argument("newton_bisect: no sign change on bracket");
    double x = 0.5 * (lo + hi);
    for (int it = 1; it <= max_iter; ++it) {
        double fx = f(x);
        if (fx == 0.0) return {x, it, true};
        if ((fx > 0) == (fhi > 0)) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        double d = df(x);
        double step = (d != 0.0) ? fx / d : 0.0;
        double xn = x - step;
        if (!(xn > lo && xn < hi) || step == 0.0) xn = 0.5 * (lo + hi);
        double dx = std::abs(xn - x);
        x = xn;
        if (dx <= rel_tol * std::abs(x) || hi - lo <= rel_tol * std::abs(x))
            return {x, it, true};
    }
    return {x, max_iter, false};
}

}  // namespace blowup
