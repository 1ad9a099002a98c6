#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "markovig/linalg.hpp"

namespace markovig {

struct NelderMeadOptions {
    double init_step = 0.5;        // initial simplex edge length
    double diam_tol = 1e-10;       // stop when the simplex shrinks below this
    double decrease_tol = 0.0;     // stop when the f-spread across the simplex drops below this
    int max_iter = 20000;
};

struct NelderMeadResult {
    Vector x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
    double diameter = 0.0;
    std::vector<double> best_trace;  // best objective after each iteration
};

// Standard Nelder-Mead downhill simplex (reflection 1, expansion 2,
// contraction 1/2, shrink 1/2) minimizing f. The objective may return
// +infinity to mark an infeasible probe.
inline NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f,
                                    const Vector& x0, const NelderMeadOptions& opt = {}) {
    const int n = static_cast<int>(x0.size());
    std::vector<Vector> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (int i = 0; i < n; ++i) xs[i + 1](i) += opt.init_step;
    for (int i = 0; i <= n; ++i) fs[i] = f(xs[i]);

    auto order = [&] {
        std::vector<int> idx(n + 1);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<Vector> xs2(n + 1);
        std::vector<double> fs2(n + 1);
        for (int i = 0; i <= n; ++i) {
            xs2[i] = xs[idx[i]];
            fs2[i] = fs[idx[i]];
        }
        xs.swap(xs2);
        fs.swap(fs2);
    };
    auto diameter = [&] {
        double d = 0.0;
        for (int i = 1; i <= n; ++i) d = std::max(d, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
        return d;
    };

    NelderMeadResult res;
    order();
    res.best_trace.push_back(fs[0]);
    for (int it = 0; it < opt.max_iter; ++it) {
        res.iterations = it;
        res.diameter = diameter();
        if (res.diameter < opt.diam_tol) {
            res.converged = true;
            break;
        }
        if (opt.decrease_tol > 0.0 && std::isfinite(fs[n]) && fs[n] - fs[0] < opt.decrease_tol) {
            res.converged = true;
            break;
        }

        Vector centroid = Vector::Zero(n);
        for (int i = 0; i < n; ++i) centroid += xs[i];
        centroid /= n;

        const Vector xr = centroid + (centroid - xs[n]);
        const double fr = f(xr);
        if (fr < fs[0]) {
            const Vector xe = centroid + 2.0 * (centroid - xs[n]);
            const double fe = f(xe);
            if (fe < fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
        } else if (fr < fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
        } else {
            const bool outside = fr < fs[n];
            const Vector xc = outside ? Vector(centroid + 0.5 * (xr - centroid))
                                      : Vector(centroid - 0.5 * (centroid - xs[n]));
            const double fc = f(xc);
            if (fc < std::min(fr, fs[n])) {
                xs[n] = xc;
                fs[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                    fs[i] = f(xs[i]);
                }
            }
        }
        order();
        res.best_trace.push_back(fs[0]);
    }
    res.x = xs[0];
    res.f = fs[0];
    res.diameter = diameter();
    return res;
}

}  // namespace markovig
