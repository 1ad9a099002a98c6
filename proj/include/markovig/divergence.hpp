#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "markovig/errors.hpp"
#include "markovig/expfam.hpp"
#include "markovig/linalg.hpp"
#include "markovig/pf.hpp"

namespace markovig {

enum class DivMethod { eigen_derivative, stationary_form, renyi_limit };

struct DivergenceResult {
    double value = 0.0;
    bool finite = true;
    DivMethod method = DivMethod::eigen_derivative;
};

namespace detail {

// log principal eigenvalue of the entrywise matrix W^{1+s} V^{-s} on the
// given support, computed in log scale.
inline double tilted_log_eigenvalue(const TransitionKernel& w, const TransitionKernel& v,
                                    double s, const SupportSet& support) {
    Matrix logs = Matrix::Zero(w.size(), w.size());
    for (auto [to, from] : support)
        logs(to, from) = (1.0 + s) * std::log(w(to, from)) - s * std::log(v(to, from));
    return perron_frobenius_log(logs, support).log_eigenvalue;
}

inline DivergenceResult infinite_result(DivMethod method) {
    return {std::numeric_limits<double>::infinity(), false, method};
}

}  // namespace detail

// Renyi divergence of order 1+s: log of the principal eigenvalue of
// W^{1+s} V^{-s}, divided by s.
inline DivergenceResult renyi(const TransitionKernel& w, const TransitionKernel& v, double s) {
    if (w.size() != v.size()) throw input_error("kernels must share a state space");
    if (s == 0.0) throw input_error("s = 0 is the relative-entropy limit; use relative_entropy");
    if (s <= -1.0 || !std::isfinite(s)) throw input_error("order parameter must lie in (-1,0) or (0,inf)");
    if (!w.irreducible()) throw structural_error("first kernel is not irreducible");

    if (s > 0.0) {
        if (!support_contained(w.matrix(), v.matrix()))
            return detail::infinite_result(DivMethod::renyi_limit);
        const double lognu = detail::tilted_log_eigenvalue(w, v, s, w.support());
        return {lognu / s, true, DivMethod::renyi_limit};
    }
    // s in (-1, 0): the matrix lives on the support intersection, which must
    // be irreducible for the eigenvalue to be well defined.
    const SupportSet inter = support_intersection(w.matrix(), v.matrix());
    if (inter.empty()) throw structural_error("kernel supports do not intersect");
    Matrix indicator = Matrix::Zero(w.size(), w.size());
    for (auto [to, from] : inter) indicator(to, from) = 1.0;
    StructureReport rep;
    try {
        rep = check_structure(indicator);
    } catch (const structural_error&) {
        throw structural_error("support intersection is not irreducible");
    }
    if (!rep.irreducible) throw structural_error("support intersection is not irreducible");
    const double lognu = detail::tilted_log_eigenvalue(w, v, s, inter);
    return {lognu / s, true, DivMethod::renyi_limit};
}

enum class RelEntropyMethod { eigen_derivative, stationary_form, both };

// Relative entropy rate between transition kernels. The eigen-derivative
// route differentiates s -> log-eigenvalue of W^{1+s} V^{-s} at s = 0; the
// stationary route evaluates sum_x' pi_w(x') w(x|x') log(w/v) directly.
inline DivergenceResult relative_entropy(const TransitionKernel& w, const TransitionKernel& v,
                                         RelEntropyMethod method = RelEntropyMethod::eigen_derivative,
                                         double agree_tol = 1e-7) {
    if (w.size() != v.size()) throw input_error("kernels must share a state space");
    if (!w.irreducible()) throw structural_error("first kernel is not irreducible");
    if (!support_contained(w.matrix(), v.matrix()))
        return detail::infinite_result(method == RelEntropyMethod::stationary_form
                                           ? DivMethod::stationary_form
                                           : DivMethod::eigen_derivative);

    auto eigen_route = [&] {
        const double h = 1e-5;
        const double up = detail::tilted_log_eigenvalue(w, v, h, w.support());
        const double dn = detail::tilted_log_eigenvalue(w, v, -h, w.support());
        return (up - dn) / (2.0 * h);
    };
    auto stationary_route = [&] {
        const Vector pi = stationary_distribution(w);
        double acc = 0.0;
        for (auto [to, from] : w.support())
            acc += pi(from) * w(to, from) * (std::log(w(to, from)) - std::log(v(to, from)));
        return acc;
    };

    switch (method) {
        case RelEntropyMethod::eigen_derivative:
            return {eigen_route(), true, DivMethod::eigen_derivative};
        case RelEntropyMethod::stationary_form:
            return {stationary_route(), true, DivMethod::stationary_form};
        case RelEntropyMethod::both: {
            const double a = eigen_route();
            const double b = stationary_route();
            if (std::abs(a - b) > agree_tol)
                throw numerical_error("divergence evaluation routes disagree: " +
                                      std::to_string(a) + " vs " + std::to_string(b));
            return {a, true, DivMethod::eigen_derivative};
        }
    }
    throw input_error("unknown relative-entropy method");
}

// Convexity report for the divergence rate: both mixture inequalities
// evaluated at one mixing weight. The second argument mixes kernels
// entrywise (the inequality is pointwise convexity of -log). The first
// argument mixes along the mixture geodesic: convex-combine the stationary
// pair measures pi(from)·w(to|from) and renormalize columns. Entrywise
// kernel mixing does NOT satisfy the first-argument inequality in general,
// because the stationary weights move nonlinearly with the kernel.
struct ConvexityReport {
    bool skipped = false;         // some divergence was infinite
    double gap_second_arg = 0.0;  // p D(w||w1)+(1-p)D(w||w2) - D(w||entrywise mix)
    double gap_first_arg = 0.0;   // p D(w1||w)+(1-p)D(w2||w) - D(pair-measure mix||w)
    bool passed = false;
};

inline ConvexityReport divergence_properties_check(const TransitionKernel& w1,
                                                   const TransitionKernel& w2,
                                                   const TransitionKernel& w, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw input_error("mixture weight must lie in [0,1]");
    if (w1.size() != w2.size() || w1.size() != w.size())
        throw input_error("kernels must share a state space");
    const Matrix mix = p * w1.matrix() + (1.0 - p) * w2.matrix();
    const TransitionKernel wm = TransitionKernel::from_columns(mix);
    // Pair-measure mixture for the first argument: q(to,from) =
    // p·pi1(from)w1(to|from) + (1-p)·pi2(from)w2(to|from), columns
    // renormalized back to a kernel.
    Matrix q = p * (w1.matrix() * stationary_distribution(w1).asDiagonal()) +
               (1.0 - p) * (w2.matrix() * stationary_distribution(w2).asDiagonal());
    for (int from = 0; from < q.cols(); ++from) q.col(from) /= q.col(from).sum();
    const TransitionKernel wq = TransitionKernel::from_columns(q);

    const auto d_w_w1 = relative_entropy(w, w1);
    const auto d_w_w2 = relative_entropy(w, w2);
    const auto d_w_wm = relative_entropy(w, wm);
    const auto d_w1_w = relative_entropy(w1, w);
    const auto d_w2_w = relative_entropy(w2, w);
    const auto d_wq_w = relative_entropy(wq, w);

    ConvexityReport rep;
    if (!d_w_w1.finite || !d_w_w2.finite || !d_w_wm.finite || !d_w1_w.finite || !d_w2_w.finite ||
        !d_wq_w.finite) {
        rep.skipped = true;
        return rep;
    }
    rep.gap_second_arg = p * d_w_w1.value + (1.0 - p) * d_w_w2.value - d_w_wm.value;
    rep.gap_first_arg = p * d_w1_w.value + (1.0 - p) * d_w2_w.value - d_wq_w.value;
    rep.passed = rep.gap_second_arg >= -1e-10 && rep.gap_first_arg >= -1e-10;
    return rep;
}

// Divergence within one family in natural coordinates:
// (theta - theta') . grad phi(theta) - phi(theta) + phi(theta').
inline double bregman_divergence(const ExpFamily& fam, const Vector& theta,
                                 const Vector& theta_prime) {
    const FamilyPoint p = fam.point(theta);
    return (theta - theta_prime).dot(p.eta) - p.phi + fam.potential(theta_prime);
}

// Recover a quadratic form from divergences along a ray: Richardson
// extrapolation of (2/t^2) D_{1+s}(W_theta || W_{theta+tc}) over a halving
// grid. The s = 0 case uses relative entropy; the limit carries the (1+s)
// factor for s != 0.
inline double fisher_from_divergence(const ExpFamily& fam, const Vector& theta, const Vector& c,
                                     double s) {
    if (c.size() != fam.dim() || !all_finite(c))
        throw input_error("direction must be a finite vector of family dimension");
    if (c.isZero(0.0)) return 0.0;  // zero direction: zero quadratic form
    const FamilyPoint base = fam.point(theta);
    const double ts[3] = {1e-2, 5e-3, 2.5e-3};
    double r[3];
    for (int i = 0; i < 3; ++i) {
        const FamilyPoint shifted = fam.point(theta + ts[i] * c);
        double div;
        if (s == 0.0)
            // Stationary closed form: exact to rounding. The finite-difference
            // eigen route carries ~1e-10 noise, which 2/t^2 would amplify past
            // the quadratic-form scale at the smallest probe.
            div = relative_entropy(base.kernel, shifted.kernel,
                                   RelEntropyMethod::stationary_form)
                      .value;
        else
            div = renyi(base.kernel, shifted.kernel, s).value;
        r[i] = 2.0 * div / (ts[i] * ts[i]);
    }
    const double t1 = 2.0 * r[1] - r[0];
    const double t2 = 2.0 * r[2] - r[1];
    return (4.0 * t2 - t1) / 3.0;
}

}  // namespace markovig
