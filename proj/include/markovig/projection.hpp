#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "markovig/divergence.hpp"
#include "markovig/errors.hpp"
#include "markovig/expfam.hpp"
#include "markovig/optim.hpp"

namespace markovig {

// The point with the first k expectation coordinates of theta' and the
// trailing natural coordinates of theta''. The divergence to theta' and from
// theta'' then splits additively through this point.
inline FamilyPoint pythagoras_point(const ExpFamily& fam, const Vector& theta_prime,
                                    const Vector& theta_dprime, int k) {
    const int d = fam.dim();
    if (k < 1 || k >= d) throw input_error("mixed-coordinate split needs 1 <= k < dimension");
    if (theta_prime.size() != d || theta_dprime.size() != d)
        throw input_error("parameter vectors must have family dimension");
    const Vector eta_head = fam.point(theta_prime).eta.head(k);
    const Vector theta_tail = theta_dprime.tail(d - k);
    return fam.solve_mixed_coordinates(eta_head, theta_tail);
}

// Linear constraints on stationary expectations: E[g_j] = target_j.
struct MixtureConstraints {
    GeneratorSet gens;
    Vector targets;
};

// Divergence minimizer over the mixture set from the first argument: the
// member of the exponential family through v (with the constraint functions
// as generators) that attains the target expectations.
inline FamilyPoint m_project(const TransitionKernel& v, const MixtureConstraints& constraints) {
    if (constraints.targets.size() != constraints.gens.dim())
        throw input_error("constraint targets must match generator count");
    ExpFamily fam(v, constraints.gens);
    const Vector theta = fam.theta_from_eta(constraints.targets);
    return fam.point(theta);
}

// Divergence minimizer over the family in the second argument: damped Newton
// descent of theta -> D(w || W_theta) evaluated in stationary form. The exact
// gradient is eta(theta) - E_w[g] because the stationary average of any
// f(to) - f(from) telescopes to zero.
inline FamilyPoint e_project(const TransitionKernel& w, const ExpFamily& fam) {
    if (w.size() != fam.size()) throw input_error("kernel and family must share a state space");
    if (!w.irreducible()) throw structural_error("kernel to project must be irreducible");
    if (!support_contained(w.matrix(), fam.base().matrix()))
        throw structural_error("kernel support must lie inside the family support");

    const Vector pi_w = stationary_distribution(w);
    const int d = fam.dim();
    Vector b(d);
    for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (auto [to, from] : w.support())
            s += pi_w(from) * w(to, from) * fam.generators().list[j](to, from);
        b(j) = s;
    }

    double w_entropy_term = 0.0;  // sum pi_w w log w, constant in theta
    for (auto [to, from] : w.support())
        w_entropy_term += pi_w(from) * w(to, from) * std::log(w(to, from));

    auto divergence_at = [&](const FamilyPoint& p) {
        double cross = 0.0;
        for (auto [to, from] : w.support())
            cross += pi_w(from) * w(to, from) * std::log(p.kernel(to, from));
        return w_entropy_term - cross;
    };

    Vector theta = Vector::Zero(d);
    FamilyPoint fp = fam.point(theta);
    double fval = divergence_at(fp);
    for (int it = 0; it < 200; ++it) {
        if (theta.cwiseAbs().maxCoeff() > 1e3)
            throw range_error("iterates escaped: no divergence minimizer in the family");
        const Vector grad = fp.eta - b;
        if (grad.cwiseAbs().maxCoeff() <= 1e-8) return fp;

        const Matrix hess = fam.fisher(theta).entries;
        Vector step = Eigen::LDLT<Matrix>(hess).solve(grad);
        if (!all_finite(step) || grad.dot(step) <= 0.0) step = grad;

        double t = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half, t *= 0.5) {
            const Vector trial = theta - t * step;
            try {
                FamilyPoint tp = fam.point(trial);
                const double tv = divergence_at(tp);
                if (tv <= fval - 1e-4 * t * grad.dot(step)) {
                    theta = trial;
                    fp = std::move(tp);
                    fval = tv;
                    accepted = true;
                    break;
                }
            } catch (const error&) {
                // infeasible probe: shorten the step
            }
        }
        if (!accepted) throw numerical_error("line search failed during divergence descent");
    }
    throw numerical_error("divergence descent did not converge within the iteration budget");
}

// Lower-dimensional parametrization xi -> theta(xi) inside an ambient family.
class CurvedFamily {
  public:
    static CurvedFamily affine(ExpFamily ambient, Matrix c, Vector t0) {
        if (c.rows() != ambient.dim() || t0.size() != ambient.dim())
            throw input_error("embedding shape does not match ambient dimension");
        if (c.cols() < 1 || c.cols() > c.rows())
            throw input_error("embedded dimension must lie in [1, ambient dimension]");
        CurvedFamily cf(std::move(ambient), static_cast<int>(c.cols()));
        cf.c_ = std::move(c);
        cf.t0_ = std::move(t0);
        cf.embed_ = [c = cf.c_, t0 = cf.t0_](const Vector& xi) -> Vector { return c * xi + t0; };
        return cf;
    }

    static CurvedFamily from_map(ExpFamily ambient, int d_prime,
                                 std::function<Vector(const Vector&)> embed) {
        if (d_prime < 1 || d_prime > ambient.dim())
            throw input_error("embedded dimension must lie in [1, ambient dimension]");
        CurvedFamily cf(std::move(ambient), d_prime);
        cf.embed_ = std::move(embed);
        return cf;
    }

    const ExpFamily& ambient() const { return ambient_; }
    int dim() const { return d_prime_; }

    Vector theta_of(const Vector& xi) const {
        if (xi.size() != d_prime_ || !all_finite(xi))
            throw input_error("xi has wrong dimension or non-finite entries");
        Vector theta = embed_(xi);
        if (theta.size() != ambient_.dim() || !all_finite(theta))
            throw numerical_error("embedding map produced an invalid parameter vector");
        return theta;
    }

  private:
    CurvedFamily(ExpFamily ambient, int d_prime)
        : ambient_(std::move(ambient)), d_prime_(d_prime) {
        if (!ambient_.certificate().independent)
            throw structural_error("ambient family must have independent generators");
    }
    ExpFamily ambient_;
    int d_prime_;
    std::function<Vector(const Vector&)> embed_;
    Matrix c_;
    Vector t0_;
};

struct CurvedFisher {
    Matrix entries;
    double step = 0.0;
};

// Fisher information of the embedded parametrization: A' H^{-1} A with
// A = [d eta_i / d xi_j] by central differences.
inline CurvedFisher curved_fisher(const CurvedFamily& cf, const Vector& xi) {
    const int d = cf.ambient().dim();
    const int dp = cf.dim();
    const double h = 1e-5;
    Matrix a(d, dp);
    for (int j = 0; j < dp; ++j) {
        Vector xp = xi, xm = xi;
        xp(j) += h;
        xm(j) -= h;
        a.col(j) = (cf.ambient().point(cf.theta_of(xp)).eta -
                    cf.ambient().point(cf.theta_of(xm)).eta) /
                   (2.0 * h);
    }
    Eigen::JacobiSVD<Matrix> svd(a);
    if (svd.singularValues()(svd.singularValues().size() - 1) <= 1e-8)
        throw structural_error("embedding is rank-deficient at this point");

    const Matrix hinv = cf.ambient().fisher(cf.theta_of(xi)).entries.ldlt().solve(
        Matrix::Identity(d, d));
    Matrix out = a.transpose() * hinv * a;
    out = 0.5 * (out + out.transpose());
    return CurvedFisher{std::move(out), h};
}

enum class CurvedOptimizer { nelder_mead, grid_then_nm };
enum class EvalPath { bregman, stationary };

struct CurvedEstimateOptions {
    CurvedOptimizer optimizer = CurvedOptimizer::grid_then_nm;
    EvalPath path = EvalPath::bregman;
    double box_lo = -2.0;
    double box_hi = 2.0;
    int grid_points = 17;
};

struct CurvedEstimate {
    Vector xi;
    double divergence = 0.0;
    std::vector<double> trace;  // best objective per optimizer iteration; non-increasing
};

// Project an expectation estimate onto the curve: minimize over xi the
// divergence from the ambient point matching eta_hat to the curve point.
// The Bregman path reuses eta_hat as the gradient at theta_hat, so each probe
// costs one potential evaluation; the stationary path compares kernels.
inline CurvedEstimate curved_estimate(const CurvedFamily& cf, const Vector& eta_hat,
                                      const CurvedEstimateOptions& opt = {}) {
    const ExpFamily& fam = cf.ambient();
    const Vector theta_hat = fam.theta_from_eta(eta_hat);
    const FamilyPoint hat = fam.point(theta_hat);

    std::function<double(const Vector&)> div_of;
    if (opt.path == EvalPath::bregman) {
        div_of = [&fam, &hat](const Vector& theta) {
            return (hat.theta - theta).dot(hat.eta) - hat.phi + fam.potential(theta);
        };
    } else {
        div_of = [&fam, &hat](const Vector& theta) {
            const FamilyPoint target = fam.point(theta);
            double acc = 0.0;
            for (auto [to, from] : hat.kernel.support())
                acc += hat.stationary(from) * hat.kernel(to, from) *
                       (std::log(hat.kernel(to, from)) - std::log(target.kernel(to, from)));
            return acc;
        };
    }
    auto objective = [&](const Vector& xi) {
        try {
            return div_of(cf.theta_of(xi));
        } catch (const error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Vector start = Vector::Zero(cf.dim());
    if (opt.optimizer == CurvedOptimizer::grid_then_nm) {
        // Coarse separable grid over the box, then simplex refinement.
        if (opt.grid_points < 2 || !(opt.box_hi > opt.box_lo))
            throw input_error("grid seeding needs at least 2 points and a proper box");
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> idx(cf.dim(), 0);
        while (true) {
            Vector xi(cf.dim());
            for (int j = 0; j < cf.dim(); ++j)
                xi(j) = opt.box_lo +
                        (opt.box_hi - opt.box_lo) * idx[j] / double(opt.grid_points - 1);
            const double f = objective(xi);
            if (f < best) {
                best = f;
                start = xi;
            }
            int j = 0;
            for (; j < cf.dim(); ++j) {
                if (++idx[j] < opt.grid_points) break;
                idx[j] = 0;
            }
            if (j == cf.dim()) break;
        }
        if (!std::isfinite(best))
            throw numerical_error("no feasible grid point found for the curved estimate");
    }

    NelderMeadOptions nm;
    nm.init_step = 0.1;
    nm.diam_tol = 1e-9;
    nm.decrease_tol = 1e-12;
    nm.max_iter = 5000 * cf.dim();
    const auto res = nelder_mead(objective, start, nm);
    if (!res.converged)
        throw numerical_error("curved-estimate search did not converge");
    return CurvedEstimate{res.x, res.f, res.best_trace};
}

}  // namespace markovig
