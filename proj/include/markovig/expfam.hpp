#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "markovig/errors.hpp"
#include "markovig/linalg.hpp"
#include "markovig/optim.hpp"
#include "markovig/pf.hpp"

namespace markovig {

// Ordered list of generator functions g_j(to, from), all on the same state
// space, stored as dense matrices in [to][from] layout.
struct GeneratorSet {
    std::vector<Matrix> list;

    int dim() const { return static_cast<int>(list.size()); }

    static GeneratorSet make(std::vector<Matrix> gens) {
        if (gens.empty()) throw input_error("generator set must be nonempty");
        const auto rows = gens.front().rows();
        for (const auto& g : gens) {
            if (g.rows() != rows || g.cols() != rows)
                throw input_error("generators must be square matrices of one shape");
            if (!all_finite(g)) throw input_error("generator entries must be finite");
        }
        GeneratorSet s;
        s.list = std::move(gens);
        return s;
    }
};

struct IndependenceCertificate {
    bool independent = false;
    double min_singular_value = 0.0;
};

// Generators are dependent exactly when some nontrivial combination equals
// f(to) - f(from) + c on the support. Restrict everything to the support
// entries, project the generators onto the orthogonal complement of the span
// of those nuisance functions, and inspect the smallest singular value.
inline IndependenceCertificate check_independence(const TransitionKernel& base,
                                                  const GeneratorSet& gens) {
    const auto& support = base.support();
    const int ns = static_cast<int>(support.size());
    const int n = base.size();
    const int d = gens.dim();
    if (gens.list.front().rows() != n) throw input_error("generator shape does not match kernel");

    Matrix nuis(ns, n + 1);
    Matrix g(ns, d);
    for (int r = 0; r < ns; ++r) {
        const auto [to, from] = support[r];
        for (int y = 0; y < n; ++y)
            nuis(r, y) = (to == y ? 1.0 : 0.0) - (from == y ? 1.0 : 0.0);
        nuis(r, n) = 1.0;
        for (int j = 0; j < d; ++j) g(r, j) = gens.list[j](to, from);
    }

    Eigen::JacobiSVD<Matrix> nsvd(nuis, Eigen::ComputeThinU);
    const double cutoff = 1e-12 * nsvd.singularValues()(0);
    int rank = 0;
    for (int i = 0; i < nsvd.singularValues().size(); ++i)
        if (nsvd.singularValues()(i) > cutoff) ++rank;
    const Matrix q = nsvd.matrixU().leftCols(rank);
    const Matrix resid = g - q * (q.transpose() * g);

    Eigen::JacobiSVD<Matrix> rsvd(resid);
    IndependenceCertificate cert;
    cert.min_singular_value = rsvd.singularValues()(rsvd.singularValues().size() - 1);
    cert.independent = cert.min_singular_value > 1e-9;
    return cert;
}

// A member of the family: natural parameter, log principal eigenvalue of the
// tilted matrix, normalized kernel, its stationary law, and the expectation
// parameter (gradient of the potential).
struct FamilyPoint {
    Vector theta;
    double phi = 0.0;
    TransitionKernel kernel;
    Vector stationary;
    Vector eta;
};

struct FisherMatrix {
    Matrix entries;
    double step = 0.0;  // finite-difference step used
};

enum class SolveMethod { newton, nelder_mead };

// Exponential family of transition matrices over a fixed irreducible base:
// tilt the base entrywise by exp(sum_j theta^j g_j), renormalize through the
// principal eigenpair.
class ExpFamily {
  public:
    ExpFamily(TransitionKernel base, GeneratorSet gens)
        : base_(std::move(base)), gens_(std::move(gens)) {
        if (!base_.irreducible()) throw structural_error("base kernel must be irreducible");
        if (gens_.list.front().rows() != base_.size())
            throw input_error("generator shape does not match base kernel");
        log_base_ = Matrix::Zero(base_.size(), base_.size());
        for (auto [to, from] : base_.support()) log_base_(to, from) = std::log(base_(to, from));
        cert_ = check_independence(base_, gens_);
    }

    const TransitionKernel& base() const { return base_; }
    const GeneratorSet& generators() const { return gens_; }
    const IndependenceCertificate& certificate() const { return cert_; }
    int dim() const { return gens_.dim(); }
    int size() const { return base_.size(); }

    // Entrywise logarithms of the tilted matrix on the support (off-support
    // entries are zero placeholders); safe for parameters where the linear
    // tilt would overflow.
    Matrix tilted_logs(const Vector& theta) const {
        check_theta(theta);
        return log_tilt(theta);
    }

    // Entrywise tilted matrix; nonnegative, same support as the base.
    Matrix tilt(const Vector& theta) const {
        check_theta(theta);
        Matrix out = Matrix::Zero(size(), size());
        const Matrix logs = log_tilt(theta);
        for (auto [to, from] : base_.support()) out(to, from) = std::exp(logs(to, from));
        return out;
    }

    // Log principal eigenvalue of the tilted matrix; zero at theta = 0.
    double potential(const Vector& theta) const {
        check_theta(theta);
        if (theta.isZero(0.0)) return 0.0;
        return perron_frobenius_log(log_tilt(theta), base_.support(), pf_tol_).log_eigenvalue;
    }

    FamilyPoint point(const Vector& theta) const {
        check_theta(theta);
        if (theta.isZero(0.0)) {
            Vector pi = stationary_distribution(base_);
            return FamilyPoint{theta, 0.0, base_, pi, expectations(base_.matrix(), pi)};
        }
        const Matrix logs = log_tilt(theta);
        const auto pf = perron_frobenius_log(logs, base_.support(), pf_tol_);
        // Normalized kernel: lambda^{-1} P3(to) tilt(to,from) / P3(from),
        // column-renormalized to absorb the eigen-residual.
        Matrix w = Matrix::Zero(size(), size());
        for (auto [to, from] : base_.support())
            w(to, from) = std::exp(logs(to, from) - pf.log_eigenvalue) * pf.left_vec(to) /
                          pf.left_vec(from);
        for (int from = 0; from < size(); ++from) w.col(from) /= w.col(from).sum();
        TransitionKernel kernel = TransitionKernel::from_columns(w);
        Vector pi = pf.left_vec.cwiseProduct(pf.right_vec);
        pi /= pi.sum();
        Vector refined = detail::stationary_by_solve(w);
        if ((refined - pi).cwiseAbs().maxCoeff() <= 1e-9 && refined.minCoeff() > 0.0)
            pi = refined;
        Vector eta = expectations(w, pi);
        return FamilyPoint{theta, pf.log_eigenvalue, std::move(kernel), std::move(pi),
                           std::move(eta)};
    }

    // Hessian of the potential by central differences of the exact gradient.
    FisherMatrix fisher(const Vector& theta) const {
        check_theta(theta);
        const int d = dim();
        const double h = 1e-4 * std::max(1.0, theta.norm());
        Matrix m(d, d);
        for (int j = 0; j < d; ++j) {
            Vector tp = theta, tm = theta;
            tp(j) += h;
            tm(j) -= h;
            m.col(j) = (point(tp).eta - point(tm).eta) / (2.0 * h);
        }
        Matrix sym = 0.5 * (m + m.transpose());
        if (cert_.independent) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
            if (es.eigenvalues().minCoeff() <= 0.0)
                throw numerical_error(
                    "Fisher matrix not positive definite; retry with a smaller step");
        }
        return FisherMatrix{std::move(sym), h};
    }

    // Invert the gradient map: find theta with eta(theta) = eta.
    Vector theta_from_eta(const Vector& eta, SolveMethod method = SolveMethod::newton) const {
        require_faithful();
        if (eta.size() != dim() || !all_finite(eta))
            throw input_error("expectation vector has wrong size or non-finite entries");
        check_achievable(eta);
        if (method == SolveMethod::newton) return newton_solve(eta, Vector::Zero(dim()), {});
        return nelder_mead_solve(eta);
    }

    // Fix the first k expectation coordinates and the trailing d-k natural
    // coordinates; solve for the free head by maximizing
    // sum_{j<k} eta_j theta^j - phi(theta).
    FamilyPoint solve_mixed_coordinates(const Vector& eta_head, const Vector& theta_tail) const {
        require_faithful();
        const int k = static_cast<int>(eta_head.size());
        const int d = dim();
        if (k < 1 || k > d || eta_head.size() + theta_tail.size() != d)
            throw input_error("mixed-coordinate block sizes must partition the dimension");
        if (!all_finite(eta_head) || !all_finite(theta_tail))
            throw input_error("mixed coordinates must be finite");
        check_achievable(eta_head);
        Vector start = Vector::Zero(d);
        start.tail(d - k) = theta_tail;
        Vector theta = newton_solve(eta_head, start, k);
        return point(theta);
    }

  private:
    void check_theta(const Vector& theta) const {
        if (theta.size() != dim()) throw input_error("theta has wrong dimension");
        if (!all_finite(theta)) throw input_error("theta must be finite");
    }

    void require_faithful() const {
        if (!cert_.independent)
            throw structural_error(
                "generators are dependent; the parametrization is not one-to-one");
    }

    // Every stationary expectation is a strictly positive-weight average of
    // generator values over the support, so a reachable coordinate must lie
    // strictly between the extreme generator values; closed-boundary or
    // exterior targets are attained by no finite natural parameter.
    void check_achievable(const Vector& eta_head) const {
        for (int j = 0; j < eta_head.size(); ++j) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (auto [to, from] : base_.support()) {
                const double g = gens_.list[j](to, from);
                if (g < lo) lo = g;
                if (g > hi) hi = g;
            }
            if (!(eta_head(j) > lo && eta_head(j) < hi))
                throw range_error("expectation coordinate " + std::to_string(j) +
                                  " lies outside the open range of generator values on the "
                                  "support; no natural parameter attains it");
        }
    }

    // point() for solver iterates: a tilt extreme enough to underflow support
    // entries certifies that the target lies outside the achievable set.
    FamilyPoint solver_point(const Vector& theta) const {
        try {
            return point(theta);
        } catch (const structural_error&) {
            throw range_error(
                "iterates escaped: the requested expectation vector lies outside "
                "the achievable set");
        }
    }

    Matrix log_tilt(const Vector& theta) const {
        Matrix logs = log_base_;
        for (int j = 0; j < dim(); ++j) logs += theta(j) * gens_.list[j];
        return logs;
    }

    Vector expectations(const Matrix& w, const Vector& pi) const {
        Vector eta(dim());
        for (int j = 0; j < dim(); ++j) {
            double s = 0.0;
            for (auto [to, from] : base_.support())
                s += gens_.list[j](to, from) * w(to, from) * pi(from);
            eta(j) = s;
        }
        return eta;
    }

    // Objective value for the line search; nullopt marks an infeasible probe
    // (overflowed tilt, numerically lost support).
    std::optional<double> objective(const Vector& eta_head, const Vector& theta, int k) const {
        try {
            return eta_head.dot(theta.head(k)) - potential(theta);
        } catch (const error&) {
            return std::nullopt;
        }
    }

    // Damped Newton ascent on the strictly concave map
    //   theta_head -> sum_j eta_j theta^j - phi(theta),
    // with the exact gradient eta_head - eta(theta)_head and a
    // finite-difference Hessian block. Escape beyond |theta| = 1e3 signals an
    // unattainable expectation vector.
    Vector newton_solve(const Vector& eta_head, Vector theta, std::optional<int> head) const {
        const int d = dim();
        const int k = head.value_or(d);
        const double gtol = 1e-8;
        for (int it = 0; it < 200; ++it) {
            if (theta.cwiseAbs().maxCoeff() > 1e3)
                throw range_error(
                    "iterates escaped: the requested expectation vector lies outside "
                    "the achievable set");
            const FamilyPoint fp = solver_point(theta);
            const Vector grad = eta_head - fp.eta.head(k);
            if (grad.cwiseAbs().maxCoeff() <= gtol) return theta;

            Matrix hess(k, k);
            const double h = 1e-4 * std::max(1.0, theta.norm());
            for (int j = 0; j < k; ++j) {
                Vector tp = theta, tm = theta;
                tp(j) += h;
                tm(j) -= h;
                hess.col(j) = (solver_point(tp).eta.head(k) - solver_point(tm).eta.head(k)) /
                              (2.0 * h);
            }
            hess = 0.5 * (hess + hess.transpose());

            Vector step = Eigen::LDLT<Matrix>(hess).solve(grad);
            if (!all_finite(step) || grad.dot(step) <= 0.0) step = grad;

            const double base_val = eta_head.dot(theta.head(k)) - fp.phi;
            const double slope = grad.dot(step);
            double t = 1.0;
            bool accepted = false;
            for (int half = 0; half < 60; ++half, t *= 0.5) {
                Vector trial = theta;
                trial.head(k) += t * step;
                const auto val = objective(eta_head, trial, k);
                if (val && *val >= base_val + 1e-4 * t * slope) {
                    theta = trial;
                    accepted = true;
                    break;
                }
            }
            if (!accepted)
                throw numerical_error("line search failed while solving for theta");
        }
        throw numerical_error("theta solve did not converge within the iteration budget");
    }

    // Derivative-free fallback: minimize phi(theta) - eta.theta with restarts
    // until the exact gradient check passes.
    Vector nelder_mead_solve(const Vector& eta) const {
        Vector start = Vector::Zero(dim());
        double step = 0.5;
        for (int round = 0; round < 8; ++round) {
            auto f = [&](const Vector& th) {
                if (th.cwiseAbs().maxCoeff() > 1e3)
                    throw range_error(
                        "iterates escaped: the requested expectation vector lies outside "
                        "the achievable set");
                const auto val = objective(eta, th, dim());
                return val ? -*val : std::numeric_limits<double>::infinity();
            };
            NelderMeadOptions opt;
            opt.init_step = step;
            opt.diam_tol = 1e-11;
            opt.max_iter = 4000 * dim();
            const auto res = nelder_mead(f, start, opt);
            const Vector achieved = solver_point(res.x).eta;
            if ((achieved - eta).cwiseAbs().maxCoeff() <= 1e-8) return res.x;
            start = res.x;
            step *= 0.2;
        }
        throw numerical_error("derivative-free theta solve did not reach tolerance");
    }

    TransitionKernel base_;
    GeneratorSet gens_;
    IndependenceCertificate cert_;
    Matrix log_base_;
    double pf_tol_ = 1e-13;
};

}  // namespace markovig
