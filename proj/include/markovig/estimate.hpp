#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "markovig/errors.hpp"
#include "markovig/expfam.hpp"
#include "markovig/linalg.hpp"
#include "markovig/projection.hpp"

namespace markovig {

// Observed state path x_1 ... x_{n+1} (n transitions).
struct Trajectory {
    std::vector<int> states;

    int n() const { return static_cast<int>(states.size()) - 1; }

    void validate(int state_count) const {
        if (states.size() < 2) throw input_error("trajectory needs at least one transition");
        for (int s : states)
            if (s < 0 || s >= state_count) throw input_error("trajectory state out of range");
    }
};

// Per-generator time average (sum of g over transitions, divided by n), with
// an optional per-state offset h applied at the initial state.
inline Vector sample_mean(const Trajectory& traj, const GeneratorSet& gens,
                          const std::optional<Vector>& offset = {}) {
    const int states = static_cast<int>(gens.list.front().rows());
    traj.validate(states);
    if (offset && offset->size() != states)
        throw input_error("offset function must assign one value per state");
    const int n = traj.n();
    Vector out(gens.dim());
    for (int j = 0; j < gens.dim(); ++j) {
        double acc = offset ? (*offset)(traj.states[0]) : 0.0;
        const Matrix& g = gens.list[j];
        for (int i = 0; i < n; ++i) acc += g(traj.states[i + 1], traj.states[i]);
        out(j) = acc / n;
    }
    return out;
}

struct EstimateReport {
    int n = 0;
    Vector eta_hat;
    std::optional<Vector> theta_hat;
    std::optional<Vector> xi_hat;
    double curved_divergence = std::numeric_limits<double>::quiet_NaN();
    std::string diagnostic;  // empty when every stage succeeded
};

inline EstimateReport estimate_expectation(const Trajectory& traj, const ExpFamily& fam) {
    EstimateReport rep;
    rep.n = traj.n();
    rep.eta_hat = sample_mean(traj, fam.generators());
    return rep;
}

// Add the natural-parameter estimate to a report. Solver failures (e.g. an
// empirical mean outside the achievable set) are recorded, not thrown.
inline void estimate_natural(EstimateReport& rep, const ExpFamily& fam,
                             SolveMethod method = SolveMethod::newton) {
    try {
        rep.theta_hat = fam.theta_from_eta(rep.eta_hat, method);
    } catch (const error& e) {
        rep.diagnostic = e.what();
    }
}

inline EstimateReport estimate_curved(const Trajectory& traj, const CurvedFamily& cf,
                                      const CurvedEstimateOptions& opt = {}) {
    EstimateReport rep;
    rep.n = traj.n();
    rep.eta_hat = sample_mean(traj, cf.ambient().generators());
    try {
        const CurvedEstimate ce = curved_estimate(cf, rep.eta_hat, opt);
        rep.xi_hat = ce.xi;
        rep.curved_divergence = ce.divergence;
    } catch (const error& e) {
        rep.diagnostic = e.what();
    }
    return rep;
}

// Fisher-information accounting for a length-n sample path.
struct CramerRaoReport {
    int n = 0;
    Matrix fisher;            // Hessian of the potential at theta
    Matrix j1;                // Fisher information of the initial law
    Matrix joint_fisher;      // n * fisher + j1 (exact under a stationary start)
    Matrix cr_bound;          // lower bound on Cov(eta-estimators): H (nH+J1)^{-1} H
    Matrix asymptotic_bound;  // H / n
    Matrix vhat;              // stationary second moment of d/dtheta log(left PF vector)
    double sandwich_lo = std::numeric_limits<double>::quiet_NaN();  // d = 1 only
    double sandwich_hi = std::numeric_limits<double>::quiet_NaN();
};

// Left PF vector of the tilted matrix at theta, normalized to sum 1.
inline Vector left_vector_of(const ExpFamily& fam, const Vector& theta) {
    return perron_frobenius_log(fam.tilted_logs(theta), fam.base().support()).left_vec;
}

inline CramerRaoReport cramer_rao_report(const ExpFamily& fam, const Vector& theta, int n,
                                         const std::optional<Vector>& initial = {}) {
    if (n < 1) throw input_error("sample length must be at least 1");
    const int d = fam.dim();
    CramerRaoReport rep;
    rep.n = n;
    rep.fisher = fam.fisher(theta).entries;

    const double h = 1e-5;
    const FamilyPoint center = fam.point(theta);
    rep.j1 = Matrix::Zero(d, d);
    rep.vhat = Matrix::Zero(d, d);
    Matrix score_init(center.stationary.size(), d);  // d/dtheta log stationary
    Matrix score_left(center.stationary.size(), d);  // d/dtheta log left PF vector
    for (int j = 0; j < d; ++j) {
        Vector tp = theta, tm = theta;
        tp(j) += h;
        tm(j) -= h;
        const FamilyPoint pp = fam.point(tp);
        const FamilyPoint pm = fam.point(tm);
        score_init.col(j) =
            (pp.stationary.array().log() - pm.stationary.array().log()).matrix() / (2.0 * h);
        const Vector lp = left_vector_of(fam, tp);
        const Vector lm = left_vector_of(fam, tm);
        score_left.col(j) = (lp.array().log() - lm.array().log()).matrix() / (2.0 * h);
    }
    for (int x = 0; x < center.stationary.size(); ++x) {
        const Vector si = score_init.row(x);
        const Vector sl = score_left.row(x);
        if (!initial) rep.j1 += center.stationary(x) * si * si.transpose();
        rep.vhat += center.stationary(x) * sl * sl.transpose();
    }
    // A theta-independent initial law contributes no information (j1 = 0).

    rep.joint_fisher = n * rep.fisher + rep.j1;
    rep.cr_bound = rep.fisher *
                   rep.joint_fisher.ldlt().solve(Matrix::Identity(d, d)) * rep.fisher;
    rep.asymptotic_bound = rep.fisher / n;
    if (d == 1) {
        const double nphi = n * rep.fisher(0, 0);
        const double f = 2.0 * std::sqrt(rep.vhat(0, 0) / nphi);
        rep.sandwich_lo = nphi * (1.0 - f) * (1.0 - f);
        rep.sandwich_hi = nphi * (1.0 + f) * (1.0 + f);
    }
    return rep;
}

}  // namespace markovig
