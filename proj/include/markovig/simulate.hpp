#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

#include "markovig/errors.hpp"
#include "markovig/estimate.hpp"
#include "markovig/expfam.hpp"
#include "markovig/linalg.hpp"
#include "markovig/pf.hpp"
#include "markovig/rng.hpp"

namespace markovig {

struct SamplerConfig {
    TransitionKernel kernel;
    std::optional<Vector> initial;  // nullopt: start from the stationary law
    int n = 1;
    std::uint64_t master_seed = 0;
    int trials = 1;
    int threads = 1;

    void validate() const {
        if (n < 1) throw input_error("trajectory length must be at least 1");
        if (trials < 1) throw input_error("trial count must be at least 1");
        if (threads < 1) throw input_error("thread count must be at least 1");
        if (initial) {
            if (initial->size() != kernel.size())
                throw input_error("initial law must have one entry per state");
            if (initial->minCoeff() < 0.0 || std::abs(initial->sum() - 1.0) > 1e-12)
                throw input_error("initial law must be a probability vector");
        }
    }
};

namespace detail {

inline int inverse_cdf(const Vector& probs, double u) {
    double acc = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
        acc += probs(i);
        if (u < acc) return i;
    }
    for (int i = n - 1; i >= 0; --i)  // guard against rounding in the total
        if (probs(i) > 0.0) return i;
    return n - 1;
}

inline Vector resolve_initial(const TransitionKernel& k, const std::optional<Vector>& initial) {
    if (initial) return *initial;
    if (!k.irreducible())
        throw structural_error("stationary start requires an irreducible kernel");
    return stationary_by_solve(k.matrix());
}

// Guard on the exhaustive-enumeration size size^(n+1).
inline void check_enumeration_size(int size, int n) {
    const double total = std::pow(static_cast<double>(size), n + 1);
    if (total > 1e7)
        throw input_error("exhaustive enumeration over " + std::to_string(size) + "^" +
                          std::to_string(n + 1) + " trajectories exceeds the 1e7 cap");
}

}  // namespace detail

// One trajectory by inverse-CDF sampling; draw s of trial t is
// uniform(t, s), so trials and steps are independent of execution order.
inline Trajectory sample(const SamplerConfig& cfg, int trial_index = 0) {
    cfg.validate();
    const Vector p0 = detail::resolve_initial(cfg.kernel, cfg.initial);
    const CounterRng rng{cfg.master_seed};
    Trajectory traj;
    traj.states.resize(cfg.n + 1);
    traj.states[0] = detail::inverse_cdf(p0, rng.uniform(trial_index, 0));
    for (int i = 1; i <= cfg.n; ++i)
        traj.states[i] = detail::inverse_cdf(cfg.kernel.matrix().col(traj.states[i - 1]),
                                             rng.uniform(trial_index, i));
    return traj;
}

struct Moments {
    Vector mean;
    Matrix cov;
};

// Exact mean and covariance of the summed generators g^n over all
// trajectories of length n+1 (brute-force enumeration).
inline Moments exhaustive_moments(const TransitionKernel& kernel,
                                  const std::optional<Vector>& initial, const GeneratorSet& gens,
                                  int n) {
    if (n < 1) throw input_error("trajectory length must be at least 1");
    const int size = kernel.size();
    detail::check_enumeration_size(size, n);
    const Vector p0 = detail::resolve_initial(kernel, initial);
    const int d = gens.dim();

    Vector mean = Vector::Zero(d);
    Matrix second = Matrix::Zero(d, d);
    double total_prob = 0.0;
    std::vector<Vector> gacc(n + 1, Vector::Zero(d));

    // Depth-first walk over all trajectories, reusing prefix products.
    std::vector<int> state(n + 1, 0);
    auto recurse = [&](auto&& self, int pos, double prob) -> void {
        if (pos == n + 1) {
            total_prob += prob;
            const Vector& g = gacc[n];
            mean += prob * g;
            second.selfadjointView<Eigen::Lower>().rankUpdate(g, prob);
            return;
        }
        for (int next = 0; next < size; ++next) {
            const double p =
                prob * (pos == 0 ? p0(next) : kernel(next, state[pos - 1]));
            if (p == 0.0) continue;
            state[pos] = next;
            if (pos > 0) {
                gacc[pos] = gacc[pos - 1];
                for (int j = 0; j < d; ++j)
                    gacc[pos](j) += gens.list[j](next, state[pos - 1]);
            }
            self(self, pos + 1, p);
        }
    };
    recurse(recurse, 0, 1.0);

    if (std::abs(total_prob - 1.0) > 1e-10)
        throw numerical_error("enumeration probabilities sum to " + std::to_string(total_prob));
    Matrix cov = Matrix(second.selfadjointView<Eigen::Lower>()) - mean * mean.transpose();
    return Moments{std::move(mean), std::move(cov)};
}

// Exact Fisher information of the length-(n+1) trajectory distribution at
// theta, by enumeration with finite-difference scores. A stationary start
// (initial = nullopt) lets the initial law vary with theta; a fixed vector
// contributes no score.
inline Matrix exhaustive_fisher(const ExpFamily& fam, const Vector& theta,
                                const std::optional<Vector>& initial, int n,
                                double step = 1e-5) {
    if (n < 1) throw input_error("trajectory length must be at least 1");
    const int size = fam.size();
    detail::check_enumeration_size(size, n);
    const int d = fam.dim();

    const FamilyPoint center = fam.point(theta);
    const Vector p0 = initial ? *initial : center.stationary;

    // Log-kernels and log-initials at theta +- step e_j.
    std::vector<Matrix> logk_p(d), logk_m(d);
    std::vector<Vector> logp0_p(d), logp0_m(d);
    for (int j = 0; j < d; ++j) {
        Vector tp = theta, tm = theta;
        tp(j) += step;
        tm(j) -= step;
        const FamilyPoint pp = fam.point(tp);
        const FamilyPoint pm = fam.point(tm);
        logk_p[j] = pp.kernel.matrix().unaryExpr([](double v) { return v > 0 ? std::log(v) : 0.0; });
        logk_m[j] = pm.kernel.matrix().unaryExpr([](double v) { return v > 0 ? std::log(v) : 0.0; });
        logp0_p[j] = initial ? p0.array().log().matrix() : pp.stationary.array().log().matrix();
        logp0_m[j] = initial ? p0.array().log().matrix() : pm.stationary.array().log().matrix();
    }

    Matrix info = Matrix::Zero(d, d);
    double total_prob = 0.0;
    std::vector<int> state(n + 1, 0);
    std::vector<Vector> score(n + 1, Vector::Zero(d));  // prefix log-likelihood differences
    auto recurse = [&](auto&& self, int pos, double prob) -> void {
        if (pos == n + 1) {
            total_prob += prob;
            const Vector s = score[n] / (2.0 * step);
            info.selfadjointView<Eigen::Lower>().rankUpdate(s, prob);
            return;
        }
        for (int next = 0; next < size; ++next) {
            const double p =
                prob * (pos == 0 ? p0(next) : center.kernel(next, state[pos - 1]));
            if (p == 0.0) continue;
            state[pos] = next;
            if (pos == 0) {
                for (int j = 0; j < d; ++j) score[0](j) = logp0_p[j](next) - logp0_m[j](next);
            } else {
                for (int j = 0; j < d; ++j)
                    score[pos](j) = score[pos - 1](j) + logk_p[j](next, state[pos - 1]) -
                                    logk_m[j](next, state[pos - 1]);
            }
            self(self, pos + 1, p);
        }
    };
    recurse(recurse, 0, 1.0);

    if (std::abs(total_prob - 1.0) > 1e-10)
        throw numerical_error("enumeration probabilities sum to " + std::to_string(total_prob));
    return Matrix(info.selfadjointView<Eigen::Lower>());
}

// Exact divergence rate (1/n) D(W-paths || V-paths) between joint laws of
// length-(n+1) trajectories, or its Renyi analogue when s is given.
// Returns +infinity when a W-positive trajectory has no V-probability
// (relative entropy and s > 0 cases).
inline double joint_divergence_rate(const TransitionKernel& w, const TransitionKernel& v,
                                    const Vector& p_init, const Vector& q_init, int n,
                                    std::optional<double> s = {}) {
    if (w.size() != v.size()) throw input_error("kernels must share a state space");
    if (p_init.size() != w.size() || q_init.size() != w.size())
        throw input_error("initial laws must have one entry per state");
    if (s && (*s <= -1.0 || *s == 0.0))
        throw input_error("order parameter must lie in (-1,0) or (0,inf)");
    if (n < 1) throw input_error("trajectory length must be at least 1");
    detail::check_enumeration_size(w.size(), n);

    double kl_acc = 0.0;      // sum P log(P/Q)
    double renyi_acc = 0.0;   // sum P^{1+s} Q^{-s}
    bool violated = false;
    std::vector<int> state(n + 1, 0);
    auto recurse = [&](auto&& self, int pos, double logp, double logq, bool q_zero) -> void {
        if (violated) return;
        if (pos == n + 1) {
            const double p = std::exp(logp);
            if (q_zero) {
                if (!s || *s > 0.0) violated = true;
                return;  // s < 0: the term vanishes
            }
            if (s)
                renyi_acc += std::exp((1.0 + *s) * logp - *s * logq);
            else
                kl_acc += p * (logp - logq);
            return;
        }
        for (int next = 0; next < w.size(); ++next) {
            const double pw = pos == 0 ? p_init(next) : w(next, state[pos - 1]);
            if (pw == 0.0) continue;  // only W-positive trajectories matter
            const double qv = pos == 0 ? q_init(next) : v(next, state[pos - 1]);
            state[pos] = next;
            self(self, pos + 1, logp + std::log(pw),
                 qv > 0.0 ? logq + std::log(qv) : logq, q_zero || qv == 0.0);
        }
    };
    recurse(recurse, 0, 0.0, 0.0, false);

    if (violated) return std::numeric_limits<double>::infinity();
    if (s) return std::log(renyi_acc) / (*s * n);
    return kl_acc / n;
}

struct MonteCarloReport {
    std::vector<Vector> eta_hats;  // per-trial estimates, trial order
    Vector mean;
    Matrix covariance;
    Matrix n_times_variance;
    bool covariance_defined = false;
    std::optional<Vector> target_eta;
    std::optional<Matrix> target_fisher;
    double runtime_seconds = 0.0;
};

// Independent trials of the time-average estimator. Trials may run on
// several threads; each writes only its own slot and the final reduction is
// a fixed-order sweep, so the report does not depend on the thread count.
inline MonteCarloReport run_monte_carlo(const SamplerConfig& cfg, const GeneratorSet& gens) {
    cfg.validate();
    const auto start_time = std::chrono::steady_clock::now();
    const Vector p0 = detail::resolve_initial(cfg.kernel, cfg.initial);
    const int d = gens.dim();
    const int trials = cfg.trials;

    MonteCarloReport rep;
    rep.eta_hats.assign(trials, Vector::Zero(d));

    auto run_range = [&](int lo, int hi) {
        const CounterRng rng{cfg.master_seed};
        for (int t = lo; t < hi; ++t) {
            int prev = detail::inverse_cdf(p0, rng.uniform(t, 0));
            Vector acc = Vector::Zero(d);
            for (int i = 1; i <= cfg.n; ++i) {
                const int next =
                    detail::inverse_cdf(cfg.kernel.matrix().col(prev), rng.uniform(t, i));
                for (int j = 0; j < d; ++j) acc(j) += gens.list[j](next, prev);
                prev = next;
            }
            rep.eta_hats[t] = acc / cfg.n;
        }
    };
    const int threads = std::min(cfg.threads, trials);
    if (threads <= 1) {
        run_range(0, trials);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (trials + threads - 1) / threads;
        for (int k = 0; k < threads; ++k) {
            const int lo = k * chunk;
            const int hi = std::min(trials, lo + chunk);
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    // One-pass Welford sweep in trial order (deterministic reduction).
    Vector mean = Vector::Zero(d);
    Matrix m2 = Matrix::Zero(d, d);
    for (int t = 0; t < trials; ++t) {
        const Vector delta = rep.eta_hats[t] - mean;
        mean += delta / (t + 1);
        m2 += delta * (rep.eta_hats[t] - mean).transpose();
    }
    rep.mean = mean;
    rep.covariance_defined = trials >= 2;
    rep.covariance = rep.covariance_defined ? Matrix(m2 / (trials - 1)) : Matrix::Zero(d, d);
    rep.n_times_variance = cfg.n * rep.covariance;
    rep.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return rep;
}

// Monte Carlo sweep with the family's generators and analytic targets at a
// known parameter attached for comparison.
inline MonteCarloReport run_monte_carlo(const SamplerConfig& cfg, const ExpFamily& fam,
                                        const Vector& theta) {
    MonteCarloReport rep = run_monte_carlo(cfg, fam.generators());
    rep.target_eta = fam.point(theta).eta;
    rep.target_fisher = fam.fisher(theta).entries;
    return rep;
}

}  // namespace markovig
