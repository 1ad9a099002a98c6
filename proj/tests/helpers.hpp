#pragma once

// Shared fixtures and independent oracles for the test suite. Everything
// here is deliberately simple and closed-form so it can serve as ground
// truth for the library under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "markovig/markovig.hpp"

namespace testutil {

using markovig::Matrix;
using markovig::TransitionKernel;
using markovig::Vector;

// Two-state fixture: from-state rows (0.7, 0.3) and (0.4, 0.6).
inline TransitionKernel m2_kernel() {
    Matrix m(2, 2);  // [to][from]
    m << 0.7, 0.4,
         0.3, 0.6;
    return TransitionKernel::from_columns(m);
}

// Destination indicator g(x, x') = 1{x = 1} as a [to][from] matrix.
inline Matrix m2_generator() {
    Matrix g(2, 2);
    g << 0.0, 0.0,
         1.0, 1.0;
    return g;
}

inline TransitionKernel swap_kernel() {
    Matrix m(2, 2);
    m << 0.0, 1.0,
         1.0, 0.0;
    return TransitionKernel::from_columns(m);
}

// Deterministic k-cycle 0 -> 1 -> ... -> k-1 -> 0.
inline TransitionKernel cycle_kernel(int k) {
    Matrix m = Matrix::Zero(k, k);
    for (int from = 0; from < k; ++from) m((from + 1) % k, from) = 1.0;
    return TransitionKernel::from_columns(m);
}

inline TransitionKernel random_kernel(std::mt19937& rng, int size, double floor = 0.05) {
    std::uniform_real_distribution<double> u(floor, 1.0);
    Matrix m(size, size);
    for (int from = 0; from < size; ++from) {
        double sum = 0.0;
        for (int to = 0; to < size; ++to) {
            m(to, from) = u(rng);
            sum += m(to, from);
        }
        for (int to = 0; to < size; ++to) m(to, from) /= sum;
    }
    return TransitionKernel::from_columns(m);
}

// Indicator generator for the (to, from) entry.
inline Matrix indicator(int size, int to, int from) {
    Matrix g = Matrix::Zero(size, size);
    g(to, from) = 1.0;
    return g;
}

// Independent oracle for the M2 potential: with the destination indicator,
// the tilted matrix has characteristic polynomial
// lambda^2 - (0.7 + 0.6 e^t) lambda + (0.42 - 0.12) e^t; phi is the log of
// its largest root.
inline double m2_phi_oracle(double theta) {
    const double et = std::exp(theta);
    const double tr = 0.7 + 0.6 * et;         // trace of the tilted matrix
    const double det = (0.7 * 0.6 - 0.3 * 0.4) * et;  // determinant
    const double lam = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
    return std::log(lam);
}

// Largest eigenvalue of a 2x2 nonnegative matrix by the quadratic formula.
inline double top_eigenvalue_2x2(const Matrix& m) {
    const double tr = m(0, 0) + m(1, 1);
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
}

// Stationary law of a 2-state kernel by the closed form.
inline Vector stationary_2x2(const TransitionKernel& k) {
    const double up = k(0, 1), down = k(1, 0);
    Vector pi(2);
    pi << up / (up + down), down / (up + down);
    return pi;
}

// Classical KL divergence between finite distributions.
inline double kl(const Vector& p, const Vector& q) {
    double acc = 0.0;
    for (int i = 0; i < p.size(); ++i)
        if (p(i) > 0.0) acc += p(i) * std::log(p(i) / q(i));
    return acc;
}

// Hand-computed M2-vs-uniform relative entropy rate:
// sum_from pi(from) KL(column_from || uniform column).
inline double m2_vs_uniform_oracle() {
    const Vector pi = stationary_2x2(m2_kernel());
    Vector c0(2), c1(2), u(2);
    c0 << 0.7, 0.3;
    c1 << 0.4, 0.6;
    u << 0.5, 0.5;
    return pi(0) * kl(c0, u) + pi(1) * kl(c1, u);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov-Smirnov distance of a sample against the standard normal.
inline double ks_statistic(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = normal_cdf(xs[i]);
        d = std::max(d, std::abs(f - i / n));
        d = std::max(d, std::abs((i + 1) / n - f));
    }
    return d;
}

// Boolean reachability by repeated support powers (brute-force oracle).
inline std::vector<std::vector<bool>> reach_oracle(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<std::vector<bool>> step(n, std::vector<bool>(n, false));
    for (int to = 0; to < n; ++to)
        for (int from = 0; from < n; ++from) step[to][from] = m(to, from) > 0.0;
    auto reach = step;
    std::vector<std::vector<bool>> cur = step;
    for (int p = 2; p <= n * n; ++p) {
        std::vector<std::vector<bool>> nxt(n, std::vector<bool>(n, false));
        for (int to = 0; to < n; ++to)
            for (int mid = 0; mid < n; ++mid)
                if (cur[to][mid])
                    for (int from = 0; from < n; ++from)
                        if (step[mid][from]) nxt[to][from] = true;
        cur = nxt;
        for (int to = 0; to < n; ++to)
            for (int from = 0; from < n; ++from)
                if (cur[to][from]) reach[to][from] = true;
    }
    return reach;
}

inline bool irreducible_oracle(const Matrix& m) {
    const auto reach = reach_oracle(m);
    for (std::size_t to = 0; to < reach.size(); ++to)
        for (std::size_t from = 0; from < reach.size(); ++from)
            if (!reach[to][from]) return false;
    return true;
}

// Period of state 0 as the gcd of return times within a generous window;
// the set of return times is closed under addition, so the gcd stabilizes
// well inside 4 n^2 steps for the sizes used in tests.
inline int period_oracle(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    Matrix cur = Matrix::Identity(n, n);
    Matrix step = (m.array() > 0.0).cast<double>();
    int g = 0;
    for (int t = 1; t <= 4 * n * n; ++t) {
        cur = step * cur;
        cur = (cur.array() > 0.0).cast<double>();  // keep entries boolean
        if (cur(0, 0) > 0.0) g = g == 0 ? t : std::gcd(g, t);
    }
    return g;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Run the CLI binary (path injected at compile time) and capture both streams.
inline CliResult run_cli(const std::string& args) {
    CliResult res;
    const std::string err_path = std::string(MARKOVIG_CLI_PATH) + ".stderr.tmp";
    const std::string cmd = std::string(MARKOVIG_CLI_PATH) + " " + args + " 2>" + err_path;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream err(err_path, std::ios::binary);
    res.err.assign(std::istreambuf_iterator<char>(err), std::istreambuf_iterator<char>());
    return res;
}

inline std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = std::string("/tmp/markovig-test-") + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace testutil
