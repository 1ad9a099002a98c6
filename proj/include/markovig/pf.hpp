#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "markovig/errors.hpp"
#include "markovig/linalg.hpp"

namespace markovig {

// Finite state space; labels are optional display names.
struct StateSpace {
    int size = 0;
    std::vector<std::string> labels;  // empty, or one unique label per state

    void validate() const {
        if (size < 2) throw input_error("state space needs at least 2 states");
        if (!labels.empty()) {
            if (static_cast<int>(labels.size()) != size)
                throw input_error("label count must match state count");
            auto copy = labels;
            std::sort(copy.begin(), copy.end());
            if (std::adjacent_find(copy.begin(), copy.end()) != copy.end())
                throw input_error("state labels must be unique");
        }
    }
};

struct StructureReport {
    SupportSet support;
    bool irreducible = false;
    bool ergodic = false;
};

namespace detail {

// Digraph on states with an edge from -> to whenever m(to,from) > 0.
inline std::vector<std::vector<int>> out_edges(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<std::vector<int>> adj(n);
    for (int from = 0; from < n; ++from)
        for (int to = 0; to < n; ++to)
            if (m(to, from) > 0.0) adj[from].push_back(to);
    return adj;
}

inline std::vector<char> reachable(const std::vector<std::vector<int>>& adj, int start) {
    std::vector<char> seen(adj.size(), 0);
    std::queue<int> q;
    q.push(start);
    seen[start] = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                q.push(v);
            }
    }
    return seen;
}

}  // namespace detail

// Support digraph analysis: strong connectivity and aperiodicity.
inline StructureReport check_structure(const Matrix& m) {
    if (m.rows() != m.cols()) throw input_error("transition matrix must be square");
    if (m.rows() < 2) throw input_error("transition matrix needs at least 2 states");
    if (!all_finite(m) || m.minCoeff() < 0.0)
        throw input_error("transition matrix entries must be finite and nonnegative");
    const int n = static_cast<int>(m.rows());
    for (int from = 0; from < n; ++from)
        if (m.col(from).maxCoeff() <= 0.0)
            throw structural_error("state " + std::to_string(from) + " has no outgoing transition");

    StructureReport rep;
    rep.support = support_of(m);

    auto adj = detail::out_edges(m);
    std::vector<std::vector<int>> radj(n);
    for (int u = 0; u < n; ++u)
        for (int v : adj[u]) radj[v].push_back(u);
    auto fwd = detail::reachable(adj, 0);
    auto bwd = detail::reachable(radj, 0);
    rep.irreducible = true;
    for (int v = 0; v < n; ++v)
        if (!fwd[v] || !bwd[v]) rep.irreducible = false;

    if (rep.irreducible) {
        // Period = gcd over all edges u->v of (level[u] + 1 - level[v]),
        // with BFS levels from state 0; ergodic means period 1.
        std::vector<int> level(n, -1);
        std::queue<int> q;
        q.push(0);
        level[0] = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[u])
                if (level[v] < 0) {
                    level[v] = level[u] + 1;
                    q.push(v);
                }
        }
        long long g = 0;
        for (int u = 0; u < n; ++u)
            for (int v : adj[u]) g = std::gcd(g, static_cast<long long>(level[u] + 1 - level[v]));
        rep.ergodic = (g == 1);
    }
    return rep;
}

// Principal eigenvalue (stored as its logarithm) with positive right/left
// eigenvectors, each normalized to sum 1.
struct PFDecomposition {
    double log_eigenvalue = 0.0;
    Vector right_vec;
    Vector left_vec;
    double residual = 0.0;  // max over both eigen-residuals, infinity norm
};

namespace detail {

// Power iteration on m and its transpose. A constant shift by the largest
// entry makes the matrix primitive without changing eigenvectors; the shift
// is subtracted from the eigenvalue estimate afterwards. The eigenvalue is
// taken from the bilinear quotient left'*m*right / left'*right, and both
// residuals are measured against the unshifted matrix.
inline PFDecomposition power_iteration(const Matrix& m, double tol, int max_iter) {
    const int n = static_cast<int>(m.rows());
    const double scale = m.maxCoeff();
    if (!(scale > 0.0)) throw structural_error("matrix has no positive entry");
    const double shift = scale;
    Matrix a = m;
    a.diagonal().array() += shift;
    const Matrix at = a.transpose();

    Vector right = Vector::Constant(n, 1.0 / n);
    Vector left = Vector::Constant(n, 1.0 / n);
    double lambda = 0.0, residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        right = a * right;
        right /= right.sum();
        left = at * left;
        left /= left.sum();
        const Vector mr = m * right;
        const Vector ml = m.transpose() * left;
        lambda = left.dot(mr) / left.dot(right);
        residual = std::max((mr - lambda * right).cwiseAbs().maxCoeff(),
                            (ml - lambda * left).cwiseAbs().maxCoeff());
        if (residual <= tol * scale) {
            PFDecomposition d;
            d.log_eigenvalue = std::log(lambda);
            d.right_vec = right;
            d.left_vec = left;
            d.residual = residual;
            return d;
        }
    }
    throw numerical_error("power iteration did not reach tolerance (residual " +
                          std::to_string(residual) + ")");
}

}  // namespace detail

// Perron-Frobenius pair of an irreducible nonnegative matrix.
inline PFDecomposition perron_frobenius(const Matrix& m, double tol = 1e-13,
                                        int max_iter = 100000) {
    auto rep = check_structure(m);
    if (!rep.irreducible) throw structural_error("matrix support is not strongly connected");
    if (!(tol > 0.0) || max_iter < 1) throw input_error("bad solver parameters");
    return detail::power_iteration(m, tol, max_iter);
}

// Same decomposition for a matrix given entrywise in log scale (off-support
// entries are ignored). Factoring out the largest log entry keeps the linear
// matrix in a safe floating range; the factor moves into log_eigenvalue.
inline PFDecomposition perron_frobenius_log(const Matrix& log_entries, const SupportSet& support,
                                            double tol = 1e-13, int max_iter = 100000) {
    if (support.empty()) throw structural_error("empty support");
    double top = -std::numeric_limits<double>::infinity();
    for (auto [to, from] : support) top = std::max(top, log_entries(to, from));
    Matrix m = Matrix::Zero(log_entries.rows(), log_entries.cols());
    for (auto [to, from] : support) m(to, from) = std::exp(log_entries(to, from) - top);
    auto rep = check_structure(m);
    if (!rep.irreducible) throw structural_error("matrix support is not strongly connected");
    auto d = detail::power_iteration(m, tol, max_iter);
    d.log_eigenvalue += top;
    return d;
}

// Column-stochastic transition matrix in [to][from] layout together with its
// support-structure certificates. Row-stochastic data (the on-disk layout)
// must be transposed on ingest via from_rows.
class TransitionKernel {
  public:
    static TransitionKernel from_columns(Matrix m) {
        auto rep = check_structure(m);  // validates shape, sign, zero columns
        const int n = static_cast<int>(m.rows());
        for (int from = 0; from < n; ++from) {
            const double s = m.col(from).sum();
            if (std::abs(s - 1.0) > 1e-12)
                throw input_error("column " + std::to_string(from) +
                                  " does not sum to 1 (sum " + std::to_string(s) + ")");
        }
        return TransitionKernel(std::move(m), std::move(rep));
    }

    static TransitionKernel from_rows(const Matrix& m) { return from_columns(m.transpose()); }

    const Matrix& matrix() const { return mat_; }
    double operator()(int to, int from) const { return mat_(to, from); }
    int size() const { return static_cast<int>(mat_.rows()); }
    const SupportSet& support() const { return structure_.support; }
    bool irreducible() const { return structure_.irreducible; }
    bool ergodic() const { return structure_.ergodic; }

  private:
    TransitionKernel(Matrix m, StructureReport rep)
        : mat_(std::move(m)), structure_(std::move(rep)) {}
    Matrix mat_;
    StructureReport structure_;
};

namespace detail {

// Exact stationary solve: replace one (redundant) row of I - W with the
// normalization constraint. Used to polish eigenvector-based estimates.
inline Vector stationary_by_solve(const Matrix& w) {
    const int n = static_cast<int>(w.rows());
    Matrix a = Matrix::Identity(n, n) - w;
    a.row(0) = Eigen::RowVectorXd::Ones(n);
    Vector b = Vector::Zero(n);
    b(0) = 1.0;
    Vector x = a.fullPivLu().solve(b);
    if (!all_finite(x)) throw numerical_error("stationary solve produced non-finite values");
    return x;
}

}  // namespace detail

// Stationary distribution of an irreducible kernel: the normalized product
// left∘right of the PF pair, refined by a direct solve of the singular system.
inline Vector stationary_distribution(const TransitionKernel& k, double tol = 1e-13,
                                      int max_iter = 100000) {
    if (!k.irreducible()) throw structural_error("kernel is not irreducible");
    auto d = detail::power_iteration(k.matrix(), tol, max_iter);
    Vector p = d.left_vec.cwiseProduct(d.right_vec);
    p /= p.sum();
    Vector refined = detail::stationary_by_solve(k.matrix());
    if ((refined - p).cwiseAbs().maxCoeff() > 1e-9 || refined.minCoeff() <= 0.0)
        return p;  // keep the eigenvector route if the solve disagrees
    return refined;
}

}  // namespace markovig
