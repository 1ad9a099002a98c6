#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "markovig/errors.hpp"
#include "markovig/expfam.hpp"
#include "markovig/linalg.hpp"
#include "markovig/pf.hpp"
#include "markovig/projection.hpp"

namespace markovig {

inline TransitionKernel uniform_kernel(int size) {
    if (size < 2) throw input_error("state space needs at least 2 states");
    return TransitionKernel::from_columns(Matrix::Constant(size, size, 1.0 / size));
}

// Family spanning all fully supported kernels: indicator generators
// g_{i,j}(to, from) = [to == i][from == j] for i = 1..m, j = 0..m (m = size-1),
// ordered with i outer and j inner. Dimension m^2 + m.
inline ExpFamily full_positive_family(const TransitionKernel& base) {
    const int size = base.size();
    if (static_cast<int>(base.support().size()) != size * size)
        throw structural_error("full family needs a kernel with all entries positive");
    std::vector<Matrix> gens;
    for (int i = 1; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            Matrix g = Matrix::Zero(size, size);
            g(i, j) = 1.0;
            gens.push_back(std::move(g));
        }
    return ExpFamily(base, GeneratorSet::make(std::move(gens)));
}

inline ExpFamily full_positive_family(int size) {
    return full_positive_family(uniform_kernel(size));
}

// Family spanning all kernels sharing the base's (restricted) support:
// indicator generators at every support entry except, per from-state, the one
// with the smallest to-index. Dimension |support| - size.
inline ExpFamily restricted_support_family(const TransitionKernel& base) {
    const int size = base.size();
    std::vector<int> min_to(size, size);
    for (auto [to, from] : base.support()) min_to[from] = std::min(min_to[from], to);
    std::vector<Matrix> gens;
    for (int from = 0; from < size; ++from)
        for (int to = 0; to < size; ++to)
            if (base(to, from) > 0.0 && to != min_to[from]) {
                Matrix g = Matrix::Zero(size, size);
                g(to, from) = 1.0;
                gens.push_back(std::move(g));
            }
    if (gens.empty())
        throw structural_error(
            "family is a single point: every state has exactly one outgoing transition");
    return ExpFamily(base, GeneratorSet::make(std::move(gens)));
}

// Mixture coordinates for the bi-stochastic polytope: permutation-matrix
// differences g_sigma^ = W_sigma - I over transpositions and 3-cycles through
// state 0, together with the dual basis under the uniform pairing
// <a, b> = sum a.*b / (m+1), each dual centered to zero mean under (I, uniform).
struct BistochasticModel {
    int m = 0;                              // size - 1; there are m^2 permutations
    std::vector<std::vector<int>> perms;    // sigma maps, from -> to
    std::vector<Matrix> ghat;               // W_sigma - I
    GeneratorSet dual_basis;                // centered duals g_sigma
    MixtureConstraints constraints;         // g_i = delta_{to,i} - delta_{to,0} = 0
    Matrix gram;
    double dual_check_error = 0.0;          // max deviation from the Kronecker pairing
};

inline BistochasticModel bistochastic_mixture(int size) {
    if (size < 2) throw input_error("state space needs at least 2 states");
    const int m = size - 1;
    BistochasticModel model;
    model.m = m;

    auto identity_perm = [size] {
        std::vector<int> p(size);
        for (int i = 0; i < size; ++i) p[i] = i;
        return p;
    };
    for (int i = 0; i <= m; ++i)  // transpositions (i j)
        for (int j = i + 1; j <= m; ++j) {
            auto p = identity_perm();
            std::swap(p[i], p[j]);
            model.perms.push_back(std::move(p));
        }
    for (int i = 1; i <= m; ++i)  // 3-cycles (0 i j): 0->i->j->0
        for (int j = i + 1; j <= m; ++j) {
            auto p = identity_perm();
            p[0] = i;
            p[i] = j;
            p[j] = 0;
            model.perms.push_back(std::move(p));
        }

    const int count = static_cast<int>(model.perms.size());  // = m^2
    for (const auto& perm : model.perms) {
        Matrix g = -Matrix::Identity(size, size);
        for (int from = 0; from < size; ++from) g(perm[from], from) += 1.0;
        model.ghat.push_back(std::move(g));
    }

    model.gram.resize(count, count);
    for (int a = 0; a < count; ++a)
        for (int b = 0; b < count; ++b)
            model.gram(a, b) = model.ghat[a].cwiseProduct(model.ghat[b]).sum() / size;
    const Matrix binv = model.gram.fullPivLu().solve(Matrix::Identity(count, count));
    if (!all_finite(binv)) throw numerical_error("permutation pairing matrix is singular");

    std::vector<Matrix> duals;
    for (int b = 0; b < count; ++b) {
        Matrix g = Matrix::Zero(size, size);
        for (int a = 0; a < count; ++a) g += binv(a, b) * model.ghat[a];
        // Generators are classes modulo f(to) - f(from) + c; pick the
        // representative with zero expectation under (identity, uniform) so
        // mixture weights coincide with expectation coordinates.
        g.array() -= g.trace() / size;
        duals.push_back(std::move(g));
    }

    double err = 0.0;
    for (int b = 0; b < count; ++b)
        for (int a = 0; a < count; ++a) {
            const double pair = duals[b].cwiseProduct(model.ghat[a]).sum() / size;
            err = std::max(err, std::abs(pair - (a == b ? 1.0 : 0.0)));
        }
    model.dual_check_error = err;
    model.dual_basis = GeneratorSet::make(std::move(duals));

    std::vector<Matrix> cons;
    for (int i = 1; i <= m; ++i) {
        Matrix g = Matrix::Zero(size, size);
        g.row(i).array() += 1.0;
        g.row(0).array() -= 1.0;
        cons.push_back(std::move(g));
    }
    model.constraints = MixtureConstraints{GeneratorSet::make(std::move(cons)),
                                           Vector::Zero(m)};
    return model;
}

// Convex combination sum_sigma eta_sigma W_sigma + (1 - sum eta) I as a plain
// matrix; the caller chooses weights keeping every entry nonnegative.
inline Matrix bistochastic_matrix(const BistochasticModel& model, const Vector& eta) {
    const int size = model.m + 1;
    if (eta.size() != static_cast<int>(model.perms.size()))
        throw input_error("one mixture weight per permutation required");
    Matrix w = Matrix::Identity(size, size);
    for (int a = 0; a < eta.size(); ++a) w += eta(a) * model.ghat[a];
    return w;
}

// Expectation coordinates of a bi-stochastic matrix under the uniform
// stationary law: constraint components, then dual-basis components.
inline std::pair<Vector, Vector> bistochastic_expectations(const BistochasticModel& model,
                                                           const Matrix& w) {
    const int size = model.m + 1;
    Vector cons(model.m);
    for (int i = 0; i < model.m; ++i)
        cons(i) = model.constraints.gens.list[i].cwiseProduct(w).sum() / size;
    Vector duals(model.dual_basis.dim());
    for (int a = 0; a < model.dual_basis.dim(); ++a)
        duals(a) = model.dual_basis.list[a].cwiseProduct(w).sum() / size;
    return {std::move(cons), std::move(duals)};
}

// Two-state fixture used throughout the tests: rows-from (0.7, 0.3) and
// (0.4, 0.6) with the destination indicator g(to, from) = [to == 1].
struct ModelDescriptor {
    std::string name;
    ExpFamily family;
    std::string notes;
};

inline TransitionKernel two_state_kernel() {
    Matrix rows(2, 2);
    rows << 0.7, 0.3, 0.4, 0.6;
    return TransitionKernel::from_rows(rows);
}

inline ModelDescriptor two_state_reference() {
    Matrix g(2, 2);
    g << 0.0, 0.0, 1.0, 1.0;
    ExpFamily fam(two_state_kernel(), GeneratorSet::make({g}));
    return ModelDescriptor{
        "m2", std::move(fam),
        "stationary (4/7, 3/7); eta(0) = 3/7; second potential derivative at 0 "
        "= 0.45481049562; divergence to the uniform kernel = 0.055648293"};
}

}  // namespace markovig
