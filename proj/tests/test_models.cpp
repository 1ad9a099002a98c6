// Prebuilt model constructors: the uniform kernel, full and
// restricted-support exponential families, the bi-stochastic mixture
// family, and the two-state reference fixture.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "markovig/divergence.hpp"
#include "markovig/models.hpp"

using namespace markovig;
using testutil::m2_kernel;

namespace {

// Stack generator matrices as rows of a (count x size^2) matrix.
Matrix stack_rows(const std::vector<const Matrix*>& gens) {
    const int size2 = static_cast<int>(gens.front()->size());
    Matrix a(static_cast<int>(gens.size()), size2);
    for (size_t r = 0; r < gens.size(); ++r) {
        const Matrix& g = *gens[r];
        int c = 0;
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) a(static_cast<int>(r), c++) = g(i, j);
    }
    return a;
}

}  // namespace

TEST_CASE("uniform kernel has equal entries and a uniform stationary law") {
    for (int size : {2, 3, 5}) {
        const TransitionKernel k = uniform_kernel(size);
        REQUIRE(k.size() == size);
        for (int to = 0; to < size; ++to)
            for (int from = 0; from < size; ++from)
                REQUIRE(k(to, from) == Catch::Approx(1.0 / size).margin(1e-15));
        REQUIRE(k.irreducible());
        const Vector pi = stationary_distribution(k);
        for (int i = 0; i < size; ++i)
            REQUIRE(pi(i) == Catch::Approx(1.0 / size).margin(1e-13));
    }
    CHECK_THROWS_AS(uniform_kernel(1), input_error);
    CHECK_THROWS_AS(uniform_kernel(0), input_error);
}

TEST_CASE("full family: dimension, generator layout, and independence") {
    for (int size : {2, 3}) {
        const ExpFamily fam = full_positive_family(size);
        const int m = size - 1;
        REQUIRE(fam.dim() == m * m + m);
        // First generator is the (to=1, from=0) indicator; destination index
        // runs in the outer loop.
        CHECK(fam.generators().list[0](1, 0) == 1.0);
        CHECK(fam.generators().list[0].sum() == 1.0);
        CHECK(fam.certificate().independent);
    }
    CHECK(full_positive_family(m2_kernel()).dim() == 2);
}

TEST_CASE("full family rejects a base kernel with structural zeros") {
    Matrix rows(3, 3);
    rows << 0.5, 0.5, 0.0, 0.2, 0.3, 0.5, 0.4, 0.3, 0.3;
    const TransitionKernel sparse = TransitionKernel::from_rows(rows);
    CHECK_THROWS_AS(full_positive_family(sparse), structural_error);
}

TEST_CASE("full family reaches an arbitrary fully supported kernel") {
    std::mt19937 rng(4242);
    for (int rep = 0; rep < 5; ++rep) {
        const TransitionKernel target = testutil::random_kernel(rng, 3);
        const Vector pi = stationary_distribution(target);
        const ExpFamily fam = full_positive_family(3);

        // Expectation coordinates of the target under the indicator set.
        Vector eta(fam.dim());
        int idx = 0;
        for (int i = 1; i < 3; ++i)
            for (int j = 0; j < 3; ++j) eta(idx++) = target(i, j) * pi(j);

        const Vector theta = fam.theta_from_eta(eta);
        const TransitionKernel reached = fam.point(theta).kernel;
        REQUIRE((reached.matrix() - target.matrix()).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("restricted family: dimension and support preservation") {
    // Three states, seven support entries, so dimension 7 - 3 = 4.
    Matrix rows(3, 3);
    rows << 0.5, 0.5, 0.0, 0.2, 0.3, 0.5, 0.4, 0.3, 0.3;
    const TransitionKernel base = TransitionKernel::from_rows(rows);
    const ExpFamily fam = restricted_support_family(base);
    REQUIRE(fam.dim() == static_cast<int>(base.support().size()) - 3);
    REQUIRE(fam.certificate().independent);

    std::mt19937 rng(99);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        Vector theta(fam.dim());
        for (int j = 0; j < theta.size(); ++j) theta(j) = unif(rng);
        const TransitionKernel moved = fam.point(theta).kernel;
        // Tilting never creates or destroys support entries.
        REQUIRE(moved.support() == base.support());
    }
}

TEST_CASE("restricted family of a deterministic kernel is a single point") {
    CHECK_THROWS_AS(restricted_support_family(testutil::cycle_kernel(3)), structural_error);
    CHECK_THROWS_AS(restricted_support_family(testutil::swap_kernel()), structural_error);
}

TEST_CASE("bistochastic mixture: permutation counts and dual pairing") {
    for (int size : {2, 3, 4}) {
        const int m = size - 1;
        const BistochasticModel model = bistochastic_mixture(size);
        REQUIRE(model.m == m);
        REQUIRE(static_cast<int>(model.perms.size()) == m * m);
        REQUIRE(static_cast<int>(model.ghat.size()) == m * m);
        REQUIRE(model.dual_basis.dim() == m * m);
        REQUIRE(model.constraints.gens.dim() == m);
        CHECK(model.dual_check_error <= 1e-10);

        // Every permutation map really is a bijection.
        for (const auto& p : model.perms) {
            std::vector<bool> seen(size, false);
            for (int from = 0; from < size; ++from) {
                REQUIRE(p[from] >= 0);
                REQUIRE(p[from] < size);
                REQUIRE_FALSE(seen[p[from]]);
                seen[p[from]] = true;
            }
        }
    }
    CHECK_THROWS_AS(bistochastic_mixture(1), input_error);
}

TEST_CASE("constraints and permutation differences are jointly independent") {
    for (int size : {2, 3, 4}) {
        const BistochasticModel model = bistochastic_mixture(size);
        std::vector<const Matrix*> stacked;
        for (const auto& g : model.constraints.gens.list) stacked.push_back(&g);
        for (const auto& g : model.ghat) stacked.push_back(&g);
        const Matrix a = stack_rows(stacked);
        const Eigen::JacobiSVD<Matrix> svd(a);
        REQUIRE(svd.singularValues().size() == a.rows());
        CHECK(svd.singularValues().minCoeff() > 1e-9);
    }
}

TEST_CASE("two-state bistochastic mixture interpolates identity and swap") {
    const BistochasticModel model = bistochastic_mixture(2);
    Vector eta(1);
    eta << 0.3;
    const Matrix w = bistochastic_matrix(model, eta);
    Matrix expect(2, 2);
    expect << 0.7, 0.3, 0.3, 0.7;
    CHECK((w - expect).cwiseAbs().maxCoeff() < 1e-15);

    Vector wrong(2);
    wrong << 0.1, 0.1;
    CHECK_THROWS_AS(bistochastic_matrix(model, wrong), input_error);
}

TEST_CASE("bistochastic expectation coordinates recover the mixture weights") {
    std::mt19937 rng(314);
    std::uniform_real_distribution<double> unif(0.01, 0.05);
    for (int size : {3, 4}) {
        const BistochasticModel model = bistochastic_mixture(size);
        Vector eta(static_cast<int>(model.perms.size()));
        for (int a = 0; a < eta.size(); ++a) eta(a) = unif(rng);
        const Matrix w = bistochastic_matrix(model, eta);

        // Doubly stochastic with positive entries for these small weights.
        for (int i = 0; i < size; ++i) {
            REQUIRE(w.row(i).sum() == Catch::Approx(1.0).margin(1e-12));
            REQUIRE(w.col(i).sum() == Catch::Approx(1.0).margin(1e-12));
        }
        REQUIRE(w.minCoeff() >= 0.0);

        const auto [cons, duals] = bistochastic_expectations(model, w);
        REQUIRE(cons.cwiseAbs().maxCoeff() < 1e-10);
        REQUIRE((duals - eta).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("doubly stochastic kernels have the uniform stationary law") {
    std::mt19937 rng(2718);
    std::uniform_real_distribution<double> unif(0.02, 0.06);
    for (int size : {2, 3, 4}) {
        const BistochasticModel model = bistochastic_mixture(size);
        Vector eta(static_cast<int>(model.perms.size()));
        for (int a = 0; a < eta.size(); ++a) eta(a) = unif(rng);
        const Matrix w = bistochastic_matrix(model, eta);
        const TransitionKernel k = TransitionKernel::from_columns(w);
        const Vector pi = stationary_distribution(k);
        for (int i = 0; i < size; ++i)
            REQUIRE(pi(i) == Catch::Approx(1.0 / size).margin(1e-12));
    }
}

TEST_CASE("two-state reference model carries the documented constants") {
    const ModelDescriptor ref = two_state_reference();
    CHECK(ref.name == "m2");
    CHECK_FALSE(ref.notes.empty());
    REQUIRE(ref.family.dim() == 1);
    CHECK((ref.family.base().matrix() - m2_kernel().matrix()).cwiseAbs().maxCoeff() == 0.0);
    const FamilyPoint origin = ref.family.point(Vector::Zero(1));
    CHECK(origin.eta(0) == Catch::Approx(3.0 / 7.0).margin(1e-13));
    CHECK(ref.family.fisher(Vector::Zero(1)).entries(0, 0) ==
          Catch::Approx(0.45481049562).margin(1e-6));
    CHECK(relative_entropy(ref.family.base(), uniform_kernel(2)).value ==
          Catch::Approx(0.055648293537).margin(1e-9));
}
