#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace markovig;
using namespace testutil;

namespace {

ExpFamily m2_family() {
    return ExpFamily(m2_kernel(), GeneratorSet::make({m2_generator()}));
}

// d-dimensional family of single-entry indicators over `size` states; the
// chosen (to, from) pairs admit no representation f(x) - f(x') + c, so the
// generators stay independent in the quotient.
ExpFamily indicator_family(std::mt19937& rng, int size, int d) {
    const auto base = random_kernel(rng, size);
    const std::array<std::pair<int, int>, 4> pairs = {
        {{1, 0}, {2, 1}, {0, 2}, {2, 0}}};
    std::vector<Matrix> gens;
    for (int j = 0; j < d; ++j)
        gens.push_back(indicator(size, pairs[j].first, pairs[j].second));
    return ExpFamily(base, GeneratorSet::make(std::move(gens)));
}

ExpFamily ambient_d2(unsigned seed = 91) {
    std::mt19937 rng(seed);
    const auto base = random_kernel(rng, 3);
    Matrix g1 = Matrix::Zero(3, 3), g2 = Matrix::Zero(3, 3);
    g1.row(1).setOnes();
    g2.row(2).setOnes();
    return ExpFamily(base, GeneratorSet::make({g1, g2}));
}

}  // namespace

TEST_CASE("mixed-coordinate intersection point reduces to the input on the diagonal") {
    const auto fam = ambient_d2();
    Vector t(2);
    t << 0.3, -0.5;
    const FamilyPoint p = pythagoras_point(fam, t, t, 1);
    REQUIRE((p.theta - t).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("divergence decomposes additively through the intersection point") {
    std::mt19937 rng(2000);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const int size = 3 + trial % 2;
        auto fam = indicator_family(rng, size, 3);
        REQUIRE(fam.certificate().independent);
        ++checked;
        Vector tp(3), tdp(3);
        for (int j = 0; j < 3; ++j) {
            tp(j) = u(rng);
            tdp(j) = u(rng);
        }
        const int k = 1 + trial % 2;
        const FamilyPoint mid = pythagoras_point(fam, tp, tdp, k);
        const double total = bregman_divergence(fam, tp, tdp);
        const double left = bregman_divergence(fam, tp, mid.theta);
        const double right = bregman_divergence(fam, mid.theta, tdp);
        REQUIRE(std::abs(total - left - right) < 1e-7);
    }
    REQUIRE(checked == 10);
}

TEST_CASE("intersection point requires a proper split") {
    const auto fam = ambient_d2();
    Vector t(2);
    t << 0.1, 0.2;
    REQUIRE_THROWS_AS(pythagoras_point(fam, t, t, 0), input_error);
    REQUIRE_THROWS_AS(pythagoras_point(fam, t, t, 2), input_error);
}

TEST_CASE("mixture projection of a kernel already satisfying the constraints") {
    const auto fam = ambient_d2();
    const Vector eta0 = fam.point(Vector::Zero(2)).eta;
    const FamilyPoint p = m_project(fam.base(), MixtureConstraints{fam.generators(), eta0});
    REQUIRE(p.theta.cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE((p.kernel.matrix() - fam.base().matrix()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("mixture projection satisfies constraints and the Pythagorean split") {
    std::mt19937 rng(2100);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    const auto fam = ambient_d2(17);
    const auto v = fam.base();
    for (int trial = 0; trial < 6; ++trial) {
        Vector theta_w(2);
        theta_w << u(rng), u(rng);
        const FamilyPoint w_point = fam.point(theta_w);  // lies in the mixture set below
        const Vector targets = w_point.eta;

        const FamilyPoint vstar = m_project(v, MixtureConstraints{fam.generators(), targets});
        REQUIRE((vstar.eta - targets).cwiseAbs().maxCoeff() < 1e-8);

        const double d_wv = relative_entropy(w_point.kernel, v).value;
        const double d_wstar = relative_entropy(w_point.kernel, vstar.kernel).value;
        const double d_starv = relative_entropy(vstar.kernel, v).value;
        REQUIRE(std::abs(d_wv - d_wstar - d_starv) < 1e-7);
    }
}

TEST_CASE("mixture projection is invariant to constraint recombination") {
    const auto fam = ambient_d2(23);
    Vector theta_w(2);
    theta_w << 0.5, -0.3;
    const Vector targets = fam.point(theta_w).eta;
    const FamilyPoint direct =
        m_project(fam.base(), MixtureConstraints{fam.generators(), targets});

    Matrix m(2, 2);
    m << 0.8, 0.4,
         -0.2, 1.1;
    std::vector<Matrix> mixed = {
        m(0, 0) * fam.generators().list[0] + m(0, 1) * fam.generators().list[1],
        m(1, 0) * fam.generators().list[0] + m(1, 1) * fam.generators().list[1]};
    const Vector mixed_targets = m * targets;
    const FamilyPoint recombined =
        m_project(fam.base(), MixtureConstraints{GeneratorSet::make(mixed), mixed_targets});
    REQUIRE((direct.kernel.matrix() - recombined.kernel.matrix()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("projection onto the bi-stochastic mixture family") {
    std::mt19937 rng(2200);
    const auto v = random_kernel(rng, 3);
    const auto model = bistochastic_mixture(3);
    const FamilyPoint p = m_project(v, model.constraints);
    const Matrix k = p.kernel.matrix();
    for (int i = 0; i < 3; ++i) {
        REQUIRE(std::abs(k.row(i).sum() - 1.0) < 1e-8);  // uniform stationary law
        REQUIRE(std::abs(k.col(i).sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("exponential projection recovers a member of the family") {
    const auto fam = ambient_d2(29);
    Vector t(2);
    t << 0.4, -0.6;
    const FamilyPoint p = e_project(fam.point(t).kernel, fam);
    REQUIRE((p.theta - t).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("exponential projection splits the divergence") {
    std::mt19937 rng(2300);
    const auto fam = ambient_d2(31);
    for (int trial = 0; trial < 5; ++trial) {
        const auto w = random_kernel(rng, 3);
        const FamilyPoint star = e_project(w, fam);
        const double d_direct = relative_entropy(w, star.kernel).value;
        for (int probe = 0; probe < 3; ++probe) {
            Vector t(2);
            t << -0.5 + 0.5 * probe, 0.3 * probe - 0.4;
            const double d_full = relative_entropy(w, fam.point(t).kernel).value;
            const double d_leg = relative_entropy(star.kernel, fam.point(t).kernel).value;
            REQUIRE(std::abs(d_full - d_direct - d_leg) < 1e-6);
        }
    }
}

TEST_CASE("one-dimensional exponential projection matches a dense grid search") {
    std::mt19937 rng(2400);
    const auto fam = m2_family();
    const auto w = random_kernel(rng, 2, 0.15);
    const FamilyPoint star = e_project(w, fam);

    const Vector pi_w = stationary_2x2(w);
    auto objective = [&](double t) {
        Vector th(1);
        th << t;
        const FamilyPoint p = fam.point(th);
        double acc = 0.0;
        for (int to = 0; to < 2; ++to)
            for (int from = 0; from < 2; ++from)
                acc += pi_w(from) * w(to, from) * std::log(w(to, from) / p.kernel(to, from));
        return acc;
    };
    double best_t = 0.0, best = std::numeric_limits<double>::infinity();
    for (double t = -5.0; t <= 5.0 + 1e-12; t += 1e-3) {
        const double f = objective(t);
        if (f < best) {
            best = f;
            best_t = t;
        }
    }
    REQUIRE(std::abs(star.theta(0) - best_t) <= 1.1e-3);
    REQUIRE(objective(star.theta(0)) <= best + 1e-10);
}

TEST_CASE("curved Fisher metric: identity embedding returns the ambient metric") {
    const auto fam = ambient_d2(37);
    const auto cf = CurvedFamily::affine(fam, Matrix::Identity(2, 2), Vector::Zero(2));
    Vector xi(2);
    xi << 0.2, -0.1;
    const Matrix ambient = fam.fisher(cf.theta_of(xi)).entries;
    const Matrix curved = curved_fisher(cf, xi).entries;
    REQUIRE((curved - ambient).cwiseAbs().maxCoeff() / ambient.norm() < 1e-5);
}

TEST_CASE("curved Fisher metric for an affine one-dimensional curve") {
    const auto fam = ambient_d2(41);
    Matrix c(2, 1);
    c << 1.0, -0.7;
    Vector t0(2);
    t0 << 0.1, 0.2;
    const auto cf = CurvedFamily::affine(fam, c, t0);
    Vector xi(1);
    xi << 0.3;
    const auto cfish = curved_fisher(cf, xi);
    REQUIRE(cfish.entries.rows() == 1);
    REQUIRE(cfish.entries(0, 0) > 0.0);

    // Doubling the embedding matrix scales the metric by four.
    const auto cf2 = CurvedFamily::affine(fam, Matrix(2.0 * c), t0);
    Vector half(1);
    half << 0.15;  // same ambient point
    const auto scaled = curved_fisher(cf2, half);
    REQUIRE(std::abs(scaled.entries(0, 0) - 4.0 * cfish.entries(0, 0)) /
                (4.0 * cfish.entries(0, 0)) <
            1e-5);
}

TEST_CASE("curved Fisher metric transforms as a bilinear form") {
    const auto fam = full_positive_family(3);
    Matrix c = Matrix::Zero(6, 2);
    c(0, 0) = 1.0;
    c(3, 0) = -0.5;
    c(1, 1) = 0.8;
    c(4, 1) = 0.6;
    const Vector t0 = Vector::Constant(6, 0.05);
    const auto cf = CurvedFamily::affine(fam, c, t0);

    Matrix m(2, 2);
    m << 1.1, 0.3,
         -0.2, 0.9;
    const auto cf_re = CurvedFamily::affine(fam, Matrix(c * m), t0);

    Vector zeta(2);
    zeta << 0.12, -0.08;
    const Vector xi = m * zeta;  // same ambient point
    const Matrix h1 = curved_fisher(cf, xi).entries;
    const Matrix h2 = curved_fisher(cf_re, zeta).entries;
    REQUIRE((h2 - m.transpose() * h1 * m).cwiseAbs().maxCoeff() / h2.norm() < 1e-6);
}

TEST_CASE("rank-deficient embeddings are rejected") {
    const auto fam = ambient_d2(43);
    REQUIRE_THROWS_AS(curved_fisher(CurvedFamily::affine(fam, Matrix::Zero(2, 1), Vector::Zero(2)),
                                    Vector::Zero(1)),
                      structural_error);
}

TEST_CASE("curved estimate projects on-manifold estimates exactly") {
    const auto fam = ambient_d2(47);
    Matrix c(2, 1);
    c << 0.9, -0.6;
    Vector t0(2);
    t0 << -0.1, 0.15;
    const auto cf = CurvedFamily::affine(fam, c, t0);
    Vector xi0(1);
    xi0 << 0.4;
    const Vector eta0 = fam.point(cf.theta_of(xi0)).eta;

    for (auto path : {EvalPath::bregman, EvalPath::stationary}) {
        CurvedEstimateOptions opt;
        opt.path = path;
        const CurvedEstimate est = curved_estimate(cf, eta0, opt);
        REQUIRE(std::abs(est.xi(0) - xi0(0)) < 1e-6);
        REQUIRE(est.divergence < 1e-10);
    }
}

TEST_CASE("curved estimate: both evaluation paths agree off-manifold") {
    const auto fam = ambient_d2(53);
    Matrix c(2, 1);
    c << 0.9, -0.6;
    const auto cf = CurvedFamily::affine(fam, c, Vector::Zero(2));
    Vector eta_hat = fam.point(Vector::Constant(2, 0.25)).eta;
    eta_hat(0) += 0.02;  // push the estimate off the curve

    CurvedEstimateOptions breg, stat;
    stat.path = EvalPath::stationary;
    const CurvedEstimate a = curved_estimate(cf, eta_hat, breg);
    const CurvedEstimate b = curved_estimate(cf, eta_hat, stat);
    REQUIRE(std::abs(a.xi(0) - b.xi(0)) < 1e-6);
    REQUIRE(a.divergence >= 0.0);
}

TEST_CASE("curved estimate matches a dense grid oracle") {
    const auto fam = ambient_d2(59);
    Matrix c(2, 1);
    c << 1.0, 0.5;
    Vector t0(2);
    t0 << 0.05, -0.1;
    const auto cf = CurvedFamily::affine(fam, c, t0);
    Vector eta_hat = fam.point(cf.theta_of(Vector::Constant(1, 0.3))).eta;
    eta_hat(1) -= 0.015;

    const CurvedEstimate est = curved_estimate(cf, eta_hat);

    const Vector theta_hat = fam.theta_from_eta(eta_hat);
    const double phi_hat = fam.potential(theta_hat);
    auto objective = [&](double xi) {
        const Vector theta = cf.theta_of(Vector::Constant(1, xi));
        return (theta_hat - theta).dot(eta_hat) - phi_hat + fam.potential(theta);
    };
    double best_xi = 0.0, best = std::numeric_limits<double>::infinity();
    for (double xi = -2.0; xi <= 2.0 + 1e-12; xi += 1e-3) {
        const double f = objective(xi);
        if (f < best) {
            best = f;
            best_xi = xi;
        }
    }
    REQUIRE(std::abs(est.xi(0) - best_xi) < 1e-4 + 1e-3);
    REQUIRE(est.divergence <= best + 1e-12);
}

TEST_CASE("curved estimate objective trace is non-increasing") {
    const auto fam = ambient_d2(61);
    Matrix c(2, 1);
    c << 0.7, -0.9;
    const auto cf = CurvedFamily::affine(fam, c, Vector::Zero(2));
    Vector eta_hat = fam.point(Vector::Constant(2, 0.2)).eta;
    eta_hat(0) += 0.01;
    const CurvedEstimate est = curved_estimate(cf, eta_hat);
    REQUIRE(est.trace.size() > 1);
    for (std::size_t i = 1; i < est.trace.size(); ++i)
        REQUIRE(est.trace[i] <= est.trace[i - 1] + 1e-15);
}
