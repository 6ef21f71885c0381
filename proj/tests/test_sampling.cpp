#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include "fusebench/sampling.hpp"

using namespace fusebench;

namespace {

SpdMatrix random_spd(Eigen::Index dim, RandomStream& rng, double ridge = 0.2) {
    const Eigen::MatrixXd g = sample_gaussian_matrix(dim, dim, rng);
    return SpdMatrix(g * g.transpose() + ridge * Eigen::MatrixXd::Identity(dim, dim));
}

// Kolmogorov-Smirnov statistic of samples against a CDF given as a callable.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - f));
        d = std::max(d, std::abs(static_cast<double>(i) / n - f));
    }
    return d;
}

// Numerically integrated CDF of the scalar bounded-support density
// (1 - t^2)^((n-2)/2) on (-1, 1), normalized by quadrature. Independent of
// the library's density code.
struct QuadratureCdf {
    std::vector<double> grid;
    std::vector<double> cum;

    explicit QuadratureCdf(double n, int panels = 400000) {
        const double h = 2.0 / panels;
        grid.resize(panels + 1);
        cum.resize(panels + 1);
        auto density = [n](double t) {
            const double s = 1.0 - t * t;
            return s > 0.0 ? std::pow(s, 0.5 * (n - 2.0)) : 0.0;
        };
        double acc = 0.0;
        grid[0] = -1.0;
        cum[0] = 0.0;
        double prev = density(-1.0);
        for (int i = 1; i <= panels; ++i) {
            const double t = -1.0 + i * h;
            const double cur = density(t);
            acc += 0.5 * (prev + cur) * h;
            grid[i] = t;
            cum[i] = acc;
            prev = cur;
        }
        for (auto& c : cum) {
            c /= acc;
        }
    }

    double operator()(double x) const {
        if (x <= -1.0) return 0.0;
        if (x >= 1.0) return 1.0;
        const double pos = (x + 1.0) / 2.0 * (grid.size() - 1);
        const std::size_t i = std::min(static_cast<std::size_t>(pos), grid.size() - 2);
        const double frac = pos - static_cast<double>(i);
        return cum[i] + frac * (cum[i + 1] - cum[i]);
    }
};

// 1% KS critical value for large n.
double ks_critical_1pct(std::size_t n) {
    return 1.62762 / std::sqrt(static_cast<double>(n));
}

double chi2_logpdf(double x, double k) {
    return (0.5 * k - 1.0) * std::log(x) - 0.5 * x - 0.5 * k * std::numbers::ln2 -
           std::lgamma(0.5 * k);
}

} // namespace

TEST_CASE("RandomStream determinism and splitting") {
    RandomStream a(42, 7);
    RandomStream b(42, 7);
    for (int i = 0; i < 16; ++i) {
        CHECK(a.bits() == b.bits());
    }
    RandomStream c(42, 8);
    RandomStream d(43, 7);
    bool differs = false;
    for (int i = 0; i < 4; ++i) {
        const auto x = a.bits();
        differs = differs || x != c.bits() || x != d.bits();
    }
    CHECK(differs);

    // children depend on identity only, not on draw position
    RandomStream parent(1, 2);
    RandomStream child_before = parent.child(5);
    parent.bits();
    parent.normal();
    RandomStream child_after = parent.child(5);
    for (int i = 0; i < 8; ++i) {
        CHECK(child_before.bits() == child_after.bits());
    }
}

TEST_CASE("gaussian matrix moments") {
    RandomStream rng(11, 0);
    const Eigen::MatrixXd one = sample_gaussian_matrix(1, 1, rng);
    CHECK(std::isfinite(one(0, 0)));

    const int n = 100000;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 2);
    for (int i = 0; i < n; ++i) {
        mean += sample_gaussian_matrix(3, 2, rng);
    }
    mean /= n;
    CHECK(mean.cwiseAbs().maxCoeff() <= 4.0 / std::sqrt(static_cast<double>(n)));

    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
        const Eigen::MatrixXd g = sample_gaussian_matrix(2, 2, rng);
        sq += g.cwiseProduct(g);
    }
    sq /= n;
    CHECK((sq.array() - 1.0).abs().maxCoeff() <= 0.05);

    CHECK_THROWS_AS(sample_gaussian_matrix(0, 2, rng), DimensionMismatch);
}

TEST_CASE("wishart sampler moments and support") {
    RandomStream rng(12, 0);

    // l = 1: chi-square with 5 degrees of freedom
    const WishartParams chi5{1, 5.0, SpdMatrix::identity(1)};
    double mean1 = 0.0;
    const int n1 = 100000;
    for (int i = 0; i < n1; ++i) {
        mean1 += sample_wishart(chi5, rng)(0, 0);
    }
    mean1 /= n1;
    CHECK(mean1 == doctest::Approx(5.0).epsilon(0.02));

    // l = 2: E[A] = n Sigma
    const WishartParams p2{2, 6.0, SpdMatrix::identity(2)};
    Eigen::MatrixXd mean2 = Eigen::MatrixXd::Zero(2, 2);
    const int n2 = 50000;
    for (int i = 0; i < n2; ++i) {
        mean2 += sample_wishart(p2, rng).matrix();
    }
    mean2 /= n2;
    CHECK((mean2 - 6.0 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 0.02 * 6.0);

    // every draw is a valid SPD matrix
    RandomStream rng2(13, 0);
    const WishartParams p3{3, 5.0, random_spd(3, rng2)};
    for (int i = 0; i < 100; ++i) {
        const SpdMatrix a = sample_wishart(p3, rng2);
        CHECK(is_positive_definite(a.matrix(), 0.0));
    }

    CHECK_THROWS_AS(sample_wishart(WishartParams{2, 1.0, SpdMatrix::identity(2)}, rng),
                    InvalidDof);
    CHECK_THROWS_AS(sample_wishart(WishartParams{2, 2.5, SpdMatrix::identity(2)}, rng),
                    InvalidDof);
}

TEST_CASE("wishart_logpdf scalar oracle, normalization, scaling identity") {
    // W_1(3, [2]) at A = [2] equals the density of 2*Y with Y ~ chi^2_3
    SpdMatrix a1 = SpdMatrix::diagonal((Eigen::VectorXd(1) << 2.0).finished());
    const WishartParams p1{1, 3.0, a1};
    const double expected = chi2_logpdf(1.0, 3.0) - std::numbers::ln2;
    CHECK(wishart_logpdf(a1, p1) == doctest::Approx(expected).epsilon(1e-12));

    // l = 1 density integrates to 1 by quadrature
    const WishartParams p2{1, 5.0, SpdMatrix::diagonal((Eigen::VectorXd(1) << 1.5).finished())};
    const int panels = 400000;
    const double hi = 120.0;
    const double h = hi / panels;
    double integral = 0.0;
    for (int i = 1; i <= panels; ++i) {
        const double x = (i - 0.5) * h;
        SpdMatrix ax = SpdMatrix::diagonal((Eigen::VectorXd(1) << x).finished());
        integral += std::exp(wishart_logpdf(ax, p2)) * h;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-5));

    // direct evaluation at l = 2, n = 5, Sigma = I, A = I
    const WishartParams p3{2, 5.0, SpdMatrix::identity(2)};
    const double direct = -0.5 * 2.0 - 0.5 * 5.0 * 2.0 * std::numbers::ln2 -
                          ln_multigamma(2, 2.5);
    CHECK(wishart_logpdf(SpdMatrix::identity(2), p3) == doctest::Approx(direct).epsilon(1e-13));

    // change of variables A -> cA, Sigma -> c Sigma
    RandomStream rng(14, 0);
    const int l = 3;
    const SpdMatrix sigma = random_spd(l, rng);
    const SpdMatrix a = random_spd(l, rng);
    const double c = 3.7;
    const double lhs = wishart_logpdf(SpdMatrix(c * a.matrix()),
                                      WishartParams{l, 6.0, SpdMatrix(c * sigma.matrix())});
    const double rhs = wishart_logpdf(a, WishartParams{l, 6.0, sigma}) -
                       0.5 * l * (l + 1) * std::log(c);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));

    CHECK_THROWS_AS(wishart_logpdf(SpdMatrix::identity(2),
                                   WishartParams{2, 0.5, SpdMatrix::identity(2)}),
                    InvalidDof);
}

TEST_CASE("inverted-t sampler stays in support and is location-equivariant") {
    RandomStream rng(15, 0);
    const SpdMatrix sigma = random_spd(2, rng);
    const SpdMatrix omega = random_spd(3, rng);
    const InvTParams p{4.0, Eigen::MatrixXd::Zero(2, 3), sigma, omega};
    const Eigen::MatrixXd inv_sigma = spd_inverse(sigma).matrix();
    const Eigen::MatrixXd inv_omega = spd_inverse(omega).matrix();
    for (int i = 0; i < 200; ++i) {
        const Eigen::MatrixXd t = sample_inverted_t(p, rng);
        const Eigen::MatrixXd support =
            Eigen::MatrixXd::Identity(2, 2) - inv_sigma * t * inv_omega * t.transpose();
        CHECK(is_positive_definite(0.5 * (support + support.transpose()),
                                   pd_tolerance(support)));
    }

    // draws with location M equal draws with location 0 plus M
    Eigen::MatrixXd loc(2, 3);
    loc << 1.0, -2.0, 0.5, 0.0, 3.0, -1.0;
    RandomStream r1(16, 1);
    RandomStream r2(16, 1);
    const Eigen::MatrixXd with_loc =
        sample_inverted_t(InvTParams{4.0, loc, sigma, omega}, r1);
    const Eigen::MatrixXd without =
        sample_inverted_t(InvTParams{4.0, Eigen::MatrixXd::Zero(2, 3), sigma, omega}, r2);
    CHECK(((without + loc).array() == with_loc.array()).all());

    CHECK_THROWS_AS(sample_inverted_t(InvTParams{0.0, Eigen::MatrixXd::Zero(2, 3), sigma, omega},
                                      rng),
                    InvalidDof);
}

TEST_CASE("scalar inverted-t matches quadrature CDF (KS)") {
    // n = 2 is exactly uniform on (-1, 1); n = 3 checked against quadrature
    const std::size_t n_draws = 10000;
    {
        RandomStream rng(17, 0);
        const InvTParams p{2.0, Eigen::MatrixXd::Zero(1, 1), SpdMatrix::identity(1),
                           SpdMatrix::identity(1)};
        std::vector<double> draws;
        draws.reserve(n_draws);
        for (std::size_t i = 0; i < n_draws; ++i) {
            draws.push_back(sample_inverted_t(p, rng)(0, 0));
        }
        const double d = ks_statistic(std::move(draws),
                                      [](double x) { return (x + 1.0) / 2.0; });
        CHECK(d < ks_critical_1pct(n_draws));
    }
    {
        RandomStream rng(18, 0);
        const InvTParams p{3.0, Eigen::MatrixXd::Zero(1, 1), SpdMatrix::identity(1),
                           SpdMatrix::identity(1)};
        std::vector<double> draws;
        draws.reserve(n_draws);
        for (std::size_t i = 0; i < n_draws; ++i) {
            draws.push_back(sample_inverted_t(p, rng)(0, 0));
        }
        const QuadratureCdf cdf(3.0);
        const double d = ks_statistic(std::move(draws), cdf);
        CHECK(d < ks_critical_1pct(n_draws));
    }
}

TEST_CASE("inverted_t_logpdf normalization, symmetry, zero-deviation value") {
    // scalar density integrates to 1 over its support
    for (double n : {2.0, 3.0, 6.0}) {
        const InvTParams p{n, Eigen::MatrixXd::Zero(1, 1),
                           SpdMatrix::diagonal((Eigen::VectorXd(1) << 4.0).finished()),
                           SpdMatrix::identity(1)};
        const int panels = 200000;
        const double lo = -2.0, hiq = 2.0;  // support |t| < 2
        const double h = (hiq - lo) / panels;
        double integral = 0.0;
        for (int i = 0; i < panels; ++i) {
            const double t = lo + (i + 0.5) * h;
            Eigen::MatrixXd tm(1, 1);
            tm << t;
            integral += std::exp(inverted_t_logpdf(tm, p)) * h;
        }
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
    }

    RandomStream rng(19, 0);
    const SpdMatrix sigma = random_spd(2, rng);
    const SpdMatrix omega = random_spd(2, rng);
    Eigen::MatrixXd loc(2, 2);
    loc << 0.3, -0.1, 0.7, 0.2;
    const InvTParams p{5.0, loc, sigma, omega};

    // at T = M only the normalizer remains
    const double at_center = inverted_t_logpdf(loc, p);
    const double normalizer = ln_multigamma(2, 0.5 * (5.0 + 2 + 2 - 1)) -
                              ln_multigamma(2, 0.5 * (5.0 + 2 - 1)) -
                              0.5 * 2 * 2 * std::log(std::numbers::pi) - 0.5 * 2 * logdet(sigma) -
                              0.5 * 2 * logdet(omega);
    CHECK(at_center == doctest::Approx(normalizer).epsilon(1e-13));

    // symmetric in the deviation
    Eigen::MatrixXd dev(2, 2);
    dev << 0.05, -0.02, 0.01, 0.04;
    CHECK(inverted_t_logpdf(loc + dev, p) ==
          doctest::Approx(inverted_t_logpdf(loc - dev, p)).epsilon(1e-14));

    // outside the bounded support
    Eigen::MatrixXd far = loc;
    far(0, 0) += 100.0;
    CHECK_THROWS_AS(inverted_t_logpdf(far, p), OutOfSupport);
}

TEST_CASE("two-block conditional sampler: support and density ratio oracle") {
    RandomStream rng(20, 0);

    // scalar case: |A12| < 1 when both diagonal blocks are 1
    const SpdMatrix one = SpdMatrix::identity(1);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::MatrixXd a12 = sample_offdiag_two(one, one, 2.0, rng);
        CHECK(std::abs(a12(0, 0)) < 1.0);
    }

    // assembled matrix is PD
    for (int i = 0; i < 2000; ++i) {
        const SpdMatrix a11 = random_spd(2, rng);
        const SpdMatrix a22 = random_spd(2, rng);
        const Eigen::MatrixXd a12 = sample_offdiag_two(a11, a22, 6.0, rng);
        Eigen::MatrixXd full(4, 4);
        full << a11.matrix(), a12, a12.transpose(), a22.matrix();
        CHECK(is_positive_definite(full, pd_tolerance(full)));
    }

    // density of the draw equals the Wishart ratio p(A) / (p(A11) p(A22))
    for (auto [l1, l2, n] : {std::tuple<int, int, int>{2, 2, 6}, {2, 1, 5}, {1, 1, 3}}) {
        for (int rep = 0; rep < 25; ++rep) {
            const int l = l1 + l2;
            const SpdMatrix a11 =
                sample_wishart(WishartParams{l1, double(n), SpdMatrix::identity(l1)}, rng);
            const SpdMatrix a22 =
                sample_wishart(WishartParams{l2, double(n), SpdMatrix::identity(l2)}, rng);
            const Eigen::MatrixXd a12 = sample_offdiag_two(a11, a22, n, rng);
            Eigen::MatrixXd full(l, l);
            full << a11.matrix(), a12, a12.transpose(), a22.matrix();
            const double lhs = inverted_t_logpdf(
                a12.transpose(),
                InvTParams{double(n - l + 1), Eigen::MatrixXd::Zero(l2, l1), a22, a11});
            const double rhs =
                wishart_logpdf(SpdMatrix(full), WishartParams{l, double(n), SpdMatrix::identity(l)}) -
                wishart_logpdf(a11, WishartParams{l1, double(n), SpdMatrix::identity(l1)}) -
                wishart_logpdf(a22, WishartParams{l2, double(n), SpdMatrix::identity(l2)});
            CHECK(lhs == doctest::Approx(rhs).scale(1.0).epsilon(1e-8));
        }
    }

    CHECK_THROWS_AS(sample_offdiag_two(SpdMatrix::identity(2), SpdMatrix::identity(2), 3.0, rng),
                    InvalidDof);
}

TEST_CASE("chain sampler: k=2 equivalence, support, factorization oracle") {
    RandomStream seed_rng(21, 0);

    // k = 2 chain reproduces the pairwise sampler bit for bit
    {
        const SpdMatrix a11 = random_spd(2, seed_rng);
        const SpdMatrix a22 = random_spd(2, seed_rng);
        RandomStream r1(22, 9);
        RandomStream r2(22, 9);
        const Eigen::MatrixXd direct = sample_offdiag_two(a11, a22, 6.0, r1);
        const OffDiagonalBlocks chain =
            sample_offdiag_chain(DiagonalBlocks({a11, a22}), 6.0, r2);
        CHECK((direct.array() == chain.block(0, 1).array()).all());
    }

    // k = 3, m = 2, n = 9: assembled draws are PD
    {
        RandomStream rng(23, 0);
        const WishartParams block_params{2, 9.0, SpdMatrix::identity(2)};
        for (int i = 0; i < 1000; ++i) {
            std::vector<SpdMatrix> blocks;
            for (int j = 0; j < 3; ++j) {
                blocks.push_back(sample_wishart(block_params, rng));
            }
            const DiagonalBlocks pd(blocks);
            const OffDiagonalBlocks po = sample_offdiag_chain(pd, 9.0, rng);
            const Eigen::MatrixXd full = assemble_joint(pd, po);
            CHECK(is_positive_definite(full, pd_tolerance(full)));
        }
    }

    // conditional density equals the Wishart ratio, for any sigma2 scale
    {
        RandomStream rng(24, 0);
        for (int k : {2, 3, 4}) {
            for (int m : {1, 2}) {
                const double n = 3.0 * k;
                for (int rep = 0; rep < 20; ++rep) {
                    std::vector<SpdMatrix> blocks;
                    for (int j = 0; j < k; ++j) {
                        blocks.push_back(sample_wishart(
                            WishartParams{m, n, SpdMatrix::identity(m)}, rng));
                    }
                    const DiagonalBlocks pd(blocks);
                    const OffDiagonalBlocks po = sample_offdiag_chain(pd, n, rng);
                    const double lhs = conditional_logpdf(po, pd, n);
                    for (double s2 : {0.5, 1.0, 4.0}) {
                        double rhs = wishart_logpdf(
                            SpdMatrix(assemble_joint(pd, po)),
                            WishartParams{k * m, n, SpdMatrix::scaled_identity(k * m, s2)});
                        for (int j = 0; j < k; ++j) {
                            rhs -= wishart_logpdf(
                                pd.block(j),
                                WishartParams{m, n, SpdMatrix::scaled_identity(m, s2)});
                        }
                        CHECK(lhs == doctest::Approx(rhs).scale(1.0).epsilon(1e-8));
                    }
                }
            }
        }
    }

    CHECK_THROWS_AS(
        sample_offdiag_chain(DiagonalBlocks({SpdMatrix::identity(2), SpdMatrix::identity(2),
                                             SpdMatrix::identity(2)}),
                             5.0, seed_rng),
        InvalidDof);
}

TEST_CASE("conditional_logpdf reductions and errors") {
    RandomStream rng(25, 0);
    const SpdMatrix a11 = random_spd(2, rng);
    const SpdMatrix a22 = random_spd(2, rng);
    const DiagonalBlocks pd({a11, a22});
    const OffDiagonalBlocks po = sample_offdiag_chain(pd, 7.0, rng);

    // k = 2 is a single inverted-t factor
    const double direct = inverted_t_logpdf(
        po.block(0, 1).transpose(),
        InvTParams{7.0 - 4.0 + 1.0, Eigen::MatrixXd::Zero(2, 2), a22, a11});
    CHECK(conditional_logpdf(po, pd, 7.0) == doctest::Approx(direct).epsilon(1e-13));

    // zero off-diagonal blocks with identity diagonals: finite, equals the
    // sum of zero-deviation factor values
    {
        std::vector<SpdMatrix> id_blocks(3, SpdMatrix::identity(2));
        const DiagonalBlocks pid(id_blocks);
        OffDiagonalBlocks zero(3, 2);
        double expected = 0.0;
        const Eigen::MatrixXd full = assemble_joint(pid, zero);
        for (int j = 1; j < 3; ++j) {
            expected += inverted_t_logpdf(
                Eigen::MatrixXd::Zero(2, 2 * j),
                InvTParams{9.0 - (j + 1) * 2.0 + 1.0, Eigen::MatrixXd::Zero(2, 2 * j),
                           SpdMatrix::identity(2), SpdMatrix(full.topLeftCorner(2 * j, 2 * j))});
        }
        const double got = conditional_logpdf(zero, pid, 9.0);
        CHECK(std::isfinite(got));
        CHECK(got == doctest::Approx(expected).epsilon(1e-13));
    }

    // far-off-support assembly
    OffDiagonalBlocks bad(2, 2);
    bad.set_block(0, 1, 100.0 * Eigen::MatrixXd::Ones(2, 2));
    CHECK_THROWS_AS(conditional_logpdf(bad, pd, 7.0), OutOfSupport);

    CHECK_THROWS_AS(conditional_logpdf(po, pd, 3.0), InvalidDof);
}

TEST_CASE("samplers are deterministic and usable from concurrent children") {
    const SpdMatrix a = SpdMatrix::identity(2);
    const DiagonalBlocks pd({a, a, a});

    RandomStream r1(31, 4);
    RandomStream r2(31, 4);
    const OffDiagonalBlocks po1 = sample_offdiag_chain(pd, 9.0, r1);
    const OffDiagonalBlocks po2 = sample_offdiag_chain(pd, 9.0, r2);
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            CHECK((po1.block(i, j).array() == po2.block(i, j).array()).all());
        }
    }

    // concurrent consumption of child streams matches sequential replay
    const RandomStream root(32, 0);
    std::vector<Eigen::MatrixXd> parallel(8), sequential(8);
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t) {
        pool.emplace_back([&, t] {
            for (int i = t; i < 8; i += 4) {
                RandomStream s = root.child(i);
                parallel[i] = assemble_joint(pd, sample_offdiag_chain(pd, 9.0, s));
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (int i = 0; i < 8; ++i) {
        RandomStream s = root.child(i);
        sequential[i] = assemble_joint(pd, sample_offdiag_chain(pd, 9.0, s));
        CHECK((parallel[i].array() == sequential[i].array()).all());
    }
}

TEST_CASE("off-diagonal block container indexing") {
    OffDiagonalBlocks po(4, 2);
    Eigen::MatrixXd v(2, 2);
    v << 1, 2, 3, 4;
    po.set_block(1, 3, v);
    CHECK((po.block(1, 3).array() == v.array()).all());
    CHECK(po.block(0, 1).isZero());
    CHECK_THROWS_AS(po.block(3, 1), DimensionMismatch);
    CHECK_THROWS_AS(po.block(0, 4), DimensionMismatch);
    CHECK_THROWS_AS(po.set_block(0, 1, Eigen::MatrixXd::Zero(2, 3)), DimensionMismatch);
    CHECK_THROWS_AS(DiagonalBlocks({SpdMatrix::identity(2), SpdMatrix::identity(3)}),
                    DimensionMismatch);
}
