#include <catch2/catch_amalgamated.hpp>

#include "simclust/rng.hpp"
#include "simclust/special_functions.hpp"
#include "simclust/stats.hpp"

#include "oracles.hpp"

using namespace simclust;

TEST_CASE("silhouette") {
    SECTION("two coincident clusters far apart score 1") {
        Eigen::MatrixXd pts(4, 1);
        pts << 0, 0, 100, 100;
        ClusterAssignment a;
        a.labels = {1, 1, 2, 2};
        a.K = 2;
        CHECK(silhouette(pts, a) == Catch::Approx(1.0));
    }
    SECTION("single cluster is an error") {
        Eigen::MatrixXd pts(3, 1);
        pts << 1, 2, 3;
        ClusterAssignment a;
        a.labels = {1, 1, 1};
        a.K = 1;
        CHECK_THROWS_AS(silhouette(pts, a), data_error);
    }
    SECTION("four-point derived example") {
        Eigen::MatrixXd pts(4, 1);
        pts << 0.0, 0.1, 10.0, 10.1;
        ClusterAssignment a;
        a.labels = {1, 1, 2, 2};
        a.K = 2;
        double got = silhouette(pts, a);
        // hand computation: a_i = 0.1 for all; b = 10.05, 9.95, 9.95, 10.05
        double expected = ((10.05 - 0.1) / 10.05 + (9.95 - 0.1) / 9.95) / 2.0;
        CHECK(got == Catch::Approx(expected).epsilon(1e-12));
        CHECK(got == Catch::Approx(0.98999975).margin(1e-6));
        CHECK(got == Catch::Approx(oracles::silhouette_direct(pts, a.labels, 2)).margin(1e-12));
    }
    SECTION("stays in [-1, 1] and singletons contribute zero") {
        Rng rng(15);
        Eigen::MatrixXd pts(9, 2);
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 2; ++j) pts(i, j) = rng.normal(0.0, 1.0);
        ClusterAssignment a;
        a.labels = {1, 1, 1, 2, 2, 2, 3, 3, 4};  // label 4 is a singleton
        a.K = 4;
        double s = silhouette(pts, a);
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
        CHECK(s == Catch::Approx(oracles::silhouette_direct(pts, a.labels, 4)).margin(1e-12));
    }
}

TEST_CASE("anova_oneway") {
    SECTION("identical groups give F=0, p=1") {
        GroupedSamples g;
        g.groups = {{2, 2, 2}, {2, 2}, {2, 2, 2, 2}};
        TestResult r = anova_oneway(g);
        CHECK(r.statistic == 0.0);
        CHECK(r.p_value == 1.0);
        CHECK_FALSE(r.flag.empty());
    }
    SECTION("three-group example against direct formula and quadrature p") {
        GroupedSamples g;
        g.groups = {{6.9, 5.4, 5.8, 4.6, 4.0},
                    {8.3, 6.8, 7.8, 9.2, 6.5},
                    {8.0, 10.5, 8.1, 6.9, 9.3}};
        TestResult r = anova_oneway(g);

        // direct-formula oracle
        double grand = 0.0;
        for (const auto& grp : g.groups)
            for (double v : grp) grand += v;
        grand /= 15.0;
        double ssb = 0.0, ssw = 0.0;
        for (const auto& grp : g.groups) {
            double mean = 0.0;
            for (double v : grp) mean += v;
            mean /= 5.0;
            ssb += 5.0 * (mean - grand) * (mean - grand);
            for (double v : grp) ssw += (v - mean) * (v - mean);
        }
        double f_oracle = (ssb / 2.0) / (ssw / 12.0);
        CHECK(r.statistic == Catch::Approx(f_oracle).epsilon(1e-12));
        CHECK(r.p_value ==
              Catch::Approx(oracles::f_upper_tail_by_quadrature(f_oracle, 2, 12)).margin(1e-6));
        CHECK(r.df1 == 2.0);
        CHECK(r.df2 == 12.0);
    }
    SECTION("two groups: F equals the squared pooled t statistic") {
        GroupedSamples g;
        g.groups = {{1.1, 2.3, 1.9, 2.8}, {3.1, 4.0, 3.4, 2.9, 3.7}};
        TestResult r = anova_oneway(g);
        double m1 = (1.1 + 2.3 + 1.9 + 2.8) / 4.0;
        double m2 = (3.1 + 4.0 + 3.4 + 2.9 + 3.7) / 5.0;
        double ss1 = 0.0, ss2 = 0.0;
        for (double v : g.groups[0]) ss1 += (v - m1) * (v - m1);
        for (double v : g.groups[1]) ss2 += (v - m2) * (v - m2);
        double pooled = (ss1 + ss2) / (4 + 5 - 2);
        double t = (m1 - m2) / std::sqrt(pooled * (1.0 / 4 + 1.0 / 5));
        CHECK(r.statistic == Catch::Approx(t * t).epsilon(1e-12));
    }
    SECTION("p is invariant to shifting and positive scaling") {
        GroupedSamples g;
        g.groups = {{1.0, 2.0, 1.5}, {2.5, 3.5, 2.8}, {0.5, 0.9, 1.4}};
        double p0 = anova_oneway(g).p_value;
        GroupedSamples shifted = g;
        for (auto& grp : shifted.groups)
            for (double& v : grp) v = 3.0 * v + 17.3;
        CHECK(anova_oneway(shifted).p_value == Catch::Approx(p0).epsilon(1e-12));
    }
    SECTION("zero within-group variance with nonzero between flags p=0") {
        GroupedSamples g;
        g.groups = {{1, 1, 1}, {2, 2}};
        TestResult r = anova_oneway(g);
        CHECK(r.p_value == 0.0);
        CHECK_FALSE(r.flag.empty());
    }
    SECTION("fewer than two groups rejected") {
        GroupedSamples g;
        g.groups = {{1, 2, 3}};
        CHECK_THROWS_AS(anova_oneway(g), data_error);
    }
}

TEST_CASE("kruskal_wallis") {
    SECTION("disjoint rank blocks match the direct formula") {
        GroupedSamples g;
        g.groups = {{1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}};
        TestResult r = kruskal_wallis(g);
        // mean ranks 3 and 8: H = 12/(10*11) * (5*9 + 5*64) - 33 = 6.8181...
        CHECK(r.statistic == Catch::Approx(6.818181818181818).margin(1e-10));
        CHECK(r.statistic ==
              Catch::Approx(oracles::kruskal_wallis_h_direct(g.groups)).margin(1e-10));
        CHECK(r.p_value ==
              Catch::Approx(oracles::chi2_upper_tail_by_quadrature(r.statistic, 1)).margin(1e-8));
    }
    SECTION("invariant to permuting values within groups") {
        GroupedSamples g;
        g.groups = {{3.2, 1.1, 4.4}, {2.0, 5.5, 0.7, 3.9}};
        double h0 = kruskal_wallis(g).statistic;
        GroupedSamples shuffled;
        shuffled.groups = {{4.4, 3.2, 1.1}, {0.7, 3.9, 5.5, 2.0}};
        CHECK(kruskal_wallis(shuffled).statistic == Catch::Approx(h0).margin(1e-14));
    }
    SECTION("ties get midranks and the tie correction") {
        GroupedSamples g;
        g.groups = {{1.0, 2.0, 2.0}, {2.0, 3.0, 4.0}};
        TestResult r = kruskal_wallis(g);
        CHECK(r.statistic ==
              Catch::Approx(oracles::kruskal_wallis_h_direct(g.groups)).margin(1e-12));
    }
    SECTION("all-tied data flags p=1") {
        GroupedSamples g;
        g.groups = {{5, 5, 5}, {5, 5}};
        TestResult r = kruskal_wallis(g);
        CHECK(r.statistic == 0.0);
        CHECK(r.p_value == 1.0);
        CHECK_FALSE(r.flag.empty());
    }
}

TEST_CASE("dunn_test") {
    SECTION("identical groups give z=0 and corrected p=1") {
        GroupedSamples g;
        g.groups = {{1, 2, 3}, {1, 2, 3}};
        auto cmp = dunn_test(g);
        REQUIRE(cmp.size() == 1);
        CHECK(cmp[0].z == Catch::Approx(0.0).margin(1e-12));
        CHECK(cmp[0].p_adjusted == 1.0);
    }
    SECTION("three-group example matches the rank-formula oracle") {
        GroupedSamples g;
        g.groups = {{2.9, 3.0, 2.5, 2.6, 3.2},
                    {3.8, 2.7, 4.0, 2.4},
                    {2.8, 3.4, 3.7, 2.2, 2.0, 3.3}};
        g.names = {"a", "b", "c"};
        auto cmp = dunn_test(g);
        REQUIRE(cmp.size() == 3);
        for (const auto& c : cmp) {
            double z_oracle = oracles::dunn_z_direct(g.groups, c.group_a, c.group_b);
            CHECK(c.z == Catch::Approx(z_oracle).margin(1e-8));
            double p_oracle = std::erfc(std::abs(z_oracle) / std::sqrt(2.0));
            CHECK(c.p_raw == Catch::Approx(p_oracle).margin(1e-8));
            CHECK(c.p_adjusted == Catch::Approx(std::min(1.0, 3.0 * p_oracle)).margin(1e-8));
            CHECK(c.p_adjusted >= c.p_raw);
            CHECK(c.p_adjusted <= 1.0);
        }
    }
    SECTION("all-tied data is an error") {
        GroupedSamples g;
        g.groups = {{1, 1}, {1, 1, 1}};
        CHECK_THROWS_AS(dunn_test(g), data_error);
    }
}

TEST_CASE("logistic_fit") {
    SECTION("a zero-association predictor gets a near-zero coefficient") {
        // y balanced, predictor pattern identical across classes
        const int n = 40;
        Eigen::VectorXd y(n);
        Eigen::MatrixXd X(n, 2);
        for (int i = 0; i < n; ++i) {
            y(i) = i < n / 2 ? 0.0 : 1.0;
            X(i, 0) = 1.0;
            X(i, 1) = (i % (n / 2)) % 3 - 1.0;  // same values in both halves
        }
        LogisticFit fit = logistic_fit(y, X);
        CHECK(fit.converged);
        CHECK(std::abs(fit.coefficients(1)) < 1e-6);
        CHECK(fit.p_values(1) > 0.98);
    }
    SECTION("intercept-only fit recovers the sample log odds") {
        Eigen::VectorXd y(10);
        y << 1, 1, 1, 0, 0, 0, 0, 0, 0, 0;
        Eigen::MatrixXd X = Eigen::MatrixXd::Ones(10, 1);
        LogisticFit fit = logistic_fit(y, X);
        CHECK(fit.converged);
        CHECK(fit.coefficients(0) == Catch::Approx(std::log(0.3 / 0.7)).margin(1e-8));
        CHECK(fit.coefficients(0) == Catch::Approx(-0.8472978603872034).margin(1e-8));
    }
    SECTION("small dataset matches the Newton oracle") {
        Eigen::VectorXd y(10);
        y << 0, 0, 1, 0, 1, 1, 0, 1, 1, 1;
        Eigen::MatrixXd X(10, 2);
        for (int i = 0; i < 10; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = 0.37 * i - 2.0 + (i % 2 == 0 ? 0.4 : -0.4);
        }
        LogisticFit fit = logistic_fit(y, X);
        Eigen::VectorXd oracle = oracles::logistic_newton_direct(y, X);
        CHECK((fit.coefficients - oracle).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(fit.converged);
    }
    SECTION("deviance is non-increasing across IRLS iterations") {
        Rng rng(23);
        Eigen::VectorXd y(30);
        Eigen::MatrixXd X(30, 3);
        for (int i = 0; i < 30; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = rng.normal(0.0, 1.0);
            X(i, 2) = rng.normal(0.0, 1.0);
            double eta = 0.5 + X(i, 1) - 0.7 * X(i, 2);
            y(i) = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
        }
        LogisticFit fit = logistic_fit(y, X);
        for (std::size_t i = 1; i < fit.deviance_trace.size(); ++i)
            CHECK(fit.deviance_trace[i] <= fit.deviance_trace[i - 1] + 1e-10);
    }
    SECTION("separation is flagged, not fitted through") {
        Eigen::VectorXd y(8);
        Eigen::MatrixXd X(8, 2);
        for (int i = 0; i < 8; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = i;
            y(i) = i < 4 ? 0.0 : 1.0;  // perfectly separated at x = 3.5
        }
        LogisticFit fit = logistic_fit(y, X);
        CHECK_FALSE(fit.converged);
        CHECK_FALSE(fit.diagnostic.empty());
    }
    SECTION("input validation") {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(6);
        Eigen::MatrixXd X = Eigen::MatrixXd::Ones(6, 1);
        CHECK_THROWS_AS(logistic_fit(y, X), data_error);  // single class
        y << 0, 1, 0, 1, 0, 1;
        Eigen::MatrixXd dup(6, 2);
        dup.col(0).setOnes();
        dup.col(1).setOnes();
        CHECK_THROWS_AS(logistic_fit(y, dup), data_error);  // rank deficient
    }
}

TEST_CASE("special functions") {
    SECTION("incomplete beta endpoints and reference values") {
        CHECK(reg_inc_beta(2.0, 3.0, 0.0) == 0.0);
        CHECK(reg_inc_beta(2.0, 3.0, 1.0) == 1.0);
        CHECK(reg_inc_beta(2.0, 3.0, 0.4) == Catch::Approx(0.5248).epsilon(1e-10));
        CHECK(reg_inc_beta(0.5, 5.0, 0.2) ==
              Catch::Approx(0.8550723945959196).epsilon(1e-10));
        CHECK(reg_inc_beta(5.0, 0.5, 0.9) ==
              Catch::Approx(0.3166429150200123).epsilon(1e-10));
        CHECK(reg_inc_beta(2.5, 3.5, 0.62) ==
              Catch::Approx(0.8442672211195659).epsilon(1e-10));
    }
    SECTION("upper incomplete gamma reference values") {
        CHECK(reg_inc_gamma_upper(0.5, 2.0) ==
              Catch::Approx(0.04550026389635842).epsilon(1e-10));
        CHECK(reg_inc_gamma_upper(3.0, 5.0) ==
              Catch::Approx(0.12465201948308114).epsilon(1e-10));
        CHECK(reg_inc_gamma_upper(2.5, 0.5) ==
              Catch::Approx(0.9625657732472964).epsilon(1e-10));
    }
    SECTION("Q(1, x) is exactly exp(-x)") {
        for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 40.0})
            CHECK(reg_inc_gamma_upper(1.0, x) == Catch::Approx(std::exp(-x)).epsilon(1e-10));
        CHECK(reg_inc_gamma_upper(1.0, 1.0) ==
              Catch::Approx(0.36787944117144233).epsilon(1e-12));
    }
    SECTION("normal cdf values and symmetry") {
        CHECK(std_normal_cdf(0.0) == 0.5);
        CHECK(std_normal_cdf(1.96) == Catch::Approx(0.9750021048517796).epsilon(1e-12));
        CHECK(std_normal_cdf(-5.0) == Catch::Approx(2.866515718791939e-7).epsilon(1e-10));
        Rng rng(31);
        for (int i = 0; i < 20; ++i) {
            double x = rng.normal(0.0, 3.0);
            CHECK(std_normal_cdf(x) + std_normal_cdf(-x) == Catch::Approx(1.0).margin(1e-14));
        }
    }
    SECTION("p-value backends are monotone in the statistic") {
        double prev_f = 1.0, prev_chi = 1.0, prev_z = 1.0;
        for (double s = 0.25; s < 40.0; s *= 1.5) {
            double pf = f_upper_tail(s, 3, 14);
            double pchi = chi_square_upper_tail(s, 4);
            double pz = two_sided_normal_p(s);
            CHECK(pf < prev_f);
            CHECK(pchi < prev_chi);
            CHECK(pz < prev_z);
            prev_f = pf;
            prev_chi = pchi;
            prev_z = pz;
        }
    }
    SECTION("deep tails keep full relative precision") {
        // two-sided normal p around |z| = 20 is ~5.5e-89 and must not flush
        double p = two_sided_normal_p(20.0);
        CHECK(p > 1e-95);
        CHECK(p < 1e-85);
        double chi = chi_square_upper_tail(400.0, 1.0);
        CHECK(chi > 0.0);
        CHECK(chi < 1e-80);
    }
    SECTION("domain violations throw") {
        CHECK_THROWS_AS(reg_inc_beta(-1.0, 2.0, 0.5), numeric_error);
        CHECK_THROWS_AS(reg_inc_beta(1.0, 2.0, 1.5), numeric_error);
        CHECK_THROWS_AS(reg_inc_gamma_upper(0.0, 1.0), numeric_error);
        CHECK_THROWS_AS(reg_inc_gamma_upper(1.0, -1.0), numeric_error);
    }
}
