#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "diffmap/feature_matrix.hpp"
#include "test_support.hpp"

using diffmap::FeatureMatrix;
using diffmap::standardize;

TEST_CASE("standardize matches hand-computed column") {
    // Column (1, 2, 3): mean 2, population std sqrt(2/3).
    Eigen::MatrixXd v(3, 1);
    v << 1.0, 2.0, 3.0;
    const auto out = standardize(testsupport::make_features(v));

    const double sd = testsupport::oracle_pop_std({1.0, 2.0, 3.0});
    REQUIRE(sd == Catch::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    REQUIRE(out.values(0, 0) == Catch::Approx(-1.0 / sd).epsilon(1e-15));
    REQUIRE(out.values(1, 0) == 0.0);
    REQUIRE(out.values(2, 0) == Catch::Approx(1.224744871391589).epsilon(1e-12));
    REQUIRE(out.column_means.at(0) == 2.0);
    REQUIRE(out.column_stds.at(0) == Catch::Approx(sd).epsilon(1e-15));
    REQUIRE(out.standardized);
}

TEST_CASE("standardized columns have zero mean and unit population std") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 40);
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 8);
        const auto fm = testsupport::make_features(
            testsupport::random_points(rng, m, n, -100.0, 100.0));
        const auto out = standardize(fm);
        REQUIRE(out.cols() == fm.cols());
        for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
            std::vector<double> col(out.values.col(j).data(),
                                    out.values.col(j).data() + m);
            REQUIRE(std::abs(testsupport::oracle_mean(col)) < 1e-12);
            REQUIRE(testsupport::oracle_pop_std(col) == Catch::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("constant columns are dropped and recorded") {
    Eigen::MatrixXd v(3, 3);
    v << 1.0, 5.0, 0.1,
         2.0, 5.0, 0.1,
         3.0, 5.0, 0.1;
    // Column 3 is constant at 0.1, whose mean rounds to something the values
    // differ from by ~1e-17; max == min must still catch it.
    const auto out = standardize(testsupport::make_features(v));
    REQUIRE(out.cols() == 1);
    REQUIRE(out.column_names == std::vector<std::string>{"var1"});
    REQUIRE(out.dropped_columns == std::vector<std::string>{"var2", "var3"});
}

TEST_CASE("all-constant input is an error") {
    Eigen::MatrixXd v(4, 2);
    v.col(0).setConstant(3.0);
    v.col(1).setConstant(-1.5);
    REQUIRE_THROWS_AS(standardize(testsupport::make_features(v)), diffmap::AllColumnsConstant);
}

TEST_CASE("non-finite input is rejected") {
    Eigen::MatrixXd v(3, 2);
    v.setOnes();
    v(1, 1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(standardize(testsupport::make_features(v)), diffmap::NonFiniteInput);
    v(1, 1) = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(standardize(testsupport::make_features(v)), diffmap::NonFiniteInput);
}

TEST_CASE("shape preconditions") {
    FeatureMatrix empty;
    REQUIRE_THROWS_AS(standardize(empty), std::invalid_argument);

    auto fm = testsupport::make_features(Eigen::MatrixXd::Random(3, 2));
    fm.area_ids.pop_back();
    REQUIRE_THROWS_AS(standardize(fm), std::invalid_argument);
}
