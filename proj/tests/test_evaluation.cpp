#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "diffmap/evaluation.hpp"
#include "test_support.hpp"

using diffmap::AreaVector;
using diffmap::classify_deprived;
using diffmap::combine_domains;
using diffmap::confusion;
using diffmap::correlation_matrix;
using diffmap::DeprivationTable;
using diffmap::Domain;
using diffmap::orient_to;
using diffmap::pearson;
using diffmap::threshold_for_count;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (const double x : xs) v(i++) = x;
    return v;
}

} // namespace

TEST_CASE("pearson hand values and definitional agreement") {
    // (1,2,3,4) vs (2,1,4,3): swapping inside pairs gives exactly 0.6.
    REQUIRE(pearson(vec({1, 2, 3, 4}), vec({2, 1, 4, 3})) == 0.6);

    std::mt19937_64 rng(113);
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng() % 100);
        const Eigen::VectorXd x = testsupport::random_points(rng, n, 1);
        const Eigen::VectorXd y = testsupport::random_points(rng, n, 1);
        const double r = pearson(x, y);
        REQUIRE(r == Catch::Approx(testsupport::oracle_pearson(x, y)).margin(1e-12));
        REQUIRE(r >= -1.0);
        REQUIRE(r <= 1.0);
    }
}

TEST_CASE("affine pairs with power-of-two slope correlate to exactly one") {
    Eigen::VectorXd x(256);
    for (Eigen::Index i = 0; i < 256; ++i) x(i) = static_cast<double>(i);
    for (const double a : {2.0, -4.0, 0.5, -1.0}) {
        const Eigen::VectorXd y = a * x.array() + 3.0;
        REQUIRE(pearson(x, y) == (a > 0 ? 1.0 : -1.0));
    }
}

TEST_CASE("pearson input validation") {
    REQUIRE_THROWS_AS(pearson(vec({1, 2, 3}), vec({1, 2})), diffmap::LengthMismatch);
    REQUIRE_THROWS_AS(pearson(vec({1}), vec({2})), std::invalid_argument);
    REQUIRE_THROWS_AS(pearson(vec({1, 1, 1}), vec({1, 2, 3})), diffmap::ConstantSeries);
    Eigen::VectorXd bad = vec({1, 2, 3});
    bad(1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(pearson(bad, vec({1, 2, 3})), diffmap::NonFiniteInput);
}

TEST_CASE("correlation tables cover every row-column pair") {
    std::mt19937_64 rng(127);
    std::vector<diffmap::NamedSeries> rows{
        {"ev1", testsupport::random_points(rng, 30, 1)},
        {"ev2", testsupport::random_points(rng, 30, 1)},
    };
    std::vector<diffmap::NamedSeries> cols{
        {"imd", testsupport::random_points(rng, 30, 1)},
        {"income", testsupport::random_points(rng, 30, 1)},
        {"health", testsupport::random_points(rng, 30, 1)},
    };
    const auto table = correlation_matrix(rows, cols);
    REQUIRE(table.r.rows() == 2);
    REQUIRE(table.r.cols() == 3);
    for (const auto& s : rows)
        for (const auto& c : cols)
            REQUIRE(table.at(s.name, c.name) == pearson(s.values, c.values));
    REQUIRE_THROWS_AS(table.at("ev1", "nope"), std::invalid_argument);
}

TEST_CASE("domain names round-trip and official weights are kept verbatim") {
    for (Domain d : diffmap::all_domains)
        REQUIRE(diffmap::domain_from_name(diffmap::domain_name(d)) == d);
    REQUIRE_THROWS_AS(diffmap::domain_from_name("postcode"), std::invalid_argument);

    const auto w = diffmap::default_domain_weights();
    double total = 0.0;
    for (const auto& [d, x] : w) total += x;
    REQUIRE(total == Catch::Approx(0.999).margin(1e-15));
    REQUIRE(w.at(Domain::Income) == 0.225);
    REQUIRE(w.at(Domain::LivingEnvironment) == 0.093);
}

TEST_CASE("combined scores renormalize the weights") {
    std::mt19937_64 rng(131);
    DeprivationTable table;
    table.lsoa_codes = testsupport::make_ids(20);
    table.imd_score = testsupport::random_points(rng, 20, 1);
    for (Domain d : diffmap::all_domains)
        table.domain_scores[d] = testsupport::random_points(rng, 20, 1);

    const auto weights = diffmap::default_domain_weights();
    const Eigen::VectorXd combined = combine_domains(table, weights);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(20);
    for (const auto& [d, w] : weights) expected += (w / 0.999) * table.domain_scores.at(d);
    REQUIRE((combined - expected).cwiseAbs().maxCoeff() < 1e-14);

    // A single unit-weight domain passes its scores through untouched.
    const Eigen::VectorXd solo = combine_domains(table, {{Domain::Crime, 2.0}});
    REQUIRE((solo - table.domain_scores.at(Domain::Crime)).cwiseAbs().maxCoeff() <
            1e-15);

    DeprivationTable incomplete;
    incomplete.lsoa_codes = {"A", "B"};
    incomplete.domain_scores[Domain::Income] = vec({1, 2});
    REQUIRE_THROWS_AS(combine_domains(incomplete, weights), diffmap::MissingDomain);
    REQUIRE_THROWS_AS(combine_domains(table, {{Domain::Income, -1.0}}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(combine_domains(table, {{Domain::Income, 0.0}}),
                      std::invalid_argument);
}

TEST_CASE("classification is inclusive at the threshold") {
    AreaVector coord;
    coord.area_ids = {"A", "B", "C", "D"};
    coord.values = vec({0.1, 0.3, 0.2999999, 0.5});
    const auto picked = classify_deprived(coord, 0.3);
    REQUIRE(picked == std::set<std::string>{"B", "D"});
    REQUIRE(classify_deprived(coord, 0.6).empty());
    REQUIRE(classify_deprived(coord, -1.0).size() == 4);
}

TEST_CASE("threshold_for_count selects exactly n distinct-valued areas") {
    std::mt19937_64 rng(137);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t m = 5 + rng() % 50;
        AreaVector coord;
        coord.area_ids = testsupport::make_ids(m);
        coord.values = testsupport::random_points(rng, static_cast<Eigen::Index>(m), 1);
        const std::size_t n = 1 + rng() % m;
        const double t = threshold_for_count(coord, n);
        REQUIRE(classify_deprived(coord, t).size() == n);
    }
    AreaVector coord;
    coord.area_ids = {"A", "B"};
    coord.values = vec({1, 2});
    REQUIRE_THROWS_AS(threshold_for_count(coord, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(threshold_for_count(coord, 3), std::invalid_argument);
}

TEST_CASE("confusion counts partition the universe") {
    const std::vector<std::string> universe{"A", "B", "C", "D", "E"};
    const auto counts = confusion({"A", "B"}, {"B", "C"}, universe);
    REQUIRE(counts.tp == 1);
    REQUIRE(counts.fp == 1);
    REQUIRE(counts.fn == 1);
    REQUIRE(counts.tn == 2);

    std::mt19937_64 rng(139);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t m = 2 + rng() % 60;
        const auto ids = testsupport::make_ids(m);
        std::set<std::string> predicted, truth;
        for (const auto& id : ids) {
            if (rng() % 2) predicted.insert(id);
            if (rng() % 2) truth.insert(id);
        }
        const auto c = confusion(predicted, truth, ids);
        REQUIRE(c.total() == m);
        REQUIRE(c.tp + c.fn == truth.size());
        REQUIRE(c.tp + c.fp == predicted.size());
    }

    REQUIRE_THROWS_AS(confusion({"Z"}, {}, universe), diffmap::CodeOutsideUniverse);
    REQUIRE_THROWS_AS(confusion({}, {"Z"}, universe), diffmap::CodeOutsideUniverse);
    REQUIRE_THROWS_AS(confusion({}, {}, {"A", "A"}), std::invalid_argument);
}

TEST_CASE("orientation follows the reference series") {
    AreaVector coord;
    coord.area_ids = {"A", "B", "C"};
    coord.values = vec({1, 2, 3});

    const auto kept = orient_to(coord, vec({10, 20, 30}));
    REQUIRE(kept.values == coord.values);
    const auto flipped = orient_to(coord, vec({30, 20, 10}));
    REQUIRE(flipped.values == -coord.values);
    // Undefined correlation leaves the orientation untouched.
    const auto constant = orient_to(coord, vec({5, 5, 5}));
    REQUIRE(constant.values == coord.values);
    REQUIRE_THROWS_AS(orient_to(coord, vec({1, 2})), diffmap::LengthMismatch);
}

TEST_CASE("false-negative domain diagnostics flag the explaining ranks") {
    DeprivationTable table;
    table.lsoa_codes = {"L1", "L2", "L3", "L4", "L5"};
    table.imd_rank = vec({3, 40, 7, 90, 55});
    table.domain_ranks[Domain::Barriers] = vec({5, 50, 10, 100, 11});
    table.domain_ranks[Domain::Income] = vec({90, 95, 20, 30, 100});

    const auto records = diffmap::fn_domain_diagnostics(
        {"L1", "L3"}, table, {Domain::Barriers}, {Domain::Income}, 0.10);
    REQUIRE(records.size() == 2);

    // Set iteration is lexicographic: L1 first. Cutoffs: weak rank <= 10,
    // strong rank >= 90, both inclusive.
    REQUIRE(records[0].lsoa_code == "L1");
    REQUIRE(records[0].imd_rank == 3.0);
    REQUIRE(records[0].weak_flagged == std::vector<Domain>{Domain::Barriers});
    REQUIRE(records[0].strong_flagged == std::vector<Domain>{Domain::Income});
    REQUIRE(records[0].ranks.at(Domain::Barriers) == 5.0);

    REQUIRE(records[1].lsoa_code == "L3");
    REQUIRE(records[1].weak_flagged == std::vector<Domain>{Domain::Barriers});
    REQUIRE(records[1].strong_flagged.empty());

    REQUIRE_THROWS_AS(diffmap::fn_domain_diagnostics({"L9"}, table, {}, {}, 0.10),
                      diffmap::CodeOutsideUniverse);
    REQUIRE_THROWS_AS(diffmap::fn_domain_diagnostics({"L1"}, table,
                                                     {Domain::Crime}, {}, 0.10),
                      diffmap::RanksMissing);
    DeprivationTable no_ranks;
    no_ranks.lsoa_codes = {"L1"};
    REQUIRE_THROWS_AS(diffmap::fn_domain_diagnostics({"L1"}, no_ranks, {}, {}, 0.10),
                      diffmap::RanksMissing);
}

TEST_CASE("false-negative drilldown reports members against the threshold") {
    const auto h = diffmap::AreaHierarchy::from_pairs(
        {{"A", "L0"}, {"B", "L0"}, {"C", "L1"}});
    AreaVector coord;
    coord.area_ids = {"A", "B", "C"};
    coord.values = vec({0.5, -0.2, 0.3});

    const auto report = diffmap::fn_oa_drilldown({"L0", "L1"}, h, coord, 0.3);
    REQUIRE(report.records.size() == 2);
    REQUIRE(report.member_count == 3);
    REQUIRE(report.above_count == 2);
    REQUIRE(report.records[0].lsoa_code == "L0");
    REQUIRE(report.records[0].n_above == 1);
    REQUIRE(report.records[0].members[0].oa_code == "A");
    REQUIRE(report.records[0].members[0].above);
    REQUIRE_FALSE(report.records[0].members[1].above);
    // The boundary member counts as above.
    REQUIRE(report.records[1].members[0].above);

    REQUIRE_THROWS_AS(diffmap::fn_oa_drilldown({"L9"}, h, coord, 0.3),
                      diffmap::CodeOutsideUniverse);
    AreaVector partial;
    partial.area_ids = {"A", "B"};
    partial.values = vec({0.5, -0.2});
    REQUIRE_THROWS_AS(diffmap::fn_oa_drilldown({"L1"}, h, partial, 0.3),
                      diffmap::EmptyLsoa);
}
