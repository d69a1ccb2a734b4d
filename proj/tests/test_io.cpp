#include <catch2/catch_amalgamated.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <random>

#include "diffmap/config.hpp"
#include "diffmap/csv.hpp"
#include "diffmap/geojson.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
namespace io = diffmap::io;

namespace {

fs::path test_dir() {
    const fs::path dir = fs::temp_directory_path() / "diffmap_io_tests";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("format_double round-trips every value bit for bit") {
    std::mt19937_64 rng(149);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    for (int rep = 0; rep < 500; ++rep) {
        const double v = uniform(rng) * std::pow(10.0, static_cast<int>(rng() % 41) - 20);
        REQUIRE(io::parse_double(io::format_double(v), 0, 0) == v);
    }
    REQUIRE(io::parse_double(io::format_double(0.1), 0, 0) == 0.1);
    REQUIRE(io::parse_double(io::format_double(-0.0), 0, 0) == 0.0);
}

TEST_CASE("strict parsing rejects anything but a full number") {
    REQUIRE(io::parse_double("-1.5e3", 0, 0) == -1500.0);
    for (const std::string bad : {"", " 1", "1 ", "1,2", "abc", "1.2.3", "0x10", "nanx"}) {
        try {
            io::parse_double(bad, 4, 2);
            FAIL("expected NonNumericCell for '" + bad + "'");
        } catch (const diffmap::NonNumericCell& e) {
            REQUIRE(e.row == 4);
            REQUIRE(e.col == 2);
            REQUIRE(e.text == bad);
        }
    }
}

TEST_CASE("csv parser handles quoting, CRLF, and embedded separators") {
    const auto rows = io::parse_csv("a,b,c\r\n\"x,1\",\"line\nbreak\",\"he said \"\"hi\"\"\"\n1,2,3");
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[0] == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(rows[1][0] == "x,1");
    REQUIRE(rows[1][1] == "line\nbreak");
    REQUIRE(rows[1][2] == "he said \"hi\"");
    REQUIRE(rows[2] == std::vector<std::string>{"1", "2", "3"});
    // Trailing newline does not create an empty row.
    REQUIRE(io::parse_csv("a,b\n1,2\n").size() == 2);
    REQUIRE(io::parse_csv("").empty());
}

TEST_CASE("feature tables survive a write-read round trip unchanged") {
    std::mt19937_64 rng(151);
    const auto features = testsupport::make_features(testsupport::random_points(rng, 25, 6));
    const fs::path path = test_dir() / "features_roundtrip.csv";
    io::write_features_csv(path, features);
    const auto back = io::load_features(path);
    REQUIRE(back.area_ids == features.area_ids);
    REQUIRE(back.column_names == features.column_names);
    REQUIRE(back.values == features.values);
    REQUIRE_FALSE(fs::exists(path.string() + ".tmp"));
}

TEST_CASE("feature loading failures are typed and located") {
    const fs::path dir = test_dir();

    io::atomic_write(dir / "no_id.csv", "name,v1\nA,1\n");
    REQUIRE_THROWS_AS(io::load_features(dir / "no_id.csv"), diffmap::MissingIdColumn);

    io::atomic_write(dir / "dup.csv", "area_code,v1\nA,1\nA,2\n");
    REQUIRE_THROWS_AS(io::load_features(dir / "dup.csv"), diffmap::DuplicateAreaId);

    io::atomic_write(dir / "ragged.csv", "area_code,v1,v2\nA,1\n");
    REQUIRE_THROWS_AS(io::load_features(dir / "ragged.csv"), diffmap::MalformedRow);

    io::atomic_write(dir / "text.csv", "area_code,v1\nA,fast\n");
    try {
        io::load_features(dir / "text.csv");
        FAIL("expected NonNumericCell");
    } catch (const diffmap::NonNumericCell& e) {
        REQUIRE(e.row == 2);
        REQUIRE(e.text == "fast");
    }

    io::atomic_write(dir / "empty.csv", "");
    REQUIRE_THROWS_AS(io::load_features(dir / "empty.csv"), diffmap::IoError);
    io::atomic_write(dir / "header_only.csv", "area_code,v1\n");
    REQUIRE_THROWS_AS(io::load_features(dir / "header_only.csv"), diffmap::IoError);
    REQUIRE_THROWS_AS(io::load_features(dir / "does_not_exist.csv"), diffmap::IoError);
}

TEST_CASE("hierarchy files load into the lookup") {
    const fs::path path = test_dir() / "lookup.csv";
    io::atomic_write(path, "oa_code,lsoa_code\nA1,L1\nA2,L1\nA3,L2\n");
    const auto h = io::load_hierarchy(path);
    REQUIRE(h.oa_to_lsoa.size() == 3);
    REQUIRE(h.lsoa_ids == std::vector<std::string>{"L1", "L2"});

    io::atomic_write(path, "oa_code,lsoa_code\nA1,L1\nA1,L2\n");
    REQUIRE_THROWS_AS(io::load_hierarchy(path), diffmap::ConflictingMapping);
}

TEST_CASE("deprivation files load scores and optional ranks") {
    const fs::path path = test_dir() / "imd.csv";
    std::string full =
        "lsoa_code,imd_score,imd_rank,income,employment,health,education,"
        "barriers,crime,living_env,income_rank\n"
        "L1,30.5,2,0.2,0.3,1.1,20,15,0.5,22,5\n"
        "L2,10.0,9,0.1,0.1,0.2,5,30,0.1,14,8\n";
    io::atomic_write(path, full);
    const auto table = io::load_deprivation(path);
    REQUIRE(table.rows() == 2);
    REQUIRE(table.has_imd_rank());
    REQUIRE(table.has_domain_ranks());
    REQUIRE(table.imd_score(0) == 30.5);
    REQUIRE(table.imd_rank(1) == 9.0);
    REQUIRE(table.domain_scores.at(diffmap::Domain::Health)(0) == 1.1);
    REQUIRE(table.domain_ranks.count(diffmap::Domain::Income) == 1);
    REQUIRE(table.domain_ranks.count(diffmap::Domain::Crime) == 0);
    REQUIRE(table.domain_ranks.at(diffmap::Domain::Income)(1) == 8.0);

    io::atomic_write(path,
                     "lsoa_code,imd_score,income,employment,health,education,"
                     "barriers,crime\nL1,1,1,1,1,1,1,1\n");
    REQUIRE_THROWS_AS(io::load_deprivation(path), diffmap::MissingDomainColumn);
}

TEST_CASE("code lists accept an optional header and skip blanks") {
    const fs::path path = test_dir() / "codes.csv";
    io::atomic_write(path, "lsoa_code\nL1\nL2\n\nL1\n");
    REQUIRE(io::load_code_list(path) == std::set<std::string>{"L1", "L2"});

    io::atomic_write(path, "L3\nL4\n");
    REQUIRE(io::load_code_list(path) == std::set<std::string>{"L3", "L4"});

    io::atomic_write(path, "a,b\n");
    REQUIRE_THROWS_AS(io::load_code_list(path), diffmap::MalformedRow);
    io::atomic_write(path, "\n\n");
    REQUIRE_THROWS_AS(io::load_code_list(path), diffmap::IoError);
}

TEST_CASE("area vectors round-trip through their csv form") {
    std::mt19937_64 rng(157);
    diffmap::AreaVector v;
    v.area_ids = testsupport::make_ids(15);
    v.values = testsupport::random_points(rng, 15, 1);
    const fs::path path = test_dir() / "vector.csv";
    io::write_vector_csv(path, v, "score");
    const auto back = io::load_vector_csv(path, "score");
    REQUIRE(back.area_ids == v.area_ids);
    REQUIRE(back.values == v.values);
}

TEST_CASE("embedding csv exposes only the nonzero eigenvectors") {
    diffmap::SpectralEmbedding emb;
    emb.area_ids = {"A", "B", "C"};
    emb.eigenvalues.resize(3);
    emb.eigenvalues << 0.0, 0.4, 1.1;
    emb.eigenvectors.resize(3, 3);
    emb.eigenvectors << 0.5, 0.1, 0.25,
                        0.5, 0.2, -0.5,
                        0.5, -0.3, 0.125;
    emb.n_components = 1;

    const fs::path path = test_dir() / "embedding.csv";
    io::write_embedding_csv(path, emb);
    const auto rows = io::parse_csv(io::read_file(path));
    REQUIRE(rows[0] == std::vector<std::string>{"area_code", "ev1", "ev2"});
    REQUIRE(rows.size() == 4);
    REQUIRE(rows[1][0] == "A");
    // The zero-mode column (all 0.5) never appears.
    REQUIRE(io::parse_double(rows[1][1], 0, 0) == 0.1);
    REQUIRE(io::parse_double(rows[3][2], 0, 0) == 0.125);
}

TEST_CASE("boundary files index features by area code") {
    nlohmann::json doc;
    doc["type"] = "FeatureCollection";
    doc["features"] = nlohmann::json::array();
    for (const std::string code : {"A", "B", "C"}) {
        nlohmann::json f;
        f["type"] = "Feature";
        f["properties"]["area_code"] = code;
        f["geometry"] = {{"type", "Point"}, {"coordinates", {0.0, 0.0}}};
        doc["features"].push_back(f);
    }
    const fs::path path = test_dir() / "bounds.geojson";
    io::atomic_write(path, doc.dump());
    const auto bf = io::load_boundaries(path);
    REQUIRE(bf.code_to_feature.size() == 3);
    REQUIRE(bf.code_to_feature.at("B") == 1);

    diffmap::AreaVector series;
    series.area_ids = {"B", "A", "Z"};
    series.values.resize(3);
    series.values << 1.5, -2.0, 7.0;
    const fs::path out = test_dir() / "choropleth.geojson";
    const auto stats = io::export_choropleth(out, bf, series);
    REQUIRE(stats.written == 2);
    REQUIRE(stats.skipped_ids == std::vector<std::string>{"Z"});

    const auto written = nlohmann::json::parse(io::read_file(out));
    REQUIRE(written["type"] == "FeatureCollection");
    REQUIRE(written["features"].size() == 2);
    // Series order, not boundary order.
    REQUIRE(written["features"][0]["properties"]["area_code"] == "B");
    REQUIRE(written["features"][0]["properties"]["value"] == 1.5);
    REQUIRE(written["features"][1]["properties"]["value"] == -2.0);
}

TEST_CASE("boundary loading failures are typed") {
    const fs::path path = test_dir() / "bad.geojson";
    io::atomic_write(path, "{not json");
    REQUIRE_THROWS_AS(io::load_boundaries(path), diffmap::InvalidGeoJson);
    io::atomic_write(path, R"({"type":"Topology","features":[]})");
    REQUIRE_THROWS_AS(io::load_boundaries(path), diffmap::InvalidGeoJson);
    io::atomic_write(path,
                     R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{}}]})");
    REQUIRE_THROWS_AS(io::load_boundaries(path), diffmap::InvalidGeoJson);
    io::atomic_write(
        path,
        R"({"type":"FeatureCollection","features":[)"
        R"({"type":"Feature","properties":{"area_code":"A"}},)"
        R"({"type":"Feature","properties":{"area_code":"A"}}]})");
    REQUIRE_THROWS_AS(io::load_boundaries(path), diffmap::DuplicateAreaId);
}

TEST_CASE("config files override defaults key by key") {
    const fs::path path = test_dir() / "run.conf";
    io::atomic_write(path,
                     "# pipeline settings\n"
                     "k_neighbors = 7\n"
                     "\n"
                     "classification_threshold=0.5\n"
                     "weight_income = 0.5\n"
                     "strong_domains = income,health\n"
                     "clamp_coincident = true\n"
                     "seed = 99\n");
    const auto config = diffmap::load_config(path);
    REQUIRE(config.k_neighbors == 7);
    REQUIRE(config.classification_threshold == 0.5);
    REQUIRE(config.domain_weights.at(diffmap::Domain::Income) == 0.5);
    REQUIRE(config.domain_weights.at(diffmap::Domain::Crime) == 0.093);
    REQUIRE(config.strong ==
            std::vector<diffmap::Domain>{diffmap::Domain::Income, diffmap::Domain::Health});
    REQUIRE(config.clamp_coincident);
    REQUIRE(config.seed == 99);
    // Untouched keys keep their defaults.
    REQUIRE(config.n_eigenvectors == 2);
    REQUIRE(config.deprived_rank_cutoff == 3284);

    io::atomic_write(path, "mystery = 1\n");
    REQUIRE_THROWS_AS(diffmap::load_config(path), diffmap::BadConfig);
    io::atomic_write(path, "k_neighbors = soon\n");
    REQUIRE_THROWS_AS(diffmap::load_config(path), diffmap::BadConfig);
    io::atomic_write(path, "clamp_coincident = maybe\n");
    REQUIRE_THROWS_AS(diffmap::load_config(path), diffmap::BadConfig);
    io::atomic_write(path, "just a line\n");
    REQUIRE_THROWS_AS(diffmap::load_config(path), diffmap::BadConfig);
    io::atomic_write(path, "strong_domains = income,postcode\n");
    REQUIRE_THROWS_AS(diffmap::load_config(path), diffmap::BadConfig);
}
