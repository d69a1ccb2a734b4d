#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "diffmap/csv.hpp"
#include "diffmap/errors.hpp"
#include "diffmap/evaluation.hpp"

namespace diffmap {

// Every knob of the pipeline, with the defaults the Bristol analysis used.
struct PipelineConfig {
    std::size_t k_neighbors = 10;
    std::size_t n_eigenvectors = 2;
    double zero_tolerance_rel = 1e-9;
    // Cut on the deprivation axis; areas at or above are classified deprived.
    double classification_threshold = 0.02365;
    // Which nonzero eigenvector carries deprivation (1-based).
    std::size_t classification_eigenvector = 2;
    std::map<Domain, double> domain_weights = default_domain_weights();
    std::vector<Domain> strong = strong_domains();
    std::vector<Domain> weak = weak_domains();
    bool clamp_coincident = false;
    std::size_t dense_solver_cutoff = 500;
    double fn_rank_percentile = 0.10;
    // Ground-truth cut when only ranks are given: the national top-10% count.
    std::size_t deprived_rank_cutoff = 3284;
    std::string boundary_code_property = "area_code";
    std::uint64_t seed = 42;
};

namespace detail {

template <typename T>
T parse_config_number(const std::string& key, const std::string& value) {
    T out{};
    const char* begin = value.data();
    const char* end = begin + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end)
        throw BadConfig("config: bad value for " + key + ": '" + value + "'");
    return out;
}

inline std::vector<Domain> parse_domain_list(const std::string& key, const std::string& value) {
    std::vector<Domain> out;
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(domain_from_name(item));
        } catch (const std::invalid_argument&) {
            throw BadConfig("config: bad domain in " + key + ": '" + item + "'");
        }
    }
    if (out.empty()) throw BadConfig("config: empty domain list for " + key);
    return out;
}

} // namespace detail

// Applies one key=value setting. Domain weights use weight_<domain> keys;
// strong_domains / weak_domains take comma-separated domain names.
inline void apply_config_entry(PipelineConfig& config, const std::string& key,
                               const std::string& value) {
    if (key == "k_neighbors")
        config.k_neighbors = detail::parse_config_number<std::size_t>(key, value);
    else if (key == "n_eigenvectors")
        config.n_eigenvectors = detail::parse_config_number<std::size_t>(key, value);
    else if (key == "zero_tolerance_rel")
        config.zero_tolerance_rel = detail::parse_config_number<double>(key, value);
    else if (key == "classification_threshold")
        config.classification_threshold = detail::parse_config_number<double>(key, value);
    else if (key == "classification_eigenvector")
        config.classification_eigenvector = detail::parse_config_number<std::size_t>(key, value);
    else if (key == "clamp_coincident") {
        if (value == "true" || value == "1")
            config.clamp_coincident = true;
        else if (value == "false" || value == "0")
            config.clamp_coincident = false;
        else
            throw BadConfig("config: bad boolean for clamp_coincident: '" + value + "'");
    } else if (key == "dense_solver_cutoff")
        config.dense_solver_cutoff = detail::parse_config_number<std::size_t>(key, value);
    else if (key == "fn_rank_percentile")
        config.fn_rank_percentile = detail::parse_config_number<double>(key, value);
    else if (key == "deprived_rank_cutoff")
        config.deprived_rank_cutoff = detail::parse_config_number<std::size_t>(key, value);
    else if (key == "boundary_code_property")
        config.boundary_code_property = value;
    else if (key == "seed")
        config.seed = detail::parse_config_number<std::uint64_t>(key, value);
    else if (key == "strong_domains")
        config.strong = detail::parse_domain_list(key, value);
    else if (key == "weak_domains")
        config.weak = detail::parse_domain_list(key, value);
    else if (key.rfind("weight_", 0) == 0) {
        Domain d;
        try {
            d = domain_from_name(key.substr(7));
        } catch (const std::invalid_argument&) {
            throw BadConfig("config: unknown domain in key '" + key + "'");
        }
        config.domain_weights[d] = detail::parse_config_number<double>(key, value);
    } else
        throw BadConfig("config: unknown key '" + key + "'");
}

// key=value file, one per line; blank lines and lines starting with # are
// skipped; whitespace around key and value is trimmed.
inline PipelineConfig load_config(const std::filesystem::path& path,
                                  PipelineConfig config = {}) {
    const std::string text = io::read_file(path);
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    while (std::getline(lines, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << path.string() << ":" << line_no << ": expected key=value";
            throw BadConfig(msg.str());
        }
        apply_config_entry(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return config;
}

} // namespace diffmap
