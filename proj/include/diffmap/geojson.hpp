#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "diffmap/csv.hpp"
#include "diffmap/embedding.hpp"
#include "diffmap/errors.hpp"

namespace diffmap::io {

// A GeoJSON FeatureCollection indexed by the property that carries the area
// code.
struct BoundaryFile {
    nlohmann::json collection;
    std::string code_property;
    std::map<std::string, std::size_t> code_to_feature;
};

inline BoundaryFile load_boundaries(const std::filesystem::path& path,
                                    const std::string& code_property = "area_code") {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidGeoJson(path.string() + ": " + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
        !doc.contains("features") || !doc["features"].is_array())
        throw InvalidGeoJson(path.string() + ": not a GeoJSON FeatureCollection");

    BoundaryFile bf;
    bf.code_property = code_property;
    const auto& features = doc["features"];
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        if (!f.is_object() || f.value("type", "") != "Feature" || !f.contains("properties") ||
            !f["properties"].is_object()) {
            std::ostringstream msg;
            msg << path.string() << ": feature " << i << " is not a GeoJSON Feature";
            throw InvalidGeoJson(msg.str());
        }
        const auto& props = f["properties"];
        if (!props.contains(code_property) || !props[code_property].is_string()) {
            std::ostringstream msg;
            msg << path.string() << ": feature " << i << " lacks string property '"
                << code_property << "'";
            throw InvalidGeoJson(msg.str());
        }
        const std::string code = props[code_property].get<std::string>();
        if (!bf.code_to_feature.emplace(code, i).second)
            throw DuplicateAreaId(path.string() + ": duplicate boundary code '" + code + "'");
    }
    bf.collection = std::move(doc);
    return bf;
}

struct ChoroplethStats {
    std::size_t written = 0;
    // Codes in the series that have no boundary polygon.
    std::vector<std::string> skipped_ids;
};

// Writes a FeatureCollection of the boundaries matched by the series, each
// with the series value stored under `value_property`. Features follow series
// order; unmatched codes are reported, not fatal (boundary files routinely
// cover a different vintage of areas than the data).
inline ChoroplethStats export_choropleth(const std::filesystem::path& path,
                                         const BoundaryFile& boundaries, const AreaVector& series,
                                         const std::string& value_property = "value") {
    if (series.area_ids.size() != static_cast<std::size_t>(series.values.size()))
        throw std::invalid_argument("export_choropleth: area_ids/values mismatch");

    ChoroplethStats stats;
    nlohmann::json out;
    out["type"] = "FeatureCollection";
    out["features"] = nlohmann::json::array();
    for (std::size_t i = 0; i < series.area_ids.size(); ++i) {
        const auto it = boundaries.code_to_feature.find(series.area_ids[i]);
        if (it == boundaries.code_to_feature.end()) {
            stats.skipped_ids.push_back(series.area_ids[i]);
            continue;
        }
        nlohmann::json feature = boundaries.collection["features"][it->second];
        feature["properties"][value_property] = series.values(static_cast<Eigen::Index>(i));
        out["features"].push_back(std::move(feature));
        ++stats.written;
    }
    atomic_write(path, out.dump(2) + "\n");
    return stats;
}

} // namespace diffmap::io
