#pragma once

#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "diffmap/embedding.hpp"
#include "diffmap/errors.hpp"
#include "diffmap/feature_matrix.hpp"

namespace diffmap {

// Many-to-one mapping from small areas (OAs) to the larger areas (LSOAs) that
// contain them. lsoa_ids preserves first appearance order, which fixes the row
// order of everything aggregated through the hierarchy.
struct AreaHierarchy {
    std::map<std::string, std::string> oa_to_lsoa;
    std::vector<std::string> lsoa_ids;

    static AreaHierarchy from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
        AreaHierarchy h;
        for (const auto& [oa, lsoa] : pairs) {
            if (oa.empty() || lsoa.empty())
                throw std::invalid_argument("AreaHierarchy: empty area code");
            auto [it, inserted] = h.oa_to_lsoa.emplace(oa, lsoa);
            if (!inserted) {
                if (it->second != lsoa) {
                    std::ostringstream msg;
                    msg << "AreaHierarchy: OA " << oa << " mapped to both " << it->second
                        << " and " << lsoa;
                    throw ConflictingMapping(msg.str());
                }
                continue;
            }
            bool seen = false;
            for (const auto& id : h.lsoa_ids)
                if (id == lsoa) {
                    seen = true;
                    break;
                }
            if (!seen) h.lsoa_ids.push_back(lsoa);
        }
        return h;
    }

    // Sub-hierarchy covering exactly the given OAs, for running a partial
    // extract against a larger (for instance national) lookup. LSOA order
    // follows first appearance in oa_ids.
    AreaHierarchy restrict_to(const std::vector<std::string>& oa_ids) const {
        AreaHierarchy out;
        std::vector<std::string> missing;
        for (const auto& oa : oa_ids) {
            const auto it = oa_to_lsoa.find(oa);
            if (it == oa_to_lsoa.end()) {
                missing.push_back(oa);
                continue;
            }
            out.oa_to_lsoa.emplace(oa, it->second);
            bool seen = false;
            for (const auto& id : out.lsoa_ids)
                if (id == it->second) {
                    seen = true;
                    break;
                }
            if (!seen) out.lsoa_ids.push_back(it->second);
        }
        if (!missing.empty()) {
            std::ostringstream msg;
            msg << "restrict_to: " << missing.size() << " OA(s) absent from hierarchy, first "
                << missing.front();
            throw UnmappedArea(msg.str(), std::move(missing));
        }
        return out;
    }
};

namespace detail {

// Per-LSOA list of row positions into oa_ids, in lsoa_ids order. Every OA must
// be mapped and every LSOA must have at least one member row.
inline std::vector<std::vector<std::size_t>> member_rows(const AreaHierarchy& hierarchy,
                                                         const std::vector<std::string>& oa_ids) {
    std::map<std::string, std::size_t> lsoa_pos;
    for (std::size_t i = 0; i < hierarchy.lsoa_ids.size(); ++i)
        lsoa_pos.emplace(hierarchy.lsoa_ids[i], i);

    std::vector<std::vector<std::size_t>> rows(hierarchy.lsoa_ids.size());
    std::vector<std::string> missing;
    for (std::size_t r = 0; r < oa_ids.size(); ++r) {
        const auto it = hierarchy.oa_to_lsoa.find(oa_ids[r]);
        if (it == hierarchy.oa_to_lsoa.end()) {
            missing.push_back(oa_ids[r]);
            continue;
        }
        rows[lsoa_pos.at(it->second)].push_back(r);
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "aggregate: " << missing.size() << " OA(s) have no parent LSOA, first "
            << missing.front();
        throw UnmappedArea(msg.str(), std::move(missing));
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].empty()) {
            std::ostringstream msg;
            msg << "aggregate: LSOA " << hierarchy.lsoa_ids[i] << " has no member OAs in the data";
            throw EmptyLsoa(msg.str());
        }
    return rows;
}

} // namespace detail

// Mean of an OA-level series over each LSOA's members.
inline AreaVector aggregate_vector(const AreaHierarchy& hierarchy, const AreaVector& oa_values) {
    if (oa_values.area_ids.size() != static_cast<std::size_t>(oa_values.values.size()))
        throw std::invalid_argument("aggregate_vector: area_ids/values mismatch");
    const auto rows = detail::member_rows(hierarchy, oa_values.area_ids);

    AreaVector out;
    out.area_ids = hierarchy.lsoa_ids;
    out.values.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double sum = 0.0;
        for (const std::size_t r : rows[i]) sum += oa_values.values(static_cast<Eigen::Index>(r));
        out.values(static_cast<Eigen::Index>(i)) = sum / static_cast<double>(rows[i].size());
    }
    return out;
}

// Mean of each raw feature column over each LSOA's members. Aggregation must
// happen before standardization (means of z-scores are not z-scores of means),
// so standardized input is rejected.
inline FeatureMatrix aggregate_features(const AreaHierarchy& hierarchy, const FeatureMatrix& oa_features) {
    if (oa_features.standardized)
        throw std::invalid_argument("aggregate_features: input is already standardized");
    if (oa_features.area_ids.size() != static_cast<std::size_t>(oa_features.values.rows()))
        throw std::invalid_argument("aggregate_features: area_ids/rows mismatch");
    const auto rows = detail::member_rows(hierarchy, oa_features.area_ids);

    FeatureMatrix out;
    out.area_ids = hierarchy.lsoa_ids;
    out.column_names = oa_features.column_names;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), oa_features.values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(oa_features.values.cols());
        for (const std::size_t r : rows[i]) sum += oa_features.values.row(static_cast<Eigen::Index>(r));
        out.values.row(static_cast<Eigen::Index>(i)) = sum / static_cast<double>(rows[i].size());
    }
    return out;
}

} // namespace diffmap
