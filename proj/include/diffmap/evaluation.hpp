#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diffmap/embedding.hpp"
#include "diffmap/errors.hpp"
#include "diffmap/hierarchy.hpp"

namespace diffmap {

// The seven deprivation domains of the English indices, in their conventional
// order.
enum class Domain {
    Income,
    Employment,
    Health,
    Education,
    Barriers,
    Crime,
    LivingEnvironment,
};

inline constexpr std::array<Domain, 7> all_domains{
    Domain::Income,   Domain::Employment, Domain::Health, Domain::Education,
    Domain::Barriers, Domain::Crime,      Domain::LivingEnvironment,
};

inline std::string domain_name(Domain d) {
    switch (d) {
        case Domain::Income: return "income";
        case Domain::Employment: return "employment";
        case Domain::Health: return "health";
        case Domain::Education: return "education";
        case Domain::Barriers: return "barriers";
        case Domain::Crime: return "crime";
        case Domain::LivingEnvironment: return "living_env";
    }
    throw std::invalid_argument("domain_name: bad enum value");
}

inline Domain domain_from_name(const std::string& name) {
    for (Domain d : all_domains)
        if (domain_name(d) == name) return d;
    throw std::invalid_argument("domain_from_name: unknown domain '" + name + "'");
}

// Official weights of the composite index. They sum to 0.999 as published;
// combine_domains renormalizes.
inline std::map<Domain, double> default_domain_weights() {
    return {
        {Domain::Income, 0.225},   {Domain::Employment, 0.225},
        {Domain::Health, 0.135},   {Domain::Education, 0.135},
        {Domain::Barriers, 0.093}, {Domain::Crime, 0.093},
        {Domain::LivingEnvironment, 0.093},
    };
}

// Domains the embedding tracks well (the heavyweight socioeconomic four) and
// the ones it is expected to miss (geography- and report-driven).
inline std::vector<Domain> strong_domains() {
    return {Domain::Income, Domain::Employment, Domain::Health, Domain::Education};
}

inline std::vector<Domain> weak_domains() {
    return {Domain::Barriers, Domain::Crime, Domain::LivingEnvironment};
}

// Composite deprivation scores with the seven domain scores, plus ranks when
// the source file carries them (rank 1 = most deprived). imd_rank and
// domain_ranks have size zero / are empty when absent.
struct DeprivationTable {
    std::vector<std::string> lsoa_codes;
    Eigen::VectorXd imd_score;
    Eigen::VectorXd imd_rank;
    std::map<Domain, Eigen::VectorXd> domain_scores;
    std::map<Domain, Eigen::VectorXd> domain_ranks;

    std::size_t rows() const { return lsoa_codes.size(); }
    bool has_imd_rank() const { return imd_rank.size() > 0; }
    bool has_domain_ranks() const { return !domain_ranks.empty(); }
};

// Pearson correlation, computed as S_xy / sqrt(S_xx * S_yy) with a single
// square root of the product. For exactly affine inputs the product is the
// square of a representable number, so the result is exactly +1 or -1; the
// split form sqrt(S_xx)*sqrt(S_yy) rounds twice and cannot promise that.
inline double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) {
        std::ostringstream msg;
        msg << "pearson: length mismatch (" << x.size() << " vs " << y.size() << ")";
        throw LengthMismatch(msg.str());
    }
    if (x.size() < 2)
        throw std::invalid_argument("pearson: need at least 2 observations");
    if (!x.allFinite() || !y.allFinite())
        throw NonFiniteInput("pearson: input contains NaN or infinity");

    const double mx = x.mean();
    const double my = y.mean();
    const Eigen::ArrayXd dx = x.array() - mx;
    const Eigen::ArrayXd dy = y.array() - my;
    const double sxx = (dx * dx).sum();
    const double syy = (dy * dy).sum();
    if (sxx == 0.0 || syy == 0.0)
        throw ConstantSeries("pearson: zero-variance series");
    const double r = (dx * dy).sum() / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

// Named series for correlation tables.
struct NamedSeries {
    std::string name;
    Eigen::VectorXd values;
};

// Grid of Pearson correlations, rows by cols.
struct CorrelationTable {
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
    Eigen::MatrixXd r;

    double at(const std::string& row, const std::string& col) const {
        const auto ri = std::find(row_names.begin(), row_names.end(), row);
        const auto ci = std::find(col_names.begin(), col_names.end(), col);
        if (ri == row_names.end() || ci == col_names.end())
            throw std::invalid_argument("CorrelationTable::at: unknown name " + row + "/" + col);
        return r(ri - row_names.begin(), ci - col_names.begin());
    }
};

inline CorrelationTable correlation_matrix(const std::vector<NamedSeries>& rows,
                                           const std::vector<NamedSeries>& cols) {
    if (rows.empty() || cols.empty())
        throw std::invalid_argument("correlation_matrix: empty series list");
    CorrelationTable table;
    table.r.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (const auto& s : rows) table.row_names.push_back(s.name);
    for (const auto& s : cols) table.col_names.push_back(s.name);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            table.r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                pearson(rows[i].values, cols[j].values);
    return table;
}

// Convex combination of domain scores under the given weights (renormalized to
// sum to one). Every weighted domain must be present in the table.
inline Eigen::VectorXd combine_domains(const DeprivationTable& table,
                                       const std::map<Domain, double>& weights) {
    if (weights.empty())
        throw std::invalid_argument("combine_domains: no weights");
    double total = 0.0;
    for (const auto& [d, w] : weights) {
        if (w < 0.0)
            throw std::invalid_argument("combine_domains: negative weight for " + domain_name(d));
        total += w;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("combine_domains: weights sum to zero");

    Eigen::VectorXd combined = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.rows()));
    for (const auto& [d, w] : weights) {
        const auto it = table.domain_scores.find(d);
        if (it == table.domain_scores.end())
            throw MissingDomain("combine_domains: table lacks domain " + domain_name(d));
        combined += (w / total) * it->second;
    }
    return combined;
}

// Areas whose coordinate is at or above the threshold. The boundary case is
// inclusive: an area sitting exactly on the cut counts as deprived.
inline std::set<std::string> classify_deprived(const AreaVector& coordinate, double threshold) {
    if (coordinate.area_ids.size() != static_cast<std::size_t>(coordinate.values.size()))
        throw std::invalid_argument("classify_deprived: area_ids/values mismatch");
    std::set<std::string> out;
    for (std::size_t i = 0; i < coordinate.area_ids.size(); ++i)
        if (coordinate.values(static_cast<Eigen::Index>(i)) >= threshold)
            out.insert(coordinate.area_ids[i]);
    return out;
}

// The threshold that classify_deprived would need to select exactly n areas:
// the n-th largest coordinate value.
inline double threshold_for_count(const AreaVector& coordinate, std::size_t n) {
    const std::size_t m = static_cast<std::size_t>(coordinate.values.size());
    if (n < 1 || n > m)
        throw std::invalid_argument("threshold_for_count: n out of range [1, size]");
    std::vector<double> v(coordinate.values.data(), coordinate.values.data() + m);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n - 1), v.end(),
                     std::greater<double>());
    return v[n - 1];
}

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fn + fp + tn; }
};

// Confusion counts of predicted against truth over a fixed universe of codes.
// Both sets must be subsets of the universe; sizes then add up to |universe|.
inline ConfusionCounts confusion(const std::set<std::string>& predicted,
                                 const std::set<std::string>& truth,
                                 const std::vector<std::string>& universe) {
    const std::set<std::string> uni(universe.begin(), universe.end());
    if (uni.size() != universe.size())
        throw std::invalid_argument("confusion: duplicate codes in universe");
    for (const auto& c : predicted)
        if (!uni.count(c))
            throw CodeOutsideUniverse("confusion: predicted code outside universe: " + c);
    for (const auto& c : truth)
        if (!uni.count(c))
            throw CodeOutsideUniverse("confusion: truth code outside universe: " + c);

    ConfusionCounts counts;
    for (const auto& c : universe) {
        const bool p = predicted.count(c) > 0;
        const bool t = truth.count(c) > 0;
        if (p && t)
            ++counts.tp;
        else if (!p && t)
            ++counts.fn;
        else if (p && !t)
            ++counts.fp;
        else
            ++counts.tn;
    }
    return counts;
}

// Flips the coordinate so it correlates positively with the reference series
// (larger = more deprived, by convention). A zero-variance side leaves the
// orientation alone, since the correlation is undefined.
inline AreaVector orient_to(const AreaVector& coordinate, const Eigen::VectorXd& reference) {
    if (static_cast<std::size_t>(reference.size()) != coordinate.area_ids.size()) {
        std::ostringstream msg;
        msg << "orient_to: length mismatch (" << coordinate.area_ids.size() << " vs "
            << reference.size() << ")";
        throw LengthMismatch(msg.str());
    }
    AreaVector out = coordinate;
    try {
        if (pearson(coordinate.values, reference) < 0.0) out.values = -out.values;
    } catch (const ConstantSeries&) {
    }
    return out;
}

// Per-domain rank picture of one false-negative LSOA. Flags name the domains
// whose ranks explain the miss: a weak domain ranked near the top (the area's
// deprivation lives where the embedding is blind) or a strong domain ranked
// near the bottom (the area is genuinely not deprived where the embedding
// looks).
struct FnDomainRecord {
    std::string lsoa_code;
    double imd_rank = -1.0;
    std::map<Domain, double> ranks;
    std::vector<Domain> weak_flagged;
    std::vector<Domain> strong_flagged;
};

inline std::vector<FnDomainRecord> fn_domain_diagnostics(
    const std::set<std::string>& fn_codes, const DeprivationTable& table,
    const std::vector<Domain>& weak, const std::vector<Domain>& strong,
    double percentile = 0.10) {
    if (!(percentile > 0.0) || !(percentile < 1.0))
        throw std::invalid_argument("fn_domain_diagnostics: percentile must be in (0, 1)");
    if (!table.has_domain_ranks())
        throw RanksMissing("fn_domain_diagnostics: table has no per-domain ranks");
    for (Domain d : weak)
        if (!table.domain_ranks.count(d))
            throw RanksMissing("fn_domain_diagnostics: no ranks for domain " + domain_name(d));
    for (Domain d : strong)
        if (!table.domain_ranks.count(d))
            throw RanksMissing("fn_domain_diagnostics: no ranks for domain " + domain_name(d));

    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < table.lsoa_codes.size(); ++i)
        row_of.emplace(table.lsoa_codes[i], i);

    // Rank values are 1 = most deprived; the cutoffs scale with the largest
    // rank actually present per domain, so partial extracts keep working.
    std::map<Domain, double> max_rank;
    for (const auto& [d, ranks] : table.domain_ranks) max_rank[d] = ranks.maxCoeff();

    std::vector<FnDomainRecord> records;
    for (const auto& code : fn_codes) {
        const auto it = row_of.find(code);
        if (it == row_of.end())
            throw CodeOutsideUniverse("fn_domain_diagnostics: code not in table: " + code);
        const Eigen::Index row = static_cast<Eigen::Index>(it->second);

        FnDomainRecord rec;
        rec.lsoa_code = code;
        if (table.has_imd_rank()) rec.imd_rank = table.imd_rank(row);
        for (const auto& [d, ranks] : table.domain_ranks) rec.ranks[d] = ranks(row);
        for (Domain d : weak)
            if (table.domain_ranks.at(d)(row) <= percentile * max_rank.at(d))
                rec.weak_flagged.push_back(d);
        for (Domain d : strong)
            if (table.domain_ranks.at(d)(row) >= (1.0 - percentile) * max_rank.at(d))
                rec.strong_flagged.push_back(d);
        records.push_back(std::move(rec));
    }
    return records;
}

// OA-level view of a false-negative LSOA: each member's coordinate against the
// classification threshold. A miss whose members sit above the threshold was
// lost to averaging, not to the embedding.
struct FnMemberValue {
    std::string oa_code;
    double value = 0.0;
    bool above = false;
};

struct FnOaRecord {
    std::string lsoa_code;
    std::vector<FnMemberValue> members;
    std::size_t n_above = 0;
};

struct FnDrilldownReport {
    std::vector<FnOaRecord> records;
    std::size_t member_count = 0;
    std::size_t above_count = 0;
};

inline FnDrilldownReport fn_oa_drilldown(const std::set<std::string>& fn_codes,
                                         const AreaHierarchy& hierarchy,
                                         const AreaVector& oa_coordinate, double threshold) {
    if (oa_coordinate.area_ids.size() != static_cast<std::size_t>(oa_coordinate.values.size()))
        throw std::invalid_argument("fn_oa_drilldown: area_ids/values mismatch");

    std::map<std::string, std::vector<std::size_t>> members_of;
    for (std::size_t i = 0; i < oa_coordinate.area_ids.size(); ++i) {
        const auto it = hierarchy.oa_to_lsoa.find(oa_coordinate.area_ids[i]);
        if (it != hierarchy.oa_to_lsoa.end()) members_of[it->second].push_back(i);
    }

    FnDrilldownReport report;
    for (const auto& code : fn_codes) {
        const bool known = std::find(hierarchy.lsoa_ids.begin(), hierarchy.lsoa_ids.end(), code) !=
                           hierarchy.lsoa_ids.end();
        if (!known)
            throw CodeOutsideUniverse("fn_oa_drilldown: code not in hierarchy: " + code);
        const auto it = members_of.find(code);
        if (it == members_of.end() || it->second.empty())
            throw EmptyLsoa("fn_oa_drilldown: LSOA " + code + " has no member OAs in the data");

        FnOaRecord rec;
        rec.lsoa_code = code;
        for (const std::size_t i : it->second) {
            FnMemberValue mv;
            mv.oa_code = oa_coordinate.area_ids[i];
            mv.value = oa_coordinate.values(static_cast<Eigen::Index>(i));
            mv.above = mv.value >= threshold;
            if (mv.above) ++rec.n_above;
            rec.members.push_back(std::move(mv));
        }
        report.member_count += rec.members.size();
        report.above_count += rec.n_above;
        report.records.push_back(std::move(rec));
    }
    return report;
}

} // namespace diffmap
