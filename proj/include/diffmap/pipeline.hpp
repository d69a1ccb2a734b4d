#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "diffmap/config.hpp"
#include "diffmap/csv.hpp"
#include "diffmap/distance.hpp"
#include "diffmap/embedding.hpp"
#include "diffmap/errors.hpp"
#include "diffmap/evaluation.hpp"
#include "diffmap/feature_matrix.hpp"
#include "diffmap/geojson.hpp"
#include "diffmap/hierarchy.hpp"
#include "diffmap/laplacian.hpp"
#include "diffmap/similarity_graph.hpp"

namespace diffmap {

struct PipelineInputs {
    FeatureMatrix features;  // raw OA-level census variables
    AreaHierarchy hierarchy;
    std::optional<DeprivationTable> deprivation;
    // Explicit ground-truth codes; when absent and the table has imd_rank,
    // truth is every LSOA ranked at or below deprived_rank_cutoff.
    std::optional<std::set<std::string>> truth_codes;
    std::optional<io::BoundaryFile> oa_boundaries;
    std::optional<io::BoundaryFile> lsoa_boundaries;
};

struct PipelineResult {
    AreaHierarchy hierarchy;  // restricted to the OAs present in the data
    SpectralEmbedding oa_embedding;
    SpectralEmbedding lsoa_embedding;
    // OA-map eigenvectors averaged to LSOA level, one per nonzero eigenvector.
    std::vector<AreaVector> aggregated;
    std::optional<ConfusionCounts> confusion_counts;
    std::set<std::string> fn_codes;
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> written;
};

namespace detail {

inline SpectralEmbedding embed_features(const FeatureMatrix& raw, const PipelineConfig& config) {
    const FeatureMatrix z = standardize(raw);
    const Eigen::MatrixXd d = pairwise_distances(z.values);
    SimilarityOptions sim;
    sim.clamp_coincident = config.clamp_coincident;
    const SimilarityGraph graph = build_similarity_graph(d, z.area_ids, config.k_neighbors, sim);
    const LaplacianMatrix lap = build_laplacian(graph);
    EmbeddingOptions opts;
    opts.dense_cutoff = config.dense_solver_cutoff;
    opts.lanczos_seed = config.seed;
    return compute_embedding(lap, config.n_eigenvectors, config.zero_tolerance_rel, opts);
}

// Rows of `series` matched against table codes: positions of the common codes
// on both sides, in series order.
struct TableMatch {
    std::vector<std::string> codes;
    std::vector<Eigen::Index> series_rows;
    std::vector<Eigen::Index> table_rows;
    std::size_t series_only = 0;
    std::size_t table_only = 0;
};

inline TableMatch match_table(const std::vector<std::string>& ids, const DeprivationTable& table) {
    std::map<std::string, Eigen::Index> row_of;
    for (std::size_t i = 0; i < table.lsoa_codes.size(); ++i)
        row_of.emplace(table.lsoa_codes[i], static_cast<Eigen::Index>(i));
    TableMatch m;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto it = row_of.find(ids[i]);
        if (it == row_of.end()) {
            ++m.series_only;
            continue;
        }
        m.codes.push_back(ids[i]);
        m.series_rows.push_back(static_cast<Eigen::Index>(i));
        m.table_rows.push_back(it->second);
    }
    m.table_only = table.lsoa_codes.size() - m.codes.size();
    return m;
}

inline Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
    return out;
}

// Correlations of one eigenvector (restricted to matched rows and oriented
// against the composite score) with the composite, the seven domains, and the
// strong/weak group means.
inline nlohmann::json eigenvector_report(const Eigen::VectorXd& matched_values,
                                         const DeprivationTable& table,
                                         const std::vector<Eigen::Index>& table_rows,
                                         const PipelineConfig& config, int orientation) {
    nlohmann::json out;
    out["orientation"] = orientation;
    const Eigen::VectorXd imd = gather(table.imd_score, table_rows);
    out["imd_score"] = pearson(matched_values, imd);
    const DeprivationTable matched = [&] {
        DeprivationTable t;
        t.lsoa_codes.resize(table_rows.size());
        t.imd_score = imd;
        for (const auto& [d, scores] : table.domain_scores)
            t.domain_scores[d] = gather(scores, table_rows);
        return t;
    }();
    out["combined"] = pearson(matched_values, combine_domains(matched, config.domain_weights));

    double strong_sum = 0.0, weak_sum = 0.0;
    for (Domain d : all_domains)
        out[domain_name(d)] = pearson(matched_values, matched.domain_scores.at(d));
    for (Domain d : config.strong) strong_sum += out[domain_name(d)].get<double>();
    for (Domain d : config.weak) weak_sum += out[domain_name(d)].get<double>();
    out["strong_mean"] = strong_sum / static_cast<double>(config.strong.size());
    out["weak_mean"] = weak_sum / static_cast<double>(config.weak.size());
    return out;
}

inline std::string flag_list(const std::vector<Domain>& domains) {
    std::string out;
    for (const Domain d : domains) {
        if (!out.empty()) out += ';';
        out += domain_name(d);
    }
    return out;
}

} // namespace detail

// Full analysis: embed the OAs directly and embed the LSOA-aggregated
// features, average the OA-map coordinates up to LSOA level, then (when a
// deprivation table is given) correlate both maps against the composite index
// and its domains, classify deprived LSOAs on the configured eigenvector, and
// break the false negatives down by domain ranks and member OAs. Writes every
// artifact under output_dir.
inline PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config,
                                   const std::filesystem::path& output_dir) {
    namespace fs = std::filesystem;
    PipelineResult res;
    fs::create_directories(output_dir);
    const auto emit = [&](const fs::path& p) { res.written.push_back(p); };
    const auto warn = [&](std::string msg) { res.warnings.push_back(std::move(msg)); };

    res.hierarchy = inputs.hierarchy.restrict_to(inputs.features.area_ids);

    // OA map.
    res.oa_embedding = detail::embed_features(inputs.features, config);
    io::write_embedding_csv(output_dir / "embedding_oa.csv", res.oa_embedding);
    emit(output_dir / "embedding_oa.csv");

    // LSOA map: aggregate raw features first, standardize after.
    const FeatureMatrix lsoa_features = aggregate_features(res.hierarchy, inputs.features);
    res.lsoa_embedding = detail::embed_features(lsoa_features, config);
    io::write_embedding_csv(output_dir / "embedding_lsoa.csv", res.lsoa_embedding);
    emit(output_dir / "embedding_lsoa.csv");

    // OA map carried up to LSOA level.
    for (std::size_t k = 1; k <= res.oa_embedding.n_nonzero(); ++k)
        res.aggregated.push_back(
            aggregate_vector(res.hierarchy, select_eigenvector(res.oa_embedding, k)));
    {
        std::ostringstream out;
        out << "area_code";
        for (std::size_t k = 1; k <= res.aggregated.size(); ++k) out << ",ev" << k;
        out << '\n';
        for (std::size_t r = 0; r < res.hierarchy.lsoa_ids.size(); ++r) {
            out << res.hierarchy.lsoa_ids[r];
            for (const auto& vec : res.aggregated)
                out << ',' << io::format_double(vec.values(static_cast<Eigen::Index>(r)));
            out << '\n';
        }
        io::atomic_write(output_dir / "embedding_oa_lsoa.csv", out.str());
        emit(output_dir / "embedding_oa_lsoa.csv");
    }

    // Choropleths keep the embedding's canonical orientation, matching the
    // CSVs exactly.
    if (inputs.oa_boundaries) {
        for (std::size_t k = 1; k <= res.oa_embedding.n_nonzero(); ++k) {
            const fs::path p = output_dir / ("choropleth_oa_ev" + std::to_string(k) + ".geojson");
            const auto stats = io::export_choropleth(p, *inputs.oa_boundaries,
                                                     select_eigenvector(res.oa_embedding, k));
            if (!stats.skipped_ids.empty()) {
                std::ostringstream msg;
                msg << p.filename().string() << ": " << stats.skipped_ids.size()
                    << " area(s) have no boundary, first " << stats.skipped_ids.front();
                warn(msg.str());
            }
            emit(p);
        }
    }
    if (inputs.lsoa_boundaries) {
        for (std::size_t k = 1; k <= res.lsoa_embedding.n_nonzero(); ++k) {
            const fs::path p = output_dir / ("choropleth_lsoa_ev" + std::to_string(k) + ".geojson");
            const auto stats = io::export_choropleth(p, *inputs.lsoa_boundaries,
                                                     select_eigenvector(res.lsoa_embedding, k));
            if (!stats.skipped_ids.empty()) {
                std::ostringstream msg;
                msg << p.filename().string() << ": " << stats.skipped_ids.size()
                    << " area(s) have no boundary, first " << stats.skipped_ids.front();
                warn(msg.str());
            }
            emit(p);
        }
    }

    if (!inputs.deprivation) return res;
    const DeprivationTable& table = *inputs.deprivation;

    // Both maps live on the same LSOA universe; evaluation runs on the rows
    // the deprivation table also covers.
    const detail::TableMatch match = detail::match_table(res.hierarchy.lsoa_ids, table);
    if (match.codes.size() < 2) {
        warn("evaluation skipped: fewer than 2 LSOAs shared with the deprivation table");
        return res;
    }
    if (match.series_only > 0) {
        std::ostringstream msg;
        msg << match.series_only << " LSOA(s) missing from the deprivation table";
        warn(msg.str());
    }
    if (match.table_only > 0) {
        std::ostringstream msg;
        msg << match.table_only << " deprivation row(s) outside the analyzed area";
        warn(msg.str());
    }
    const Eigen::VectorXd imd_matched = detail::gather(table.imd_score, match.table_rows);

    nlohmann::json correlations;
    correlations["universe_size"] = match.codes.size();

    const auto report_map = [&](const std::string& name, const SpectralEmbedding& emb,
                                const std::vector<AreaVector>* aggregated) {
        nlohmann::json entry;
        entry["n_components"] = emb.n_components;
        entry["eigenvalues"] = [&] {
            std::vector<double> ev;
            for (std::size_t k = 1; k <= emb.n_nonzero(); ++k)
                ev.push_back(emb.eigenvalues(static_cast<Eigen::Index>(emb.n_components + k - 1)));
            return ev;
        }();
        nlohmann::json evs;
        const std::size_t n = aggregated ? aggregated->size() : emb.n_nonzero();
        for (std::size_t k = 1; k <= n; ++k) {
            const AreaVector vec =
                aggregated ? (*aggregated)[k - 1] : select_eigenvector(emb, k);
            Eigen::VectorXd matched = detail::gather(vec.values, match.series_rows);
            int orientation = 1;
            try {
                if (pearson(matched, imd_matched) < 0.0) {
                    orientation = -1;
                    matched = -matched;
                }
            } catch (const ConstantSeries&) {
                warn(name + " ev" + std::to_string(k) + ": constant on the matched rows");
                continue;
            }
            evs["ev" + std::to_string(k)] =
                detail::eigenvector_report(matched, table, match.table_rows, config, orientation);
        }
        entry["eigenvectors"] = std::move(evs);
        correlations[name] = std::move(entry);
    };
    report_map("lsoa_map", res.lsoa_embedding, nullptr);
    report_map("oa_map", res.oa_embedding, &res.aggregated);

    io::atomic_write(output_dir / "correlations.json", correlations.dump(2) + "\n");
    emit(output_dir / "correlations.json");

    // Classification on the configured eigenvector of the aggregated OA map.
    if (config.classification_eigenvector < 1 ||
        config.classification_eigenvector > res.aggregated.size()) {
        warn("classification skipped: eigenvector " +
             std::to_string(config.classification_eigenvector) + " not computed");
        return res;
    }

    std::set<std::string> truth;
    if (inputs.truth_codes) {
        std::size_t dropped = 0;
        const std::set<std::string> universe(match.codes.begin(), match.codes.end());
        for (const auto& c : *inputs.truth_codes) {
            if (universe.count(c))
                truth.insert(c);
            else
                ++dropped;
        }
        if (dropped > 0) {
            std::ostringstream msg;
            msg << dropped << " ground-truth code(s) outside the analyzed area";
            warn(msg.str());
        }
    } else if (table.has_imd_rank()) {
        for (std::size_t i = 0; i < match.codes.size(); ++i)
            if (table.imd_rank(match.table_rows[i]) <=
                static_cast<double>(config.deprived_rank_cutoff))
                truth.insert(match.codes[i]);
    } else {
        warn("classification skipped: no ground-truth codes and no imd_rank column");
        return res;
    }
    if (truth.empty()) {
        warn("classification skipped: ground truth is empty on the analyzed area");
        return res;
    }

    const AreaVector& class_vec = res.aggregated[config.classification_eigenvector - 1];
    Eigen::VectorXd matched_class = detail::gather(class_vec.values, match.series_rows);
    int orientation = 1;
    try {
        if (pearson(matched_class, imd_matched) < 0.0) {
            orientation = -1;
            matched_class = -matched_class;
        }
    } catch (const ConstantSeries&) {
        warn("classification skipped: eigenvector constant on the matched rows");
        return res;
    }
    const AreaVector oriented{match.codes, matched_class};

    const std::set<std::string> predicted =
        classify_deprived(oriented, config.classification_threshold);
    res.confusion_counts = confusion(predicted, truth, match.codes);
    for (const auto& c : truth)
        if (!predicted.count(c)) res.fn_codes.insert(c);

    nlohmann::json conf;
    conf["map"] = "oa_map";
    conf["eigenvector"] = config.classification_eigenvector;
    conf["threshold"] = config.classification_threshold;
    conf["orientation"] = orientation;
    conf["universe_size"] = match.codes.size();
    conf["truth_size"] = truth.size();
    conf["predicted_size"] = predicted.size();
    conf["counts"] = {{"tp", res.confusion_counts->tp},
                      {"fn", res.confusion_counts->fn},
                      {"fp", res.confusion_counts->fp},
                      {"tn", res.confusion_counts->tn}};
    conf["fn_codes"] = res.fn_codes;

    // Member-OA drilldown of the misses, on the same eigenvector and threshold
    // (OA values oriented the same way).
    const AreaVector oa_vec_raw =
        select_eigenvector(res.oa_embedding, config.classification_eigenvector);
    const AreaVector oa_vec{oa_vec_raw.area_ids, orientation == -1
                                                     ? Eigen::VectorXd(-oa_vec_raw.values)
                                                     : oa_vec_raw.values};
    if (!res.fn_codes.empty()) {
        const FnDrilldownReport drill =
            fn_oa_drilldown(res.fn_codes, res.hierarchy, oa_vec, config.classification_threshold);
        conf["drilldown"] = {{"fn_member_oas", drill.member_count},
                             {"fn_members_above_threshold", drill.above_count}};
        std::ostringstream out;
        out << "lsoa_code,oa_code,value,above_threshold\n";
        for (const auto& rec : drill.records)
            for (const auto& m : rec.members)
                out << rec.lsoa_code << ',' << m.oa_code << ',' << io::format_double(m.value)
                    << ',' << (m.above ? 1 : 0) << '\n';
        io::atomic_write(output_dir / "fn_drilldown.csv", out.str());
        emit(output_dir / "fn_drilldown.csv");
    }

    io::atomic_write(output_dir / "confusion.json", conf.dump(2) + "\n");
    emit(output_dir / "confusion.json");

    // Domain-rank diagnostics of the misses.
    if (!res.fn_codes.empty()) {
        if (!table.has_domain_ranks()) {
            warn("fn_diagnostics skipped: deprivation table has no domain rank columns");
        } else {
            const auto records = fn_domain_diagnostics(res.fn_codes, table, config.weak,
                                                       config.strong, config.fn_rank_percentile);
            std::ostringstream out;
            out << "lsoa_code,imd_rank";
            for (Domain d : all_domains) out << ',' << domain_name(d) << "_rank";
            out << ",weak_flagged,strong_flagged\n";
            for (const auto& rec : records) {
                out << rec.lsoa_code << ',' << io::format_double(rec.imd_rank);
                for (Domain d : all_domains) {
                    const auto it = rec.ranks.find(d);
                    out << ',' << (it == rec.ranks.end() ? "" : io::format_double(it->second));
                }
                out << ',' << detail::flag_list(rec.weak_flagged) << ','
                    << detail::flag_list(rec.strong_flagged) << '\n';
            }
            io::atomic_write(output_dir / "fn_diagnostics.csv", out.str());
            emit(output_dir / "fn_diagnostics.csv");
        }
    }

    return res;
}

} // namespace diffmap
