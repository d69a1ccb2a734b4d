// Command-line front end: synthetic data, embedding, aggregation,
// classification, evaluation, and the full two-map analysis.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "diffmap/diffmap.hpp"

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
    std::string config_path;
    std::size_t k_neighbors = 0;
    std::size_t n_eigenvectors = 0;
    std::size_t eigenvector = 0;
    double threshold = 0.0;
    double zero_tolerance = 0.0;
    double percentile = 0.0;
    std::size_t rank_cutoff = 0;
    std::size_t dense_cutoff = 0;
    std::uint64_t seed = 0;
    bool clamp_coincident = false;

    CLI::Option* opt_k = nullptr;
    CLI::Option* opt_n = nullptr;
    CLI::Option* opt_ev = nullptr;
    CLI::Option* opt_threshold = nullptr;
    CLI::Option* opt_zero_tol = nullptr;
    CLI::Option* opt_percentile = nullptr;
    CLI::Option* opt_rank_cutoff = nullptr;
    CLI::Option* opt_dense = nullptr;
    CLI::Option* opt_seed = nullptr;
    CLI::Option* opt_clamp = nullptr;
};

void add_config_flags(CLI::App& cmd, ConfigFlags& f) {
    cmd.add_option("--config", f.config_path, "key=value settings file");
    f.opt_k = cmd.add_option("--k", f.k_neighbors, "neighbours kept per node");
    f.opt_n = cmd.add_option("--n-eigenvectors", f.n_eigenvectors,
                             "nonzero eigenvectors to compute");
    f.opt_ev = cmd.add_option("--eigenvector", f.eigenvector,
                              "1-based nonzero eigenvector used for classification");
    f.opt_threshold = cmd.add_option("--threshold", f.threshold, "classification cut");
    f.opt_zero_tol = cmd.add_option("--zero-tolerance", f.zero_tolerance,
                                    "relative tolerance for zero eigenvalues");
    f.opt_percentile = cmd.add_option("--percentile", f.percentile,
                                      "rank percentile for miss diagnostics");
    f.opt_rank_cutoff = cmd.add_option("--rank-cutoff", f.rank_cutoff,
                                       "imd_rank at or below counts as ground truth");
    f.opt_dense = cmd.add_option("--dense-cutoff", f.dense_cutoff,
                                 "largest size solved with the dense eigensolver");
    f.opt_seed = cmd.add_option("--seed", f.seed, "random seed");
    f.opt_clamp = cmd.add_flag("--clamp-coincident", f.clamp_coincident,
                               "replace zero distances instead of failing");
}

diffmap::PipelineConfig resolve_config(const ConfigFlags& f) {
    diffmap::PipelineConfig config;
    if (!f.config_path.empty()) config = diffmap::load_config(f.config_path, config);
    if (f.opt_k->count()) config.k_neighbors = f.k_neighbors;
    if (f.opt_n->count()) config.n_eigenvectors = f.n_eigenvectors;
    if (f.opt_ev->count()) config.classification_eigenvector = f.eigenvector;
    if (f.opt_threshold->count()) config.classification_threshold = f.threshold;
    if (f.opt_zero_tol->count()) config.zero_tolerance_rel = f.zero_tolerance;
    if (f.opt_percentile->count()) config.fn_rank_percentile = f.percentile;
    if (f.opt_rank_cutoff->count()) config.deprived_rank_cutoff = f.rank_cutoff;
    if (f.opt_dense->count()) config.dense_solver_cutoff = f.dense_cutoff;
    if (f.opt_seed->count()) config.seed = f.seed;
    if (f.opt_clamp->count()) config.clamp_coincident = f.clamp_coincident;
    return config;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

diffmap::SpectralEmbedding embed_file(const fs::path& features_path,
                                      const std::string& id_column,
                                      const diffmap::PipelineConfig& config) {
    const auto raw = diffmap::io::load_features(features_path, id_column);
    const auto z = diffmap::standardize(raw);
    for (const auto& name : z.dropped_columns)
        std::cerr << "warning: dropped constant column " << name << '\n';
    const auto d = diffmap::pairwise_distances(z.values);
    diffmap::SimilarityOptions sim;
    sim.clamp_coincident = config.clamp_coincident;
    const auto graph = diffmap::build_similarity_graph(d, z.area_ids, config.k_neighbors, sim);
    const auto lap = diffmap::build_laplacian(graph);
    diffmap::EmbeddingOptions opts;
    opts.dense_cutoff = config.dense_solver_cutoff;
    opts.lanczos_seed = config.seed;
    return diffmap::compute_embedding(lap, config.n_eigenvectors, config.zero_tolerance_rel,
                                      opts);
}

// evaluate subcommand: an LSOA-level embedding CSV against a deprivation
// table, with optional hierarchy + OA-level embedding for the member-OA
// drilldown of the misses.
int run_evaluate(const fs::path& embedding_path, const fs::path& deprivation_path,
                 const std::string& truth_path, const std::string& hierarchy_path,
                 const std::string& oa_embedding_path, const fs::path& output_dir,
                 const diffmap::PipelineConfig& config) {
    const auto emb = diffmap::io::load_features(embedding_path);
    const auto table = diffmap::io::load_deprivation(deprivation_path);
    fs::create_directories(output_dir);

    const auto match = diffmap::detail::match_table(emb.area_ids, table);
    if (match.codes.size() < 2) {
        std::cerr << "error: fewer than 2 areas shared with the deprivation table\n";
        return 1;
    }
    if (match.series_only > 0)
        std::cerr << "warning: " << match.series_only
                  << " embedding row(s) missing from the deprivation table\n";
    if (match.table_only > 0)
        std::cerr << "warning: " << match.table_only
                  << " deprivation row(s) not in the embedding\n";
    const Eigen::VectorXd imd = diffmap::detail::gather(table.imd_score, match.table_rows);

    nlohmann::json correlations;
    correlations["universe_size"] = match.codes.size();
    nlohmann::json evs;
    for (std::size_t c = 0; c < emb.column_names.size(); ++c) {
        Eigen::VectorXd matched = diffmap::detail::gather(emb.values.col(c), match.series_rows);
        int orientation = 1;
        try {
            if (diffmap::pearson(matched, imd) < 0.0) {
                orientation = -1;
                matched = -matched;
            }
        } catch (const diffmap::ConstantSeries&) {
            std::cerr << "warning: column " << emb.column_names[c]
                      << " constant on matched rows, skipped\n";
            continue;
        }
        evs[emb.column_names[c]] = diffmap::detail::eigenvector_report(
            matched, table, match.table_rows, config, orientation);
    }
    correlations["embedding"] = {{"eigenvectors", std::move(evs)}};
    diffmap::io::atomic_write(output_dir / "correlations.json", correlations.dump(2) + "\n");

    // Classification column: evK by config.
    const std::string column = "ev" + std::to_string(config.classification_eigenvector);
    const auto col_it =
        std::find(emb.column_names.begin(), emb.column_names.end(), column);
    if (col_it == emb.column_names.end()) {
        std::cerr << "warning: no column " << column << ", classification skipped\n";
        std::cout << "wrote " << (output_dir / "correlations.json").string() << '\n';
        return 0;
    }
    const Eigen::Index col = col_it - emb.column_names.begin();

    std::set<std::string> truth;
    if (!truth_path.empty()) {
        const auto codes = diffmap::io::load_code_list(truth_path);
        std::size_t dropped = 0;
        const std::set<std::string> universe(match.codes.begin(), match.codes.end());
        for (const auto& c : codes)
            if (universe.count(c))
                truth.insert(c);
            else
                ++dropped;
        if (dropped > 0)
            std::cerr << "warning: " << dropped << " ground-truth code(s) outside the data\n";
    } else if (table.has_imd_rank()) {
        for (std::size_t i = 0; i < match.codes.size(); ++i)
            if (table.imd_rank(match.table_rows[i]) <=
                static_cast<double>(config.deprived_rank_cutoff))
                truth.insert(match.codes[i]);
    } else {
        std::cerr << "warning: no truth list and no imd_rank, classification skipped\n";
        std::cout << "wrote " << (output_dir / "correlations.json").string() << '\n';
        return 0;
    }

    Eigen::VectorXd matched = diffmap::detail::gather(emb.values.col(col), match.series_rows);
    int orientation = 1;
    if (diffmap::pearson(matched, imd) < 0.0) {
        orientation = -1;
        matched = -matched;
    }
    const diffmap::AreaVector oriented{match.codes, matched};
    const auto predicted =
        diffmap::classify_deprived(oriented, config.classification_threshold);
    const auto counts = diffmap::confusion(predicted, truth, match.codes);
    std::set<std::string> fn_codes;
    for (const auto& c : truth)
        if (!predicted.count(c)) fn_codes.insert(c);

    nlohmann::json conf;
    conf["eigenvector"] = config.classification_eigenvector;
    conf["threshold"] = config.classification_threshold;
    conf["orientation"] = orientation;
    conf["universe_size"] = match.codes.size();
    conf["truth_size"] = truth.size();
    conf["predicted_size"] = predicted.size();
    conf["counts"] = {{"tp", counts.tp}, {"fn", counts.fn}, {"fp", counts.fp}, {"tn", counts.tn}};
    conf["fn_codes"] = fn_codes;

    if (!fn_codes.empty() && !hierarchy_path.empty() && !oa_embedding_path.empty()) {
        const auto hierarchy_full = diffmap::io::load_hierarchy(hierarchy_path);
        const auto oa_emb = diffmap::io::load_features(oa_embedding_path);
        const auto oa_col_it =
            std::find(oa_emb.column_names.begin(), oa_emb.column_names.end(), column);
        if (oa_col_it == oa_emb.column_names.end()) {
            std::cerr << "warning: OA embedding has no column " << column
                      << ", drilldown skipped\n";
        } else {
            const auto hierarchy = hierarchy_full.restrict_to(oa_emb.area_ids);
            Eigen::VectorXd oa_vals =
                oa_emb.values.col(oa_col_it - oa_emb.column_names.begin());
            if (orientation == -1) oa_vals = -oa_vals;
            const diffmap::AreaVector oa_vec{oa_emb.area_ids, oa_vals};
            const auto drill = diffmap::fn_oa_drilldown(fn_codes, hierarchy, oa_vec,
                                                        config.classification_threshold);
            conf["drilldown"] = {{"fn_member_oas", drill.member_count},
                                 {"fn_members_above_threshold", drill.above_count}};
            std::ostringstream out;
            out << "lsoa_code,oa_code,value,above_threshold\n";
            for (const auto& rec : drill.records)
                for (const auto& m : rec.members)
                    out << rec.lsoa_code << ',' << m.oa_code << ','
                        << diffmap::io::format_double(m.value) << ',' << (m.above ? 1 : 0)
                        << '\n';
            diffmap::io::atomic_write(output_dir / "fn_drilldown.csv", out.str());
        }
    }
    diffmap::io::atomic_write(output_dir / "confusion.json", conf.dump(2) + "\n");

    if (!fn_codes.empty() && table.has_domain_ranks()) {
        const auto records = diffmap::fn_domain_diagnostics(
            fn_codes, table, config.weak, config.strong, config.fn_rank_percentile);
        std::ostringstream out;
        out << "lsoa_code,imd_rank";
        for (diffmap::Domain d : diffmap::all_domains)
            out << ',' << diffmap::domain_name(d) << "_rank";
        out << ",weak_flagged,strong_flagged\n";
        for (const auto& rec : records) {
            out << rec.lsoa_code << ',' << diffmap::io::format_double(rec.imd_rank);
            for (diffmap::Domain d : diffmap::all_domains) {
                const auto it = rec.ranks.find(d);
                out << ',' << (it == rec.ranks.end() ? "" : diffmap::io::format_double(it->second));
            }
            out << ',' << diffmap::detail::flag_list(rec.weak_flagged) << ','
                << diffmap::detail::flag_list(rec.strong_flagged) << '\n';
        }
        diffmap::io::atomic_write(output_dir / "fn_diagnostics.csv", out.str());
    }

    std::cout << "tp " << counts.tp << "  fn " << counts.fn << "  fp " << counts.fp << "  tn "
              << counts.tn << '\n';
    std::cout << "wrote " << (output_dir / "confusion.json").string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral embedding of small-area census data"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate synthetic features with known geometry");
    std::string synth_kind;
    std::size_t synth_size = 0;
    double synth_noise = 0.0;
    std::uint64_t synth_seed = 42;
    std::string synth_out, synth_truth_out;
    synth->add_option("--kind", synth_kind, "line1d, circle, or two_clusters")->required();
    synth->add_option("--size", synth_size, "number of areas (>= 10)")->required();
    synth->add_option("--noise", synth_noise, "RMS displacement per point");
    synth->add_option("--seed", synth_seed, "random seed");
    synth->add_option("--output", synth_out, "features CSV path")->required();
    synth->add_option("--truth-output", synth_truth_out, "latent parameter CSV path");

    // ---- embed ----
    auto* embed = app.add_subcommand("embed", "embed a feature CSV");
    std::string embed_features, embed_out, embed_id = "area_code", embed_meta;
    ConfigFlags embed_flags;
    embed->add_option("--features", embed_features, "input feature CSV")->required();
    embed->add_option("--output", embed_out, "embedding CSV path")->required();
    embed->add_option("--id-column", embed_id, "identifier column name");
    embed->add_option("--meta-output", embed_meta, "eigenvalue summary JSON path");
    add_config_flags(*embed, embed_flags);

    // ---- aggregate ----
    auto* aggregate = app.add_subcommand("aggregate", "average per-OA columns to LSOA level");
    std::string agg_in, agg_hierarchy, agg_out, agg_id = "area_code";
    aggregate->add_option("--input", agg_in, "OA-level CSV (id plus numeric columns)")->required();
    aggregate->add_option("--hierarchy", agg_hierarchy, "oa_code,lsoa_code CSV")->required();
    aggregate->add_option("--output", agg_out, "LSOA-level CSV path")->required();
    aggregate->add_option("--id-column", agg_id, "identifier column name");

    // ---- classify ----
    auto* classify = app.add_subcommand("classify", "threshold one embedding column");
    std::string cls_embedding, cls_column = "ev2", cls_out;
    double cls_threshold = 0.02365;
    bool cls_flip = false;
    classify->add_option("--embedding", cls_embedding, "embedding CSV")->required();
    classify->add_option("--column", cls_column, "column to threshold");
    classify->add_option("--threshold", cls_threshold, "values at or above are deprived");
    classify->add_flag("--flip", cls_flip, "negate the column first");
    classify->add_option("--output", cls_out, "per-area CSV path (default: codes to stdout)");

    // ---- evaluate ----
    auto* evaluate = app.add_subcommand("evaluate", "score an embedding against deprivation data");
    std::string eval_embedding, eval_deprivation, eval_truth, eval_hierarchy, eval_oa_embedding,
        eval_outdir;
    ConfigFlags eval_flags;
    evaluate->add_option("--embedding", eval_embedding, "LSOA-level embedding CSV")->required();
    evaluate->add_option("--deprivation", eval_deprivation, "deprivation CSV")->required();
    evaluate->add_option("--truth", eval_truth, "ground-truth LSOA code list");
    evaluate->add_option("--hierarchy", eval_hierarchy, "oa_code,lsoa_code CSV (for drilldown)");
    evaluate->add_option("--oa-embedding", eval_oa_embedding,
                         "OA-level embedding CSV (for drilldown)");
    evaluate->add_option("--output-dir", eval_outdir, "directory for reports")->required();
    add_config_flags(*evaluate, eval_flags);

    // ---- run ----
    auto* run = app.add_subcommand("run", "full two-map analysis");
    std::string run_features, run_hierarchy, run_deprivation, run_truth, run_oa_bounds,
        run_lsoa_bounds, run_outdir, run_code_property;
    ConfigFlags run_flags;
    run->add_option("--features", run_features, "OA-level census CSV")->required();
    run->add_option("--hierarchy", run_hierarchy, "oa_code,lsoa_code CSV")->required();
    run->add_option("--deprivation", run_deprivation, "deprivation CSV");
    run->add_option("--truth", run_truth, "ground-truth LSOA code list");
    run->add_option("--oa-boundaries", run_oa_bounds, "OA boundary GeoJSON");
    run->add_option("--lsoa-boundaries", run_lsoa_bounds, "LSOA boundary GeoJSON");
    run->add_option("--boundary-code-property", run_code_property,
                    "feature property holding the area code");
    run->add_option("--output-dir", run_outdir, "directory for artifacts")->required();
    add_config_flags(*run, run_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            const auto data =
                diffmap::generate_synthetic(synth_kind, synth_size, synth_noise, synth_seed);
            diffmap::io::write_features_csv(synth_out, data.features);
            std::cout << "wrote " << synth_out << '\n';
            if (!synth_truth_out.empty()) {
                diffmap::io::write_vector_csv(synth_truth_out, data.truth, data.truth_name);
                std::cout << "wrote " << synth_truth_out << '\n';
            }
        } else if (*embed) {
            const auto config = resolve_config(embed_flags);
            const auto emb = embed_file(embed_features, embed_id, config);
            diffmap::io::write_embedding_csv(embed_out, emb, embed_id);
            std::cout << "wrote " << embed_out << '\n';
            if (!embed_meta.empty()) {
                nlohmann::json meta;
                meta["n_components"] = emb.n_components;
                meta["zero_tolerance"] = emb.zero_tolerance;
                meta["eigenvalues"] = std::vector<double>(
                    emb.eigenvalues.data(), emb.eigenvalues.data() + emb.eigenvalues.size());
                diffmap::io::atomic_write(embed_meta, meta.dump(2) + "\n");
                std::cout << "wrote " << embed_meta << '\n';
            }
        } else if (*aggregate) {
            const auto input = diffmap::io::load_features(agg_in, agg_id);
            const auto hierarchy =
                diffmap::io::load_hierarchy(agg_hierarchy).restrict_to(input.area_ids);
            diffmap::FeatureMatrix out;
            out.column_names = input.column_names;
            out.area_ids = hierarchy.lsoa_ids;
            out.values.resize(static_cast<Eigen::Index>(hierarchy.lsoa_ids.size()),
                              input.values.cols());
            for (Eigen::Index c = 0; c < input.values.cols(); ++c) {
                const diffmap::AreaVector col{input.area_ids, input.values.col(c)};
                out.values.col(c) = diffmap::aggregate_vector(hierarchy, col).values;
            }
            diffmap::io::write_features_csv(agg_out, out, agg_id);
            std::cout << "wrote " << agg_out << '\n';
        } else if (*classify) {
            const auto emb = diffmap::io::load_features(cls_embedding);
            const auto it =
                std::find(emb.column_names.begin(), emb.column_names.end(), cls_column);
            if (it == emb.column_names.end())
                throw diffmap::IoError(cls_embedding + ": no column " + cls_column);
            Eigen::VectorXd values = emb.values.col(it - emb.column_names.begin());
            if (cls_flip) values = -values;
            const diffmap::AreaVector vec{emb.area_ids, values};
            const auto deprived = diffmap::classify_deprived(vec, cls_threshold);
            if (cls_out.empty()) {
                for (const auto& code : deprived) std::cout << code << '\n';
            } else {
                std::ostringstream out;
                out << "area_code," << cls_column << ",deprived\n";
                for (std::size_t i = 0; i < vec.area_ids.size(); ++i)
                    out << vec.area_ids[i] << ','
                        << diffmap::io::format_double(vec.values(static_cast<Eigen::Index>(i)))
                        << ',' << (deprived.count(vec.area_ids[i]) ? 1 : 0) << '\n';
                diffmap::io::atomic_write(cls_out, out.str());
                std::cout << "wrote " << cls_out << '\n';
            }
            std::cerr << deprived.size() << " of " << vec.area_ids.size()
                      << " areas at or above " << cls_threshold << '\n';
        } else if (*evaluate) {
            const auto config = resolve_config(eval_flags);
            return run_evaluate(eval_embedding, eval_deprivation, eval_truth, eval_hierarchy,
                                eval_oa_embedding, eval_outdir, config);
        } else if (*run) {
            const auto config = [&] {
                auto c = resolve_config(run_flags);
                if (!run_code_property.empty()) c.boundary_code_property = run_code_property;
                return c;
            }();
            diffmap::PipelineInputs inputs;
            inputs.features = diffmap::io::load_features(run_features);
            inputs.hierarchy = diffmap::io::load_hierarchy(run_hierarchy);
            if (!run_deprivation.empty())
                inputs.deprivation = diffmap::io::load_deprivation(run_deprivation);
            if (!run_truth.empty())
                inputs.truth_codes = diffmap::io::load_code_list(run_truth);
            if (!run_oa_bounds.empty())
                inputs.oa_boundaries =
                    diffmap::io::load_boundaries(run_oa_bounds, config.boundary_code_property);
            if (!run_lsoa_bounds.empty())
                inputs.lsoa_boundaries =
                    diffmap::io::load_boundaries(run_lsoa_bounds, config.boundary_code_property);

            const auto result = diffmap::run_pipeline(inputs, config, run_outdir);
            print_warnings(result.warnings);
            for (const auto& p : result.written) std::cout << "wrote " << p.string() << '\n';
            if (result.confusion_counts) {
                const auto& c = *result.confusion_counts;
                std::cout << "confusion: tp " << c.tp << "  fn " << c.fn << "  fp " << c.fp
                          << "  tn " << c.tn << '\n';
            }
        }
    } catch (const diffmap::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
