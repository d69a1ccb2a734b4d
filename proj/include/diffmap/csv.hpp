#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "diffmap/embedding.hpp"
#include "diffmap/errors.hpp"
#include "diffmap/evaluation.hpp"
#include "diffmap/feature_matrix.hpp"
#include "diffmap/hierarchy.hpp"

namespace diffmap::io {

// Shortest representation that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Strict numeric parse: the whole field must be a number.
inline double parse_double(const std::string& field, std::size_t row, std::size_t col) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        std::ostringstream msg;
        msg << "row " << row << ", column " << col << ": not a number: '" << field << "'";
        throw NonNumericCell(msg.str(), row, col, field);
    }
    return value;
}

// RFC-4180 style parser: quoted fields may contain commas, newlines, and
// doubled quotes. Rows keep their source order; CR before LF is stripped.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;

    const auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    const auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        any = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"': quoted = true; any = true; break;
            case ',': end_field(); any = true; break;
            case '\r': break;
            case '\n': end_row(); break;
            default: field += c; any = true; break;
        }
    }
    if (any || !field.empty() || !row.empty()) end_row();
    return rows;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Writes through a temporary in the same directory and renames into place, so
// a crash never leaves a half-written output.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

namespace detail {

inline std::vector<std::vector<std::string>> load_rows(const std::filesystem::path& path) {
    auto rows = parse_csv(read_file(path));
    if (rows.empty()) throw IoError(path.string() + ": empty file");
    const std::size_t width = rows.front().size();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            std::ostringstream msg;
            msg << path.string() << ": row " << (r + 1) << " has " << rows[r].size()
                << " fields, header has " << width;
            throw MalformedRow(msg.str());
        }
    }
    if (rows.size() < 2) throw IoError(path.string() + ": no data rows");
    return rows;
}

inline std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                                const std::filesystem::path& path) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw MissingIdColumn(path.string() + ": no '" + name + "' column");
    return static_cast<std::size_t>(it - header.begin());
}

} // namespace detail

// Numeric table keyed by an identifier column (default area_code). All other
// columns must be numeric; duplicate identifiers are rejected.
inline FeatureMatrix load_features(const std::filesystem::path& path,
                                   const std::string& id_column = "area_code") {
    const auto rows = detail::load_rows(path);
    const auto& header = rows.front();
    const std::size_t id_at = detail::column_index(header, id_column, path);
    if (header.size() < 2)
        throw IoError(path.string() + ": no feature columns");

    FeatureMatrix fm;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != id_at) fm.column_names.push_back(header[c]);

    const std::size_t n_rows = rows.size() - 1;
    fm.values.resize(static_cast<Eigen::Index>(n_rows),
                     static_cast<Eigen::Index>(fm.column_names.size()));
    std::set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        if (!seen.insert(fields[id_at]).second)
            throw DuplicateAreaId(path.string() + ": duplicate id '" + fields[id_at] + "'");
        fm.area_ids.push_back(fields[id_at]);
        Eigen::Index c_out = 0;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (c == id_at) continue;
            fm.values(static_cast<Eigen::Index>(r - 1), c_out++) =
                parse_double(fields[c], r + 1, c);
        }
    }
    return fm;
}

// Two-column oa_code,lsoa_code lookup.
inline AreaHierarchy load_hierarchy(const std::filesystem::path& path) {
    const auto rows = detail::load_rows(path);
    const std::size_t oa_at = detail::column_index(rows.front(), "oa_code", path);
    const std::size_t lsoa_at = detail::column_index(rows.front(), "lsoa_code", path);
    std::vector<std::pair<std::string, std::string>> pairs;
    pairs.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r)
        pairs.emplace_back(rows[r][oa_at], rows[r][lsoa_at]);
    return AreaHierarchy::from_pairs(pairs);
}

// Composite deprivation file: lsoa_code, imd_score, the seven domain scores,
// and optionally imd_rank and per-domain <domain>_rank columns.
inline DeprivationTable load_deprivation(const std::filesystem::path& path) {
    const auto rows = detail::load_rows(path);
    const auto& header = rows.front();
    const std::size_t id_at = detail::column_index(header, "lsoa_code", path);

    const auto find_col = [&](const std::string& name) -> std::ptrdiff_t {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : it - header.begin();
    };

    const std::ptrdiff_t score_at = find_col("imd_score");
    if (score_at < 0)
        throw MissingDomainColumn(path.string() + ": no 'imd_score' column");
    for (Domain d : all_domains)
        if (find_col(domain_name(d)) < 0)
            throw MissingDomainColumn(path.string() + ": no '" + domain_name(d) + "' column");

    const std::size_t n_rows = rows.size() - 1;
    DeprivationTable table;
    table.imd_score.resize(static_cast<Eigen::Index>(n_rows));
    const std::ptrdiff_t rank_at = find_col("imd_rank");
    if (rank_at >= 0) table.imd_rank.resize(static_cast<Eigen::Index>(n_rows));
    for (Domain d : all_domains) {
        table.domain_scores[d].resize(static_cast<Eigen::Index>(n_rows));
        if (find_col(domain_name(d) + "_rank") >= 0)
            table.domain_ranks[d].resize(static_cast<Eigen::Index>(n_rows));
    }

    std::set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        if (!seen.insert(fields[id_at]).second)
            throw DuplicateAreaId(path.string() + ": duplicate id '" + fields[id_at] + "'");
        table.lsoa_codes.push_back(fields[id_at]);
        const Eigen::Index i = static_cast<Eigen::Index>(r - 1);
        table.imd_score(i) =
            parse_double(fields[static_cast<std::size_t>(score_at)], r + 1,
                         static_cast<std::size_t>(score_at));
        if (rank_at >= 0)
            table.imd_rank(i) = parse_double(fields[static_cast<std::size_t>(rank_at)], r + 1,
                                             static_cast<std::size_t>(rank_at));
        for (Domain d : all_domains) {
            const std::size_t c = static_cast<std::size_t>(find_col(domain_name(d)));
            table.domain_scores[d](i) = parse_double(fields[c], r + 1, c);
            if (table.domain_ranks.count(d)) {
                const std::size_t rc =
                    static_cast<std::size_t>(find_col(domain_name(d) + "_rank"));
                table.domain_ranks[d](i) = parse_double(fields[rc], r + 1, rc);
            }
        }
    }
    return table;
}

// One LSOA code per line; a leading lsoa_code header line is allowed.
inline std::set<std::string> load_code_list(const std::filesystem::path& path) {
    const auto rows = parse_csv(read_file(path));
    std::set<std::string> codes;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != 1)
            throw MalformedRow(path.string() + ": expected one code per line");
        const auto& code = rows[r][0];
        if (r == 0 && code == "lsoa_code") continue;
        if (code.empty()) continue;
        codes.insert(code);
    }
    if (codes.empty()) throw IoError(path.string() + ": no codes");
    return codes;
}

inline void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& fm,
                               const std::string& id_column = "area_code") {
    std::ostringstream out;
    out << id_column;
    for (const auto& name : fm.column_names) out << ',' << name;
    out << '\n';
    for (std::size_t r = 0; r < fm.area_ids.size(); ++r) {
        out << fm.area_ids[r];
        for (Eigen::Index c = 0; c < fm.values.cols(); ++c)
            out << ',' << format_double(fm.values(static_cast<Eigen::Index>(r), c));
        out << '\n';
    }
    atomic_write(path, out.str());
}

// Embedding CSV: one column per nonzero eigenvector, named ev1..evN.
inline void write_embedding_csv(const std::filesystem::path& path,
                                const SpectralEmbedding& embedding,
                                const std::string& id_column = "area_code") {
    std::ostringstream out;
    out << id_column;
    for (std::size_t k = 1; k <= embedding.n_nonzero(); ++k) out << ",ev" << k;
    out << '\n';
    for (std::size_t r = 0; r < embedding.area_ids.size(); ++r) {
        out << embedding.area_ids[r];
        for (std::size_t k = 1; k <= embedding.n_nonzero(); ++k) {
            const Eigen::Index col = static_cast<Eigen::Index>(embedding.n_components + k - 1);
            out << ',' << format_double(embedding.eigenvectors(static_cast<Eigen::Index>(r), col));
        }
        out << '\n';
    }
    atomic_write(path, out.str());
}

inline void write_vector_csv(const std::filesystem::path& path, const AreaVector& vec,
                             const std::string& value_column,
                             const std::string& id_column = "area_code") {
    std::ostringstream out;
    out << id_column << ',' << value_column << '\n';
    for (std::size_t r = 0; r < vec.area_ids.size(); ++r)
        out << vec.area_ids[r] << ','
            << format_double(vec.values(static_cast<Eigen::Index>(r))) << '\n';
    atomic_write(path, out.str());
}

inline AreaVector load_vector_csv(const std::filesystem::path& path,
                                  const std::string& value_column,
                                  const std::string& id_column = "area_code") {
    const auto rows = detail::load_rows(path);
    const std::size_t id_at = detail::column_index(rows.front(), id_column, path);
    const std::size_t val_at = detail::column_index(rows.front(), value_column, path);
    AreaVector vec;
    vec.values.resize(static_cast<Eigen::Index>(rows.size() - 1));
    std::set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (!seen.insert(rows[r][id_at]).second)
            throw DuplicateAreaId(path.string() + ": duplicate id '" + rows[r][id_at] + "'");
        vec.area_ids.push_back(rows[r][id_at]);
        vec.values(static_cast<Eigen::Index>(r - 1)) = parse_double(rows[r][val_at], r + 1, val_at);
    }
    return vec;
}

} // namespace diffmap::io
