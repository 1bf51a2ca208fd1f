#pragma once

#include "hgda/graph.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace hgda {

namespace io_detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view token, const std::string& where) {
    token = trim(token);
    T value{};
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && token.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || token.empty())
        throw std::runtime_error(where + ": cannot parse '" + std::string(token) + "'");
    return value;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            parts.push_back(line.substr(start));
            return parts;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

/// Non-blank lines of a text file, tagged with 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        lines.emplace_back(number, line);
    }
    return lines;
}

inline void append_double(std::string& out, double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw std::runtime_error("cannot format double");
    out.append(buf, ptr);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace io_detail

/// Reads a dataset directory (meta.json, edges.csv, features.csv and an
/// optional labels.csv). The edge list may contain either orientation,
/// duplicates or self-loops; the result is normalized.
inline Graph load_graph(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    using namespace io_detail;
    const fs::path meta_path = dir / "meta.json";
    const fs::path edges_path = dir / "edges.csv";
    const fs::path features_path = dir / "features.csv";
    const fs::path labels_path = dir / "labels.csv";
    for (const auto& p : {meta_path, edges_path, features_path})
        if (!fs::exists(p)) throw std::runtime_error("missing file " + p.string());

    nlohmann::json meta;
    {
        std::ifstream in(meta_path);
        try {
            in >> meta;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(meta_path.string() + ": " + e.what());
        }
    }
    const auto num_nodes = meta.at("num_nodes").get<Index>();
    const auto num_classes = meta.at("num_classes").get<int>();
    const auto feature_dim = meta.at("feature_dim").get<Index>();
    const auto name = meta.value("name", std::string{});
    if (num_nodes < 0 || num_classes < 0 || feature_dim < 0)
        throw std::runtime_error(meta_path.string() + ": negative count");

    std::vector<std::pair<Index, Index>> edges;
    for (const auto& [lineno, line] : read_lines(edges_path)) {
        const std::string where = edges_path.string() + ":" + std::to_string(lineno);
        const auto parts = split_commas(line);
        if (parts.size() != 2) throw std::runtime_error(where + ": expected 'src,dst'");
        edges.emplace_back(parse_number<Index>(parts[0], where), parse_number<Index>(parts[1], where));
    }

    Matrix features(num_nodes, feature_dim);
    const auto feature_lines = read_lines(features_path);
    if (feature_dim > 0 && static_cast<Index>(feature_lines.size()) != num_nodes)
        throw std::runtime_error(features_path.string() + ": expected " + std::to_string(num_nodes) + " rows, found " +
                                 std::to_string(feature_lines.size()));
    for (Index i = 0; i < num_nodes && feature_dim > 0; ++i) {
        const auto& [lineno, line] = feature_lines[static_cast<std::size_t>(i)];
        const std::string where = features_path.string() + ":" + std::to_string(lineno);
        const auto parts = split_commas(line);
        if (static_cast<Index>(parts.size()) != feature_dim)
            throw std::runtime_error(where + ": expected " + std::to_string(feature_dim) + " columns, found " +
                                     std::to_string(parts.size()));
        for (Index j = 0; j < feature_dim; ++j) features(i, j) = parse_number<double>(parts[j], where);
    }

    std::optional<std::vector<int>> labels;
    if (fs::exists(labels_path)) {
        const auto label_lines = read_lines(labels_path);
        if (static_cast<Index>(label_lines.size()) != num_nodes)
            throw std::runtime_error(labels_path.string() + ": expected " + std::to_string(num_nodes) +
                                     " labels, found " + std::to_string(label_lines.size()));
        labels.emplace();
        labels->reserve(label_lines.size());
        for (const auto& [lineno, line] : label_lines) {
            const std::string where = labels_path.string() + ":" + std::to_string(lineno);
            const int y = parse_number<int>(line, where);
            if (y != kUnknownLabel && (y < 0 || y >= num_classes))
                throw std::runtime_error(where + ": label " + std::to_string(y) + " outside [0," +
                                         std::to_string(num_classes) + ")");
            labels->push_back(y);
        }
    }

    try {
        return Graph::from_edges(num_nodes, edges, std::move(features), std::move(labels), num_classes, name);
    } catch (const std::exception& e) {
        throw std::runtime_error(dir.string() + ": " + e.what());
    }
}

/// Writes the dataset directory format. Doubles use the shortest
/// representation that round-trips exactly.
inline void save_graph(const Graph& g, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    using namespace io_detail;
    fs::create_directories(dir);

    nlohmann::json meta = {{"name", g.name},
                           {"num_nodes", g.num_nodes},
                           {"num_classes", g.num_classes},
                           {"feature_dim", g.feature_dim()}};
    write_file(dir / "meta.json", meta.dump(2) + "\n");

    std::string edges;
    for (const auto& [u, v] : g.edge_list()) {
        edges += std::to_string(u);
        edges += ',';
        edges += std::to_string(v);
        edges += '\n';
    }
    write_file(dir / "edges.csv", edges);

    std::string features;
    for (Index i = 0; i < g.num_nodes; ++i) {
        for (Index j = 0; j < g.feature_dim(); ++j) {
            if (j > 0) features += ',';
            append_double(features, g.features(i, j));
        }
        features += '\n';
    }
    write_file(dir / "features.csv", features);

    if (g.labels) {
        std::string labels;
        for (int y : *g.labels) {
            labels += std::to_string(y);
            labels += '\n';
        }
        write_file(dir / "labels.csv", labels);
    } else if (fs::exists(dir / "labels.csv")) {
        fs::remove(dir / "labels.csv");
    }
}

}  // namespace hgda
