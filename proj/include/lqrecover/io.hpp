#pragma once

#include "lqrecover/common.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace lqrec {

using json = nlohmann::json;

/// Shortest decimal that round-trips a double (17 significant digits).
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// CSV matrix format: a `# rows=m cols=n` header line, then m rows of n
/// comma-separated decimals.
inline void write_matrix_csv(const std::string& path, const Mat& X) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# rows=" << X.rows() << " cols=" << X.cols() << "\n";
    for (Index r = 0; r < X.rows(); ++r) {
        for (Index c = 0; c < X.cols(); ++c) {
            if (c > 0) out << ",";
            out << format_g17(X(r, c));
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_matrix_json(const std::string& path, const Mat& X) {
    json j;
    j["rows"] = X.rows();
    j["cols"] = X.cols();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(X.size()));
    for (Index r = 0; r < X.rows(); ++r)
        for (Index c = 0; c < X.cols(); ++c) data.push_back(X(r, c));
    j["data"] = std::move(data);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump();
}

namespace detail {

inline Mat read_matrix_csv_stream(std::istream& in, const std::string& path) {
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty matrix file: " + path);
    Index rows = -1, cols = -1;
    if (std::sscanf(header.c_str(), "# rows=%td cols=%td", &rows, &cols) != 2 || rows < 1 ||
        cols < 1)
        throw std::runtime_error("bad CSV header (expected '# rows=m cols=n'): " + path);
    Mat X(rows, cols);
    std::string line;
    for (Index r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw std::runtime_error("truncated matrix file: " + path);
        std::stringstream ss(line);
        std::string cell;
        for (Index c = 0; c < cols; ++c) {
            if (!std::getline(ss, cell, ','))
                throw std::runtime_error("short row in matrix file: " + path);
            // strtod instead of stod: subnormals must round-trip, not throw
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw std::runtime_error("bad number in matrix file: " + path);
            X(r, c) = v;
        }
    }
    if (!X.allFinite()) throw std::runtime_error("non-finite entries in matrix file: " + path);
    return X;
}

inline Mat read_matrix_json(const json& j, const std::string& path) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 1 || cols < 1 || static_cast<Index>(data.size()) != rows * cols)
        throw std::runtime_error("JSON matrix shape mismatch: " + path);
    Mat X(rows, cols);
    std::size_t k = 0;
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) X(r, c) = data[k++].get<double>();
    if (!X.allFinite()) throw std::runtime_error("non-finite entries in matrix file: " + path);
    return X;
}

}  // namespace detail

/// Read a matrix from either supported format, sniffing by first character
/// ('{' means JSON).
inline Mat read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    const int first = in.peek();
    if (first == '{') {
        json j;
        in >> j;
        return detail::read_matrix_json(j, path);
    }
    return detail::read_matrix_csv_stream(in, path);
}

/// Read a vector: a matrix file with a single row or column.
inline Vec read_vector_file(const std::string& path) {
    const Mat X = read_matrix_file(path);
    if (X.cols() == 1) return X.col(0);
    if (X.rows() == 1) return X.row(0).transpose();
    throw std::runtime_error("expected a single-row or single-column matrix: " + path);
}

/// Provenance record written next to every run's outputs.
struct RunManifest {
    std::string tool_version = "0.1.0";
    json config;
    std::uint64_t master_seed = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> output_files;

    json to_json() const {
        json j;
        j["tool_version"] = tool_version;
        j["config"] = config;
        j["master_seed"] = master_seed;
        j["started_at"] = started_at;
        j["finished_at"] = finished_at;
        j["output_files"] = output_files;
        return j;
    }
};

inline void write_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << m.to_json().dump(2) << "\n";
}

}  // namespace lqrec
