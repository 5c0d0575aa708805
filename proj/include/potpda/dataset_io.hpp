#pragma once

// Plain CSV readers/writers for datasets, mass vectors and matrices.
//
// Dataset layout: header `split,x0,...,x{d-1},y[,y_hidden]`; split is
// `source` or `target`. Source rows carry y; target rows leave y empty and
// may carry y_hidden.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "measures.hpp"

namespace potpda {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double csv_number(const std::string& s, const std::string& where)
{
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw Error(where + ": bad number '" + s + "'");
    }
    if (pos != s.size()) throw Error(where + ": bad number '" + s + "'");
    return v;
}

inline std::string g17(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot read '" + path + "'");
    return in;
}

}  // namespace detail

inline PdaDataset read_dataset_csv(std::istream& in, const std::string& name = "dataset")
{
    std::string line;
    if (!std::getline(in, line)) throw Error(name + ": empty file");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 3 || header[0] != "split") throw Error(name + ": header must start with 'split,x0'");
    std::size_t d = 0;
    while (1 + d < header.size() && header[1 + d] == "x" + std::to_string(d)) ++d;
    if (d == 0 || 1 + d >= header.size() || header[1 + d] != "y")
        throw Error(name + ": header must be split,x0..x{d-1},y[,y_hidden]");
    const bool has_hidden = header.size() > 2 + d;
    if (has_hidden && (header[2 + d] != "y_hidden" || header.size() != 3 + d))
        throw Error(name + ": unexpected trailing columns");

    PdaDataset data;
    int lineno = 1;
    bool any_hidden = false, any_missing = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::string where = name + ":" + std::to_string(lineno);
        auto cells = detail::split_csv_line(line);
        cells.resize(header.size());
        Vector x(static_cast<Eigen::Index>(d));
        for (std::size_t t = 0; t < d; ++t) x(static_cast<Eigen::Index>(t)) = detail::csv_number(cells[1 + t], where);
        if (cells[0] == "source") {
            if (cells[1 + d].empty()) throw Error(where + ": source row without label");
            data.source.push_back({x, detail::csv_number(cells[1 + d], where)});
        } else if (cells[0] == "target") {
            data.target_inputs.push_back(x);
            if (has_hidden && !cells[2 + d].empty()) {
                data.target_labels_hidden.push_back(detail::csv_number(cells[2 + d], where));
                any_hidden = true;
            } else {
                any_missing = true;
            }
        } else {
            throw Error(where + ": split must be 'source' or 'target'");
        }
    }
    if (any_hidden && any_missing) throw Error(name + ": hidden labels given for only some target rows");
    data.validate();
    return data;
}

inline PdaDataset read_dataset_csv(const std::string& path)
{
    auto in = detail::open_in(path);
    return read_dataset_csv(in, path);
}

inline void write_dataset_csv(std::ostream& out, const PdaDataset& data)
{
    const auto d = data.dim();
    out << "split";
    for (Eigen::Index t = 0; t < d; ++t) out << ",x" << t;
    out << ",y";
    if (data.has_hidden_labels()) out << ",y_hidden";
    out << '\n';
    for (const auto& s : data.source) {
        out << "source";
        for (Eigen::Index t = 0; t < d; ++t) out << ',' << detail::g17(s.x(t));
        out << ',' << detail::g17(s.y);
        if (data.has_hidden_labels()) out << ',';
        out << '\n';
    }
    for (std::size_t j = 0; j < data.n_target(); ++j) {
        out << "target";
        for (Eigen::Index t = 0; t < d; ++t) out << ',' << detail::g17(data.target_inputs[j](t));
        out << ',';
        if (data.has_hidden_labels()) out << ',' << detail::g17(data.target_labels_hidden[j]);
        out << '\n';
    }
}

/// Numbers separated by commas and/or newlines.
inline std::vector<double> read_vector_csv(const std::string& path)
{
    auto in = detail::open_in(path);
    std::vector<double> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (const auto& cell : detail::split_csv_line(line))
            if (!cell.empty()) out.push_back(detail::csv_number(cell, path + ":" + std::to_string(lineno)));
    }
    if (out.empty()) throw Error(path + ": no values");
    return out;
}

/// One matrix row per line.
inline Matrix read_matrix_csv(const std::string& path)
{
    auto in = detail::open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::vector<double> r;
        for (const auto& cell : detail::split_csv_line(line))
            r.push_back(detail::csv_number(cell, path + ":" + std::to_string(lineno)));
        if (!rows.empty() && r.size() != rows.front().size()) throw Error(path + ": ragged rows");
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw Error(path + ": no rows");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << detail::g17(m(i, j));
        out << '\n';
    }
}

}  // namespace potpda
