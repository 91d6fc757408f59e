#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "kbfid/error.hpp"

namespace kbfid {

using json = nlohmann::json;

inline json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ParseError(what + ": expected an array of rows");
    const std::size_t nrows = j.size();
    std::size_t ncols = 0;
    if (nrows > 0) {
        if (!j[0].is_array()) throw ParseError(what + ": expected nested arrays");
        ncols = j[0].size();
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(ncols));
    for (std::size_t i = 0; i < nrows; ++i) {
        if (!j[i].is_array() || j[i].size() != ncols) {
            throw ParseError(what + ": row " + std::to_string(i) + " has inconsistent length");
        }
        for (std::size_t k = 0; k < ncols; ++k) {
            if (!j[i][k].is_number()) {
                throw ParseError(what + ": non-numeric entry at (" + std::to_string(i) + "," +
                                 std::to_string(k) + ")");
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
        }
    }
    return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ParseError(what + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(what + ": non-numeric entry " + std::to_string(i));
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path.string());
    // nlohmann emits shortest decimal representations that round-trip exactly,
    // so numeric payloads survive save/load bit for bit.
    out << doc.dump(1, '\t') << '\n';
    if (!out) throw Error("failed while writing " + path.string());
}

template <typename T>
T require_field(const json& j, const std::string& key, const std::string& what) {
    if (!j.contains(key)) throw ParseError(what + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(what + ": bad field '" + key + "': " + e.what());
    }
}

}  // namespace kbfid
