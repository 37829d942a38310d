#include "precond/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace precond {

namespace {

std::vector<double> parse_csv_line(const std::string& line, int lineno) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw ParseError("bad number '" + cell + "'", lineno);
        }
    }
    return out;
}

bool next_content_line(std::istream& is, std::string& line, int& lineno) {
    while (std::getline(is, line)) {
        ++lineno;
        auto p = line.find_first_not_of(" \t\r");
        if (p == std::string::npos || line[p] == '#') continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }
    return false;
}

long parse_count(const std::string& s, int lineno) {
    try {
        std::size_t used = 0;
        long v = std::stol(s, &used);
        if (used != s.size() || v < 1) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad size '" + s + "'", lineno);
    }
}

void fmt(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

}  // namespace

ModelSpec parse_model(std::istream& is) {
    ModelSpec spec;
    std::string line;
    int lineno = 0;
    while (next_content_line(is, line, lineno)) {
        std::stringstream ss(line);
        std::string kw, name;
        ss >> kw;
        if (kw == "target") {
            if (!(ss >> spec.target)) throw ParseError("target needs a name", lineno);
        } else if (kw == "scalar") {
            std::string val;
            if (!(ss >> name >> val)) throw ParseError("scalar needs a name and a value", lineno);
            auto v = parse_csv_line(val, lineno);
            if (v.size() != 1) throw ParseError("scalar takes one value", lineno);
            spec.scalars[name] = v[0];
        } else if (kw == "matrix") {
            std::string r, c;
            if (!(ss >> name >> r >> c)) throw ParseError("matrix needs name, rows, cols", lineno);
            long rows = parse_count(r, lineno), cols = parse_count(c, lineno);
            Matrix m(rows, cols);
            for (long i = 0; i < rows; ++i) {
                if (!next_content_line(is, line, lineno)) throw ParseError("unexpected end of file in matrix " + name, lineno + 1);
                auto v = parse_csv_line(line, lineno);
                if (static_cast<long>(v.size()) != cols)
                    throw ParseError("expected " + std::to_string(cols) + " values, got " + std::to_string(v.size()), lineno);
                for (long j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(j)];
            }
            spec.matrices[name] = m;
        } else if (kw == "vector") {
            std::string len;
            if (!(ss >> name >> len)) throw ParseError("vector needs name and length", lineno);
            long n = parse_count(len, lineno);
            if (!next_content_line(is, line, lineno)) throw ParseError("unexpected end of file in vector " + name, lineno + 1);
            auto v = parse_csv_line(line, lineno);
            if (static_cast<long>(v.size()) != n)
                throw ParseError("expected " + std::to_string(n) + " values, got " + std::to_string(v.size()), lineno);
            spec.vectors[name] = Eigen::Map<Vector>(v.data(), n);
        } else {
            throw ParseError("unknown keyword '" + kw + "'", lineno);
        }
    }
    if (spec.target.empty()) throw ParseError("missing 'target' line", lineno);
    return spec;
}

ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file " + path);
    return parse_model(in);
}

void write_model(std::ostream& os, const ModelSpec& spec) {
    os << "target " << spec.target << '\n';
    for (const auto& [k, v] : spec.scalars) {
        os << "scalar " << k << ' ';
        fmt(os, v);
        os << '\n';
    }
    for (const auto& [k, m] : spec.matrices) {
        os << "matrix " << k << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (j) os << ',';
                fmt(os, m(i, j));
            }
            os << '\n';
        }
    }
    for (const auto& [k, v] : spec.vectors) {
        os << "vector " << k << ' ' << v.size() << '\n';
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (i) os << ',';
            fmt(os, v(i));
        }
        os << '\n';
    }
}

namespace {

double scalar(const ModelSpec& s, const std::string& k) {
    auto it = s.scalars.find(k);
    if (it == s.scalars.end()) throw ConfigError("model is missing scalar '" + k + "'");
    return it->second;
}

const Matrix& matrix(const ModelSpec& s, const std::string& k) {
    auto it = s.matrices.find(k);
    if (it == s.matrices.end()) throw ConfigError("model is missing matrix '" + k + "'");
    return it->second;
}

const Vector& vector(const ModelSpec& s, const std::string& k) {
    auto it = s.vectors.find(k);
    if (it == s.vectors.end()) throw ConfigError("model is missing vector '" + k + "'");
    return it->second;
}

}  // namespace

DifferentiableTarget build_target(const ModelSpec& s) {
    if (s.target == "gaussian") {
        const Matrix& sig = matrix(s, "sigma");
        Vector mu = s.vectors.count("mu") ? vector(s, "mu") : Vector::Zero(sig.rows());
        return gaussian_target(mu, SymMatrix(sig));
    }
    if (s.target == "cosine") return cosine_hard_target(scalar(s, "m"), scalar(s, "M"));
    if (s.target == "hyperbolic")
        return hyperbolic_regression_target(matrix(s, "X"), vector(s, "Y"), scalar(s, "sigma2"), scalar(s, "lambda"));
    if (s.target == "binomial")
        return binomial_gprior_target(matrix(s, "X"), vector(s, "Y"), vector(s, "w"), scalar(s, "lambda_over_n"));
    throw ConfigError("unknown target '" + s.target + "'");
}

}  // namespace precond
