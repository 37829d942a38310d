#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "precond/targets.hpp"

namespace precond {

// Plain-text model description:
//
//   # comment
//   target hyperbolic
//   scalar sigma2 1
//   scalar lambda 0.7
//   matrix X 4 2        <- followed by 4 row-major CSV lines
//   vector Y 4          <- followed by one CSV line
//
// Targets: gaussian (sigma, optional mu), cosine (m, M),
// hyperbolic (X, Y, sigma2, lambda), binomial (X, Y, w, lambda_over_n).
struct ModelSpec {
    std::string target;
    std::map<std::string, double> scalars;
    std::map<std::string, Matrix> matrices;
    std::map<std::string, Vector> vectors;
};

ModelSpec parse_model(std::istream& is);
ModelSpec load_model(const std::string& path);
void write_model(std::ostream& os, const ModelSpec& spec);
DifferentiableTarget build_target(const ModelSpec& spec);

}  // namespace precond
