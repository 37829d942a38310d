#pragma once

#include <cstdint>
#include <random>

#include "precond/matrix_kernel.hpp"

namespace precond {

using Rng = std::mt19937_64;

// splitmix64 finalizer over (master, index); streams for distinct indices
// are independent of the order in which they are created.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);
Rng make_stream(std::uint64_t master, std::uint64_t index);

linalg::Vector std_normal(Rng& rng, Eigen::Index d);
linalg::Matrix std_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols);
double uniform01(Rng& rng);

}  // namespace precond
