#include "precond/rng.hpp"

namespace precond {

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(master) ^ (index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
}

Rng make_stream(std::uint64_t master, std::uint64_t index) {
    return Rng(split_seed(master, index));
}

linalg::Vector std_normal(Rng& rng, Eigen::Index d) {
    std::normal_distribution<double> n01;
    linalg::Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = n01(rng);
    return v;
}

linalg::Matrix std_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n01;
    linalg::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n01(rng);
    return m;
}

double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace precond
