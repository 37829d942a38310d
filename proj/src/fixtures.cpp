#include "precond/fixtures.hpp"

namespace precond::fixtures {

linalg::SymMatrix sigma_pi_displayed() {
    linalg::Matrix s(5, 5);
    s << 21.5, 5.7, 18.7, 4.5, 6.9,
          5.7, 2.0,  4.9, 1.2, 2.1,
         18.7, 4.9, 16.3, 3.9, 5.7,
          4.5, 1.2,  3.9, 1.4, 1.4,
          6.9, 2.1,  5.7, 1.4, 2.9;
    return linalg::SymMatrix(s);
}

linalg::SymMatrix sigma_pi() {
    auto e = linalg::sym_eigen(sigma_pi_displayed());
    linalg::Vector v = e.values;
    v(v.size() - 1) = v(0) / kSigmaPiKappa;
    return linalg::SymMatrix::symmetrize(e.vectors * v.asDiagonal() * e.vectors.transpose());
}

}  // namespace precond::fixtures
