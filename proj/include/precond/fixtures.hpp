#pragma once

#include "precond/matrix_kernel.hpp"

namespace precond::fixtures {

// The 5x5 counterproductive-diagonal covariance as printed (1-2 digit
// rounding). It is indefinite: its smallest eigenvalue is about -0.049.
linalg::SymMatrix sigma_pi_displayed();

// Nearest repair of the printed matrix: the one negative eigenvalue is
// replaced by lambda_max / 4400, every other eigenpair kept. Entries move
// by less than 0.03, so the matrix still rounds to the printed one.
linalg::SymMatrix sigma_pi();

inline constexpr double kSigmaPiKappa = 4400.0;

}  // namespace precond::fixtures
