#pragma once

#include <span>
#include <vector>

#include "geofair/matrix.hpp"

namespace geofair {

/// Least-squares solution of X b ~ y by Householder QR. X must have full
/// column rank: a column whose remaining norm after orthogonalisation falls
/// below 1e-10 of its original norm raises RankDeficient.
std::vector<double> least_squares_qr(Matrix x, std::span<const double> y);

}  // namespace geofair
