#pragma once

#include <optional>
#include <vector>

#include "superjet/arith.hpp"

namespace superjet {

using PMatrix = std::vector<std::vector<PRat>>;

struct LinearSolution {
    bool consistent = false;
    std::vector<PRat> particular;           // one solution; empty if inconsistent
    std::vector<std::vector<PRat>> kernel;  // basis of the homogeneous solutions
};

// Solve A x = b by exact Gaussian elimination over the rational-function field.
LinearSolution solve_linear(PMatrix a, std::vector<PRat> b);

std::optional<PMatrix> invert_matrix(const PMatrix& a);

PRat determinant(PMatrix a);

}  // namespace superjet
