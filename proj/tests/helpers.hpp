#pragma once

#include "mfphase/model.hpp"

#include <cmath>
#include <vector>

namespace testutil {

inline mfp::DiffusionModel fhn(double delta = 0.02) {
  mfp::VectorFieldSpec f;
  return mfp::DiffusionModel(2, delta, mfp::DiagonalMatrix({1.0, 1.0}),
                             mfp::DiagonalMatrix({std::sqrt(0.2), std::sqrt(0.02)}), f);
}

// Hopf normal form x' = x - y - x r^2, y' = x + y - y r^2 as a polynomial table.
inline mfp::DiffusionModel hopf(double var, double delta = 0.05) {
  mfp::VectorFieldSpec f;
  f.kind = mfp::FieldKind::custom_table;
  auto term = [](int c, double a, int e1, int e2) { return mfp::PolynomialTerm{c, {e1, e2}, a}; };
  f.terms = {term(0, 1, 1, 0), term(0, -1, 0, 1), term(0, -1, 3, 0), term(0, -1, 1, 2),
             term(1, 1, 1, 0), term(1, 1, 0, 1), term(1, -1, 0, 3), term(1, -1, 2, 1)};
  f.cutoff_radius = 50.0;
  const double s = std::sqrt(var);
  return mfp::DiffusionModel(2, delta, mfp::DiagonalMatrix({1.0, 1.0}), mfp::DiagonalMatrix({s, s}), f);
}

}  // namespace testutil
