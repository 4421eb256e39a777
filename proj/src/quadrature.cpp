#include "bgc/quadrature.hpp"

namespace bgc {

void QuadConfig::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw InvalidParameter("quadrature tolerances must be positive");
  if (max_subdivisions < 1) throw InvalidParameter("quadrature subdivision budget must be at least 1");
}

}  // namespace bgc
