#pragma once

namespace angularpu {

/// log I_nu(x) for nu >= 0, x > 0, evaluated entirely in log space.
///
/// Regions:
///   x <= max(2000, nu)       ascending power series (all terms positive)
///   otherwise, nu >= 20      Debye uniform asymptotic expansion through u_4
///   otherwise                Hankel large-argument expansion
/// Throws NumericOverflow if the result is not finite.
double log_bessel_i(double nu, double x);

}  // namespace angularpu
