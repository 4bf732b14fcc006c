#pragma once

#include <memory>
#include <string>

#include "lftkit/dynamics.hpp"

namespace lftkit::systems {

/// theta' = omega, omega' = -(g/L) sin(theta) - c omega + u, y = x.
NonlinearSystem pendulum(double g_over_l = 9.81, double damping = 0.5);

/// x1' = x2, x2' = mu (1 - x1^2) x2 - x1 + u, y = x.
NonlinearSystem van_der_pol(double mu = 1.0);

/// x' = A x + B u, y = C x + D u.
NonlinearSystem linear(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d);

/// External plant behind a subprocess speaking line-delimited JSON.
///
/// Requests, one JSON object per line on the child's stdin:
///   {"op":"describe"}
///   {"op":"f","x":[...],"u":[...]}
///   {"op":"h","x":[...],"u":[...]}
/// Replies, one JSON object per line on the child's stdout:
///   {"n":2,"n_u":1,"n_y":2,"name":"...","equation_variables":[[...],...]}
///   {"dx":[...]}
///   {"y":[...]}
/// A reply carrying {"error":"..."} is raised as lftkit::Error.
///
/// The returned system keeps the child alive through shared ownership in
/// its closures; the child exits when the last copy is destroyed.
NonlinearSystem plugin(const std::string& command);

}  // namespace lftkit::systems
