#include "lftkit/systems.hpp"

#include <cmath>

namespace lftkit::systems {

NonlinearSystem pendulum(double g_over_l, double damping) {
  NonlinearSystem sys;
  sys.name = "pendulum";
  sys.state_dim = 2;
  sys.input_dim = 1;
  sys.output_dim = 2;
  sys.f = [g_over_l, damping](const Vector& x, const Vector& u) {
    Vector dx(2);
    dx << x[1], -g_over_l * std::sin(x[0]) - damping * x[1] + u[0];
    return dx;
  };
  sys.h = [](const Vector& x, const Vector&) { return x; };
  sys.jacobian_f = [g_over_l, damping](const Vector& x, const Vector&) {
    Matrix a(2, 2);
    a << 0.0, 1.0, -g_over_l * std::cos(x[0]), -damping;
    Matrix b(2, 1);
    b << 0.0, 1.0;
    return std::pair{a, b};
  };
  sys.jacobian_h = [](const Vector&, const Vector&) {
    return std::pair{Matrix(Matrix::Identity(2, 2)), Matrix(Matrix::Zero(2, 1))};
  };
  sys.state_labels = {"theta", "omega"};
  sys.input_labels = {"torque"};
  // [x; u] indices: theta = 0, omega = 1, torque = 2.
  sys.equation_variables = {{1}, {0, 1, 2}, {}, {}};
  return sys;
}

NonlinearSystem van_der_pol(double mu) {
  NonlinearSystem sys;
  sys.name = "vanderpol";
  sys.state_dim = 2;
  sys.input_dim = 1;
  sys.output_dim = 2;
  sys.f = [mu](const Vector& x, const Vector& u) {
    Vector dx(2);
    dx << x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0] + u[0];
    return dx;
  };
  sys.h = [](const Vector& x, const Vector&) { return x; };
  sys.state_labels = {"x1", "x2"};
  sys.input_labels = {"u"};
  sys.equation_variables = {{1}, {0, 1, 2}, {}, {}};
  return sys;
}

NonlinearSystem linear(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d) {
  NonlinearSystem sys;
  sys.name = "linear";
  sys.state_dim = static_cast<int>(a.rows());
  sys.input_dim = static_cast<int>(b.cols());
  sys.output_dim = static_cast<int>(c.rows());
  sys.f = [a, b](const Vector& x, const Vector& u) { return Vector(a * x + b * u); };
  sys.h = [c, d](const Vector& x, const Vector& u) { return Vector(c * x + d * u); };
  sys.jacobian_f = [a, b](const Vector&, const Vector&) { return std::pair{a, b}; };
  sys.jacobian_h = [c, d](const Vector&, const Vector&) { return std::pair{c, d}; };
  return sys;
}

}  // namespace lftkit::systems
