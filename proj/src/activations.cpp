#include "steinglm/activations.hpp"

#include <cmath>
#include <stdexcept>

namespace steinglm {

double activate(Activation f, double x) {
  switch (f) {
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::Sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
    case Activation::Identity:
      return x;
  }
  throw std::logic_error("activate: unknown activation");
}

double activate_derivative_from_value(Activation f, double y) {
  switch (f) {
    case Activation::Tanh:
      return 1.0 - y * y;
    case Activation::Sigmoid:
      return y * (1.0 - y);
    case Activation::Identity:
      return 1.0;
  }
  throw std::logic_error("activate_derivative_from_value: unknown activation");
}

double slope_at_zero(Activation f) {
  switch (f) {
    case Activation::Tanh:
      return 1.0;
    case Activation::Sigmoid:
      return 0.25;
    case Activation::Identity:
      return 1.0;
  }
  throw std::logic_error("slope_at_zero: unknown activation");
}

double scaling_factor(Activation hidden) {
  switch (hidden) {
    case Activation::Tanh:
      return 1.0;
    case Activation::Sigmoid:
      return 4.0;
    default:
      throw std::invalid_argument("scaling_factor: unsupported hidden activation " +
                                  to_string(hidden));
  }
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation f) {
  switch (f) {
    case Activation::Tanh:
      return "tanh";
    case Activation::Sigmoid:
      return "sigmoid";
    case Activation::Identity:
      return "identity";
  }
  return "?";
}

}  // namespace steinglm
