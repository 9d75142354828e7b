#ifndef STEINGLM_ACTIVATIONS_HPP
#define STEINGLM_ACTIVATIONS_HPP

#include <string>

namespace steinglm {

enum class Activation { Tanh, Sigmoid, Identity };

double activate(Activation f, double x);

/// Derivative expressed through the activation value y = f(x).
double activate_derivative_from_value(Activation f, double y);

/// Slope of the activation at zero (1 for tanh/identity, 0.25 for sigmoid).
double slope_at_zero(Activation f);

/// The Stein weight scaling factor 1 / f'(0) for hidden activations:
/// tanh -> 1, sigmoid -> 4. Throws on anything else.
double scaling_factor(Activation hidden);

Activation activation_from_string(const std::string& s);
std::string to_string(Activation f);

}  // namespace steinglm

#endif
