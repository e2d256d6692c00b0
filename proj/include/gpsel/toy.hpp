#pragma once

#include <cstdint>
#include <utility>

#include "gpsel/dataset.hpp"

namespace gpsel {

// Additive sinusoid benchmark: inputs uniform on [-1, 1], response
// sum_j A_j sin(phi_j x_j) + Gaussian noise. The frequencies phi_j sweep an
// even grid from pi/10 to pi and each amplitude is chosen so its component
// has unit variance, making every relevant input equally predictive while
// their nonlinearity differs. Optional extra inputs carry no signal at all.
struct ToySpec {
  int n = 300;          // training points; the test set is the same size
  int n_inputs = 8;     // signal-bearing inputs
  int n_noise_inputs = 0;
  double noise_sd = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

double toy_frequency(const ToySpec& spec, int j);  // phi_j, 0-based j
double toy_amplitude(double phi);                  // unit-variance scaling

// Train and equal-sized test set; the test inputs are standardized with the
// training statistics.
std::pair<Dataset, Dataset> gen_toy(const ToySpec& spec);

}  // namespace gpsel
