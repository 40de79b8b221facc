#pragma once

#include <istream>
#include <span>
#include <vector>

#include "ccr/actuation.hpp"

namespace ccr {

/// A commanded q together with the bend angles measured at that command.
struct CalibrationSample {
  ActuationQd q;
  double theta1 = 0;
  double theta2 = 0;
};

struct CalibrationResult {
  double k1 = 0, k2 = 0, kc = 0;
  double rms_theta1 = 0;  ///< rad
  double rms_theta2 = 0;  ///< rad
  std::size_t samples = 0;

  /// params with the fitted gains substituted.
  ActuationParamsd apply(ActuationParamsd params) const {
    params.k1 = k1;
    params.k2 = k2;
    params.kc = kc;
    return params;
  }
};

/**
 * Least-squares fit of the bend gains.
 *
 * theta1 = k1 gamma1 is fitted first; theta2 is then regressed on
 * [gamma2, k1_hat gamma1 cos(delta1 - delta2)], which keeps both stages linear.
 * Throws IdentifiabilityError naming a gain the samples do not excite and
 * std::invalid_argument for fewer than four samples.
 */
CalibrationResult calibrate(std::span<const CalibrationSample> samples);

/// Straight-configuration length observation: L_i measured at insertion beta_i.
struct LengthSample {
  double beta = 0;
  double length = 0;
};

/// b = mean(L - beta).
double calibrate_length_offset(std::span<const LengthSample> samples);

/**
 * Whitespace- or comma-separated records, one per line:
 *   delta1 beta1 gamma1 delta2 beta2 gamma2 theta1 theta2
 * Blank lines and lines starting with '#' are skipped. Throws ConfigError
 * naming the line on malformed input.
 */
std::vector<CalibrationSample> read_calibration_samples(std::istream& in);

}  // namespace ccr
