#pragma once

#include "ccr/actuation.hpp"
#include "ccr/shape_estimator.hpp"

namespace ccr {

/**
 * What the controller sees of the robot: it sends handle commands and reads
 * both tracking coils. Implemented by SimulatedPlant; a hardware adapter
 * would implement the same two calls. Both may throw PlantFault.
 */
class Plant {
 public:
  virtual ~Plant() = default;
  virtual void command(const ActuationQd& q) = 0;
  virtual CoilReadings read_coils() = 0;
};

}  // namespace ccr
