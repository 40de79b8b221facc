#include "ccr/calibration.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/QR>

#include "ccr/errors.hpp"

namespace ccr {

namespace {

// Regressor columns below this RMS are treated as unexcited.
constexpr double kMinExcitation = 1e-9;

double rms(const Eigen::VectorXd& v) { return v.size() ? std::sqrt(v.squaredNorm() / v.size()) : 0.0; }

}  // namespace

CalibrationResult calibrate(std::span<const CalibrationSample> samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 4) throw std::invalid_argument("calibrate: at least four samples are required");

  Eigen::VectorXd gamma1(n), theta1(n), theta2(n);
  Eigen::MatrixXd X(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[i];
    gamma1(i) = s.q.gamma1;
    theta1(i) = s.theta1;
    theta2(i) = s.theta2;
    X(i, 0) = s.q.gamma2;
  }

  if (rms(gamma1) < kMinExcitation) throw IdentifiabilityError("k1");
  CalibrationResult out;
  out.samples = samples.size();
  out.k1 = gamma1.dot(theta1) / gamma1.squaredNorm();

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& q = samples[i].q;
    X(i, 1) = out.k1 * q.gamma1 * std::cos(q.delta1 - q.delta2);
  }
  if (rms(X.col(0)) < kMinExcitation) throw IdentifiabilityError("k2");
  if (rms(X.col(1)) < kMinExcitation) throw IdentifiabilityError("kc");

  // Column-normalised so the rank test is scale free.
  const Eigen::Vector2d scale(X.col(0).norm(), X.col(1).norm());
  const Eigen::MatrixXd Xn = X * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xn);
  qr.setThreshold(1e-9);
  if (qr.rank() < 2) throw IdentifiabilityError("k2/kc");
  const Eigen::Vector2d coeffs = qr.solve(theta2).cwiseQuotient(scale);
  out.k2 = coeffs(0);
  out.kc = coeffs(1);

  out.rms_theta1 = rms(theta1 - out.k1 * gamma1);
  out.rms_theta2 = rms(theta2 - X * coeffs);
  return out;
}

double calibrate_length_offset(std::span<const LengthSample> samples) {
  if (samples.empty()) throw std::invalid_argument("calibrate_length_offset: no samples");
  double sum = 0;
  for (const auto& s : samples) sum += s.length - s.beta;
  return sum / static_cast<double>(samples.size());
}

std::vector<CalibrationSample> read_calibration_samples(std::istream& in) {
  std::vector<CalibrationSample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream fields(line);
    double v[8];
    int count = 0;
    double x;
    while (fields >> x) {
      if (count < 8) v[count] = x;
      ++count;
    }
    if (!fields.eof() || count != 8) {
      throw ConfigError("line " + std::to_string(line_no), "expected 8 numeric fields");
    }
    out.push_back({ActuationQd{v[0], v[1], v[2], v[3], v[4], v[5]}, v[6], v[7]});
  }
  return out;
}

}  // namespace ccr
