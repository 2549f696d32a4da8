#include "bflow/tensor.hpp"

#include <cmath>
#include <sstream>

namespace bflow {

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

bool Tensor::all_finite() const {
  for (float v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

double dot(const Tensor& a, const Tensor& b) {
  BFLOW_CHECK(a.same_shape(b), "dot: shape mismatch ", a.shape_str(), " vs ", b.shape_str());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a.data[i]) * b.data[i];
  return s;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (float v : a.data) s += v;
  return s;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  BFLOW_CHECK(a.same_shape(b), "max_abs_diff: shape mismatch ", a.shape_str(), " vs ",
              b.shape_str());
  float m = 0.0f;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace bflow
