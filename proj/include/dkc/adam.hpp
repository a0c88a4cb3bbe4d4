#pragma once

// Adam with bias correction. State shapes mirror parameter shapes exactly
// and the step counter advances by one per update.

#include <cmath>
#include <string>
#include <vector>

#include "dkc/errors.hpp"
#include "dkc/tensor.hpp"

namespace dkc {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Tensor> m, v;  // first/second moment accumulators
};

inline AdamState adam_init(const std::vector<const Tensor*>& params, AdamConfig cfg = {}) {
  AdamState st;
  st.config = cfg;
  for (const Tensor* p : params) {
    st.m.push_back(Tensor::zeros(p->shape));
    st.v.push_back(Tensor::zeros(p->shape));
  }
  return st;
}

// In-place update of params from grads. `names`, when given, labels
// parameters in error messages.
inline void adam_step(const std::vector<Tensor*>& params,
                      const std::vector<const Tensor*>& grads, AdamState& st,
                      const std::vector<std::string>* names = nullptr) {
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw DimError("adam_step: parameter/gradient/state count mismatch");
  const AdamConfig& c = st.config;
  st.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(st.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = *params[p];
    const Tensor& g = *grads[p];
    if (!w.same_shape(g) || !w.same_shape(st.m[p]))
      throw DimError("adam_step: shape mismatch at parameter " + std::to_string(p));
    Tensor& m = st.m[p];
    Tensor& v = st.v[p];
    for (std::size_t i = 0; i < w.data.size(); ++i) {
      const double gi = g.data[i];
      if (!std::isfinite(gi)) {
        const std::string label = names ? (*names)[p] : ("#" + std::to_string(p));
        throw TrainError("adam_step: non-finite gradient in parameter " + label);
      }
      m.data[i] = c.beta1 * m.data[i] + (1.0 - c.beta1) * gi;
      v.data[i] = c.beta2 * v.data[i] + (1.0 - c.beta2) * gi * gi;
      // an exactly-zero gradient decays the moments but leaves the
      // parameter untouched
      if (gi == 0.0) continue;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      w.data[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace dkc
