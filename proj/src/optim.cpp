#include "gdn/optim.hpp"

#include <cmath>

#include "gdn/error.hpp"

namespace gdn {

void zero_grads(std::vector<ParamRef>& params) {
  for (ParamRef& p : params) p.tensor.zero_grad();
}

void Sgd::step(std::vector<ParamRef>& params) {
  for (ParamRef& p : params) {
    if (!p.tensor.has_grad()) continue;
    auto& d = p.tensor.data();
    const auto& g = p.tensor.grad();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= lr_ * g[i];
  }
}

void Adam::step(std::vector<ParamRef>& params) {
  if (m_.empty()) {
    for (const ParamRef& p : params) {
      m_.emplace_back(p.tensor.numel(), 0.0);
      v_.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (m_.size() != params.size())
    throw usage_error("optimizer state does not match parameter list");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& t = params[pi].tensor;
    if (!t.has_grad()) continue;
    auto& d = t.data();
    const auto& g = t.grad();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (std::size_t i = 0; i < d.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      d[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
    }
  }
}

}  // namespace gdn
