#pragma once

#include <string>
#include <vector>

#include "gdn/tensor.hpp"

namespace gdn {

struct ParamRef {
  std::string name;
  Tensor tensor;
};

void zero_grads(std::vector<ParamRef>& params);

class Sgd {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(std::vector<ParamRef>& params);

 private:
  double lr_;
};

class Adam {
 public:
  explicit Adam(double lr = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  // State is positional: the params list must keep a stable order across steps.
  void step(std::vector<ParamRef>& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace gdn
