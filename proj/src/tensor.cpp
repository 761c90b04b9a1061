#include "gdn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "gdn/kernels.hpp"

namespace gdn {

// ---------------------------------------------------------------- Tensor

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  std::int64_t n = 1;
  for (int d : t.impl_->shape) {
    if (d < 0) throw shape_error("negative dimension");
    n *= d;
  }
  t.impl_->data.assign(static_cast<size_t>(n), 0.0);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data,
                    bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  if (t.impl_->data.size() != data.size())
    throw shape_error("data length does not match shape");
  t.impl_->data = std::move(data);
  return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1, 1}, {v}, requires_grad);
}

Tensor Tensor::eye(int n) {
  Tensor t = zeros({n, n});
  for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  if (numel() != 1) throw usage_error("item() requires a single-element tensor");
  return impl_->data[0];
}

std::vector<double>& Tensor::grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() const {
  if (impl_ && !impl_->grad.empty())
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = impl_->shape;
  t.impl_->data = impl_->data;
  t.impl_->requires_grad = impl_->requires_grad;
  return t;
}

// ---------------------------------------------------------------- Tape

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() {
  prev_ = g_active_tape;
  g_active_tape = this;
}

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

int Tape::record(std::function<void()> backward_rule) {
  entries_.push_back(std::move(backward_rule));
  return static_cast<int>(entries_.size()) - 1;
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) throw usage_error("backward requires a scalar loss");
  if (!loss.requires_grad() || loss.tape_node() < 0)
    throw usage_error("loss is not recorded on a tape");
  Tensor seed = loss;
  seed.grad()[0] = 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    (*it)();
    ++backward_visits_;
  }
}

void backward(const Tensor& loss) {
  Tape* t = Tape::active();
  if (!t) throw usage_error("no active tape");
  t->backward(loss);
}

// ---------------------------------------------------------------- op helpers

namespace {

void check_matrix(const Tensor& t, const char* who) {
  if (!t.defined() || t.ndim() != 2)
    throw shape_error(std::string(who) + ": expected a 2-d tensor");
}


// Marks `out` as produced by a recorded op; allocates grad buffers up front so
// backward rules can accumulate without checks.
template <typename Rule>
void record_op(Tensor& out, std::initializer_list<Tensor> inputs, Rule rule) {
  Tape* tape = Tape::active();
  if (!tape) return;
  bool any = false;
  for (const Tensor& in : inputs) any = any || in.requires_grad();
  if (!any) return;
  out.set_requires_grad(true);
  out.grad();
  for (Tensor in : inputs)
    if (in.requires_grad()) in.grad();
  out.set_tape_node(tape->record(std::move(rule)));
}

struct BcastIdx {
  int rows, cols;
  size_t operator()(int i, int j) const {
    return static_cast<size_t>(rows == 1 ? 0 : i) * cols + (cols == 1 ? 0 : j);
  }
};

enum class BinKind { add, sub, mul, divide };

Tensor binary_op(const Tensor& a, const Tensor& b, BinKind kind,
                 const char* who) {
  check_matrix(a, who);
  check_matrix(b, who);
  const int r = a.rows(), c = a.cols();
  const bool same = b.rows() == r && b.cols() == c;
  const bool row_b = b.rows() == 1 && b.cols() == c;
  const bool col_b = b.rows() == r && b.cols() == 1;
  const bool scalar_b = b.rows() == 1 && b.cols() == 1;
  if (!(same || row_b || col_b || scalar_b))
    throw shape_error(std::string(who) + ": incompatible shapes");
  BcastIdx bi{b.rows(), b.cols()};

  Tensor out = Tensor::zeros({r, c});
  {
    const auto& ad = a.data();
    const auto& bd = b.data();
    auto& od = out.data();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) {
        const size_t o = static_cast<size_t>(i) * c + j;
        const double bv = bd[bi(i, j)];
        switch (kind) {
          case BinKind::add: od[o] = ad[o] + bv; break;
          case BinKind::sub: od[o] = ad[o] - bv; break;
          case BinKind::mul: od[o] = ad[o] * bv; break;
          case BinKind::divide: od[o] = ad[o] / bv; break;
        }
      }
  }
  record_op(out, {a, b}, [a, b, out, kind, bi]() mutable {
    const auto& g = out.grad();
    const int r = a.rows(), c = a.cols();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) {
        const size_t o = static_cast<size_t>(i) * c + j;
        const size_t ob = bi(i, j);
        const double bv = b.data()[ob];
        if (a.requires_grad()) {
          double da = 1.0;
          if (kind == BinKind::mul) da = bv;
          if (kind == BinKind::divide) da = 1.0 / bv;
          a.grad()[o] += g[o] * da;
        }
        if (b.requires_grad()) {
          double db = 1.0;
          switch (kind) {
            case BinKind::add: db = 1.0; break;
            case BinKind::sub: db = -1.0; break;
            case BinKind::mul: db = a.data()[o]; break;
            case BinKind::divide: db = -a.data()[o] / (bv * bv); break;
          }
          b.grad()[ob] += g[o] * db;
        }
      }
  });
  return out;
}

template <typename F, typename D>
Tensor unary_op(const Tensor& a, F fwd, D dval, const char* who) {
  check_matrix(a, who);
  Tensor out = Tensor::zeros(a.shape());
  const auto& ad = a.data();
  auto& od = out.data();
  for (size_t i = 0; i < ad.size(); ++i) od[i] = fwd(ad[i]);
  record_op(out, {a}, [a, out, dval]() mutable {
    if (!a.requires_grad()) return;
    const auto& g = out.grad();
    auto& ga = a.grad();
    for (size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] * dval(a.data()[i], out.data()[i]);
  });
  return out;
}

Tensor transposed_data(const Tensor& a) {
  Tensor t = Tensor::zeros({a.cols(), a.rows()});
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

}  // namespace

// ---------------------------------------------------------------- binary

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::mul, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::divide, "div"); }

Tensor scale(const Tensor& a, double c) {
  return unary_op(
      a, [c](double x) { return x * c; }, [c](double, double) { return c; },
      "scale");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_matrix(a, "matmul");
  check_matrix(b, "matmul");
  if (a.cols() != b.rows()) throw shape_error("matmul: inner dims differ");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n});
  kernels::matmul(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  record_op(out, {a, b}, [a, b, out, m, k, n]() mutable {
    const auto& g = out.grad();
    if (a.requires_grad()) {
      Tensor bt = transposed_data(b);
      std::vector<double> da(static_cast<size_t>(m) * k);
      kernels::matmul(g.data(), bt.data().data(), da.data(), m, n, k);
      auto& ga = a.grad();
      for (size_t i = 0; i < da.size(); ++i) ga[i] += da[i];
    }
    if (b.requires_grad()) {
      Tensor at = transposed_data(a);
      std::vector<double> db(static_cast<size_t>(k) * n);
      kernels::matmul(at.data().data(), g.data(), db.data(), k, m, n);
      auto& gb = b.grad();
      for (size_t i = 0; i < db.size(); ++i) gb[i] += db[i];
    }
  });
  return out;
}

Tensor transpose(const Tensor& a) {
  check_matrix(a, "transpose");
  Tensor out = transposed_data(a);
  record_op(out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    const int r = a.rows(), c = a.cols();
    auto& ga = a.grad();
    const auto& g = out.grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        ga[static_cast<size_t>(i) * c + j] += g[static_cast<size_t>(j) * r + i];
  });
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw usage_error("concat_rows: empty input");
  int c = parts[0].cols(), r = 0;
  for (const Tensor& p : parts) {
    check_matrix(p, "concat_rows");
    if (p.cols() != c) throw shape_error("concat_rows: width mismatch");
    r += p.rows();
  }
  Tensor out = Tensor::zeros({r, c});
  int row0 = 0;
  for (const Tensor& p : parts) {
    std::memcpy(out.data().data() + static_cast<size_t>(row0) * c,
                p.data().data(), p.data().size() * sizeof(double));
    row0 += p.rows();
  }
  Tape* tape = Tape::active();
  bool any = false;
  for (const Tensor& p : parts) any = any || p.requires_grad();
  if (tape && any) {
    out.set_requires_grad(true);
    out.grad();
    for (Tensor p : parts)
      if (p.requires_grad()) p.grad();
    std::vector<Tensor> ps = parts;
    out.set_tape_node(tape->record([ps, out, c]() mutable {
      const auto& g = out.grad();
      size_t row0 = 0;
      for (Tensor& p : ps) {
        if (p.requires_grad()) {
          auto& gp = p.grad();
          for (size_t i = 0; i < gp.size(); ++i)
            gp[i] += g[row0 * c + i];
        }
        row0 += static_cast<size_t>(p.rows());
      }
    }));
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw usage_error("concat_cols: empty input");
  int r = parts[0].rows(), c = 0;
  for (const Tensor& p : parts) {
    check_matrix(p, "concat_cols");
    if (p.rows() != r) throw shape_error("concat_cols: row count mismatch");
    c += p.cols();
  }
  Tensor out = Tensor::zeros({r, c});
  int col0 = 0;
  for (const Tensor& p : parts) {
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < p.cols(); ++j) out.at(i, col0 + j) = p.at(i, j);
    col0 += p.cols();
  }
  Tape* tape = Tape::active();
  bool any = false;
  for (const Tensor& p : parts) any = any || p.requires_grad();
  if (tape && any) {
    out.set_requires_grad(true);
    out.grad();
    for (Tensor p : parts)
      if (p.requires_grad()) p.grad();
    std::vector<Tensor> ps = parts;
    out.set_tape_node(tape->record([ps, out, r, c]() mutable {
      const auto& g = out.grad();
      int col0 = 0;
      for (Tensor& p : ps) {
        if (p.requires_grad()) {
          auto& gp = p.grad();
          const int pc = p.cols();
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < pc; ++j)
              gp[static_cast<size_t>(i) * pc + j] +=
                  g[static_cast<size_t>(i) * c + col0 + j];
        }
        col0 += p.cols();
      }
    }));
  }
  return out;
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  if (n != a.numel()) throw shape_error("reshape: element count mismatch");
  Tensor out = Tensor::from(std::move(shape), a.data());
  record_op(out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    auto& ga = a.grad();
    const auto& g = out.grad();
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
  return out;
}

// ---------------------------------------------------------------- unary

Tensor relu(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; }, "relu");
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary_op(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; }, "leaky_relu");
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a,
      [](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

Tensor tanh_op(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; }, "tanh");
}

Tensor exp_op(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; }, "exp");
}

Tensor sqrt_op(const Tensor& a) {
  for (double v : a.data())
    if (v < 0) throw numeric_error("sqrt of negative value");
  return unary_op(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; }, "sqrt");
}

Tensor activation(const std::string& name, const Tensor& a) {
  if (name == "identity" || name.empty()) return a;
  if (name == "relu") return relu(a);
  if (name == "leaky_relu") return leaky_relu(a);
  if (name == "sigmoid") return sigmoid(a);
  if (name == "tanh") return tanh_op(a);
  throw usage_error("unknown activation: " + name);
}

Tensor softmax_rows(const Tensor& a) {
  check_matrix(a, "softmax_rows");
  const int r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros({r, c});
  for (int i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < c; ++j) mx = std::max(mx, a.at(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      out.at(i, j) = std::exp(a.at(i, j) - mx);
      z += out.at(i, j);
    }
    for (int j = 0; j < c; ++j) out.at(i, j) /= z;
  }
  record_op(out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    const int r = a.rows(), c = a.cols();
    for (int i = 0; i < r; ++i) {
      double dot = 0.0;
      for (int j = 0; j < c; ++j)
        dot += out.grad()[static_cast<size_t>(i) * c + j] * out.at(i, j);
      for (int j = 0; j < c; ++j) {
        const size_t o = static_cast<size_t>(i) * c + j;
        a.grad()[o] += out.at(i, j) * (out.grad()[o] - dot);
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------- gather / segment

Tensor gather_rows(const Tensor& m, const std::vector<int>& ids) {
  check_matrix(m, "gather_rows");
  for (int id : ids)
    if (id < 0 || id >= m.rows()) throw usage_error("gather_rows: id out of range");
  const int d = m.cols();
  Tensor out = Tensor::zeros({static_cast<int>(ids.size()), d});
  kernels::gather_rows(m.data().data(), ids.data(), out.data().data(),
                       static_cast<int>(ids.size()), d);
  record_op(out, {m}, [m, out, ids]() mutable {
    if (!m.requires_grad()) return;
    auto groups = kernels::group_rows(ids.data(), static_cast<int>(ids.size()),
                                      m.rows());
    kernels::scatter_add_rows(out.grad().data(), m.grad().data(), m.cols(),
                              groups);
  });
  return out;
}

Tensor segment_reduce(const Tensor& m, const std::vector<int>& segment_ids,
                      int num_segments, Reduce mode,
                      std::vector<char>* empty_flags) {
  check_matrix(m, "segment_reduce");
  if (static_cast<int>(segment_ids.size()) != m.rows())
    throw shape_error("segment_reduce: one segment id per row required");
  for (int s : segment_ids)
    if (s < 0 || s >= num_segments)
      throw usage_error("segment_reduce: segment id out of range");
  const int d = m.cols();
  auto groups = std::make_shared<kernels::RowGroups>(kernels::group_rows(
      segment_ids.data(), static_cast<int>(segment_ids.size()), num_segments));
  if (empty_flags) {
    empty_flags->assign(num_segments, 0);
    for (int s = 0; s < num_segments; ++s)
      if (groups->count(s) == 0) (*empty_flags)[s] = 1;
  }
  Tensor out = Tensor::zeros({num_segments, d});
  std::shared_ptr<std::vector<int>> argmax;
  switch (mode) {
    case Reduce::sum:
      kernels::segment_sum(m.data().data(), out.data().data(), d, *groups);
      break;
    case Reduce::mean:
      kernels::segment_mean(m.data().data(), out.data().data(), d, *groups);
      break;
    case Reduce::max:
      argmax = std::make_shared<std::vector<int>>(
          static_cast<size_t>(num_segments) * d);
      kernels::segment_max(m.data().data(), out.data().data(), argmax->data(),
                           d, *groups);
      break;
  }
  record_op(out, {m}, [m, out, groups, argmax, mode, d, num_segments]() mutable {
    if (!m.requires_grad()) return;
    const auto& g = out.grad();
    auto& gm = m.grad();
    switch (mode) {
      case Reduce::sum:
        for (int s = 0; s < num_segments; ++s)
          for (int p = groups->offsets[s]; p < groups->offsets[s + 1]; ++p) {
            const size_t r = static_cast<size_t>(groups->members[p]);
            for (int j = 0; j < d; ++j)
              gm[r * d + j] += g[static_cast<size_t>(s) * d + j];
          }
        break;
      case Reduce::mean:
        for (int s = 0; s < num_segments; ++s) {
          const double inv = 1.0 / std::max(groups->count(s), 1);
          for (int p = groups->offsets[s]; p < groups->offsets[s + 1]; ++p) {
            const size_t r = static_cast<size_t>(groups->members[p]);
            for (int j = 0; j < d; ++j)
              gm[r * d + j] += g[static_cast<size_t>(s) * d + j] * inv;
          }
        }
        break;
      case Reduce::max:
        for (int s = 0; s < num_segments; ++s)
          for (int j = 0; j < d; ++j) {
            const int r = (*argmax)[static_cast<size_t>(s) * d + j];
            if (r >= 0)
              gm[static_cast<size_t>(r) * d + j] +=
                  g[static_cast<size_t>(s) * d + j];
          }
        break;
    }
  });
  return out;
}

Tensor segment_softmax(const Tensor& values, const std::vector<int>& segment_ids,
                       int num_segments) {
  check_matrix(values, "segment_softmax");
  if (static_cast<int>(segment_ids.size()) != values.rows())
    throw shape_error("segment_softmax: one segment id per row required");
  for (int s : segment_ids)
    if (s < 0 || s >= num_segments)
      throw usage_error("segment_softmax: segment id out of range");
  auto groups = std::make_shared<kernels::RowGroups>(kernels::group_rows(
      segment_ids.data(), static_cast<int>(segment_ids.size()), num_segments));
  for (int s = 0; s < num_segments; ++s)
    if (groups->count(s) == 0)
      throw usage_error("segment_softmax: empty segment " + std::to_string(s));
  const int d = values.cols();
  Tensor out = Tensor::zeros(values.shape());
  kernels::segment_softmax(values.data().data(), out.data().data(), d, *groups);
  record_op(out, {values}, [values, out, groups, d]() mutable {
    if (!values.requires_grad()) return;
    const auto& g = out.grad();
    auto& gv = values.grad();
    for (int s = 0; s < groups->num_groups(); ++s)
      for (int j = 0; j < d; ++j) {
        double dot = 0.0;
        for (int p = groups->offsets[s]; p < groups->offsets[s + 1]; ++p) {
          const size_t o = static_cast<size_t>(groups->members[p]) * d + j;
          dot += g[o] * out.data()[o];
        }
        for (int p = groups->offsets[s]; p < groups->offsets[s + 1]; ++p) {
          const size_t o = static_cast<size_t>(groups->members[p]) * d + j;
          gv[o] += out.data()[o] * (g[o] - dot);
        }
      }
  });
  return out;
}

// ---------------------------------------------------------------- reductions

Tensor sum_all(const Tensor& a) {
  check_matrix(a, "sum_all");
  double s = 0.0;
  for (double v : a.data()) s += v;
  Tensor out = Tensor::scalar(s);
  record_op(out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    const double g = out.grad()[0];
    auto& ga = a.grad();
    for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
  return out;
}

Tensor row_sum(const Tensor& a) {
  check_matrix(a, "row_sum");
  const int r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros({r, 1});
  for (int i = 0; i < r; ++i) {
    double s = 0.0;
    for (int j = 0; j < c; ++j) s += a.at(i, j);
    out.at(i, 0) = s;
  }
  record_op(out, {a}, [a, out]() mutable {
    if (!a.requires_grad()) return;
    const int r = a.rows(), c = a.cols();
    auto& ga = a.grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        ga[static_cast<size_t>(i) * c + j] += out.grad()[i];
  });
  return out;
}

// ---------------------------------------------------------------- fused losses

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  check_matrix(logits, "cross_entropy");
  const int b = logits.rows(), c = logits.cols();
  if (static_cast<int>(targets.size()) != b)
    throw shape_error("cross_entropy: one target per row required");
  for (int t : targets)
    if (t < 0 || t >= c) throw usage_error("cross_entropy: target out of range");
  // cache softmax for the backward rule
  Tensor probs = Tensor::zeros({b, c});
  double loss = 0.0;
  for (int i = 0; i < b; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < c; ++j) mx = std::max(mx, logits.at(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(logits.at(i, j) - mx);
    for (int j = 0; j < c; ++j) probs.at(i, j) = std::exp(logits.at(i, j) - mx) / z;
    loss += std::log(z) + mx - logits.at(i, targets[i]);
  }
  Tensor out = Tensor::scalar(loss / b);
  record_op(out, {logits}, [logits, out, probs, targets, b, c]() mutable {
    if (!logits.requires_grad()) return;
    const double g = out.grad()[0] / b;
    auto& gl = logits.grad();
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < c; ++j)
        gl[static_cast<size_t>(i) * c + j] +=
            g * (probs.at(i, j) - (j == targets[i] ? 1.0 : 0.0));
  });
  return out;
}

Tensor bce_with_logits_sum(const Tensor& logits, const Tensor& targets) {
  check_matrix(logits, "bce_with_logits_sum");
  if (logits.shape() != targets.shape())
    throw shape_error("bce_with_logits_sum: shape mismatch");
  if (targets.requires_grad())
    throw usage_error("bce_with_logits_sum: targets must be constant");
  double loss = 0.0;
  const auto& z = logits.data();
  const auto& t = targets.data();
  for (size_t i = 0; i < z.size(); ++i)
    loss += std::max(z[i], 0.0) - z[i] * t[i] + std::log1p(std::exp(-std::abs(z[i])));
  Tensor out = Tensor::scalar(loss);
  record_op(out, {logits}, [logits, out, targets]() mutable {
    if (!logits.requires_grad()) return;
    const double g = out.grad()[0];
    auto& gl = logits.grad();
    const auto& z = logits.data();
    const auto& t = targets.data();
    for (size_t i = 0; i < z.size(); ++i) {
      const double s = z[i] >= 0 ? 1.0 / (1.0 + std::exp(-z[i]))
                                 : std::exp(z[i]) / (1.0 + std::exp(z[i]));
      gl[i] += g * (s - t[i]);
    }
  });
  return out;
}

Tensor bernoulli_nll_sum(const Tensor& probs, const Tensor& targets) {
  check_matrix(probs, "bernoulli_nll_sum");
  if (probs.shape() != targets.shape())
    throw shape_error("bernoulli_nll_sum: shape mismatch");
  if (targets.requires_grad())
    throw usage_error("bernoulli_nll_sum: targets must be constant");
  constexpr double kTiny = 1e-300;
  const auto& p = probs.data();
  const auto& t = targets.data();
  double loss = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || p[i] > 1.0)
      throw numeric_error("bernoulli_nll_sum: probability outside [0,1]");
    if (t[i] > 0) loss -= t[i] * std::log(std::max(p[i], kTiny));
    if (t[i] < 1) loss -= (1.0 - t[i]) * std::log(std::max(1.0 - p[i], kTiny));
  }
  Tensor out = Tensor::scalar(loss);
  record_op(out, {probs}, [probs, out, targets]() mutable {
    if (!probs.requires_grad()) return;
    constexpr double kTiny = 1e-300;
    const double g = out.grad()[0];
    auto& gp = probs.grad();
    const auto& p = probs.data();
    const auto& t = targets.data();
    for (size_t i = 0; i < p.size(); ++i) {
      if (t[i] > 0) gp[i] += g * (-t[i] / std::max(p[i], kTiny));
      if (t[i] < 1) gp[i] += g * ((1.0 - t[i]) / std::max(1.0 - p[i], kTiny));
    }
  });
  return out;
}

Tensor row_entropy_mean(const Tensor& s) {
  check_matrix(s, "row_entropy_mean");
  const int n = s.rows();
  for (double v : s.data())
    if (v < 0) throw numeric_error("row_entropy_mean: negative entry");
  double total = 0.0;
  for (double v : s.data())
    if (v > 0) total -= v * std::log(v);
  Tensor out = Tensor::scalar(total / std::max(n, 1));
  record_op(out, {s}, [s, out, n]() mutable {
    if (!s.requires_grad()) return;
    const double g = out.grad()[0] / std::max(n, 1);
    auto& gs = s.grad();
    const auto& sd = s.data();
    for (size_t i = 0; i < sd.size(); ++i)
      if (sd[i] > 0) gs[i] += g * (-(std::log(sd[i]) + 1.0));
  });
  return out;
}

Tensor rowwise_matvec(const Tensor& e, const Tensor& x, int out_dim) {
  check_matrix(e, "rowwise_matvec");
  check_matrix(x, "rowwise_matvec");
  const int m = e.rows(), in_dim = x.cols();
  if (x.rows() != m) throw shape_error("rowwise_matvec: row count mismatch");
  if (e.cols() != out_dim * in_dim)
    throw shape_error("rowwise_matvec: e must have out_dim*in_dim columns");
  Tensor out = Tensor::zeros({m, out_dim});
  for (int r = 0; r < m; ++r)
    for (int o = 0; o < out_dim; ++o) {
      double acc = 0.0;
      for (int i = 0; i < in_dim; ++i)
        acc += e.at(r, o * in_dim + i) * x.at(r, i);
      out.at(r, o) = acc;
    }
  record_op(out, {e, x}, [e, x, out, m, out_dim, in_dim]() mutable {
    const auto& g = out.grad();
    for (int r = 0; r < m; ++r)
      for (int o = 0; o < out_dim; ++o) {
        const double go = g[static_cast<size_t>(r) * out_dim + o];
        for (int i = 0; i < in_dim; ++i) {
          if (e.requires_grad())
            e.grad()[static_cast<size_t>(r) * e.cols() + o * in_dim + i] +=
                go * x.at(r, i);
          if (x.requires_grad())
            x.grad()[static_cast<size_t>(r) * in_dim + i] +=
                go * e.at(r, o * in_dim + i);
        }
      }
  });
  return out;
}

// ---------------------------------------------------------------- grad_check

double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                  double eps) {
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    for (Tensor& p : params) {
      p.set_requires_grad(true);
      p.zero_grad();
    }
    Tensor loss = f();
    tape.backward(loss);
    for (Tensor& p : params)
      analytic.push_back(p.has_grad() ? p.grad()
                                      : std::vector<double>(p.numel(), 0.0));
  }
  // finite differences run off-tape
  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& d = params[pi].data();
    for (size_t i = 0; i < d.size(); ++i) {
      const double orig = d[i];
      d[i] = orig + eps;
      const double fp = f().item();
      d[i] = orig - eps;
      const double fm = f().item();
      d[i] = orig;
      const double numeric = (fp - fm) / (2 * eps);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) /
                         std::max({1.0, std::abs(a), std::abs(numeric)});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace gdn
