#include "nlmin/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlmin::ad {

std::string to_string(const Shape& shape) {
  switch (shape.rank) {
    case 0: return "scalar";
    case 1: return "vector(" + std::to_string(shape.rows) + ")";
    default: return "matrix(" + std::to_string(shape.rows) + "x" + std::to_string(shape.cols) + ")";
  }
}

namespace {

[[noreturn]] void shape_error(const std::string& what) { throw std::invalid_argument("autodiff: " + what); }

bool is_elementwise_binary(OpKind kind) {
  return kind == OpKind::Add || kind == OpKind::Sub || kind == OpKind::Mul || kind == OpKind::Div;
}

/// Read access to a node's value and (possibly absent) tangent lanes.
struct Operand {
  const double* v = nullptr;
  const double* t = nullptr;
  bool scalar = false;

  [[nodiscard]] double val(std::size_t i) const { return v[scalar ? 0 : i]; }
  [[nodiscard]] const double* tan(std::size_t i, std::size_t k) const { return t + (scalar ? 0 : i) * k; }
};

/// Write access to a node's adjoint and adjoint tangent lanes.
struct Sink {
  double* a = nullptr;
  double* at = nullptr;
  bool scalar = false;

  [[nodiscard]] explicit operator bool() const { return a != nullptr; }
  double& adj(std::size_t i) const { return a[scalar ? 0 : i]; }
  [[nodiscard]] double* adjt(std::size_t i, std::size_t k) const { return at + (scalar ? 0 : i) * k; }
};

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Per-node buffers, kept per thread so repeated sweeps reuse their storage.
struct Workspace {
  std::vector<std::vector<double>> val;
  std::vector<std::vector<double>> tan;
  std::vector<std::vector<double>> adj;
  std::vector<std::vector<double>> adjt;
};

Workspace& thread_workspace() {
  thread_local Workspace ws;
  return ws;
}

}  // namespace

// ---------------------------------------------------------------------------
// Evaluator

class Evaluator {
 public:
  /// lanes = 0 evaluates values only; otherwise tangents are carried.
  Evaluator(const Program& program, std::size_t lanes)
      : program_(program),
        graph_(*program.graph_),
        lanes_(lanes),
        val_(thread_workspace().val),
        tan_(thread_workspace().tan),
        adj_(thread_workspace().adj),
        adjt_(thread_workspace().adjt) {
    const std::size_t n = graph_.nodes.size();
    val_.resize(n);
    if (lanes_ > 0) tan_.resize(n);
  }

  /// Computes every node whose activity equals `active`.
  void forward(std::span<const double> u, const DirectionBlock* dirs, bool active,
               std::vector<std::vector<double>>* passive_out) {
    for (std::size_t id = 0; id < graph_.nodes.size(); ++id) {
      const Node& node = graph_.nodes[id];
      if (node.active != active) continue;
      if (node.kind == OpKind::Parameter) continue;
      auto& out = active ? val_[id] : (*passive_out)[id];
      out.assign(node.shape.size(), 0.0);
      double* tout = nullptr;
      if (active && lanes_ > 0) {
        tan_[id].assign(node.shape.size() * lanes_, 0.0);
        tout = tan_[id].data();
      }
      if (node.kind == OpKind::Input) {
        std::copy(u.begin(), u.end(), out.begin());
        if (tout != nullptr) std::copy(dirs->data.begin(), dirs->data.end(), tout);
        continue;
      }
      forward_node(node, out.data(), tout, passive_out);
    }
  }

  void reverse() {
    const std::size_t n = graph_.nodes.size();
    adj_.resize(n);
    if (lanes_ > 0) adjt_.resize(n);
    for (std::size_t id = 0; id < n; ++id) {
      const Node& node = graph_.nodes[id];
      if (!node.active) continue;
      adj_[id].assign(node.shape.size(), 0.0);
      if (lanes_ > 0) adjt_[id].assign(node.shape.size() * lanes_, 0.0);
    }
    const auto out = static_cast<std::size_t>(graph_.output);
    if (!graph_.nodes[out].active) return;
    adj_[out][0] = 1.0;
    for (std::size_t id = n; id-- > 0;) {
      const Node& node = graph_.nodes[id];
      if (!node.active || node.kind == OpKind::Input) continue;
      reverse_node(id, node);
    }
  }

  [[nodiscard]] double output_value() const {
    const auto out = static_cast<std::size_t>(graph_.output);
    if (graph_.nodes[out].active) return val_[out][0];
    return (*program_.passive_)[out][0];
  }

  [[nodiscard]] std::vector<double> input_adjoint() const {
    const auto in = static_cast<std::size_t>(graph_.input);
    if (!graph_.nodes[in].active || adj_.empty() || adj_[in].empty()) {
      return std::vector<double>(graph_.nodes[in].shape.size(), 0.0);
    }
    return adj_[in];
  }

  [[nodiscard]] DirectionBlock input_adjoint_tangent() const {
    const auto in = static_cast<std::size_t>(graph_.input);
    DirectionBlock block(graph_.nodes[in].shape.size(), lanes_);
    if (graph_.nodes[in].active && adjt_.size() > in) block.data = adjt_[in];
    return block;
  }

 private:
  Operand operand(int id, const std::vector<std::vector<double>>* passive_out) const {
    const auto idx = static_cast<std::size_t>(id);
    const Node& node = graph_.nodes[idx];
    Operand op;
    op.scalar = node.shape.rank == 0;
    if (node.kind == OpKind::Parameter) {
      op.v = program_.bindings_[node.table]->data();
    } else if (node.active) {
      op.v = val_[idx].data();
      if (lanes_ > 0) op.t = tan_[idx].data();
    } else {
      const auto& store = passive_out != nullptr ? *passive_out : *program_.passive_;
      op.v = store[idx].data();
    }
    return op;
  }

  Sink sink(int id) {
    const auto idx = static_cast<std::size_t>(id);
    const Node& node = graph_.nodes[idx];
    Sink s;
    s.scalar = node.shape.rank == 0;
    if (!node.active) return s;
    s.a = adj_[idx].data();
    if (lanes_ > 0) s.at = adjt_[idx].data();
    return s;
  }

  void forward_node(const Node& node, double* out, double* tout,
                    const std::vector<std::vector<double>>* passive_out) const {
    const std::size_t k = lanes_;
    const std::size_t len = node.shape.size();
    const Operand a = node.lhs >= 0 ? operand(node.lhs, passive_out) : Operand{};
    const Operand b = node.rhs >= 0 ? operand(node.rhs, passive_out) : Operand{};

    switch (node.kind) {
      case OpKind::Input:
      case OpKind::Parameter:
        break;

      case OpKind::Scatter: {
        const auto& idx = graph_.index_tables[node.table];
        std::copy(a.v, a.v + len, out);
        for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = b.val(i);
        if (tout != nullptr) {
          if (a.t != nullptr) std::copy(a.t, a.t + len * k, tout);
          for (std::size_t i = 0; i < idx.size(); ++i) {
            double* dst = tout + idx[i] * k;
            if (b.t != nullptr) {
              std::copy(b.tan(i, k), b.tan(i, k) + k, dst);
            } else {
              std::fill(dst, dst + k, 0.0);
            }
          }
        }
        break;
      }

      case OpKind::Gather: {
        const auto& idx = graph_.index_tables[node.table];
        for (std::size_t i = 0; i < len; ++i) out[i] = a.v[idx[i]];
        if (tout != nullptr && a.t != nullptr) {
          for (std::size_t i = 0; i < len; ++i) std::copy(a.t + idx[i] * k, a.t + idx[i] * k + k, tout + i * k);
        }
        break;
      }

      case OpKind::Stride: {
        for (std::size_t i = 0; i < len; ++i) out[i] = a.v[node.start + i * node.step];
        if (tout != nullptr && a.t != nullptr) {
          for (std::size_t i = 0; i < len; ++i) {
            const double* src = a.t + (node.start + i * node.step) * k;
            std::copy(src, src + k, tout + i * k);
          }
        }
        break;
      }

      case OpKind::Add:
      case OpKind::Sub: {
        const double sb = node.kind == OpKind::Add ? 1.0 : -1.0;
        for (std::size_t i = 0; i < len; ++i) out[i] = a.val(i) + sb * b.val(i);
        if (tout != nullptr) {
          for (std::size_t i = 0; i < len; ++i) {
            double* t = tout + i * k;
            if (a.t != nullptr) {
              const double* ta = a.tan(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += ta[l];
            }
            if (b.t != nullptr) {
              const double* tb = b.tan(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += sb * tb[l];
            }
          }
        }
        break;
      }

      case OpKind::Mul: {
        for (std::size_t i = 0; i < len; ++i) out[i] = a.val(i) * b.val(i);
        if (tout != nullptr) {
          for (std::size_t i = 0; i < len; ++i) {
            double* t = tout + i * k;
            if (a.t != nullptr) {
              const double* ta = a.tan(i, k);
              const double bv = b.val(i);
              for (std::size_t l = 0; l < k; ++l) t[l] += ta[l] * bv;
            }
            if (b.t != nullptr) {
              const double* tb = b.tan(i, k);
              const double av = a.val(i);
              for (std::size_t l = 0; l < k; ++l) t[l] += av * tb[l];
            }
          }
        }
        break;
      }

      case OpKind::Div: {
        for (std::size_t i = 0; i < len; ++i) out[i] = a.val(i) / b.val(i);
        if (tout != nullptr) {
          for (std::size_t i = 0; i < len; ++i) {
            double* t = tout + i * k;
            const double inv = 1.0 / b.val(i);
            if (a.t != nullptr) {
              const double* ta = a.tan(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += ta[l] * inv;
            }
            if (b.t != nullptr) {
              const double* tb = b.tan(i, k);
              const double z = out[i];
              for (std::size_t l = 0; l < k; ++l) t[l] -= z * tb[l] * inv;
            }
          }
        }
        break;
      }

      case OpKind::Neg:
      case OpKind::Pow:
      case OpKind::Log:
      case OpKind::Abs: {
        for (std::size_t i = 0; i < len; ++i) {
          const double x = a.val(i);
          double d = 0.0;
          switch (node.kind) {
            case OpKind::Neg: out[i] = -x; d = -1.0; break;
            case OpKind::Pow:
              out[i] = std::pow(x, node.exponent);
              d = node.exponent * std::pow(x, node.exponent - 1.0);
              break;
            case OpKind::Log: out[i] = std::log(x); d = 1.0 / x; break;
            default: out[i] = std::abs(x); d = sign(x); break;
          }
          if (tout != nullptr && a.t != nullptr) {
            const double* ta = a.tan(i, k);
            double* t = tout + i * k;
            for (std::size_t l = 0; l < k; ++l) t[l] = d * ta[l];
          }
        }
        break;
      }

      case OpKind::RowSum: {
        const Node& arg = graph_.nodes[static_cast<std::size_t>(node.lhs)];
        const std::size_t cols = arg.shape.cols;
        for (std::size_t i = 0; i < len; ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < cols; ++j) s += a.v[i * cols + j];
          out[i] = s;
        }
        if (tout != nullptr && a.t != nullptr) {
          for (std::size_t i = 0; i < len; ++i) {
            double* t = tout + i * k;
            for (std::size_t j = 0; j < cols; ++j) {
              const double* ta = a.t + (i * cols + j) * k;
              for (std::size_t l = 0; l < k; ++l) t[l] += ta[l];
            }
          }
        }
        break;
      }

      case OpKind::Sum: {
        const std::size_t n = graph_.nodes[static_cast<std::size_t>(node.lhs)].shape.size();
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a.v[i];
        out[0] = s;
        if (tout != nullptr && a.t != nullptr) {
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t l = 0; l < k; ++l) tout[l] += a.t[i * k + l];
          }
        }
        break;
      }

      case OpKind::Dot: {
        const std::size_t n = graph_.nodes[static_cast<std::size_t>(node.lhs)].shape.size();
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a.v[i] * b.v[i];
        out[0] = s;
        if (tout != nullptr) {
          for (std::size_t i = 0; i < n; ++i) {
            if (a.t != nullptr) {
              for (std::size_t l = 0; l < k; ++l) tout[l] += a.t[i * k + l] * b.v[i];
            }
            if (b.t != nullptr) {
              for (std::size_t l = 0; l < k; ++l) tout[l] += a.v[i] * b.t[i * k + l];
            }
          }
        }
        break;
      }

      case OpKind::MatMul: {
        const Node& left = graph_.nodes[static_cast<std::size_t>(node.lhs)];
        const std::size_t rows = left.shape.rows;
        const std::size_t inner = left.shape.cols;
        const std::size_t cols = node.shape.rank == 2 ? node.shape.cols : 1;
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t q = 0; q < inner; ++q) s += a.v[i * inner + q] * b.v[q * cols + j];
            out[i * cols + j] = s;
            if (tout != nullptr && a.t != nullptr) {
              double* t = tout + (i * cols + j) * k;
              for (std::size_t q = 0; q < inner; ++q) {
                const double* ta = a.t + (i * inner + q) * k;
                const double bq = b.v[q * cols + j];
                for (std::size_t l = 0; l < k; ++l) t[l] += ta[l] * bq;
              }
            }
          }
        }
        break;
      }
    }
  }

  void reverse_node(std::size_t id, const Node& node) {
    const std::size_t k = lanes_;
    const std::size_t len = node.shape.size();
    const double* gz = adj_[id].data();
    const double* gzt = k > 0 ? adjt_[id].data() : nullptr;
    const Operand a = node.lhs >= 0 ? operand(node.lhs, nullptr) : Operand{};
    const Operand b = node.rhs >= 0 ? operand(node.rhs, nullptr) : Operand{};
    const Sink sa = node.lhs >= 0 ? sink(node.lhs) : Sink{};
    const Sink sb = node.rhs >= 0 ? sink(node.rhs) : Sink{};

    switch (node.kind) {
      case OpKind::Input:
      case OpKind::Parameter:
        break;

      case OpKind::Scatter: {
        const auto& idx = graph_.index_tables[node.table];
        if (sb) {
          for (std::size_t i = 0; i < idx.size(); ++i) {
            sb.adj(i) += gz[idx[i]];
            if (k > 0) {
              double* t = sb.adjt(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += gzt[idx[i] * k + l];
            }
          }
        }
        if (sa) {
          std::vector<char> overwritten(len, 0);
          for (const std::size_t i : idx) overwritten[i] = 1;
          for (std::size_t i = 0; i < len; ++i) {
            if (overwritten[i]) continue;
            sa.adj(i) += gz[i];
            if (k > 0) {
              double* t = sa.adjt(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += gzt[i * k + l];
            }
          }
        }
        break;
      }

      case OpKind::Gather: {
        if (!sa) break;
        const auto& idx = graph_.index_tables[node.table];
        for (std::size_t i = 0; i < len; ++i) {
          sa.adj(idx[i]) += gz[i];
          if (k > 0) {
            double* t = sa.adjt(idx[i], k);
            for (std::size_t l = 0; l < k; ++l) t[l] += gzt[i * k + l];
          }
        }
        break;
      }

      case OpKind::Stride: {
        if (!sa) break;
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t src = node.start + i * node.step;
          sa.adj(src) += gz[i];
          if (k > 0) {
            double* t = sa.adjt(src, k);
            for (std::size_t l = 0; l < k; ++l) t[l] += gzt[i * k + l];
          }
        }
        break;
      }

      case OpKind::Add:
      case OpKind::Sub: {
        const double s = node.kind == OpKind::Add ? 1.0 : -1.0;
        for (std::size_t i = 0; i < len; ++i) {
          if (sa) {
            sa.adj(i) += gz[i];
            if (k > 0) {
              double* t = sa.adjt(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += gzt[i * k + l];
            }
          }
          if (sb) {
            sb.adj(i) += s * gz[i];
            if (k > 0) {
              double* t = sb.adjt(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += s * gzt[i * k + l];
            }
          }
        }
        break;
      }

      case OpKind::Mul: {
        // d(a*b): adjoint of a is gz*b, its tangent gzt*b + gz*tb
        for (std::size_t i = 0; i < len; ++i) {
          const double av = a.val(i);
          const double bv = b.val(i);
          if (sa) {
            sa.adj(i) += gz[i] * bv;
            if (k > 0) {
              double* t = sa.adjt(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += gzt[i * k + l] * bv;
              if (b.t != nullptr) {
                const double* tb = b.tan(i, k);
                for (std::size_t l = 0; l < k; ++l) t[l] += gz[i] * tb[l];
              }
            }
          }
          if (sb) {
            sb.adj(i) += gz[i] * av;
            if (k > 0) {
              double* t = sb.adjt(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += gzt[i * k + l] * av;
              if (a.t != nullptr) {
                const double* ta = a.tan(i, k);
                for (std::size_t l = 0; l < k; ++l) t[l] += gz[i] * ta[l];
              }
            }
          }
        }
        break;
      }

      case OpKind::Div: {
        const double* z = val_[id].data();
        const double* tz = k > 0 ? tan_[id].data() : nullptr;
        for (std::size_t i = 0; i < len; ++i) {
          const double inv = 1.0 / b.val(i);
          if (sa) {
            sa.adj(i) += gz[i] * inv;
            if (k > 0) {
              double* t = sa.adjt(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += gzt[i * k + l] * inv;
              if (b.t != nullptr) {
                const double* tb = b.tan(i, k);
                for (std::size_t l = 0; l < k; ++l) t[l] -= gz[i] * tb[l] * inv * inv;
              }
            }
          }
          if (sb) {
            // partial wrt b is -z/b
            const double q = z[i] * inv;
            sb.adj(i) -= gz[i] * q;
            if (k > 0) {
              double* t = sb.adjt(i, k);
              const double* tzi = tz + i * k;
              const double* tb = b.t != nullptr ? b.tan(i, k) : nullptr;
              for (std::size_t l = 0; l < k; ++l) {
                double dq = tzi[l] * inv;
                if (tb != nullptr) dq -= q * tb[l] * inv;
                t[l] -= gzt[i * k + l] * q + gz[i] * dq;
              }
            }
          }
        }
        break;
      }

      case OpKind::Neg:
      case OpKind::Pow:
      case OpKind::Log:
      case OpKind::Abs: {
        if (!sa) break;
        for (std::size_t i = 0; i < len; ++i) {
          const double x = a.val(i);
          double d = 0.0;
          double dd = 0.0;  // second derivative
          switch (node.kind) {
            case OpKind::Neg: d = -1.0; break;
            case OpKind::Pow: {
              const double c = node.exponent;
              d = c * std::pow(x, c - 1.0);
              dd = c * (c - 1.0) * std::pow(x, c - 2.0);
              break;
            }
            case OpKind::Log: d = 1.0 / x; dd = -d * d; break;
            default: d = sign(x); break;
          }
          sa.adj(i) += gz[i] * d;
          if (k > 0) {
            double* t = sa.adjt(i, k);
            for (std::size_t l = 0; l < k; ++l) t[l] += gzt[i * k + l] * d;
            if (dd != 0.0 && a.t != nullptr) {
              const double* ta = a.tan(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += gz[i] * dd * ta[l];
            }
          }
        }
        break;
      }

      case OpKind::RowSum: {
        if (!sa) break;
        const std::size_t cols = graph_.nodes[static_cast<std::size_t>(node.lhs)].shape.cols;
        for (std::size_t i = 0; i < len; ++i) {
          for (std::size_t j = 0; j < cols; ++j) {
            sa.adj(i * cols + j) += gz[i];
            if (k > 0) {
              double* t = sa.adjt(i * cols + j, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += gzt[i * k + l];
            }
          }
        }
        break;
      }

      case OpKind::Sum: {
        if (!sa) break;
        const std::size_t n = graph_.nodes[static_cast<std::size_t>(node.lhs)].shape.size();
        for (std::size_t i = 0; i < n; ++i) {
          sa.adj(i) += gz[0];
          if (k > 0) {
            double* t = sa.adjt(i, k);
            for (std::size_t l = 0; l < k; ++l) t[l] += gzt[l];
          }
        }
        break;
      }

      case OpKind::Dot: {
        const std::size_t n = graph_.nodes[static_cast<std::size_t>(node.lhs)].shape.size();
        for (std::size_t i = 0; i < n; ++i) {
          if (sa) {
            sa.adj(i) += gz[0] * b.v[i];
            if (k > 0) {
              double* t = sa.adjt(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += gzt[l] * b.v[i];
              if (b.t != nullptr) {
                for (std::size_t l = 0; l < k; ++l) t[l] += gz[0] * b.t[i * k + l];
              }
            }
          }
          if (sb) {
            sb.adj(i) += gz[0] * a.v[i];
            if (k > 0) {
              double* t = sb.adjt(i, k);
              for (std::size_t l = 0; l < k; ++l) t[l] += gzt[l] * a.v[i];
              if (a.t != nullptr) {
                for (std::size_t l = 0; l < k; ++l) t[l] += gz[0] * a.t[i * k + l];
              }
            }
          }
        }
        break;
      }

      case OpKind::MatMul: {
        if (!sa) break;
        const Node& left = graph_.nodes[static_cast<std::size_t>(node.lhs)];
        const std::size_t rows = left.shape.rows;
        const std::size_t inner = left.shape.cols;
        const std::size_t cols = node.shape.rank == 2 ? node.shape.cols : 1;
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t q = 0; q < inner; ++q) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols; ++j) s += gz[i * cols + j] * b.v[q * cols + j];
            sa.adj(i * inner + q) += s;
            if (k > 0) {
              double* t = sa.adjt(i * inner + q, k);
              for (std::size_t j = 0; j < cols; ++j) {
                const double bq = b.v[q * cols + j];
                const double* g = gzt + (i * cols + j) * k;
                for (std::size_t l = 0; l < k; ++l) t[l] += g[l] * bq;
              }
            }
          }
        }
        break;
      }
    }
  }

  const Program& program_;
  const Graph& graph_;
  std::size_t lanes_;
  std::vector<std::vector<double>>& val_;
  std::vector<std::vector<double>>& tan_;
  std::vector<std::vector<double>>& adj_;
  std::vector<std::vector<double>>& adjt_;

 public:
  static std::vector<std::vector<double>> compute_passive(const Program& program) {
    Evaluator ev(program, 0);
    std::vector<std::vector<double>> passive(program.graph_->nodes.size());
    ev.forward({}, nullptr, false, &passive);
    return passive;
  }
};

// ---------------------------------------------------------------------------
// Program

std::size_t Program::input_size() const {
  if (!graph_) return 0;
  return graph_->nodes[static_cast<std::size_t>(graph_->input)].shape.size();
}

std::size_t Program::slot_of(const std::string& name) const {
  const auto& names = graph_->parameter_names;
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("autodiff: unknown parameter '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

Program Program::rebind(const std::string& name, std::vector<double> values) const {
  const std::size_t slot = slot_of(name);
  if (values.size() != graph_->parameter_shapes[slot].size()) {
    throw std::invalid_argument("autodiff: parameter '" + name + "' expects " +
                                std::to_string(graph_->parameter_shapes[slot].size()) + " values, got " +
                                std::to_string(values.size()));
  }
  Program copy = *this;
  copy.bindings_[slot] = std::make_shared<const std::vector<double>>(std::move(values));
  copy.refresh_passive();
  return copy;
}

std::span<const double> Program::parameter(const std::string& name) const {
  return *bindings_[slot_of(name)];
}

void Program::refresh_passive() {
  passive_ = std::make_shared<const std::vector<std::vector<double>>>(Evaluator::compute_passive(*this));
}

// ---------------------------------------------------------------------------
// Recording

const Shape& Expr::shape() const { return builder_->node(id_).shape; }

ProgramBuilder::ProgramBuilder() : graph_(std::make_shared<Graph>()) {}

void ProgramBuilder::check_owned(const Expr& e) const {
  if (e.builder_ != this || e.id_ < 0) shape_error("expression does not belong to this builder");
}

Expr ProgramBuilder::push(Node node) {
  if (node.kind == OpKind::Input) {
    node.active = true;
  } else {
    node.active = (node.lhs >= 0 && graph_->nodes[static_cast<std::size_t>(node.lhs)].active) ||
                  (node.rhs >= 0 && graph_->nodes[static_cast<std::size_t>(node.rhs)].active);
  }
  graph_->nodes.push_back(node);
  return Expr(this, static_cast<int>(graph_->nodes.size() - 1));
}

Expr ProgramBuilder::input(std::size_t n) {
  if (graph_->input >= 0) shape_error("a program has exactly one input");
  Node node;
  node.kind = OpKind::Input;
  node.shape = Shape::vector(n);
  Expr e = push(node);
  graph_->input = e.id();
  return e;
}

Expr ProgramBuilder::parameter(const std::string& name, Shape shape, std::vector<double> values) {
  if (values.size() != shape.size()) {
    shape_error("parameter '" + name + "' of shape " + to_string(shape) + " given " + std::to_string(values.size()) +
                " values");
  }
  auto& names = graph_->parameter_names;
  if (!name.empty() && std::find(names.begin(), names.end(), name) != names.end()) {
    shape_error("duplicate parameter '" + name + "'");
  }
  Node node;
  node.kind = OpKind::Parameter;
  node.shape = shape;
  node.table = names.size();
  names.push_back(name);
  graph_->parameter_shapes.push_back(shape);
  bindings_.push_back(std::make_shared<const std::vector<double>>(std::move(values)));
  return push(node);
}

Expr ProgramBuilder::constant(double value) { return parameter("", Shape::scalar(), {value}); }

Expr ProgramBuilder::scatter(Expr base, std::vector<std::size_t> indices, Expr values) {
  check_owned(base);
  check_owned(values);
  if (base.shape().rank != 1 || values.shape().rank != 1) shape_error("scatter expects vectors");
  if (indices.size() != values.shape().size()) shape_error("scatter: index count differs from value count");
  for (const std::size_t i : indices) {
    if (i >= base.shape().size()) shape_error("scatter: index out of range");
  }
  Node node;
  node.kind = OpKind::Scatter;
  node.lhs = base.id();
  node.rhs = values.id();
  node.shape = base.shape();
  node.table = graph_->index_tables.size();
  graph_->index_tables.push_back(std::move(indices));
  return push(node);
}

Expr ProgramBuilder::gather(Expr vec, std::vector<std::size_t> table, std::size_t rows, std::size_t cols) {
  check_owned(vec);
  if (vec.shape().rank != 1) shape_error("gather expects a vector operand");
  if (table.size() != rows * cols) shape_error("gather: table size differs from rows*cols");
  for (const std::size_t i : table) {
    if (i >= vec.shape().size()) shape_error("gather: index out of range");
  }
  Node node;
  node.kind = OpKind::Gather;
  node.lhs = vec.id();
  node.shape = Shape::matrix(rows, cols);
  node.table = graph_->index_tables.size();
  graph_->index_tables.push_back(std::move(table));
  return push(node);
}

Expr ProgramBuilder::stride(Expr vec, std::size_t start, std::size_t step) {
  check_owned(vec);
  if (vec.shape().rank != 1 || step == 0 || start >= vec.shape().size()) shape_error("invalid strided slice");
  Node node;
  node.kind = OpKind::Stride;
  node.lhs = vec.id();
  node.start = start;
  node.step = step;
  node.shape = Shape::vector((vec.shape().size() - start + step - 1) / step);
  return push(node);
}

Expr ProgramBuilder::binary(OpKind kind, Expr a, Expr b) {
  check_owned(a);
  check_owned(b);
  if (!is_elementwise_binary(kind)) shape_error("binary: not an elementwise operation");
  Shape shape;
  if (a.shape() == b.shape() || b.shape().rank == 0) {
    shape = a.shape();
  } else if (a.shape().rank == 0) {
    shape = b.shape();
  } else {
    shape_error("elementwise operands " + to_string(a.shape()) + " and " + to_string(b.shape()) + " differ");
  }
  Node node;
  node.kind = kind;
  node.lhs = a.id();
  node.rhs = b.id();
  node.shape = shape;
  return push(node);
}

Expr ProgramBuilder::unary(OpKind kind, Expr a, double exponent) {
  check_owned(a);
  if (kind != OpKind::Neg && kind != OpKind::Pow && kind != OpKind::Log && kind != OpKind::Abs) {
    shape_error("unary: not an elementwise function");
  }
  Node node;
  node.kind = kind;
  node.lhs = a.id();
  node.shape = a.shape();
  node.exponent = exponent;
  return push(node);
}

Expr ProgramBuilder::row_sum(Expr a) {
  check_owned(a);
  if (a.shape().rank != 2) shape_error("row_sum expects a matrix");
  Node node;
  node.kind = OpKind::RowSum;
  node.lhs = a.id();
  node.shape = Shape::vector(a.shape().rows);
  return push(node);
}

Expr ProgramBuilder::sum(Expr a) {
  check_owned(a);
  Node node;
  node.kind = OpKind::Sum;
  node.lhs = a.id();
  node.shape = Shape::scalar();
  return push(node);
}

Expr ProgramBuilder::dot(Expr a, Expr b) {
  check_owned(a);
  check_owned(b);
  if (a.shape().rank != 1 || !(a.shape() == b.shape())) shape_error("dot expects two vectors of equal length");
  Node node;
  node.kind = OpKind::Dot;
  node.lhs = a.id();
  node.rhs = b.id();
  node.shape = Shape::scalar();
  return push(node);
}

Expr ProgramBuilder::matmul(Expr a, Expr b) {
  check_owned(a);
  check_owned(b);
  if (a.shape().rank != 2) shape_error("matmul expects a matrix on the left");
  if (node(b.id()).active) shape_error("matmul: right operand must not depend on the input");
  Shape shape;
  if (b.shape().rank == 2 && b.shape().rows == a.shape().cols) {
    shape = Shape::matrix(a.shape().rows, b.shape().cols);
  } else if (b.shape().rank == 1 && b.shape().size() == a.shape().cols) {
    shape = Shape::vector(a.shape().rows);
  } else {
    shape_error("matmul operands " + to_string(a.shape()) + " and " + to_string(b.shape()) + " do not conform");
  }
  Node node;
  node.kind = OpKind::MatMul;
  node.lhs = a.id();
  node.rhs = b.id();
  node.shape = shape;
  return push(node);
}

Program ProgramBuilder::finish(Expr out) {
  check_owned(out);
  if (out.shape().rank != 0) shape_error("program output must be a scalar, got " + to_string(out.shape()));
  if (graph_->input < 0) shape_error("program has no input");
  graph_->output = out.id();
  Program program;
  program.graph_ = graph_;
  program.bindings_ = bindings_;
  program.refresh_passive();
  graph_ = std::make_shared<Graph>();
  bindings_.clear();
  return program;
}

Expr operator+(Expr a, Expr b) { return a.builder()->binary(OpKind::Add, a, b); }
Expr operator-(Expr a, Expr b) { return a.builder()->binary(OpKind::Sub, a, b); }
Expr operator*(Expr a, Expr b) { return a.builder()->binary(OpKind::Mul, a, b); }
Expr operator/(Expr a, Expr b) { return a.builder()->binary(OpKind::Div, a, b); }
Expr operator-(Expr a) { return a.builder()->unary(OpKind::Neg, a); }
Expr operator+(Expr a, double b) { return a + a.builder()->constant(b); }
Expr operator+(double a, Expr b) { return b.builder()->constant(a) + b; }
Expr operator-(Expr a, double b) { return a - a.builder()->constant(b); }
Expr operator-(double a, Expr b) { return b.builder()->constant(a) - b; }
Expr operator*(Expr a, double b) { return a * a.builder()->constant(b); }
Expr operator*(double a, Expr b) { return b.builder()->constant(a) * b; }
Expr operator/(Expr a, double b) { return a / a.builder()->constant(b); }
Expr pow(Expr a, double exponent) { return a.builder()->unary(OpKind::Pow, a, exponent); }
Expr log(Expr a) { return a.builder()->unary(OpKind::Log, a); }
Expr abs(Expr a) { return a.builder()->unary(OpKind::Abs, a); }
Expr row_sum(Expr a) { return a.builder()->row_sum(a); }
Expr sum(Expr a) { return a.builder()->sum(a); }
Expr dot(Expr a, Expr b) { return a.builder()->dot(a, b); }
Expr matmul(Expr a, Expr b) { return a.builder()->matmul(a, b); }

// ---------------------------------------------------------------------------
// Transformations

namespace {

void check_input(const Program& program, std::span<const double> u) {
  if (program.num_nodes() == 0) throw std::invalid_argument("autodiff: empty program");
  if (u.size() != program.input_size()) {
    throw std::invalid_argument("autodiff: input has length " + std::to_string(u.size()) + ", program expects " +
                                std::to_string(program.input_size()));
  }
}

}  // namespace

double evaluate(const Program& program, std::span<const double> u) {
  check_input(program, u);
  Evaluator ev(program, 0);
  ev.forward(u, nullptr, true, nullptr);
  return ev.output_value();
}

std::vector<double> gradient(const Program& program, std::span<const double> u, double* value) {
  check_input(program, u);
  Evaluator ev(program, 0);
  ev.forward(u, nullptr, true, nullptr);
  if (value != nullptr) *value = ev.output_value();
  ev.reverse();
  return ev.input_adjoint();
}

DirectionBlock hessian_vector_products(const Program& program, std::span<const double> u,
                                       const DirectionBlock& directions) {
  check_input(program, u);
  if (directions.n != u.size()) throw std::invalid_argument("autodiff: direction length differs from input length");
  if (directions.k == 0) return DirectionBlock(u.size(), 0);
  Evaluator ev(program, directions.k);
  ev.forward(u, &directions, true, nullptr);
  ev.reverse();
  return ev.input_adjoint_tangent();
}

std::vector<double> hessian_vector_product(const Program& program, std::span<const double> u,
                                           std::span<const double> s) {
  DirectionBlock dirs(s.size(), 1);
  std::copy(s.begin(), s.end(), dirs.data.begin());
  return hessian_vector_products(program, u, dirs).data;
}

}  // namespace nlmin::ad
