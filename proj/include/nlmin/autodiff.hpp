#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

/**
 * @file autodiff.hpp
 *
 * @brief Recorded array programs with exact first and second derivatives.
 *
 * An energy is recorded once through ProgramBuilder as a straight-line
 * sequence of whole-array primitives. The resulting Program is immutable and
 * can be replayed on new inputs to obtain
 *   - the value J(u),
 *   - the gradient by a reverse sweep,
 *   - Hessian-vector products by pushing tangents forward through the value
 *     and the reverse sweep (forward-over-reverse). Several tangent
 *     directions travel together as lanes of one sweep.
 *
 * Data the program depends on but does not differentiate (Dirichlet values,
 * basis-gradient tables, quadrature weights) enters through named parameters
 * that can be rebound without re-recording.
 */
namespace nlmin::ad {

struct Shape {
  int rank = 0;  // 0 scalar, 1 vector, 2 matrix
  std::size_t rows = 1;
  std::size_t cols = 1;

  [[nodiscard]] std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;

  static Shape scalar() { return {}; }
  static Shape vector(std::size_t n) { return {1, n, 1}; }
  static Shape matrix(std::size_t r, std::size_t c) { return {2, r, c}; }
};

std::string to_string(const Shape& shape);

enum class OpKind {
  Input,
  Parameter,
  Scatter,  // copy of base with base[indices] = values
  Gather,   // matrix m[i][j] = v[table[i][j]]
  Stride,   // v[start], v[start + step], ...
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,
  Log,
  Abs,
  RowSum,
  Sum,
  Dot,
  MatMul,  // active left operand times a parameter-only right operand
};

struct Node {
  OpKind kind = OpKind::Input;
  int lhs = -1;
  int rhs = -1;
  Shape shape;
  double exponent = 0.0;
  std::size_t table = 0;  // Gather/Scatter index table, Parameter slot
  std::size_t start = 0;
  std::size_t step = 1;
  bool active = false;  // depends on the input
};

/// Recorded operation list shared by all Programs built from it.
struct Graph {
  std::vector<Node> nodes;
  std::vector<std::vector<std::size_t>> index_tables;
  std::vector<std::string> parameter_names;
  std::vector<Shape> parameter_shapes;
  int input = -1;
  int output = -1;
};

/// Column-lane block of k vectors of length n: entry i of lane l is data[i*k + l].
struct DirectionBlock {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> data;

  DirectionBlock() = default;
  DirectionBlock(std::size_t n_, std::size_t k_) : n(n_), k(k_), data(n_ * k_, 0.0) {}

  double& at(std::size_t i, std::size_t lane) { return data[i * k + lane]; }
  [[nodiscard]] double at(std::size_t i, std::size_t lane) const { return data[i * k + lane]; }
};

class Program {
 public:
  Program() = default;

  [[nodiscard]] std::size_t input_size() const;
  [[nodiscard]] std::size_t num_nodes() const { return graph_ ? graph_->nodes.size() : 0; }
  [[nodiscard]] const Graph& graph() const { return *graph_; }

  /// Copy sharing the recorded operations with one parameter replaced.
  [[nodiscard]] Program rebind(const std::string& name, std::vector<double> values) const;
  [[nodiscard]] std::span<const double> parameter(const std::string& name) const;

 private:
  friend class ProgramBuilder;
  friend class Evaluator;

  void refresh_passive();
  [[nodiscard]] std::size_t slot_of(const std::string& name) const;

  std::shared_ptr<const Graph> graph_;
  std::vector<std::shared_ptr<const std::vector<double>>> bindings_;
  // values of the nodes that do not depend on the input, indexed by node
  std::shared_ptr<const std::vector<std::vector<double>>> passive_;
};

class ProgramBuilder;

/// Handle to a node under construction.
class Expr {
 public:
  Expr() = default;
  [[nodiscard]] const Shape& shape() const;
  [[nodiscard]] int id() const { return id_; }
  [[nodiscard]] ProgramBuilder* builder() const { return builder_; }

 private:
  friend class ProgramBuilder;
  Expr(ProgramBuilder* builder, int id) : builder_(builder), id_(id) {}
  ProgramBuilder* builder_ = nullptr;
  int id_ = -1;
};

class ProgramBuilder {
 public:
  ProgramBuilder();

  /// The single differentiated input vector.
  Expr input(std::size_t n);
  Expr parameter(const std::string& name, Shape shape, std::vector<double> values);
  Expr constant(double value);

  Expr scatter(Expr base, std::vector<std::size_t> indices, Expr values);
  Expr gather(Expr vec, std::vector<std::size_t> table, std::size_t rows, std::size_t cols);
  Expr stride(Expr vec, std::size_t start, std::size_t step);
  Expr binary(OpKind kind, Expr a, Expr b);
  Expr unary(OpKind kind, Expr a, double exponent = 0.0);
  Expr row_sum(Expr a);
  Expr sum(Expr a);
  Expr dot(Expr a, Expr b);
  Expr matmul(Expr a, Expr b);

  /// Seals the recording; out must be a scalar.
  Program finish(Expr out);

  [[nodiscard]] const Node& node(int id) const { return graph_->nodes[static_cast<std::size_t>(id)]; }

 private:
  Expr push(Node node);
  void check_owned(const Expr& e) const;

  std::shared_ptr<Graph> graph_;
  std::vector<std::shared_ptr<const std::vector<double>>> bindings_;
};

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator-(Expr a);
Expr operator+(Expr a, double b);
Expr operator+(double a, Expr b);
Expr operator-(Expr a, double b);
Expr operator-(double a, Expr b);
Expr operator*(Expr a, double b);
Expr operator*(double a, Expr b);
Expr operator/(Expr a, double b);
Expr pow(Expr a, double exponent);
Expr log(Expr a);
Expr abs(Expr a);
Expr row_sum(Expr a);
Expr sum(Expr a);
Expr dot(Expr a, Expr b);
Expr matmul(Expr a, Expr b);

/// J(u). Non-finite values are returned as is.
double evaluate(const Program& program, std::span<const double> u);

/// Gradient of J at u; value receives J(u) when non-null.
std::vector<double> gradient(const Program& program, std::span<const double> u, double* value = nullptr);

/// Hessian of J at u applied to s.
std::vector<double> hessian_vector_product(const Program& program, std::span<const double> u,
                                           std::span<const double> s);

/// Hessian of J at u applied to every lane of directions.
DirectionBlock hessian_vector_products(const Program& program, std::span<const double> u,
                                       const DirectionBlock& directions);

}  // namespace nlmin::ad
