#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccgeom/expr.hpp"

#include <nlohmann/json_fwd.hpp>

namespace ccgeom {

// ν-component formal degree; at least one component strictly positive.
struct FormalDegree {
  Eigen::VectorXd components;
};

struct Box {
  Eigen::VectorXd min;
  Eigen::VectorXd max;
  bool contains(const Eigen::VectorXd& x) const {
    for (int i = 0; i < x.size(); ++i)
      if (x[i] < min[i] || x[i] > max[i]) return false;
    return true;
  }
};

// Multi-parameter radius; library entry points expect 0 <= delta <= 1
// componentwise.
struct MultiRadius {
  Eigen::VectorXd delta;
  static MultiRadius scalar(double d) {
    MultiRadius r;
    r.delta = Eigen::VectorXd::Constant(1, d);
    return r;
  }
  MultiRadius operator*(double c) const {
    MultiRadius r;
    r.delta = delta * c;
    return r;
  }
};

struct GradedVectorField {
  std::vector<ExprPtr> coefficients;  // n components
  FormalDegree degree;
};

// q vector fields on an n-dimensional box, each with a ν-component formal
// degree. Immutable after construction; all evaluators are const.
class GradedSystem {
 public:
  GradedSystem(int n, int nu, std::vector<std::string> coords,
               std::vector<GradedVectorField> fields, Box domain,
               std::vector<std::vector<std::vector<ExprPtr>>> structure = {});

  int n() const { return n_; }
  int nu() const { return nu_; }
  int q() const { return static_cast<int>(fields_.size()); }
  const std::vector<std::string>& coords() const { return coords_; }
  const Box& domain() const { return domain_; }
  const GradedVectorField& field(int j) const { return fields_[j]; }
  bool has_structure() const { return !structure_.empty(); }
  const std::vector<std::vector<std::vector<ExprPtr>>>& structure() const {
    return structure_;
  }
  // content hash used for cache keys; two systems with identical definitions
  // share cached charts
  uint64_t digest() const { return digest_; }

  // column j of the field matrix at x
  Eigen::VectorXd field_at(int j, const Eigen::VectorXd& x) const;
  // n x q matrix [X_1(x) | ... | X_q(x)]
  Eigen::MatrixXd fields_at(const Eigen::VectorXd& x) const;
  // d(X_j)/dx at x, n x n
  Eigen::MatrixXd field_jacobian_at(int j, const Eigen::VectorXd& x) const;
  // [X_i, X_j](x) evaluated through the symbolic coefficient partials
  Eigen::VectorXd bracket_at(int i, int j, const Eigen::VectorXd& x) const;
  // declared c_{i,j}^k(x), requires has_structure()
  Eigen::VectorXd structure_at(int i, int j, const Eigen::VectorXd& x) const;

 private:
  int n_, nu_;
  uint64_t digest_ = 0;
  std::vector<std::string> coords_;
  std::vector<GradedVectorField> fields_;
  Box domain_;
  std::vector<std::vector<std::vector<ExprPtr>>> structure_;  // q x q x q or empty

  // compiled evaluators, built once
  std::vector<std::vector<CompiledExpr>> coeff_;            // [j][row]
  std::vector<std::vector<std::vector<CompiledExpr>>> dcoeff_;  // [j][row][k] = d coeff/dx_k
  std::vector<std::vector<std::vector<CompiledExpr>>> structure_c_;
};

// delta^d with the convention 0^0 = 1, so zero radii deactivate exactly the
// fields whose degree touches that parameter.
double scale_power(const FormalDegree& degree, const MultiRadius& delta);

// Evaluator for the scaled list delta^d X.
class ScaledSystem {
 public:
  ScaledSystem(const GradedSystem& sys, const MultiRadius& delta);

  const GradedSystem& system() const { return *sys_; }
  const MultiRadius& radius() const { return delta_; }
  double scale(int j) const { return scales_[j]; }
  const Eigen::VectorXd& scales() const { return scales_; }

  // n x q matrix [delta^{d_1}X_1(x) | ... | delta^{d_q}X_q(x)];
  // throws std::domain_error if x is outside the domain box.
  Eigen::MatrixXd matrix_at(const Eigen::VectorXd& x) const;
  Eigen::VectorXd column_at(int j, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd column_jacobian_at(int j, const Eigen::VectorXd& x) const;

 private:
  const GradedSystem* sys_;
  MultiRadius delta_;
  Eigen::VectorXd scales_;
};

ScaledSystem scale_system(const GradedSystem& sys, const MultiRadius& delta);

// Symbolic commutator [X_i, X_j], component l = sum_k (X_i^k d_k X_j^l -
// X_j^k d_k X_i^l).
std::vector<ExprPtr> commutator(const GradedVectorField& xi, const GradedVectorField& xj,
                                const std::vector<std::string>& coords);

// c with X(x) c = [X_i,X_j](x): declared coefficients when present, otherwise
// the minimum-norm least-squares solution. Throws std::runtime_error
// ("not integrable at x") when the bracket leaves the column span beyond tol.
Eigen::VectorXd structure_coefficients_at(const GradedSystem& sys, int i, int j,
                                          const Eigen::VectorXd& x, double tol = 1e-8);

// All n0 x n0 minors of an n x q matrix, ascending row/column index lists.
struct MinorVector {
  int n0 = 0;
  std::vector<std::vector<int>> rows;  // index lists I
  std::vector<std::vector<int>> cols;  // index lists J
  Eigen::MatrixXd entries;             // entries(a,b) = det M_{rows[a], cols[b]}

  double linf() const { return entries.size() ? entries.cwiseAbs().maxCoeff() : 0.0; }
  double l2() const { return entries.norm(); }
};

// Explicit combinatorial enumeration; refuses n, q > 12.
MinorVector minor_vector(const Eigen::MatrixXd& M, int n0);

// sqrt(det M^T M): the n0-volume of the column parallelepiped (0 when
// rank-deficient).
double gram_volume(const Eigen::MatrixXd& M);

// l2 norm of the n0-minor vector, computed through the Gram matrix. Cheaper
// than enumerating minors; equal to minor_vector(M,n0).l2() for q == n0.
double minor_l2(const Eigen::MatrixXd& M, int n0);

std::vector<std::vector<int>> combinations(int m, int k);

double numerical_rank_tol(const Eigen::VectorXd& singular_values, double rel = 1e-9);

// System-definition JSON (schema shared with the CLI):
// { "n": int, "nu": int, "coords": [names],
//   "fields": [{ "coeffs": [expr strings], "degree": [reals] }],
//   "domain": {"min": [...], "max": [...]}, "structure": [[[expr]]] (optional) }
GradedSystem system_from_json(const nlohmann::json& j);
nlohmann::json system_to_json(const GradedSystem& sys);
GradedSystem load_system_file(const std::string& path);

}  // namespace ccgeom
