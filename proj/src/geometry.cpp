#include "ccgeom/geometry.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ccgeom/rng.hpp"

namespace ccgeom {

GradedSystem::GradedSystem(int n, int nu, std::vector<std::string> coords,
                           std::vector<GradedVectorField> fields, Box domain,
                           std::vector<std::vector<std::vector<ExprPtr>>> structure)
    : n_(n),
      nu_(nu),
      coords_(std::move(coords)),
      fields_(std::move(fields)),
      domain_(std::move(domain)),
      structure_(std::move(structure)) {
  if (static_cast<int>(coords_.size()) != n_)
    throw std::invalid_argument("coords size must equal n");
  for (const auto& f : fields_) {
    if (static_cast<int>(f.coefficients.size()) != n_)
      throw std::invalid_argument("field coefficient count must equal n");
    if (f.degree.components.size() != nu_)
      throw std::invalid_argument("degree size must equal nu");
    bool positive = false;
    for (int m = 0; m < nu_; ++m) {
      if (f.degree.components[m] < 0)
        throw std::invalid_argument("formal degree components must be nonnegative");
      if (f.degree.components[m] > 0) positive = true;
    }
    if (!positive) throw std::invalid_argument("formal degree must be nonzero");
  }

  coeff_.resize(fields_.size());
  dcoeff_.resize(fields_.size());
  for (size_t j = 0; j < fields_.size(); ++j) {
    coeff_[j].reserve(n_);
    dcoeff_[j].resize(n_);
    for (int r = 0; r < n_; ++r) {
      coeff_[j].emplace_back(fields_[j].coefficients[r], coords_);
      dcoeff_[j][r].reserve(n_);
      for (int k = 0; k < n_; ++k)
        dcoeff_[j][r].emplace_back(
            differentiate(fields_[j].coefficients[r], coords_[k]), coords_);
    }
  }

  {
    // FNV-1a over the printable definition
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const std::string& s) {
      for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
    };
    mix(std::to_string(n_) + "|" + std::to_string(nu_));
    for (const auto& c : coords_) mix(c);
    for (const auto& f : fields_) {
      for (const auto& e : f.coefficients) mix(to_string(e));
      for (int m = 0; m < nu_; ++m) mix(std::to_string(f.degree.components[m]));
    }
    for (int i = 0; i < n_; ++i) {
      mix(std::to_string(domain_.min[i]));
      mix(std::to_string(domain_.max[i]));
    }
    for (const auto& si : structure_)
      for (const auto& sj : si)
        for (const auto& sk : sj) mix(to_string(sk));
    digest_ = h;
  }

  if (!structure_.empty()) {
    int q = this->q();
    if (static_cast<int>(structure_.size()) != q)
      throw std::invalid_argument("structure must be q x q x q");
    structure_c_.resize(q);
    for (int i = 0; i < q; ++i) {
      if (static_cast<int>(structure_[i].size()) != q)
        throw std::invalid_argument("structure must be q x q x q");
      structure_c_[i].resize(q);
      for (int j = 0; j < q; ++j) {
        if (static_cast<int>(structure_[i][j].size()) != q)
          throw std::invalid_argument("structure must be q x q x q");
        for (int k = 0; k < q; ++k)
          structure_c_[i][j].emplace_back(structure_[i][j][k], coords_);
      }
    }

    // declared coefficients must reproduce the brackets on the domain
    Rng rng(0x5eed5eedull);
    for (int s = 0; s < 100; ++s) {
      Eigen::VectorXd x(n_);
      for (int r = 0; r < n_; ++r)
        x[r] = rng.uniform(domain_.min[r], domain_.max[r]);
      Eigen::MatrixXd X = fields_at(x);
      for (int i = 0; i < q; ++i)
        for (int j = i + 1; j < q; ++j) {
          Eigen::VectorXd lhs = bracket_at(i, j, x);
          Eigen::VectorXd rhs = X * structure_at(i, j, x);
          if (!lhs.allFinite() || !rhs.allFinite()) continue;
          if ((lhs - rhs).norm() > 1e-8 * (1.0 + lhs.norm()))
            throw std::runtime_error(
                "declared structure coefficients fail the bracket residual check");
        }
    }
  }
}

Eigen::VectorXd GradedSystem::field_at(int j, const Eigen::VectorXd& x) const {
  Eigen::VectorXd v(n_);
  std::span<const double> xs(x.data(), static_cast<size_t>(x.size()));
  for (int r = 0; r < n_; ++r) v[r] = coeff_[j][r].eval(xs);
  return v;
}

Eigen::MatrixXd GradedSystem::fields_at(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd M(n_, q());
  std::span<const double> xs(x.data(), static_cast<size_t>(x.size()));
  for (int j = 0; j < q(); ++j)
    for (int r = 0; r < n_; ++r) M(r, j) = coeff_[j][r].eval(xs);
  return M;
}

Eigen::MatrixXd GradedSystem::field_jacobian_at(int j, const Eigen::VectorXd& x) const {
  Eigen::MatrixXd J(n_, n_);
  std::span<const double> xs(x.data(), static_cast<size_t>(x.size()));
  for (int r = 0; r < n_; ++r)
    for (int k = 0; k < n_; ++k) J(r, k) = dcoeff_[j][r][k].eval(xs);
  return J;
}

Eigen::VectorXd GradedSystem::bracket_at(int i, int j, const Eigen::VectorXd& x) const {
  // [X_i,X_j]^l = sum_k X_i^k d_k X_j^l - X_j^k d_k X_i^l
  Eigen::VectorXd xi = field_at(i, x);
  Eigen::VectorXd xj = field_at(j, x);
  Eigen::MatrixXd dXi = field_jacobian_at(i, x);
  Eigen::MatrixXd dXj = field_jacobian_at(j, x);
  return dXj * xi - dXi * xj;
}

Eigen::VectorXd GradedSystem::structure_at(int i, int j, const Eigen::VectorXd& x) const {
  if (structure_c_.empty()) throw std::logic_error("system has no declared structure");
  Eigen::VectorXd c(q());
  std::span<const double> xs(x.data(), static_cast<size_t>(x.size()));
  for (int k = 0; k < q(); ++k) c[k] = structure_c_[i][j][k].eval(xs);
  return c;
}

double scale_power(const FormalDegree& degree, const MultiRadius& delta) {
  double p = 1.0;
  for (int m = 0; m < degree.components.size(); ++m) {
    double d = degree.components[m];
    if (d == 0.0) continue;  // 0^0 = 1
    p *= std::pow(delta.delta[m], d);
  }
  return p;
}

ScaledSystem::ScaledSystem(const GradedSystem& sys, const MultiRadius& delta)
    : sys_(&sys), delta_(delta) {
  if (delta.delta.size() != sys.nu())
    throw std::invalid_argument("radius parameter count must equal nu");
  scales_.resize(sys.q());
  for (int j = 0; j < sys.q(); ++j)
    scales_[j] = scale_power(sys.field(j).degree, delta);
}

Eigen::MatrixXd ScaledSystem::matrix_at(const Eigen::VectorXd& x) const {
  if (!sys_->domain().contains(x))
    throw std::domain_error("point outside domain box");
  Eigen::MatrixXd M = sys_->fields_at(x);
  for (int j = 0; j < sys_->q(); ++j) M.col(j) *= scales_[j];
  return M;
}

Eigen::VectorXd ScaledSystem::column_at(int j, const Eigen::VectorXd& x) const {
  return scales_[j] * sys_->field_at(j, x);
}

Eigen::MatrixXd ScaledSystem::column_jacobian_at(int j, const Eigen::VectorXd& x) const {
  return scales_[j] * sys_->field_jacobian_at(j, x);
}

ScaledSystem scale_system(const GradedSystem& sys, const MultiRadius& delta) {
  return ScaledSystem(sys, delta);
}

std::vector<ExprPtr> commutator(const GradedVectorField& xi, const GradedVectorField& xj,
                                const std::vector<std::string>& coords) {
  int n = static_cast<int>(coords.size());
  std::vector<ExprPtr> out(n);
  for (int l = 0; l < n; ++l) {
    ExprPtr acc = Expr::constant(0);
    for (int k = 0; k < n; ++k) {
      acc = Expr::add(acc, Expr::mul(xi.coefficients[k],
                                     differentiate(xj.coefficients[l], coords[k])));
      acc = Expr::sub(acc, Expr::mul(xj.coefficients[k],
                                     differentiate(xi.coefficients[l], coords[k])));
    }
    out[l] = acc;
  }
  return out;
}

Eigen::VectorXd structure_coefficients_at(const GradedSystem& sys, int i, int j,
                                          const Eigen::VectorXd& x, double tol) {
  if (sys.has_structure()) return sys.structure_at(i, j, x);
  Eigen::VectorXd b = sys.bracket_at(i, j, x);
  Eigen::MatrixXd X = sys.fields_at(x);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  Eigen::VectorXd c = cod.solve(b);
  double resid = (X * c - b).norm();
  if (resid > tol * (1.0 + b.norm()))
    throw std::runtime_error("not integrable at x: bracket residual " +
                             std::to_string(resid));
  return c;
}

std::vector<std::vector<int>> combinations(int m, int k) {
  std::vector<std::vector<int>> out;
  if (k <= 0 || k > m) return out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == m - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int t = i + 1; t < k; ++t) idx[t] = idx[t - 1] + 1;
  }
  return out;
}

namespace {
double sub_det(const Eigen::MatrixXd& M, const std::vector<int>& I,
               const std::vector<int>& J) {
  int k = static_cast<int>(I.size());
  Eigen::MatrixXd S(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) S(a, b) = M(I[a], J[b]);
  return S.determinant();
}
}  // namespace

MinorVector minor_vector(const Eigen::MatrixXd& M, int n0) {
  int n = static_cast<int>(M.rows());
  int q = static_cast<int>(M.cols());
  if (n > 12 || q > 12)
    throw std::invalid_argument("minor enumeration limited to n, q <= 12");
  if (n0 < 1 || n0 > std::min(n, q))
    throw std::invalid_argument("need 1 <= n0 <= min(n, q)");
  MinorVector mv;
  mv.n0 = n0;
  mv.rows = combinations(n, n0);
  mv.cols = combinations(q, n0);
  mv.entries.resize(mv.rows.size(), mv.cols.size());
  for (size_t a = 0; a < mv.rows.size(); ++a)
    for (size_t b = 0; b < mv.cols.size(); ++b)
      mv.entries(a, b) = sub_det(M, mv.rows[a], mv.cols[b]);
  return mv;
}

double gram_volume(const Eigen::MatrixXd& M) {
  Eigen::MatrixXd g = M.transpose() * M;
  double d = g.determinant();
  return d > 0 ? std::sqrt(d) : 0.0;
}

double minor_l2(const Eigen::MatrixXd& M, int n0) {
  // Cauchy-Binet per column subset: sum_J det(M_J^T M_J).
  int q = static_cast<int>(M.cols());
  if (n0 == q) return gram_volume(M);
  double s = 0;
  for (const auto& J : combinations(q, n0)) {
    Eigen::MatrixXd S(M.rows(), n0);
    for (int b = 0; b < n0; ++b) S.col(b) = M.col(J[b]);
    Eigen::MatrixXd g = S.transpose() * S;
    double d = g.determinant();
    if (d > 0) s += d;
  }
  return std::sqrt(s);
}

double numerical_rank_tol(const Eigen::VectorXd& singular_values, double rel) {
  return singular_values.size() ? rel * singular_values[0] : 0.0;
}

// ---------------------------------------------------------------------------
// JSON schema

GradedSystem system_from_json(const nlohmann::json& j) {
  int n = j.at("n").get<int>();
  int nu = j.at("nu").get<int>();
  std::vector<std::string> coords = j.at("coords").get<std::vector<std::string>>();
  std::vector<GradedVectorField> fields;
  for (const auto& fj : j.at("fields")) {
    GradedVectorField f;
    for (const auto& s : fj.at("coeffs")) f.coefficients.push_back(parse(s.get<std::string>()));
    auto deg = fj.at("degree").get<std::vector<double>>();
    f.degree.components = Eigen::Map<Eigen::VectorXd>(deg.data(), deg.size());
    fields.push_back(std::move(f));
  }
  Box box;
  auto mn = j.at("domain").at("min").get<std::vector<double>>();
  auto mx = j.at("domain").at("max").get<std::vector<double>>();
  box.min = Eigen::Map<Eigen::VectorXd>(mn.data(), mn.size());
  box.max = Eigen::Map<Eigen::VectorXd>(mx.data(), mx.size());
  std::vector<std::vector<std::vector<ExprPtr>>> structure;
  if (j.contains("structure")) {
    for (const auto& si : j.at("structure")) {
      std::vector<std::vector<ExprPtr>> row;
      for (const auto& sj : si) {
        std::vector<ExprPtr> col;
        for (const auto& sk : sj) col.push_back(parse(sk.get<std::string>()));
        row.push_back(std::move(col));
      }
      structure.push_back(std::move(row));
    }
  }
  return GradedSystem(n, nu, std::move(coords), std::move(fields), std::move(box),
                      std::move(structure));
}

nlohmann::json system_to_json(const GradedSystem& sys) {
  nlohmann::json j;
  j["n"] = sys.n();
  j["nu"] = sys.nu();
  j["coords"] = sys.coords();
  nlohmann::json fields = nlohmann::json::array();
  for (int k = 0; k < sys.q(); ++k) {
    nlohmann::json fj;
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& c : sys.field(k).coefficients) coeffs.push_back(to_string(c));
    fj["coeffs"] = coeffs;
    std::vector<double> deg(sys.field(k).degree.components.data(),
                            sys.field(k).degree.components.data() + sys.nu());
    fj["degree"] = deg;
    fields.push_back(fj);
  }
  j["fields"] = fields;
  j["domain"]["min"] =
      std::vector<double>(sys.domain().min.data(), sys.domain().min.data() + sys.n());
  j["domain"]["max"] =
      std::vector<double>(sys.domain().max.data(), sys.domain().max.data() + sys.n());
  if (sys.has_structure()) {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& si : sys.structure()) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& sj : si) {
        nlohmann::json col = nlohmann::json::array();
        for (const auto& sk : sj) col.push_back(to_string(sk));
        row.push_back(col);
      }
      st.push_back(row);
    }
    j["structure"] = st;
  }
  return j;
}

GradedSystem load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open system file: " + path);
  nlohmann::json j;
  in >> j;
  return system_from_json(j);
}

}  // namespace ccgeom
