#pragma once

// Truncated multivariate power series in graded-lexicographic monomial order.
//
// Within a degree, monomials are ordered lexicographically with larger
// exponents of earlier variables first: for d = 2, degree 2 is x0², x0·x1, x1².

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cmsd/error.hpp"

namespace cmsd {

class MonomialBasis {
 public:
  MonomialBasis(int num_vars, int max_degree) : d_(num_vars), K_(max_degree) {
    if (d_ < 0 || K_ < 0) throw ConfigError("monomial basis: negative size");
    binom_.assign(d_ + K_ + 2, std::vector<long long>(d_ + K_ + 2, 0));
    for (std::size_t a = 0; a < binom_.size(); ++a) {
      binom_[a][0] = 1;
      for (std::size_t b = 1; b <= a; ++b) binom_[a][b] = binom_[a - 1][b - 1] + binom_[a - 1][b];
    }
    offsets_.assign(K_ + 2, 0);
    for (int m = 0; m <= K_; ++m) offsets_[m + 1] = offsets_[m] + count_of_degree(m);
    const int total = offsets_[K_ + 1];
    exps_.assign(static_cast<std::size_t>(total) * std::max(d_, 1), 0);
    degree_.assign(total, 0);
    std::vector<std::uint8_t> e(std::max(d_, 1), 0);
    int idx = 0;
    for (int m = 0; m <= K_; ++m) generate(e, 0, m, m, idx);

    raise_.assign(static_cast<std::size_t>(total) * d_, -1);
    lower_.assign(static_cast<std::size_t>(total) * d_, -1);
    parent_.assign(total, -1);
    parent_var_.assign(total, -1);
    std::vector<std::uint8_t> tmp(std::max(d_, 1));
    for (int i = 0; i < total; ++i) {
      if (degree_[i] == K_) continue;
      for (int v = 0; v < d_; ++v) {
        std::copy(exponents(i), exponents(i) + d_, tmp.begin());
        ++tmp[v];
        const int j = rank(tmp.data(), degree_[i] + 1);
        raise_[static_cast<std::size_t>(i) * d_ + v] = j;
        lower_[static_cast<std::size_t>(j) * d_ + v] = i;
      }
    }
    for (int j = 1; j < total; ++j) {
      for (int v = 0; v < d_; ++v) {
        if (exponents(j)[v] > 0) {
          parent_[j] = lower_[static_cast<std::size_t>(j) * d_ + v];
          parent_var_[j] = v;
          break;
        }
      }
    }
  }

  int num_vars() const { return d_; }
  int max_degree() const { return K_; }
  int size() const { return offsets_[K_ + 1]; }
  /// Index of the first monomial of degree m (m may be K+1 for the end).
  int offset(int m) const { return offsets_[std::min(m, K_ + 1)]; }
  int count_of_degree(int m) const {
    if (d_ == 0) return m == 0 ? 1 : 0;
    return static_cast<int>(binom_[m + d_ - 1][d_ - 1]);
  }
  int degree(int i) const { return degree_[i]; }
  const std::uint8_t* exponents(int i) const { return exps_.data() + static_cast<std::size_t>(i) * std::max(d_, 1); }

  /// Index of x^α · x_v, or -1 when the degree would exceed K.
  int raise(int i, int v) const { return raise_[static_cast<std::size_t>(i) * d_ + v]; }
  /// Index of x^α / x_v, or -1 when α_v = 0.
  int lower(int i, int v) const { return lower_[static_cast<std::size_t>(i) * d_ + v]; }
  /// Monomial i equals parent(i) · x_{parent_var(i)}; -1 for the constant.
  int parent(int i) const { return parent_[i]; }
  int parent_var(int i) const { return parent_var_[i]; }

  /// Index of the product of monomials i and j; requires degree(i)+degree(j) <= K.
  int product(int i, int j) const {
    while (j > 0) {
      i = raise(i, parent_var_[j]);
      j = parent_[j];
    }
    return i;
  }

  /// Index of an arbitrary exponent vector of total degree m <= K.
  int rank(const std::uint8_t* e, int m) const {
    long long r = offsets_[m];
    int rem = m;
    for (int i = 0; i + 1 < d_; ++i) {
      const int p = d_ - i - 1;
      if (rem > e[i]) r += binom_[rem - e[i] - 1 + p][p];
      rem -= e[i];
    }
    return static_cast<int>(r);
  }

 private:
  void generate(std::vector<std::uint8_t>& e, int var, int remaining, int m, int& idx) {
    if (d_ == 0) {
      if (m == 0) degree_[idx++] = 0;
      return;
    }
    if (var == d_ - 1) {
      e[var] = static_cast<std::uint8_t>(remaining);
      std::copy(e.begin(), e.begin() + d_, exps_.begin() + static_cast<std::size_t>(idx) * d_);
      degree_[idx++] = m;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[var] = static_cast<std::uint8_t>(k);
      generate(e, var + 1, remaining - k, m, idx);
    }
  }

  int d_, K_;
  std::vector<std::vector<long long>> binom_;
  std::vector<int> offsets_;
  std::vector<std::uint8_t> exps_;
  std::vector<int> degree_;
  std::vector<int> raise_, lower_, parent_, parent_var_;
};

using BasisPtr = std::shared_ptr<const MonomialBasis>;

/// Shared, cached monomial basis for (d, K).
inline BasisPtr monomial_basis(int num_vars, int max_degree) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::weak_ptr<const MonomialBasis>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{num_vars, max_degree}];
  if (auto p = slot.lock()) return p;
  auto p = std::make_shared<const MonomialBasis>(num_vars, max_degree);
  slot = p;
  return p;
}

/// A polynomial in d variables truncated at total degree K.
class Series {
 public:
  Series() = default;
  explicit Series(BasisPtr basis) : basis_(std::move(basis)), c_(Eigen::VectorXd::Zero(basis_->size())) {}
  Series(BasisPtr basis, Eigen::VectorXd coeffs) : basis_(std::move(basis)), c_(std::move(coeffs)) {
    if (c_.size() != basis_->size()) throw ConfigError("series: coefficient vector has wrong length");
  }

  static Series constant(BasisPtr basis, double v) {
    Series s(std::move(basis));
    s.c_(0) = v;
    return s;
  }
  /// The series x_i (+ v0).
  static Series variable(BasisPtr basis, int i, double v0 = 0.0) {
    Series s(std::move(basis));
    s.c_(0) = v0;
    if (s.basis_->max_degree() >= 1) s.c_(1 + i) = 1.0;
    return s;
  }

  const BasisPtr& basis() const { return basis_; }
  const Eigen::VectorXd& coeffs() const { return c_; }
  Eigen::VectorXd& coeffs() { return c_; }
  double operator[](int i) const { return c_(i); }
  double& operator[](int i) { return c_(i); }
  double constant_term() const { return c_(0); }
  int num_vars() const { return basis_->num_vars(); }
  int max_degree() const { return basis_->max_degree(); }

  /// Lowest degree carrying a nonzero coefficient (K+1 for the zero series).
  int valuation() const {
    for (int i = 0; i < c_.size(); ++i)
      if (c_(i) != 0.0) return basis_->degree(i);
    return basis_->max_degree() + 1;
  }

  /// Coefficients of degrees outside [lo, hi] set to zero.
  Series degree_range(int lo, int hi) const {
    Series s(basis_);
    const int a = basis_->offset(std::max(lo, 0)), b = basis_->offset(hi + 1);
    if (b > a) s.c_.segment(a, b - a) = c_.segment(a, b - a);
    return s;
  }
  /// Sup-norm of the coefficients of degree m.
  double degree_norm(int m) const {
    const int a = basis_->offset(m), b = basis_->offset(m + 1);
    return b > a ? c_.segment(a, b - a).cwiseAbs().maxCoeff() : 0.0;
  }

  Series& operator+=(const Series& o) {
    c_ += o.c_;
    return *this;
  }
  Series& operator-=(const Series& o) {
    c_ -= o.c_;
    return *this;
  }
  Series& operator*=(double a) {
    c_ *= a;
    return *this;
  }
  Series& operator+=(double a) {
    c_(0) += a;
    return *this;
  }
  Series operator-() const { return Series(basis_, -c_); }
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator+(Series a, double b) { return a += b; }
  friend Series operator+(double b, Series a) { return a += b; }
  friend Series operator-(Series a, double b) { return a += -b; }
  friend Series operator-(double b, const Series& a) { return (-a) + b; }
  friend Series operator*(double a, Series s) { return s *= a; }
  friend Series operator*(Series s, double a) { return s *= a; }

  friend Series operator*(const Series& a, const Series& b) {
    const MonomialBasis& B = *a.basis_;
    const int K = B.max_degree();
    Series out(a.basis_);
    std::vector<int> nzb;
    nzb.reserve(b.c_.size());
    for (int j = 0; j < b.c_.size(); ++j)
      if (b.c_(j) != 0.0) nzb.push_back(j);
    for (int i = 0; i < a.c_.size(); ++i) {
      const double ai = a.c_(i);
      if (ai == 0.0) continue;
      const int room = K - B.degree(i);
      for (int j : nzb) {
        if (B.degree(j) > room) break;  // nzb is sorted by degree
        out.c_(B.product(i, j)) += ai * b.c_(j);
      }
    }
    return out;
  }
  Series& operator*=(const Series& o) { return *this = *this * o; }

  /// ∂/∂x_v.
  Series derivative(int v) const {
    Series out(basis_);
    const MonomialBasis& B = *basis_;
    for (int i = 0; i < c_.size(); ++i) {
      if (c_(i) == 0.0) continue;
      const int e = B.exponents(i)[v];
      if (e == 0) continue;
      out.c_(B.lower(i, v)) += e * c_(i);
    }
    return out;
  }

  /// Values of every monomial at the point.
  static Eigen::VectorXd monomial_values(const MonomialBasis& B, std::span<const double> x) {
    Eigen::VectorXd m(B.size());
    m(0) = 1.0;
    for (int i = 1; i < B.size(); ++i) m(i) = m(B.parent(i)) * x[B.parent_var(i)];
    return m;
  }

  double evaluate(std::span<const double> x) const { return monomial_values(*basis_, x).dot(c_); }

  Eigen::VectorXd gradient(std::span<const double> x) const {
    const MonomialBasis& B = *basis_;
    const Eigen::VectorXd m = monomial_values(B, x);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(B.num_vars());
    for (int i = 1; i < B.size(); ++i) {
      if (c_(i) == 0.0) continue;
      for (int v = 0; v < B.num_vars(); ++v) {
        const int e = B.exponents(i)[v];
        if (e) g(v) += e * c_(i) * m(B.lower(i, v));
      }
    }
    return g;
  }

 private:
  BasisPtr basis_;
  Eigen::VectorXd c_;
};

/// f(a) for a univariate f given its derivatives at the constant term:
/// derivs[j] = f^{(j)}(a_0), j = 0..K.
inline Series apply_univariate(const Series& a, std::span<const double> derivs) {
  const int K = a.max_degree();
  Series delta = a;
  delta[0] = 0.0;
  Series out = Series::constant(a.basis(), derivs[0]);
  Series power = Series::constant(a.basis(), 1.0);
  double factorial = 1.0;
  for (int j = 1; j <= K && j < static_cast<int>(derivs.size()); ++j) {
    power = power * delta;
    factorial *= j;
    if (derivs[j] != 0.0) out += (derivs[j] / factorial) * power;
  }
  return out;
}

/// Substitutes series args[v] for variable v of poly. The arguments share one
/// basis; the result is truncated at that basis' degree.
inline Series compose(const Series& poly, std::span<const Series> args) {
  const MonomialBasis& P = *poly.basis();
  if (static_cast<int>(args.size()) != P.num_vars()) throw ConfigError("compose: argument count mismatch");
  if (args.empty()) throw ConfigError("compose: needs at least one argument");
  const BasisPtr& out_basis = args[0].basis();
  bool no_constant = true;
  for (const auto& s : args) no_constant = no_constant && s.constant_term() == 0.0;
  const int max_deg = no_constant ? std::min(P.max_degree(), out_basis->max_degree()) : P.max_degree();
  const int limit = P.offset(max_deg + 1);

  std::vector<char> needed(limit, 0);
  for (int i = limit - 1; i >= 0; --i) {
    if (poly[i] != 0.0) needed[i] = 1;
    if (needed[i] && i > 0) needed[P.parent(i)] = 1;
  }
  std::vector<Series> mono(limit);
  Series out(out_basis);
  for (int i = 0; i < limit; ++i) {
    if (!needed[i]) continue;
    mono[i] = i == 0 ? Series::constant(out_basis, 1.0) : mono[P.parent(i)] * args[P.parent_var(i)];
    if (poly[i] != 0.0) out += poly[i] * mono[i];
  }
  return out;
}

}  // namespace cmsd
