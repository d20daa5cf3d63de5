#include "almlab/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace almlab::saddle {

double gamma_of(double gamma0, double h, double r) { return gamma0 / std::pow(h, 2.0 * r); }

double SaddleProblem::gamma() const {
  const double h2r = std::pow(h, 2.0 * r);
  if (compliance > 0.0) return 1.0 / (h2r / gamma0 + compliance);
  return gamma0 / h2r;
}

int SaddleProblem::n_multipliers() const {
  if (variant == Variant::eliminated) return 0;
  return E.size() == 0 && E.rows() == 0 ? n_points() : static_cast<int>(E.cols());
}

void SaddleProblem::validate() const {
  const int n = n_primal(), q = n_points();
  if (a.cols() != n) throw std::invalid_argument("primal operator must be square");
  if (rhs_f.size() != n) throw std::invalid_argument("load vector size mismatch");
  if (B.cols() != n) throw std::invalid_argument("constraint operator column count mismatch");
  if (g.size() != q || weights.size() != q)
    throw std::invalid_argument("constraint offset/weights size mismatch");
  if (!(gamma0 > 0.0)) throw std::invalid_argument("gamma0 must be positive");
  if (!(h > 0.0) || r < 0.0) throw std::invalid_argument("need h > 0 and r >= 0");
  if (compliance < 0.0) throw std::invalid_argument("compliance must be nonnegative");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("constraint weights must be nonnegative");
  if (E.rows() != 0 && E.rows() != q) throw std::invalid_argument("multiplier evaluation row mismatch");
  if (variant == Variant::eliminated) {
    if (T.rows() != q || T.cols() != n)
      throw std::invalid_argument("eliminated variant requires T (q x n)");
    if (t_offset.size() != 0 && t_offset.size() != q)
      throw std::invalid_argument("multiplier offset size mismatch");
  }
  if (variant == Variant::stabilised) {
    const int m = n_multipliers();
    if (s_form.rows() != m || s_form.cols() != m)
      throw std::invalid_argument("stabilised variant requires s_form (m x m)");
    if (!is_symmetric(s_form, 1e-12)) throw std::invalid_argument("s_form must be symmetric");
  }
}

SaddleNonConvergence::SaddleNonConvergence(const std::string& what, SaddleResult last)
    : NonConvergenceError(what,
                          [&] {
                            std::vector<double> h;
                            for (const auto& r : last.log) h.push_back(r.residual);
                            return h;
                          }()),
      last_(std::move(last)) {}

CyclingError::CyclingError(const std::string& what, std::vector<std::vector<bool>> trace)
    : Error(what), trace_(std::move(trace)) {}

namespace {

SparseMatrix diag(const Vector& d) {
  SparseMatrix m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Constant(d.size(), 1));
  for (int i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  m.makeCompressed();
  return m;
}

SparseMatrix e_matrix(const SparseMatrix& e, int q) {
  if (e.rows() != 0) return e;
  SparseMatrix i(q, q);
  i.setIdentity();
  return i;
}

Vector masked(const Vector& s, const std::vector<bool>& mask) {
  Vector out(s.size());
  for (int i = 0; i < s.size(); ++i) out[i] = mask[i] ? s[i] : 0.0;
  return out;
}

std::vector<bool> mask_of(const Vector& s) {
  std::vector<bool> m(s.size());
  for (int i = 0; i < s.size(); ++i) m[i] = s[i] > 0.0;
  return m;
}

SparseMatrix blocks(const SparseMatrix& a, const SparseMatrix& b, const SparseMatrix& c,
                    const SparseMatrix& d) {
  const int n = static_cast<int>(a.rows()), m = static_cast<int>(d.rows());
  Triplets t;
  t.reserve(a.nonZeros() + b.nonZeros() + c.nonZeros() + d.nonZeros());
  auto add = [&](const SparseMatrix& x, int r0, int c0) {
    for (int k = 0; k < x.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(x, k); it; ++it)
        t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
  };
  add(a, 0, 0);
  add(b, 0, n);
  add(c, n, 0);
  add(d, n, n);
  return from_triplets(n + m, n + m, t);
}

Vector eta_eliminated(const SaddleProblem& p, const Vector& u) {
  Vector eta = p.T * u;
  if (p.t_offset.size()) eta += p.t_offset;
  return eta;
}

// Residual with the plus-part replaced by mask * s; returns the residual and a
// magnitude used to make the convergence test relative.
std::pair<Vector, double> residual_on(const SaddleProblem& p, const SaddleState& st,
                                      const std::vector<bool>& mask) {
  const double gam = p.gamma(), kap = p.kappa();
  const Vector au = p.a * st.u;
  double scale = 1.0 + p.rhs_f.lpNorm<Eigen::Infinity>() + au.lpNorm<Eigen::Infinity>();
  if (p.variant == Variant::eliminated) {
    const Vector eta = eta_eliminated(p, st.u);
    const Vector s = p.B * st.u - p.g - kap * eta;
    const Vector sp = masked(s, mask);
    const Vector pen = gam * (p.B.transpose() * p.weights.cwiseProduct(sp) -
                              kap * (p.T.transpose() * p.weights.cwiseProduct(sp)));
    const Vector cons = kap * (p.T.transpose() * p.weights.cwiseProduct(eta));
    scale += pen.lpNorm<Eigen::Infinity>() + cons.lpNorm<Eigen::Infinity>();
    return {au + pen - cons - p.rhs_f, scale};
  }
  const SparseMatrix e = e_matrix(p.E, p.n_points());
  const Vector eta = e * st.lambda;
  const Vector s = p.B * st.u - p.g - kap * eta;
  const Vector sp = masked(s, mask);
  Vector r(p.n_primal() + p.n_multipliers());
  const Vector pen = gam * (p.B.transpose() * p.weights.cwiseProduct(sp));
  r.head(p.n_primal()) = au + pen - p.rhs_f;
  Vector rl = -kap * (e.transpose() * p.weights.cwiseProduct(gam * sp + eta));
  if (p.variant == Variant::stabilised) rl -= p.s_form * st.lambda;
  r.tail(p.n_multipliers()) = rl;
  scale += pen.lpNorm<Eigen::Infinity>() +
           kap * (e.transpose() * p.weights.cwiseProduct(eta)).lpNorm<Eigen::Infinity>();
  return {r, scale};
}

Vector stack(const SaddleState& st) {
  Vector z(st.u.size() + st.lambda.size());
  z << st.u, st.lambda;
  return z;
}

void unstack(const Vector& z, SaddleState& st) {
  const auto n = st.u.size();
  st.u = z.head(n);
  st.lambda = z.tail(z.size() - n);
}

std::string mask_string(const std::vector<bool>& m) {
  std::string s;
  for (bool b : m) s += b ? '1' : '0';
  return s;
}

void finish(const SaddleProblem& p, SaddleResult& res) {
  const Vector s = switch_argument(p, res.state);
  res.state.active = mask_of(s);
  res.point_multiplier = point_multiplier(p, res.state);
}

std::vector<std::string> stability_warnings(const SaddleProblem& p) {
  std::vector<std::string> w;
  if (p.variant == Variant::eliminated && p.inverse_constant &&
      !(p.gamma0 > *p.inverse_constant / p.coercivity)) {
    std::ostringstream os;
    os << "gamma0 = " << p.gamma0 << " does not exceed C_I/alpha = " << *p.inverse_constant / p.coercivity
       << "; the eliminated formulation may be unstable";
    w.push_back(os.str());
  }
  return w;
}

}  // namespace

Vector switch_argument(const SaddleProblem& p, const SaddleState& st) {
  const Vector eta = p.variant == Variant::eliminated ? eta_eliminated(p, st.u)
                                                      : Vector(e_matrix(p.E, p.n_points()) * st.lambda);
  return p.B * st.u - p.g - p.kappa() * eta;
}

Vector point_multiplier(const SaddleProblem& p, const SaddleState& st) {
  if (p.variant != Variant::eliminated) return e_matrix(p.E, p.n_points()) * st.lambda;
  const Vector s = switch_argument(p, st);
  return -p.gamma() * s.cwiseMax(0.0);
}

SparseMatrix jacobian(const SaddleProblem& p, const std::vector<bool>& active) {
  if (static_cast<int>(active.size()) != p.n_points()) throw std::invalid_argument("mask size mismatch");
  const double gam = p.gamma(), kap = p.kappa();
  Vector wd(p.n_points());
  for (int i = 0; i < p.n_points(); ++i) wd[i] = active[i] ? p.weights[i] : 0.0;
  const SparseMatrix WD = diag(wd);
  if (p.variant == Variant::eliminated) {
    const SparseMatrix bk = p.B - kap * p.T;
    SparseMatrix j = p.a + gam * SparseMatrix(bk.transpose() * WD * bk) -
                     kap * SparseMatrix(p.T.transpose() * diag(p.weights) * p.T);
    j.makeCompressed();
    return j;
  }
  const SparseMatrix e = e_matrix(p.E, p.n_points());
  const SparseMatrix juu = p.a + gam * SparseMatrix(p.B.transpose() * WD * p.B);
  const SparseMatrix jul = -gam * kap * SparseMatrix(p.B.transpose() * WD * e);
  const SparseMatrix jlu = -gam * kap * SparseMatrix(e.transpose() * WD * p.B);
  SparseMatrix jll = -kap * SparseMatrix(e.transpose() * (diag(p.weights) - gam * kap * WD) * e);
  if (p.variant == Variant::stabilised) jll -= p.s_form;
  return blocks(juu, jul, jlu, jll);
}

Vector residual(const SaddleProblem& p, const SaddleState& st) {
  return residual_on(p, st, mask_of(switch_argument(p, st))).first;
}

SaddleResult solve_equality(const SaddleProblem& p) {
  p.validate();
  if (p.mode != Mode::equality) throw std::invalid_argument("solve_equality needs mode = equality");
  SaddleResult res;
  res.warnings = stability_warnings(p);
  const std::vector<bool> all(p.n_points(), true);
  SaddleState st{Vector::Zero(p.n_primal()), Vector::Zero(p.n_multipliers()), all};
  const Vector r0 = residual_on(p, st, all).first;
  Vector z;
  try {
    z = -solve_linear(jacobian(p, all), r0);
  } catch (const SingularMatrixError& e) {
    const long piv = e.pivot();
    std::string block = piv < 0 ? "unknown" : (piv < p.n_primal() ? "primal" : "multiplier");
    throw SingularMatrixError(std::string(e.what()) + " (zero pivot in the " + block + " block)", piv);
  }
  unstack(z, st);
  res.state = st;
  res.iterations = 1;
  const auto [r, scale] = residual_on(p, st, all);
  res.log.push_back({1, r.lpNorm<Eigen::Infinity>() / scale, p.n_points()});
  res.state.active = all;
  res.point_multiplier = point_multiplier(p, st);
  return res;
}

SaddleResult solve_inequality(const SaddleProblem& p, const SaddleState& start, double tol,
                              int max_iter) {
  p.validate();
  if (p.mode != Mode::inequality) throw std::invalid_argument("solve_inequality needs mode = inequality");
  SaddleResult res;
  res.warnings = stability_warnings(p);
  const int n = p.n_primal(), m = p.n_multipliers(), q = p.n_points();

  SaddleState st;
  std::vector<bool> mask;
  if (start.u.size() == n) {
    st.u = start.u;
    st.lambda = start.lambda.size() == m ? start.lambda : Vector::Zero(m);
    mask = mask_of(switch_argument(p, st));
  } else if (static_cast<int>(start.active.size()) == q) {
    st.u = Vector::Zero(n);
    st.lambda = Vector::Zero(m);
    mask = start.active;
  } else {
    st.u = solve_linear(p.a, p.rhs_f);
    st.lambda = Vector::Zero(m);
    mask = mask_of(switch_argument(p, st));
  }

  std::map<std::vector<bool>, int> visits;
  std::vector<std::vector<bool>> trace;
  for (int it = 0; it <= max_iter; ++it) {
    if (it > 0) mask = mask_of(switch_argument(p, st));
    const auto [r, scale] = residual_on(p, st, mask_of(switch_argument(p, st)));
    const double rel = r.lpNorm<Eigen::Infinity>() / scale;
    const int count = static_cast<int>(std::count(mask.begin(), mask.end(), true));
    res.log.push_back({it, rel, count});
    if (rel <= tol && (it > 0 || start.u.size() == n)) {
      res.state = st;
      res.iterations = it;
      finish(p, res);
      return res;
    }
    if (it == max_iter) break;
    trace.push_back(mask);
    if (++visits[mask] > 2) {
      std::string msg = "active-set cycling detected; mask trace:";
      for (const auto& t : trace) msg += " " + mask_string(t);
      throw CyclingError(msg, trace);
    }
    const Vector rd = residual_on(p, st, mask).first;
    const Vector dz = solve_linear(jacobian(p, mask), rd);
    unstack(stack(st) - dz, st);
  }
  res.state = st;
  res.iterations = max_iter;
  finish(p, res);
  throw SaddleNonConvergence("semismooth Newton did not converge in " + std::to_string(max_iter) +
                                 " iterations",
                             res);
}

SaddleResult solve_inequality_incremental(const SaddleProblem& p, double tol, int max_iter) {
  p.validate();
  if (p.mode != Mode::inequality) throw std::invalid_argument("solve_inequality needs mode = inequality");
  SaddleResult res;
  res.warnings = stability_warnings(p);
  const int n = p.n_primal(), m = p.n_multipliers(), q = p.n_points();

  SaddleState st{Vector::Zero(n), Vector::Zero(m), {}};
  std::vector<bool> mask(q, false);
  for (int it = 0;; ++it) {
    const Vector rd = residual_on(p, st, mask).first;
    unstack(stack(st) - solve_linear(jacobian(p, mask), rd), st);
    const Vector s = switch_argument(p, st);
    const auto [r, scale] = residual_on(p, st, mask_of(s));
    const double rel = r.lpNorm<Eigen::Infinity>() / scale;
    const int count = static_cast<int>(std::count(mask.begin(), mask.end(), true));
    res.log.push_back({it, rel, count});
    if (rel <= tol) {
      res.state = st;
      res.iterations = it + 1;
      finish(p, res);
      return res;
    }
    if (it + 1 >= max_iter) break;
    int drop = -1, add = -1;
    for (int i = 0; i < q; ++i) {
      if (mask[i] && s[i] <= 0.0 && (drop < 0 || s[i] < s[drop])) drop = i;
      if (!mask[i] && s[i] > 0.0 && (add < 0 || s[i] > s[add])) add = i;
    }
    if (drop >= 0)
      mask[drop] = false;
    else if (add >= 0)
      mask[add] = true;
    else
      break;
  }
  res.state = st;
  res.iterations = max_iter;
  finish(p, res);
  throw SaddleNonConvergence("incremental active-set solve did not converge in " + std::to_string(max_iter) +
                                 " iterations",
                             res);
}

DiscreteNorms discrete_norms(const Vector& v, const Vector& mu, double h, double r,
                             const SparseMatrix& mass) {
  return {std::pow(h, -r) * std::sqrt(std::max(0.0, v.dot(mass * v))),
          std::pow(h, r) * std::sqrt(std::max(0.0, mu.dot(mass * mu)))};
}

DiscreteNorms discrete_norms(const Vector& v, const Vector& mu, double h, double r,
                             const Vector& diagonal_mass) {
  return {std::pow(h, -r) * std::sqrt(v.cwiseProduct(diagonal_mass).dot(v)),
          std::pow(h, r) * std::sqrt(mu.cwiseProduct(diagonal_mass).dot(mu))};
}

double complementarity_error(const SaddleProblem& p, const SaddleState& a, const SaddleState& b) {
  const double gam = p.gamma();
  auto eta = [&](const SaddleState& s) {
    return p.variant == Variant::eliminated ? eta_eliminated(p, s.u)
                                            : Vector(e_matrix(p.E, p.n_points()) * s.lambda);
  };
  const Vector ea = eta(a), eb = eta(b);
  const Vector z = switch_argument(p, a).cwiseMax(0.0) - switch_argument(p, b).cwiseMax(0.0) +
                   (ea - eb) / gam;
  return std::sqrt(p.gamma0) * discrete_norms(z, Vector::Zero(z.size()), p.h, p.r, p.weights).primal;
}

namespace {

void check_nested(const SparseMatrix& pi, const SparseMatrix& pi_tilde) {
  if (pi.rows() != pi.cols() || pi_tilde.rows() != pi.rows() || pi_tilde.cols() != pi.cols())
    throw std::invalid_argument("projections must be square and of equal size");
  const SparseMatrix d = SparseMatrix(pi_tilde * pi) - pi_tilde;
  if (max_abs(d) > 1e-12 * std::max(1.0, max_abs(pi_tilde)))
    throw std::invalid_argument("projections are not nested (pi_tilde * pi != pi_tilde)");
}

}  // namespace

double stabilisation_term(const Vector& eta, const Vector& mu, const SparseMatrix& pi,
                          const SparseMatrix& pi_tilde, double gamma, const SparseMatrix& mass) {
  check_nested(pi, pi_tilde);
  const Vector d = pi * eta - pi_tilde * eta;
  const Vector md = mass.rows() ? Vector(mass * d) : d;
  return md.dot(mu) / gamma;
}

SparseMatrix stabilisation_matrix(const SparseMatrix& pi, const SparseMatrix& pi_tilde, double gamma,
                                  const SparseMatrix& mass) {
  check_nested(pi, pi_tilde);
  SparseMatrix d = pi - pi_tilde;
  SparseMatrix s = mass.rows() ? SparseMatrix(mass * d) : d;
  s /= gamma;
  s.makeCompressed();
  return s;
}

}  // namespace almlab::saddle
