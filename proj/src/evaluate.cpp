#include "evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace hetcov {

FSCCurve fsc(const VecC& a, const VecC& b, const RadialBasis& basis, const BasisIndexSet& idx, int n_shells) {
  require(n_shells >= 1, ErrorKind::invalid_argument, "need at least one shell");
  require(a.size() == idx.p_hat() && b.size() == idx.p_hat(), ErrorKind::invalid_argument,
          "volumes do not match the index set");
  const int K = idx.K;
  const double h = basis.omega_max / n_shells;
  std::vector<cplx> cross(n_shells, 0.0);
  std::vector<double> ea(n_shells, 0.0), eb(n_shells, 0.0);
  FSCCurve out;
  out.counts.assign(n_shells, 0);
  std::vector<double> f(K + 1), leg(legendre_table_size(K));
  std::vector<cplx> eim(2 * K + 1);
  for (int iz = -n_shells; iz <= n_shells; ++iz)
    for (int iy = -n_shells; iy <= n_shells; ++iy)
      for (int ix = -n_shells; ix <= n_shells; ++ix) {
        const double x = ix * h, y = iy * h, z = iz * h;
        const double rxy = std::hypot(x, y), r = std::hypot(rxy, z);
        if (r > basis.omega_max * (1.0 + 1e-12)) continue;
        const int shell = std::min(static_cast<int>(r / h), n_shells - 1);
        basis.eval_all(std::min(r, basis.omega_max), f.data());
        legendre_normalized(K, r > 0 ? z / r : 1.0, r > 0 ? rxy / r : 0.0, leg.data());
        const double phi = std::atan2(y, x);
        for (int m = -K; m <= K; ++m) eim[m + K] = std::polar(1.0, m * phi);
        cplx va = 0.0, vb = 0.0;
        for (int p = 0; p < idx.p_hat(); ++p) {
          const auto& v = idx.v_indices[p];
          const cplx basis_value = f[v.k] * legendre_signed(leg.data(), v.l, v.m) * eim[v.m + K];
          va += a[p] * basis_value;
          vb += b[p] * basis_value;
        }
        cross[shell] += va * std::conj(vb);
        ea[shell] += std::norm(va);
        eb[shell] += std::norm(vb);
        ++out.counts[shell];
      }
  out.cutoff_freq = basis.omega_max;
  bool crossed = false;
  for (int s = 0; s < n_shells; ++s) {
    out.shell_centers.push_back((s + 0.5) * h);
    const bool empty = !(ea[s] > 0.0 && eb[s] > 0.0);
    out.empty_energy.push_back(empty);
    const double v = empty ? 0.0 : std::clamp(cross[s].real() / std::sqrt(ea[s] * eb[s]), -1.0, 1.0);
    out.values.push_back(v);
    if (!crossed && out.counts[s] > 0 && v < 0.5) {
      crossed = true;
      out.cutoff_freq = out.shell_centers.back();
    }
  }
  return out;
}

double correlation(const VecC& a, const VecC& b) {
  require(a.size() == b.size(), ErrorKind::invalid_argument, "vectors differ in length");
  const double na = a.norm(), nb = b.norm();
  require(na > 0.0 && nb > 0.0, ErrorKind::invalid_argument, "correlation of a zero vector is undefined");
  return std::min(1.0, std::abs(a.dot(b)) / (na * nb));
}

double MPLaw::density(double x) const {
  if (x <= lower || x >= upper) return 0.0;
  return std::sqrt((upper - x) * (x - lower)) / (2.0 * kPi * sigma2 * gamma * x);
}

double MPLaw::mass(double a, double b) const {
  a = std::max(a, lower);
  b = std::min(b, upper);
  if (!(b > a)) return 0.0;
  const double c = 0.5 * (upper + lower), hw = 0.5 * (upper - lower);
  const double ta = std::asin(std::clamp((a - c) / hw, -1.0, 1.0));
  const double tb = std::asin(std::clamp((b - c) / hw, -1.0, 1.0));
  static const QuadratureRule gl = gauss_legendre(64, 0.0, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < gl.size(); ++i) {
    const double t = ta + (tb - ta) * gl.nodes[i];
    const double x = c + hw * std::sin(t);
    // sqrt((upper-x)(x-lower)) = hw cos t and dx = hw cos t dt
    acc += gl.weights[i] * hw * hw * std::cos(t) * std::cos(t) / (2.0 * kPi * sigma2 * gamma * x);
  }
  return acc * (tb - ta);
}

MPLaw mp_density(double gamma, double sigma2) {
  if (!(gamma > 0.0) || gamma > 1.0)
    fail(ErrorKind::domain, "Marchenko-Pastur law is supported only for 0 < gamma <= 1");
  require(sigma2 > 0.0, ErrorKind::domain, "noise variance must be positive");
  MPLaw law;
  law.gamma = gamma;
  law.sigma2 = sigma2;
  law.lower = sigma2 * std::pow(1.0 - std::sqrt(gamma), 2);
  law.upper = sigma2 * std::pow(1.0 + std::sqrt(gamma), 2);
  return law;
}

double spike_threshold(double gamma, double sigma2) { return sigma2 * std::sqrt(gamma); }

SpikePrediction limiting_top_correlation(double tau1sq, double sigma2, double gamma) {
  require(tau1sq > 0.0 && sigma2 > 0.0 && gamma > 0.0, ErrorKind::domain, "inputs must be positive");
  const double x = tau1sq / sigma2;
  SpikePrediction p;
  if (x <= std::sqrt(gamma)) {
    p.correlation = 0.0;
    p.eigenvalue = sigma2 * std::pow(1.0 + std::sqrt(gamma), 2);
    return p;
  }
  const double s = x * x / gamma;
  p.correlation = (s - 1.0) / (s + x);
  p.eigenvalue = (tau1sq + sigma2) * (1.0 + sigma2 * gamma / tau1sq);
  return p;
}

std::vector<HistogramRow> eigen_histogram_export(const VecR& eigvals, int bins, const std::optional<MPLaw>& overlay) {
  require(eigvals.size() > 0, ErrorKind::invalid_argument, "no eigenvalues to bin");
  require(bins >= 1, ErrorKind::invalid_argument, "need at least one bin");
  const double lo = eigvals.minCoeff(), hi = eigvals.maxCoeff();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<HistogramRow> rows;
  if (!(hi > lo)) {
    rows.push_back({lo, hi, lo, 1.0, overlay ? overlay->mass(lo, hi) : nan});
    return rows;
  }
  const double w = (hi - lo) / bins;
  std::vector<double> count(bins, 0.0);
  for (double v : eigvals) count[std::min(bins - 1, static_cast<int>((v - lo) / w))] += 1.0;
  for (int b = 0; b < bins; ++b) {
    const double a = lo + b * w, e = (b + 1 == bins) ? hi : lo + (b + 1) * w;
    rows.push_back({a, e, 0.5 * (a + e), count[b] / static_cast<double>(eigvals.size()),
                    overlay ? overlay->mass(a, e) : nan});
  }
  return rows;
}

std::string histogram_csv(const std::vector<HistogramRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(12) << "bin_lo,bin_hi,center,mass,mp_mass\n";
  for (const auto& r : rows) {
    os << r.lo << ',' << r.hi << ',' << r.center << ',' << r.mass << ',';
    if (!std::isnan(r.mp_mass)) os << r.mp_mass;
    os << '\n';
  }
  return os.str();
}

double tv_distance_to_mp(const std::vector<HistogramRow>& rows) {
  double tv = 0.0, covered = 0.0;
  for (const auto& r : rows) {
    require(!std::isnan(r.mp_mass), ErrorKind::invalid_argument, "histogram has no MP overlay");
    tv += std::abs(r.mass - r.mp_mass);
    covered += r.mp_mass;
  }
  // MP mass outside the binned range counts fully.
  return 0.5 * (tv + std::max(0.0, 1.0 - covered));
}

VecR sample_covariance_spectrum(int p, int n, double sigma2, const std::vector<double>& spikes, std::uint64_t seed) {
  require(p >= 1 && n >= 1, ErrorKind::invalid_argument, "dimensions must be positive");
  require(static_cast<int>(spikes.size()) <= p, ErrorKind::invalid_argument, "more spikes than dimensions");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  MatR X(p, n);
  const double sd = std::sqrt(sigma2);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < p; ++i) X(i, s) = sd * nd(gen);
    for (std::size_t k = 0; k < spikes.size(); ++k) X(static_cast<Eigen::Index>(k), s) += std::sqrt(spikes[k]) * nd(gen);
  }
  MatR S = MatR::Zero(p, p);
  S.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / n);
  Eigen::SelfAdjointEigenSolver<MatR> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

MatR triangle_vertices(const MatC& class_coeffs, const VecR& mean_weights) {
  require(class_coeffs.cols() == 3 && mean_weights.size() == 3, ErrorKind::invalid_argument,
          "a triangle needs three vertices");
  const VecC mu = class_coeffs * mean_weights.cast<cplx>();
  const MatC Y = class_coeffs.colwise() - mu;
  const MatR G = (Y.adjoint() * Y).real();
  Eigen::SelfAdjointEigenSolver<MatR> es(G);
  MatR V(2, 3);
  for (int i = 0; i < 2; ++i)
    V.row(i) = std::sqrt(std::max(0.0, es.eigenvalues()[2 - i])) * es.eigenvectors().col(2 - i).transpose();
  return V;
}

double triangle_hull_fraction(const MatC& alphas, const MatR& weights, const MatR& vertices, double inflate) {
  const Eigen::Index n = alphas.rows(), d = alphas.cols();
  require(weights.rows() == 3 && weights.cols() == n && vertices.rows() == 2 && vertices.cols() == 3,
          ErrorKind::invalid_argument, "triangle inputs have inconsistent shapes");
  require(n > 0, ErrorKind::invalid_argument, "no coordinates");
  MatR A(n, 2 * d + 1);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index j = 0; j < d; ++j) {
      A(s, 2 * j) = alphas(s, j).real();
      A(s, 2 * j + 1) = alphas(s, j).imag();
    }
    A(s, 2 * d) = 1.0;
  }
  const MatR Z = (vertices * weights).transpose();  // n x 2
  const MatR coef = A.colPivHouseholderQr().solve(Z);
  const MatR Zhat = A * coef;
  const Eigen::Vector2d centroid = vertices.rowwise().mean();
  MatR T = vertices;
  for (int c = 0; c < 3; ++c) T.col(c) = centroid + (1.0 + inflate) * (vertices.col(c) - centroid);
  Eigen::Matrix2d M;
  M.col(0) = T.col(1) - T.col(0);
  M.col(1) = T.col(2) - T.col(0);
  const Eigen::Matrix2d Minv = M.inverse();
  Eigen::Index inside = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    const Eigen::Vector2d l = Minv * (Zhat.row(s).transpose() - T.col(0));
    if (l[0] >= -1e-12 && l[1] >= -1e-12 && l[0] + l[1] <= 1.0 + 1e-12) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(n);
}

std::vector<int> match_classes(const std::vector<VecC>& estimated, const std::vector<VecC>& truth, const VecC& mu) {
  const std::size_t E = estimated.size(), T = truth.size();
  std::vector<int> best(E, -1);
  if (E == 0 || T == 0) return best;
  MatR score(E, T);
  for (std::size_t i = 0; i < E; ++i)
    for (std::size_t j = 0; j < T; ++j) {
      const VecC a = estimated[i] - mu, b = truth[j] - mu;
      score(i, j) = (a.norm() > 0 && b.norm() > 0) ? a.dot(b).real() / (a.norm() * b.norm()) : -1.0;
    }
  // brute force over assignments; class counts are small
  const std::size_t L = std::max(E, T);
  std::vector<int> perm(L);
  std::iota(perm.begin(), perm.end(), 0);
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < E; ++i)
      if (perm[i] < static_cast<int>(T)) s += score(i, perm[i]);
    if (s > best_score) {
      best_score = s;
      for (std::size_t i = 0; i < E; ++i) best[i] = perm[i] < static_cast<int>(T) ? perm[i] : -1;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace hetcov
