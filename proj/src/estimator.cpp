#include "estimator.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "parallel.hpp"

namespace hetcov {

namespace {

constexpr std::size_t kImageChunk = 256;

std::size_t projection_bytes(int K) {
  std::size_t n = 0;
  for (int k = 0; k <= K; ++k) n += static_cast<std::size_t>(k + 1) * BasisIndexSet::volume_block_size(k);
  return n * sizeof(cplx);
}

VecC flatten_block(const MatC& S) {
  VecC x(S.size());
  for (Eigen::Index i = 0; i < S.rows(); ++i)
    for (Eigen::Index j = 0; j < S.cols(); ++j) x[i * S.cols() + j] = S(i, j);
  return x;
}

MatC unflatten_block(const VecC& x, int rows, int cols) {
  MatC S(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) S(i, j) = x[static_cast<Eigen::Index>(i) * cols + j];
  return S;
}

// Per-block A_n = (1/n) sum_s P_{s,k}^H P_{s,k}.
std::vector<MatC> empirical_A_blocks(const ImageData& data) {
  const int K = data.idx.K;
  const std::size_t n = data.size();
  require(n > 0, ErrorKind::invalid_argument, "dataset is empty");
  ProjectionBuilder builder(data.idx);
  std::vector<MatC> total(K + 1);
  for (int k = 0; k <= K; ++k) total[k] = MatC::Zero(BasisIndexSet::volume_block_size(k), BasisIndexSet::volume_block_size(k));
  ordered_reduce(
      n, kImageChunk, total,
      [&](std::size_t b, std::size_t e) {
        std::vector<MatC> acc(K + 1);
        for (int k = 0; k <= K; ++k)
          acc[k] = MatC::Zero(BasisIndexSet::volume_block_size(k), BasisIndexSet::volume_block_size(k));
        ProjectionMatrix P;
        for (std::size_t s = b; s < e; ++s) {
          builder.build_into(data.rotations[s], P);
          for (int k = 0; k <= K; ++k) acc[k].noalias() += P.blocks[k].adjoint() * P.blocks[k];
        }
        return acc;
      },
      [](std::vector<MatC>& t, const std::vector<MatC>& p) {
        for (std::size_t k = 0; k < t.size(); ++k) t[k] += p[k];
      });
  for (auto& m : total) m /= static_cast<double>(n);
  return total;
}

}  // namespace

ImageData make_image_data(std::span<const float> pixels, std::vector<Rotation> rotations, const PixelMap& map,
                          const BasisIndexSet& idx, double sigma2) {
  ImageData d;
  d.idx = idx;
  d.coeffs = images_to_coeffs(map, pixels, rotations.size());
  d.rotations = std::move(rotations);
  d.coeff_noise_var = sigma2 * map.c_q;
  return d;
}

SolverMode parse_solver_mode(const std::string& name) {
  if (name == "limiting") return SolverMode::limiting;
  if (name == "empirical") return SolverMode::empirical;
  fail(ErrorKind::config, "unknown solver '" + name + "' (expected limiting or empirical)");
}

std::string to_string(SolverMode mode) { return mode == SolverMode::limiting ? "limiting" : "empirical"; }

VecC accumulate_mean(const ImageData& data) {
  const std::size_t n = data.size();
  require(n > 0, ErrorKind::invalid_argument, "dataset is empty");
  require(data.coeffs.cols() == static_cast<Eigen::Index>(n) && data.coeffs.rows() == data.idx.q_hat(),
          ErrorKind::invalid_argument, "image coefficients do not match the rotations");
  ProjectionBuilder builder(data.idx);
  VecC total = VecC::Zero(data.idx.p_hat());
  ordered_reduce(
      n, kImageChunk, total,
      [&](std::size_t b, std::size_t e) {
        VecC acc = VecC::Zero(data.idx.p_hat());
        ProjectionMatrix P;
        for (std::size_t s = b; s < e; ++s) {
          builder.build_into(data.rotations[s], P);
          acc += P.backproject(data.coeffs.col(static_cast<Eigen::Index>(s)));
        }
        return acc;
      },
      [](VecC& t, const VecC& p) { t += p; });
  return total / static_cast<double>(n);
}

std::vector<VecR> empirical_A_spectrum(const ImageData& data) {
  std::vector<VecR> out;
  for (const MatC& A : empirical_A_blocks(data)) out.push_back(Eigen::SelfAdjointEigenSolver<MatC>(A).eigenvalues());
  return out;
}

MeanEstimate solve_mean(const VecC& b, SolverMode mode, const ImageData* data, double guard_factor) {
  MeanEstimate est;
  if (mode == SolverMode::limiting) {
    est.mu = 2.0 * b;
    est.n_used = data ? static_cast<int>(data->size()) : 1;
    return est;
  }
  require(data != nullptr, ErrorKind::invalid_argument, "empirical mean solve needs the dataset");
  require(guard_factor > 1.0, ErrorKind::config, "guard factor must exceed 1");
  const auto blocks = empirical_A_blocks(*data);
  est.n_used = static_cast<int>(data->size());
  est.mu = VecC::Zero(b.size());
  est.min_eig_A = std::numeric_limits<double>::infinity();
  std::vector<Eigen::SelfAdjointEigenSolver<MatC>> eig;
  for (const MatC& A : blocks) {
    eig.emplace_back(A);
    est.min_eig_A = std::min(est.min_eig_A, eig.back().eigenvalues()[0]);
  }
  // ||A^{-1}|| = 2 for the limiting operator
  if (!(est.min_eig_A > 1.0 / (2.0 * guard_factor))) {
    est.guard_triggered = true;
    est.residual_norm = b.norm();
    return est;
  }
  for (int k = 0; k <= data->idx.K; ++k) {
    const int o = BasisIndexSet::volume_block_offset(k), d = BasisIndexSet::volume_block_size(k);
    const auto& E = eig[k];
    const VecC bk = b.segment(o, d);
    est.mu.segment(o, d) = E.eigenvectors() * (E.eigenvectors().adjoint() * bk).cwiseQuotient(E.eigenvalues().cast<cplx>());
    est.residual_norm = std::hypot(est.residual_norm, (blocks[k] * est.mu.segment(o, d) - bk).norm());
  }
  return est;
}

MatC accumulate_covariance_rhs(const ImageData& data, const VecC& mu) {
  const std::size_t n = data.size();
  require(n > 0, ErrorKind::invalid_argument, "dataset is empty");
  const int p = data.idx.p_hat();
  require(mu.size() == p, ErrorKind::invalid_argument, "mean has the wrong length");
  ProjectionBuilder builder(data.idx);
  // Backprojected residuals, one column per image.
  MatC R(p, static_cast<Eigen::Index>(n));
  parallel_chunks(n, kImageChunk, [&](std::size_t, std::size_t b, std::size_t e) {
    ProjectionMatrix P;
    for (std::size_t s = b; s < e; ++s) {
      builder.build_into(data.rotations[s], P);
      const Eigen::Index c = static_cast<Eigen::Index>(s);
      R.col(c) = P.backproject(data.coeffs.col(c) - P.apply(mu));
    }
  });
  MatC B = MatC::Zero(p, p);
  B.selfadjointView<Eigen::Lower>().rankUpdate(R, 1.0 / static_cast<double>(n));
  B.triangularView<Eigen::StrictlyUpper>() = B.adjoint();
  B.diagonal().array() -= 0.5 * data.coeff_noise_var;
  return B;
}

int default_block_iterations(int k1, int k2) {
  return std::max(200, static_cast<int>(std::ceil(10.0 * std::sqrt(condition_bound(k1, k2)))));
}

std::vector<CovarianceEstimate> solve_covariance_limiting_batch(const std::vector<MatC>& Bs,
                                                                const KernelBlockProvider& provider,
                                                                const CovarianceOptions& opt) {
  const int K = provider.K();
  const int p = BasisIndexSet::volume_block_offset(K + 1);
  for (const MatC& B : Bs)
    require(B.rows() == p && B.cols() == p, ErrorKind::invalid_argument, "right-hand side has the wrong size");
  std::vector<CovarianceEstimate> out(Bs.size());
  for (auto& e : out) e.sigma = MatC::Zero(p, p);

  std::vector<std::pair<int, int>> pairs;
  for (int k2 = K; k2 >= 0; --k2)
    for (int k1 = k2; k1 >= 0; --k1) pairs.emplace_back(k1, k2);
  std::vector<std::vector<BlockSolveReport>> reports(pairs.size(), std::vector<BlockSolveReport>(Bs.size()));

  parallel_chunks(pairs.size(), 1, [&](std::size_t t, std::size_t, std::size_t) {
    const auto [k1, k2] = pairs[t];
    const KernelBlock blk = provider.get(k1, k2);
    const int o1 = BasisIndexSet::volume_block_offset(k1), o2 = BasisIndexSet::volume_block_offset(k2);
    const int d1 = blk.dim1, d2 = blk.dim2;
    VecR diag;
    CGOptions cg;
    cg.tol = opt.cg_tol;
    cg.max_iter = opt.max_iter > 0 ? opt.max_iter : default_block_iterations(k1, k2);
    if (opt.jacobi) {
      diag = blk.matrix.diagonal();
      cg.jacobi = &diag;
    }
    ComplexOperator op = [&](const VecC& in, VecC& o) {
      o.resize(in.size());
      blk.matrix.multiply(in.data(), o.data());
    };
    for (std::size_t r = 0; r < Bs.size(); ++r) {
      const VecC rhs = flatten_block(Bs[r].block(o1, o2, d1, d2));
      VecC x = VecC::Zero(rhs.size());
      const CGReport rep = conjugate_gradient(op, rhs, x, cg);
      BlockSolveReport& br = reports[t][r];
      br = {k1, k2, rep.iterations, cg.max_iter, rep.rel_residual, rep.converged};
      const MatC S = rep.converged ? unflatten_block(x, d1, d2) : MatC::Zero(d1, d2);
      out[r].sigma.block(o1, o2, d1, d2) = S;
      if (k1 != k2) out[r].sigma.block(o2, o1, d2, d1) = S.adjoint();
    }
  });

  for (std::size_t r = 0; r < Bs.size(); ++r) {
    CovarianceEstimate& est = out[r];
    std::ostringstream diag;
    for (std::size_t t = 0; t < pairs.size(); ++t) {
      est.blocks.push_back(reports[t][r]);
      est.total_iterations += reports[t][r].iterations;
      if (!reports[t][r].converged)
        diag << "block (" << reports[t][r].k1 << "," << reports[t][r].k2 << ") did not converge in "
             << reports[t][r].iterations << " iterations (residual " << reports[t][r].rel_residual
             << "); set to zero. ";
    }
    est.diagnostics = diag.str();
    est.sigma = 0.5 * (est.sigma + est.sigma.adjoint()).eval();
    if (opt.decompose) {
      eigendecompose(est.sigma, est.eigvals, est.eigvecs);
      est.rank_estimate = estimate_rank(est.eigvals, opt.rank_gap_delta);
    }
  }
  return out;
}

CovarianceEstimate solve_covariance_limiting(const MatC& B, const KernelBlockProvider& provider,
                                             const CovarianceOptions& opt) {
  return std::move(solve_covariance_limiting_batch({B}, provider, opt).front());
}

EmpiricalOperator::EmpiricalOperator(const ImageData& data, std::size_t cache_budget_bytes)
    : data_(data), builder_(data.idx) {
  require(data.size() > 0, ErrorKind::invalid_argument, "dataset is empty");
  if (projection_bytes(data.idx.K) * data.size() <= cache_budget_bytes) {
    cache_.resize(data.size());
    parallel_chunks(data.size(), kImageChunk, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t s = b; s < e; ++s) builder_.build_into(data.rotations[s], cache_[s]);
    });
  }
}

template <typename F>
void EmpiricalOperator::for_each_projection(std::size_t begin, std::size_t end, F&& f) const {
  ProjectionMatrix P;
  for (std::size_t s = begin; s < end; ++s) {
    if (!cache_.empty()) {
      f(s, cache_[s]);
    } else {
      builder_.build_into(data_.rotations[s], P);
      f(s, P);
    }
  }
}

MatC EmpiricalOperator::apply_L(const MatC& sigma) const {
  const int K = data_.idx.K, p = data_.idx.p_hat(), q = data_.idx.q_hat();
  require(sigma.rows() == p && sigma.cols() == p, ErrorKind::invalid_argument, "matrix has the wrong size");
  MatC total = MatC::Zero(p, p);
  ordered_reduce(
      data_.size(), kImageChunk, total,
      [&](std::size_t b, std::size_t e) {
        MatC acc = MatC::Zero(p, p);
        MatC T(q, p), M(q, q), U(p, q);
        for_each_projection(b, e, [&](std::size_t, const ProjectionMatrix& P) {
          for (int k = 0; k <= K; ++k) {
            const int io = BasisIndexSet::image_block_offset(k), vo = BasisIndexSet::volume_block_offset(k);
            T.middleRows(io, k + 1).noalias() = P.blocks[k] * sigma.middleRows(vo, P.blocks[k].cols());
          }
          for (int k = 0; k <= K; ++k) {
            const int io = BasisIndexSet::image_block_offset(k), vo = BasisIndexSet::volume_block_offset(k);
            M.middleCols(io, k + 1).noalias() = T.middleCols(vo, P.blocks[k].cols()) * P.blocks[k].adjoint();
          }
          for (int k = 0; k <= K; ++k) {
            const int io = BasisIndexSet::image_block_offset(k), vo = BasisIndexSet::volume_block_offset(k);
            U.middleRows(vo, P.blocks[k].cols()).noalias() = P.blocks[k].adjoint() * M.middleRows(io, k + 1);
          }
          for (int k = 0; k <= K; ++k) {
            const int io = BasisIndexSet::image_block_offset(k), vo = BasisIndexSet::volume_block_offset(k);
            acc.middleCols(vo, P.blocks[k].cols()).noalias() += U.middleCols(io, k + 1) * P.blocks[k];
          }
        });
        return acc;
      },
      [](MatC& t, const MatC& part) { t += part; });
  return total / static_cast<double>(data_.size());
}

VecC EmpiricalOperator::apply_A(const VecC& v) const {
  const int p = data_.idx.p_hat();
  require(v.size() == p, ErrorKind::invalid_argument, "vector has the wrong length");
  VecC total = VecC::Zero(p);
  ordered_reduce(
      data_.size(), kImageChunk, total,
      [&](std::size_t b, std::size_t e) {
        VecC acc = VecC::Zero(p);
        for_each_projection(b, e, [&](std::size_t, const ProjectionMatrix& P) { acc += P.backproject(P.apply(v)); });
        return acc;
      },
      [](VecC& t, const VecC& part) { t += part; });
  return total / static_cast<double>(data_.size());
}

MatC apply_empirical_L(const MatC& sigma, const ImageData& data) { return EmpiricalOperator(data).apply_L(sigma); }

CovarianceEstimate solve_covariance_empirical(const MatC& B, const ImageData& data, const CovarianceOptions& opt) {
  const int p = data.idx.p_hat(), q = data.idx.q_hat();
  require(B.rows() == p && B.cols() == p, ErrorKind::invalid_argument, "right-hand side has the wrong size");
  require(opt.guard_factor > 1.0, ErrorKind::config, "guard factor must exceed 1");
  CovarianceEstimate est;
  est.sigma = MatC::Zero(p, p);
  BlockSolveReport rep_all{0, data.idx.K, 0, 0, 0.0, false};

  auto finish = [&] {
    est.blocks.push_back(rep_all);
    est.total_iterations = rep_all.iterations;
    if (opt.decompose) {
      eigendecompose(est.sigma, est.eigvals, est.eigvecs);
      est.rank_estimate = estimate_rank(est.eigvals, opt.rank_gap_delta);
    }
    return est;
  };

  // The range of L_n has dimension at most n q_hat^2.
  if (static_cast<double>(data.size()) * q * q < static_cast<double>(p) * p) {
    est.guard_triggered = true;
    est.diagnostics = "empirical operator is rank deficient (n q_hat^2 < p_hat^2); returning zero";
    return finish();
  }

  const EmpiricalOperator L(data);
  ComplexOperator op = [&](const VecC& in, VecC& out) {
    const MatC S = Eigen::Map<const MatC>(in.data(), p, p);
    out = Eigen::Map<const VecC>(L.apply_L(S).data(), static_cast<Eigen::Index>(p) * p);
  };
  CGOptions cg;
  cg.tol = opt.cg_tol;
  cg.max_iter = opt.max_iter > 0 ? opt.max_iter : 500;
  cg.stagnation_improvement = opt.stagnation_improvement;
  cg.stagnation_window = opt.stagnation_window;
  const VecC rhs = Eigen::Map<const VecC>(B.data(), static_cast<Eigen::Index>(p) * p);
  VecC x = VecC::Zero(rhs.size());
  const CGReport rep = conjugate_gradient(op, rhs, x, cg);
  rep_all.iterations = rep.iterations;
  rep_all.max_iterations = cg.max_iter;
  rep_all.rel_residual = rep.rel_residual;
  rep_all.converged = rep.converged;

  // lambda_min(L) >= 1/(2 pi); a Rayleigh quotient below 1/(2 pi guard) proves
  // ||L_n^{-1}|| exceeds guard * ||L^{-1}||.
  const double floor = 1.0 / (2.0 * kPi * opt.guard_factor);
  std::ostringstream diag;
  if (rep.stagnated || rep.min_rayleigh < floor) {
    est.guard_triggered = true;
    diag << "empirical operator is near singular (stagnated=" << rep.stagnated
         << ", min Rayleigh quotient=" << rep.min_rayleigh << "); returning zero";
  } else {
    est.sigma = Eigen::Map<const MatC>(x.data(), p, p);
    est.sigma = 0.5 * (est.sigma + est.sigma.adjoint()).eval();
    if (!rep.converged)
      diag << "CG stopped at iteration " << rep.iterations << " with relative residual " << rep.rel_residual;
  }
  est.diagnostics = diag.str();
  return finish();
}

void fix_eigenvector_phase(MatC& vecs) {
  for (Eigen::Index c = 0; c < vecs.cols(); ++c) {
    Eigen::Index imax = 0;
    vecs.col(c).cwiseAbs().maxCoeff(&imax);
    const double a = std::abs(vecs(imax, c));
    if (a == 0.0) continue;
    vecs.col(c) *= std::conj(vecs(imax, c)) / a;
    vecs(imax, c) = a;
  }
}

void eigendecompose(const MatC& sigma, VecR& eigvals, MatC& eigvecs) {
  Eigen::SelfAdjointEigenSolver<MatC> es(sigma);
  require(es.info() == Eigen::Success, ErrorKind::solver, "Hermitian eigendecomposition failed");
  eigvals = es.eigenvalues().reverse();
  eigvecs = es.eigenvectors().rowwise().reverse();
  fix_eigenvector_phase(eigvecs);
}

int estimate_rank(const VecR& eigvals, double delta) {
  const Eigen::Index m = std::min<Eigen::Index>(10, eigvals.size() - 1);
  int best = -1;
  double best_ratio = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double a = eigvals[i], b = eigvals[i + 1];
    if (!(a > 0.0)) break;
    const double ratio = b > 0.0 ? a / b : std::numeric_limits<double>::infinity();
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = static_cast<int>(i);
    }
  }
  return (best >= 0 && best_ratio > 1.0 + delta) ? best + 1 : 0;
}

double mean_objective(const ImageData& data, const VecC& mu) {
  ProjectionBuilder builder(data.idx);
  double total = 0.0;
  ProjectionMatrix P;
  for (std::size_t s = 0; s < data.size(); ++s) {
    builder.build_into(data.rotations[s], P);
    total += (data.coeffs.col(static_cast<Eigen::Index>(s)) - P.apply(mu)).squaredNorm();
  }
  return total / static_cast<double>(data.size());
}

VecC mean_gradient(const ImageData& data, const VecC& mu) {
  return EmpiricalOperator(data).apply_A(mu) - accumulate_mean(data);
}

double covariance_objective(const ImageData& data, const VecC& mu, const MatC& sigma) {
  ProjectionBuilder builder(data.idx);
  const MatC noise = MatC::Identity(data.idx.q_hat(), data.idx.q_hat()) * data.coeff_noise_var;
  double total = 0.0;
  ProjectionMatrix P;
  for (std::size_t s = 0; s < data.size(); ++s) {
    builder.build_into(data.rotations[s], P);
    const MatC D = P.dense();
    const VecC r = data.coeffs.col(static_cast<Eigen::Index>(s)) - D * mu;
    total += (D * sigma * D.adjoint() + noise - r * r.adjoint()).squaredNorm();
  }
  return total / static_cast<double>(data.size());
}

MatC covariance_gradient(const ImageData& data, const VecC& mu, const MatC& sigma) {
  ProjectionBuilder builder(data.idx);
  const int p = data.idx.p_hat(), q = data.idx.q_hat();
  MatC G = MatC::Zero(p, p);
  ProjectionMatrix P;
  for (std::size_t s = 0; s < data.size(); ++s) {
    builder.build_into(data.rotations[s], P);
    const MatC D = P.dense();
    const VecC r = data.coeffs.col(static_cast<Eigen::Index>(s)) - D * mu;
    const MatC E = D * sigma * D.adjoint() + data.coeff_noise_var * MatC::Identity(q, q) - r * r.adjoint();
    G.noalias() += D.adjoint() * E * D;
  }
  return G / static_cast<double>(data.size());
}

double gradient_check(Objective which, const ImageData& data, const VecC& mu, const MatC& sigma, double step) {
  double worst = 0.0;
  if (which == Objective::mean) {
    const VecC g = mean_gradient(data, mu);
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      for (const cplx dir : {cplx(1, 0), cplx(0, 1)}) {
        VecC a = mu, b = mu;
        a[i] += step * dir;
        b[i] -= step * dir;
        const double fd = (mean_objective(data, a) - mean_objective(data, b)) / (2.0 * step);
        const double an = 2.0 * (std::conj(g[i]) * dir).real();
        worst = std::max(worst, std::abs(fd - an));
      }
    return worst;
  }
  const MatC G = covariance_gradient(data, mu, sigma);
  for (Eigen::Index i = 0; i < sigma.rows(); ++i)
    for (Eigen::Index j = 0; j < sigma.cols(); ++j)
      for (const cplx dir : {cplx(1, 0), cplx(0, 1)}) {
        MatC a = sigma, b = sigma;
        a(i, j) += step * dir;
        b(i, j) -= step * dir;
        const double fd = (covariance_objective(data, mu, a) - covariance_objective(data, mu, b)) / (2.0 * step);
        const double an = 2.0 * (std::conj(G(i, j)) * dir).real();
        worst = std::max(worst, std::abs(fd - an));
      }
  return worst;
}

}  // namespace hetcov
