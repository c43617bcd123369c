#pragma once

// Discriminant analysis with plug-in (classical or MCD) group moments and
// trimmed k-means clustering.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>
#include <vector>

#include "robust/covariance.hpp"
#include "robust/error.hpp"
#include "robust/linalg.hpp"
#include "robust/random.hpp"

namespace robust {

struct GroupedData {
  MatrixXd X;
  std::vector<int> labels;
};

enum class DiscriminantKind { qda, lda };
enum class MomentEstimator { classical, mcd };

inline const char* to_string(DiscriminantKind k) { return k == DiscriminantKind::qda ? "qda" : "lda"; }
inline const char* to_string(MomentEstimator e) {
  return e == MomentEstimator::classical ? "classical" : "mcd";
}

struct DiscriminantModel {
  DiscriminantKind kind = DiscriminantKind::qda;
  MomentEstimator estimator = MomentEstimator::mcd;
  std::vector<int> groups;  // label of group j, ascending
  std::vector<Index> sizes;
  std::vector<VectorXd> mu;
  std::vector<MatrixXd> sigma;
  MatrixXd pooled;
  std::vector<double> priors;
};

struct DiscriminantOptions {
  MomentEstimator estimator = MomentEstimator::mcd;
  double h_frac = 0.0;          // 0 selects the MCD default per group
  std::vector<double> priors;   // empty: group-size shares
  int n_starts = 500;
  std::uint64_t seed = 0;
  bool reweight = true;
};

/// Per-group centers and scatters; LDA adds the pooled scatter with weights
/// (n_j - 1) / (n - J).
inline DiscriminantModel train_discriminant(const GroupedData& data, DiscriminantKind kind,
                                            const DiscriminantOptions& opt = {}) {
  const Index n = data.X.rows(), d = data.X.cols();
  if (static_cast<Index>(data.labels.size()) != n) {
    std::ostringstream os;
    os << "train_discriminant: " << data.labels.size() << " labels for " << n << " rows";
    throw InputError(os.str());
  }
  check_finite(data.X, "train_discriminant");
  std::map<int, Subset> members;
  for (Index i = 0; i < n; ++i) members[data.labels[static_cast<std::size_t>(i)]].push_back(i);
  if (members.size() < 2) throw InputError("train_discriminant: need at least two groups");
  if (!opt.priors.empty() && opt.priors.size() != members.size())
    throw InputError("train_discriminant: number of priors does not match number of groups");
  if (opt.h_frac != 0.0 && !(opt.h_frac >= 0.5 && opt.h_frac <= 1.0))
    throw InputError("train_discriminant: h_frac must lie in [0.5, 1]");

  DiscriminantModel model;
  model.kind = kind;
  model.estimator = opt.estimator;
  const Index J = static_cast<Index>(members.size());
  model.pooled = MatrixXd::Zero(d, d);
  double prior_sum = 0.0;
  std::size_t j = 0;
  for (const auto& [label, rows] : members) {
    const Index nj = static_cast<Index>(rows.size());
    if (nj < d + 2) {
      std::ostringstream os;
      os << "train_discriminant: group " << label << " has " << nj << " members, need " << d + 2;
      throw InputError(os.str());
    }
    MatrixXd Xj(nj, d);
    for (Index i = 0; i < nj; ++i) Xj.row(i) = data.X.row(rows[static_cast<std::size_t>(i)]);
    LocationScatter ls;
    if (opt.estimator == MomentEstimator::classical) {
      ls = classical_moments(Xj);
    } else {
      McdOptions mo;
      mo.n_starts = opt.n_starts;
      mo.seed = opt.seed + j;
      mo.reweight = opt.reweight;
      if (opt.h_frac > 0.0)
        mo.h = std::max<Index>(d + 1, static_cast<Index>(std::floor(opt.h_frac * static_cast<double>(nj))));
      ls = fast_mcd(Xj, mo);
    }
    if (ls.exact_fit) {
      std::ostringstream os;
      os << "train_discriminant: scatter of group " << label << " is singular";
      throw DegenerateError(os.str());
    }
    model.groups.push_back(label);
    model.sizes.push_back(nj);
    model.mu.push_back(ls.center);
    model.sigma.push_back(ls.scatter);
    model.pooled += (static_cast<double>(nj - 1) / static_cast<double>(n - J)) * ls.scatter;
    const double p = opt.priors.empty() ? static_cast<double>(nj) / static_cast<double>(n) : opt.priors[j];
    if (!(p > 0.0)) throw InputError("train_discriminant: priors must be positive");
    model.priors.push_back(p);
    prior_sum += p;
    ++j;
  }
  for (auto& p : model.priors) p /= prior_sum;
  if (kind == DiscriminantKind::lda && spectral_info(model.pooled).singular)
    throw DegenerateError("train_discriminant: pooled scatter is singular");
  return model;
}

/// Quadratic scores -1/2 ln|S_j| - 1/2 (x - mu_j)' S_j^-1 (x - mu_j) + ln p_j,
/// one row per case, one column per group.
inline MatrixXd qda_scores(const DiscriminantModel& model, const MatrixXd& X) {
  const Index J = static_cast<Index>(model.mu.size());
  MatrixXd S(X.rows(), J);
  for (Index j = 0; j < J; ++j) {
    const auto& sig = model.sigma[static_cast<std::size_t>(j)];
    const auto info = spectral_info(sig);
    if (info.singular) throw DegenerateError("qda_scores: singular group scatter");
    const VectorXd md2 = squared_distances(X, model.mu[static_cast<std::size_t>(j)], sig);
    S.col(j) = (-0.5 * info.log_det + std::log(model.priors[static_cast<std::size_t>(j)])) -
               0.5 * md2.array();
  }
  return S;
}

/// Linear scores mu_j' S^-1 x - 1/2 mu_j' S^-1 mu_j + ln p_j with the pooled S.
inline MatrixXd lda_scores(const DiscriminantModel& model, const MatrixXd& X) {
  Eigen::LLT<MatrixXd> llt(model.pooled);
  if (llt.info() != Eigen::Success || spectral_info(model.pooled).singular)
    throw DegenerateError("lda_scores: singular pooled scatter");
  const Index J = static_cast<Index>(model.mu.size());
  MatrixXd S(X.rows(), J);
  for (Index j = 0; j < J; ++j) {
    const VectorXd& mu = model.mu[static_cast<std::size_t>(j)];
    const VectorXd a = llt.solve(mu);
    S.col(j) = (X * a).array() + (-0.5 * mu.dot(a) + std::log(model.priors[static_cast<std::size_t>(j)]));
  }
  return S;
}

struct Classification {
  std::vector<int> labels;
  std::vector<Index> group;  // index into model.groups
  std::vector<bool> tied;    // top score shared by several groups
  MatrixXd scores;
};

/// Argmax of the model's scores; ties go to the smallest group index.
inline Classification classify_scores(const DiscriminantModel& model, const MatrixXd& scores) {
  Classification out;
  out.scores = scores;
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    bool tie = false;
    for (Index j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, best)) {
        best = j;
        tie = false;
      } else if (scores(i, j) == scores(i, best)) {
        tie = true;
      }
    }
    out.group.push_back(best);
    out.labels.push_back(model.groups[static_cast<std::size_t>(best)]);
    out.tied.push_back(tie);
  }
  return out;
}

inline Classification classify(const DiscriminantModel& model, const MatrixXd& X) {
  require(X.cols() == static_cast<Index>(model.mu.front().size()), "classify: dimension mismatch");
  return classify_scores(model, model.kind == DiscriminantKind::qda ? qda_scores(model, X)
                                                                    : lda_scores(model, X));
}

// ---------------------------------------------------------------------------
// Trimmed k-means

struct ClusterResult {
  Index k = 0;
  MatrixXd centers;             // k x d
  std::vector<int> assignment;  // 0..k-1, or -1 when trimmed
  Index h = 0;
  double objective = 0.0;
};

struct TkmeansOptions {
  Index h = 0;  // 0 selects ceil(0.9 n)
  int n_starts = 100;
  std::uint64_t seed = 0;
  int max_iter = 100;
};

/// Sum over assigned cases of the squared distance to their center.
inline double tkmeans_objective(const MatrixXd& X, const MatrixXd& centers,
                                const std::vector<int>& assignment) {
  double s = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    const int a = assignment[static_cast<std::size_t>(i)];
    if (a >= 0) s += (X.row(i) - centers.row(a)).squaredNorm();
  }
  return s;
}

struct TkmeansStep {
  MatrixXd centers;
  std::vector<int> assignment;
  double objective = 0.0;
  bool empty_cluster = false;
};

/// One concentration step: nearest center for every case (lowest index on
/// ties), keep the h nearest cases, recompute the group means.
inline TkmeansStep tkmeans_c_step(const MatrixXd& X, const MatrixXd& centers, Index h) {
  const Index n = X.rows(), k = centers.rows();
  VectorXd dist2(n);
  std::vector<int> nearest(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    int best = 0;
    double bd = (X.row(i) - centers.row(0)).squaredNorm();
    for (Index c = 1; c < k; ++c) {
      const double dc = (X.row(i) - centers.row(c)).squaredNorm();
      if (dc < bd) {
        bd = dc;
        best = static_cast<int>(c);
      }
    }
    dist2(i) = bd;
    nearest[static_cast<std::size_t>(i)] = best;
  }
  TkmeansStep step;
  step.assignment.assign(static_cast<std::size_t>(n), -1);
  for (Index i : smallest_indices(dist2, h))
    step.assignment[static_cast<std::size_t>(i)] = nearest[static_cast<std::size_t>(i)];
  step.centers = MatrixXd::Zero(k, X.cols());
  std::vector<Index> count(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < n; ++i) {
    const int a = step.assignment[static_cast<std::size_t>(i)];
    if (a < 0) continue;
    step.centers.row(a) += X.row(i);
    ++count[static_cast<std::size_t>(a)];
  }
  for (Index c = 0; c < k; ++c) {
    if (count[static_cast<std::size_t>(c)] == 0) {
      step.empty_cluster = true;
      step.centers.row(c) = centers.row(c);
    } else {
      step.centers.row(c) /= static_cast<double>(count[static_cast<std::size_t>(c)]);
    }
  }
  step.objective = tkmeans_objective(X, step.centers, step.assignment);
  return step;
}

namespace detail {

// Clusters relabeled by their smallest member index so equal partitions
// compare equal regardless of start.
inline void canonical_labels(TkmeansStep& s, Index k) {
  std::vector<int> map(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int& a : s.assignment) {
    if (a < 0) continue;
    if (map[static_cast<std::size_t>(a)] < 0) map[static_cast<std::size_t>(a)] = next++;
    a = map[static_cast<std::size_t>(a)];
  }
  MatrixXd c(s.centers.rows(), s.centers.cols());
  for (Index j = 0; j < k; ++j)
    if (map[static_cast<std::size_t>(j)] >= 0) c.row(map[static_cast<std::size_t>(j)]) = s.centers.row(j);
  s.centers = c;
}

inline bool tk_less(const TkmeansStep& a, const TkmeansStep& b) {
  return std::tie(a.objective, a.assignment) < std::tie(b.objective, b.assignment);
}

}  // namespace detail

/// Trimmed k-means: best of n_starts runs of concentration steps from k
/// random cases as centers. A start whose clusters empty out is redrawn.
inline ClusterResult trimmed_kmeans(const MatrixXd& X, Index k, const TkmeansOptions& opt = {}) {
  const Index n = X.rows(), d = X.cols();
  check_finite(X, "trimmed_kmeans");
  require(k >= 1, "trimmed_kmeans: k must be positive");
  const Index h = opt.h > 0 ? opt.h : static_cast<Index>(std::ceil(0.9 * static_cast<double>(n)));
  if (k * (d + 1) > h || h > n) {
    std::ostringstream os;
    os << "trimmed_kmeans: h=" << h << " outside [" << k * (d + 1) << ", " << n << "]";
    throw InputError(os.str());
  }
  require(opt.n_starts >= 1, "trimmed_kmeans: n_starts must be positive");

  std::vector<std::optional<TkmeansStep>> runs(static_cast<std::size_t>(opt.n_starts));
  parallel_for(runs.size(), [&](std::size_t s) {
    Rng rng = make_stream(opt.seed, s);
    for (int attempt = 0; attempt < 10; ++attempt) {
      const auto pick = sample_without_replacement(rng, static_cast<std::size_t>(n), static_cast<std::size_t>(k));
      MatrixXd centers(k, d);
      for (Index c = 0; c < k; ++c) centers.row(c) = X.row(static_cast<Index>(pick[static_cast<std::size_t>(c)]));
      TkmeansStep cur = tkmeans_c_step(X, centers, h);
      bool empty = cur.empty_cluster;
      for (int it = 1; it < opt.max_iter && !empty; ++it) {
        TkmeansStep next = tkmeans_c_step(X, cur.centers, h);
        if (next.empty_cluster) {
          empty = true;
          break;
        }
        if (next.assignment == cur.assignment || !(next.objective < cur.objective)) break;
        cur = std::move(next);
      }
      if (empty) continue;
      detail::canonical_labels(cur, k);
      runs[s] = std::move(cur);
      return;
    }
  });
  const TkmeansStep* best = nullptr;
  for (const auto& r : runs)
    if (r && (!best || detail::tk_less(*r, *best))) best = &*r;
  if (!best) throw ConvergenceError("trimmed_kmeans: every start produced an empty cluster");

  ClusterResult out;
  out.k = k;
  out.h = h;
  out.centers = best->centers;
  out.assignment = best->assignment;
  out.objective = best->objective;
  return out;
}

}  // namespace robust
