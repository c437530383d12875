// voicegate/hmm.hpp

// Copyright 2026  The voicegate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "voicegate/error.hpp"
#include "voicegate/frontend.hpp"
#include "voicegate/matrix.hpp"
#include "voicegate/util.hpp"

namespace voicegate {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Variances never drop below this, whatever the data-relative floor says.
inline constexpr double kAbsoluteVarFloor = 1e-6;
/// Components with less total posterior occupancy than this keep their
/// previous parameters during re-estimation.
inline constexpr double kMinOccupancy = 1e-6;
/// Smallest weight a starved component is allowed before renormalization.
inline constexpr double kMinMixtureWeight = 1e-8;

enum class Topology { LeftToRight, Ergodic };

inline std::string_view to_string(Topology t) {
  return t == Topology::LeftToRight ? "left_to_right" : "ergodic";
}

inline Topology parse_topology(std::string_view s) {
  if (s == "left_to_right") return Topology::LeftToRight;
  if (s == "ergodic") return Topology::Ergodic;
  throw Error(ErrorCode::InvalidConfig, "unknown topology '" + std::string(s) + "'");
}

/// Diagonal-covariance Gaussian with its mixture weight.
struct GaussianComponent {
  std::vector<double> mean;
  std::vector<double> var;
  double weight = 1.0;

  friend bool operator==(const GaussianComponent &, const GaussianComponent &) = default;
};

using Mixture = std::vector<GaussianComponent>;

struct GmmHmm {
  Topology topology = Topology::Ergodic;
  std::size_t dim = 0;
  std::vector<double> pi;
  Matrix trans;
  std::vector<Mixture> states;
  /// Per-dimension lower bound applied to every variance.
  std::vector<double> var_floor;

  std::size_t n_states() const noexcept { return states.size(); }

  friend bool operator==(const GmmHmm &, const GmmHmm &) = default;
};

struct TrainConfig {
  int n_states = 1;
  int n_mix = 8;
  Topology topology = Topology::Ergodic;
  int max_iters = 20;
  double rel_tol = 1e-4;
  double var_floor_ratio = 1e-3;
  std::uint64_t seed = 7;

  /// One state, eight components: a plain GMM, for text-independent use.
  static TrainConfig text_independent() { return {}; }

  /// Five left-to-right states with two components each.
  static TrainConfig isolated_word() {
    TrainConfig c;
    c.n_states = 5;
    c.n_mix = 2;
    c.topology = Topology::LeftToRight;
    return c;
  }

  void validate() const {
    if (n_states < 1 || n_mix < 1)
      throw Error(ErrorCode::InvalidConfig, "n_states and n_mix must be >= 1");
    if (max_iters < 1) throw Error(ErrorCode::InvalidConfig, "max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "rel_tol must be > 0");
    if (!(var_floor_ratio > 0.0))
      throw Error(ErrorCode::InvalidConfig, "var_floor_ratio must be > 0");
  }

  friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

/// Whether the topology permits a transition i -> j.
inline bool arc_allowed(Topology topology, std::size_t i, std::size_t j) {
  return topology == Topology::Ergodic || j == i || j == i + 1;
}

/// First violated model invariant, or nullopt. `tol` bounds the
/// sum-to-one checks.
inline std::optional<std::string> find_invariant_violation(const GmmHmm &m, double tol = 1e-9) {
  const std::size_t n = m.n_states();
  if (n == 0) return "model has no states";
  if (m.dim == 0) return "model has zero dimension";
  if (m.pi.size() != n) return "pi has wrong length";
  if (m.trans.rows() != n || m.trans.cols() != n) return "transition matrix has wrong shape";
  if (m.var_floor.size() != m.dim) return "var_floor has wrong length";
  for (double f : m.var_floor)
    if (!(f > 0.0) || !std::isfinite(f)) return "var_floor entries must be positive";

  double pi_sum = 0.0;
  for (double p : m.pi) {
    if (!(p >= 0.0) || !std::isfinite(p)) return "pi entry out of range";
    pi_sum += p;
  }
  if (std::abs(pi_sum - 1.0) > tol) return "pi sums to " + format_exact(pi_sum);
  if (m.topology == Topology::LeftToRight)
    for (std::size_t j = 1; j < n; ++j)
      if (m.pi[j] != 0.0) return "left-to-right model must start in state 0";

  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = m.trans(i, j);
      if (!(a >= 0.0) || !std::isfinite(a)) return "transition entry out of range";
      if (!arc_allowed(m.topology, i, j) && a != 0.0)
        return "transition " + std::to_string(i) + "->" + std::to_string(j) +
               " forbidden by topology";
      row += a;
    }
    if (std::abs(row - 1.0) > tol)
      return "transition row " + std::to_string(i) + " sums to " + format_exact(row);
  }

  for (std::size_t s = 0; s < n; ++s) {
    const Mixture &mix = m.states[s];
    if (mix.empty()) return "state " + std::to_string(s) + " has no components";
    double w_sum = 0.0;
    for (const auto &g : mix) {
      if (!(g.weight > 0.0) || !std::isfinite(g.weight)) return "mixture weight must be > 0";
      if (g.mean.size() != m.dim || g.var.size() != m.dim)
        return "component dimension mismatch";
      for (std::size_t d = 0; d < m.dim; ++d) {
        if (!std::isfinite(g.mean[d])) return "non-finite mean";
        if (!std::isfinite(g.var[d]) || g.var[d] < m.var_floor[d])
          return "variance below floor";
      }
      w_sum += g.weight;
    }
    if (std::abs(w_sum - 1.0) > tol)
      return "state " + std::to_string(s) + " weights sum to " + format_exact(w_sum);
  }
  return std::nullopt;
}

namespace detail {

inline double log_sum_exp(std::span<const double> v) {
  double hi = kLogZero;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kLogZero) return kLogZero;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

inline double component_log_density(std::span<const double> x, const GaussianComponent &g) {
  double quad = 0.0, log_det = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - g.mean[d];
    quad += diff * diff / g.var[d];
    log_det += std::log(g.var[d]);
  }
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + log_det +
                 quad);
}

inline void check_dims(const GmmHmm &model, const FeatureSequence &seq) {
  if (seq.size() == 0) throw Error(ErrorCode::EmptySequence, "sequence has no frames");
  if (seq.dim() != model.dim)
    throw Error(ErrorCode::DimensionMismatch, "features have dim " + std::to_string(seq.dim()) +
                                                  ", model expects " + std::to_string(model.dim));
}

inline Matrix log_transitions(const GmmHmm &model) {
  const std::size_t n = model.n_states();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = safe_log(model.trans(i, j));
  return out;
}

}  // namespace detail

/// log sum_m w_m N(x; mu_m, diag(var_m)).
inline double gmm_log_density(std::span<const double> x, const Mixture &mixture) {
  if (mixture.empty()) throw Error(ErrorCode::DimensionMismatch, "empty mixture");
  std::vector<double> terms;
  terms.reserve(mixture.size());
  for (const auto &g : mixture) {
    if (g.mean.size() != x.size() || g.var.size() != x.size())
      throw Error(ErrorCode::DimensionMismatch,
                  "x has dim " + std::to_string(x.size()) + ", component has " +
                      std::to_string(g.mean.size()));
    terms.push_back(detail::safe_log(g.weight) + detail::component_log_density(x, g));
  }
  return detail::log_sum_exp(terms);
}

/// T x N matrix of per-state emission log densities.
inline Matrix emission_log_densities(const GmmHmm &model, const FeatureSequence &seq) {
  detail::check_dims(model, seq);
  Matrix out(seq.size(), model.n_states());
  for (std::size_t t = 0; t < seq.size(); ++t)
    for (std::size_t j = 0; j < model.n_states(); ++j)
      out(t, j) = gmm_log_density(seq[t], model.states[j]);
  return out;
}

struct ForwardBackwardResult {
  double log_likelihood = kLogZero;
  Matrix log_alpha;     // T x N
  Matrix log_beta;      // T x N
  Matrix log_emission;  // T x N
};

/// Log-domain forward and backward recursions.
inline ForwardBackwardResult forward_backward(const GmmHmm &model, const FeatureSequence &seq) {
  ForwardBackwardResult r;
  r.log_emission = emission_log_densities(model, seq);
  const std::size_t t_count = seq.size(), n = model.n_states();
  const Matrix log_a = detail::log_transitions(model);
  std::vector<double> terms(n);

  r.log_alpha = Matrix(t_count, n, kLogZero);
  for (std::size_t j = 0; j < n; ++j)
    r.log_alpha(0, j) = detail::safe_log(model.pi[j]) + r.log_emission(0, j);
  for (std::size_t t = 1; t < t_count; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) terms[i] = r.log_alpha(t - 1, i) + log_a(i, j);
      const double prior = detail::log_sum_exp(terms);
      r.log_alpha(t, j) = prior == kLogZero ? kLogZero : prior + r.log_emission(t, j);
    }
  }

  r.log_beta = Matrix(t_count, n, 0.0);
  for (std::size_t t = t_count - 1; t-- > 0;) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j)
        terms[j] = log_a(i, j) + r.log_emission(t + 1, j) + r.log_beta(t + 1, j);
      r.log_beta(t, i) = detail::log_sum_exp(terms);
    }
  }

  r.log_likelihood = detail::log_sum_exp(r.log_alpha.row(t_count - 1));
  return r;
}

struct ViterbiResult {
  std::vector<std::size_t> path;
  double log_prob = kLogZero;
};

/// Most likely state sequence. Ties go to the lower state index, both for
/// the predecessor choice and for the final state.
inline ViterbiResult viterbi(const GmmHmm &model, const FeatureSequence &seq) {
  const Matrix log_b = emission_log_densities(model, seq);
  const Matrix log_a = detail::log_transitions(model);
  const std::size_t t_count = seq.size(), n = model.n_states();

  Matrix delta(t_count, n, kLogZero);
  std::vector<std::size_t> back(t_count * n, 0);
  for (std::size_t j = 0; j < n; ++j) delta(0, j) = detail::safe_log(model.pi[j]) + log_b(0, j);

  for (std::size_t t = 1; t < t_count; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      double best = kLogZero;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double cand = delta(t - 1, i) + log_a(i, j);
        if (cand > best) {
          best = cand;
          arg = i;
        }
      }
      delta(t, j) = best == kLogZero ? kLogZero : best + log_b(t, j);
      back[t * n + j] = arg;
    }
  }

  ViterbiResult r;
  std::size_t state = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (delta(t_count - 1, j) > r.log_prob) {
      r.log_prob = delta(t_count - 1, j);
      state = j;
    }
  }
  r.path.assign(t_count, 0);
  for (std::size_t t = t_count; t-- > 0;) {
    r.path[t] = state;
    if (t > 0) state = back[t * n + state];
  }
  return r;
}

struct KMeansResult {
  Matrix centroids;                     // k x D
  std::vector<std::size_t> assignment;  // one cluster index per point
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Stops when no assignment
/// changes or after max_iters passes. Distance ties go to the lower index.
inline KMeansResult kmeans(const std::vector<std::span<const double>> &points, std::size_t k,
                           std::uint64_t seed, int max_iters = 50) {
  if (points.empty() || k == 0 || k > points.size())
    throw Error(ErrorCode::InsufficientData, "k-means needs 1 <= k <= #points");
  const std::size_t dim = points.front().size();
  std::mt19937_64 rng(seed);

  auto sq_dist = [dim](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
  };

  KMeansResult r;
  r.centroids = Matrix(k, dim);
  auto set_centroid = [&](std::size_t c, std::span<const double> p) {
    std::copy(p.begin(), p.end(), r.centroids.row(c).begin());
  };

  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  set_centroid(0, points[pick(rng)]);
  std::vector<double> nearest(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) nearest[i] = sq_dist(points[i], r.centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : nearest) total += d;
    std::size_t chosen = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (chosen = 0; chosen + 1 < points.size(); ++chosen) {
        if (u < nearest[chosen]) break;
        u -= nearest[chosen];
      }
      // Rounding can walk past the last positive-weight point.
      while (nearest[chosen] == 0.0 && chosen > 0) --chosen;
    } else {
      chosen = pick(rng);
    }
    set_centroid(c, points[chosen]);
    for (std::size_t i = 0; i < points.size(); ++i)
      nearest[i] = std::min(nearest[i], sq_dist(points[i], r.centroids.row(c)));
  }

  r.assignment.assign(points.size(), k);
  for (r.iterations = 0; r.iterations < max_iters; ++r.iterations) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = 0;
      double best_d = sq_dist(points[i], r.centroids.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double d = sq_dist(points[i], r.centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (r.assignment[i] != best) {
        r.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Matrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++counts[r.assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) sums(r.assignment[i], d) += points[i][d];
    }
    // Empty clusters keep their previous centroid.
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0)
        for (std::size_t d = 0; d < dim; ++d)
          r.centroids(c, d) = sums(c, d) / static_cast<double>(counts[c]);
  }
  return r;
}

namespace detail {

inline void check_training_set(const std::vector<FeatureSequence> &seqs) {
  if (seqs.empty()) throw Error(ErrorCode::InsufficientData, "no training sequences");
  const std::size_t dim = seqs.front().dim();
  if (dim == 0) throw Error(ErrorCode::InsufficientData, "zero-dimensional features");
  for (const auto &s : seqs) {
    if (s.size() == 0) throw Error(ErrorCode::EmptySequence, "training sequence has no frames");
    if (s.dim() != dim) throw Error(ErrorCode::DimensionMismatch, "training sequences differ in dim");
  }
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Uniform segmentation, per-state k-means, uniform transitions.
inline GmmHmm init_model(const std::vector<FeatureSequence> &seqs, const TrainConfig &cfg) {
  cfg.validate();
  detail::check_training_set(seqs);
  const std::size_t dim = seqs.front().dim();
  const auto n = static_cast<std::size_t>(cfg.n_states);
  const auto n_mix = static_cast<std::size_t>(cfg.n_mix);

  std::size_t total = 0;
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (const auto &s : seqs) {
    total += s.size();
    for (std::size_t t = 0; t < s.size(); ++t)
      for (std::size_t d = 0; d < dim; ++d) mean[d] += s[t][d];
  }
  if (total < n * n_mix)
    throw Error(ErrorCode::InsufficientData, std::to_string(total) + " frames for " +
                                                 std::to_string(n * n_mix) + " components");
  for (auto &m : mean) m /= static_cast<double>(total);
  for (const auto &s : seqs)
    for (std::size_t t = 0; t < s.size(); ++t)
      for (std::size_t d = 0; d < dim; ++d) var[d] += (s[t][d] - mean[d]) * (s[t][d] - mean[d]);

  GmmHmm model;
  model.topology = cfg.topology;
  model.dim = dim;
  model.var_floor.resize(dim);
  for (std::size_t d = 0; d < dim; ++d)
    model.var_floor[d] =
        std::max(cfg.var_floor_ratio * var[d] / static_cast<double>(total), kAbsoluteVarFloor);

  std::vector<std::vector<std::span<const double>>> by_state(n);
  for (const auto &s : seqs)
    for (std::size_t t = 0; t < s.size(); ++t) by_state[t * n / s.size()].push_back(s[t]);

  model.states.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto &pts = by_state[j];
    if (pts.size() < n_mix)
      throw Error(ErrorCode::InsufficientData,
                  "state " + std::to_string(j) + " has " + std::to_string(pts.size()) +
                      " frames for " + std::to_string(n_mix) + " components");
    const KMeansResult km = kmeans(pts, n_mix, detail::mix_seed(cfg.seed, j));

    std::vector<double> counts(n_mix, 0.0);
    Matrix sums(n_mix, dim), sq(n_mix, dim);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      counts[km.assignment[i]] += 1.0;
      for (std::size_t d = 0; d < dim; ++d) sums(km.assignment[i], d) += pts[i][d];
    }

    Mixture mix(n_mix);
    for (std::size_t m = 0; m < n_mix; ++m) {
      mix[m].mean.resize(dim);
      for (std::size_t d = 0; d < dim; ++d)
        mix[m].mean[d] = counts[m] > 0 ? sums(m, d) / counts[m] : km.centroids(m, d);
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::size_t m = km.assignment[i];
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = pts[i][d] - mix[m].mean[d];
        sq(m, d) += diff * diff;
      }
    }
    double weight_total = 0.0;
    for (std::size_t m = 0; m < n_mix; ++m) {
      mix[m].var.resize(dim);
      for (std::size_t d = 0; d < dim; ++d)
        mix[m].var[d] = std::max(counts[m] > 0 ? sq(m, d) / counts[m] : 0.0, model.var_floor[d]);
      // An empty cluster (duplicate points) still needs positive weight.
      mix[m].weight = std::max(counts[m], 1.0);
      weight_total += mix[m].weight;
    }
    for (auto &g : mix) g.weight /= weight_total;
    model.states[j] = std::move(mix);
  }

  model.trans = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double arcs = 0.0;
    for (std::size_t j = 0; j < n; ++j) arcs += arc_allowed(cfg.topology, i, j) ? 1.0 : 0.0;
    for (std::size_t j = 0; j < n; ++j)
      model.trans(i, j) = arc_allowed(cfg.topology, i, j) ? 1.0 / arcs : 0.0;
  }
  model.pi.assign(n, 0.0);
  if (cfg.topology == Topology::LeftToRight)
    model.pi[0] = 1.0;
  else
    std::fill(model.pi.begin(), model.pi.end(), 1.0 / static_cast<double>(n));
  return model;
}

struct UpdateResult {
  GmmHmm model;
  /// Total log-likelihood of the data under the input model.
  double log_likelihood = 0.0;
};

/// One Baum-Welch (EM) iteration over all sequences. Sequences are
/// accumulated in order, so the result does not depend on scheduling.
inline UpdateResult baum_welch_update(const GmmHmm &model, const std::vector<FeatureSequence> &seqs) {
  if (seqs.empty()) throw Error(ErrorCode::InsufficientData, "no training sequences");
  const std::size_t n = model.n_states(), dim = model.dim;
  const Matrix log_a = detail::log_transitions(model);

  std::size_t max_mix = 0;
  for (const auto &mix : model.states) max_mix = std::max(max_mix, mix.size());
  auto slot = [max_mix](std::size_t j, std::size_t m) { return j * max_mix + m; };

  std::vector<double> pi_acc(n, 0.0);
  Matrix trans_acc(n, n);
  std::vector<double> occ(n * max_mix, 0.0);
  Matrix mean_acc(n * max_mix, dim);
  // Component posteriors kept for the second (variance) pass.
  std::vector<Matrix> resp(seqs.size());

  double total_ll = 0.0;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const FeatureSequence &seq = seqs[s];
    const ForwardBackwardResult fb = forward_backward(model, seq);
    const double ll = fb.log_likelihood;
    if (!std::isfinite(ll))
      throw Error(ErrorCode::NumericalUnderflow,
                  "sequence " + std::to_string(s) + " has zero likelihood under the model");
    total_ll += ll;
    const std::size_t t_count = seq.size();

    for (std::size_t j = 0; j < n; ++j)
      pi_acc[j] += std::exp(fb.log_alpha(0, j) + fb.log_beta(0, j) - ll);

    for (std::size_t t = 0; t + 1 < t_count; ++t)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (log_a(i, j) != kLogZero)
            trans_acc(i, j) += std::exp(fb.log_alpha(t, i) + log_a(i, j) +
                                        fb.log_emission(t + 1, j) + fb.log_beta(t + 1, j) - ll);

    resp[s] = Matrix(t_count, n * max_mix);
    for (std::size_t t = 0; t < t_count; ++t) {
      const auto o = seq[t];
      for (std::size_t j = 0; j < n; ++j) {
        const double log_gamma = fb.log_alpha(t, j) + fb.log_beta(t, j) - ll;
        if (log_gamma == kLogZero) continue;
        for (std::size_t m = 0; m < model.states[j].size(); ++m) {
          const auto &g = model.states[j][m];
          const double r = std::exp(log_gamma + std::log(g.weight) +
                                    detail::component_log_density(o, g) - fb.log_emission(t, j));
          resp[s](t, slot(j, m)) = r;
          occ[slot(j, m)] += r;
          for (std::size_t d = 0; d < dim; ++d) mean_acc(slot(j, m), d) += r * o[d];
        }
      }
    }
  }

  UpdateResult out;
  out.log_likelihood = total_ll;
  GmmHmm &next = out.model;
  next = model;

  double pi_sum = 0.0;
  for (double p : pi_acc) pi_sum += p;
  for (std::size_t j = 0; j < n; ++j) next.pi[j] = pi_acc[j] / pi_sum;

  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += trans_acc(i, j);
    if (row > 0.0)
      for (std::size_t j = 0; j < n; ++j) next.trans(i, j) = trans_acc(i, j) / row;
  }

  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t m = 0; m < model.states[j].size(); ++m)
      if (occ[slot(j, m)] >= kMinOccupancy)
        for (std::size_t d = 0; d < dim; ++d)
          next.states[j][m].mean[d] = mean_acc(slot(j, m), d) / occ[slot(j, m)];

  Matrix var_acc(n * max_mix, dim);
  for (std::size_t s = 0; s < seqs.size(); ++s)
    for (std::size_t t = 0; t < seqs[s].size(); ++t) {
      const auto o = seqs[s][t];
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t m = 0; m < model.states[j].size(); ++m) {
          const double r = resp[s](t, slot(j, m));
          if (r == 0.0) continue;
          const auto &mu = next.states[j][m].mean;
          for (std::size_t d = 0; d < dim; ++d)
            var_acc(slot(j, m), d) += r * (o[d] - mu[d]) * (o[d] - mu[d]);
        }
    }

  for (std::size_t j = 0; j < n; ++j) {
    Mixture &mix = next.states[j];
    double state_occ = 0.0;
    for (std::size_t m = 0; m < mix.size(); ++m) state_occ += occ[slot(j, m)];
    if (state_occ < kMinOccupancy) continue;

    double w_sum = 0.0;
    for (std::size_t m = 0; m < mix.size(); ++m) {
      const double c = occ[slot(j, m)];
      if (c >= kMinOccupancy) {
        for (std::size_t d = 0; d < dim; ++d)
          mix[m].var[d] = std::max(var_acc(slot(j, m), d) / c, next.var_floor[d]);
      }
      mix[m].weight = std::max(c / state_occ, kMinMixtureWeight);
      w_sum += mix[m].weight;
    }
    for (auto &g : mix) g.weight /= w_sum;
  }
  return out;
}

struct TrainResult {
  GmmHmm model;
  /// history[i] is the data log-likelihood before the (i+1)-th update.
  std::vector<double> history;
};

/// init_model followed by Baum-Welch until the relative log-likelihood gain
/// drops below rel_tol or max_iters updates have run.
inline TrainResult train(const std::vector<FeatureSequence> &seqs, const TrainConfig &cfg) {
  TrainResult r;
  r.model = init_model(seqs, cfg);
  for (int it = 0; it < cfg.max_iters; ++it) {
    UpdateResult u = baum_welch_update(r.model, seqs);
    r.model = std::move(u.model);
    r.history.push_back(u.log_likelihood);
    if (r.history.size() >= 2) {
      const double prev = r.history[r.history.size() - 2];
      if ((u.log_likelihood - prev) / std::abs(prev) < cfg.rel_tol) break;
    }
  }
  return r;
}

}  // namespace voicegate
