#include "dpcd/optimizer.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "dpcd/geometry.h"
#include "dpcd/parallel.h"

namespace dpcd {

std::string CountRule::to_string(char base_symbol) const {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  std::string out(buf, res.ptr);
  if (relative) out += base_symbol;
  return out;
}

CountRule CountRule::parse(const std::string& text, char base_symbol) {
  std::string body = text;
  CountRule rule;
  rule.relative = !body.empty() && body.back() == base_symbol;
  if (rule.relative) body.pop_back();
  std::size_t used = 0;
  try {
    rule.value = std::stod(body, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (body.empty() || used != body.size() || !std::isfinite(rule.value)) {
    throw PreconditionError("cannot parse count '" + text + "'");
  }
  return rule;
}

void DenoiseConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw PreconditionError(what);
  };
  require(K >= 1, "K must be at least 1");
  require(M.value > 0.0, "M must be positive");
  require(K_s >= 1, "K_s must be at least 1");
  require(xi >= 1, "xi must be at least 1");
  require(c > 0.0, "c must be positive");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  require(lambda1 >= 0.0 && lambda2 >= 0.0, "lambda1 and lambda2 must be non-negative");
  require(M_prime.value > 0.0, "M_prime must be positive");
  require(!M_prime.relative || M_prime.value <= 1.0, "M_prime must not exceed M");
  require(C > 0.0, "C must be positive");
  require(cg_tol > 0.0 && pg_tol > 0.0 && outer_tol > 0.0, "tolerances must be positive");
  require(pg_step > 0.0, "pg_step must be positive");
  require(cg_max_iters >= 1 && pg_max_iters >= 0 && outer_max_iters >= 1,
          "iteration caps must be positive");
  require(k_normal >= 3, "k_normal must be at least 3");
  require(threads >= 1, "threads must be at least 1");
}

namespace {

void check_system(const Points& u, const Points& u_hat, const FrameSystem& s) {
  if (u.rows() != u_hat.rows()) throw PreconditionError("U and U_hat differ in size");
  const Index rows = s.patches.row_count();
  if (s.centers.rows() != s.patches.patch_count()) {
    throw PreconditionError("center count does not match patch count");
  }
  if (s.spatial.node_count() != rows && !(rows == 0 && s.spatial.node_count() == 0)) {
    throw PreconditionError("spatial graph does not span the patch rows");
  }
  if (s.has_temporal()) {
    if (s.reference.rows() != rows || s.reference.cols() != 3) {
      throw PreconditionError("reference patches do not match the patch rows");
    }
    if (s.temporal_weights.size() != s.patches.patch_count()) {
      throw PreconditionError("temporal weights do not match the patch count");
    }
  }
  for (const Patch& p : s.patches.patches) {
    for (Index i : p.member_indices) {
      if (i < 0 || i >= u.rows()) throw PreconditionError("patch member out of range");
    }
  }
}

// Center coordinates repeated over each patch's rows (the matrix C).
Eigen::MatrixXd stacked_centers(const FrameSystem& s) {
  const Index ps = s.patches.patch_size();
  Eigen::MatrixXd c(s.patches.row_count(), 3);
  for (Index l = 0; l < s.patches.patch_count(); ++l) {
    c.middleRows(l * ps, ps).rowwise() = s.centers.row(l);
  }
  return c;
}

}  // namespace

ObjectiveBreakdown objective(const Points& u, const Points& u_hat,
                             const FrameSystem& system, double lambda1,
                             double lambda2) {
  check_system(u, u_hat, system);
  ObjectiveBreakdown out;
  out.fidelity = (u - u_hat).squaredNorm();
  const Eigen::MatrixXd p = system.patches.stacked_relative(u, system.centers);
  if (system.has_temporal()) {
    const Index ps = system.patches.patch_size();
    for (Index l = 0; l < system.patches.patch_count(); ++l) {
      out.temporal += system.temporal_weights[l] *
                      (p.middleRows(l * ps, ps) - system.reference.middleRows(l * ps, ps))
                          .squaredNorm();
    }
  }
  out.spatial = laplacian_quadratic_form(system.spatial, p);
  out.total = out.fidelity + lambda1 * out.temporal + lambda2 * out.spatial;
  return out;
}

Points solve_point_cloud(const Points& u_hat, const FrameSystem& system,
                         double lambda1, double lambda2, double cg_tol,
                         int cg_max_iters) {
  check_system(u_hat, u_hat, system);
  if (lambda1 < 0.0 || lambda2 < 0.0) throw PreconditionError("negative lambda");
  const bool temporal = lambda1 > 0.0 && system.has_temporal();
  if (temporal && ((system.temporal_weights.array() < 0.0).any() ||
                   (system.temporal_weights.array() > 1.0).any())) {
    throw PreconditionError("temporal weights must lie in [0, 1]");
  }
  if (!temporal && lambda2 == 0.0) return u_hat;

  const Index n = u_hat.rows();
  const PatchSet& ps = system.patches;
  const Eigen::MatrixXd c = stacked_centers(system);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n + ps.row_count() + 4 * system.spatial.edges().size()));
  for (Index i = 0; i < n; ++i) trips.emplace_back(i, i, 1.0);
  Eigen::MatrixXd rhs = u_hat;

  if (temporal) {
    for (Index row = 0; row < ps.row_count(); ++row) {
      const double w = lambda1 * system.temporal_weights[row / ps.patch_size()];
      if (w == 0.0) continue;
      const Index p = ps.point_of_row(row);
      trips.emplace_back(p, p, w);
      rhs.row(p) += w * (c.row(row) + system.reference.row(row));
    }
  }
  if (lambda2 > 0.0) {
    for (const Edge& e : system.spatial.edges()) {
      const double w = lambda2 * e.weight;
      if (w == 0.0) continue;
      const Index a = ps.point_of_row(e.i);
      const Index b = ps.point_of_row(e.j);
      trips.emplace_back(a, a, w);
      trips.emplace_back(b, b, w);
      trips.emplace_back(a, b, -w);
      trips.emplace_back(b, a, -w);
      const Eigen::RowVector3d dc = c.row(e.i) - c.row(e.j);
      rhs.row(a) += w * dc;
      rhs.row(b) -= w * dc;
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setMaxIterations(cg_max_iters);
  cg.setTolerance(0.5 * cg_tol);
  cg.compute(a);

  Points u(n, 3);
  for (int col = 0; col < 3; ++col) {
    const Eigen::VectorXd b = rhs.col(col);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
      u.col(col).setZero();
      continue;
    }
    Eigen::VectorXd x = cg.solveWithGuess(b, u_hat.col(col));
    const double residual = (a * x - b).norm() / bnorm;
    if (!(residual <= cg_tol)) {
      std::ostringstream os;
      os << "conjugate gradient stopped at relative residual " << residual
         << " after " << cg.iterations() << " iterations (column " << col << ")";
      throw SolverError(os.str(), residual);
    }
    u.col(col) = x;
  }
  return u;
}

Eigen::VectorXd solve_temporal_weights(const Eigen::VectorXd& d, double m_prime) {
  const Index m = d.size();
  if ((d.array() < 0.0).any() || !d.allFinite()) {
    throw PreconditionError("patch differences must be finite and non-negative");
  }
  if (!(m_prime > 0.0)) throw PreconditionError("M' must be positive");
  if (m_prime > static_cast<double>(m)) {
    throw PreconditionError("infeasible: M' exceeds the number of patches");
  }
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return d[a] < d[b]; });

  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  const double whole = std::floor(m_prime);
  const auto full = static_cast<Index>(whole);
  for (Index k = 0; k < full; ++k) w[order[k]] = 1.0;
  const double rest = m_prime - whole;
  if (rest > 0.0 && full < m) w[order[full]] = rest;
  return w;
}

double metric_objective(const std::vector<MetricPair>& pairs, const Matrix6d& r) {
  double sum = 0.0;
  for (const auto& p : pairs) {
    sum += std::exp(-(r * p.feature_diff).squaredNorm()) * p.weight;
  }
  return sum;
}

Matrix6d metric_gradient(const std::vector<MetricPair>& pairs, const Matrix6d& r) {
  if (pairs.empty()) return Matrix6d::Zero();
  // Sum_ij e_ij d_ij df df^T, then one product with R.
  Matrix6d scatter = Matrix6d::Zero();
  for (const auto& p : pairs) {
    const double s = std::exp(-(r * p.feature_diff).squaredNorm()) * p.weight;
    if (s == 0.0) continue;
    scatter.noalias() += s * p.feature_diff * p.feature_diff.transpose();
  }
  return -2.0 * r * scatter;
}

Matrix6d project_factor(const Matrix6d& r, double trace_bound) {
  Matrix6d g = r;
  for (int i = 0; i < 6; ++i) g(i, i) = std::max(g(i, i), 0.0);
  const double tr = g.trace();
  if (tr > trace_bound) {
    const double scale = trace_bound / tr;
    for (int i = 0; i < 6; ++i) g(i, i) *= scale;
  }
  return g;
}

MetricLearningResult learn_metric(const std::vector<MetricPair>& pairs,
                                  const MetricLearningOptions& options) {
  if (pairs.empty()) throw PreconditionError("metric learning needs at least one pair");
  if (!(options.trace_bound > 0.0)) throw PreconditionError("trace bound must be positive");
  if (!(options.step > 0.0)) throw PreconditionError("step size must be positive");

  MetricLearningResult res;
  Matrix6d r = Matrix6d::Identity() * (options.trace_bound / 6.0);
  double f = metric_objective(pairs, r);
  res.objective_trace.push_back(f);
  double step = options.step;
  int increases = 0;
  while (res.iterations < options.max_iters) {
    ++res.iterations;
    const Matrix6d next = project_factor(r - step * metric_gradient(pairs, r),
                                         options.trace_bound);
    const double f_next = metric_objective(pairs, next);
    if (f_next > f) {
      ++res.rejected_steps;
      if (++increases >= 3) {
        std::ostringstream os;
        os << "step size too large: objective rose three times in a row (trace:";
        for (double v : res.objective_trace) os << ' ' << v;
        os << ' ' << f_next << ')';
        throw SolverError(os.str(), f_next);
      }
      step *= 0.5;
      continue;
    }
    increases = 0;
    const double decrease = f - f_next;
    r = next;
    f = f_next;
    res.objective_trace.push_back(f);
    if (decrease <= options.tol * std::max(std::abs(f), 1e-300)) break;
  }
  res.factor = r;
  res.metric = r.transpose() * r;
  return res;
}

namespace {

struct Sizes {
  Index k;
  Index m;
  Index k_s;
};

Sizes sizes_for(Index n, const DenoiseConfig& config) {
  if (n < 2) throw PreconditionError("denoising needs at least two points");
  Sizes s;
  s.k = std::min<Index>(config.K, n - 1);
  const auto m = static_cast<Index>(std::llround(config.M.resolve(static_cast<double>(n))));
  s.m = std::clamp<Index>(m, 1, n);
  s.k_s = std::min<Index>(config.K_s, s.m - 1);
  return s;
}

Frame with_normals(const Frame& frame, const DenoiseConfig& config,
                   std::size_t* degenerate) {
  const int k_plane = static_cast<int>(std::min<Index>(config.k_normal, frame.size() - 1));
  if (k_plane < 3) {
    Frame out = frame;
    out.normals = Points(frame.size(), 3);
    out.normals->rowwise() = Eigen::RowVector3d(0.0, 0.0, 1.0);
    if (degenerate) *degenerate += static_cast<std::size_t>(frame.size());
    return out;
  }
  return estimate_normals(frame, k_plane, degenerate);
}

}  // namespace

MatchReference prepare_reference(const Frame& denoised_prev,
                                 const DenoiseConfig& config) {
  config.validate();
  const Sizes s = sizes_for(denoised_prev.size(), config);
  Frame ref = with_normals(denoised_prev, config, nullptr);
  PatchSet patches = build_patches(ref, s.m, s.k, config.seed);
  return MatchReference(std::move(ref), std::move(patches), config.c, config.threads);
}

FrameResult denoise_frame(const Frame& noisy, const MatchReference* reference,
                          const DenoiseConfig& config) {
  config.validate();
  noisy.validate();
  const Sizes sizes = sizes_for(noisy.size(), config);
  const bool temporal = reference != nullptr && config.lambda1 > 0.0;
  const double lambda1 = temporal ? config.lambda1 : 0.0;

  FrameResult result;
  Points anchor = noisy.positions;
  Points best = anchor;
  double best_total = std::numeric_limits<double>::infinity();
  double prev_total = std::numeric_limits<double>::infinity();

  for (int it = 0; it < config.outer_max_iters; ++it) {
    IterationRecord rec;
    try {
      Frame current;
      current.positions = anchor;
      current.frame_index = noisy.frame_index;
      current = with_normals(current, config, &rec.degenerate_normals);

      FrameSystem sys;
      sys.patches = build_patches(current, sizes.m, sizes.k, config.seed);
      sys.centers = sys.patches.centers(current.positions);
      const Index ps = sys.patches.patch_size();

      std::vector<TemporalMatch> matches;
      if (temporal) {
        const auto desc = describe_patches(sys.patches, current, config.c, config.threads);
        matches.resize(desc.size());
        parallel_for(sys.patches.patch_count(), config.threads, [&](Index l) {
          matches[l] = temporal_match(l, desc[l], sys.centers.row(l).transpose(),
                                      *reference, config.xi, config.alpha);
        });
        sys.reference = stacked_reference(matches, *reference, ps);
      }

      std::vector<RowPair> pairs;
      if (sizes.k_s >= 1) {
        pairs = spatial_connectivity(sys.patches, current.positions, sizes.k_s,
                                     config.threads);
      }
      const Eigen::MatrixXd features = row_features(sys.patches, current);

      if (it == 0) {
        if (temporal) sys.temporal_weights = temporal_weight_init(matches).w;
        sys.spatial = initial_spatial_weights(pairs, features);
        rec.trace_r = 6.0;
        rec.trace_m = 6.0;
      } else {
        const Eigen::MatrixXd p = sys.patches.stacked_relative(current.positions, sys.centers);
        if (temporal) {
          Eigen::VectorXd d(sys.patches.patch_count());
          for (Index l = 0; l < d.size(); ++l) {
            d[l] = (p.middleRows(l * ps, ps) - sys.reference.middleRows(l * ps, ps))
                       .squaredNorm();
          }
          const double m_prime = std::min(
              config.M_prime.resolve(static_cast<double>(d.size())),
              static_cast<double>(d.size()));
          sys.temporal_weights = solve_temporal_weights(d, m_prime);
        }
        if (pairs.empty()) {
          sys.spatial = initial_spatial_weights(pairs, features);
        } else {
          std::vector<MetricPair> mp;
          mp.reserve(pairs.size());
          for (const auto& [i, j] : pairs) {
            mp.push_back({(features.row(i) - features.row(j)).transpose(),
                          (p.row(i) - p.row(j)).squaredNorm()});
          }
          MetricLearningOptions opts;
          opts.trace_bound = config.C;
          opts.step = config.pg_step;
          opts.max_iters = config.pg_max_iters;
          opts.tol = config.pg_tol;
          const MetricLearningResult learned = learn_metric(mp, opts);
          rec.trace_r = learned.factor.trace();
          rec.trace_m = learned.metric.trace();
          sys.spatial = weighted_spatial_graph(pairs, features, learned.metric);
        }
      }
      rec.patch_count = sys.patches.patch_count();
      rec.spatial_edges = static_cast<Index>(sys.spatial.edges().size());

      const Points next = solve_point_cloud(anchor, sys, lambda1, config.lambda2,
                                            config.cg_tol, config.cg_max_iters);
      rec.objective = objective(next, anchor, sys, lambda1, config.lambda2);

      const double total = rec.objective.total;
      if (it > 0 && total > prev_total) {
        rec.accepted = false;
        result.trace.push_back(rec);
        break;
      }
      result.trace.push_back(rec);
      if (total < best_total) {
        best_total = total;
        best = next;
        result.best_iteration = result.trace.size() - 1;
      }
      const double decrease = prev_total - total;
      anchor = next;
      if (it > 0 && (prev_total <= 0.0 || decrease < config.outer_tol * prev_total)) break;
      prev_total = total;
    } catch (const SolverError& e) {
      throw SolverError("outer iteration " + std::to_string(it) + ": " + e.what(),
                        e.achieved());
    }
  }

  result.output.positions = std::move(best);
  result.output.frame_index = noisy.frame_index;
  return result;
}

SequenceResult denoise_sequence(const Sequence& noisy, const DenoiseConfig& config) {
  if (noisy.frames.empty()) throw PreconditionError("sequence has no frames");
  noisy.validate();
  SequenceResult out;
  out.denoised.name = noisy.name;
  out.denoised.units = noisy.units;
  std::optional<MatchReference> reference;
  for (const Frame& frame : noisy.frames) {
    FrameResult fr = denoise_frame(frame, reference ? &*reference : nullptr, config);
    if (config.lambda1 > 0.0) reference.emplace(prepare_reference(fr.output, config));
    out.denoised.frames.push_back(fr.output);
    out.frames.push_back(std::move(fr));
  }
  return out;
}

}  // namespace dpcd
