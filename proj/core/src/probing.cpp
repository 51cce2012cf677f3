#include "gramsteer/probing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include "gramsteer/error.hpp"

namespace gramsteer {

namespace {

struct Objective {
  const Matrix& x;       // n x d
  const Matrix& onehot;  // n x k
  double l2;
  int k;
  int d;

  // theta = [vec(W) (k x d, column-major); b]
  double operator()(const Vector& theta, Vector& grad) const {
    const auto n = static_cast<double>(x.rows());
    Eigen::Map<const Matrix> w(theta.data(), k, d);
    Eigen::Map<const Vector> b(theta.data() + k * d, k);
    Matrix z = x * w.transpose();
    z.rowwise() += b.transpose();
    Vector zmax = z.rowwise().maxCoeff();
    z.colwise() -= zmax;
    Matrix p = z.array().exp();
    Vector norm = p.rowwise().sum();
    double loss = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      double lse = std::log(norm[i]);
      loss -= (onehot.row(i).array() * (z.row(i).array() - lse)).sum();
      p.row(i) /= norm[i];
    }
    loss = loss / n + 0.5 * l2 * w.squaredNorm();
    Matrix diff = (p - onehot) / n;
    grad.resize(theta.size());
    Eigen::Map<Matrix> gw(grad.data(), k, d);
    gw = diff.transpose() * x + l2 * w;
    Eigen::Map<Vector> gb(grad.data() + k * d, k);
    gb = diff.colwise().sum().transpose();
    return loss;
  }
};

struct LbfgsResult {
  int iterations = 0;
  bool converged = false;
};

template <typename F>
LbfgsResult lbfgs(const F& f, Vector& theta, double tol, int max_iter, int memory) {
  Vector g;
  double fx = f(theta, g);
  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  LbfgsResult res;
  for (int it = 0; it < max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < tol) {
      res.converged = true;
      res.iterations = it;
      return res;
    }
    // Two-loop recursion.
    Vector q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      auto ui = static_cast<std::size_t>(i);
      alpha[ui] = rho_hist[ui] * s_hist[ui].dot(q);
      q -= alpha[ui] * y_hist[ui];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    else gamma = 1.0 / std::max(1.0, g.norm());
    Vector r = gamma * q;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      double beta = rho_hist[i] * y_hist[i].dot(r);
      r += s_hist[i] * (alpha[i] - beta);
    }
    Vector dir = -r;
    double slope = g.dot(dir);
    if (slope >= 0) {
      dir = -g;
      slope = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    // Backtracking line search with the Armijo condition.
    double step = 1.0;
    Vector next, g_next;
    double f_next = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      next = theta + step * dir;
      f_next = f(next, g_next);
      if (f_next <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.iterations = it;
      return res;
    }
    Vector s = next - theta;
    Vector y = g_next - g;
    double sy = s.dot(y);
    if (sy > 1e-12) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta = std::move(next);
    g = std::move(g_next);
    fx = f_next;
  }
  res.iterations = max_iter;
  res.converged = g.lpNorm<Eigen::Infinity>() < tol;
  return res;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::uint64_t state = seed;
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(state, i)]);
  return idx;
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace

std::vector<int> Probe::predict_indices(const Matrix& centered) const {
  Matrix z = centered * weights.transpose();
  z.rowwise() += bias.transpose();
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < z.cols(); ++c)
      if (z(i, c) > z(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<std::string> Probe::predict(const Matrix& centered) const {
  std::vector<std::string> out;
  for (int i : predict_indices(centered)) out.push_back(classes[static_cast<std::size_t>(i)]);
  return out;
}

std::string Probe::predict_one(const Vector& raw) const {
  Matrix row = centering.apply(raw).transpose();
  return predict(row).front();
}

Probe train_probe(const Matrix& centered, const std::vector<std::string>& labels,
                  const ProbeOptions& options, std::vector<std::string> classes) {
  if (static_cast<std::size_t>(centered.rows()) != labels.size())
    throw ContractError("feature rows and labels differ in count");
  if (labels.empty()) throw DegenerateTargetError("no training samples");
  if (classes.empty()) {
    std::set<std::string> uniq(labels.begin(), labels.end());
    classes.assign(uniq.begin(), uniq.end());
  }
  std::set<std::string> present(labels.begin(), labels.end());
  if (present.size() < 2)
    throw DegenerateTargetError("probe target has a single class: " + *present.begin());
  const int k = static_cast<int>(classes.size());
  const int d = static_cast<int>(centered.cols());
  Matrix onehot = Matrix::Zero(centered.rows(), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::find(classes.begin(), classes.end(), labels[i]);
    if (it == classes.end()) throw LabelError("label '" + labels[i] + "' not among probe classes");
    onehot(static_cast<Eigen::Index>(i), it - classes.begin()) = 1.0;
  }
  Objective obj{centered, onehot, options.l2, k, d};
  Vector theta = Vector::Zero(k * d + k);
  auto res = lbfgs(obj, theta, options.tolerance, options.max_iterations, options.memory);
  Probe p;
  p.weights = Eigen::Map<const Matrix>(theta.data(), k, d);
  p.bias = theta.tail(k);
  p.classes = std::move(classes);
  p.iterations = res.iterations;
  p.converged = res.converged;
  return p;
}

ProbeReport f1_report(const std::vector<std::string>& truth,
                      const std::vector<std::string>& predicted) {
  if (truth.size() != predicted.size()) throw ContractError("truth and predictions differ in size");
  ProbeReport r;
  std::set<std::string> cls(truth.begin(), truth.end());
  cls.insert(predicted.begin(), predicted.end());
  r.classes.assign(cls.begin(), cls.end());
  for (std::size_t i = 0; i < truth.size(); ++i) ++r.confusion[truth[i]][predicted[i]];
  double total = 0.0;
  for (const auto& c : r.classes) {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      bool t = truth[i] == c, p = predicted[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
      support += t;
    }
    double denom = 2.0 * static_cast<double>(tp) + static_cast<double>(fp + fn);
    double f1 = denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    r.f1[c] = f1;
    r.support[c] = support;
    total += f1;
  }
  r.macro_f1 = r.classes.empty() ? 0.0 : total / static_cast<double>(r.classes.size());
  return r;
}

ProbeReport evaluate_probe(const Probe& probe, const Matrix& raw_rows, int layer,
                           Aggregation strategy, const std::vector<std::string>& labels) {
  if (layer != probe.layer || strategy != probe.strategy)
    throw LayerMismatchError("features at L" + std::to_string(layer) + "/" +
                             std::string(to_string(strategy)) + " do not match probe at L" +
                             std::to_string(probe.layer) + "/" +
                             std::string(to_string(probe.strategy)));
  return f1_report(labels, probe.predict(probe.centering.apply_rows(raw_rows)));
}

Probe fit_probe_at(const Matrix& train_rows, const std::vector<std::string>& labels, int layer,
                   Aggregation strategy, const std::string& corpus_id,
                   const ProbeOptions& options, const std::vector<std::string>& classes) {
  auto centering = fit_centering_rows(train_rows, layer, strategy, corpus_id);
  Probe p = train_probe(centering.apply_rows(train_rows), labels, options, classes);
  p.layer = layer;
  p.strategy = strategy;
  p.centering = std::move(centering);
  return p;
}

SweepResult layer_sweep(const FeatureSet& train, const std::vector<std::string>& train_labels,
                        const FeatureSet* test, const std::vector<std::string>& test_labels,
                        LabelKind target, const std::vector<int>& layers,
                        const std::vector<Aggregation>& strategies, const ProbeOptions& options,
                        double holdout_fraction, std::uint64_t seed) {
  if (layers.empty() || strategies.empty()) throw ContractError("empty sweep grid");
  const std::size_t n = train_labels.size();
  auto perm = seeded_permutation(n, seed);
  auto n_hold = static_cast<std::size_t>(std::ceil(holdout_fraction * static_cast<double>(n)));
  n_hold = std::clamp<std::size_t>(n_hold, 1, n - 1);
  std::vector<std::size_t> hold(perm.begin(), perm.begin() + static_cast<long>(n_hold));
  std::vector<std::size_t> fit(perm.begin() + static_cast<long>(n_hold), perm.end());
  std::sort(hold.begin(), hold.end());
  std::sort(fit.begin(), fit.end());
  std::vector<std::string> fit_labels, hold_labels;
  for (auto i : fit) fit_labels.push_back(train_labels[i]);
  for (auto i : hold) hold_labels.push_back(train_labels[i]);
  auto classes = class_names(target);
  std::set<std::string> present(train_labels.begin(), train_labels.end());
  std::erase_if(classes, [&](const std::string& c) { return !present.count(c); });

  SweepResult res;
  res.target = target;
  double best_score = -1.0;
  for (int l : layers) {
    for (auto s : strategies) {
      const Matrix& rows = train.at(l, s);
      Probe p = fit_probe_at(take_rows(rows, fit), fit_labels, l, s, train.corpus_id + "/fit",
                             options, classes);
      SweepCell cell{l, s, evaluate_probe(p, take_rows(rows, hold), l, s, hold_labels).macro_f1,
                     -1.0};
      if (test) {
        Probe full = fit_probe_at(rows, train_labels, l, s, train.corpus_id, options, classes);
        cell.test_macro_f1 = evaluate_probe(full, test->at(l, s), l, s, test_labels).macro_f1;
      }
      if (cell.holdout_macro_f1 > best_score) {
        best_score = cell.holdout_macro_f1;
        res.best = res.cells.size();
      }
      res.cells.push_back(cell);
    }
  }
  const auto& bc = res.cells[res.best];
  res.best_probe =
      fit_probe_at(train.at(bc.layer, bc.strategy), train_labels, bc.layer, bc.strategy,
                   train.corpus_id, options, classes);
  if (test)
    res.best_test_report = evaluate_probe(res.best_probe, test->at(bc.layer, bc.strategy),
                                          bc.layer, bc.strategy, test_labels);
  return res;
}

SweepResult layer_sweep(const CausalModel& model, const LabeledCorpus& train,
                        const LabeledCorpus* test, LabelKind target,
                        const std::vector<Aggregation>& strategies, const ProbeOptions& options,
                        double holdout_fraction, std::uint64_t seed) {
  std::vector<int> layers(static_cast<std::size_t>(model.layer_count()) + 1);
  std::iota(layers.begin(), layers.end(), 0);
  auto ftrain = extract_features(model, train, layers, strategies);
  FeatureSet ftest;
  if (test) ftest = extract_features(model, *test, layers, strategies);
  return layer_sweep(ftrain, train.labels(target), test ? &ftest : nullptr,
                     test ? test->labels(target) : std::vector<std::string>{}, target, layers,
                     strategies, options, holdout_fraction, seed);
}

std::string label_with(const Probe& probe, const LayerActivations& acts) {
  return probe.predict_one(aggregate(acts, probe.layer, probe.strategy).vector);
}

OutputLabels label_output(const std::string& text, const Probe& tense_probe,
                          const Probe& aspect_probe, const CausalModel& model) {
  if (text.find_first_not_of(" \t\n") == std::string::npos) return {};
  auto acts = capture(model, text);
  return {label_with(tense_probe, acts), label_with(aspect_probe, acts)};
}

}  // namespace gramsteer
