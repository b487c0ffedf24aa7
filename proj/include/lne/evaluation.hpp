#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lne/errors.hpp"
#include "lne/graph.hpp"
#include "lne/graph_io.hpp"
#include "lne/parallel.hpp"
#include "lne/random.hpp"
#include "lne/randsvd.hpp"
#include "lne/sparsifier.hpp"

namespace lne {

// ---------------------------------------------------------------------------
// Synthetic graphs

/// G(n, p) by geometric skipping over the lower triangle.
inline EdgeList erdos_renyi(std::uint64_t n, double p, std::uint64_t seed) {
  EdgeList out;
  out.n_hint = n;
  if (p <= 0 || n < 2) return out;
  StreamRng rng(substream(seed, "erdos_renyi"));
  if (p >= 1) {
    for (std::uint64_t v = 1; v < n; ++v)
      for (std::uint64_t w = 0; w < v; ++w) out.edges.emplace_back(w, v);
    return out;
  }
  const double lq = std::log1p(-p);
  std::int64_t v = 1, w = -1;
  const auto nn = static_cast<std::int64_t>(n);
  while (v < nn) {
    double r = rng.uniform();
    w += 1 + static_cast<std::int64_t>(std::floor(std::log1p(-r) / lq));
    while (w >= v && v < nn) {
      w -= v;
      ++v;
    }
    if (v < nn) out.edges.emplace_back(static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(v));
  }
  return out;
}

/// G(n, p) plus a uniform random recursive tree, so the result is connected.
inline EdgeList random_connected_graph(std::uint64_t n, double p, std::uint64_t seed) {
  EdgeList e = erdos_renyi(n, p, seed);
  StreamRng rng(substream(seed, "tree"));
  for (std::uint64_t v = 1; v < n; ++v) e.edges.emplace_back(rng.below(v), v);
  return normalize_edges(e);
}

struct Labels {
  std::uint32_t num_labels = 0;
  /// Per-vertex label ids; empty for unlabeled vertices.
  std::vector<std::vector<std::uint32_t>> of;
};

struct LabeledGraph {
  EdgeList edges;
  Labels labels;
};

/// Stochastic block model with equal-probability blocks; vertex labels are
/// block ids.
inline LabeledGraph stochastic_block_model(const std::vector<std::uint64_t>& block_sizes, double p_in,
                                           double p_out, std::uint64_t seed) {
  LabeledGraph out;
  std::vector<std::uint32_t> block;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) block.insert(block.end(), block_sizes[b], static_cast<std::uint32_t>(b));
  const std::uint64_t n = block.size();
  out.edges.n_hint = n;
  StreamRng rng(substream(seed, "sbm"));
  for (std::uint64_t u = 0; u < n; ++u) {
    for (std::uint64_t v = u + 1; v < n; ++v) {
      double p = block[u] == block[v] ? p_in : p_out;
      if (rng.uniform() < p) out.edges.edges.emplace_back(u, v);
    }
  }
  out.labels.num_labels = static_cast<std::uint32_t>(block_sizes.size());
  out.labels.of.resize(n);
  for (std::uint64_t u = 0; u < n; ++u) out.labels.of[u] = {block[u]};
  return out;
}

/// "node_id label_id" per line; repeated node ids carry multiple labels.
/// Label ids are compacted to 0..L-1 in ascending order.
inline Labels read_labels(std::istream& is, std::uint64_t n) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::uint64_t node, label;
    if (!(ls >> node >> label)) throw FormatError("labels line " + std::to_string(lineno) + ": expected \"node label\"");
    if (node >= n) throw FormatError("labels line " + std::to_string(lineno) + ": node id out of range");
    rows.emplace_back(node, label);
  }
  std::vector<std::uint64_t> ids;
  for (auto& r : rows) ids.push_back(r.second);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Labels out;
  out.num_labels = static_cast<std::uint32_t>(ids.size());
  out.of.resize(n);
  for (auto [node, label] : rows) {
    auto id = static_cast<std::uint32_t>(std::lower_bound(ids.begin(), ids.end(), label) - ids.begin());
    auto& l = out.of[node];
    if (std::find(l.begin(), l.end(), id) == l.end()) l.push_back(id);
  }
  for (auto& l : out.of) std::sort(l.begin(), l.end());
  return out;
}

inline Labels read_labels(const std::string& path, std::uint64_t n) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_labels(is, n);
}

// ---------------------------------------------------------------------------
// Oracles

inline bool is_connected(const Graph& g) {
  if (g.n() == 0) return true;
  std::vector<char> seen(g.n(), 0);
  std::queue<vertex_t> q;
  q.push(0);
  seen[0] = 1;
  std::uint64_t count = 1;
  while (!q.empty()) {
    vertex_t u = q.front();
    q.pop();
    g.for_each_neighbor(u, [&](vertex_t v) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
    });
  }
  return count == g.n();
}

inline Eigen::MatrixXd dense_adjacency(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.n());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::uint64_t u = 0; u < g.n(); ++u) {
    g.for_each_neighbor(static_cast<vertex_t>(u), [&](vertex_t v) { a(static_cast<Eigen::Index>(u), v) = 1.0; });
  }
  return a;
}

/// vol(G)/b * sum_r s_r (D^-1 A)^r D^-1 by dense products, then
/// max(0, ln .) entrywise unless `pre_log`.
inline Eigen::MatrixXd dense_netmf_oracle(const Graph& g, std::uint32_t T, const std::vector<double>& s, double b,
                                          bool pre_log = false) {
  if (g.n() > 2000) throw InvalidArgument("dense oracle limited to n <= 2000");
  if (s.size() != T) throw InvalidArgument("need T coefficients");
  const auto n = static_cast<Eigen::Index>(g.n());
  Eigen::MatrixXd a = dense_adjacency(g);
  Eigen::VectorXd dinv(n);
  for (Eigen::Index i = 0; i < n; ++i) dinv(i) = g.degree(static_cast<vertex_t>(i)) > 0 ? 1.0 / g.degree(static_cast<vertex_t>(i)) : 0.0;
  Eigen::MatrixXd p = dinv.asDiagonal() * a;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (std::uint32_t r = 1; r <= T; ++r) {
    power = power * p;
    acc += s[r - 1] * power;
  }
  Eigen::MatrixXd raw = (static_cast<double>(g.vol()) / b) * acc * dinv.asDiagonal();
  if (pre_log) return raw;
  return raw.unaryExpr([](double x) { return x > 1.0 ? std::log(x) : 0.0; });
}

/// Moore-Penrose pseudoinverse of the combinatorial Laplacian of a connected graph.
inline Eigen::MatrixXd laplacian_pinv(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.n());
  Eigen::MatrixXd a = dense_adjacency(g);
  Eigen::MatrixXd l = -a;
  for (Eigen::Index i = 0; i < n; ++i) l(i, i) = g.degree(static_cast<vertex_t>(i));
  Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  return (l + j).inverse() - j;
}

struct EdgeResistance {
  vertex_t u;
  vertex_t v;
  double resistance;
};

/// R_uv = (e_u - e_v)^T L^+ (e_u - e_v) for every edge u < v.
inline std::vector<EdgeResistance> effective_resistance_oracle(const Graph& g) {
  if (g.n() > 500) throw InvalidArgument("resistance oracle limited to n <= 500");
  if (!is_connected(g)) throw InvalidArgument("graph must be connected");
  Eigen::MatrixXd lp = laplacian_pinv(g);
  std::vector<EdgeResistance> out;
  for (std::uint64_t su = 0; su < g.n(); ++su) {
    auto u = static_cast<vertex_t>(su);
    g.for_each_neighbor(u, [&](vertex_t v) {
      if (v > u) out.push_back({u, v, lp(u, u) + lp(v, v) - 2 * lp(u, v)});
    });
  }
  return out;
}

/// lambda_2 of D^-1/2 A D^-1/2 (second largest eigenvalue).
inline double second_eigenvalue(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.n());
  Eigen::MatrixXd a = dense_adjacency(g);
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = 1.0 / std::sqrt(std::max<double>(1.0, g.degree(static_cast<vertex_t>(i))));
  Eigen::MatrixXd nrm = s.asDiagonal() * a * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(nrm, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(n - 2);
}

// ---------------------------------------------------------------------------
// Node classification

struct BinaryLogReg {
  Eigen::VectorXd w;
  double bias = 0;
  /// True when the training labels were all one class; then w = 0 and the
  /// bias is the smoothed prior log-odds.
  bool degenerate = false;
  std::uint32_t iterations = 0;
};

struct OvrModel {
  std::vector<BinaryLogReg> per_label;
  std::uint32_t dim = 0;
};

/// min_w,b  lambda/2 |w|^2 + sum_i log(1 + exp(-y_i (w.x_i + b))), by damped
/// Newton steps. Stops when |grad|_inf < 1e-6 or after `max_iter` steps.
inline BinaryLogReg train_logreg(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, double lambda,
                                 std::uint32_t max_iter = 500) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  BinaryLogReg m;
  m.w = Eigen::VectorXd::Zero(d);
  const double pos = target.sum();
  if (pos == 0 || pos == static_cast<double>(n)) {
    m.degenerate = true;
    m.bias = std::log((pos + 0.5) / (static_cast<double>(n) - pos + 0.5));
    return m;
  }
  Eigen::MatrixXd xb(n, d + 1);
  xb << x, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd reg = Eigen::VectorXd::Constant(d + 1, lambda);
  reg(d) = 0;

  auto objective = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd z = xb * th;
    double f = 0.5 * (reg.array() * th.array().square()).sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      double yz = (target(i) > 0.5 ? 1.0 : -1.0) * z(i);
      f += yz > 0 ? std::log1p(std::exp(-yz)) : -yz + std::log1p(std::exp(yz));
    }
    return f;
  };

  double f = objective(theta);
  for (std::uint32_t it = 0; it < max_iter; ++it) {
    Eigen::VectorXd z = xb * theta;
    Eigen::VectorXd prob = z.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); });
    Eigen::VectorXd grad = xb.transpose() * (prob - target) + reg.cwiseProduct(theta);
    m.iterations = it;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-6) break;
    Eigen::VectorXd wts = prob.cwiseProduct(Eigen::VectorXd::Ones(n) - prob);
    Eigen::MatrixXd h = xb.transpose() * wts.asDiagonal() * xb;
    h.diagonal() += reg + Eigen::VectorXd::Constant(d + 1, 1e-10);
    Eigen::VectorXd step = h.ldlt().solve(grad);
    double t = 1.0;
    double slope = grad.dot(step);
    Eigen::VectorXd next;
    double fn = f;
    for (int ls = 0; ls < 50; ++ls) {
      next = theta - t * step;
      fn = objective(next);
      if (fn <= f - 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (!(fn < f) && t < 1e-12) break;
    theta = next;
    f = fn;
  }
  m.w = theta.head(d);
  m.bias = theta(d);
  return m;
}

/// One-vs-rest logistic regression over rows `train` of `x`.
inline OvrModel train_ovr_logreg(const DenseMatrix& x, const Labels& labels, const std::vector<vertex_t>& train,
                                 double lambda) {
  OvrModel model;
  model.dim = static_cast<std::uint32_t>(x.cols());
  Eigen::MatrixXd xt(static_cast<Eigen::Index>(train.size()), x.cols());
  for (std::size_t i = 0; i < train.size(); ++i) xt.row(static_cast<Eigen::Index>(i)) = x.row(train[i]).cast<double>();
  model.per_label.resize(labels.num_labels);
  parallel_for(
      0, labels.num_labels,
      [&](std::size_t l) {
        Eigen::VectorXd t(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
          const auto& ls = labels.of[train[i]];
          t(static_cast<Eigen::Index>(i)) = std::find(ls.begin(), ls.end(), l) != ls.end() ? 1.0 : 0.0;
        }
        model.per_label[l] = train_logreg(xt, t, lambda);
      },
      1);
  return model;
}

/// Decision values w.x + b for each row and label.
inline Eigen::MatrixXd decision_scores(const OvrModel& model, const DenseMatrix& x, const std::vector<vertex_t>& rows) {
  if (static_cast<std::uint32_t>(x.cols()) != model.dim) throw InvalidArgument("embedding dimension mismatch");
  Eigen::MatrixXd s(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(model.per_label.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Eigen::VectorXd xi = x.row(rows[i]).cast<double>().transpose();
    for (std::size_t l = 0; l < model.per_label.size(); ++l) {
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = model.per_label[l].w.dot(xi) + model.per_label[l].bias;
    }
  }
  return s;
}

/// For each row, the `count[i]` highest-scoring labels (ties to the lower id).
inline std::vector<std::vector<std::uint32_t>> predict_top(const Eigen::MatrixXd& scores,
                                                           const std::vector<std::size_t>& count) {
  std::vector<std::vector<std::uint32_t>> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(scores.cols()));
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return scores(i, a) > scores(i, b); });
    idx.resize(std::min(idx.size(), count[static_cast<std::size_t>(i)]));
    std::sort(idx.begin(), idx.end());
    out[static_cast<std::size_t>(i)] = std::move(idx);
  }
  return out;
}

struct F1 {
  double micro = 0;
  double macro = 0;
};

/// Micro-F1 from global TP/FP/FN; macro-F1 is the unweighted mean of
/// per-label F1 over all `num_labels` labels (0 when a label has no TP, FP, FN).
inline F1 f1_scores(const std::vector<std::vector<std::uint32_t>>& predicted,
                    const std::vector<std::vector<std::uint32_t>>& truth, std::uint32_t num_labels) {
  std::vector<double> tp(num_labels, 0), fp(num_labels, 0), fn(num_labels, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (auto l : predicted[i]) {
      bool hit = std::find(truth[i].begin(), truth[i].end(), l) != truth[i].end();
      (hit ? tp : fp)[l] += 1;
    }
    for (auto l : truth[i]) {
      if (std::find(predicted[i].begin(), predicted[i].end(), l) == predicted[i].end()) fn[l] += 1;
    }
  }
  double TP = 0, FP = 0, FN = 0, macro = 0;
  for (std::uint32_t l = 0; l < num_labels; ++l) {
    TP += tp[l];
    FP += fp[l];
    FN += fn[l];
    double denom = 2 * tp[l] + fp[l] + fn[l];
    macro += denom > 0 ? 2 * tp[l] / denom : 0.0;
  }
  F1 out;
  double denom = 2 * TP + FP + FN;
  out.micro = denom > 0 ? 2 * TP / denom : 0.0;
  out.macro = num_labels > 0 ? macro / num_labels : 0.0;
  return out;
}

/// Top-l prediction with the known label count per test node, then F1.
inline F1 classify_and_score(const OvrModel& model, const DenseMatrix& x, const Labels& labels,
                             const std::vector<vertex_t>& test) {
  Eigen::MatrixXd scores = decision_scores(model, x, test);
  std::vector<std::size_t> count;
  std::vector<std::vector<std::uint32_t>> truth;
  for (auto v : test) {
    count.push_back(labels.of[v].size());
    truth.push_back(labels.of[v]);
  }
  return f1_scores(predict_top(scores, count), truth, labels.num_labels);
}

struct ClassificationResult {
  double micro_f1 = 0;
  double macro_f1 = 0;
  double micro_f1_std = 0;
  double macro_f1_std = 0;
  std::vector<F1> per_repeat;
};

struct ClassificationOptions {
  double train_ratio = 0.1;
  std::uint32_t repeats = 10;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  /// L2-normalize embedding rows before training.
  bool normalize_rows = true;
};

inline DenseMatrix row_normalized(const DenseMatrix& x) {
  DenseMatrix y = x;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    double nrm = y.row(i).cast<double>().norm();
    if (nrm > 0) y.row(i) = (y.row(i).cast<double>() / nrm).cast<float>();
  }
  return y;
}

/// Repeated random train/test splits of the labeled vertices; averages F1.
inline ClassificationResult evaluate_classification(const Embedding& emb, const Labels& labels,
                                                     const ClassificationOptions& opt) {
  if (labels.of.size() != emb.n()) throw InvalidArgument("label count does not match embedding rows");
  if (opt.repeats < 1) throw InvalidArgument("repeats must be >= 1");
  if (!(opt.train_ratio > 0 && opt.train_ratio < 1)) throw InvalidArgument("train_ratio must be in (0, 1)");
  const DenseMatrix x = opt.normalize_rows ? row_normalized(emb.X) : emb.X;
  std::vector<vertex_t> labeled;
  for (std::uint64_t v = 0; v < emb.n(); ++v)
    if (!labels.of[v].empty()) labeled.push_back(static_cast<vertex_t>(v));
  if (labeled.size() < 2) throw InvalidArgument("need at least two labeled vertices");

  ClassificationResult res;
  for (std::uint32_t rep = 0; rep < opt.repeats; ++rep) {
    std::vector<vertex_t> order = labeled;
    StreamRng rng(mix64(substream(opt.seed, "splits"), rep));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    auto ntrain = static_cast<std::size_t>(std::ceil(opt.train_ratio * static_cast<double>(order.size())));
    ntrain = std::clamp<std::size_t>(ntrain, 1, order.size() - 1);
    std::vector<vertex_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ntrain));
    std::vector<vertex_t> test(order.begin() + static_cast<std::ptrdiff_t>(ntrain), order.end());
    OvrModel model = train_ovr_logreg(x, labels, train, opt.lambda);
    res.per_repeat.push_back(classify_and_score(model, x, labels, test));
  }
  auto mean_std = [&](auto get, double& mean, double& sd) {
    mean = 0;
    for (const auto& f : res.per_repeat) mean += get(f);
    mean /= static_cast<double>(res.per_repeat.size());
    sd = 0;
    for (const auto& f : res.per_repeat) sd += (get(f) - mean) * (get(f) - mean);
    sd = std::sqrt(sd / static_cast<double>(res.per_repeat.size()));
  };
  mean_std([](const F1& f) { return f.micro; }, res.micro_f1, res.micro_f1_std);
  mean_std([](const F1& f) { return f.macro; }, res.macro_f1, res.macro_f1_std);
  return res;
}

// ---------------------------------------------------------------------------
// Link prediction

struct LinkPredSplit {
  Graph train;
  /// Held-out edges (u < v).
  std::vector<std::pair<vertex_t, vertex_t>> positives;
};

/// Removes max(1, round(ratio * m)) uniformly chosen edges.
inline LinkPredSplit make_link_split(const Graph& g, double holdout_ratio, std::uint64_t seed) {
  if (!(holdout_ratio > 0 && holdout_ratio < 1)) throw InvalidArgument("holdout ratio must be in (0, 1)");
  EdgeList all = to_edge_list(g);
  const std::size_t m = all.edges.size();
  if (m < 2) throw InvalidArgument("graph too small to split");
  auto h = static_cast<std::size_t>(std::llround(holdout_ratio * static_cast<double>(m)));
  h = std::clamp<std::size_t>(h, 1, m - 1);
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  StreamRng rng(substream(seed, "holdout"));
  for (std::size_t i = 0; i < h; ++i) std::swap(idx[i], idx[i + rng.below(m - i)]);
  std::vector<char> held(m, 0);
  LinkPredSplit out;
  for (std::size_t i = 0; i < h; ++i) {
    held[idx[i]] = 1;
    auto [u, v] = all.edges[idx[i]];
    out.positives.emplace_back(static_cast<vertex_t>(u), static_cast<vertex_t>(v));
  }
  std::sort(out.positives.begin(), out.positives.end());
  EdgeList rest;
  rest.n_hint = g.n();
  for (std::size_t i = 0; i < m; ++i)
    if (!held[i]) rest.edges.push_back(all.edges[i]);
  out.train = build_graph(rest, g.compressed());
  return out;
}

struct Metrics {
  double micro_f1 = std::numeric_limits<double>::quiet_NaN();
  double macro_f1 = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();
  double mr = std::numeric_limits<double>::quiet_NaN();
  double mrr = std::numeric_limits<double>::quiet_NaN();
  double hits1 = std::numeric_limits<double>::quiet_NaN();
  double hits10 = std::numeric_limits<double>::quiet_NaN();
  double hits50 = std::numeric_limits<double>::quiet_NaN();

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    auto put = [&](const char* k, double v) {
      if (!std::isnan(v)) j[k] = v;
    };
    put("micro_f1", micro_f1);
    put("macro_f1", macro_f1);
    put("auc", auc);
    put("mr", mr);
    put("mrr", mrr);
    put("hits@1", hits1);
    put("hits@10", hits10);
    put("hits@50", hits50);
    return j;
  }
};

/// Rank of a positive score among candidate negatives: 1 + #greater + #ties/2.
/// Also returns the fraction of negatives the positive beats (ties count 1/2).
inline std::pair<double, double> rank_against(double pos, const std::vector<double>& neg) {
  double greater = 0, ties = 0;
  for (double s : neg) {
    if (s > pos) greater += 1;
    else if (s == pos) ties += 1;
  }
  double rank = 1 + greater + 0.5 * ties;
  double beats = neg.empty() ? 0.5 : (static_cast<double>(neg.size()) - greater - 0.5 * ties) / static_cast<double>(neg.size());
  return {rank, beats};
}

/// Aggregates per-positive ranks and beat fractions into link metrics.
inline Metrics link_metrics(const std::vector<double>& ranks, const std::vector<double>& beats) {
  Metrics m;
  if (ranks.empty()) return m;
  const double k = static_cast<double>(ranks.size());
  m.mr = m.mrr = m.hits1 = m.hits10 = m.hits50 = m.auc = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    m.mr += ranks[i];
    m.mrr += 1.0 / ranks[i];
    m.hits1 += ranks[i] <= 1;
    m.hits10 += ranks[i] <= 10;
    m.hits50 += ranks[i] <= 50;
    m.auc += beats[i];
  }
  m.mr /= k;
  m.mrr /= k;
  m.hits1 /= k;
  m.hits10 /= k;
  m.hits50 /= k;
  m.auc /= k;
  return m;
}

inline bool has_edge(const Graph& g, vertex_t u, vertex_t v) {
  if (g.degree(u) > g.degree(v)) std::swap(u, v);
  bool found = false;
  g.for_each_neighbor(u, [&](vertex_t w) { found |= (w == v); });
  return found;
}

/// Scores each held-out (u, v) by dot(x_u, x_v) against `negatives`
/// corrupted tails (u, w), w uniform and resampled while (u, w) is an edge
/// of `full` or w == u. The corruption stream of a positive is keyed by the
/// pair itself, so results do not depend on positive order.
inline Metrics link_pred_score(const Embedding& emb, const std::vector<std::pair<vertex_t, vertex_t>>& positives,
                               const Graph& full, std::uint32_t negatives = 1000, std::uint64_t seed = 0) {
  if (emb.n() != full.n()) throw InvalidArgument("embedding rows do not match graph size");
  std::vector<double> ranks(positives.size()), beats(positives.size());
  const std::uint64_t base = substream(seed, "corruption");
  parallel_for(
      0, positives.size(),
      [&](std::size_t i) {
        auto [u, v] = positives[i];
        if (u >= emb.n() || v >= emb.n()) throw InvalidArgument("positive endpoint not embedded");
        auto xu = emb.X.row(u).cast<double>();
        double pos = xu.dot(emb.X.row(v).cast<double>());
        StreamRng rng(mix64(base, SparsifierTable::pack(u, v)));
        std::vector<double> neg;
        neg.reserve(negatives);
        for (std::uint32_t j = 0; j < negatives; ++j) {
          vertex_t w = u;
          for (int attempt = 0; attempt < 1000; ++attempt) {
            w = static_cast<vertex_t>(rng.below(full.n()));
            if (w != u && !has_edge(full, u, w)) break;
          }
          neg.push_back(xu.dot(emb.X.row(w).cast<double>()));
        }
        std::tie(ranks[i], beats[i]) = rank_against(pos, neg);
      },
      8);
  return link_metrics(ranks, beats);
}

}  // namespace lne
