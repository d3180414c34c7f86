#include "peh/ml.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "peh/rng.hpp"

namespace peh {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (std::int64_t c : row) t += c;
  return t;
}

double ConfusionMatrix::accuracy() const {
  const std::int64_t t = total();
  if (t == 0) return 0.0;
  std::int64_t diag = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) diag += counts[i][i];
  return static_cast<double>(diag) / static_cast<double>(t);
}

std::vector<std::int64_t> ConfusionMatrix::row_sums() const {
  std::vector<std::int64_t> sums(counts.size(), 0);
  for (std::size_t i = 0; i < counts.size(); ++i)
    sums[i] = std::accumulate(counts[i].begin(), counts[i].end(), std::int64_t{0});
  return sums;
}

void ConfusionMatrix::add(int true_label, int predicted_label) {
  const auto ti = std::lower_bound(labels.begin(), labels.end(), true_label) - labels.begin();
  const auto pi = std::lower_bound(labels.begin(), labels.end(), predicted_label) - labels.begin();
  if (ti >= static_cast<std::ptrdiff_t>(labels.size()) || labels[static_cast<std::size_t>(ti)] != true_label ||
      pi >= static_cast<std::ptrdiff_t>(labels.size()) || labels[static_cast<std::size_t>(pi)] != predicted_label)
    throw std::invalid_argument("ConfusionMatrix: label not tracked");
  ++counts[static_cast<std::size_t>(ti)][static_cast<std::size_t>(pi)];
}

ClassifierKind classifier_kind_from_name(const std::string& name) {
  if (name == "knn") return ClassifierKind::knn;
  if (name == "gaussian_nb") return ClassifierKind::gaussian_nb;
  if (name == "random_forest") return ClassifierKind::random_forest;
  if (name == "linear_svm") return ClassifierKind::linear_svm;
  throw std::invalid_argument("unknown classifier '" + name + "'");
}

std::string classifier_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::gaussian_nb: return "gaussian_nb";
    case ClassifierKind::random_forest: return "random_forest";
    case ClassifierKind::linear_svm: return "linear_svm";
  }
  return "?";
}

namespace {

std::vector<int> distinct_labels(const std::vector<int>& y) {
  std::set<int> s(y.begin(), y.end());
  if (s.size() < 2) throw std::invalid_argument("classifier: needs at least 2 classes");
  return std::vector<int>(s.begin(), s.end());
}

void check_finite(const Eigen::MatrixXd& x) {
  if (!x.allFinite()) throw std::invalid_argument("classifier: non-finite features");
}

// Per-column standardization parameters learned on training data.
struct Standardizer {
  Eigen::VectorXd mean, scale;

  void fit(const Eigen::MatrixXd& x) {
    mean = x.colwise().mean();
    Eigen::VectorXd var = (x.rowwise() - mean.transpose()).array().square().colwise().mean();
    scale = var.array().sqrt();
    for (Eigen::Index i = 0; i < scale.size(); ++i)
      if (scale(i) <= 0.0) scale(i) = 1.0;  // constant column: leave centered only
  }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    return (x - mean).cwiseQuotient(scale);
  }
};

// ---------------------------------------------------------------------------

class KnnClassifier final : public Classifier {
 public:
  explicit KnnClassifier(int k) : k_(k) {
    if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
  }

  void fit(const Eigen::MatrixXd& x, const std::vector<int>& y) override {
    check_finite(x);
    if (static_cast<std::size_t>(x.rows()) != y.size())
      throw std::invalid_argument("knn: row/label count mismatch");
    labels_ = distinct_labels(y);
    std_.fit(x);
    train_ = std_.apply(x);
    y_ = y;
  }

  int predict(const Eigen::VectorXd& x) const override {
    const std::vector<double> s = scores(x);
    return argmax_label(s);
  }

  std::vector<double> scores(const Eigen::VectorXd& x) const override {
    if (x.size() != train_.cols()) throw std::invalid_argument("knn: feature dimension mismatch");
    const Eigen::VectorXd q = std_.apply(x);
    const Eigen::Index n = train_.rows();
    // (squared distance, row) pairs; brute force with stable tie order.
    std::vector<std::pair<double, Eigen::Index>> d(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      d[static_cast<std::size_t>(i)] = {(train_.row(i).transpose() - q).squaredNorm(), i};
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());

    std::vector<double> votes(labels_.size(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const int lab = y_[static_cast<std::size_t>(d[i].second)];
      const auto it = std::lower_bound(labels_.begin(), labels_.end(), lab);
      votes[static_cast<std::size_t>(it - labels_.begin())] += 1.0;
    }
    return votes;
  }

 private:
  int argmax_label(const std::vector<double>& s) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
      if (s[i] > s[best]) best = i;  // strict: ties keep the smaller label
    return labels_[best];
  }

  int k_;
  Standardizer std_;
  Eigen::MatrixXd train_;
  std::vector<int> y_;
};

// ---------------------------------------------------------------------------

class GaussianNbClassifier final : public Classifier {
 public:
  explicit GaussianNbClassifier(double var_floor_rel) : var_floor_rel_(var_floor_rel) {}

  void fit(const Eigen::MatrixXd& x, const std::vector<int>& y) override {
    check_finite(x);
    if (static_cast<std::size_t>(x.rows()) != y.size())
      throw std::invalid_argument("nb: row/label count mismatch");
    labels_ = distinct_labels(y);
    const Eigen::Index d = x.cols();
    const std::size_t L = labels_.size();

    // Variance floor keyed to the global per-column variance.
    Eigen::VectorXd gmean = x.colwise().mean();
    Eigen::VectorXd gvar = (x.rowwise() - gmean.transpose()).array().square().colwise().mean();
    double gmax = gvar.maxCoeff();
    if (!(gmax > 0.0)) gmax = 1.0;
    const double floor_val = var_floor_rel_ * gmax;

    means_.assign(L, Eigen::VectorXd::Zero(d));
    vars_.assign(L, Eigen::VectorXd::Zero(d));
    log_priors_.assign(L, 0.0);
    for (std::size_t c = 0; c < L; ++c) {
      std::vector<Eigen::Index> rows;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == labels_[c]) rows.push_back(static_cast<Eigen::Index>(i));
      Eigen::MatrixXd xc(static_cast<Eigen::Index>(rows.size()), d);
      for (std::size_t i = 0; i < rows.size(); ++i) xc.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
      means_[c] = xc.colwise().mean();
      vars_[c] = (xc.rowwise() - means_[c].transpose()).array().square().colwise().mean();
      for (Eigen::Index j = 0; j < d; ++j)
        if (vars_[c](j) < floor_val) vars_[c](j) = floor_val;
      log_priors_[c] = std::log(static_cast<double>(rows.size()) / static_cast<double>(y.size()));
    }
  }

  int predict(const Eigen::VectorXd& x) const override {
    const std::vector<double> lp = log_posteriors(x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < lp.size(); ++i)
      if (lp[i] > lp[best]) best = i;
    return labels_[best];
  }

  std::vector<double> scores(const Eigen::VectorXd& x) const override {
    // Normalized posteriors (softmax over log posteriors).
    std::vector<double> lp = log_posteriors(x);
    const double m = *std::max_element(lp.begin(), lp.end());
    double z = 0.0;
    for (double& v : lp) {
      v = std::exp(v - m);
      z += v;
    }
    for (double& v : lp) v /= z;
    return lp;
  }

 private:
  std::vector<double> log_posteriors(const Eigen::VectorXd& x) const {
    if (x.size() != means_.at(0).size())
      throw std::invalid_argument("nb: feature dimension mismatch");
    std::vector<double> lp(labels_.size());
    for (std::size_t c = 0; c < labels_.size(); ++c) {
      double acc = log_priors_[c];
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double diff = x(j) - means_[c](j);
        acc += -0.5 * std::log(2.0 * 3.141592653589793238462643383279502884 * vars_[c](j)) -
               0.5 * diff * diff / vars_[c](j);
      }
      lp[c] = acc;
    }
    return lp;
  }

  double var_floor_rel_;
  std::vector<Eigen::VectorXd> means_, vars_;
  std::vector<double> log_priors_;
};

// ---------------------------------------------------------------------------

class RandomForestClassifier final : public Classifier {
 public:
  RandomForestClassifier(int trees, int max_depth, std::uint64_t seed)
      : trees_(trees), max_depth_(max_depth), seed_(seed) {
    if (trees < 1) throw std::invalid_argument("rf: needs at least 1 tree");
    if (max_depth < 1) throw std::invalid_argument("rf: depth must be >= 1");
  }

  void fit(const Eigen::MatrixXd& x, const std::vector<int>& y) override {
    check_finite(x);
    if (static_cast<std::size_t>(x.rows()) != y.size())
      throw std::invalid_argument("rf: row/label count mismatch");
    labels_ = distinct_labels(y);
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    dim_ = x.cols();
    mtry_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d)))));

    forest_.clear();
    forest_.resize(static_cast<std::size_t>(trees_));
    for (std::size_t t = 0; t < forest_.size(); ++t) {
      std::mt19937_64 rng = make_rng(seed_, t);
      std::vector<std::size_t> sample(n);
      for (std::size_t i = 0; i < n; ++i) sample[i] = static_cast<std::size_t>(rng() % n);
      build_node(forest_[t], x, y, sample, 0, rng);
    }
  }

  int predict(const Eigen::VectorXd& x) const override {
    const std::vector<double> s = scores(x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
      if (s[i] > s[best]) best = i;
    return labels_[best];
  }

  std::vector<double> scores(const Eigen::VectorXd& x) const override {
    if (x.size() != dim_) throw std::invalid_argument("rf: feature dimension mismatch");
    std::vector<double> votes(labels_.size(), 0.0);
    for (const auto& tree : forest_) {
      std::size_t node = 0;
      while (!tree[node].leaf) {
        node = (x(tree[node].feature) <= tree[node].threshold) ? tree[node].left
                                                               : tree[node].right;
      }
      votes[tree[node].label_index] += 1.0;
    }
    return votes;
  }

 private:
  struct Node {
    bool leaf = true;
    Eigen::Index feature = 0;
    double threshold = 0.0;
    std::size_t left = 0, right = 0;
    std::size_t label_index = 0;
  };
  using Tree = std::vector<Node>;

  std::size_t majority_index(const std::vector<int>& y, const std::vector<std::size_t>& rows) const {
    std::vector<std::size_t> counts(labels_.size(), 0);
    for (std::size_t r : rows) {
      const auto it = std::lower_bound(labels_.begin(), labels_.end(), y[r]);
      ++counts[static_cast<std::size_t>(it - labels_.begin())];
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < counts.size(); ++i)
      if (counts[i] > counts[best]) best = i;
    return best;
  }

  double gini(const std::vector<std::size_t>& counts, std::size_t total) const {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (std::size_t c : counts) {
      const double p = static_cast<double>(c) / static_cast<double>(total);
      g -= p * p;
    }
    return g;
  }

  // Returns the index of the created node within tree.
  std::size_t build_node(Tree& tree, const Eigen::MatrixXd& x, const std::vector<int>& y,
                         const std::vector<std::size_t>& rows, int depth, std::mt19937_64& rng) {
    const std::size_t node_index = tree.size();
    tree.emplace_back();
    tree[node_index].label_index = majority_index(y, rows);

    bool pure = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (y[rows[i]] != y[rows[0]]) {
        pure = false;
        break;
      }
    if (pure || depth >= max_depth_ || rows.size() < 2) return node_index;

    // Distinct random feature subset of size mtry (partial Fisher-Yates).
    const auto d = static_cast<std::size_t>(x.cols());
    std::vector<Eigen::Index> feats(d);
    for (std::size_t i = 0; i < d; ++i) feats[i] = static_cast<Eigen::Index>(i);
    for (std::size_t i = 0; i < std::min(mtry_, d); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (d - i));
      std::swap(feats[i], feats[j]);
    }
    feats.resize(std::min(mtry_, d));

    // Best gini split over candidate features and midpoints.
    double best_score = std::numeric_limits<double>::infinity();
    Eigen::Index best_feat = -1;
    double best_thr = 0.0;
    std::vector<std::pair<double, std::size_t>> vals(rows.size());
    for (Eigen::Index f : feats) {
      for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = {x(static_cast<Eigen::Index>(rows[i]), f), rows[i]};
      std::sort(vals.begin(), vals.end());

      std::vector<std::size_t> left_counts(labels_.size(), 0);
      std::vector<std::size_t> right_counts(labels_.size(), 0);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto it = std::lower_bound(labels_.begin(), labels_.end(), y[vals[i].second]);
        ++right_counts[static_cast<std::size_t>(it - labels_.begin())];
      }
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        const auto it = std::lower_bound(labels_.begin(), labels_.end(), y[vals[i].second]);
        const auto ci = static_cast<std::size_t>(it - labels_.begin());
        ++left_counts[ci];
        --right_counts[ci];
        if (vals[i].first == vals[i + 1].first) continue;  // no boundary here
        const std::size_t nl = i + 1, nr = rows.size() - nl;
        const double score = (static_cast<double>(nl) * gini(left_counts, nl) +
                              static_cast<double>(nr) * gini(right_counts, nr)) /
                             static_cast<double>(rows.size());
        if (score < best_score) {
          best_score = score;
          best_feat = f;
          best_thr = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
    }
    if (best_feat < 0) return node_index;  // all candidate features constant

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows)
      (x(static_cast<Eigen::Index>(r), best_feat) <= best_thr ? left_rows : right_rows).push_back(r);
    if (left_rows.empty() || right_rows.empty()) return node_index;

    const std::size_t li = build_node(tree, x, y, left_rows, depth + 1, rng);
    const std::size_t ri = build_node(tree, x, y, right_rows, depth + 1, rng);
    tree[node_index].leaf = false;
    tree[node_index].feature = best_feat;
    tree[node_index].threshold = best_thr;
    tree[node_index].left = li;
    tree[node_index].right = ri;
    return node_index;
  }

  int trees_;
  int max_depth_;
  std::uint64_t seed_;
  std::size_t mtry_ = 1;
  Eigen::Index dim_ = 0;
  std::vector<Tree> forest_;
};

// ---------------------------------------------------------------------------

// One-vs-rest hinge loss, deterministic subgradient descent (Pegasos-style
// schedule, fixed sample order, no shuffling) on standardized features with
// an appended bias column.
class LinearSvmClassifier final : public Classifier {
 public:
  LinearSvmClassifier(double c, int epochs) : c_(c), epochs_(epochs) {
    if (!(c > 0.0)) throw std::invalid_argument("svm: C must be > 0");
    if (epochs < 1) throw std::invalid_argument("svm: epochs must be >= 1");
  }

  void fit(const Eigen::MatrixXd& x, const std::vector<int>& y) override {
    check_finite(x);
    if (static_cast<std::size_t>(x.rows()) != y.size())
      throw std::invalid_argument("svm: row/label count mismatch");
    labels_ = distinct_labels(y);
    std_.fit(x);
    Eigen::MatrixXd xs(x.rows(), x.cols() + 1);
    xs.leftCols(x.cols()) = std_.apply(x);
    xs.col(x.cols()).setOnes();

    const auto n = static_cast<std::size_t>(xs.rows());
    const double lambda = 1.0 / (c_ * static_cast<double>(n));
    weights_.assign(labels_.size(), Eigen::VectorXd::Zero(xs.cols()));

    for (std::size_t c = 0; c < labels_.size(); ++c) {
      Eigen::VectorXd& w = weights_[c];
      std::size_t step = 0;
      for (int epoch = 0; epoch < epochs_; ++epoch) {
        for (std::size_t i = 0; i < n; ++i) {
          ++step;
          const double eta = 1.0 / (lambda * static_cast<double>(step));
          const double target = (y[i] == labels_[c]) ? 1.0 : -1.0;
          const double margin = target * w.dot(xs.row(static_cast<Eigen::Index>(i)));
          w *= (1.0 - eta * lambda);
          if (margin < 1.0) w += (eta * target) * xs.row(static_cast<Eigen::Index>(i)).transpose();
        }
      }
    }
  }

  int predict(const Eigen::VectorXd& x) const override {
    const std::vector<double> s = scores(x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
      if (s[i] > s[best]) best = i;
    return labels_[best];
  }

  std::vector<double> scores(const Eigen::VectorXd& x) const override {
    if (x.size() + 1 != weights_.at(0).size())
      throw std::invalid_argument("svm: feature dimension mismatch");
    Eigen::VectorXd q(x.size() + 1);
    q.head(x.size()) = std_.apply(x);
    q(x.size()) = 1.0;
    std::vector<double> s(labels_.size());
    for (std::size_t c = 0; c < labels_.size(); ++c) s[c] = weights_[c].dot(q);
    return s;
  }

 private:
  double c_;
  int epochs_;
  Standardizer std_;
  std::vector<Eigen::VectorXd> weights_;
};

}  // namespace

std::unique_ptr<Classifier> make_classifier(ClassifierKind kind, const Hyperparams& hp,
                                            std::uint64_t seed) {
  switch (kind) {
    case ClassifierKind::knn:
      return std::make_unique<KnnClassifier>(hp.knn_k);
    case ClassifierKind::gaussian_nb:
      return std::make_unique<GaussianNbClassifier>(hp.nb_var_floor_rel);
    case ClassifierKind::random_forest:
      return std::make_unique<RandomForestClassifier>(hp.rf_trees, hp.rf_max_depth, seed);
    case ClassifierKind::linear_svm:
      return std::make_unique<LinearSvmClassifier>(hp.svm_c, hp.svm_epochs);
  }
  throw std::invalid_argument("make_classifier: bad kind");
}

namespace {

void table_to_matrix(const EnergyFeatureTable& table, const std::vector<std::size_t>& rows,
                     Eigen::MatrixXd& x, std::vector<int>& y) {
  const auto d = static_cast<Eigen::Index>(table.feature_dim());
  x.resize(static_cast<Eigen::Index>(rows.size()), d);
  y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const FeatureRow& r = table.rows[rows[i]];
    for (Eigen::Index j = 0; j < d; ++j)
      x(static_cast<Eigen::Index>(i), j) = r.features[static_cast<std::size_t>(j)];
    y[i] = r.label;
  }
}

}  // namespace

std::unique_ptr<Classifier> train(ClassifierKind kind, const EnergyFeatureTable& table,
                                  const Hyperparams& hp, std::uint64_t seed) {
  table.validate();
  std::vector<std::size_t> all(table.rows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Eigen::MatrixXd x;
  std::vector<int> y;
  table_to_matrix(table, all, x, y);
  auto model = make_classifier(kind, hp, seed);
  model->fit(x, y);
  return model;
}

CvResult cross_validate(const std::function<std::unique_ptr<Classifier>()>& factory,
                        const EnergyFeatureTable& table, const FoldAssignment& folds) {
  table.validate();
  if (folds.fold_count < 2) throw std::invalid_argument("cross_validate: bad fold count");

  std::set<int> label_set;
  for (const FeatureRow& r : table.rows) label_set.insert(r.label);
  CvResult result;
  result.confusion.labels.assign(label_set.begin(), label_set.end());
  result.confusion.counts.assign(label_set.size(),
                                 std::vector<std::int64_t>(label_set.size(), 0));

  for (int f = 0; f < folds.fold_count; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < table.rows.size(); ++i)
      (folds.fold(table.rows[i].event_id) == f ? test_rows : train_rows).push_back(i);
    if (test_rows.empty()) continue;
    if (train_rows.empty()) throw std::invalid_argument("cross_validate: empty training fold");

    Eigen::MatrixXd xtr, xte;
    std::vector<int> ytr, yte;
    table_to_matrix(table, train_rows, xtr, ytr);
    table_to_matrix(table, test_rows, xte, yte);

    auto model = factory();
    model->fit(xtr, ytr);
    for (std::size_t i = 0; i < test_rows.size(); ++i)
      result.confusion.add(yte[i], model->predict(xte.row(static_cast<Eigen::Index>(i)).transpose()));
  }
  result.accuracy = result.confusion.accuracy();
  return result;
}

CvResult cross_validate(ClassifierKind kind, const EnergyFeatureTable& table,
                        const FoldAssignment& folds, const Hyperparams& hp, std::uint64_t seed) {
  return cross_validate([&] { return make_classifier(kind, hp, seed); }, table, folds);
}

}  // namespace peh
