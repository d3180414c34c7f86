#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "peh/dataset.hpp"

namespace peh {

struct ConfusionMatrix {
  std::vector<int> labels;                       // sorted ascending
  std::vector<std::vector<std::int64_t>> counts; // rows true, cols predicted

  std::int64_t total() const;
  double accuracy() const;  // trace / total
  std::vector<std::int64_t> row_sums() const;
  void add(int true_label, int predicted_label);
};

enum class ClassifierKind { knn, gaussian_nb, random_forest, linear_svm };

ClassifierKind classifier_kind_from_name(const std::string& name);
std::string classifier_name(ClassifierKind kind);

struct Hyperparams {
  int knn_k = 5;
  int rf_trees = 100;
  int rf_max_depth = 8;
  double svm_c = 1.0;
  int svm_epochs = 500;
  double nb_var_floor_rel = 1e-12;  // relative to global feature variance
};

// Common interface; ties everywhere break toward the smallest label.
class Classifier {
 public:
  virtual ~Classifier() = default;

  // x: rows are samples. Throws on single-class input.
  virtual void fit(const Eigen::MatrixXd& x, const std::vector<int>& y) = 0;
  virtual int predict(const Eigen::VectorXd& x) const = 0;

  // Per-class scores aligned with labels(); larger is more likely. For NB
  // these are posterior probabilities.
  virtual std::vector<double> scores(const Eigen::VectorXd& x) const = 0;

  const std::vector<int>& labels() const { return labels_; }

 protected:
  std::vector<int> labels_;
};

std::unique_ptr<Classifier> make_classifier(ClassifierKind kind, const Hyperparams& hp,
                                            std::uint64_t seed);

// Fits a fresh model on the whole table.
std::unique_ptr<Classifier> train(ClassifierKind kind, const EnergyFeatureTable& table,
                                  const Hyperparams& hp, std::uint64_t seed);

struct CvResult {
  double accuracy = 0.0;
  ConfusionMatrix confusion;  // summed over folds
};

// Per-fold train/evaluate; the factory supplies an unfitted model per fold.
CvResult cross_validate(const std::function<std::unique_ptr<Classifier>()>& factory,
                        const EnergyFeatureTable& table, const FoldAssignment& folds);

CvResult cross_validate(ClassifierKind kind, const EnergyFeatureTable& table,
                        const FoldAssignment& folds, const Hyperparams& hp, std::uint64_t seed);

}  // namespace peh
