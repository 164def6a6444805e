#pragma once

#include "aggucb/environment.hpp"
#include "aggucb/preprocessing.hpp"

#include <filesystem>
#include <map>
#include <random>
#include <span>

namespace aggucb {

struct Rating {
  std::int64_t user = 0;
  std::int64_t item = 0;
  double rating = 0.0;
};

/// user_id,item_id,rating rows. A non-numeric first line is treated as a header.
std::vector<Rating> read_ratings_csv(const std::filesystem::path& path);

struct LabeledFeatures {
  RowMatrix features;
  std::vector<int> labels;
};

/// Comma-separated floats per row, last column an integer class label.
LabeledFeatures read_features_csv(const std::filesystem::path& path);

/// item_id,group_id rows; an item may belong to several groups.
std::map<std::int64_t, std::vector<int>> read_item_groups_csv(const std::filesystem::path& path);

/// normalize([user ⊙ item ; 0.01])
Vector gmf_context(const Vector& user_factor, const Vector& item_factor);

/// 1 for the right sub-class, 0.5 for a sibling sub-class of the same class,
/// 0 otherwise. `class_of[s]` is the original class of sub-class s.
double classification_reward(int predicted, int truth, std::span<const int> class_of);

/// Every round draws one sample; each sub-class is an arm group offered with
/// the sample's normalized features.
class ClassificationEnv : public Environment {
 public:
  ClassificationEnv(const LabeledFeatures& data, int sub_divisions, std::uint64_t seed,
                    int kmeans_iters = 50);

  std::string_view name() const override { return "classification"; }
  int context_dim() const override { return static_cast<int>(features_.cols()); }
  int n_groups() const override { return static_cast<int>(class_of_.size()); }
  EnvRound next_round() override;
  double observe(const EnvRound& round, std::size_t chosen) override;
  bool ingest_all_candidates() const override { return false; }

  std::span<const int> sub_labels() const noexcept { return sub_labels_; }
  std::span<const int> class_of() const noexcept { return class_of_; }

 private:
  RowMatrix features_;
  std::vector<int> sub_labels_;
  std::vector<int> class_of_;
  std::mt19937_64 rng_;
  std::size_t current_ = 0;
  std::int64_t round_ = 0;
};

struct RecommendationOptions {
  int rank = 20;
  int arms_per_round = 10;
  int svd_iters = 100;
};

/// GMF contexts from SVD factors of the min-max normalized rating matrix.
/// Every round picks a user and offers items the user rated, one candidate per
/// (item, group) pair.
class RecommendationEnv : public Environment {
 public:
  RecommendationEnv(const std::vector<Rating>& ratings,
                    const std::map<std::int64_t, std::vector<int>>& item_groups,
                    const RecommendationOptions& opts, std::uint64_t seed);

  std::string_view name() const override { return "recommendation"; }
  int context_dim() const override { return rank_ + 1; }
  int n_groups() const override { return n_groups_; }
  EnvRound next_round() override;
  double observe(const EnvRound& round, std::size_t chosen) override;

  const Matrix& user_factors() const noexcept { return user_factors_; }
  const Matrix& item_factors() const noexcept { return item_factors_; }

 private:
  int rank_;
  int arms_;
  int n_groups_ = 0;
  std::vector<std::int64_t> item_ids_;
  std::vector<std::vector<int>> item_group_list_;
  std::vector<std::vector<std::pair<int, double>>> user_rated_;  // (item index, normalized rating)
  std::vector<int> active_users_;
  Matrix user_factors_;
  Matrix item_factors_;
  std::mt19937_64 rng_;
};

}  // namespace aggucb
