#include "aggucb/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace aggucb {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    std::string_view tok = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
    out.push_back(tok);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

template <typename T>
T parse_or_throw(std::string_view s, const std::filesystem::path& path, std::size_t line_no) {
  T value{};
  if (!parse_number(s, value))
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(s) + "'");
  return value;
}

// Calls fn(fields, line_no) for every data line; skips blank lines and a
// leading header whose first field is not numeric.
template <typename Fn>
void for_each_row(const std::filesystem::path& path, std::size_t min_fields, Fn fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split(line);
    double probe;
    if (line_no == 1 && !parse_number(fields[0], probe)) continue;
    if (fields.size() < min_fields)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected at least " +
                               std::to_string(min_fields) + " fields");
    fn(fields, line_no);
  }
}

}  // namespace

std::vector<Rating> read_ratings_csv(const std::filesystem::path& path) {
  std::vector<Rating> out;
  for_each_row(path, 3, [&](const auto& f, std::size_t ln) {
    out.push_back(Rating{parse_or_throw<std::int64_t>(f[0], path, ln), parse_or_throw<std::int64_t>(f[1], path, ln),
                         parse_or_throw<double>(f[2], path, ln)});
  });
  return out;
}

LabeledFeatures read_features_csv(const std::filesystem::path& path) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for_each_row(path, 2, [&](const auto& f, std::size_t ln) {
    std::vector<double> row;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) row.push_back(parse_or_throw<double>(f[i], path, ln));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path.string() + ":" + std::to_string(ln) + ": inconsistent column count");
    rows.push_back(std::move(row));
    labels.push_back(parse_or_throw<int>(f.back(), path, ln));
  });
  if (rows.empty()) throw std::runtime_error(path.string() + ": no samples");
  LabeledFeatures out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  out.labels = std::move(labels);
  return out;
}

std::map<std::int64_t, std::vector<int>> read_item_groups_csv(const std::filesystem::path& path) {
  std::map<std::int64_t, std::vector<int>> out;
  for_each_row(path, 2, [&](const auto& f, std::size_t ln) {
    auto& groups = out[parse_or_throw<std::int64_t>(f[0], path, ln)];
    const int g = parse_or_throw<int>(f[1], path, ln);
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  });
  return out;
}

Vector gmf_context(const Vector& user_factor, const Vector& item_factor) {
  if (user_factor.size() != item_factor.size()) throw ShapeError("gmf_context: factor dimensions differ");
  Vector x(user_factor.size() + 1);
  x.head(user_factor.size()) = user_factor.cwiseProduct(item_factor);
  x[user_factor.size()] = 0.01;
  if (!x.allFinite()) throw std::invalid_argument("gmf_context: degenerate (non-finite) context");
  return x.normalized();
}

double classification_reward(int predicted, int truth, std::span<const int> class_of) {
  const auto n = static_cast<int>(class_of.size());
  if (predicted < 0 || predicted >= n || truth < 0 || truth >= n)
    throw std::out_of_range("classification_reward: sub-class label out of range");
  if (predicted == truth) return 1.0;
  if (class_of[static_cast<std::size_t>(predicted)] == class_of[static_cast<std::size_t>(truth)]) return 0.5;
  return 0.0;
}

ClassificationEnv::ClassificationEnv(const LabeledFeatures& data, int sub_divisions, std::uint64_t seed,
                                     int kmeans_iters)
    : rng_(seed) {
  const Eigen::Index n = data.features.rows();
  if (n == 0 || static_cast<std::size_t>(n) != data.labels.size())
    throw ShapeError("ClassificationEnv: features and labels disagree");
  if (sub_divisions < 1) throw std::invalid_argument("ClassificationEnv: sub_divisions must be >= 1");

  features_.resize(n, data.features.cols());
  for (Eigen::Index i = 0; i < n; ++i) features_.row(i) = unit_normalize(data.features.row(i).transpose()).transpose();

  const std::set<int> classes(data.labels.begin(), data.labels.end());
  sub_labels_.assign(static_cast<std::size_t>(n), -1);
  int class_index = 0;
  for (int cls : classes) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i)
      if (data.labels[static_cast<std::size_t>(i)] == cls) members.push_back(i);
    RowMatrix pts(static_cast<Eigen::Index>(members.size()), features_.cols());
    for (std::size_t r = 0; r < members.size(); ++r) pts.row(static_cast<Eigen::Index>(r)) = features_.row(members[r]);
    const auto km = kmeans(pts, sub_divisions, kmeans_iters, seed + static_cast<std::uint64_t>(class_index));
    for (std::size_t r = 0; r < members.size(); ++r)
      sub_labels_[static_cast<std::size_t>(members[r])] = class_index * sub_divisions + km.assignments[r];
    for (int s = 0; s < sub_divisions; ++s) class_of_.push_back(class_index);
    ++class_index;
  }
}

EnvRound ClassificationEnv::next_round() {
  std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(features_.rows()) - 1);
  current_ = pick(rng_);
  const Vector x = features_.row(static_cast<Eigen::Index>(current_)).transpose();
  const int truth = sub_labels_[current_];
  EnvRound round;
  for (int s = 0; s < n_groups(); ++s) {
    round.candidates.push_back(ArmContext{x, s, s});
    round.expected.push_back(classification_reward(s, truth, class_of_));
  }
  ++round_;
  return round;
}

double ClassificationEnv::observe(const EnvRound& round, std::size_t chosen) { return round.expected.at(chosen); }

RecommendationEnv::RecommendationEnv(const std::vector<Rating>& ratings,
                                     const std::map<std::int64_t, std::vector<int>>& item_groups,
                                     const RecommendationOptions& opts, std::uint64_t seed)
    : rank_(opts.rank), arms_(opts.arms_per_round), rng_(seed) {
  if (opts.rank < 1 || opts.arms_per_round < 1) throw std::invalid_argument("RecommendationEnv: bad options");

  std::set<int> group_ids;
  for (const auto& [item, groups] : item_groups) group_ids.insert(groups.begin(), groups.end());
  const std::vector<int> group_list(group_ids.begin(), group_ids.end());
  n_groups_ = static_cast<int>(group_list.size());
  const auto group_index = [&](int g) {
    return static_cast<int>(std::lower_bound(group_list.begin(), group_list.end(), g) - group_list.begin());
  };

  std::map<std::int64_t, int> users, items;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : ratings) {
    if (!item_groups.contains(r.item)) continue;
    users.emplace(r.user, 0);
    items.emplace(r.item, 0);
    lo = std::min(lo, r.rating);
    hi = std::max(hi, r.rating);
  }
  if (users.empty()) throw std::invalid_argument("RecommendationEnv: no ratings for grouped items");
  int idx = 0;
  for (auto& [id, i] : users) i = idx++;
  idx = 0;
  for (auto& [id, i] : items) {
    i = idx++;
    item_ids_.push_back(id);
    std::vector<int> gs;
    for (int g : item_groups.at(id)) gs.push_back(group_index(g));
    item_group_list_.push_back(std::move(gs));
  }
  if (rank_ > static_cast<int>(std::min(users.size(), items.size())))
    throw std::invalid_argument("RecommendationEnv: rank exceeds the rating matrix dimensions");

  Matrix r = Matrix::Zero(static_cast<Eigen::Index>(users.size()), static_cast<Eigen::Index>(items.size()));
  user_rated_.resize(users.size());
  for (const auto& rt : ratings) {
    if (!item_groups.contains(rt.item)) continue;
    const int u = users.at(rt.user), i = items.at(rt.item);
    const double norm = hi > lo ? (rt.rating - lo) / (hi - lo) : 1.0;
    r(u, i) = norm;
    auto& rated = user_rated_[static_cast<std::size_t>(u)];
    auto it = std::find_if(rated.begin(), rated.end(), [&](const auto& p) { return p.first == i; });
    if (it == rated.end()) rated.emplace_back(i, norm);
    else it->second = norm;
  }
  for (std::size_t u = 0; u < user_rated_.size(); ++u)
    if (!user_rated_[u].empty()) active_users_.push_back(static_cast<int>(u));

  const auto svd = truncated_svd(r, rank_, opts.svd_iters, seed);
  const Vector root = svd.sigma.cwiseSqrt();
  user_factors_ = svd.u * root.asDiagonal();
  item_factors_ = svd.v * root.asDiagonal();
}

EnvRound RecommendationEnv::next_round() {
  std::uniform_int_distribution<std::size_t> pick_user(0, active_users_.size() - 1);
  const int u = active_users_[pick_user(rng_)];
  auto rated = user_rated_[static_cast<std::size_t>(u)];
  const std::size_t take = std::min(rated.size(), static_cast<std::size_t>(arms_));
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, rated.size() - 1);
    std::swap(rated[i], rated[pick(rng_)]);
  }
  EnvRound round;
  const Vector uf = user_factors_.row(u).transpose();
  for (std::size_t i = 0; i < take; ++i) {
    const auto [item, rating] = rated[i];
    const Vector x = gmf_context(uf, item_factors_.row(item).transpose());
    for (int g : item_group_list_[static_cast<std::size_t>(item)]) {
      round.candidates.push_back(ArmContext{x, g, item_ids_[static_cast<std::size_t>(item)]});
      round.expected.push_back(rating);
    }
  }
  return round;
}

double RecommendationEnv::observe(const EnvRound& round, std::size_t chosen) { return round.expected.at(chosen); }

}  // namespace aggucb
