#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace statenet::eval {

struct FoldMetrics {
  std::string fold;  // "1".."k"
  std::string montage;
  std::optional<double> auroc;  // nullopt when undefined for the fold
  std::optional<double> auprc;
  std::size_t windows = 0;
  std::size_t positives = 0;
};

// Per-fold metrics plus their averages. Undefined fold metrics are excluded
// from the average (with a warning), never imputed.
struct MetricReport {
  std::vector<FoldMetrics> folds;
  std::optional<double> mean_auroc;
  std::optional<double> mean_auprc;
  nlohmann::json meta = nlohmann::json::object();

  // Recomputes the averages from the fold rows.
  void finalize();

  // fold,montage,auroc,auprc with one row per fold and a final "average" row;
  // undefined cells read "undefined".
  std::string to_csv() const;
  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

// Scores held-out predictions; undefined metrics come back as nullopt.
FoldMetrics score_fold(const std::string& fold, const std::string& montage, const std::vector<double>& scores,
                       const std::vector<int>& labels);

}  // namespace statenet::eval
