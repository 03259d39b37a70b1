#include "statenet/eval/report.hpp"

#include <sstream>

#include "statenet/core.hpp"
#include "statenet/eval/metrics.hpp"

namespace statenet::eval {
using nlohmann::json;

namespace {

std::optional<double> mean_of(const std::vector<FoldMetrics>& folds, std::optional<double> FoldMetrics::*field,
                              const char* name) {
  double sum = 0.0;
  int n = 0;
  for (const auto& f : folds) {
    if (f.*field) {
      sum += *(f.*field);
      ++n;
    } else {
      warn(std::string(name) + " undefined for fold " + f.fold + " (" + f.montage + "); excluded from the average");
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "undefined";
  std::ostringstream out;
  out.precision(17);
  out << *v;
  return out.str();
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

void MetricReport::finalize() {
  mean_auroc = mean_of(folds, &FoldMetrics::auroc, "AUROC");
  mean_auprc = mean_of(folds, &FoldMetrics::auprc, "AUPRC");
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out << "fold,montage,auroc,auprc\n";
  for (const auto& f : folds) out << f.fold << ',' << f.montage << ',' << cell(f.auroc) << ',' << cell(f.auprc) << '\n';
  const std::string montage = folds.empty() ? "" : folds.front().montage;
  out << "average," << montage << ',' << cell(mean_auroc) << ',' << cell(mean_auprc) << '\n';
  return out.str();
}

json MetricReport::to_json() const {
  json rows = json::array();
  for (const auto& f : folds) {
    rows.push_back({{"fold", f.fold},
                    {"montage", f.montage},
                    {"auroc", opt_json(f.auroc)},
                    {"auprc", opt_json(f.auprc)},
                    {"windows", f.windows},
                    {"positives", f.positives}});
  }
  return {{"folds", rows},
          {"average", {{"auroc", opt_json(mean_auroc)}, {"auprc", opt_json(mean_auprc)}}},
          {"meta", meta}};
}

MetricReport MetricReport::from_json(const json& j) {
  MetricReport r;
  for (const auto& row : j.at("folds")) {
    FoldMetrics f;
    f.fold = row.at("fold").get<std::string>();
    f.montage = row.at("montage").get<std::string>();
    f.auroc = opt_from(row.at("auroc"));
    f.auprc = opt_from(row.at("auprc"));
    f.windows = row.value("windows", std::size_t{0});
    f.positives = row.value("positives", std::size_t{0});
    r.folds.push_back(std::move(f));
  }
  r.mean_auroc = opt_from(j.at("average").at("auroc"));
  r.mean_auprc = opt_from(j.at("average").at("auprc"));
  r.meta = j.value("meta", json::object());
  return r;
}

FoldMetrics score_fold(const std::string& fold, const std::string& montage, const std::vector<double>& scores,
                       const std::vector<int>& labels) {
  FoldMetrics f;
  f.fold = fold;
  f.montage = montage;
  f.windows = labels.size();
  for (int y : labels) f.positives += static_cast<std::size_t>(y);
  try {
    f.auroc = auroc(scores, labels);
  } catch (const UndefinedMetric&) {
  }
  try {
    f.auprc = auprc(scores, labels);
  } catch (const UndefinedMetric&) {
  }
  return f;
}

}  // namespace statenet::eval
