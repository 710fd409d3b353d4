#pragma once

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "cmsent/errors.hpp"
#include "cmsent/labels.hpp"

namespace cmsent::eval {

struct ConfusionMatrix {
  int classes = labels::kLabelCount;
  std::vector<std::uint64_t> cells;  // [gold * classes + pred]

  explicit ConfusionMatrix(int class_count = labels::kLabelCount) : classes(class_count) {
    if (class_count <= 0) throw std::invalid_argument("ConfusionMatrix: classes must be positive");
    cells.assign(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0);
  }

  void check(int gold, int pred) const {
    if (gold < 0 || gold >= classes || pred < 0 || pred >= classes) {
      throw std::invalid_argument("ConfusionMatrix: class index out of range");
    }
  }

  void add(int gold, int pred, std::uint64_t count = 1) {
    check(gold, pred);
    cells[static_cast<std::size_t>(gold) * static_cast<std::size_t>(classes) +
          static_cast<std::size_t>(pred)] += count;
  }

  std::uint64_t at(int gold, int pred) const {
    check(gold, pred);
    return cells[static_cast<std::size_t>(gold) * static_cast<std::size_t>(classes) +
                 static_cast<std::size_t>(pred)];
  }

  std::uint64_t row_total(int gold) const {
    std::uint64_t sum = 0;
    for (int pred = 0; pred < classes; ++pred) sum += at(gold, pred);
    return sum;
  }

  std::uint64_t col_total(int pred) const {
    std::uint64_t sum = 0;
    for (int gold = 0; gold < classes; ++gold) sum += at(gold, pred);
    return sum;
  }

  std::uint64_t trace() const {
    std::uint64_t sum = 0;
    for (int k = 0; k < classes; ++k) sum += at(k, k);
    return sum;
  }

  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (auto c : cells) sum += c;
    return sum;
  }
};

inline ConfusionMatrix confusion_from(const std::vector<int>& gold, const std::vector<int>& pred,
                                      int classes = labels::kLabelCount) {
  if (gold.size() != pred.size()) {
    throw std::invalid_argument("confusion_from: gold/pred size mismatch");
  }
  ConfusionMatrix cm(classes);
  for (std::size_t idx = 0; idx < gold.size(); ++idx) cm.add(gold[idx], pred[idx]);
  return cm;
}

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct MetricsReport {
  ConfusionMatrix confusion{labels::kLabelCount};
  std::uint64_t total = 0;
  double accuracy = 0.0;
  bool zero_division = false;  // some ratio had a zero denominator (reported as 0)
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
};

inline std::vector<std::string> default_class_names(int classes) {
  std::vector<std::string> names;
  if (classes == labels::kLabelCount) {
    for (int k = 0; k < classes; ++k) {
      names.emplace_back(labels::label_name(labels::index_to_label(k)));
    }
  } else {
    for (int k = 0; k < classes; ++k) names.push_back("class_" + std::to_string(k));
  }
  return names;
}

/// Computes accuracy, per-class precision/recall/F1, and macro / weighted
/// averages from a confusion matrix. Zero denominators yield 0 and set the
/// zero_division flag. Canonical arithmetic, which tests reproduce exactly:
/// each ratio is formed from the exact integer cell sums; weighted recall is
/// computed as trace/total, which is algebraically identical to
/// sum(recall_k * support_k) / total and bit-identical to accuracy.
inline MetricsReport compute_metrics(const ConfusionMatrix& cm,
                                     std::vector<std::string> names = {}) {
  if (names.empty()) {
    names = default_class_names(cm.classes);
  } else if (names.size() != static_cast<std::size_t>(cm.classes)) {
    throw std::invalid_argument("compute_metrics: names size mismatch");
  }
  MetricsReport report;
  report.confusion = cm;
  report.total = cm.total();

  const double total = static_cast<double>(report.total);
  if (report.total == 0) {
    report.zero_division = true;
  } else {
    report.accuracy = static_cast<double>(cm.trace()) / total;
  }

  double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  double wsum_p = 0.0, wsum_f = 0.0;
  for (int k = 0; k < cm.classes; ++k) {
    ClassMetrics m;
    m.label = names[static_cast<std::size_t>(k)];
    const std::uint64_t tp = cm.at(k, k);
    const std::uint64_t predicted = cm.col_total(k);
    m.support = cm.row_total(k);
    if (predicted == 0) {
      report.zero_division = true;
    } else {
      m.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    }
    if (m.support == 0) {
      report.zero_division = true;
    } else {
      m.recall = static_cast<double>(tp) / static_cast<double>(m.support);
    }
    if (m.precision + m.recall == 0.0) {
      report.zero_division = true;
    } else {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    sum_p += m.precision;
    sum_r += m.recall;
    sum_f += m.f1;
    wsum_p += m.precision * static_cast<double>(m.support);
    wsum_f += m.f1 * static_cast<double>(m.support);
    report.per_class.push_back(std::move(m));
  }
  const double classes = static_cast<double>(cm.classes);
  report.macro_precision = sum_p / classes;
  report.macro_recall = sum_r / classes;
  report.macro_f1 = sum_f / classes;
  if (report.total != 0) {
    report.weighted_precision = wsum_p / total;
    report.weighted_recall = report.accuracy;  // trace/total, see above
    report.weighted_f1 = wsum_f / total;
  }
  return report;
}

/// Short name for compute_metrics.
inline MetricsReport metrics(const ConfusionMatrix& cm, std::vector<std::string> names = {}) {
  return compute_metrics(cm, std::move(names));
}

namespace detail {

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace detail

/// Plain-text table: per-class precision, recall, F1, support, then macro and
/// weighted averages, all to four decimals.
inline std::string format_report_text(const MetricsReport& report) {
  std::size_t label_width = std::string("weighted avg").size();
  for (const auto& m : report.per_class) label_width = std::max(label_width, m.label.size());
  label_width += 2;

  std::ostringstream os;
  os << "examples: " << report.total << '\n';
  os << "accuracy: " << detail::fixed4(report.accuracy) << '\n';
  if (report.zero_division) os << "note: zero-denominator metrics reported as 0\n";
  os << '\n';
  os << detail::pad("class", label_width) << detail::pad("precision", 11)
     << detail::pad("recall", 11) << detail::pad("f1", 11) << "support" << '\n';
  for (const auto& m : report.per_class) {
    os << detail::pad(m.label, label_width) << detail::pad(detail::fixed4(m.precision), 11)
       << detail::pad(detail::fixed4(m.recall), 11) << detail::pad(detail::fixed4(m.f1), 11)
       << m.support << '\n';
  }
  os << detail::pad("macro avg", label_width) << detail::pad(detail::fixed4(report.macro_precision), 11)
     << detail::pad(detail::fixed4(report.macro_recall), 11)
     << detail::pad(detail::fixed4(report.macro_f1), 11) << report.total << '\n';
  os << detail::pad("weighted avg", label_width)
     << detail::pad(detail::fixed4(report.weighted_precision), 11)
     << detail::pad(detail::fixed4(report.weighted_recall), 11)
     << detail::pad(detail::fixed4(report.weighted_f1), 11) << report.total << '\n';
  return os.str();
}

/// Stable-keyed JSON form of a metrics report.
inline nlohmann::ordered_json report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["total"] = report.total;
  j["accuracy"] = report.accuracy;
  j["zero_division"] = report.zero_division;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int gold = 0; gold < report.confusion.classes; ++gold) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int pred = 0; pred < report.confusion.classes; ++pred) {
      row.push_back(report.confusion.at(gold, pred));
    }
    rows.push_back(std::move(row));
  }
  j["confusion"] = std::move(rows);
  nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
  for (const auto& m : report.per_class) {
    nlohmann::ordered_json cj;
    cj["label"] = m.label;
    cj["precision"] = m.precision;
    cj["recall"] = m.recall;
    cj["f1"] = m.f1;
    cj["support"] = m.support;
    per_class.push_back(std::move(cj));
  }
  j["per_class"] = std::move(per_class);
  j["macro"] = {{"precision", report.macro_precision},
                {"recall", report.macro_recall},
                {"f1", report.macro_f1}};
  j["weighted"] = {{"precision", report.weighted_precision},
                   {"recall", report.weighted_recall},
                   {"f1", report.weighted_f1}};
  return j;
}

/// Confusion matrix as CSV: header row of predicted-class names, one row per
/// gold class.
inline std::string confusion_csv(const ConfusionMatrix& cm, std::vector<std::string> names = {}) {
  if (names.empty()) {
    names = default_class_names(cm.classes);
  } else if (names.size() != static_cast<std::size_t>(cm.classes)) {
    throw std::invalid_argument("confusion_csv: names size mismatch");
  }
  std::ostringstream os;
  os << "gold\\pred";
  for (const auto& name : names) os << ',' << name;
  os << '\n';
  for (int gold = 0; gold < cm.classes; ++gold) {
    os << names[static_cast<std::size_t>(gold)];
    for (int pred = 0; pred < cm.classes; ++pred) os << ',' << cm.at(gold, pred);
    os << '\n';
  }
  return os.str();
}

}  // namespace cmsent::eval
