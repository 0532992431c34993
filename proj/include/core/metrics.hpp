#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace core {

// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse
// whitespace.
std::string normalize_answer(std::string_view s);

struct EmF1 {
  int em = 0;
  double f1 = 0.0;
};

// Max over gold answers. Throws on an empty gold list.
EmF1 em_f1(std::string_view prediction, const std::vector<std::string>& gold_answers);

// 1 iff one of the first k ids is a gold chunk.
int recall_at_k(const std::vector<std::string>& ranked_chunks, const std::vector<std::string>& gold_chunks,
                std::size_t k);

// 1 iff some normalized answer occurs as a contiguous token run of the
// normalized text of one of the first k chains.
int answer_recall_at_k(const std::vector<std::string>& reader_texts, const std::vector<std::string>& answers,
                       std::size_t k);

// Column name -> per-question values, averaged into percentages.
struct MetricReport {
  std::string name;
  std::vector<std::string> qids;
  std::map<std::string, std::vector<double>> columns;
  nlohmann::json config;

  void add(const std::string& column, double value) { columns[column].push_back(value); }
  // mean * 100 for each column.
  std::map<std::string, double> aggregates() const;
  nlohmann::json to_json() const;
};

// Aligned plain-text table, one row per report, columns in `order`.
std::string format_table(const std::vector<MetricReport>& reports, const std::vector<std::string>& order);

}  // namespace core
