#include "core/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "core/error.hpp"
#include "core/text.hpp"

namespace core {

std::string normalize_answer(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : text::to_lower(s)) {
    if (!text::is_punct(c)) cleaned.push_back(c);
  }
  std::string out;
  for (auto tok : text::tokenize(cleaned)) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

EmF1 em_f1(std::string_view prediction, const std::vector<std::string>& gold_answers) {
  if (gold_answers.empty()) throw ValidationError("em_f1: no gold answers");
  const auto pred = normalize_answer(prediction);
  const auto pred_toks = text::tokenize(pred);
  EmF1 best;
  for (const auto& g : gold_answers) {
    const auto gold = normalize_answer(g);
    if (gold == pred) best.em = 1;
    const auto gold_toks = text::tokenize(gold);
    double f1 = 0.0;
    if (pred_toks.empty() || gold_toks.empty()) {
      f1 = pred_toks.empty() && gold_toks.empty() ? 1.0 : 0.0;
    } else {
      std::unordered_map<std::string_view, int> counts;
      for (auto t : gold_toks) ++counts[t];
      int common = 0;
      for (auto t : pred_toks) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
          --it->second;
          ++common;
        }
      }
      if (common > 0) {
        const double p = static_cast<double>(common) / static_cast<double>(pred_toks.size());
        const double r = static_cast<double>(common) / static_cast<double>(gold_toks.size());
        f1 = 2.0 * p * r / (p + r);
      }
    }
    best.f1 = std::max(best.f1, f1);
  }
  return best;
}

int recall_at_k(const std::vector<std::string>& ranked_chunks, const std::vector<std::string>& gold_chunks,
                std::size_t k) {
  if (k == 0) throw ValidationError("recall_at_k: k must be >= 1");
  const auto n = std::min(k, ranked_chunks.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(gold_chunks.begin(), gold_chunks.end(), ranked_chunks[i]) != gold_chunks.end()) return 1;
  }
  return 0;
}

int answer_recall_at_k(const std::vector<std::string>& reader_texts, const std::vector<std::string>& answers,
                       std::size_t k) {
  if (k == 0) throw ValidationError("answer_recall_at_k: k must be >= 1");
  std::vector<std::vector<std::string>> needles;
  for (const auto& a : answers) {
    const auto norm = normalize_answer(a);
    auto toks = text::tokenize(norm);
    if (!toks.empty()) needles.emplace_back(toks.begin(), toks.end());
  }
  const auto n = std::min(k, reader_texts.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto norm = normalize_answer(reader_texts[i]);
    const auto hay = text::tokenize(norm);
    for (const auto& needle : needles) {
      if (std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end()) return 1;
    }
  }
  return 0;
}

std::map<std::string, double> MetricReport::aggregates() const {
  std::map<std::string, double> out;
  for (const auto& [name, values] : columns) {
    double sum = 0.0;
    for (double v : values) sum += v;
    out[name] = values.empty() ? 0.0 : 100.0 * sum / static_cast<double>(values.size());
  }
  return out;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json per_question = nlohmann::json::array();
  for (std::size_t i = 0; i < qids.size(); ++i) {
    nlohmann::json row = {{"qid", qids[i]}};
    for (const auto& [name, values] : columns) {
      if (i < values.size()) row[name] = values[i];
    }
    per_question.push_back(std::move(row));
  }
  return {{"name", name}, {"config", config}, {"aggregates", aggregates()}, {"per_question", per_question}};
}

std::string format_table(const std::vector<MetricReport>& reports, const std::vector<std::string>& order) {
  std::size_t name_w = 4;
  for (const auto& r : reports) name_w = std::max(name_w, r.name.size());
  std::ostringstream out;
  out << std::string(name_w, ' ');
  for (const auto& col : order) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "  %7s", col.c_str());
    out << buf;
  }
  out << '\n';
  for (const auto& r : reports) {
    out << r.name << std::string(name_w - r.name.size(), ' ');
    const auto agg = r.aggregates();
    for (const auto& col : order) {
      char buf[32];
      auto it = agg.find(col);
      if (it == agg.end()) {
        std::snprintf(buf, sizeof buf, "  %7s", "-");
      } else {
        std::snprintf(buf, sizeof buf, "  %7.1f", it->second);
      }
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace core
