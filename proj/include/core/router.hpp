#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "core/embed.hpp"

namespace core {

enum class QuestionType { SingleHop = 0, MultiHop = 1 };

std::string_view to_string(QuestionType t);
QuestionType parse_question_type(std::string_view s);

struct LinearClassifier {
  std::vector<double> w;
  double b = 0.0;
};

struct LogisticTraining {
  std::size_t epochs = 200;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  // 0 = full batch; otherwise mini-batches over a seeded shuffle.
  std::size_t batch_size = 0;
};

// Mean logistic loss of the classifier on a labelled set.
double logistic_loss(const LinearClassifier& clf, const std::vector<Vector>& xs, std::span<const int> labels);

// Gradient descent on the mean logistic loss from a zero start. Labels are
// 0 (single-hop) / 1 (multi-hop); both classes must be present.
LinearClassifier train_logistic(const std::vector<Vector>& xs, std::span<const int> labels,
                                const LogisticTraining& opts = {});

double multi_hop_probability(const LinearClassifier& clf, std::span<const float> x);

// Probability >= 0.5 routes to multi-hop, so ties keep the linker.
QuestionType route(const LinearClassifier& clf, std::span<const float> x);

// CRTR: magic, dim u32, then dim + 1 little-endian f64 (w then b).
void save_classifier(const LinearClassifier& clf, const std::filesystem::path& path);
LinearClassifier load_classifier(const std::filesystem::path& path);

}  // namespace core
