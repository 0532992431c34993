#include "core/router.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "core/binary_io.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

namespace core {

namespace {

double margin(const LinearClassifier& clf, std::span<const float> x) {
  if (x.size() != clf.w.size()) {
    throw ValidationError("router: question dim " + std::to_string(x.size()) + " != classifier dim " +
                          std::to_string(clf.w.size()));
  }
  double z = clf.b;
  for (std::size_t k = 0; k < x.size(); ++k) z += clf.w[k] * x[k];
  return z;
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// log(1 + exp(-z)) without overflow.
double softplus_neg(double z) { return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

}  // namespace

std::string_view to_string(QuestionType t) { return t == QuestionType::MultiHop ? "multi-hop" : "single-hop"; }

QuestionType parse_question_type(std::string_view s) {
  if (s == "multi-hop") return QuestionType::MultiHop;
  if (s == "single-hop") return QuestionType::SingleHop;
  throw ValidationError("unknown question type: " + std::string(s) + " (expected single-hop|multi-hop)");
}

double logistic_loss(const LinearClassifier& clf, const std::vector<Vector>& xs, std::span<const int> labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double z = margin(clf, xs[i]);
    loss += labels[i] == 1 ? softplus_neg(z) : softplus_neg(-z);
  }
  return xs.empty() ? 0.0 : loss / static_cast<double>(xs.size());
}

LinearClassifier train_logistic(const std::vector<Vector>& xs, std::span<const int> labels,
                                const LogisticTraining& opts) {
  if (xs.empty() || xs.size() != labels.size()) throw ValidationError("router: need one label per example");
  const std::size_t dim = xs.front().size();
  bool has[2] = {false, false};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("router: labels must be 0 or 1");
    if (xs[i].size() != dim) throw ValidationError("router: ragged embeddings");
    has[labels[i]] = true;
  }
  if (!has[0] || !has[1]) throw ValidationError("router: training data must contain both question types");

  LinearClassifier clf{std::vector<double>(dim, 0.0), 0.0};
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = rng_stream(opts.seed, "router");
  const std::size_t batch = opts.batch_size == 0 ? xs.size() : opts.batch_size;

  std::vector<double> gw(dim);
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    if (batch < xs.size()) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::fill(gw.begin(), gw.end(), 0.0);
      double gb = 0.0;
      for (std::size_t j = start; j < stop; ++j) {
        const auto i = order[j];
        const double g = sigmoid(margin(clf, xs[i])) - labels[i];
        for (std::size_t k = 0; k < dim; ++k) gw[k] += g * xs[i][k];
        gb += g;
      }
      const double scale = opts.learning_rate / static_cast<double>(stop - start);
      for (std::size_t k = 0; k < dim; ++k) clf.w[k] -= scale * gw[k];
      clf.b -= scale * gb;
    }
  }
  return clf;
}

double multi_hop_probability(const LinearClassifier& clf, std::span<const float> x) {
  return sigmoid(margin(clf, x));
}

QuestionType route(const LinearClassifier& clf, std::span<const float> x) {
  // Sign of the margin avoids rounding in the sigmoid near 0.5.
  return margin(clf, x) >= 0.0 ? QuestionType::MultiHop : QuestionType::SingleHop;
}

void save_classifier(const LinearClassifier& clf, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  binio::write_magic(out, "CRTR");
  binio::write_u32(out, static_cast<std::uint32_t>(clf.w.size()));
  for (double x : clf.w) binio::write_f64(out, x);
  binio::write_f64(out, clf.b);
}

LinearClassifier load_classifier(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  binio::expect_magic(in, "CRTR", path.string());
  LinearClassifier clf;
  clf.w.resize(binio::read_u32(in));
  for (auto& x : clf.w) x = binio::read_f64(in);
  clf.b = binio::read_f64(in);
  return clf;
}

}  // namespace core
