// Line-delimited JSON stand-in for an external model server, backed by the
// reference implementations. "--fail-after N" answers N requests and then
// replies with an error.
#include <cstdlib>
#include <iostream>
#include <string>

#include <json.hpp>

#include "core/embed.hpp"
#include "core/qg_scorer.hpp"

int main(int argc, char** argv) {
  std::size_t dim = core::kDefaultEmbeddingDim;
  long fail_after = -1;
  for (int i = 1; i + 1 < argc; i += 2) {
    std::string flag = argv[i];
    if (flag == "--dim") dim = std::strtoul(argv[i + 1], nullptr, 10);
    if (flag == "--fail-after") fail_after = std::strtol(argv[i + 1], nullptr, 10);
  }
  core::ReferenceProvider provider(dim);
  const std::string suffix = "\n" + std::string(core::kQgInstruction);
  std::string line;
  long served = 0;
  while (std::getline(std::cin, line)) {
    nlohmann::json reply;
    try {
      if (fail_after >= 0 && served >= fail_after) throw std::runtime_error("quota exhausted");
      auto req = nlohmann::json::parse(line);
      const auto op = req.at("op").get<std::string>();
      if (op == "embed_doc") {
        reply["values"] = provider.embed_doc("", req.at("text").get<std::string>());
      } else if (op == "embed_question") {
        reply["values"] = provider.embed_question("", req.at("text").get<std::string>());
      } else if (op == "token_states") {
        reply["states"] = provider.token_states(req.at("text").get<std::string>());
      } else if (op == "qg_score") {
        auto doc = req.at("doc").get<std::string>();
        if (doc.size() < suffix.size() || doc.compare(doc.size() - suffix.size(), suffix.size(), suffix) != 0) {
          throw std::runtime_error("prompt is missing the instruction");
        }
        doc.resize(doc.size() - suffix.size());
        reply["score"] = core::reference_score(req.at("question").get<std::string>(), doc);
      } else {
        throw std::runtime_error("unknown op " + op);
      }
    } catch (const std::exception& e) {
      reply = {{"error", e.what()}};
    }
    ++served;
    std::cout << reply.dump() << '\n' << std::flush;
  }
  return 0;
}
