#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bheisr/corpus.hpp"
#include "bheisr/features.hpp"
#include "bheisr/pathfinder.hpp"

namespace bheisr {

struct GenerationRequest {
  PromptPath prompt;
  std::string item_id;
  std::uint64_t seed = 0;
};

struct GenerationOutcome {
  Item item;
  bool fell_back = false;
  std::string note;
};

// Produces a generated item whose content spans every category of a prompt.
// Implementations must be safe to call concurrently for different sessions.
class GeneratorPort {
 public:
  virtual ~GeneratorPort() = default;
  virtual GenerationOutcome generate(const GenerationRequest& req) const = 0;
};

// Uniform weights over the prompt's categories; category = first node,
// subcategory = the prompt key.
inline Item generated_shell(const GenerationRequest& req) {
  req.prompt.validate();
  Item it;
  it.id = req.item_id;
  it.origin = Origin::generated;
  it.category = req.prompt.nodes.front();
  it.subcategory = req.prompt.key();
  it.prompt_key = req.prompt.key();
  const double w = 1.0 / static_cast<double>(req.prompt.size());
  for (const auto& c : req.prompt.nodes) it.category_weights[c] = w;
  return it;
}

// Offline generator: stitches each category's name and its strongest
// TF-IDF terms into a title and abstract.
class TemplateGenerator : public GeneratorPort {
 public:
  static constexpr std::size_t kTopTerms = 6;
  static constexpr std::size_t kTermsPerCategory = 3;

  TemplateGenerator(const CategoryGraph& graph, const Vocabulary& vocab) {
    for (const auto& c : graph.categories()) {
      auto e = graph.category_vector(c).entries();
      std::stable_sort(e.begin(), e.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      auto& terms = top_[c];
      for (std::size_t i = 0; i < e.size() && terms.size() < kTopTerms; ++i)
        terms.push_back(vocab.term(e[i].first));
    }
  }

  const std::vector<std::string>& top_terms(const std::string& category) const {
    static const std::vector<std::string> none;
    auto it = top_.find(category);
    return it == top_.end() ? none : it->second;
  }

  GenerationOutcome generate(const GenerationRequest& req) const override {
    Item it = generated_shell(req);
    std::vector<std::string> title{"Exploring"}, abstract;
    for (std::size_t i = 0; i < req.prompt.size(); ++i) {
      const auto& c = req.prompt.nodes[i];
      const auto& terms = top_terms(c);
      title.push_back(c);
      if (i + 1 < req.prompt.size()) title.push_back(i + 2 == req.prompt.size() ? "and" : "to");
      abstract.push_back(c);
      // rotate through the top terms with the seed; always at least 2 of them
      const std::size_t n = std::min(kTermsPerCategory, terms.size());
      for (std::size_t j = 0; j < n; ++j)
        abstract.push_back(terms[(req.seed + j) % terms.size()]);
    }
    it.title = std::move(title);
    it.abstract = std::move(abstract);
    return {std::move(it), false, {}};
  }

 private:
  std::map<std::string, std::vector<std::string>> top_;
};

}  // namespace bheisr
