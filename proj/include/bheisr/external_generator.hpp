#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "bheisr/generator.hpp"

namespace bheisr {

// POSTs {prompt_categories, exemplar_snippets, max_tokens} to a URL and
// expects {title, abstract}. Any failure after the retries falls back to
// the template generator; the outcome carries the reason.
class ExternalGenerator : public GeneratorPort {
 public:
  ExternalGenerator(std::string url, int timeout_ms, const TemplateGenerator& fallback,
                    int retries = 2, int max_tokens = 128)
      : fallback_(fallback), timeout_ms_(timeout_ms), retries_(retries), max_tokens_(max_tokens) {
    const auto scheme = url.find("://");
    const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    base_ = slash == std::string::npos ? url : url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
  }

  nlohmann::json request_body(const PromptPath& p) const {
    std::vector<std::string> snippets;
    for (const auto& c : p.nodes) snippets.push_back(c + ": " + join(fallback_.top_terms(c), " "));
    return {{"prompt_categories", p.nodes},
            {"exemplar_snippets", snippets},
            {"max_tokens", max_tokens_}};
  }

  GenerationOutcome generate(const GenerationRequest& req) const override {
    Item shell = generated_shell(req);
    const std::string body = request_body(req.prompt).dump();
    std::string why = "no attempt";
    for (int attempt = 0; attempt <= retries_; ++attempt) {
      httplib::Client cli(base_);
      const auto to = std::chrono::milliseconds(timeout_ms_);
      cli.set_connection_timeout(to);
      cli.set_read_timeout(to);
      cli.set_write_timeout(to);
      auto res = cli.Post(path_, body, "application/json");
      if (!res) {
        why = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        why = "HTTP " + std::to_string(res->status);
        continue;
      }
      try {
        const auto j = nlohmann::json::parse(res->body);
        shell.title = words(j.at("title").get<std::string>());
        shell.abstract = words(j.at("abstract").get<std::string>());
        if (shell.title.empty()) throw std::runtime_error("empty title");
        return {std::move(shell), false, {}};
      } catch (const std::exception& e) {
        why = std::string("bad response: ") + e.what();
      }
    }
    auto out = fallback_.generate(req);
    out.fell_back = true;
    out.note = why;
    return out;
  }

 private:
  const TemplateGenerator& fallback_;
  std::string base_, path_;
  int timeout_ms_;
  int retries_;
  int max_tokens_;
};

}  // namespace bheisr
