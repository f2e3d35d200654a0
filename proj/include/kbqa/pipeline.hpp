// Offline flow (index → expansion → extraction → EM → model) and the online
// session used by the CLI, REPL, and Python bindings.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbqa/answer_engine.hpp"
#include "kbqa/decomposer.hpp"
#include "kbqa/errors.hpp"

namespace kbqa {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string &what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string &stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  // Inputs.
  std::filesystem::path kb;
  std::filesystem::path isa;
  std::filesystem::path corpus;
  std::filesystem::path predicate_categories;
  std::filesystem::path entity_dict;
  std::filesystem::path context_weights;
  std::filesystem::path fixture_overrides;
  // Artifacts.
  std::filesystem::path model;
  std::filesystem::path index;
  std::filesystem::path expansion;
  std::filesystem::path report;

  int k = 3;
  int em_max_iters = 100;
  double em_epsilon = 1e-6;
  bool name_restriction = true;
  std::string name_predicate = "name";
  std::size_t max_question_len = kDefaultMaxQuestionTokens;
  std::size_t max_mention_tokens = 6;
  bool refine = true;

  PathPolicy path_policy() const { return {k, name_restriction, name_predicate}; }

  // Applies one `key = value` setting (keys are the kebab-case field
  // names). Relative paths are resolved against `base`.
  void Set(const std::string &key, const std::string &value,
           const std::filesystem::path &base = {});
  // Reads `key = value` lines with '#' comments.
  void LoadFile(const std::filesystem::path &path);
  static const std::vector<std::string> &Keys();
};

struct OfflineReport {
  std::size_t entities = 0;
  std::size_t index_items = 0;
  std::size_t seeds = 0;
  std::size_t expansion_paths = 0;
  std::size_t observations = 0;
  std::size_t dropped_observations = 0;
  int iterations = 0;
  bool converged = false;
  double final_log_likelihood = 0;
  std::size_t model_rows = 0;

  nlohmann::json ToJson() const;
};

// Runs every offline stage. Artifacts are staged as temporary files and
// renamed into place only after all stages succeed. Throws ConfigError or
// StageError.
OfflineReport RunOffline(const PipelineConfig &config);

// Individual stages, also exposed as CLI subcommands.
void RunBuildIndex(const PipelineConfig &config);
std::size_t RunExpand(const PipelineConfig &config);
// Extraction + EM from an existing index (and expansion dump, if set).
OfflineReport RunLearn(const PipelineConfig &config);

// Writes `content` to `path` through a temporary file and rename.
void WriteFileAtomic(const std::filesystem::path &path, const std::string &content);

// Loaded artifacts for answering questions.
class OnlineSession {
 public:
  // Throws ConfigError listing every missing artifact.
  explicit OnlineSession(const PipelineConfig &config);
  ~OnlineSession();
  OnlineSession(const OnlineSession &) = delete;
  OnlineSession &operator=(const OnlineSession &) = delete;

  // `{question, answer, value_id, probability, trace, reason?, decomposition?}`
  nlohmann::json Ask(const std::string &question) const;
  // `{question, sequence, score, primitive_flags}`
  nlohmann::json DecomposeQuestion(const std::string &question) const;

  const Resources &resources() const;
  const Decomposer &decomposer() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace kbqa
