// kbqa: offline template learning and online question answering.
//
//   kbqa pipeline --config toy.conf
//   kbqa answer --config toy.conf --question "When was Barack Obama born?"
//   kbqa repl --config toy.conf < questions.txt
//
// Exit codes: 0 success, 2 config error, 3 stage failure,
// 4 unanswerable question in batch mode.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kbqa/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitUnanswered = 4;

void Log(const std::string &msg) { std::cerr << "kbqa: " << msg << "\n"; }

// Registers --<key> for every config key on `cmd`.
void AddConfigFlags(CLI::App *cmd, std::string *config_path,
                    std::map<std::string, std::string> *overrides) {
  cmd->add_option("--config", *config_path, "key = value config file");
  for (const auto &key : kbqa::PipelineConfig::Keys()) {
    cmd->add_option_function<std::string>(
        "--" + key, [overrides, key](const std::string &v) { (*overrides)[key] = v; },
        "overrides '" + key + "' from the config file");
  }
}

kbqa::PipelineConfig BuildConfig(const std::string &config_path,
                                 const std::map<std::string, std::string> &overrides) {
  kbqa::PipelineConfig config;
  if (!config_path.empty()) config.LoadFile(config_path);
  for (const auto &[k, v] : overrides) config.Set(k, v);
  return config;
}

int AnswerLines(const kbqa::OnlineSession &session, std::istream &in, bool batch) {
  bool unanswered = false;
  std::string line;
  while (std::getline(in, line)) {
    if (kbqa::Trim(line).empty()) continue;
    auto record = session.Ask(line);
    if (record["answer"].is_null()) unanswered = true;
    std::cout << record.dump() << std::endl;
  }
  return batch && unanswered ? kExitUnanswered : 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Template-based question answering over an RDF knowledge base"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::string question;
  std::string questions_file;

  auto *build_index = app.add_subcommand("build-index", "build the entity index");
  auto *expand = app.add_subcommand("expand", "expand predicates from corpus entities");
  auto *learn = app.add_subcommand("learn", "extract observations and run EM");
  auto *answer = app.add_subcommand("answer", "answer questions");
  auto *decompose = app.add_subcommand("decompose", "decompose a complex question");
  auto *repl = app.add_subcommand("repl", "answer one question per input line");
  auto *pipeline = app.add_subcommand("pipeline", "run all offline stages");

  for (auto *cmd : {build_index, expand, learn, answer, decompose, repl, pipeline}) {
    AddConfigFlags(cmd, &config_path, &overrides);
  }
  answer->add_option("-q,--question", question, "question text");
  answer->add_option("--questions-file", questions_file, "one question per line");
  decompose->add_option("-q,--question", question, "question text")->required();
  pipeline->add_option("-q,--question", question, "answer this after training");

  CLI11_PARSE(app, argc, argv);

  kbqa::PipelineConfig config;
  try {
    config = BuildConfig(config_path, overrides);
  } catch (const kbqa::Error &e) {
    Log(e.what());
    return kExitConfig;
  }

  try {
    if (*build_index) {
      kbqa::RunBuildIndex(config);
      Log("wrote " + config.index.string());
    } else if (*expand) {
      auto n = kbqa::RunExpand(config);
      Log("wrote " + std::to_string(n) + " paths to " + config.expansion.string());
    } else if (*learn) {
      auto report = kbqa::RunLearn(config);
      std::cout << report.ToJson().dump() << std::endl;
    } else if (*pipeline) {
      auto report = kbqa::RunOffline(config);
      std::cout << report.ToJson().dump() << std::endl;
      if (!question.empty()) {
        kbqa::OnlineSession session(config);
        std::cout << session.Ask(question).dump() << std::endl;
      }
    } else if (*answer) {
      if (question.empty() && questions_file.empty()) {
        Log("answer needs --question or --questions-file");
        return kExitConfig;
      }
      kbqa::OnlineSession session(config);
      if (!question.empty()) {
        auto record = session.Ask(question);
        std::cout << record.dump() << std::endl;
        if (record["answer"].is_null()) return kExitUnanswered;
      }
      if (!questions_file.empty()) {
        std::ifstream in(questions_file);
        if (!in) {
          Log("cannot open " + questions_file);
          return kExitConfig;
        }
        return AnswerLines(session, in, true);
      }
    } else if (*decompose) {
      kbqa::OnlineSession session(config);
      std::cout << session.DecomposeQuestion(question).dump() << std::endl;
    } else if (*repl) {
      kbqa::OnlineSession session(config);
      return AnswerLines(session, std::cin, false);
    }
  } catch (const kbqa::ConfigError &e) {
    Log(e.what());
    return kExitConfig;
  } catch (const kbqa::StageError &e) {
    Log(e.what());
    return kExitStage;
  } catch (const std::exception &e) {
    Log(e.what());
    return kExitStage;
  }
  return 0;
}
