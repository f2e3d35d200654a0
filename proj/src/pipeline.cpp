#include "kbqa/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "kbqa/template_learner.hpp"

namespace kbqa {

namespace fs = std::filesystem;

namespace {

bool ParseBool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

template <typename T>
T ParseNumber(const std::string &key, const std::string &v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  }
  return out;
}

fs::path Resolve(const std::string &v, const fs::path &base) {
  fs::path p(v);
  if (p.is_relative() && !base.empty()) return base / p;
  return p;
}

void RequireReadable(const std::vector<std::pair<std::string, fs::path>> &inputs) {
  std::string missing;
  for (const auto &[name, path] : inputs) {
    if (path.empty()) {
      missing += "\n  " + name + " (not configured)";
    } else if (!fs::is_regular_file(path)) {
      missing += "\n  " + name + ": " + path.string();
    }
  }
  if (!missing.empty()) throw ConfigError("missing inputs:" + missing);
}

void RequireOutputs(const std::vector<std::pair<std::string, fs::path>> &outputs) {
  for (const auto &[name, path] : outputs) {
    if (path.empty()) throw ConfigError("output path not configured: " + name);
  }
}

fs::path SiblingOf(const fs::path &anchor, const std::string &name) {
  return anchor.parent_path() / name;
}

// Loads the taxonomy plus optional context weights and overrides.
ConceptGraph LoadConcepts(const PipelineConfig &c) {
  ConceptGraph g = c.isa.empty() ? ConceptGraph() : ConceptGraph::LoadFile(c.isa);
  if (!c.context_weights.empty()) {
    std::ifstream in(c.context_weights);
    if (!in) throw ConfigError("cannot open " + c.context_weights.string());
    g.LoadContextWeights(in);
  }
  if (!c.fixture_overrides.empty()) {
    std::ifstream in(c.fixture_overrides);
    if (!in) throw ConfigError("cannot open " + c.fixture_overrides.string());
    g.LoadOverrides(in);
  }
  return g;
}

EntityDictionary LoadDictionary(const PipelineConfig &c) {
  return c.entity_dict.empty() ? EntityDictionary()
                               : EntityDictionary::LoadFile(c.entity_dict);
}

// Temp files created by one offline run; removed unless committed.
class StagedFiles {
 public:
  ~StagedFiles() {
    std::error_code ec;
    for (const auto &[tmp, final_path] : files_) fs::remove(tmp, ec);
  }

  void Stage(const fs::path &path, const std::string &content) {
    fs::path tmp = path;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    files_.emplace_back(tmp, path);
    out << content;
    out.close();
    if (!out) throw Error("cannot write " + tmp.string());
  }

  void Commit() {
    for (const auto &[tmp, final_path] : files_) fs::rename(tmp, final_path);
    files_.clear();
  }

 private:
  std::vector<std::pair<fs::path, fs::path>> files_;
};

template <typename Fn>
auto Stage(const std::string &name, Fn &&fn) {
  try {
    return fn();
  } catch (const ConfigError &) {
    throw;
  } catch (const StageError &) {
    throw;
  } catch (const std::exception &e) {
    throw StageError(name, e.what());
  }
}

std::set<NodeId> CorpusSeeds(std::span<const QaPair> corpus,
                             const EntityValueExtractor &extractor) {
  std::set<NodeId> seeds;
  for (const auto &pair : corpus) {
    for (const auto &m : extractor.EntityMentions(pair.question)) seeds.insert(m.entity);
  }
  return seeds;
}

std::string SerializeIndex(const StaticHashArray &index) {
  std::ostringstream out(std::ios::binary);
  index.Save(out);
  return out.str();
}

}  // namespace

const std::vector<std::string> &PipelineConfig::Keys() {
  static const std::vector<std::string> keys = {
      "kb", "isa", "corpus", "predicate-categories", "entity-dict",
      "context-weights", "fixture-overrides", "model", "index", "expansion",
      "report", "k", "em-max-iters", "em-epsilon", "name-restriction",
      "name-predicate", "max-question-len", "max-mention-tokens", "refine"};
  return keys;
}

void PipelineConfig::Set(const std::string &key, const std::string &value,
                         const fs::path &base) {
  if (key == "kb") kb = Resolve(value, base);
  else if (key == "isa") isa = Resolve(value, base);
  else if (key == "corpus") corpus = Resolve(value, base);
  else if (key == "predicate-categories") predicate_categories = Resolve(value, base);
  else if (key == "entity-dict") entity_dict = Resolve(value, base);
  else if (key == "context-weights") context_weights = Resolve(value, base);
  else if (key == "fixture-overrides") fixture_overrides = Resolve(value, base);
  else if (key == "model") model = Resolve(value, base);
  else if (key == "index") index = Resolve(value, base);
  else if (key == "expansion") expansion = Resolve(value, base);
  else if (key == "report") report = Resolve(value, base);
  else if (key == "k") k = ParseNumber<int>(key, value);
  else if (key == "em-max-iters") em_max_iters = ParseNumber<int>(key, value);
  else if (key == "em-epsilon") em_epsilon = ParseNumber<double>(key, value);
  else if (key == "name-restriction") name_restriction = ParseBool(key, value);
  else if (key == "name-predicate") name_predicate = value;
  else if (key == "max-question-len") max_question_len = ParseNumber<std::size_t>(key, value);
  else if (key == "max-mention-tokens") max_mention_tokens = ParseNumber<std::size_t>(key, value);
  else if (key == "refine") refine = ParseBool(key, value);
  else throw ConfigError("unknown config key '" + key + "'");

  if (k < 1) throw ConfigError("k must be >= 1");
  if (em_max_iters < 1) throw ConfigError("em-max-iters must be >= 1");
  if (max_mention_tokens < 1) throw ConfigError("max-mention-tokens must be >= 1");
}

void PipelineConfig::LoadFile(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  const fs::path base = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    std::string_view body = Trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value");
    }
    Set(std::string(Trim(body.substr(0, eq))), std::string(Trim(body.substr(eq + 1))),
        base);
  }
}

nlohmann::json OfflineReport::ToJson() const {
  return {{"iterations", iterations},
          {"final_log_likelihood", final_log_likelihood},
          {"dropped_observations", dropped_observations},
          {"converged", converged},
          {"entities", entities},
          {"index_items", index_items},
          {"seeds", seeds},
          {"expansion_paths", expansion_paths},
          {"observations", observations},
          {"model_rows", model_rows}};
}

namespace {

// Extraction and EM stages shared by `pipeline` and `learn`.
void ExtractAndLearn(const PipelineConfig &config, const KnowledgeBase &kb,
                     const StaticHashArray &index, const NodeLexicon &lexicon,
                     const PathCatalog &catalog, const ConceptGraph &concepts,
                     const std::vector<QaPair> &corpus,
                     const PredicateCategories &categories, StagedFiles *staged,
                     OfflineReport *report) {
  const auto observations = Stage("extract", [&] {
    if (corpus.empty()) throw Error("no observations extracted");
    EntityValueExtractor extractor(kb, index, lexicon, catalog, categories,
                                   {config.max_mention_tokens});
    auto stats = ComputeCorpusStats(corpus);
    auto obs = BuildObservations(corpus, extractor, stats, config.refine);
    if (obs.empty()) throw Error("no observations extracted");
    return obs;
  });
  report->observations = observations.size();

  Stage("learn", [&] {
    const PathPolicy policy = config.path_policy();
    const auto x = BuildTrainingSet(observations, kb, concepts, policy);
    const auto result = Learn(x, {config.em_max_iters, config.em_epsilon});
    const auto model = PredicateModel::FromTheta(x.params, result.theta);
    report->iterations = result.iterations;
    report->converged = result.converged;
    report->final_log_likelihood = result.final_log_likelihood;
    report->dropped_observations = result.dropped_observations;
    report->model_rows = model.rows().size();
    std::ostringstream out;
    model.Save(out);
    staged->Stage(config.model, out.str());
    staged->Stage(config.report, report->ToJson().dump(2) + "\n");
    return 0;
  });
}

}  // namespace

void WriteFileAtomic(const fs::path &path, const std::string &content) {
  StagedFiles staged;
  staged.Stage(path, content);
  staged.Commit();
}

void RunBuildIndex(const PipelineConfig &config) {
  RequireReadable({{"kb", config.kb}});
  RequireOutputs({{"index", config.index}});
  Stage("build-index", [&] {
    const auto kb = KnowledgeBase::LoadFile(config.kb);
    const auto dict = LoadDictionary(config);
    const auto entries = IndexEntries(kb, dict, config.name_predicate);
    WriteFileAtomic(config.index, SerializeIndex(StaticHashArray::Build(entries)));
    return 0;
  });
}

std::size_t RunExpand(const PipelineConfig &config) {
  RequireReadable({{"kb", config.kb}, {"corpus", config.corpus}, {"index", config.index}});
  RequireOutputs({{"expansion", config.expansion}});
  return Stage("expand", [&] {
    const auto kb = KnowledgeBase::LoadFile(config.kb);
    const auto dict = LoadDictionary(config);
    const auto index = StaticHashArray::LoadFile(config.index);
    const auto corpus = LoadCorpusFile(config.corpus);
    const NodeLexicon lexicon(kb, dict);
    const PathCatalog catalog(kb, config.path_policy());
    const PredicateCategories categories;
    const EntityValueExtractor extractor(kb, index, lexicon, catalog, categories,
                                         {config.max_mention_tokens});
    const auto paths = ExpandPredicates(kb, ScanFile(config.kb, kb),
                                        CorpusSeeds(corpus, extractor), config.k,
                                        config.path_policy());
    std::ostringstream out;
    WriteExpansion(out, kb, paths);
    WriteFileAtomic(config.expansion, out.str());
    return paths.size();
  });
}

OfflineReport RunOffline(const PipelineConfig &input) {
  PipelineConfig config = input;
  RequireOutputs({{"model", config.model}, {"index", config.index}});
  if (config.expansion.empty()) config.expansion = SiblingOf(config.model, "expansion.tsv");
  if (config.report.empty()) config.report = SiblingOf(config.model, "report.json");
  std::vector<std::pair<std::string, fs::path>> inputs = {{"kb", config.kb},
                                                          {"corpus", config.corpus}};
  if (config.refine) inputs.emplace_back("predicate-categories", config.predicate_categories);
  for (auto [name, path] : {std::pair<std::string, fs::path>{"isa", config.isa},
                            {"entity-dict", config.entity_dict},
                            {"context-weights", config.context_weights},
                            {"fixture-overrides", config.fixture_overrides}}) {
    if (!path.empty()) inputs.emplace_back(name, path);
  }
  RequireReadable(inputs);

  OfflineReport report;
  StagedFiles staged;

  const auto kb = Stage("load", [&] { return KnowledgeBase::LoadFile(config.kb); });
  const auto dict = Stage("load", [&] { return LoadDictionary(config); });
  const auto concepts = Stage("load", [&] { return LoadConcepts(config); });
  const auto corpus = Stage("load", [&] { return LoadCorpusFile(config.corpus); });
  const auto categories = Stage("load", [&] {
    return config.predicate_categories.empty()
               ? PredicateCategories()
               : PredicateCategories::LoadFile(config.predicate_categories);
  });
  report.entities = kb.entity_count();

  const auto index = Stage("build-index", [&] {
    auto idx = StaticHashArray::Build(IndexEntries(kb, dict, config.name_predicate));
    staged.Stage(config.index, SerializeIndex(idx));
    return idx;
  });
  report.index_items = index.item_count();

  const NodeLexicon lexicon(kb, dict);
  const PathPolicy policy = config.path_policy();
  const PathCatalog on_demand(kb, policy);
  const ExtractionOptions options{config.max_mention_tokens};

  const auto expansion = Stage("expand", [&] {
    EntityValueExtractor seeder(kb, index, lexicon, on_demand, categories, options);
    auto seeds = CorpusSeeds(corpus, seeder);
    report.seeds = seeds.size();
    auto paths = ExpandPredicates(kb, ScanFile(config.kb, kb), seeds, config.k, policy);
    std::ostringstream out;
    WriteExpansion(out, kb, paths);
    staged.Stage(config.expansion, out.str());
    return paths;
  });
  report.expansion_paths = expansion.size();

  const PathCatalog catalog(kb, policy, expansion);
  ExtractAndLearn(config, kb, index, lexicon, catalog, concepts, corpus, categories,
                  &staged, &report);
  staged.Commit();
  return report;
}

OfflineReport RunLearn(const PipelineConfig &input) {
  PipelineConfig config = input;
  RequireOutputs({{"model", config.model}});
  if (config.report.empty()) config.report = SiblingOf(config.model, "report.json");
  std::vector<std::pair<std::string, fs::path>> inputs = {
      {"kb", config.kb}, {"corpus", config.corpus}, {"index", config.index}};
  if (config.refine) inputs.emplace_back("predicate-categories", config.predicate_categories);
  for (auto [name, path] : {std::pair<std::string, fs::path>{"isa", config.isa},
                            {"entity-dict", config.entity_dict},
                            {"expansion", config.expansion},
                            {"context-weights", config.context_weights},
                            {"fixture-overrides", config.fixture_overrides}}) {
    if (!path.empty()) inputs.emplace_back(name, path);
  }
  RequireReadable(inputs);

  OfflineReport report;
  StagedFiles staged;
  const auto kb = Stage("load", [&] { return KnowledgeBase::LoadFile(config.kb); });
  const auto dict = Stage("load", [&] { return LoadDictionary(config); });
  const auto concepts = Stage("load", [&] { return LoadConcepts(config); });
  const auto corpus = Stage("load", [&] { return LoadCorpusFile(config.corpus); });
  const auto categories = Stage("load", [&] {
    return config.predicate_categories.empty()
               ? PredicateCategories()
               : PredicateCategories::LoadFile(config.predicate_categories);
  });
  const auto index = Stage("load", [&] { return StaticHashArray::LoadFile(config.index); });
  const auto expansion = Stage("load", [&] {
    std::set<SpoPath> paths;
    if (!config.expansion.empty()) {
      std::ifstream in(config.expansion);
      paths = ReadExpansion(in, kb);
    }
    return paths;
  });
  report.entities = kb.entity_count();
  report.index_items = index.item_count();
  report.expansion_paths = expansion.size();

  const NodeLexicon lexicon(kb, dict);
  const PathPolicy policy = config.path_policy();
  const PathCatalog catalog = expansion.empty() ? PathCatalog(kb, policy)
                                                : PathCatalog(kb, policy, expansion);
  ExtractAndLearn(config, kb, index, lexicon, catalog, concepts, corpus, categories,
                  &staged, &report);
  staged.Commit();
  return report;
}

struct OnlineSession::State {
  PipelineConfig config;
  KnowledgeBase kb;
  EntityDictionary dict;
  StaticHashArray index;
  ConceptGraph concepts;
  PredicateModel model;
  std::vector<QaPair> corpus;
  std::unique_ptr<NodeLexicon> lexicon;
  std::unique_ptr<Resources> resources;
  PatternIndex patterns;
  std::unique_ptr<Decomposer> decomposer;
};

OnlineSession::OnlineSession(const PipelineConfig &config)
    : state_(std::make_unique<State>()) {
  std::vector<std::pair<std::string, fs::path>> required = {
      {"kb", config.kb}, {"index", config.index}, {"model", config.model},
      {"corpus", config.corpus}};
  for (auto [name, path] : {std::pair<std::string, fs::path>{"isa", config.isa},
                            {"entity-dict", config.entity_dict},
                            {"context-weights", config.context_weights},
                            {"fixture-overrides", config.fixture_overrides}}) {
    if (!path.empty()) required.emplace_back(name, path);
  }
  RequireReadable(required);

  auto &s = *state_;
  s.config = config;
  s.kb = KnowledgeBase::LoadFile(config.kb);
  s.dict = LoadDictionary(config);
  s.index = StaticHashArray::LoadFile(config.index);
  s.concepts = LoadConcepts(config);
  s.model = PredicateModel::LoadFile(config.model);
  s.corpus = LoadCorpusFile(config.corpus);
  s.lexicon = std::make_unique<NodeLexicon>(s.kb, s.dict);
  s.resources = std::make_unique<Resources>(Resources{
      s.kb, s.index, s.concepts, s.model, *s.lexicon, config.max_mention_tokens});
  s.patterns = PatternIndex::Build(s.corpus, s.index);
  s.decomposer = std::make_unique<Decomposer>(s.patterns, *s.resources,
                                              config.max_question_len);
}

OnlineSession::~OnlineSession() = default;

const Resources &OnlineSession::resources() const { return *state_->resources; }
const Decomposer &OnlineSession::decomposer() const { return *state_->decomposer; }

namespace {

nlohmann::json TraceJson(const Answer &a, const KnowledgeBase &kb) {
  return {{"entity", kb.NodeName(a.trace.entity)},
          {"template", a.trace.template_key},
          {"predicate_path", a.trace.path}};
}

nlohmann::json SequenceJson(const std::vector<Tokens> &seq) {
  auto arr = nlohmann::json::array();
  for (const auto &q : seq) arr.push_back(Detokenize(q));
  return arr;
}

}  // namespace

nlohmann::json OnlineSession::Ask(const std::string &question) const {
  const auto &s = *state_;
  const Tokens tokens = Tokenize(question);
  nlohmann::json record = {{"question", question},
                           {"answer", nullptr},
                           {"value_id", nullptr},
                           {"probability", 0.0},
                           {"trace", nullptr}};
  auto fill = [&](const Answer &a) {
    record["answer"] = s.lexicon->Surface(a.value);
    record["value_id"] = s.kb.NodeName(a.value);
    record["probability"] = a.probability;
    record["trace"] = TraceJson(a, s.kb);
  };

  if (tokens.size() > s.config.max_question_len) {
    record["reason"] = "question too long";
    return record;
  }
  if (!s.decomposer->IsPrimitive(tokens)) {
    const auto d = s.decomposer->Decompose(tokens);
    if (d.score > 0 && d.sequence.size() > 1) {
      record["decomposition"] = {{"sequence", SequenceJson(d.sequence)},
                                 {"score", d.score}};
      const auto r = AnswerSequence(d.sequence, *s.resources);
      if (r.answer) {
        fill(*r.answer);
        auto steps = nlohmann::json::array();
        for (const auto &st : r.steps) steps.push_back(s.lexicon->Surface(st.value));
        record["decomposition"]["answers"] = steps;
      } else {
        record["reason"] = r.reason;
        record["decomposition"]["failed_index"] = *r.failed_index;
      }
      return record;
    }
  }
  const auto r = AnswerQuestion(tokens, *s.resources);
  if (r.answer) {
    fill(*r.answer);
  } else {
    record["reason"] = r.reason;
  }
  return record;
}

nlohmann::json OnlineSession::DecomposeQuestion(const std::string &question) const {
  const Tokens tokens = Tokenize(question);
  const auto d = state_->decomposer->Decompose(tokens);
  auto flags = nlohmann::json::array();
  for (const auto &q : d.sequence) flags.push_back(state_->decomposer->IsPrimitive(q));
  return {{"question", question},
          {"sequence", SequenceJson(d.sequence)},
          {"score", d.score},
          {"primitive_flags", flags}};
}

}  // namespace kbqa
