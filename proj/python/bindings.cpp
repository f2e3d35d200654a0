#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "kbqa/decomposer.hpp"
#include "kbqa/entity_index.hpp"
#include "kbqa/errors.hpp"
#include "kbqa/kb_store.hpp"
#include "kbqa/pipeline.hpp"
#include "kbqa/qa_extraction.hpp"
#include "kbqa/template_learner.hpp"
#include "kbqa/text.hpp"

namespace py = pybind11;
using namespace kbqa;

namespace {

py::object ToPython(const nlohmann::json &j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

PipelineConfig MakeConfig(const std::optional<std::filesystem::path> &file,
                          const std::map<std::string, std::string> &overrides) {
  PipelineConfig c;
  if (file) c.LoadFile(*file);
  for (const auto &[k, v] : overrides) c.Set(k, v, std::filesystem::current_path());
  return c;
}

py::dict CorpusSummary(const std::filesystem::path &path) {
  const auto corpus = LoadCorpusFile(path);
  const auto stats = ComputeCorpusStats(corpus);
  py::dict questions, answers;
  for (const auto &[q, n] : stats.questions()) questions[py::str(q)] = stats.QuestionProb(q);
  for (const auto &[qa, n] : stats.pairs()) {
    answers[py::make_tuple(qa.first, qa.second)] = stats.AnswerProb(qa.first, qa.second);
  }
  py::dict out;
  out["total"] = stats.total();
  out["question_prob"] = questions;
  out["answer_prob"] = answers;
  return out;
}

// items: one list per observation of (template, path, f) candidates.
py::dict RunEm(const std::vector<std::vector<std::tuple<std::string, std::string, double>>> &items,
               int max_iters, double epsilon) {
  TrainingSet x;
  for (const auto &cands : items) {
    TrainingItem item;
    item.weight = 1;
    for (const auto &[t, p, f] : cands) {
      item.candidates.push_back({x.params.Intern(t, p), f, 1.0, f});
    }
    x.items.push_back(std::move(item));
  }
  auto r = Learn(x, {max_iters, epsilon});
  py::dict theta;
  for (std::uint32_t id = 0; id < x.params.size(); ++id) {
    theta[py::make_tuple(x.params.TemplateName(x.params.TemplateOf(id)),
                         x.params.PathName(x.params.PathOf(id)))] = r.theta[id];
  }
  py::dict out;
  out["theta"] = theta;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  out["log_likelihoods"] = r.log_likelihoods;
  out["dropped_observations"] = r.dropped_observations;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Template-based question answering over an RDF knowledge base";

  static py::exception<Error> error(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<StageError>(m, "StageError", error.ptr());

  m.def("tokenize", &Tokenize, py::arg("text"));
  m.def("normalize", &NormalizePhrase, py::arg("text"));

  py::class_<KnowledgeBase>(m, "KnowledgeBase")
      .def_static("load", &KnowledgeBase::LoadFile, py::arg("path"))
      .def_static("from_triples",
                  [](const std::vector<std::array<std::string, 3>> &t) {
                    return KnowledgeBase::FromTriples(t);
                  },
                  py::arg("triples"))
      .def_property_readonly("triple_count", &KnowledgeBase::triple_count)
      .def_property_readonly("node_count", &KnowledgeBase::node_count)
      .def_property_readonly("entity_count", &KnowledgeBase::entity_count)
      .def("paths_between",
           [](const KnowledgeBase &kb, const std::string &s, const std::string &o, int k,
              bool name_restriction) {
             std::vector<std::string> out;
             auto sid = kb.FindNode(s), oid = kb.FindNode(o);
             if (!sid || !oid) return out;
             PathPolicy policy{k, name_restriction, "name"};
             for (const auto &p : kb.PredicatesBetween(*sid, *oid, policy)) {
               out.push_back(kb.PathString(p));
             }
             return out;
           },
           py::arg("subject"), py::arg("object"), py::arg("k") = 3,
           py::arg("name_restriction") = true)
      .def("expand",
           [](const KnowledgeBase &kb, const std::vector<std::string> &seeds, int k,
              bool name_restriction) {
             std::set<NodeId> ids;
             for (const auto &s : seeds) {
               if (auto id = kb.FindNode(s)) ids.insert(*id);
             }
             std::vector<std::tuple<std::string, std::string, std::string>> out;
             for (const auto &spo :
                  ExpandPredicates(kb, ids, k, PathPolicy{k, name_restriction, "name"})) {
               out.emplace_back(kb.NodeName(spo.subject), kb.PathString(spo.path),
                                kb.NodeName(spo.object));
             }
             return out;
           },
           py::arg("seeds"), py::arg("k") = 3, py::arg("name_restriction") = true);

  py::class_<StaticHashArray>(m, "StaticHashArray")
      .def_static("build",
                  [](const std::vector<std::pair<std::string, std::uint64_t>> &entries) {
                    return StaticHashArray::Build(entries);
                  },
                  py::arg("entries"))
      .def_static("load", &StaticHashArray::LoadFile, py::arg("path"))
      .def_static("from_bytes",
                  [](const py::bytes &b) {
                    std::istringstream in(std::string(b), std::ios::binary);
                    return StaticHashArray::Load(in);
                  })
      .def("save", &StaticHashArray::SaveFile, py::arg("path"))
      .def("to_bytes",
           [](const StaticHashArray &a) {
             std::ostringstream out(std::ios::binary);
             a.Save(out);
             return py::bytes(out.str());
           })
      .def("lookup", &StaticHashArray::Lookup, py::arg("key"))
      .def_property_readonly("bucket_count", &StaticHashArray::bucket_count)
      .def_property_readonly("item_count", &StaticHashArray::item_count)
      .def("__len__", &StaticHashArray::item_count);

  m.def("corpus_stats", &CorpusSummary, py::arg("path"));
  m.def("em", &RunEm, py::arg("items"), py::arg("max_iters") = 100,
        py::arg("epsilon") = 1e-6);

  m.def(
      "decompose",
      [](const std::string &question,
         const std::function<bool(std::vector<std::string>)> &primitive,
         const std::function<double(std::vector<std::string>)> &pattern) {
        auto d = Decompose(Tokenize(question),
                           [&](std::span<const std::string> s) {
                             return primitive({s.begin(), s.end()});
                           },
                           [&](std::span<const std::string> s) {
                             return pattern({s.begin(), s.end()});
                           });
        std::vector<std::string> seq;
        for (const auto &s : d.sequence) seq.push_back(Detokenize(s));
        return std::make_pair(seq, d.score);
      },
      py::arg("question"), py::arg("is_primitive"), py::arg("pattern_probability"));

  py::class_<PipelineConfig>(m, "Config")
      .def(py::init(&MakeConfig), py::arg("path") = std::nullopt,
           py::arg("overrides") = std::map<std::string, std::string>{})
      .def("set",
           [](PipelineConfig &c, const std::string &k, const std::string &v) {
             c.Set(k, v, std::filesystem::current_path());
           })
      .def_readwrite("model", &PipelineConfig::model)
      .def_readwrite("index", &PipelineConfig::index)
      .def_readwrite("kb", &PipelineConfig::kb)
      .def_readwrite("corpus", &PipelineConfig::corpus)
      .def_readwrite("k", &PipelineConfig::k)
      .def_readwrite("refine", &PipelineConfig::refine)
      .def_static("keys", &PipelineConfig::Keys);

  m.def("run_offline",
        [](const PipelineConfig &c) { return ToPython(RunOffline(c).ToJson()); },
        py::arg("config"));

  py::class_<OnlineSession>(m, "Session")
      .def(py::init<const PipelineConfig &>(), py::arg("config"))
      .def("ask",
           [](const OnlineSession &s, const std::string &q) { return ToPython(s.Ask(q)); },
           py::arg("question"))
      .def("decompose",
           [](const OnlineSession &s, const std::string &q) {
             return ToPython(s.DecomposeQuestion(q));
           },
           py::arg("question"));
}
