#include "kbqa/template_learner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "kbqa/errors.hpp"

namespace kbqa {

namespace {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void Add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0;
  double c_ = 0;
};

// Normalizes every template row in place; rows without mass become zero.
void NormalizeRows(const ParamSpace &params, const std::vector<CompensatedSum> &mass,
                   Theta *theta) {
  theta->assign(params.size(), 0.0);
  for (std::uint32_t t = 0; t < params.template_count(); ++t) {
    CompensatedSum total;
    for (std::uint32_t p : params.Row(t)) total.Add(mass[p].value());
    const double z = total.value();
    if (z <= 0) continue;
    for (std::uint32_t p : params.Row(t)) (*theta)[p] = mass[p].value() / z;
  }
}

}  // namespace

double FactorF(const FactorComponents &c) {
  return c.question_prob * c.entity_prob * c.template_prob * c.value_prob;
}

double FactorF(const Observation &x, const std::string &template_key,
               const ExpandedPredicate &path, const KnowledgeBase &kb,
               const ConceptGraph &concepts) {
  FactorComponents c;
  c.question_prob = x.question_prob;
  c.entity_prob = x.entity_prob;
  for (const auto &[t, p] :
       concepts.Templates(x.question, x.mention, kb.NodeName(x.entity))) {
    if (t.Key() == template_key) c.template_prob = p;
  }
  if (c.template_prob == 0) return 0;
  auto dist = kb.ValueDistribution(x.entity, path);
  auto it = dist.find(x.value);
  if (it == dist.end()) return 0;
  c.value_prob = it->second;
  return FactorF(c);
}

std::uint32_t ParamSpace::Intern(const std::string &template_key,
                                 const std::string &path) {
  auto [tit, tnew] = template_ids_.try_emplace(
      template_key, static_cast<std::uint32_t>(templates_.size()));
  if (tnew) {
    templates_.push_back(template_key);
    rows_.emplace_back();
  }
  auto [pit, pnew] =
      path_ids_.try_emplace(path, static_cast<std::uint32_t>(paths_.size()));
  if (pnew) paths_.push_back(path);
  auto [it, inserted] = param_ids_.try_emplace(
      {tit->second, pit->second}, static_cast<std::uint32_t>(params_.size()));
  if (inserted) {
    params_.emplace_back(tit->second, pit->second);
    rows_[tit->second].push_back(it->second);
  }
  return it->second;
}

TrainingSet BuildTrainingSet(std::span<const Observation> observations,
                             const KnowledgeBase &kb, const ConceptGraph &concepts,
                             const PathPolicy &policy) {
  TrainingSet x;
  x.items.reserve(observations.size());
  for (const auto &obs : observations) {
    TrainingItem item;
    item.weight = obs.weight;
    const auto templates =
        concepts.Templates(obs.question, obs.mention, kb.NodeName(obs.entity));
    for (const auto &path : kb.PredicatesBetween(obs.entity, obs.value, policy)) {
      const auto dist = kb.ValueDistribution(obs.entity, path);
      const double pv = dist.at(obs.value);
      const std::string path_key = kb.PathString(path);
      for (const auto &[t, pt] : templates) {
        const double f = FactorF({obs.question_prob, obs.entity_prob, pt, pv});
        if (f <= 0) continue;
        item.candidates.push_back({x.params.Intern(t.Key(), path_key), f, pt, pv});
      }
    }
    x.items.push_back(std::move(item));
  }
  return x;
}

Theta InitTheta(const TrainingSet &x) {
  std::vector<bool> supported(x.params.size(), false);
  for (const auto &item : x.items) {
    for (const auto &c : item.candidates) {
      if (c.f > 0) supported[c.param] = true;
    }
  }
  Theta theta(x.params.size(), 0.0);
  for (std::uint32_t t = 0; t < x.params.template_count(); ++t) {
    std::size_t n = 0;
    for (std::uint32_t p : x.params.Row(t)) n += supported[p];
    if (n == 0) continue;
    for (std::uint32_t p : x.params.Row(t)) {
      if (supported[p]) theta[p] = 1.0 / static_cast<double>(n);
    }
  }
  return theta;
}

Posterior EStep(const TrainingSet &x, const Theta &theta) {
  Posterior post;
  post.responsibilities.resize(x.items.size());
  post.kept.assign(x.items.size(), false);
  for (std::size_t i = 0; i < x.items.size(); ++i) {
    const auto &cands = x.items[i].candidates;
    auto &resp = post.responsibilities[i];
    resp.resize(cands.size());
    CompensatedSum total;
    for (std::size_t j = 0; j < cands.size(); ++j) {
      resp[j] = cands[j].f * theta[cands[j].param];
      total.Add(resp[j]);
    }
    const double z = total.value();
    if (!(z > 0)) {
      std::fill(resp.begin(), resp.end(), 0.0);
      ++post.dropped;
      continue;
    }
    for (double &r : resp) r /= z;
    post.kept[i] = true;
  }
  return post;
}

Theta MStep(const TrainingSet &x, const Posterior &posterior) {
  std::vector<CompensatedSum> mass(x.params.size());
  for (std::size_t i = 0; i < x.items.size(); ++i) {
    if (!posterior.kept[i]) continue;
    const auto &cands = x.items[i].candidates;
    for (std::size_t j = 0; j < cands.size(); ++j) {
      mass[cands[j].param].Add(posterior.responsibilities[i][j]);
    }
  }
  Theta theta;
  NormalizeRows(x.params, mass, &theta);
  return theta;
}

double LogLikelihood(const TrainingSet &x, const Theta &theta) {
  CompensatedSum ll;
  for (const auto &item : x.items) {
    CompensatedSum s;
    for (const auto &c : item.candidates) s.Add(c.f * theta[c.param]);
    if (s.value() > 0) ll.Add(std::log(s.value()));
  }
  return ll.value();
}

LearnResult Learn(const TrainingSet &x, const LearnOptions &options) {
  LearnResult result;
  result.theta = InitTheta(x);
  result.log_likelihoods.push_back(LogLikelihood(x, result.theta));
  for (int s = 1; s <= std::max(1, options.max_iters); ++s) {
    Posterior post = EStep(x, result.theta);
    result.dropped_observations = post.dropped;
    Theta next = MStep(x, post);
    double change = 0;
    for (std::size_t p = 0; p < next.size(); ++p) {
      change = std::max(change, std::abs(next[p] - result.theta[p]));
    }
    result.theta = std::move(next);
    result.iterations = s;
    result.log_likelihoods.push_back(LogLikelihood(x, result.theta));
    if (change < options.epsilon) {
      result.converged = true;
      break;
    }
  }
  result.final_log_likelihood = result.log_likelihoods.back();
  return result;
}

Theta CountingBaseline(const TrainingSet &x) {
  std::vector<CompensatedSum> mass(x.params.size());
  for (const auto &item : x.items) {
    // β normalizes P(v|e,p) over the distinct paths connecting (e, v).
    std::map<std::uint32_t, double> path_prob;
    for (const auto &c : item.candidates) {
      path_prob[x.params.PathOf(c.param)] = c.value_prob;
    }
    double beta_inv = 0;
    for (const auto &[p, v] : path_prob) beta_inv += v;
    if (beta_inv <= 0) continue;
    for (const auto &c : item.candidates) {
      mass[c.param].Add(item.weight * c.template_prob * c.value_prob / beta_inv);
    }
  }
  Theta theta;
  NormalizeRows(x.params, mass, &theta);
  return theta;
}

PredicateModel PredicateModel::FromTheta(const ParamSpace &params,
                                         const Theta &theta) {
  PredicateModel model;
  for (std::uint32_t p = 0; p < params.size(); ++p) {
    if (theta[p] <= 0) continue;
    model.rows_[params.TemplateName(params.TemplateOf(p))].emplace_back(
        params.PathName(params.PathOf(p)), theta[p]);
  }
  for (auto &[t, row] : model.rows_) model.SortRow(row);
  return model;
}

void PredicateModel::SortRow(Row &row) {
  std::sort(row.begin(), row.end(), [](const auto &a, const auto &b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
}

void PredicateModel::Set(const std::string &template_key, const std::string &path,
                         double p) {
  auto &row = rows_[template_key];
  auto it = std::find_if(row.begin(), row.end(),
                         [&](const auto &e) { return e.first == path; });
  if (it == row.end()) {
    row.emplace_back(path, p);
  } else {
    it->second = p;
  }
  SortRow(row);
}

const PredicateModel::Row *PredicateModel::Find(const std::string &template_key) const {
  auto it = rows_.find(template_key);
  return it == rows_.end() ? nullptr : &it->second;
}

double PredicateModel::Probability(const std::string &template_key,
                                   const std::string &path) const {
  const Row *row = Find(template_key);
  if (!row) return 0;
  for (const auto &[p, v] : *row) {
    if (p == path) return v;
  }
  return 0;
}

std::string PredicateModel::Best(const std::string &template_key) const {
  const Row *row = Find(template_key);
  if (!row || row->empty()) return {};
  return row->front().first;
}

void PredicateModel::Save(std::ostream &out) const {
  char buf[64];
  for (const auto &[t, row] : rows_) {
    for (const auto &[path, p] : row) {
      std::snprintf(buf, sizeof(buf), "%.17g", p);
      out << t << '\t' << path << '\t' << buf << '\n';
    }
  }
}

PredicateModel PredicateModel::Load(std::istream &in) {
  PredicateModel model;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty() || line.front() == '#') continue;
    auto f = SplitTabs(line);
    if (f.size() != 3) throw ParseError("expected template<TAB>path<TAB>prob", line_no);
    double p = 0;
    auto [ptr, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), p);
    if (ec != std::errc() || ptr != f[2].data() + f[2].size() || p < 0 || p > 1) {
      throw ParseError("bad probability '" + f[2] + "'", line_no);
    }
    model.rows_[f[0]].emplace_back(f[1], p);
  }
  for (auto &[t, row] : model.rows_) model.SortRow(row);
  return model;
}

PredicateModel PredicateModel::LoadFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model " + path.string());
  return Load(in);
}

}  // namespace kbqa
