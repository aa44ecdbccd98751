// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "forge/error.hpp"

namespace forge {

using nlohmann::json;

namespace {

bool is_word(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

template <typename K>
std::map<K, int> counts_of(const std::vector<K>& items) {
  std::map<K, int> out;
  for (const K& k : items) ++out[k];
  return out;
}

}  // namespace

std::vector<std::string> metric_tokens(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    if (!is_word(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::string tok;
    while (i < text.size() && is_word(static_cast<unsigned char>(text[i]))) tok += lower(text[i++]);
    out.push_back(std::move(tok));
  }
  return out;
}

double accuracy(const Choice& pred, const GoldChoice& gold) {
  return pred.index == gold.index ? 1.0 : 0.0;
}

double ndcg(const std::vector<int64_t>& pred, const std::map<int64_t, double>& grades) {
  std::vector<double> ideal;
  for (const auto& [id, g] : grades) ideal.push_back(g);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (size_t i = 0; i < ideal.size(); ++i) idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  if (idcg <= 0.0) return 1.0;

  double dcg = 0.0;
  std::unordered_set<int64_t> seen;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (!seen.insert(pred[i]).second) continue;
    auto it = grades.find(pred[i]);
    if (it == grades.end()) continue;
    dcg += it->second / std::log2(static_cast<double>(i) + 2.0);
  }
  return std::clamp(dcg / idcg, 0.0, 1.0);
}

std::string normalize_span(std::string_view span) {
  std::string out;
  bool pending_space = false;
  for (char c : span) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += lower(c);
  }
  return out;
}

double micro_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                bool token_level) {
  auto prepare = [&](const std::vector<std::string>& spans) {
    std::vector<std::string> items;
    for (const std::string& s : spans) {
      std::string n = normalize_span(s);
      if (!token_level) {
        if (!n.empty()) items.push_back(std::move(n));
        continue;
      }
      size_t start = 0;
      while (start < n.size()) {
        size_t end = n.find(' ', start);
        if (end == std::string::npos) end = n.size();
        items.push_back(n.substr(start, end - start));
        start = end + 1;
      }
    }
    return items;
  };
  const auto p = counts_of(prepare(pred));
  const auto g = counts_of(prepare(gold));
  long tp = 0;
  long np = 0;
  long ng = 0;
  for (const auto& [k, c] : p) {
    np += c;
    if (auto it = g.find(k); it != g.end()) tp += std::min(c, it->second);
  }
  for (const auto& [k, c] : g) ng += c;
  if (np == 0 && ng == 0) return 1.0;
  const long fp = np - tp;
  const long fn = ng - tp;
  return 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
}

double hit_at_3(const std::vector<int64_t>& pred, const std::vector<int64_t>& gold) {
  const std::set<int64_t> p(pred.begin(), pred.end());
  if (p.size() > 3) throw Error(Errc::kInvalidArgument, "hit@3 takes at most 3 predictions");
  const std::set<int64_t> g(gold.begin(), gold.end());
  if (g.empty()) {
    warn("hit@3 with an empty gold set scores 0");
    return 0.0;
  }
  size_t hits = 0;
  for (int64_t id : p) hits += g.count(id);
  return static_cast<double>(hits) / static_cast<double>(std::min<size_t>(3, g.size()));
}

double rouge_l_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& ref) {
  if (pred.empty() && ref.empty()) return 1.0;
  if (pred.empty() || ref.empty()) return 0.0;
  std::vector<size_t> prev(ref.size() + 1, 0);
  std::vector<size_t> cur(ref.size() + 1, 0);
  for (size_t i = 1; i <= pred.size(); ++i) {
    for (size_t j = 1; j <= ref.size(); ++j) {
      cur[j] = pred[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const auto lcs = static_cast<double>(prev[ref.size()]);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(pred.size());
  const double r = lcs / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

double bleu_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& ref) {
  if (pred.empty()) return 0.0;
  double log_sum = 0.0;
  for (size_t n = 1; n <= 4; ++n) {
    std::map<std::vector<std::string>, int> ref_counts;
    if (ref.size() >= n) {
      for (size_t i = 0; i + n <= ref.size(); ++i) {
        ++ref_counts[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)];
      }
    }
    std::map<std::vector<std::string>, int> pred_counts;
    size_t total = 0;
    if (pred.size() >= n) {
      for (size_t i = 0; i + n <= pred.size(); ++i) {
        ++pred_counts[std::vector<std::string>(pred.begin() + i, pred.begin() + i + n)];
        ++total;
      }
    }
    size_t matched = 0;
    for (const auto& [gram, c] : pred_counts) {
      if (auto it = ref_counts.find(gram); it != ref_counts.end()) {
        matched += static_cast<size_t>(std::min(c, it->second));
      }
    }
    double precision;
    if (n == 1) {
      if (matched == 0) return 0.0;
      precision = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      precision = (static_cast<double>(matched) + 1.0) / (static_cast<double>(total) + 1.0);
    }
    log_sum += std::log(precision) / 4.0;
  }
  double bp = 1.0;
  if (pred.size() < ref.size()) {
    bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(pred.size()));
  }
  return std::clamp(bp * std::exp(log_sum), 0.0, 1.0);
}

double cosine_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& ref) {
  if (pred.empty() && ref.empty()) return 1.0;
  if (pred.empty() || ref.empty()) return 0.0;
  const auto p = counts_of(pred);
  const auto r = counts_of(ref);
  double dot = 0.0;
  double np = 0.0;
  double nr = 0.0;
  for (const auto& [k, c] : p) {
    np += static_cast<double>(c) * c;
    if (auto it = r.find(k); it != r.end()) dot += static_cast<double>(c) * it->second;
  }
  for (const auto& [k, c] : r) nr += static_cast<double>(c) * c;
  const double cos = dot / std::sqrt(np * nr);
  return std::clamp(std::max(0.0, cos), 0.0, 1.0);
}

double rouge_l(std::string_view pred, std::string_view ref) {
  return rouge_l_tokens(metric_tokens(pred), metric_tokens(ref));
}

double bleu(std::string_view pred, std::string_view ref) {
  return bleu_tokens(metric_tokens(pred), metric_tokens(ref));
}

double embedding_cosine(std::string_view pred, std::string_view ref) {
  return cosine_tokens(metric_tokens(pred), metric_tokens(ref));
}

double score_answer(const GoldAnswer& gold, const std::optional<ParsedAnswer>& answer,
                    const MetricOptions& options) {
  if (!answer) return 0.0;
  struct Visitor {
    const ParsedAnswer& answer;
    const MetricOptions& options;

    double operator()(const GoldChoice& g) const {
      const auto* p = std::get_if<Choice>(&answer);
      return p ? accuracy(*p, g) : 0.0;
    }
    double operator()(const GoldRanking& g) const {
      const auto* p = std::get_if<RankedList>(&answer);
      return p ? ndcg(p->ids, g.grades) : 0.0;
    }
    double operator()(const GoldEntities& g) const {
      const auto* p = std::get_if<EntitySet>(&answer);
      return p ? micro_f1(p->spans, g.spans, options.token_level_f1) : 0.0;
    }
    double operator()(const GoldRetrieval& g) const {
      const auto* p = std::get_if<RetrievedSet>(&answer);
      if (!p || p->ids.size() > 3) return 0.0;
      return hit_at_3(p->ids, g.ids);
    }
    double operator()(const GoldText& g) const {
      const auto* p = std::get_if<FreeText>(&answer);
      if (!p) return 0.0;
      switch (g.metric) {
        case GenerationMetric::kRougeL: return rouge_l(p->text, g.text);
        case GenerationMetric::kBleu: return bleu(p->text, g.text);
        case GenerationMetric::kCosine: return embedding_cosine(p->text, g.text);
      }
      return 0.0;
    }
  };
  return std::visit(Visitor{*answer, options}, gold);
}

double track_score(const std::vector<double>& scores) {
  if (scores.empty()) throw Error(Errc::kEmptyInput, "track has no scored questions");
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

std::map<std::string, int> rank_sum(const std::map<std::string, std::map<int, double>>& systems) {
  std::map<std::string, int> out;
  std::set<int> tracks;
  for (const auto& [name, scores] : systems) {
    out[name] = 0;
    for (const auto& [track, s] : scores) tracks.insert(track);
  }
  for (int track : tracks) {
    for (const auto& [name, scores] : systems) {
      auto mine = scores.find(track);
      if (mine == scores.end()) continue;
      int rank = 1;
      for (const auto& [other, other_scores] : systems) {
        auto theirs = other_scores.find(track);
        if (theirs != other_scores.end() && theirs->second > mine->second) ++rank;
      }
      out[name] += rank;
    }
  }
  return out;
}

json MetricReport::to_json() const {
  json pq = json::object();
  for (const auto& [id, s] : per_question) pq[id] = s;
  json pt = json::object();
  for (const auto& [t, s] : per_track) pt[std::to_string(t)] = s;
  json j = {{"per_question", pq}, {"per_track", pt}, {"notes", notes}};
  if (rank_table) j["rank_table"] = *rank_table;
  return j;
}

MetricReport MetricReport::from_json(const json& j) {
  MetricReport r;
  try {
    for (auto it = j.at("per_question").begin(); it != j.at("per_question").end(); ++it) {
      r.per_question[it.key()] = it->get<double>();
    }
    for (auto it = j.at("per_track").begin(); it != j.at("per_track").end(); ++it) {
      r.per_track[std::stoi(it.key())] = it->get<double>();
    }
    if (j.contains("notes")) r.notes = j["notes"].get<std::map<std::string, std::string>>();
    if (j.contains("rank_table")) r.rank_table = j["rank_table"].get<std::map<std::string, int>>();
  } catch (const std::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("bad metric report: ") + e.what());
  }
  return r;
}

json AnswerRecord::to_json() const {
  return {{"id", id},
          {"raw", raw},
          {"parsed", parsed ? answer_to_json(*parsed) : json(nullptr)},
          {"failure_reason", failure_reason ? json(*failure_reason) : json(nullptr)}};
}

AnswerRecord AnswerRecord::from_json(const json& j) {
  AnswerRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.raw = j.value("raw", std::string());
    if (j.contains("parsed") && !j["parsed"].is_null()) r.parsed = answer_from_json(j["parsed"]);
    if (j.contains("failure_reason") && !j["failure_reason"].is_null()) {
      r.failure_reason = j["failure_reason"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("bad answer record: ") + e.what());
  }
  return r;
}

MetricReport evaluate(const std::vector<Question>& questions, const std::vector<AnswerRecord>& answers,
                      const MetricOptions& options) {
  std::unordered_map<std::string, const AnswerRecord*> by_id;
  for (const AnswerRecord& a : answers) by_id[a.id] = &a;

  MetricReport report;
  std::map<int, std::vector<double>> track_scores;
  for (const Question& q : questions) {
    if (!q.gold) continue;
    if (report.per_question.count(q.id)) {
      throw Error(Errc::kInvalidArgument, "duplicate question id '" + q.id + "'");
    }
    std::optional<ParsedAnswer> parsed;
    if (auto it = by_id.find(q.id); it != by_id.end()) parsed = it->second->parsed;
    const double s = score_answer(*q.gold, parsed, options);
    report.per_question[q.id] = s;
    track_scores[q.track].push_back(s);
  }
  for (const auto& [track, scores] : track_scores) report.per_track[track] = track_score(scores);

  report.notes["rouge_l.stemming"] = "none";
  report.notes["rouge_l.tokenizer"] = "lowercase alphanumeric runs";
  report.notes["cosine.backend"] = "bag-of-tokens stand-in, not a sentence-embedding model";
  report.notes["hit_at_3.normalization"] = "min(3, |gold|)";
  report.notes["micro_f1.level"] = options.token_level_f1 ? "token" : "span";
  report.notes["bleu.smoothing"] = "add-one for n >= 2";
  return report;
}

}  // namespace forge
