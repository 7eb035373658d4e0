#include "entkit/ner_eval.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "entkit/error.hpp"
#include "entkit/io.hpp"
#include "entkit/text.hpp"

namespace entkit {

void PredictionSet::add(const std::string& paragraph_id, Prediction prediction) {
  auto& list = by_paragraph[paragraph_id];
  for (const auto& p : list)
    if (p.surface == prediction.surface && p.type_id == prediction.type_id) return;
  list.push_back(std::move(prediction));
}

namespace {

std::string span_surface(const Paragraph& paragraph, uint32_t start, uint32_t end) {
  const auto& tokens = paragraph.tokens;
  return paragraph.text.substr(
      tokens[start].char_start, tokens[end - 1].char_end - tokens[start].char_start);
}

std::set<std::string> folded_token_set(const std::string& text) {
  std::set<std::string> out;
  for (const auto& token : tokenize(text)) out.insert(fold_case(token.text));
  return out;
}

struct GoldMention {
  std::string folded_surface;
  std::set<std::string> folded_tokens;
  bool consumed = false;
};

// Shared skeleton of the exact and relaxed criteria: per type, consume gold
// mentions one-to-one in input order.
std::map<std::string, MatchCounts> match_one(const AnnotatedParagraph& gold,
                                             const std::vector<Prediction>& predictions,
                                             bool relaxed,
                                             const std::set<std::string>* types) {
  std::map<std::string, std::vector<GoldMention>> gold_by_type;
  for (const auto& span : gold.spans) {
    if (span.token_end > gold.paragraph.tokens.size() ||
        span.token_start >= span.token_end)
      throw Error(ErrorKind::invariant,
                  "gold span out of range in \"" + gold.paragraph.paragraph_id + "\"");
    GoldMention mention;
    const std::string surface =
        span_surface(gold.paragraph, span.token_start, span.token_end);
    mention.folded_surface = fold_case(surface);
    if (relaxed) mention.folded_tokens = folded_token_set(surface);
    for (const auto& t : span.type_ids) {
      if (types && !types->count(t)) continue;
      gold_by_type[t].push_back(mention);
    }
  }

  std::map<std::string, MatchCounts> counts;
  for (const auto& [t, mentions] : gold_by_type)
    counts[t].fn = mentions.size();  // consumed ones convert to TP below

  for (const auto& prediction : predictions) {
    if (types && !types->count(prediction.type_id)) continue;
    auto& c = counts[prediction.type_id];
    auto it = gold_by_type.find(prediction.type_id);
    bool matched = false;
    if (it != gold_by_type.end()) {
      const std::string folded = fold_case(prediction.surface);
      std::set<std::string> pred_tokens;
      if (relaxed) pred_tokens = folded_token_set(prediction.surface);
      for (auto& mention : it->second) {
        if (mention.consumed) continue;
        if (relaxed) {
          matched = std::any_of(
              pred_tokens.begin(), pred_tokens.end(),
              [&](const std::string& tok) { return mention.folded_tokens.count(tok); });
        } else {
          matched = mention.folded_surface == folded;
        }
        if (matched) {
          mention.consumed = true;
          break;
        }
      }
    }
    if (matched) {
      ++c.tp;
      --c.fn;
    } else {
      ++c.fp;
    }
  }
  return counts;
}

}  // namespace

std::map<std::string, MatchCounts> match_exact(const AnnotatedParagraph& gold,
                                               const std::vector<Prediction>& predictions) {
  return match_one(gold, predictions, false, nullptr);
}

std::map<std::string, MatchCounts> match_relaxed(const AnnotatedParagraph& gold,
                                                 const std::vector<Prediction>& predictions) {
  return match_one(gold, predictions, true, nullptr);
}

PRF prf(const MatchCounts& counts) {
  PRF out;
  const double tp = static_cast<double>(counts.tp);
  if (counts.tp + counts.fp > 0)
    out.precision = tp / static_cast<double>(counts.tp + counts.fp);
  else
    out.degenerate = true;
  if (counts.tp + counts.fn > 0)
    out.recall = tp / static_cast<double>(counts.tp + counts.fn);
  else
    out.degenerate = true;
  if (out.precision + out.recall > 0.0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  else
    out.degenerate = true;
  return out;
}

NerReport evaluate_ner(const SilverDataset& gold, const PredictionSet& predictions,
                       const std::set<std::string>* types) {
  std::unordered_map<std::string, const AnnotatedParagraph*> by_id;
  for (const auto& ap : gold) by_id[ap.paragraph.paragraph_id] = &ap;
  for (const auto& [pid, _] : predictions.by_paragraph)
    if (!by_id.count(pid))
      throw Error(ErrorKind::dangling_reference,
                  "predictions reference unknown paragraph \"" + pid + "\"");

  static const std::vector<Prediction> kNone;
  std::map<std::string, MatchCounts> exact_totals, relaxed_totals;
  for (const auto& ap : gold) {
    auto it = predictions.by_paragraph.find(ap.paragraph.paragraph_id);
    const auto& preds = it == predictions.by_paragraph.end() ? kNone : it->second;
    for (const auto& [t, c] : match_one(ap, preds, false, types)) exact_totals[t] += c;
    for (const auto& [t, c] : match_one(ap, preds, true, types)) relaxed_totals[t] += c;
  }

  NerReport report;
  std::set<std::string> all_types;
  for (const auto& [t, _] : exact_totals) all_types.insert(t);
  for (const auto& [t, _] : relaxed_totals) all_types.insert(t);
  for (const auto& t : all_types)
    report.per_type.push_back({t, exact_totals[t], relaxed_totals[t]});

  MatchCounts exact_pool, relaxed_pool;
  PRF exact_sum, relaxed_sum;
  bool macro_degenerate = report.per_type.empty();
  for (const auto& r : report.per_type) {
    exact_pool += r.exact;
    relaxed_pool += r.relaxed;
    const PRF e = prf(r.exact), x = prf(r.relaxed);
    exact_sum.precision += e.precision;
    exact_sum.recall += e.recall;
    exact_sum.f1 += e.f1;
    relaxed_sum.precision += x.precision;
    relaxed_sum.recall += x.recall;
    relaxed_sum.f1 += x.f1;
    macro_degenerate = macro_degenerate || e.degenerate || x.degenerate;
  }
  report.exact_micro = prf(exact_pool);
  report.relaxed_micro = prf(relaxed_pool);
  const double n = report.per_type.empty()
                       ? 1.0
                       : static_cast<double>(report.per_type.size());
  report.exact_macro = {exact_sum.precision / n, exact_sum.recall / n,
                        exact_sum.f1 / n, macro_degenerate};
  report.relaxed_macro = {relaxed_sum.precision / n, relaxed_sum.recall / n,
                          relaxed_sum.f1 / n, macro_degenerate};
  return report;
}

double fp_rate(const PredictionSet& predictions, const std::string& type_id,
               const std::vector<std::string>& paragraph_ids) {
  if (paragraph_ids.empty())
    throw Error(ErrorKind::empty_result, "no paragraphs to evaluate");
  size_t flagged = 0;
  for (const auto& pid : paragraph_ids) {
    auto it = predictions.by_paragraph.find(pid);
    if (it == predictions.by_paragraph.end()) continue;
    for (const auto& p : it->second) {
      if (p.type_id == type_id) {
        ++flagged;
        break;
      }
    }
  }
  return static_cast<double>(flagged) / static_cast<double>(paragraph_ids.size());
}

PredictionSet load_span_predictions(const std::string& path, const SilverDataset& gold,
                                    bool skip_unknown) {
  std::unordered_map<std::string, const AnnotatedParagraph*> by_id;
  for (const auto& ap : gold) by_id[ap.paragraph.paragraph_id] = &ap;

  PredictionSet set;
  for_each_json_line(path, [&](size_t, const Json& record) {
    const std::string pid = require_string(record, "paragraph_id");
    auto it = by_id.find(pid);
    if (it == by_id.end()) {
      if (skip_unknown) return;
      throw Error(ErrorKind::dangling_reference,
                  "predictions reference unknown paragraph \"" + pid + "\"");
    }
    const Paragraph& paragraph = it->second->paragraph;
    for (const auto& entry : require_field(record, "predictions")) {
      const uint32_t start = require_field(entry, "token_start").get<uint32_t>();
      const uint32_t end = require_field(entry, "token_end").get<uint32_t>();
      if (start >= end || end > paragraph.tokens.size())
        throw Error(ErrorKind::invariant,
                    "predicted span out of range in \"" + pid + "\"");
      set.add(pid, {span_surface(paragraph, start, end),
                    require_string(entry, "type_id")});
    }
  });
  return set;
}

PredictionSet load_string_predictions(const std::string& path) {
  PredictionSet set;
  for_each_json_line(path, [&](size_t, const Json& record) {
    const std::string pid = require_string(record, "paragraph_id");
    if (!set.by_paragraph.count(pid)) set.by_paragraph[pid] = {};
    for (const auto& entry : require_field(record, "entities")) {
      const std::string type_id = require_string(entry, "entity_type");
      const std::string joined = require_string(entry, "entities");
      size_t start = 0;
      while (start <= joined.size()) {
        size_t comma = joined.find(',', start);
        if (comma == std::string::npos) comma = joined.size();
        size_t from = start, to = comma;
        while (from < to && std::isspace(static_cast<unsigned char>(joined[from])))
          ++from;
        while (to > from && std::isspace(static_cast<unsigned char>(joined[to - 1])))
          --to;
        if (to > from) set.add(pid, {joined.substr(from, to - from), type_id});
        start = comma + 1;
      }
    }
  });
  return set;
}

PredictionSet load_predictions(const std::string& path, const SilverDataset& gold,
                               bool skip_unknown) {
  std::ifstream in = open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Json record = Json::parse(line, nullptr, false);
    if (record.is_discarded())
      throw Error(ErrorKind::parse, path + ": malformed first record");
    if (record.contains("predictions"))
      return load_span_predictions(path, gold, skip_unknown);
    if (record.contains("entities")) return load_string_predictions(path);
    throw Error(ErrorKind::parse,
                path + ": records carry neither \"predictions\" nor \"entities\"");
  }
  return {};
}

namespace {

void report_row(std::ofstream& out, const std::string& label, const MatchCounts* exact,
                const PRF& ep, const MatchCounts* relaxed, const PRF& rp) {
  out << label << '\t';
  if (exact)
    out << exact->tp << '\t' << exact->fp << '\t' << exact->fn << '\t';
  else
    out << "\t\t\t";
  out << format_double(ep.precision) << '\t' << format_double(ep.recall) << '\t'
      << format_double(ep.f1) << '\t';
  if (relaxed)
    out << relaxed->tp << '\t' << relaxed->fp << '\t' << relaxed->fn << '\t';
  else
    out << "\t\t\t";
  out << format_double(rp.precision) << '\t' << format_double(rp.recall) << '\t'
      << format_double(rp.f1) << '\n';
}

}  // namespace

void save_ner_report(const NerReport& report, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "type_id\texact_tp\texact_fp\texact_fn\texact_p\texact_r\texact_f1"
         "\trelaxed_tp\trelaxed_fp\trelaxed_fn\trelaxed_p\trelaxed_r\trelaxed_f1\n";
  MatchCounts exact_pool, relaxed_pool;
  for (const auto& r : report.per_type) {
    exact_pool += r.exact;
    relaxed_pool += r.relaxed;
    report_row(out, r.type_id, &r.exact, prf(r.exact), &r.relaxed, prf(r.relaxed));
  }
  report_row(out, "micro", &exact_pool, report.exact_micro, &relaxed_pool,
             report.relaxed_micro);
  report_row(out, "macro", nullptr, report.exact_macro, nullptr, report.relaxed_macro);
}

}  // namespace entkit
