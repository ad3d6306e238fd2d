// core/src/metrics.cpp

// Copyright 2026  The mmcap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "mmcap/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mmcap/error.hpp"

namespace mmcap {

Words eval_tokenize(const std::string& text) {
  Words out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts ngrams(const Words& w, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= w.size(); ++i)
    ++out[std::vector<std::string>(w.begin() + static_cast<std::ptrdiff_t>(i),
                                   w.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

void check_corpus(std::span<const Words> c, std::span<const Words> r) {
  if (c.size() != r.size())
    throw DataError(std::to_string(c.size()) + " candidates for " + std::to_string(r.size()) + " references");
  if (c.empty()) throw DataError("empty corpus");
}

}  // namespace

double bleu(std::span<const Words> candidates, std::span<const Words> references, int n) {
  check_corpus(candidates, references);
  if (n < 1) throw ContractError("BLEU order must be at least 1");
  std::size_t c_len = 0, r_len = 0;
  std::vector<double> matched(static_cast<std::size_t>(n), 0.0), total(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    c_len += candidates[i].size();
    r_len += references[i].size();
    for (int k = 1; k <= n; ++k) {
      auto cg = ngrams(candidates[i], static_cast<std::size_t>(k));
      auto rg = ngrams(references[i], static_cast<std::size_t>(k));
      for (const auto& [g, cnt] : cg) {
        auto it = rg.find(g);
        matched[static_cast<std::size_t>(k - 1)] += std::min(cnt, it == rg.end() ? 0 : it->second);
        total[static_cast<std::size_t>(k - 1)] += cnt;
      }
    }
  }
  double log_mean = 0.0;
  for (int k = 0; k < n; ++k) {
    if (matched[static_cast<std::size_t>(k)] == 0.0) return 0.0;
    log_mean += std::log(matched[static_cast<std::size_t>(k)] / total[static_cast<std::size_t>(k)]);
  }
  log_mean /= n;
  const double bp = c_len < r_len ? std::exp(1.0 - static_cast<double>(r_len) / static_cast<double>(c_len)) : 1.0;
  return 100.0 * bp * std::exp(log_mean);
}

double rouge_l_pair(const Words& candidate, const Words& reference, double beta) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const std::size_t m = candidate.size(), n = reference.size();
  std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j)
      cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[n]);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(m), r = lcs / static_cast<double>(n);
  return (1.0 + beta * beta) * p * r / (r + beta * beta * p);
}

double rouge_l(std::span<const Words> candidates, std::span<const Words> references) {
  check_corpus(candidates, references);
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += rouge_l_pair(candidates[i], references[i]);
  return 100.0 * sum / static_cast<double>(candidates.size());
}

std::vector<double> cider_d_scores(std::span<const Words> candidates, std::span<const Words> references,
                                   double sigma) {
  check_corpus(candidates, references);
  constexpr std::size_t kOrder = 4;
  const std::size_t N = references.size();
  std::vector<std::array<NgramCounts, kOrder>> ref_counts(N), cand_counts(N);
  NgramCounts df;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < kOrder; ++k) {
      ref_counts[i][k] = ngrams(references[i], k + 1);
      cand_counts[i][k] = ngrams(candidates[i], k + 1);
      for (const auto& entry : ref_counts[i][k]) ++df[entry.first];
    }
  const double log_n = std::log(static_cast<double>(N));
  auto weigh = [&](const NgramCounts& counts) {
    std::map<std::vector<std::string>, double> vec;
    double norm2 = 0.0;
    for (const auto& [g, tf] : counts) {
      auto it = df.find(g);
      const double w = tf * (log_n - std::log(std::max(1.0, it == df.end() ? 0.0 : static_cast<double>(it->second))));
      vec[g] = w;
      norm2 += w * w;
    }
    return std::make_pair(vec, std::sqrt(norm2));
  };
  std::vector<double> out(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double delta = static_cast<double>(candidates[i].size()) - static_cast<double>(references[i].size());
    const double penalty = std::exp(-delta * delta / (2.0 * sigma * sigma));
    double sum = 0.0;
    for (std::size_t k = 0; k < kOrder; ++k) {
      auto [vc, nc] = weigh(cand_counts[i][k]);
      auto [vr, nr] = weigh(ref_counts[i][k]);
      if (nc == 0.0 || nr == 0.0) continue;
      double dot = 0.0;
      for (const auto& [g, w] : vc) {
        auto it = vr.find(g);
        if (it != vr.end()) dot += std::min(w, it->second) * it->second;
      }
      sum += dot / (nc * nr) * penalty;
    }
    out[i] = 10.0 * sum / static_cast<double>(kOrder);
  }
  return out;
}

double cider_d(std::span<const Words> candidates, std::span<const Words> references) {
  auto s = cider_d_scores(candidates, references);
  double sum = 0.0;
  for (double x : s) sum += x;
  return sum / static_cast<double>(s.size());
}

namespace {

std::string fmt(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

std::string EvalReport::to_table(const std::string& title) const {
  std::ostringstream os;
  if (!title.empty()) os << title << '\n';
  os << "segments      " << count << '\n'
     << "BLEU-1        " << fmt(bleu1, 2) << "   (0-100)\n"
     << "BLEU-4        " << fmt(bleu4, 2) << "   (0-100)\n"
     << "ROUGE-L       " << fmt(rouge_l, 2) << "   (0-100)\n"
     << "CIDEr-D       " << fmt(cider_d, 4) << "   (0-10)\n"
     << "CIDEr-D x100  " << fmt(cider_d * 100.0, 2) << '\n';
  return os.str();
}

std::string EvalReport::summary_csv() const {
  std::ostringstream os;
  os << "metric,value,scale\n"
     << "segments," << count << ",count\n"
     << "bleu1," << fmt(bleu1, 6) << ",0-100\n"
     << "bleu4," << fmt(bleu4, 6) << ",0-100\n"
     << "rouge_l," << fmt(rouge_l, 6) << ",0-100\n"
     << "cider_d," << fmt(cider_d, 6) << ",0-10\n"
     << "cider_d_x100," << fmt(cider_d * 100.0, 6) << ",x100\n";
  return os.str();
}

std::string EvalReport::segments_csv() const {
  std::ostringstream os;
  os << "video_id,seg_index,candidate,reference,rouge_l,cider_d\n";
  for (const auto& s : segments)
    os << csv_field(s.video_id) << ',' << s.seg_index << ',' << csv_field(s.candidate) << ','
       << csv_field(s.reference) << ',' << fmt(s.rouge_l, 6) << ',' << fmt(s.cider_d, 6) << '\n';
  return os.str();
}

EvalReport evaluate(std::span<const std::string> candidates, std::span<const std::string> references,
                    std::span<const std::pair<std::string, std::int64_t>> ids) {
  if (candidates.size() != references.size())
    throw DataError(std::to_string(candidates.size()) + " candidates for " + std::to_string(references.size()) +
                    " references");
  if (!ids.empty() && ids.size() != candidates.size())
    throw DataError(std::to_string(ids.size()) + " segment ids for " + std::to_string(candidates.size()) +
                    " candidates");
  EvalReport report;
  report.count = candidates.size();
  if (candidates.empty()) return report;
  std::vector<Words> c, r;
  for (const auto& s : candidates) c.push_back(eval_tokenize(s));
  for (const auto& s : references) r.push_back(eval_tokenize(s));
  report.bleu1 = bleu(c, r, 1);
  report.bleu4 = bleu(c, r, 4);
  report.rouge_l = rouge_l(c, r);
  auto cider = cider_d_scores(c, r);
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    sum += cider[i];
    SegmentScore s;
    if (!ids.empty()) {
      s.video_id = ids[i].first;
      s.seg_index = ids[i].second;
    } else {
      s.seg_index = static_cast<std::int64_t>(i);
    }
    s.candidate = candidates[i];
    s.reference = references[i];
    s.rouge_l = 100.0 * rouge_l_pair(c[i], r[i]);
    s.cider_d = cider[i];
    report.segments.push_back(std::move(s));
  }
  report.cider_d = sum / static_cast<double>(c.size());
  return report;
}

EvalReport constant_baseline(std::span<const std::string> references, const std::string& constant) {
  std::vector<std::string> candidates(references.size(), constant);
  return evaluate(candidates, references);
}

std::vector<AgreementPair> agreement_pool(std::span<const Annotation> annotations, const TagTable* tags) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const Annotation*>> by_video;
  for (const auto& a : annotations) {
    auto& v = by_video[a.video_id];
    if (v.empty()) order.push_back(a.video_id);
    v.push_back(&a);
  }
  auto norm = [&](const std::string& t) { return tags ? tags->standardize(t) : t; };
  std::vector<AgreementPair> pool;
  for (const auto& vid : order) {
    const auto& anns = by_video[vid];
    for (std::size_t i = 0; i < anns.size(); ++i)
      for (std::size_t j = i + 1; j < anns.size(); ++j) {
        std::map<std::int64_t, const std::string*> later;
        for (const auto& e : anns[j]->timeline) later.emplace(e.start, &e.tag);
        for (const auto& e : anns[i]->timeline) {
          auto it = later.find(e.start);
          if (it != later.end()) pool.push_back({vid, e.start, norm(e.tag), norm(*it->second)});
        }
      }
  }
  return pool;
}

EvalReport evaluate_agreement(std::span<const AgreementPair> pool) {
  std::vector<std::string> cand, ref;
  std::vector<std::pair<std::string, std::int64_t>> ids;
  for (const auto& p : pool) {
    cand.push_back(p.prediction);
    ref.push_back(p.reference);
    ids.emplace_back(p.video_id, p.start);
  }
  return evaluate(cand, ref, ids);
}

std::vector<Annotation> load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<Annotation> out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      for (const char* key : {"video_id", "annotator", "timeline"})
        if (!j.contains(key)) throw DataError(path + ": missing field \"" + std::string(key) + "\"", n);
      Annotation a{j.at("video_id").get<std::string>(), j.at("annotator").get<std::string>(), {}};
      for (const auto& e : j.at("timeline")) a.timeline.push_back({e.at("start").get<std::int64_t>(), e.at("tag").get<std::string>()});
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ": " + e.what(), n);
    }
  }
  return out;
}

}  // namespace mmcap
