// core/src/synth.cpp

// Copyright 2026 The docws Authors
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

#include "docws/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "docws/errors.hpp"
#include "docws/eval.hpp"
#include "docws/seed.hpp"

namespace docws {

namespace {

using Rng = std::mt19937_64;

// Distribution objects are implementation-defined; these are not.
double Uniform(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double Uniform(Rng &rng, double lo, double hi) { return lo + (hi - lo) * Uniform(rng); }
std::size_t UniformIndex(Rng &rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <class T>
void Shuffle(std::vector<T> &v, Rng &rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[UniformIndex(rng, i)]);
}

std::size_t SampleCumulative(const std::vector<double> &cum, Rng &rng) {
  double u = Uniform(rng) * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  return std::min<std::size_t>(it - cum.begin(), cum.size() - 1);
}

const char *TemplateName(TemplateKind k) {
  switch (k) {
    case TemplateKind::kWord: return "word";
    case TemplateKind::kPrice: return "price";
    case TemplateKind::kCode: return "code";
  }
  return "?";
}

const char *LfKindName(LfKind k) {
  switch (k) {
    case LfKind::kKeyword: return "keyword";
    case LfKind::kRegex: return "regex";
    case LfKind::kRegion: return "region";
    case LfKind::kNeighbor: return "neighbor";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Surface forms

constexpr const char *kOnsets[] = {"b", "c", "d", "f", "g", "h", "k", "l", "m", "n",
                                   "p", "r", "s", "t", "v", "z", "ch", "sh", "tr", "pl"};
constexpr const char *kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
constexpr const char *kCodas[] = {"", "", "", "n", "r", "s", "l", "k"};

std::string PseudoWord(Rng &rng) {
  std::string w;
  const std::size_t syllables = 2 + UniformIndex(rng, 2);
  for (std::size_t s = 0; s < syllables; ++s) {
    w += kOnsets[UniformIndex(rng, std::size(kOnsets))];
    w += kVowels[UniformIndex(rng, std::size(kVowels))];
    w += kCodas[UniformIndex(rng, std::size(kCodas))];
  }
  return w;
}

std::string CodeWord(Rng &rng) {
  std::string w(1, static_cast<char>('A' + UniformIndex(rng, 26)));
  for (int i = 0; i < 3; ++i) w += static_cast<char>('0' + UniformIndex(rng, 10));
  return w;
}

std::string PriceWord(Rng &rng) {
  std::string w(1, static_cast<char>('1' + UniformIndex(rng, 9)));
  const std::size_t extra = UniformIndex(rng, 3);
  for (std::size_t i = 0; i < extra; ++i) w += static_cast<char>('0' + UniformIndex(rng, 10));
  w += '.';
  for (int i = 0; i < 2; ++i) w += static_cast<char>('0' + UniformIndex(rng, 10));
  return w;
}

// Replaces one letter or digit with another of the same kind.
void Corrupt(std::string &text, Rng &rng) {
  if (text.empty()) return;
  char &c = text[UniformIndex(rng, text.size())];
  if (c >= 'a' && c <= 'z') c = static_cast<char>('a' + (c - 'a' + 1 + UniformIndex(rng, 25)) % 26);
  else if (c >= 'A' && c <= 'Z') c = static_cast<char>('A' + (c - 'A' + 1 + UniformIndex(rng, 25)) % 26);
  else if (c >= '0' && c <= '9') c = static_cast<char>('0' + (c - '0' + 1 + UniformIndex(rng, 9)) % 10);
}

struct ClassSampler {
  std::vector<std::string> vocab;
  std::vector<double> cum;  // Zipf(1) over vocab ranks
};

constexpr double kPageWidth = 1000, kPageHeight = 1400;

Corpus GenerateCorpus(const SynthSpec &spec) {
  Rng rng(DeriveSeed(spec.seed, SeedStream::kSynthCorpus));
  Corpus corpus;
  std::set<std::string> used;
  std::vector<ClassSampler> samplers(spec.classes.size());
  std::vector<double> class_cum;
  double acc = 0;
  for (std::size_t k = 0; k < spec.classes.size(); ++k) {
    const ClassTemplate &ct = spec.classes[k];
    corpus.classes.push_back(ct.name);
    acc += ct.weight;
    class_cum.push_back(acc);
    if (ct.kind == TemplateKind::kPrice) continue;
    auto &s = samplers[k];
    double z = 0;
    std::size_t attempts = 0;
    while (s.vocab.size() < ct.vocab) {
      if (++attempts > 100 * ct.vocab + 1000)
        throw ValidationError("class '" + ct.name + "': cannot draw " +
                              std::to_string(ct.vocab) + " distinct surface forms");
      std::string w = ct.kind == TemplateKind::kWord ? PseudoWord(rng) : CodeWord(rng);
      if (!used.insert(NormalizeKeyword(w)).second) continue;
      s.vocab.push_back(std::move(w));
      z += 1.0 / static_cast<double>(s.vocab.size());
      s.cum.push_back(z);
    }
  }

  const int width_digits = static_cast<int>(std::to_string(spec.n_documents).size());
  for (std::size_t d = 0; d < spec.n_documents; ++d) {
    Document doc;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%0*zu", width_digits, d);
    doc.doc_id = id;
    doc.page_width = kPageWidth;
    doc.page_height = kPageHeight;
    const std::size_t n =
        spec.tokens_min + UniformIndex(rng, spec.tokens_max - spec.tokens_min + 1);
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t k = SampleCumulative(class_cum, rng);
      const ClassTemplate &ct = spec.classes[k];
      Token tok;
      tok.text = ct.kind == TemplateKind::kPrice
                     ? PriceWord(rng)
                     : samplers[k].vocab[SampleCumulative(samplers[k].cum, rng)];
      if (Uniform(rng) < spec.noise) Corrupt(tok.text, rng);
      tok.gold_label = static_cast<ClassId>(k + 1);
      const double w = 11.0 * static_cast<double>(tok.text.size()) + 6.0, h = 22.0;
      const double cx = Uniform(rng, ct.region.x0, ct.region.x1) * kPageWidth;
      const double cy = Uniform(rng, ct.region.y0, ct.region.y1) * kPageHeight;
      const double x0 = std::clamp(std::round(cx - w / 2), 0.0, kPageWidth - w);
      const double y0 = std::clamp(std::round(cy - h / 2), 0.0, kPageHeight - h);
      tok.bbox = {x0, y0, x0 + std::round(w), y0 + h};
      doc.tokens.push_back(std::move(tok));
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// LF construction

struct LfWorkspace {
  const Corpus *corpus = nullptr;
  std::vector<TokenContext> contexts;
  std::vector<ClassId> gold;
  std::vector<std::size_t> word;  // surface-form id per instance
  std::vector<std::string> forms;
  std::vector<std::vector<std::size_t>> counts;  // per form, per class (index 0 unused)
  std::size_t n = 0;
};

LfWorkspace MakeWorkspace(const Corpus &corpus, const ContextParams &params) {
  LfWorkspace ws;
  ws.corpus = &corpus;
  std::unordered_map<std::string, std::size_t> ids;
  std::vector<std::shared_ptr<const DocLayout>> layouts;
  for (const auto &d : corpus.documents) layouts.push_back(MakeLayout(d));
  const std::size_t k = corpus.classes.size();
  for (const auto &ref : EnumerateInstances(corpus)) {
    ws.contexts.push_back(ContextOf(layouts[ref.doc], ref.token, params));
    const Token &t = corpus.documents[ref.doc].tokens[ref.token];
    ws.gold.push_back(*t.gold_label);
    std::string key = NormalizeKeyword(t.text);
    auto [it, fresh] = ids.emplace(key, ws.forms.size());
    if (fresh) {
      ws.forms.push_back(key);
      ws.counts.emplace_back(k + 1, 0);
    }
    ws.word.push_back(it->second);
    ++ws.counts[it->second][*t.gold_label];
  }
  ws.n = ws.contexts.size();
  return ws;
}

std::vector<char> Fire(const LfWorkspace &ws, const RulePtr &rule) {
  std::vector<char> out(ws.n, 0);
  if (!rule) return out;
  for (std::size_t i = 0; i < ws.n; ++i) out[i] = EvaluateRule(*rule, ws.contexts[i]);
  return out;
}

std::size_t TrueFires(const LfWorkspace &ws, const std::vector<char> &fired, ClassId c) {
  std::size_t t = 0;
  for (std::size_t i = 0; i < ws.n; ++i) t += fired[i] && ws.gold[i] == c;
  return t;
}

// Forms of class c (by majority) in a seeded order.
std::vector<std::size_t> FormsOf(const LfWorkspace &ws, ClassId c, Rng &rng) {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < ws.forms.size(); ++w) {
    const auto &cnt = ws.counts[w];
    if (std::max_element(cnt.begin() + 1, cnt.end()) - cnt.begin() == c) out.push_back(w);
  }
  Shuffle(out, rng);
  return out;
}

std::string RegexEscape(const std::string &s) {
  std::string out;
  for (char ch : s) {
    if (std::string_view("\\^$.|?*+()[]{}").find(ch) != std::string_view::npos) out += '\\';
    out += ch;
  }
  return out;
}

// The structural part of an LF, grown until it covers about target_true
// tokens of class c.
RulePtr MakeCore(const SynthSpec &spec, const LfWorkspace &ws, const LfSpec &lf,
                 double target_true, Rng &rng) {
  const ClassTemplate &ct = spec.classes[lf.cls - 1];
  switch (lf.kind) {
    case LfKind::kKeyword:
      return nullptr;
    case LfKind::kRegex: {
      // Class shape, restricted to a growing set of leading characters.
      std::set<std::string> keys;
      const std::size_t prefix = ct.kind == TemplateKind::kWord ? 2 : 1;
      for (std::size_t i = 0; i < ws.n; ++i)
        if (ws.gold[i] == lf.cls) {
          const std::string &text = ws.contexts[i].Anchor().text;
          if (text.size() >= prefix) keys.insert(text.substr(0, prefix));
        }
      std::vector<std::string> order(keys.begin(), keys.end());
      Shuffle(order, rng);
      const char *tail = ct.kind == TemplateKind::kPrice  ? "[0-9]{0,2}\\.[0-9]{2}$"
                         : ct.kind == TemplateKind::kCode ? "[0-9]{3}$"
                                                          : "[a-z]*$";
      RulePtr rule;
      std::string alt;
      for (const auto &key : order) {
        alt += (alt.empty() ? "" : "|") + RegexEscape(key);
        rule = MakeRegex("^(" + alt + ")" + tail);
        if (static_cast<double>(TrueFires(ws, Fire(ws, rule), lf.cls)) >= target_true) break;
      }
      return rule;
    }
    case LfKind::kRegion: {
      // A band of the class region, grown downward from its top edge.
      NormBBox r = ct.region;
      RulePtr rule;
      for (double y1 = r.y0 + 0.02;; y1 += 0.02) {
        rule = MakeRegion({r.x0, r.y0, r.x1, std::min(y1, r.y1)});
        if (y1 >= r.y1 ||
            static_cast<double>(TrueFires(ws, Fire(ws, rule), lf.cls)) >= target_true)
          break;
      }
      return rule;
    }
    case LfKind::kNeighbor: {
      // Tokens whose left neighbour is a known form of the class.
      std::vector<std::string> lexicon;
      RulePtr rule;
      auto forms = FormsOf(ws, lf.cls, rng);
      const std::size_t step = std::max<std::size_t>(1, forms.size() / 40);
      for (std::size_t w = 0; w < forms.size(); ++w) {
        lexicon.push_back(ws.forms[forms[w]]);
        if ((w + 1) % step != 0 && w + 1 != forms.size()) continue;
        rule = MakeNeighbor(Direction::kLeft, MakeKeyword(lexicon));
        if (static_cast<double>(TrueFires(ws, Fire(ws, rule), lf.cls)) >= target_true) break;
      }
      return rule;
    }
  }
  return nullptr;
}

struct Adjustment {
  std::vector<std::string> include, exclude;
};

// Local search over per-form include/exclude decisions minimizing the
// squared distance of (true fires, false fires) to the targets.
Adjustment Tune(const LfWorkspace &ws, const std::vector<char> &core, ClassId c,
                double target_true, double target_false, Rng &rng) {
  const std::size_t nf = ws.forms.size();
  std::vector<double> at(nf, 0), af(nf, 0), nt(nf, 0), nfalse(nf, 0);
  double t = 0, f = 0;
  for (std::size_t i = 0; i < ws.n; ++i) {
    const bool hit = ws.gold[i] == c;
    (hit ? nt : nfalse)[ws.word[i]] += 1;
    if (core[i]) {
      (hit ? at : af)[ws.word[i]] += 1;
      (hit ? t : f) += 1;
    }
  }
  auto err = [&](double tt, double ff) {
    return (tt - target_true) * (tt - target_true) + (ff - target_false) * (ff - target_false);
  };
  // state: 0 neutral, 1 excluded, 2 included
  std::vector<int> state(nf, 0);
  auto delta = [&](std::size_t w, int s) -> std::pair<double, double> {
    if (s == 1) return {-at[w], -af[w]};
    if (s == 2) return {nt[w] - at[w], nfalse[w] - af[w]};
    return {0, 0};
  };
  std::vector<std::size_t> order(nf);
  for (std::size_t w = 0; w < nf; ++w) order[w] = w;
  for (int pass = 0; pass < 20; ++pass) {
    Shuffle(order, rng);
    bool moved = false;
    for (auto w : order) {
      auto [bt, bf] = delta(w, state[w]);
      const double base_t = t - bt, base_f = f - bf;
      int best = state[w];
      double best_err = err(t, f);
      for (int s = 0; s < 3; ++s) {
        if (s == state[w]) continue;
        if (s == 1 && at[w] + af[w] == 0) continue;
        if (s == 2 && nt[w] + nfalse[w] - at[w] - af[w] == 0) continue;
        auto [dt, df] = delta(w, s);
        double e = err(base_t + dt, base_f + df);
        if (e < best_err - 1e-12) {
          best = s;
          best_err = e;
        }
      }
      if (best != state[w]) {
        auto [dt, df] = delta(w, best);
        t = base_t + dt;
        f = base_f + df;
        state[w] = best;
        moved = true;
      }
    }
    if (!moved) break;
  }
  Adjustment adj;
  for (std::size_t w = 0; w < nf; ++w) {
    if (state[w] == 1) adj.exclude.push_back(ws.forms[w]);
    if (state[w] == 2) adj.include.push_back(ws.forms[w]);
  }
  std::sort(adj.include.begin(), adj.include.end());
  std::sort(adj.exclude.begin(), adj.exclude.end());
  return adj;
}

RulePtr Compose(RulePtr core, const Adjustment &adj) {
  RulePtr base = core;
  if (base && !adj.exclude.empty())
    base = MakeAllOf({base, MakeNot(MakeKeyword(adj.exclude))});
  if (adj.include.empty()) return base;
  RulePtr inc = MakeKeyword(adj.include);
  return base ? MakeAnyOf({base, inc}) : inc;
}

std::string LfId(const SynthSpec &spec, const LfSpec &lf, std::size_t j) {
  std::string name;
  for (char ch : spec.classes[lf.cls - 1].name)
    name += std::isalnum(static_cast<unsigned char>(ch))
                ? static_cast<char>(std::tolower(static_cast<unsigned char>(ch)))
                : '_';
  return name + "_" + LfKindName(lf.kind) + "_" + std::to_string(j + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec

SynthSpec SynthSpec::Default() {
  SynthSpec s;
  s.classes = {
      {"Menu", TemplateKind::kWord, 80, 0.20, {0.05, 0.02, 0.55, 0.95}},
      {"Dish", TemplateKind::kWord, 300, 0.45, {0.05, 0.08, 0.60, 0.95}},
      {"Price", TemplateKind::kPrice, 0, 0.35, {0.62, 0.12, 0.95, 0.95}},
  };
  s.lfs = {
      {1, LfKind::kKeyword, 0.08, 0.90}, {1, LfKind::kRegion, 0.06, 0.80},
      {1, LfKind::kKeyword, 0.06, 0.70}, {2, LfKind::kKeyword, 0.15, 0.95},
      {2, LfKind::kKeyword, 0.12, 0.75}, {2, LfKind::kNeighbor, 0.10, 0.85},
      {3, LfKind::kRegex, 0.25, 0.95},   {3, LfKind::kRegion, 0.15, 0.90},
  };
  return s;
}

void SynthSpec::Validate() const {
  if (n_documents < 1) throw ValidationError("n_documents must be >= 1");
  if (tokens_min < 1 || tokens_max < tokens_min)
    throw ValidationError("need 1 <= tokens_min <= tokens_max");
  if (classes.size() < 2) throw ValidationError("synthetic spec needs at least 2 classes");
  if (lfs.empty()) throw ValidationError("synthetic spec needs at least 1 LF");
  if (!(noise >= 0 && noise < 1)) throw ValidationError("noise must lie in [0, 1)");
  std::set<std::string> names;
  for (const auto &c : classes) {
    if (c.name.empty() || !names.insert(c.name).second)
      throw ValidationError("class names must be non-empty and unique");
    if (!(c.weight > 0)) throw ValidationError("class '" + c.name + "': weight must be > 0");
    if (c.kind != TemplateKind::kPrice && c.vocab < 1)
      throw ValidationError("class '" + c.name + "': vocab must be >= 1");
    const auto &r = c.region;
    if (!(r.x0 >= 0 && r.y0 >= 0 && r.x1 <= 1 && r.y1 <= 1 && r.x0 < r.x1 && r.y0 < r.y1))
      throw ValidationError("class '" + c.name + "': region must be a box in the unit square");
  }
  for (std::size_t j = 0; j < lfs.size(); ++j) {
    const auto &lf = lfs[j];
    const std::string where = "lf " + std::to_string(j + 1);
    if (lf.cls < 1 || lf.cls > static_cast<ClassId>(classes.size()))
      throw ValidationError(where + ": unknown class");
    if (!(lf.coverage > 0 && lf.coverage <= 1))
      throw ValidationError(where + ": coverage must lie in (0, 1]");
    if (!(lf.precision > 0 && lf.precision <= 1))
      throw ValidationError(where + ": precision must lie in (0, 1]");
  }
}

namespace {

std::vector<std::string> Words(const std::string &s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::map<std::string, std::string> Fields(const KeyValue &kv,
                                          const std::vector<std::string> &words) {
  std::map<std::string, std::string> out;
  for (std::size_t i = 1; i < words.size(); ++i) {
    auto eq = words[i].find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(kv.line) + ": expected field=value, got '" +
                            words[i] + "'");
    out[words[i].substr(0, eq)] = words[i].substr(eq + 1);
  }
  return out;
}

double FieldDouble(const KeyValue &kv, const std::string &name, const std::string &v) {
  return ParseDouble(KeyValue{kv.key + "." + name, v, kv.line});
}

}  // namespace

SynthSpec SynthSpecFrom(const std::vector<KeyValue> &kvs, SynthSpec base,
                        std::vector<KeyValue> *unknown) {
  std::vector<ClassTemplate> classes;
  std::vector<std::pair<KeyValue, std::vector<std::string>>> lf_lines;
  for (const auto &kv : kvs) {
    const std::string &k = kv.key;
    if (k == "n_documents") base.n_documents = static_cast<std::size_t>(ParseInt(kv));
    else if (k == "tokens_min") base.tokens_min = static_cast<std::size_t>(ParseInt(kv));
    else if (k == "tokens_max") base.tokens_max = static_cast<std::size_t>(ParseInt(kv));
    else if (k == "noise") base.noise = ParseDouble(kv);
    else if (k == "seed") base.seed = static_cast<std::uint64_t>(ParseInt(kv));
    else if (k == "class") {
      auto words = Words(kv.value);
      if (words.empty())
        throw ValidationError("config line " + std::to_string(kv.line) + ": class needs a name");
      ClassTemplate ct;
      ct.name = words[0];
      for (const auto &[f, v] : Fields(kv, words)) {
        if (f == "template") {
          if (v == "word") ct.kind = TemplateKind::kWord;
          else if (v == "price") ct.kind = TemplateKind::kPrice;
          else if (v == "code") ct.kind = TemplateKind::kCode;
          else throw ValidationError("config line " + std::to_string(kv.line) + ": unknown template '" + v + "'");
        } else if (f == "vocab") {
          ct.vocab = static_cast<std::size_t>(ParseInt(KeyValue{"class.vocab", v, kv.line}));
        } else if (f == "weight") {
          ct.weight = FieldDouble(kv, f, v);
        } else if (f == "region") {
          double b[4];
          std::istringstream in(v);
          std::string part;
          int i = 0;
          while (std::getline(in, part, ',')) {
            if (i == 4) break;
            b[i++] = FieldDouble(kv, f, part);
          }
          if (i != 4 || std::getline(in, part))
            throw ValidationError("config line " + std::to_string(kv.line) + ": region needs x0,y0,x1,y1");
          ct.region = {b[0], b[1], b[2], b[3]};
        } else {
          throw ValidationError("config line " + std::to_string(kv.line) + ": unknown class field '" + f + "'");
        }
      }
      classes.push_back(ct);
    } else if (k == "lf") {
      lf_lines.emplace_back(kv, Words(kv.value));
    } else if (unknown) {
      unknown->push_back(kv);
    } else {
      throw ValidationError("config line " + std::to_string(kv.line) + ": unknown key '" + k + "'");
    }
  }
  if (!classes.empty()) base.classes = classes;
  if (!lf_lines.empty()) {
    base.lfs.clear();
    for (const auto &[kv, words] : lf_lines) {
      if (words.empty())
        throw ValidationError("config line " + std::to_string(kv.line) + ": lf needs a class");
      LfSpec lf;
      auto it = std::find_if(base.classes.begin(), base.classes.end(),
                             [&](const ClassTemplate &c) { return c.name == words[0]; });
      if (it == base.classes.end())
        throw ValidationError("config line " + std::to_string(kv.line) + ": unknown class '" + words[0] + "'");
      lf.cls = static_cast<ClassId>(it - base.classes.begin() + 1);
      for (const auto &[f, v] : Fields(kv, words)) {
        if (f == "kind") {
          if (v == "keyword") lf.kind = LfKind::kKeyword;
          else if (v == "regex") lf.kind = LfKind::kRegex;
          else if (v == "region") lf.kind = LfKind::kRegion;
          else if (v == "neighbor") lf.kind = LfKind::kNeighbor;
          else throw ValidationError("config line " + std::to_string(kv.line) + ": unknown lf kind '" + v + "'");
        } else if (f == "coverage") {
          lf.coverage = FieldDouble(kv, f, v);
        } else if (f == "precision") {
          lf.precision = FieldDouble(kv, f, v);
        } else {
          throw ValidationError("config line " + std::to_string(kv.line) + ": unknown lf field '" + f + "'");
        }
      }
      base.lfs.push_back(lf);
    }
  }
  base.Validate();
  return base;
}

std::string FormatSynthSpec(const SynthSpec &s) {
  std::ostringstream o;
  o << "n_documents = " << s.n_documents << '\n'
    << "tokens_min = " << s.tokens_min << '\n'
    << "tokens_max = " << s.tokens_max << '\n'
    << "noise = " << FormatDouble(s.noise) << '\n'
    << "seed = " << s.seed << '\n';
  for (const auto &c : s.classes)
    o << "class = " << c.name << " template=" << TemplateName(c.kind) << " vocab=" << c.vocab
      << " weight=" << FormatDouble(c.weight) << " region=" << FormatDouble(c.region.x0) << ','
      << FormatDouble(c.region.y0) << ',' << FormatDouble(c.region.x1) << ','
      << FormatDouble(c.region.y1) << '\n';
  for (const auto &lf : s.lfs)
    o << "lf = " << s.classes[lf.cls - 1].name << " kind=" << LfKindName(lf.kind)
      << " coverage=" << FormatDouble(lf.coverage) << " precision=" << FormatDouble(lf.precision)
      << '\n';
  return o.str();
}

// ---------------------------------------------------------------------------
// Generation

SynthData Generate(const SynthSpec &spec, const ContextParams &params) {
  spec.Validate();
  SynthData out;
  out.corpus = GenerateCorpus(spec);
  ValidateCorpus(out.corpus);
  const LfWorkspace ws = MakeWorkspace(out.corpus, params);
  const double n = static_cast<double>(ws.n);

  for (std::size_t j = 0; j < spec.lfs.size(); ++j) {
    const LfSpec &lf = spec.lfs[j];
    Rng rng(DeriveSeed(spec.seed, SeedStream::kSynthLfs) + j);
    const double want_true = lf.precision * lf.coverage * n;
    const double want_false = (1 - lf.precision) * lf.coverage * n;
    double aim_true = want_true, aim_false = want_false;
    double cov = 0, prec = 0;
    bool ok = false;
    RulePtr rule;
    for (int attempt = 0; attempt < kMaxTargetRetries && !ok; ++attempt) {
      RulePtr core = MakeCore(spec, ws, lf, aim_true, rng);
      Adjustment adj = Tune(ws, Fire(ws, core), lf.cls, aim_true, aim_false, rng);
      rule = Compose(core, adj);
      auto fired = Fire(ws, rule);
      double t = static_cast<double>(TrueFires(ws, fired, lf.cls));
      double all = static_cast<double>(std::count(fired.begin(), fired.end(), 1));
      cov = all / n;
      prec = all > 0 ? t / all : 0;
      ok = rule && std::abs(cov - lf.coverage) <= kTargetTolerance &&
           std::abs(prec - lf.precision) <= kTargetTolerance;
      // Re-aim toward the shortfall; the next core draw uses fresh randomness.
      aim_true = std::max(0.0, aim_true + (want_true - t));
      aim_false = std::max(0.0, aim_false + (want_false - (all - t)));
    }
    if (!ok) {
      char msg[200];
      std::snprintf(msg, sizeof msg,
                    "lf %zu (%s): targets coverage %.3f precision %.3f unreachable after %d "
                    "attempts (best %.3f / %.3f)",
                    j + 1, LfKindName(lf.kind), lf.coverage, lf.precision, kMaxTargetRetries,
                    cov, prec);
      throw ValidationError(msg);
    }
    out.lfs.push_back({LfId(spec, lf, j), lf.cls, rule});
    out.coverage.push_back(cov);
    out.precision.push_back(prec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

TrainConfig SweepConfig::DefaultSweepTrainConfig() {
  TrainConfig c;
  c.hash_bits = 14;
  return c;
}

SweepConfig SweepConfigFrom(const std::vector<KeyValue> &kvs, SweepConfig base,
                            std::vector<KeyValue> *unknown) {
  bool fresh_l = true, fresh_u = true;
  for (const auto &kv : kvs) {
    if (kv.key == "labeled") {
      if (fresh_l) base.labeled_fractions.clear(), fresh_l = false;
      base.labeled_fractions.push_back(ParseDouble(kv));
    } else if (kv.key == "unlabeled") {
      if (fresh_u) base.unlabeled_fractions.clear(), fresh_u = false;
      base.unlabeled_fractions.push_back(ParseDouble(kv));
    } else if (kv.key == "seeds") {
      base.seeds.clear();
      std::istringstream in(kv.value);
      for (std::string part; std::getline(in, part, ',');)
        base.seeds.push_back(static_cast<std::uint64_t>(ParseInt(KeyValue{kv.key, part, kv.line})));
    } else if (kv.key == "validation_fraction") {
      base.validation_fraction = ParseDouble(kv);
    } else if (kv.key == "test_fraction") {
      base.test_fraction = ParseDouble(kv);
    } else if (unknown) {
      unknown->push_back(kv);
    } else {
      throw ValidationError("config line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
    }
  }
  return base;
}

CorpusSplit SweepSplit(const Corpus &corpus, double labeled, double unlabeled,
                       double validation, double test, std::uint64_t seed) {
  for (double f : {labeled, unlabeled, validation, test})
    if (!(f >= 0 && f <= 1)) throw ValidationError("sweep fractions must lie in [0, 1]");
  if (validation + test >= 1) throw ValidationError("validation + test must be < 1");
  const std::size_t n = corpus.documents.size();
  std::vector<std::size_t> docs(n);
  for (std::size_t d = 0; d < n; ++d) docs[d] = d;
  Rng rng(DeriveSeed(seed, SeedStream::kSplit));
  Shuffle(docs, rng);
  const std::size_t n_test = FractionToCount(test, n);
  const std::size_t n_val = FractionToCount(validation, n);
  if (n_test + n_val >= n) throw ValidationError("corpus too small for the sweep split");
  const std::size_t pool = n - n_test - n_val;
  const std::size_t n_l = std::min(FractionToCount(labeled, pool), pool);
  const std::size_t n_u = std::min(FractionToCount(unlabeled, pool), pool - n_l);
  CorpusSplit s;
  s.seed = seed;
  s.fractions = {double(n_l) / n, double(n_val) / n, double(n_test) / n};
  auto it = docs.begin();
  s.test_docs.assign(it, it + n_test);
  it += n_test;
  s.validation_docs.assign(it, it + n_val);
  it += n_val;
  s.labeled_docs.assign(it, it + n_l);
  it += n_l;
  s.unlabeled_docs.assign(it, it + n_u);
  FillInstances(corpus, s);
  return s;
}

SweepFixture SweepFixture::Make(const SynthSpec &spec, std::uint64_t seed,
                                const TrainConfig &train) {
  SweepFixture fx;
  SynthSpec s = spec;
  s.seed = spec.seed + seed;
  fx.seed = seed;
  fx.data = Generate(s, train.context);
  fx.instances = EnumerateInstances(fx.data.corpus);
  fx.features = FeaturizeCorpus(fx.data.corpus, train.context, train.hash_bits);
  fx.matrix = BuildLabelMatrix(fx.data.lfs, fx.data.corpus, train.context);
  return fx;
}

SweepCell RunCell(const SweepFixture &fx, double labeled, double unlabeled,
                  const SweepConfig &config) {
  const Corpus &corpus = fx.data.corpus;
  CorpusSplit split = SweepSplit(corpus, labeled, unlabeled, config.validation_fraction,
                                 config.test_fraction, fx.seed);
  auto view = TrainingLabelView(corpus, fx.instances, split);
  auto gold = GoldLabels(corpus, fx.instances);
  TrainingInputs in;
  in.matrix = &fx.matrix;
  in.features = fx.features;
  in.labels = view;
  in.split = &split;
  in.classes = corpus.classes;
  in.lfs = fx.data.lfs;

  std::vector<ClassId> test_gold;
  for (auto i : split.test) test_gold.push_back(*gold[i]);
  auto test_f1 = [&](const TrainConfig &cfg) {
    TrainedModel m = Train(in, cfg);
    std::vector<ClassId> pred;
    for (auto i : split.test) pred.push_back(Predict(m.phi, fx.features[i]));
    return Score(test_gold, pred, corpus.classes).macro_f1;
  };

  SweepCell cell;
  cell.labeled = labeled;
  cell.unlabeled = unlabeled;
  cell.seed = fx.seed;
  cell.labeled_docs = split.labeled_docs.size();
  cell.unlabeled_docs = split.unlabeled_docs.size();
  TrainConfig joint = config.train;
  joint.seed = fx.seed;
  TrainConfig base = joint;
  base.SetSupervisedOnly();
  cell.baseline_f1 = test_f1(base);
  cell.joint_f1 = test_f1(joint);
  return cell;
}

SweepResult RunSweep(const SynthSpec &spec, const SweepConfig &config,
                     const std::function<void(const SweepCell &)> &progress) {
  if (config.labeled_fractions.empty() || config.unlabeled_fractions.empty() ||
      config.seeds.empty())
    throw ValidationError("sweep grid is empty");
  std::vector<SweepFixture> fixtures;
  for (auto s : config.seeds) fixtures.push_back(SweepFixture::Make(spec, s, config.train));
  SweepResult r;
  for (double l : config.labeled_fractions)
    for (double u : config.unlabeled_fractions)
      for (const auto &fx : fixtures) {
        r.cells.push_back(RunCell(fx, l, u, config));
        if (progress) progress(r.cells.back());
      }
  return r;
}

std::string SweepJson(const SweepResult &result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto &c : result.cells)
    cells.push_back({{"labeled", c.labeled},
                     {"unlabeled", c.unlabeled},
                     {"seed", c.seed},
                     {"labeled_docs", c.labeled_docs},
                     {"unlabeled_docs", c.unlabeled_docs},
                     {"baseline_f1", c.baseline_f1},
                     {"joint_f1", c.joint_f1}});
  return nlohmann::json{{"cells", cells}}.dump(2) + "\n";
}

std::string FormatSweepTable(const SweepResult &result) {
  std::vector<double> ls, us;
  for (const auto &c : result.cells) {
    if (std::find(ls.begin(), ls.end(), c.labeled) == ls.end()) ls.push_back(c.labeled);
    if (std::find(us.begin(), us.end(), c.unlabeled) == us.end()) us.push_back(c.unlabeled);
  }
  std::ostringstream o;
  char line[160];
  for (double u : us) {
    std::snprintf(line, sizeof line, "U = %g%%\n", 100 * u);
    o << line;
    o << "L%       supervised  joint    delta    joint wins\n";
    for (double l : ls) {
      double b = 0, j = 0;
      std::size_t n = 0, wins = 0;
      for (const auto &c : result.cells)
        if (c.labeled == l && c.unlabeled == u) {
          b += c.baseline_f1;
          j += c.joint_f1;
          wins += c.joint_f1 > c.baseline_f1;
          ++n;
        }
      if (n == 0) continue;
      b /= double(n);
      j /= double(n);
      std::snprintf(line, sizeof line, "%-8g %-11.4f %-8.4f %+-8.4f %zu/%zu\n", 100 * l, b, j,
                    j - b, wins, n);
      o << line;
    }
  }
  return o.str();
}

}  // namespace docws
