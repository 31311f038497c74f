#include "crossmask/mask.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "crossmask/text.h"

namespace crossmask {

namespace {

constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;
// Separates the replacement stream from the selection stream of a sentence.
constexpr uint64_t kReplacementStream = 0x5265706c61636521ULL;

uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

struct NamedKind {
  std::string_view name;
  StrategyKind kind;
};

constexpr NamedKind kKinds[] = {
    {"uniform", StrategyKind::kUniform},
    {"class_restricted", StrategyKind::kClassRestricted},
    {"one_word_random", StrategyKind::kOneWordRandom},
    {"one_word_object", StrategyKind::kOneWordObject},
    {"one_word_content80", StrategyKind::kOneWordContent80},
    {"one_word_top_concrete", StrategyKind::kOneWordTopConcrete},
    {"ablation_no_zero", StrategyKind::kAblationNoZero},
    {"ablation_no_multi", StrategyKind::kAblationNoMulti},
};

void check_alignment(const TokenizedSentence& ts, const SentenceAnnotation& a) {
  if (ts.words.size() != a.tokens.size() || ts.spans.size() != ts.words.size()) {
    throw DataError("sentence \"" + a.id + "\": tokenization has " +
                    std::to_string(ts.words.size()) + " words but annotation has " +
                    std::to_string(a.tokens.size()));
  }
}

void require_words(const SentenceAnnotation& a) {
  if (a.tokens.empty()) throw DataError("sentence \"" + a.id + "\" has no words to mask");
}

MaskPlan start_plan(const SentenceAnnotation& a, const StrategyConfig& cfg) {
  MaskPlan plan;
  plan.sentence_id = a.id;
  plan.seed = derive_seed(cfg.seed, a.id);
  return plan;
}

bool in_class(const TokenAnnotation& t, RestrictedClass c) {
  return c == RestrictedClass::kContent ? t.stop.content : !t.stop.content;
}

std::vector<size_t> bernoulli_select(size_t n, double p, SeededRng& rng) {
  std::vector<size_t> out;
  for (size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(p)) out.push_back(i);
  }
  return out;
}

size_t pick(const std::vector<size_t>& pool, SeededRng& rng) { return pool[rng.below(pool.size())]; }

// Up to three scored words, most concrete first, earlier position on ties.
std::vector<size_t> top_concrete(const SentenceAnnotation& a) {
  std::vector<size_t> scored;
  for (size_t i = 0; i < a.tokens.size(); ++i) {
    if (a.tokens[i].concreteness) scored.push_back(i);
  }
  std::stable_sort(scored.begin(), scored.end(), [&](size_t x, size_t y) {
    return *a.tokens[x].concreteness > *a.tokens[y].concreteness;
  });
  if (scored.size() > 3) scored.resize(3);
  return scored;
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  throw ConfigError("unknown strategy \"" + std::string(name) + "\"");
}

bool is_one_word(StrategyKind kind) {
  return kind == StrategyKind::kOneWordRandom || kind == StrategyKind::kOneWordObject ||
         kind == StrategyKind::kOneWordContent80 || kind == StrategyKind::kOneWordTopConcrete;
}

std::string_view to_string(RestrictedClass c) {
  return c == RestrictedClass::kContent ? "content" : "stopword_punct";
}

RestrictedClass parse_restricted_class(std::string_view name) {
  if (name == "content") return RestrictedClass::kContent;
  if (name == "stopword_punct") return RestrictedClass::kStopwordPunct;
  throw ConfigError("unknown class \"" + std::string(name) +
                    "\" (expected stopword_punct or content)");
}

void ReplacementPolicy::validate() const {
  for (double v : {mask, random, keep}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("replacement proportions must lie in [0, 1]");
  }
  if (std::fabs(mask + random + keep - 1.0) > 1e-9) {
    throw ConfigError("replacement proportions must sum to 1");
  }
}

ReplacementPolicy ReplacementPolicy::parse(std::string_view spec) {
  const auto parts = text::split(spec, ':');
  if (parts.size() != 3) throw ConfigError("policy must have the form m:r:k");
  double v[3];
  for (size_t i = 0; i < 3; ++i) {
    const std::string_view s = text::trim(parts[i]);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v[i]);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("policy component \"" + std::string(s) + "\" is not a number");
    }
  }
  ReplacementPolicy p{v[0], v[1], v[2]};
  p.validate();
  return p;
}

void StrategyConfig::validate() const {
  if (!(mask_probability >= 0.0 && mask_probability <= 1.0)) {
    throw ConfigError("mask probability must lie in [0, 1]");
  }
  policy.validate();
  if (kind == StrategyKind::kClassRestricted && !restricted_class) {
    throw ConfigError("class_restricted strategy needs a restricted class");
  }
}

uint64_t derive_seed(uint64_t global_seed, std::string_view sentence_id) {
  uint64_t h = kFnvOffset;
  for (char c : sentence_id) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return mix64(mix64(global_seed) ^ h);
}

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

size_t SeededRng::below(size_t n) {
  const uint64_t bound = n;
  const uint64_t threshold = (0 - bound) % bound;
  uint64_t x;
  do {
    x = engine_();
  } while (x < threshold);
  return static_cast<size_t>(x % bound);
}

std::string_view to_string(PieceAction action) {
  switch (action) {
    case PieceAction::kMaskToken:
      return "MASK";
    case PieceAction::kRandomToken:
      return "RANDOM";
    case PieceAction::kKeepOriginal:
      break;
  }
  return "KEEP";
}

MaskPlan plan_uniform(const TokenizedSentence& ts, const SentenceAnnotation& a,
                      const StrategyConfig& cfg) {
  if (cfg.kind != StrategyKind::kUniform) throw ConfigError("plan_uniform needs kind uniform");
  check_alignment(ts, a);
  MaskPlan plan = start_plan(a, cfg);
  SeededRng rng(plan.seed);
  plan.selected_words = bernoulli_select(a.tokens.size(), cfg.mask_probability, rng);
  return plan;
}

MaskPlan plan_class_restricted(const TokenizedSentence& ts, const SentenceAnnotation& a,
                               const StrategyConfig& cfg) {
  if (cfg.kind != StrategyKind::kClassRestricted || !cfg.restricted_class) {
    throw ConfigError("plan_class_restricted needs kind class_restricted and a class");
  }
  check_alignment(ts, a);
  MaskPlan plan = start_plan(a, cfg);
  SeededRng rng(plan.seed);
  for (size_t i = 0; i < a.tokens.size(); ++i) {
    if (in_class(a.tokens[i], *cfg.restricted_class) && rng.bernoulli(cfg.mask_probability)) {
      plan.selected_words.push_back(i);
    }
  }
  return plan;
}

MaskPlan plan_one_word(const TokenizedSentence& ts, const SentenceAnnotation& a,
                       const StrategyConfig& cfg) {
  if (!is_one_word(cfg.kind)) throw ConfigError("plan_one_word needs a one_word strategy");
  check_alignment(ts, a);
  require_words(a);
  MaskPlan plan = start_plan(a, cfg);
  SeededRng rng(plan.seed);
  const size_t n = a.tokens.size();
  size_t chosen = 0;

  switch (cfg.kind) {
    case StrategyKind::kOneWordRandom:
      chosen = rng.below(n);
      break;
    case StrategyKind::kOneWordObject: {
      std::vector<size_t> objects;
      for (size_t i = 0; i < n; ++i) {
        if (a.tokens[i].classes.object) objects.push_back(i);
      }
      if (objects.empty()) {
        plan.fallback_used = true;
        chosen = rng.below(n);
      } else {
        chosen = pick(objects, rng);
      }
      break;
    }
    case StrategyKind::kOneWordContent80: {
      std::vector<size_t> content, function;
      for (size_t i = 0; i < n; ++i) (a.tokens[i].stop.content ? content : function).push_back(i);
      const bool want_content = rng.uniform() < kContentProbability;
      const auto& primary = want_content ? content : function;
      const auto& other = want_content ? function : content;
      chosen = pick(primary.empty() ? other : primary, rng);
      break;
    }
    case StrategyKind::kOneWordTopConcrete: {
      const auto top = top_concrete(a);
      if (top.empty()) {
        chosen = rng.below(n);
        break;
      }
      double total = 0.0;
      for (size_t r = 0; r < top.size(); ++r) total += kTopConcreteWeights[r];
      const double u = rng.uniform() * total;
      double acc = 0.0;
      chosen = top.back();
      for (size_t r = 0; r < top.size(); ++r) {
        acc += kTopConcreteWeights[r];
        if (u < acc) {
          chosen = top[r];
          break;
        }
      }
      break;
    }
    default:
      break;
  }
  plan.selected_words = {chosen};
  return plan;
}

MaskPlan plan_ablation(const TokenizedSentence& ts, const SentenceAnnotation& a,
                       const StrategyConfig& cfg) {
  if (cfg.kind != StrategyKind::kAblationNoZero && cfg.kind != StrategyKind::kAblationNoMulti) {
    throw ConfigError("plan_ablation needs an ablation strategy");
  }
  check_alignment(ts, a);
  require_words(a);
  MaskPlan plan = start_plan(a, cfg);
  SeededRng rng(plan.seed);
  const size_t n = a.tokens.size();
  auto selected = bernoulli_select(n, cfg.mask_probability, rng);
  if (cfg.kind == StrategyKind::kAblationNoZero) {
    if (selected.empty()) {
      selected = {rng.below(n)};
    }
  } else if (selected.size() > 1) {
    selected = {pick(selected, rng)};
  }
  plan.selected_words = std::move(selected);
  return plan;
}

MaskPlan plan_selection(const TokenizedSentence& ts, const SentenceAnnotation& a,
                        const StrategyConfig& cfg) {
  switch (cfg.kind) {
    case StrategyKind::kUniform:
      return plan_uniform(ts, a, cfg);
    case StrategyKind::kClassRestricted:
      return plan_class_restricted(ts, a, cfg);
    case StrategyKind::kAblationNoZero:
    case StrategyKind::kAblationNoMulti:
      return plan_ablation(ts, a, cfg);
    default:
      return plan_one_word(ts, a, cfg);
  }
}

MaskPlan apply_replacement_policy(MaskPlan plan, const TokenizedSentence& ts,
                                  const VocabTable& vocab, const StrategyConfig& cfg) {
  cfg.policy.validate();
  SeededRng rng(mix64(plan.seed ^ kReplacementStream));
  const auto& candidates = vocab.replacement_candidates();
  plan.actions.clear();
  for (size_t w : plan.selected_words) {
    if (w >= ts.spans.size()) throw DataError("selected word index out of range");
    const double u = rng.uniform();
    PieceAction action = PieceAction::kKeepOriginal;
    if (u < cfg.policy.mask) {
      action = PieceAction::kMaskToken;
    } else if (u < cfg.policy.mask + cfg.policy.random) {
      action = PieceAction::kRandomToken;
    }
    if (action == PieceAction::kRandomToken && candidates.empty()) {
      throw DataError("vocabulary has no candidates for random replacement");
    }
    const PieceSpan span = ts.spans[w];
    for (size_t p = span.begin; p < span.end; ++p) {
      PieceAssignment a{p, action, {}};
      switch (action) {
        case PieceAction::kMaskToken:
          a.token = vocab.mask();
          break;
        case PieceAction::kRandomToken:
          a.token = vocab.token(candidates[rng.below(candidates.size())]);
          break;
        case PieceAction::kKeepOriginal:
          a.token = ts.pieces[p];
          break;
      }
      plan.actions.push_back(std::move(a));
    }
  }
  return plan;
}

MaskPlan make_plan(const TokenizedSentence& ts, const SentenceAnnotation& a,
                   const VocabTable& vocab, const StrategyConfig& cfg) {
  return apply_replacement_policy(plan_selection(ts, a, cfg), ts, vocab, cfg);
}

std::string RenderedSentence::text() const { return text::join(pieces, " "); }

RenderedSentence render(const TokenizedSentence& ts, const MaskPlan& plan) {
  RenderedSentence out;
  out.pieces = ts.pieces;
  for (const auto& a : plan.actions) {
    if (a.position >= out.pieces.size()) throw DataError("plan action position out of range");
    out.pieces[a.position] = a.token;
    out.labels.push_back({a.position, ts.pieces[a.position]});
  }
  return out;
}

nlohmann::json plan_to_json(const MaskPlan& plan, const TokenizedSentence& ts) {
  const RenderedSentence rendered = render(ts, plan);
  nlohmann::json actions = nlohmann::json::array();
  for (size_t i = 0; i < plan.actions.size(); ++i) {
    const auto& a = plan.actions[i];
    actions.push_back({{"pos", a.position},
                       {"action", std::string(to_string(a.action))},
                       {"gold", rendered.labels[i].gold}});
  }
  nlohmann::json j;
  j["id"] = plan.sentence_id;
  j["selected_words"] = plan.selected_words;
  j["fallback_used"] = plan.fallback_used;
  j["pieces"] = ts.pieces;
  j["actions"] = std::move(actions);
  j["masked_text"] = rendered.text();
  return j;
}

}  // namespace crossmask
