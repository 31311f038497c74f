#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "crossmask/mask.h"
#include "doctest.h"
#include "synthetic.h"
#include "test_util.h"

using namespace crossmask;
using crossmask::testing::data_path;
using crossmask::testing::make_sentence;
using crossmask::testing::plain_sentence;
using crossmask::testing::random_sentence;
using crossmask::testing::Sentence;
using crossmask::testing::small_vocab;
using crossmask::testing::Word;

namespace {

constexpr size_t kDraws = 100000;

StrategyConfig config(StrategyKind kind, double p = 0.15) {
  StrategyConfig cfg;
  cfg.kind = kind;
  cfg.mask_probability = p;
  return cfg;
}

// Selection frequency of each word index over kDraws global seeds.
std::map<size_t, double> selection_frequencies(const Sentence& s, StrategyConfig cfg) {
  std::map<size_t, size_t> counts;
  for (size_t t = 0; t < kDraws; ++t) {
    cfg.seed = t;
    for (size_t w : plan_selection(s.ts, s.annotation, cfg).selected_words) ++counts[w];
  }
  std::map<size_t, double> freq;
  for (auto [w, c] : counts) freq[w] = static_cast<double>(c) / kDraws;
  return freq;
}

const VocabTable& vocab() {
  static const VocabTable v = small_vocab({"a", "tiger", "is", "eat", "##ing", "the", "carrot"});
  return v;
}

}  // namespace

TEST_SUITE("mask") {

TEST_CASE("derive_seed golden values") {
  std::ifstream in(data_path("derive_seed_golden.json"));
  auto golden = nlohmann::json::parse(in);
  REQUIRE(golden.size() == 6);
  for (const auto& g : golden) {
    const uint64_t seed = std::stoull(g["seed"].get<std::string>());
    const uint64_t expected = std::stoull(g["derived"].get<std::string>());
    CHECK(derive_seed(seed, g["id"].get<std::string>()) == expected);
  }
  CHECK(derive_seed(0, "") == 17665956581633026203ULL);
}

TEST_CASE("derive_seed is deterministic and separates ids") {
  CHECK(derive_seed(7, "s1") == derive_seed(7, "s1"));
  std::set<uint64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(derive_seed(42, "sentence-" + std::to_string(i)));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(42, "abc") != derive_seed(42, "abd"));
  CHECK(derive_seed(1, "abc") != derive_seed(2, "abc"));
}

TEST_CASE("SeededRng ranges") {
  SeededRng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(rng.below(7) < 7);
    CHECK(rng.below(1) == 0);
  }
}

TEST_CASE("uniform extremes") {
  auto s = plain_sentence("x", 9);
  auto cfg = config(StrategyKind::kUniform, 0.0);
  for (uint64_t seed = 0; seed < 200; ++seed) {
    cfg.seed = seed;
    CHECK(plan_uniform(s.ts, s.annotation, cfg).selected_words.empty());
  }
  cfg.mask_probability = 1.0;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    cfg.seed = seed;
    CHECK(plan_uniform(s.ts, s.annotation, cfg).selected_words ==
          std::vector<size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  }
}

TEST_CASE("uniform zero-mask rate follows the binomial") {
  auto cfg = config(StrategyKind::kUniform);
  size_t empty = 0;
  for (size_t t = 0; t < kDraws; ++t) {
    auto s = plain_sentence("u" + std::to_string(t), 7);
    if (plan_uniform(s.ts, s.annotation, cfg).selected_words.empty()) ++empty;
  }
  const double rate = static_cast<double>(empty) / kDraws;
  CHECK(std::fabs(rate - std::pow(0.85, 7)) <= 0.01);
}

TEST_CASE("class restricted") {
  auto s = make_sentence("c", {{"the", 1, true}, {"tiger"}, {"is", 1, true}, {"eating", 2},
                               {".", 1, false, true}});
  auto cfg = config(StrategyKind::kClassRestricted, 0.5);
  cfg.restricted_class = RestrictedClass::kStopwordPunct;
  for (uint64_t seed = 0; seed < 2000; ++seed) {
    cfg.seed = seed;
    for (size_t w : plan_class_restricted(s.ts, s.annotation, cfg).selected_words) {
      CHECK((s.annotation.tokens[w].stop.stopword || s.annotation.tokens[w].stop.punct));
    }
  }

  auto content_only = make_sentence("d", {{"tiger"}, {"carrot"}});
  for (uint64_t seed = 0; seed < 2000; ++seed) {
    cfg.seed = seed;
    CHECK(plan_class_restricted(content_only.ts, content_only.annotation, cfg)
              .selected_words.empty());
  }

  cfg.restricted_class = RestrictedClass::kContent;
  cfg.mask_probability = 0.15;
  auto freq = selection_frequencies(s, cfg);
  CHECK(freq.count(0) == 0);
  CHECK(freq.count(2) == 0);
  CHECK(freq.count(4) == 0);
  CHECK(std::fabs(freq[1] - 0.15) <= 0.01);
  CHECK(std::fabs(freq[3] - 0.15) <= 0.01);
}

TEST_CASE("one word object: uniform over objects") {
  auto s = make_sentence("o", {{"a", 1, true}, {"tiger", 1, false, false, true}, {"is", 1, true},
                               {"eating"}, {"the", 1, true}, {"carrot", 1, false, false, true}});
  auto freq = selection_frequencies(s, config(StrategyKind::kOneWordObject));
  CHECK(freq.size() == 2);
  CHECK(std::fabs(freq[1] - 0.5) <= 0.01);
  CHECK(std::fabs(freq[5] - 0.5) <= 0.01);
  CHECK_FALSE(plan_one_word(s.ts, s.annotation, config(StrategyKind::kOneWordObject)).fallback_used);
}

TEST_CASE("one word object falls back without objects") {
  auto s = plain_sentence("f", 4);
  auto plan = plan_one_word(s.ts, s.annotation, config(StrategyKind::kOneWordObject));
  CHECK(plan.selected_words.size() == 1);
  CHECK(plan.fallback_used);
  for (auto kind : {StrategyKind::kOneWordRandom, StrategyKind::kOneWordContent80,
                    StrategyKind::kOneWordTopConcrete}) {
    CHECK_FALSE(plan_one_word(s.ts, s.annotation, config(kind)).fallback_used);
  }
}

TEST_CASE("single-word sentence yields that word under every selector") {
  auto s = make_sentence("one", {{"tiger", 2, false, false, true, 5.0}});
  for (auto kind : {StrategyKind::kOneWordRandom, StrategyKind::kOneWordObject,
                    StrategyKind::kOneWordContent80, StrategyKind::kOneWordTopConcrete}) {
    for (uint64_t seed = 0; seed < 50; ++seed) {
      auto cfg = config(kind);
      cfg.seed = seed;
      CHECK(plan_one_word(s.ts, s.annotation, cfg).selected_words == std::vector<size_t>{0});
    }
  }
}

TEST_CASE("one word random is uniform over words") {
  auto s = plain_sentence("r", 5);
  auto freq = selection_frequencies(s, config(StrategyKind::kOneWordRandom));
  for (size_t w = 0; w < 5; ++w) CHECK(std::fabs(freq[w] - 0.2) <= 0.01);
}

TEST_CASE("content80 split") {
  auto s = make_sentence("c80", {{"a", 1, true}, {"tiger"}, {"is", 1, true}, {"eating"},
                                 {".", 1, false, true}});
  auto freq = selection_frequencies(s, config(StrategyKind::kOneWordContent80));
  const double content = freq[1] + freq[3];
  CHECK(std::fabs(content - 0.8) <= 0.01);
  CHECK(std::fabs((freq[0] + freq[2] + freq[4]) - 0.2) <= 0.01);
  CHECK(std::fabs(freq[1] - 0.4) <= 0.01);

  auto all_content = plain_sentence("ac", 3);
  auto cfg = config(StrategyKind::kOneWordContent80);
  for (uint64_t seed = 0; seed < 500; ++seed) {
    cfg.seed = seed;
    CHECK(plan_one_word(all_content.ts, all_content.annotation, cfg).selected_words.size() == 1);
  }
}

TEST_CASE("top concrete rank weights") {
  auto s = make_sentence("tc", {{"the", 1, true, false, false, 1.4},
                                {"tiger", 1, false, false, true, 5.0},
                                {"is", 1, true},
                                {"eating", 2, false, false, false, 4.4},
                                {"carrot", 1, false, false, true, 4.9}});
  auto freq = selection_frequencies(s, config(StrategyKind::kOneWordTopConcrete));
  CHECK(freq.count(0) == 0);
  CHECK(freq.count(2) == 0);
  CHECK(std::fabs(freq[1] - 0.55) <= 0.01);
  CHECK(std::fabs(freq[4] - 0.30) <= 0.01);
  CHECK(std::fabs(freq[3] - 0.15) <= 0.01);
}

TEST_CASE("top concrete renormalizes with two scored words") {
  auto s = make_sentence("tc2", {{"tiger", 1, false, false, true, 5.0}, {"is", 1, true},
                                 {"carrot", 1, false, false, true, 4.9}});
  auto freq = selection_frequencies(s, config(StrategyKind::kOneWordTopConcrete));
  CHECK(freq.count(1) == 0);
  CHECK(std::fabs(freq[0] - 0.55 / 0.85) <= 0.01);
  CHECK(std::fabs(freq[2] - 0.30 / 0.85) <= 0.01);
}

TEST_CASE("top concrete ties favour the earlier word") {
  auto s = make_sentence("tie", {{"a", 1, false, false, false, 3.0},
                                 {"b", 1, false, false, false, 3.0},
                                 {"c", 1, false, false, false, 3.0},
                                 {"d", 1, false, false, false, 3.0}});
  auto freq = selection_frequencies(s, config(StrategyKind::kOneWordTopConcrete));
  CHECK(freq.count(3) == 0);
  CHECK(std::fabs(freq[0] - 0.55) <= 0.01);
  CHECK(std::fabs(freq[1] - 0.30) <= 0.01);
  CHECK(std::fabs(freq[2] - 0.15) <= 0.01);
}

TEST_CASE("top concrete without scores falls back to random") {
  auto s = plain_sentence("ns", 4);
  auto freq = selection_frequencies(s, config(StrategyKind::kOneWordTopConcrete));
  for (size_t w = 0; w < 4; ++w) CHECK(std::fabs(freq[w] - 0.25) <= 0.01);
}

TEST_CASE("ablations") {
  auto no_zero = config(StrategyKind::kAblationNoZero);
  auto no_multi = config(StrategyKind::kAblationNoMulti);
  size_t multi_empty = 0;
  for (size_t t = 0; t < kDraws; ++t) {
    auto s = plain_sentence("ab" + std::to_string(t), 7);
    auto z = plan_ablation(s.ts, s.annotation, no_zero);
    CHECK_FALSE(z.selected_words.empty());
    auto m = plan_ablation(s.ts, s.annotation, no_multi);
    CHECK(m.selected_words.size() <= 1);
    if (m.selected_words.empty()) ++multi_empty;
  }
  CHECK(std::fabs(static_cast<double>(multi_empty) / kDraws - std::pow(0.85, 7)) <= 0.01);

  // Multi-selections are thinned uniformly: with p = 1 every word is kept
  // with probability 1/n.
  auto s = plain_sentence("thin", 4);
  auto freq = selection_frequencies(s, config(StrategyKind::kAblationNoMulti, 1.0));
  for (size_t w = 0; w < 4; ++w) CHECK(std::fabs(freq[w] - 0.25) <= 0.01);
  // With p = 0 no_zero always picks a single uniform word.
  freq = selection_frequencies(s, config(StrategyKind::kAblationNoZero, 0.0));
  for (size_t w = 0; w < 4; ++w) CHECK(std::fabs(freq[w] - 0.25) <= 0.01);
}

TEST_CASE("planner contract errors") {
  auto s = plain_sentence("e", 3);
  CHECK_THROWS_AS(plan_uniform(s.ts, s.annotation, config(StrategyKind::kOneWordRandom)),
                  ConfigError);
  CHECK_THROWS_AS(plan_one_word(s.ts, s.annotation, config(StrategyKind::kUniform)), ConfigError);
  CHECK_THROWS_AS(plan_ablation(s.ts, s.annotation, config(StrategyKind::kUniform)), ConfigError);
  CHECK_THROWS_AS(
      plan_class_restricted(s.ts, s.annotation, config(StrategyKind::kClassRestricted)),
      ConfigError);

  auto empty = make_sentence("empty", {});
  CHECK_THROWS_AS(plan_one_word(empty.ts, empty.annotation, config(StrategyKind::kOneWordRandom)),
                  DataError);
  CHECK_THROWS_AS(plan_ablation(empty.ts, empty.annotation, config(StrategyKind::kAblationNoZero)),
                  DataError);
  CHECK(plan_uniform(empty.ts, empty.annotation, config(StrategyKind::kUniform))
            .selected_words.empty());

  auto misaligned = s;
  misaligned.annotation.tokens.pop_back();
  CHECK_THROWS_AS(plan_uniform(misaligned.ts, misaligned.annotation, config(StrategyKind::kUniform)),
                  DataError);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(ReplacementPolicy::parse("0.5:0.5:0.5"), ConfigError);
  CHECK_THROWS_AS(ReplacementPolicy::parse("0.8:0.2"), ConfigError);
  CHECK_THROWS_AS(ReplacementPolicy::parse("a:b:c"), ConfigError);
  CHECK_THROWS_AS(ReplacementPolicy::parse("1.2:-0.1:-0.1"), ConfigError);
  auto p = ReplacementPolicy::parse("0.7:0.2:0.1");
  CHECK(p.mask == 0.7);
  CHECK(p.random == 0.2);
  CHECK(p.keep == 0.1);

  StrategyConfig cfg;
  cfg.mask_probability = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.mask_probability = 0.15;
  CHECK_NOTHROW(cfg.validate());
  cfg.kind = StrategyKind::kClassRestricted;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  CHECK(parse_strategy("one_word_top_concrete") == StrategyKind::kOneWordTopConcrete);
  CHECK(to_string(StrategyKind::kAblationNoMulti) == "ablation_no_multi");
  CHECK_THROWS_AS(parse_strategy("two_words"), ConfigError);
  CHECK_THROWS_AS(parse_restricted_class("objects"), ConfigError);
}

TEST_CASE("replacement policy extremes") {
  std::mt19937_64 gen(17);
  auto cfg = config(StrategyKind::kUniform, 0.5);
  for (int i = 0; i < 500; ++i) {
    auto s = random_sentence("p" + std::to_string(i), gen);
    cfg.policy = {1.0, 0.0, 0.0};
    for (const auto& a : make_plan(s.ts, s.annotation, vocab(), cfg).actions) {
      CHECK(a.action == PieceAction::kMaskToken);
      CHECK(a.token == "[MASK]");
    }
    cfg.policy = {0.0, 0.0, 1.0};
    for (const auto& a : make_plan(s.ts, s.annotation, vocab(), cfg).actions) {
      CHECK(a.action == PieceAction::kKeepOriginal);
      CHECK(a.token == s.ts.pieces[a.position]);
    }
    cfg.policy = {0.0, 1.0, 0.0};
    for (const auto& a : make_plan(s.ts, s.annotation, vocab(), cfg).actions) {
      CHECK(a.action == PieceAction::kRandomToken);
      CHECK(vocab().contains(a.token));
      CHECK(a.token.front() != '[');
    }
  }
}

TEST_CASE("replacement policy frequencies, one action per word") {
  auto s = make_sentence("rp", {{"eating", 3}});
  auto cfg = config(StrategyKind::kOneWordRandom);
  std::map<PieceAction, size_t> counts;
  for (size_t t = 0; t < kDraws; ++t) {
    cfg.seed = t;
    auto plan = make_plan(s.ts, s.annotation, vocab(), cfg);
    REQUIRE(plan.actions.size() == 3);
    CHECK(plan.actions[1].action == plan.actions[0].action);
    CHECK(plan.actions[2].action == plan.actions[0].action);
    ++counts[plan.actions[0].action];
  }
  CHECK(std::fabs(counts[PieceAction::kMaskToken] / double(kDraws) - 0.8) <= 0.01);
  CHECK(std::fabs(counts[PieceAction::kRandomToken] / double(kDraws) - 0.1) <= 0.01);
  CHECK(std::fabs(counts[PieceAction::kKeepOriginal] / double(kDraws) - 0.1) <= 0.01);
}

TEST_CASE("whole-word property on random sentences") {
  std::mt19937_64 gen(23);
  const StrategyKind kinds[] = {StrategyKind::kUniform,          StrategyKind::kOneWordRandom,
                                StrategyKind::kOneWordObject,    StrategyKind::kOneWordContent80,
                                StrategyKind::kOneWordTopConcrete, StrategyKind::kAblationNoZero,
                                StrategyKind::kAblationNoMulti};
  for (int i = 0; i < 2000; ++i) {
    auto s = random_sentence("ww" + std::to_string(i), gen);
    auto cfg = config(kinds[i % 7], 0.3);
    auto plan = make_plan(s.ts, s.annotation, vocab(), cfg);
    std::set<size_t> acted;
    for (const auto& a : plan.actions) acted.insert(a.position);
    for (size_t w = 0; w < s.ts.words.size(); ++w) {
      size_t n = 0;
      for (size_t p = s.ts.spans[w].begin; p < s.ts.spans[w].end; ++p) n += acted.count(p);
      CHECK((n == 0 || n == s.ts.spans[w].width()));
      const bool selected = std::binary_search(plan.selected_words.begin(),
                                               plan.selected_words.end(), w);
      CHECK(selected == (n > 0));
    }
  }
}

TEST_CASE("render the eating example") {
  auto ts = wordpiece_tokenize("A tiger is eating", vocab());
  MaskPlan plan;
  plan.sentence_id = "eat";
  plan.selected_words = {3};
  auto cfg = config(StrategyKind::kUniform);
  cfg.policy = {1.0, 0.0, 0.0};
  plan = apply_replacement_policy(plan, ts, vocab(), cfg);
  auto r = render(ts, plan);
  CHECK(r.text() == "a tiger is [MASK] [MASK]");
  CHECK(r.labels == std::vector<MaskLabel>{{3, "eat"}, {4, "##ing"}});

  MaskPlan empty;
  auto same = render(ts, empty);
  CHECK(same.pieces == ts.pieces);
  CHECK(same.labels.empty());
}

TEST_CASE("random replacement keeps gold labels") {
  auto ts = wordpiece_tokenize("A tiger is eating", vocab());
  MaskPlan plan;
  plan.selected_words = {1, 3};
  plan.actions = {{1, PieceAction::kRandomToken, "carrot"},
                  {3, PieceAction::kRandomToken, "the"},
                  {4, PieceAction::kRandomToken, "a"}};
  auto r = render(ts, plan);
  CHECK(r.pieces == std::vector<std::string>{"a", "carrot", "is", "the", "a"});
  CHECK(r.labels == std::vector<MaskLabel>{{1, "tiger"}, {3, "eat"}, {4, "##ing"}});
}

TEST_CASE("plans are independent of the surrounding corpus") {
  std::mt19937_64 gen(5);
  std::vector<Sentence> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back(random_sentence("id" + std::to_string(i), gen));
  auto cfg = config(StrategyKind::kUniform);
  cfg.seed = 99;
  std::map<std::string, MaskPlan> forward;
  for (const auto& s : corpus) forward[s.annotation.id] = make_plan(s.ts, s.annotation, vocab(), cfg);
  for (auto it = corpus.rbegin(); it != corpus.rend(); ++it) {
    CHECK(make_plan(it->ts, it->annotation, vocab(), cfg) == forward[it->annotation.id]);
  }
}

TEST_CASE("plans.jsonl record layout") {
  auto ts = wordpiece_tokenize("A tiger is eating", vocab());
  MaskPlan plan;
  plan.sentence_id = "s1";
  plan.selected_words = {3};
  plan.actions = {{3, PieceAction::kMaskToken, "[MASK]"}, {4, PieceAction::kMaskToken, "[MASK]"}};
  auto j = plan_to_json(plan, ts);
  CHECK(j.dump() ==
        R"({"actions":[{"action":"MASK","gold":"eat","pos":3},{"action":"MASK","gold":"##ing","pos":4}],)"
        R"("fallback_used":false,"id":"s1","masked_text":"a tiger is [MASK] [MASK]",)"
        R"("pieces":["a","tiger","is","eat","##ing"],"selected_words":[3]})");
}

}  // TEST_SUITE
