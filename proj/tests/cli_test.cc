#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "crossmask/cli.h"
#include "doctest.h"
#include "test_util.h"

using namespace crossmask;
using crossmask::testing::data_path;
using crossmask::testing::read_file;
using crossmask::testing::scratch_dir;
using crossmask::testing::write_file;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> annotate_args(const std::string& output) {
  return {"-o",
          output,
          "annotate",
          "-i",
          data_path("detect_captions.jsonl"),
          "--scene-graphs",
          data_path("detect_graphs.jsonl"),
          "--objects",
          data_path("objects.txt"),
          "--attributes",
          data_path("attributes.txt"),
          "--relationships",
          data_path("relationships.txt"),
          "--concreteness",
          data_path("concreteness.tsv")};
}

// Compares against tests/data/golden/<name>; CROSSMASK_UPDATE_GOLDEN=1
// rewrites the golden file instead.
void check_golden(const std::string& name, const std::string& actual) {
  const std::string path = data_path("golden/" + name);
  if (const char* update = std::getenv("CROSSMASK_UPDATE_GOLDEN"); update && *update == '1') {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    write_file(path, actual);
  }
  INFO("golden file " << path);
  REQUIRE(std::filesystem::exists(path));
  CHECK(read_file(path) == actual);
}

nlohmann::json error_of(const std::string& err) {
  std::istringstream in(err);
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_object() && j.contains("error")) return j["error"];
  }
  return nullptr;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("annotate, mask and stats pipeline matches golden outputs") {
  auto dir = scratch_dir("cli_pipeline");
  const std::string annotations = (dir / "annotations.jsonl").string();
  auto r = cli(annotate_args(annotations));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.err.find(R"({"summary":{"command":"annotate","records":22,"skipped":0}})") !=
        std::string::npos);
  check_golden("annotations.jsonl", read_file(annotations));

  const std::string plans = (dir / "plans.jsonl").string();
  r = cli({"-o", plans, "mask", "--captions", data_path("detect_captions.jsonl"), "--annotations",
           annotations, "--vocab", data_path("vocab.txt"), "--strategy", "one_word_object",
           "--seed", "7"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  check_golden("plans.jsonl", read_file(plans));

  const std::string hist = (dir / "hist.tsv").string();
  r = cli({"stats", "--captions", data_path("detect_captions.jsonl"), "--annotations", annotations,
           "--vocab", data_path("vocab.txt"), "--seed", "7", "--trials", "50", "--piece-shares",
           "--histogram", hist});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  check_golden("stats.json", r.out);
  check_golden("histogram.tsv", read_file(hist));

  r = cli({"eval-detect", "--annotations", annotations});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("objects\t24\t26\t29\t93\t") != std::string::npos);
  CHECK(r.out.find("relationships\t14\t17\t14\t93\t") != std::string::npos);
}

TEST_CASE("mask output is byte-identical across runs and parallelism") {
  auto dir = scratch_dir("cli_determinism");
  // 5000 captions: several batches at -j 1, one at -j 16.
  std::string captions, annotations;
  const char* words[] = {"the", "tiger", "is", "eating", "a", "carrot", "on", "red", "table", "."};
  for (int i = 0; i < 5000; ++i) {
    std::string text;
    for (int w = 0; w < 3 + i % 9; ++w) {
      if (w) text += ' ';
      text += words[(i * 7 + w * 3) % 10];
    }
    captions += nlohmann::json{{"id", "c" + std::to_string(i)}, {"image_id", "i"}, {"text", text}}.dump() + "\n";
  }
  const auto cap_path = write_file(dir / "captions.jsonl", captions);
  const auto ann_path = (dir / "annotations.jsonl").string();
  auto r = cli({"-o", ann_path, "annotate", "-i", cap_path, "--objects", data_path("objects.txt")});
  REQUIRE_MESSAGE(r.code == 0, r.err);

  for (const char* strategy : {"uniform", "one_word_object", "one_word_content80"}) {
    std::string reference;
    for (const char* j : {"1", "1", "4", "16"}) {
      const auto out = (dir / (std::string("plans_") + j + ".jsonl")).string();
      r = cli({"-j", j, "-o", out, "mask", "--captions", cap_path, "--annotations", ann_path,
               "--vocab", data_path("vocab.txt"), "--strategy", strategy, "--seed", "7"});
      REQUIRE_MESSAGE(r.code == 0, r.err);
      const std::string bytes = read_file(out);
      if (reference.empty()) {
        reference = bytes;
        CHECK(std::count(bytes.begin(), bytes.end(), '\n') == 5000);
      } else {
        CHECK(bytes == reference);
      }
    }
  }
}

TEST_CASE("configuration errors exit 2 with a JSON error") {
  auto r = cli({"mask", "--captions", "c", "--annotations", "a", "--vocab", data_path("vocab.txt"),
                "--policy", "0.5:0.5:0.5"});
  CHECK(r.code == 2);
  auto e = error_of(r.err);
  REQUIRE(e.is_object());
  CHECK(e["type"] == "config");

  CHECK(cli({"mask", "--bogus"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"-j", "0", "tokenize"}).code == 2);
  CHECK(cli({"mask", "--captions", "c", "--annotations", "a", "--vocab", data_path("vocab.txt"),
             "--strategy", "nope"})
            .code == 2);
  r = cli({"tokenize", "--vocab", data_path("vocab.txt")});
  CHECK(r.code == 2);
  CHECK(error_of(r.err)["type"] == "usage");
}

TEST_CASE("data errors exit 1 with source and line") {
  auto dir = scratch_dir("cli_data_errors");
  auto bad = write_file(dir / "bad.jsonl",
                        "{\"id\":\"a\",\"image_id\":\"i\",\"text\":\"x\"}\n{\"id\":\"b\"}\n");
  auto r = cli({"tokenize", "-i", bad, "--vocab", data_path("vocab.txt")});
  CHECK(r.code == 1);
  auto e = error_of(r.err);
  CHECK(e["type"] == "data");
  CHECK(e["line"] == 2);
  CHECK(e["source"] == bad);

  r = cli({"--lenient", "tokenize", "-i", bad, "--vocab", data_path("vocab.txt")});
  CHECK(r.code == 0);
  CHECK(r.err.find(R"("records":1,"skipped":1)") != std::string::npos);

  r = cli({"tokenize", "-i", (dir / "missing.jsonl").string(), "--vocab", data_path("vocab.txt")});
  CHECK(r.code == 1);
}

TEST_CASE("tokenize subcommand") {
  auto r = cli({"tokenize", "-i", data_path("captions.jsonl"), "--vocab", data_path("vocab.txt")});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  auto j = nlohmann::json::parse(line);
  CHECK(j["id"] == "s1");
  CHECK(j["pieces"] == nlohmann::json({"a", "tiger", "is", "eating", "the", "carrot"}));
  CHECK(j["spans"][5] == nlohmann::json({5, 6}));
}

TEST_CASE("config file, environment and flag precedence") {
  auto dir = scratch_dir("cli_config");
  auto config = write_file(dir / "config.json",
                           nlohmann::json{{"vocab", data_path("vocab.txt")},
                                          {"input", data_path("missing-from-config.jsonl")},
                                          {"max_chars", 3}}
                               .dump());
  // Config alone: input comes from the config and does not exist.
  auto r = cli({"--config", config, "tokenize"});
  CHECK(r.code == 1);

  // Flag beats config.
  r = cli({"--config", config, "tokenize", "-i", data_path("captions.jsonl")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"[UNK]\"") != std::string::npos);  // max_chars 3 from config

  // Environment beats config for paths.
  setenv("CROSSMASK_INPUT", data_path("captions.jsonl").c_str(), 1);
  r = cli({"--config", config, "tokenize"});
  unsetenv("CROSSMASK_INPUT");
  CHECK(r.code == 0);

  auto broken = write_file(dir / "broken.json", "{not json");
  CHECK(cli({"--config", broken, "tokenize"}).code == 2);
}

TEST_CASE("lossgap subcommand") {
  auto dir = scratch_dir("cli_lossgap");
  auto ann = write_file(dir / "a.jsonl", "");
  {
    auto r = cli(annotate_args(ann));
    REQUIRE(r.code == 0);
  }
  std::string preds;
  preds += R"({"id":"d1","word_index":1,"gold":"tiger","loss_with":0.25,"loss_without":3.96,"topk_with":["tiger"],"topk_without":["man"]})" "\n";
  preds += R"({"id":"d1","word_index":0,"gold":"a","loss_with":1.0,"loss_without":1.5,"topk_with":["a"],"topk_without":["a"]})" "\n";
  auto pred_path = write_file(dir / "p.jsonl", preds);
  const std::string tsv = (dir / "r.tsv").string();
  auto r = cli({"lossgap", "--predictions", pred_path, "--annotations", ann, "--group-by",
                "stopword", "--tsv", tsv});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["records"] == 2);
  REQUIRE(j["classes"].size() == 2);
  CHECK(j["classes"][0]["class"] == "content");
  CHECK(j["classes"][0]["mean_lossgap"] == 3.71);
  CHECK(j["classes"][1]["class"] == "stopword_punct");
  CHECK(read_file(tsv).rfind("class\t", 0) == 0);

  auto orphan = write_file(dir / "o.jsonl",
                           R"({"id":"zz","word_index":0,"gold":"a","loss_with":1,"loss_without":1,"topk_with":["a"],"topk_without":["a"]})" "\n");
  CHECK(cli({"lossgap", "--predictions", orphan, "--annotations", ann}).code == 1);
  CHECK(cli({"lossgap", "--predictions", pred_path, "--annotations", ann, "--aggregate", "median"})
            .code == 2);
}

TEST_CASE("probe subcommand") {
  auto dir = scratch_dir("cli_probe");
  auto graphs = write_file(dir / "g.jsonl",
                           R"({"image_id":"parade","objects":["motorcycle","parade","man","crowd"]})" "\n");
  auto probes = write_file(
      dir / "p.jsonl",
      R"({"image_id":"parade","prompt":"A photo of a [MASK]","predictions":["motorcycle","bathroom","parade","man","crowd"]})" "\n");
  auto r = cli({"probe", "--probes", probes, "--scene-graphs", graphs, "--k-max", "5"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("A photo of a [MASK]\t5\t0.8\t1\n") != std::string::npos);
  CHECK(cli({"probe", "--probes", probes, "--scene-graphs", graphs, "--k-max", "6"}).code == 1);
}

}  // TEST_SUITE
