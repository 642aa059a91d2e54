#include <algorithm>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "shotlocker/error.hpp"
#include "shotlocker/prompting.hpp"
#include "support/fixtures.hpp"

using namespace shotlocker;

namespace {

const std::string kInstruction = "classify an intent from an utterance";

DatasetCollection train_records() {
  return DatasetCollection(
      {
          {0, "find movie times", "search_screening_event", "en", Split::train},
          {1, "play some jazz", "play_music", "en", Split::train},
          {2, "what films are showing tonight", "search_screening_event", "en", Split::train},
          {3, "put on my workout playlist", "play_music", "en", Split::train},
      },
      {"play_music", "search_screening_event"}, kInstruction);
}

const DatasetRecord kQuery{10, "show me the cinema schedule", "search_screening_event", "en", Split::test};

ShotSet two_per_label() {
  ShotSet s;
  s.k = 2;
  s.groups = {{"play_music", {{3, 0.2}, {1, 0.7}}}, {"search_screening_event", {{2, 0.1}, {0, 0.4}}}};
  return s;
}

std::multiset<std::string> blocks_of(const std::string& text, const std::string& sep) {
  std::multiset<std::string> out;
  std::size_t start = 0;
  for (auto pos = text.find(sep); pos != std::string::npos; pos = text.find(sep, start)) {
    out.insert(text.substr(start, pos - start));
    start = pos + sep.size();
  }
  out.insert(text.substr(start));
  return out;
}

}  // namespace

TEST(BuildPrompt, GoldenString) {
  DatasetCollection records({{0, "find movie times", "search_screening_event", "en", Split::train}},
                            {"search_screening_event"}, kInstruction);
  ShotSet shots;
  shots.k = 1;
  shots.groups = {{"search_screening_event", {{0, 0.25}}}};
  auto p = build_prompt(kInstruction, shots, kQuery, PromptTemplate{}, records);
  EXPECT_EQ(p.text,
            "classify an intent from an utterance\n\n"
            "find movie times\nsearch_screening_event\n\n"
            "show me the cinema schedule\n");
  EXPECT_EQ(p.shot_ids, std::vector<RecordId>{0});
  EXPECT_EQ(p.template_id, "default");
  EXPECT_EQ(p.query_id, 10u);
  EXPECT_EQ(p.instruction, kInstruction);
}

TEST(BuildPrompt, ZeroShots) {
  auto p = build_prompt(kInstruction, ShotSet{}, kQuery, PromptTemplate{}, train_records());
  EXPECT_EQ(p.text, kInstruction + "\n\n" + kQuery.text + "\n");
  EXPECT_TRUE(p.shot_ids.empty());
  auto bare = build_prompt("", ShotSet{}, kQuery, PromptTemplate{}, train_records());
  EXPECT_EQ(bare.text, kQuery.text + "\n");
}

TEST(BuildPrompt, DefaultOrderIsLabelThenDistance) {
  auto p = build_prompt(kInstruction, two_per_label(), kQuery, PromptTemplate{}, train_records());
  EXPECT_EQ(p.shot_ids, (std::vector<RecordId>{3, 1, 2, 0}));
  EXPECT_TRUE(p.text.starts_with(kInstruction));
  PromptTemplate global;
  global.shot_order = ShotOrder::by_distance_asc_global;
  EXPECT_EQ(build_prompt(kInstruction, two_per_label(), kQuery, global, train_records()).shot_ids,
            (std::vector<RecordId>{2, 3, 0, 1}));
}

TEST(BuildPrompt, ShuffledIsDeterministicAndOnlyPermutesBlocks) {
  PromptTemplate t;
  t.shot_order = ShotOrder::shuffled;
  t.shuffle_seed = 17;
  auto a = build_prompt(kInstruction, two_per_label(), kQuery, t, train_records());
  auto b = build_prompt(kInstruction, two_per_label(), kQuery, t, train_records());
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.shot_ids, b.shot_ids);

  auto base = build_prompt(kInstruction, two_per_label(), kQuery, PromptTemplate{}, train_records());
  EXPECT_EQ(blocks_of(a.text, t.separator), blocks_of(base.text, t.separator));
  std::set<std::vector<RecordId>> orders;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    t.shuffle_seed = seed;
    auto p = build_prompt(kInstruction, two_per_label(), kQuery, t, train_records());
    EXPECT_EQ(blocks_of(p.text, t.separator), blocks_of(base.text, t.separator));
    EXPECT_EQ(p.shot_ids.size(), 4u);
    orders.insert(p.shot_ids);
  }
  EXPECT_GT(orders.size(), 1u);
}

TEST(BuildPrompt, GoldLabelOnlyFromShots) {
  ShotSet s;
  s.k = 1;
  s.groups = {{"play_music", {{1, 0.3}}}};
  auto p = build_prompt(kInstruction, s, kQuery, PromptTemplate{}, train_records());
  EXPECT_EQ(p.text.find(kQuery.label), std::string::npos);
}

TEST(BuildPrompt, Errors) {
  ShotSet leak;
  leak.k = 1;
  leak.groups = {{"play_music", {{1, 0.0}}}};
  DatasetRecord same_id_query{1, "play some jazz", "play_music", "en", Split::train};
  try {
    build_prompt(kInstruction, leak, same_id_query, PromptTemplate{}, train_records());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::leakage);
  }
  // Same id in the other split is a different record.
  DatasetRecord test_query{1, "play some jazz", "play_music", "en", Split::test};
  EXPECT_NO_THROW(build_prompt(kInstruction, leak, test_query, PromptTemplate{}, train_records()));

  ShotSet missing;
  missing.k = 1;
  missing.groups = {{"play_music", {{99, 0.0}}}};
  try {
    build_prompt(kInstruction, missing, kQuery, PromptTemplate{}, train_records());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unresolved_id);
  }
}

TEST(Verbalizer, MappingAndErrors) {
  EXPECT_EQ(verbalize_label("LOC", Verbalizer::identity()), "LOC");
  Verbalizer v({{"positive", " positive"}, {"negative", " negative"}});
  EXPECT_EQ(verbalize_label("positive", v), " positive");
  try {
    verbalize_label("neutral", v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_mapping);
  }
  EXPECT_EQ(Verbalizer::identity().id(), "identity");
  EXPECT_EQ(v.id(), Verbalizer({{"positive", " positive"}, {"negative", " negative"}}).id());
  EXPECT_NE(v.id(), Verbalizer({{"positive", "pos"}, {"negative", " negative"}}).id());

  auto c = train_records();
  auto p = build_prompt(kInstruction, two_per_label(), kQuery, PromptTemplate{}, c,
                        Verbalizer({{"play_music", "music"}, {"search_screening_event", "movies"}}));
  EXPECT_NE(p.text.find("play some jazz\nmusic"), std::string::npos);
  EXPECT_THROW(build_prompt(kInstruction, two_per_label(), kQuery, PromptTemplate{}, c,
                            Verbalizer(std::map<std::string, std::string>{{"play_music", "music"}})),
               Error);
}

TEST(Verbalizer, DefaultMappingIsInjective) {
  auto corpus = fixtures::clustered_corpus(7, 3, 1, 4, 5.0, 1);
  std::set<std::string> seen;
  for (const auto& label : corpus.train.label_set()) {
    EXPECT_TRUE(seen.insert(verbalize_label(label, Verbalizer::identity())).second) << label;
  }
  EXPECT_EQ(seen.size(), corpus.train.label_set().size());
}

TEST(Verbalizer, LoadFromFile) {
  auto dir = fixtures::scratch_dir("verbalizer");
  std::ofstream(dir / "v.kv") << "# surfaces\npositive = \" positive\"\nnegative = bad\n";
  auto v = Verbalizer::load(dir / "v.kv");
  EXPECT_EQ(verbalize_label("positive", v), " positive");
  EXPECT_EQ(verbalize_label("negative", v), "bad");
}

TEST(Template, ValidationAndRoundTrip) {
  EXPECT_NO_THROW(PromptTemplate{}.validate());
  PromptTemplate t;
  t.shot_format = "{text}";
  EXPECT_THROW(t.validate(), Error);
  t.shot_format = "{text} {label} {label}";
  EXPECT_THROW(t.validate(), Error);
  t = {};
  t.query_format = "no placeholder";
  EXPECT_THROW(t.validate(), Error);

  t = {};
  t.id = "qa";
  t.shot_format = "Q: {text}\nA: {label}";
  t.query_format = "Q: {text}\nA:";
  t.separator = "\n###\n";
  t.shot_order = ShotOrder::shuffled;
  t.shuffle_seed = 12;
  auto dir = fixtures::scratch_dir("template");
  std::ofstream(dir / "t.kv") << t.serialize();
  auto back = PromptTemplate::load(dir / "t.kv");
  EXPECT_EQ(back.id, t.id);
  EXPECT_EQ(back.shot_format, t.shot_format);
  EXPECT_EQ(back.query_format, t.query_format);
  EXPECT_EQ(back.separator, t.separator);
  EXPECT_EQ(back.shot_order, ShotOrder::shuffled);
  EXPECT_EQ(back.shuffle_seed, 12u);

  std::ofstream(dir / "bad.kv") << "shot_order = sideways\n";
  EXPECT_THROW(PromptTemplate::load(dir / "bad.kv"), Error);
}

TEST(RenderFormat, SinglePassAndInverse) {
  EXPECT_EQ(render_format("{text}\n{label}", "say {label}", std::string("x")), "say {label}\nx");
  EXPECT_EQ(render_format("{text}\n", "hi", std::nullopt), "hi\n");
  EXPECT_EQ(match_shot_label("{text}\n{label}", "find movie times\nsearch_screening_event"),
            std::optional<std::string>("search_screening_event"));
  EXPECT_EQ(match_shot_label("Q: {text}\nA: {label}", "Q: a\nb\nA: yes"), std::optional<std::string>("yes"));
  EXPECT_EQ(match_shot_label("Q: {text}\nA: {label}", "plain line"), std::nullopt);
  EXPECT_EQ(match_shot_label("{text}\n{label}", "instruction only"), std::nullopt);
}
