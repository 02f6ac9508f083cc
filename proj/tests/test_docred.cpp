#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "lace/docred.hpp"
#include "lace/errors.hpp"
#include "test_util.hpp"

using namespace lace;
using lace::testing::corpus_from_label_sets;
using lace::testing::make_document;
using lace::testing::random_corpus;

namespace {

const char* kMinimal = R"([{
  "title": "Tiny",
  "sents": [["Alice", "lives", "in", "Paris", "."]],
  "vertexSet": [
    [{"name": "Alice", "sent_id": 0, "pos": [0, 1], "type": "PER"}],
    [{"name": "Paris", "sent_id": 0, "pos": [3, 4], "type": "LOC"}]
  ],
  "labels": [{"h": 0, "t": 1, "r": "P551", "evidence": [0]}]
}])";

std::string with_pos(int start, int end) {
  return std::string(R"([{"title": "Bad span", "sents": [["a", "b", "c"]],
    "vertexSet": [[{"name": "a", "sent_id": 0, "pos": [)") +
         std::to_string(start) + ", " + std::to_string(end) +
         R"(], "type": "PER"}]], "labels": []}])";
}

}  // namespace

TEST_CASE("parse: empty array and minimal fixture") {
  CHECK(parse_corpus_text("[]").documents.empty());

  const Corpus c = parse_corpus_text(kMinimal);
  CHECK(c.documents.size() == 1);
  CHECK(c.num_entities() == 2);
  CHECK(c.num_facts() == 1);
  const Document& d = c.documents[0];
  CHECK(d.title == "Tiny");
  CHECK(d.has_labels);
  CHECK(d.entities[1].mentions[0].start == 3);
  CHECK(d.entities[1].type() == "LOC");
  CHECK(d.facts[0].relation == "P551");
  CHECK(d.facts[0].evidence == std::vector<std::size_t>{0});
}

TEST_CASE("parse: validation and syntax errors") {
  CHECK_THROWS_AS(parse_corpus_text(with_pos(2, 2)), ValidationError);
  CHECK_THROWS_AS(parse_corpus_text(with_pos(2, 1)), ValidationError);
  CHECK_THROWS_AS(parse_corpus_text(with_pos(1, 4)), ValidationError);
  CHECK_NOTHROW(parse_corpus_text(with_pos(2, 3)));
  try {
    parse_corpus_text(with_pos(2, 1));
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("Bad span") != std::string::npos);
  }

  try {
    parse_corpus_text("[{\"title\": \"x\",, }]");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("at byte") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_corpus("/nonexistent/corpus.json"), IoError);
}

TEST_CASE("parse: blind documents and mixed types") {
  const Corpus c = parse_corpus_text(R"([{"title": "Blind", "sents": [["x", "y"]],
    "vertexSet": [[{"name": "x", "sent_id": 0, "pos": [0, 1], "type": "PER"},
                   {"name": "y", "sent_id": 0, "pos": [1, 2], "type": "ORG"}]]}])");
  const Document& d = c.documents[0];
  CHECK_FALSE(d.has_labels);
  CHECK(d.facts.empty());
  CHECK(d.entities[0].mixed_types);
  CHECK(d.entities[0].mentions[1].type == "ORG");
  CHECK(parse_corpus_text(serialize_corpus(c)) == c);
}

TEST_CASE("parse -> serialize -> parse round-trips") {
  CHECK(parse_corpus_text(serialize_corpus(parse_corpus_text(kMinimal))) == parse_corpus_text(kMinimal));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Corpus c = random_corpus(rng, 6, 5);
    CHECK(parse_corpus_text(serialize_corpus(c)) == c);
    CHECK(parse_corpus_text(serialize_corpus(c, 2)) == c);
  }

  const auto path = std::filesystem::temp_directory_path() / "lace_roundtrip.json";
  const Corpus c = parse_corpus_text(kMinimal);
  write_corpus(c, path);
  CHECK(parse_corpus(path) == c);
  std::filesystem::remove(path);
}

TEST_CASE("relation vocabulary") {
  const Corpus c = corpus_from_label_sets({{"P17", "P131"}, {"P17"}});
  const RelationVocab v = build_label_vocab(c);
  CHECK(v.size() == 2);
  CHECK(v.index_of("P131") == 0);
  CHECK(v.index_of("P17") == 1);
  CHECK(v.threshold_index() == 2);
  CHECK(v.num_classes() == 3);
  CHECK_THROWS_AS(v.index_of("P999"), VocabError);
  CHECK_FALSE(v.find("P999").has_value());

  const RelationVocab empty = build_label_vocab(Corpus{});
  CHECK(empty.size() == 0);
  CHECK(empty.threshold_index() == 0);

  const RelationVocab named = build_label_vocab(c, {{"P17", "country"}});
  CHECK(named.name(1) == "country");
  CHECK(named.name(0) == "P131");

  // Index assignment does not depend on document order.
  Corpus shuffled = c;
  std::reverse(shuffled.documents.begin(), shuffled.documents.end());
  CHECK(build_label_vocab(shuffled) == v);
}

TEST_CASE("entity pair labels") {
  const RelationVocab v({"P131", "P17"});
  const Document two = make_document("two", 2, {{0, 1, "P17"}, {0, 1, "P131"}});
  const PairLabels labels = entity_pair_labels(two, v);
  REQUIRE(labels.size() == 1);
  CHECK(labels.at({0, 1}) == std::set<std::size_t>{0, 1});

  const Document dup = make_document("dup", 2, {{0, 1, "P17"}, {0, 1, "P17"}});
  CHECK(entity_pair_labels(dup, v).at({0, 1}).size() == 1);

  CHECK(entity_pair_labels(make_document("none", 3, {}), v).empty());
  CHECK_THROWS_AS(entity_pair_labels(make_document("bad", 2, {{0, 1, "P6"}}), v), VocabError);
}

TEST_CASE("multi-label statistics") {
  const Corpus c = corpus_from_label_sets({{"a"}, {"a", "b"}});
  const LabelStats s = multi_label_stats(c, build_label_vocab(c));
  CHECK(s.histogram == std::map<std::size_t, std::size_t>{{1, 1}, {2, 1}});
  CHECK(s.multi_label_fraction == 0.5);
  CHECK(s.max_set_size == 2);
  CHECK_FALSE(s.no_pairs);

  const LabelStats e = multi_label_stats(Corpus{}, RelationVocab{});
  CHECK(e.histogram.empty());
  CHECK(e.multi_label_fraction == 0.0);
  CHECK(e.no_pairs);
}

TEST_CASE("label statistics properties on random corpora") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const Corpus c = random_corpus(rng, 8, 6);
    const RelationVocab v = build_label_vocab(c);
    const LabelStats s = multi_label_stats(c, v);
    std::size_t assignments = 0, pairs = 0;
    for (const auto& doc : c.documents) {
      for (const auto& [pair, set] : entity_pair_labels(doc, v)) {
        CHECK_FALSE(set.empty());
        assignments += set.size();
        ++pairs;
      }
    }
    std::size_t from_hist = 0, hist_pairs = 0;
    for (const auto& [size, count] : s.histogram) {
      from_hist += size * count;
      hist_pairs += count;
    }
    CHECK(from_hist == assignments);
    CHECK(s.assignments == assignments);
    CHECK(hist_pairs == pairs);
  }
}
