#include <doctest.h>

#include <random>

#include "p2t/parser.hpp"
#include "support/test_support.hpp"

using namespace p2t;

namespace {

const Vocabulary& vocab() {
  static const Vocabulary v = Vocabulary::default_personal();
  return v;
}

RawQuadruple quad(std::string s, std::string p, std::string o, std::optional<std::string> r = std::nullopt) {
  return {std::move(s), std::move(p), std::move(o), std::move(r)};
}

}  // namespace

TEST_CASE("parse_response finds quadruples and triples") {
  auto q = parse_response("('I', 'was born', '1979', 'birthday')");
  REQUIRE(q.kind == OutcomeKind::kExtracted);
  CHECK(*q.quad == quad("I", "was born", "1979", "birthday"));

  auto t = parse_response("Here is the triple: ('I', 'birthday', '1979')");
  REQUIRE(t.kind == OutcomeKind::kExtracted);
  CHECK(*t.quad == quad("I", "birthday", "1979"));
  CHECK(t.raw_text == "Here is the triple: ('I', 'birthday', '1979')");
}

TEST_CASE("parse_response tolerates fences, double quotes and apostrophes") {
  auto fenced = parse_response("```\n(\"my wife\", \"was born\", \"May 2, 1980\", \"birthday\")\n```");
  REQUIRE(fenced.kind == OutcomeKind::kExtracted);
  CHECK(*fenced.quad == quad("my wife", "was born", "May 2, 1980", "birthday"));

  auto apostrophe = parse_response("Output: ('my wife's mother', 'birthday', 'June 1st')");
  REQUIRE(apostrophe.kind == OutcomeKind::kExtracted);
  CHECK(apostrophe.quad->subject == "my wife's mother");

  auto spaced = parse_response("(  'I' ,'birthday' ,  '1979'  )");
  REQUIRE(spaced.kind == OutcomeKind::kExtracted);
  CHECK(*spaced.quad == quad("I", "birthday", "1979"));
}

TEST_CASE("parse_response skips non-tuples and keeps the first tuple") {
  auto r = parse_response("(note) The answer (x, y, z) is ('I', 'birthday', '1979') or ('we', 'anniversary', '2000')");
  REQUIRE(r.kind == OutcomeKind::kExtracted);
  CHECK(r.quad->subject == "I");

  CHECK(parse_response("('a', 'b')").kind == OutcomeKind::kUnparseable);
  CHECK(parse_response("('a', 'b', 'c', 'd', 'e')").kind == OutcomeKind::kUnparseable);
  CHECK(parse_response("('a', ' ', 'c')").kind == OutcomeKind::kUnparseable);
  CHECK(parse_response("('a', 'b', 'c'").kind == OutcomeKind::kUnparseable);
  CHECK(parse_response("").kind == OutcomeKind::kUnparseable);
}

TEST_CASE("parse_response recognizes out-of-context answers") {
  const std::string text = "This sentence is out of context for the given relations.";
  auto r = parse_response(text);
  CHECK(r.kind == OutcomeKind::kOutOfContext);
  CHECK(r.justification == text);
  CHECK_FALSE(r.quad);

  // Every configured cue triggers; matching is case-insensitive.
  CueList cues;
  for (const auto& phrase : cues.phrases()) {
    std::string upper = "The input " + phrase + ", sorry.";
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    CHECK(parse_response(upper, cues).kind == OutcomeKind::kOutOfContext);
  }
  CHECK(parse_response("I cannot help with that.").kind == OutcomeKind::kUnparseable);

  CueList custom({"  not relevant  ", ""});
  CHECK(custom.phrases().size() == 1);
  CHECK(parse_response("Not relevant here.", custom).kind == OutcomeKind::kOutOfContext);
  CHECK(parse_response(text, custom).kind == OutcomeKind::kUnparseable);
}

TEST_CASE("CueList loads one phrase per line") {
  auto cues = CueList::load(p2t::testing::data_dir() / "cues.txt");
  CHECK(cues.phrases() == CueList().phrases());
}

TEST_CASE("apply_relation_postprocess") {
  auto a = apply_relation_postprocess(quad("I", "was born", "1979", "birthday"), vocab());
  REQUIRE(a.kind == OutcomeKind::kExtracted);
  CHECK(*a.triple == Triple{"I", "birthday", "1979"});

  auto b = apply_relation_postprocess(quad("I", "birthday", "1979", "birthday"), vocab());
  CHECK(*b.triple == Triple{"I", "birthday", "1979"});

  auto c = apply_relation_postprocess(quad("I", "commute", "hour", "duration"), vocab());
  CHECK(c.kind == OutcomeKind::kOutOfContext);
  CHECK(c.justification.find("duration") != std::string::npos);
  CHECK_FALSE(c.triple);

  auto cased = apply_relation_postprocess(quad("we", "married", "2001", "Anniversary"), vocab());
  CHECK(cased.triple->predicate == "anniversary");

  auto passthrough = apply_relation_postprocess(quad("I", "was born", "1979"), vocab());
  REQUIRE(passthrough.kind == OutcomeKind::kExtracted);
  CHECK(passthrough.triple->predicate == "was born");
}

TEST_CASE("apply_relation_postprocess is idempotent and stays in vocabulary or input") {
  std::mt19937_64 rng(21);
  const std::vector<std::string> preds = {"was born", "birthday", "married", "anniversary", "is"};
  const std::vector<std::optional<std::string>> rels = {std::nullopt, "birthday", "ANNIVERSARY", "duration"};
  for (int i = 0; i < 500; ++i) {
    RawQuadruple q = quad("s", preds[rng() % preds.size()], "o", rels[rng() % rels.size()]);
    auto once = apply_relation_postprocess(q, vocab());
    if (once.kind != OutcomeKind::kExtracted) continue;
    CHECK((vocab().contains(once.triple->predicate) || once.triple->predicate == q.predicate));
    if (vocab().contains(once.triple->predicate)) CHECK(vocab().find(once.triple->predicate)->name == once.triple->predicate);
    RawQuadruple again{once.triple->subject, once.triple->predicate, once.triple->object, q.relation};
    auto twice = apply_relation_postprocess(again, vocab());
    CHECK(twice.kind == once.kind);
    CHECK(*twice.triple == *once.triple);
  }
}

TEST_CASE("serialize_triple canonical form and escaping") {
  CHECK(serialize_triple({"I", "birthday", "1979"}) == "('I', 'birthday', '1979')");
  Triple quoted{"my wife's mum", "birthday", "'95"};
  CHECK(serialize_triple(quoted) == "('my wife''s mum', 'birthday', '''95')");
  auto back = parse_response(serialize_triple(quoted));
  REQUIRE(back.kind == OutcomeKind::kExtracted);
  CHECK(Triple{back.quad->subject, back.quad->predicate, back.quad->object} == quoted);
}

TEST_CASE("serialize then parse is the identity on random triples") {
  std::mt19937_64 rng(31);
  int checked = 0;
  while (checked < 1000) {
    Triple t{p2t::testing::random_printable(rng, 1, 24), p2t::testing::random_printable(rng, 1, 24),
             p2t::testing::random_printable(rng, 1, 24)};
    if (!t.valid()) continue;
    auto r = parse_response(serialize_triple(t));
    REQUIRE(r.kind == OutcomeKind::kExtracted);
    REQUIRE_FALSE(r.quad->relation);
    REQUIRE_MESSAGE((Triple{r.quad->subject, r.quad->predicate, r.quad->object} == t), serialize_triple(t));
    ++checked;
  }
}

TEST_CASE("parse_response is total on random bytes") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> byte(0, 255), len(0, 200);
  const std::string alphabet = "()'\", abc";
  for (int i = 0; i < 10000; ++i) {
    std::string s(static_cast<size_t>(len(rng)), '\0');
    for (auto& c : s) c = i % 2 ? static_cast<char>(byte(rng)) : alphabet[rng() % alphabet.size()];
    auto r = parse_response(s);
    CHECK((r.kind == OutcomeKind::kExtracted || r.kind == OutcomeKind::kOutOfContext ||
           r.kind == OutcomeKind::kUnparseable));
    CHECK(r.quad.has_value() == (r.kind == OutcomeKind::kExtracted));
    CHECK(r.raw_text == s);
  }
}

TEST_CASE("extract_outcome composes parse and post-process") {
  auto o = extract_outcome("Sure! ('I', 'was born', '1979', 'birthday')", vocab());
  REQUIRE(o.kind == OutcomeKind::kExtracted);
  CHECK(*o.triple == Triple{"I", "birthday", "1979"});
  CHECK(o.raw_text == "Sure! ('I', 'was born', '1979', 'birthday')");

  auto ooc = extract_outcome("Out of context: this is about a commute.", vocab());
  CHECK(ooc.kind == OutcomeKind::kOutOfContext);
  CHECK_FALSE(ooc.triple);
}
