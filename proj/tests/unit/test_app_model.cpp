#include <gtest/gtest.h>

#include "support/random_models.hpp"
#include "support/support.hpp"

using namespace decree;

namespace {

const char* const kModelFixtures[] = {"shopping.app.json", "shopping_fault.app.json", "gallery.app.json"};

std::string shopping_with(const std::string& from, const std::string& to) {
  std::string text = support::fixture_text("shopping.app.json");
  auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

bool mentions(const ValidationError& e, std::string_view needle) {
  for (const auto& i : e.issues())
    if (i.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(AppModel, ShoppingFixtureShape) {
  AppModel m = support::fixture_model("shopping.app.json");
  EXPECT_EQ(m.app_id, "shopping");
  ASSERT_EQ(m.callbacks.size(), 1u);
  const Callback& cb = m.callbacks[0];
  EXPECT_EQ(cb.name, "onClick#buy");
  EXPECT_EQ(cb.params, std::vector<std::string>{"x"});
  EXPECT_EQ(cb.entry, "n0");
  EXPECT_EQ(cb.nodes.size(), 6u);
  const auto& b = std::get<op::Branch>(cb.find("n1")->op);
  EXPECT_EQ(b.var, "x");
  EXPECT_EQ(b.cmp, Cmp::Lt);
  EXPECT_EQ(b.value, 10);
}

// Fixture files are stored canonically, so serialize(parse(file)) == file.
TEST(AppModel, FixturesAreSerializationFixpoints) {
  for (const char* name : kModelFixtures) {
    std::string text = support::fixture_text(name);
    EXPECT_EQ(serialize_app_model(parse_app_model(text)), text) << name;
  }
}

// Frozen oracles: FNV-1a 64 over the fixture bytes and over the compact
// callback JSON, computed by tests/oracles/digests.py.
TEST(AppModel, DigestOracles) {
  EXPECT_EQ(model_digest(support::fixture_model("shopping.app.json")).hex(), "3ed38fa8348d2a9e");
  EXPECT_EQ(model_digest(support::fixture_model("shopping_fault.app.json")).hex(), "d9a76de44de21f3c");
  EXPECT_EQ(model_digest(support::fixture_model("gallery.app.json")).hex(), "afdd1466a0a61d7d");
  EXPECT_EQ(canonical_hash(support::fixture_model("shopping.app.json").callbacks[0]).hex(), "b3e5a55c2904026c");
  EXPECT_EQ(canonical_hash(support::fixture_model("shopping_fault.app.json").callbacks[0]).hex(), "c199cda4baae440e");
  AppModel g = support::fixture_model("gallery.app.json");
  EXPECT_EQ(canonical_hash(*g.find("onClick#share")).hex(), "6a43376ad170483a");
  EXPECT_EQ(canonical_hash(*g.find("onCreate#main")).hex(), "7afa10d4b126be9e");
  EXPECT_EQ(canonical_hash(*g.find("onScroll#grid")).hex(), "890f7ad02a43f9e3");
}

TEST(AppModel, DigestMatchesReferenceFnvOfFileBytes) {
  for (const char* name : kModelFixtures)
    EXPECT_EQ(model_digest(support::fixture_model(name)).value, support::reference_fnv(support::fixture_text(name)));
}

TEST(AppModel, NodeOrderDoesNotAffectCanonicalForm) {
  AppModel m = support::fixture_model("gallery.app.json");
  std::string before = serialize_app_model(m);
  for (auto& cb : m.callbacks) std::reverse(cb.nodes.begin(), cb.nodes.end());
  EXPECT_EQ(serialize_app_model(m), before);
}

TEST(AppModel, ParsedNodesAreSorted) {
  Json j = parse_json(support::fixture_text("shopping.app.json"));
  auto& nodes = j["callbacks"][0]["nodes"];
  std::reverse(nodes.begin(), nodes.end());
  AppModel m = app_model_from_json(j);
  EXPECT_EQ(m.callbacks[0].nodes.front().id, "n0");
  EXPECT_EQ(serialize_app_model(m), support::fixture_text("shopping.app.json"));
}

TEST(AppModel, RejectsUndeclaredVariable) {
  try {
    parse_app_model(shopping_with(R"("var": "x",)", R"("var": "y",)"));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(mentions(e, "undeclared variable 'y'"));
  }
}

TEST(AppModel, RejectsDanglingEdge) {
  try {
    parse_app_model(shopping_with(R"("next": "n5")", R"("next": "n9")"));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(mentions(e, "'n9' names no node"));
  }
}

TEST(AppModel, RejectsMissingEntry) {
  EXPECT_THROW(parse_app_model(shopping_with(R"("entry": "n0")", R"("entry": "zz")")), ValidationError);
}

TEST(AppModel, RejectsDuplicateNodeIds) {
  try {
    parse_app_model(shopping_with(R"("id": "n3")", R"("id": "n2")"));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(mentions(e, "duplicate node id 'n2'"));
  }
}

TEST(AppModel, RejectsMissingOrExtraExit) {
  Json j = parse_json(support::fixture_text("shopping.app.json"));
  Json two = j;
  two["callbacks"][0]["nodes"][3] = parse_json(R"({"id": "n3", "op": {"kind": "exit"}})");
  try {
    app_model_from_json(two);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(mentions(e, "2 exit nodes"));
  }
  Json none = j;
  none["callbacks"][0]["nodes"][5] = parse_json(R"({"id": "n5", "op": {"kind": "log", "tag": "t"}, "next": "n0"})");
  try {
    app_model_from_json(none);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(mentions(e, "missing exit node"));
  }
}

TEST(AppModel, RejectsUnreachableExit) {
  Json j = parse_json(support::fixture_text("shopping.app.json"));
  j["callbacks"][0]["nodes"][4]["next"] = "n0";  // n4 loops back; n5 unreachable
  try {
    app_model_from_json(j);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(mentions(e, "not reachable"));
  }
}

TEST(AppModel, RejectsDuplicateCallbacksAndParams) {
  Json j = parse_json(support::fixture_text("shopping.app.json"));
  j["callbacks"].push_back(j["callbacks"][0]);
  j["callbacks"][0]["params"].push_back("x");
  try {
    app_model_from_json(j);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(mentions(e, "duplicate callback name"));
    EXPECT_TRUE(mentions(e, "duplicate param 'x'"));
  }
}

TEST(AppModel, RejectsStructuralProblems) {
  Json j = parse_json(support::fixture_text("shopping.app.json"));
  Json bad = j;
  bad["extra"] = 1;
  EXPECT_THROW(app_model_from_json(bad), ValidationError);
  bad = j;
  bad["callbacks"][0]["nodes"][0]["op"]["kind"] = "teleport";
  EXPECT_THROW(app_model_from_json(bad), ValidationError);
  bad = j;
  bad["callbacks"][0]["nodes"][0]["op"]["cost_ms"] = -1;
  EXPECT_THROW(app_model_from_json(bad), ValidationError);
  bad = j;
  bad["callbacks"][0]["nodes"][1]["op"]["cmp"] = "~";
  EXPECT_THROW(app_model_from_json(bad), ValidationError);
  bad = j;
  bad["callbacks"][0]["nodes"][1].erase("else");
  EXPECT_THROW(app_model_from_json(bad), ValidationError);
  EXPECT_THROW(parse_app_model("{"), ParseError);
  EXPECT_THROW(parse_app_model("[]"), ValidationError);
}

TEST(AppModel, RandomModelsRoundTrip) {
  support::ModelShape shape;
  shape.resp_values = true;
  shape.prefetch_nodes = true;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    support::ModelGenerator gen(seed, shape);
    AppModel m = gen.model();
    ASSERT_TRUE(validation_issues(m).empty()) << "seed " << seed;
    std::string text = serialize_app_model(m);
    AppModel back = parse_app_model(text);
    EXPECT_EQ(back, m) << "seed " << seed;
    EXPECT_EQ(serialize_app_model(back), text) << "seed " << seed;
  }
}

TEST(AppModel, FreshNodeId) {
  AppModel m = support::fixture_model("shopping.app.json");
  EXPECT_EQ(fresh_node_id(m.callbacks[0], "prefetch"), "prefetch");
  EXPECT_EQ(fresh_node_id(m.callbacks[0], "n0"), "n0_1");
}
