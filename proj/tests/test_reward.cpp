#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <set>

#include "fenrich/embedding.hpp"
#include "fenrich/error.hpp"
#include "fenrich/reward.hpp"
#include "support/oracles.hpp"

using namespace fenrich;
using namespace fenrich::reward;

// ---- parsing --------------------------------------------------------------

TEST(ParseGeneration, WellFormed) {
  const auto g = parse_generation("<think>no effusion.</think><answer>normal study.</answer>");
  EXPECT_TRUE(g.parse_ok);
  EXPECT_EQ(g.findings_part, "no effusion.");
  EXPECT_EQ(g.impression_part, "normal study.");
}

TEST(ParseGeneration, TrimsParts) {
  const auto g = parse_generation("lead <think>\n  a. b.  \n</think>\n<answer>  c  </answer> tail");
  EXPECT_TRUE(g.parse_ok);
  EXPECT_EQ(g.findings_part, "a. b.");
  EXPECT_EQ(g.impression_part, "c");
}

TEST(ParseGeneration, FirstSpanWins) {
  const auto g = parse_generation("<think>a</think><think>b</think><answer>c</answer>");
  EXPECT_TRUE(g.parse_ok);
  EXPECT_EQ(g.findings_part, "a");
  EXPECT_EQ(g.impression_part, "c");
}

TEST(ParseGeneration, Malformed) {
  for (const char* text : {"<answer>x</answer>", "<think>a</think>", "<think>a<answer>b</answer>",
                           "<answer>b</answer><think>a</think>", "<think>a</think><answer>b", ""}) {
    const auto g = parse_generation(text);
    EXPECT_FALSE(g.parse_ok) << text;
    EXPECT_TRUE(g.findings_part.empty());
    EXPECT_TRUE(g.impression_part.empty());
  }
}

// ---- scoring ---------------------------------------------------------------

TEST(Score, PartialOverlap) {
  const auto s = score({1, 2, 3}, {2, 3, 4}, "no acute disease", "cardiomegaly");
  EXPECT_NEAR(s.f1, 2.0 * 2 / 6, 1e-12);
  EXPECT_NEAR(s.total, 0.6667, 1e-4);
  EXPECT_EQ(s.exact, 0);
}

TEST(Score, Identity) {
  const auto s = score({1, 2, 3}, {3, 2, 1}, "No acute  disease.", " No acute disease. ");
  EXPECT_EQ(s.f1, 1.0);
  EXPECT_EQ(s.exact, 1);
  EXPECT_EQ(s.total, 2.0);
}

TEST(Score, CaseIsKept) {
  EXPECT_EQ(score({1}, {1}, "Normal", "normal").exact, 0);
}

TEST(Score, EmptyGenerationAndGroundTruth) {
  EXPECT_EQ(score({1, 2}, {}, "a", "b").f1, 0.0);
  EXPECT_THROW(score({}, {1}, "a", "a"), DomainError);
}

TEST(Score, UnparsedGenerationScoresZero) {
  const auto g = parse_generation("<answer>normal</answer>");
  EXPECT_EQ(score_generation(g, {1}, "normal"), RewardScore{});
  EXPECT_THROW(score_generation(g, {}, "normal"), DomainError);
}

TEST(Score, DuplicatesAreSetSemantics) {
  EXPECT_EQ(score({1, 1, 2}, {2, 2}, "a", "b"), score({1, 2}, {2}, "a", "b"));
}

TEST(Score, RandomPairsBoundedAndSymmetric) {
  std::mt19937_64 rng(10000);
  std::uniform_int_distribution<int> len(0, 8), id(0, 12);
  for (int t = 0; t < 10000; ++t) {
    ClusterSet a, b;
    const int na = 1 + len(rng), nb = 1 + len(rng);
    for (int i = 0; i < na; ++i) a.push_back(id(rng));
    for (int i = 0; i < nb; ++i) b.push_back(id(rng));
    const auto ab = score(a, b, "x", "y");
    const auto ba = score(b, a, "x", "y");
    ASSERT_GE(ab.f1, 0.0);
    ASSERT_LE(ab.f1, 1.0);
    ASSERT_EQ(ab.f1, ba.f1);
    std::set<ClusterId> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    ASSERT_EQ(ab.f1 == 1.0, sa == sb);
    ASSERT_EQ(ab.total, ab.f1 + ab.exact);
  }
}

// ---- bridging --------------------------------------------------------------

namespace {

const char* const kTraining[] = {
    "the heart size is normal",
    "no pleural effusion",
    "there is no pneumothorax",
    "mild cardiomegaly",
    "the lungs are clear bilaterally",
    "degenerative changes of the thoracic spine",
    "the mediastinal contour is within normal limits",
    "no focal airspace consolidation",
    "calcified granuloma in the left lung base",
    "right hilar mass is suspected",
    "sternotomy wires are intact",
    "the osseous structures are unremarkable",
    "left basilar atelectasis",
    "pulmonary vascularity is normal",
    "small right pleural effusion",
    "interval placement of a right internal jugular catheter",
    "the trachea is midline",
    "no acute bony abnormality",
    "moderate hiatal hernia",
    "aortic knob calcification",
    "the cardiomediastinal silhouette is stable",
    "there is a nasogastric tube in the stomach",
    "patchy opacity in the right lower lobe",
    "no evidence of pulmonary edema",
    "healed left rib fractures",
};

struct BridgeFixture {
  corpus::SentenceTable table;
  clustering::ClusterAssignment assignment;
  embedding::EmbeddingMatrix matrix;
};

// One cluster per training sentence, except the last which is noise.
BridgeFixture bridge_fixture() {
  BridgeFixture f;
  std::vector<ClusterId> labels;
  for (const char* s : kTraining) {
    f.table.intern(s);
    labels.push_back(static_cast<ClusterId>(labels.size()));
  }
  labels.back() = kNoise;
  f.assignment = clustering::ClusterAssignment({}, labels);
  f.matrix = embedding::embed_table_fallback(f.table, 384, 0);
  return f;
}

// Light surface edits: a trailing filler word, a dropped article or
// copula, or a plural.
std::vector<std::string> perturb(const std::string& s) {
  std::vector<std::string> out;
  out.push_back(s + " noted");
  out.push_back(s + " is seen");
  for (const char* w : {"the ", "is ", "there "}) {
    const auto pos = s.find(w);
    if (pos != std::string::npos) {
      auto t = s;
      t.erase(pos, std::strlen(w));
      out.push_back(t);
    }
  }
  out.push_back(s + "s");
  return out;
}

}  // namespace

TEST(Bridge, ExactMatchUsesLabel) {
  const auto f = bridge_fixture();
  ClusterBridge bridge(f.table, f.assignment, f.matrix, {});
  EXPECT_EQ(bridge.map("No pleural effusion. Mild cardiomegaly."),
            (ClusterSet{f.assignment.label(1), f.assignment.label(3)}));
  // Exact match on a noise sentence contributes nothing.
  EXPECT_TRUE(bridge.map("Healed left rib fractures.").empty());
  EXPECT_TRUE(bridge.map("").empty());
}

TEST(Bridge, GibberishContributesNothing) {
  const auto f = bridge_fixture();
  ClusterBridge bridge(f.table, f.assignment, f.matrix, {});
  EXPECT_TRUE(bridge.map("zebra crossing ahead. qwerty uiop asdf.").empty());
}

TEST(Bridge, ExternalEmbedderWithoutVectorsIsExactOnly) {
  const auto f = bridge_fixture();
  BridgeConfig cfg;
  cfg.embedder = EmbedderKind::kExternal;
  ClusterBridge bridge(f.table, f.assignment, f.matrix, cfg);
  EXPECT_TRUE(bridge.map("no pleural effusions").empty());
  EXPECT_EQ(bridge.map("no pleural effusion").size(), 1u);
  // Supplied vectors take the nearest-neighbour path.
  const std::vector<std::vector<float>> vecs = {embedding::fallback_embed("no pleural effusions", 384, 0)};
  EXPECT_EQ(bridge.map("no pleural effusions", &vecs), (ClusterSet{f.assignment.label(1)}));
  const std::vector<std::vector<float>> wrong_dim = {{1.0f, 0.0f}};
  EXPECT_THROW(bridge.map("no pleural effusions", &wrong_dim), DomainError);
  EXPECT_THROW(bridge.map("a. b.", &vecs), DomainError);
}

TEST(Bridge, PerturbedSentencesMapToTheirSource) {
  const auto f = bridge_fixture();
  ClusterBridge bridge(f.table, f.assignment, f.matrix, {});
  std::vector<bool> mask(f.table.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = f.assignment.label(static_cast<SentenceId>(i)) != kNoise;

  int total = 0, hits = 0;
  for (std::size_t i = 0; i + 1 < f.table.size() && total < 50; ++i) {
    for (const auto& p : perturb(f.table.text(static_cast<SentenceId>(i)))) {
      if (total == 50) break;
      ++total;
      const auto got = bridge.map(p);
      // Linear-scan oracle for the same decision.
      const auto q = embedding::fallback_embed(p, 384, 0);
      const auto nn = fenrich::oracle::oracle_nearest(q, f.matrix, mask);
      const ClusterSet want = nn.cosine >= 0.8 ? ClusterSet{f.assignment.label(nn.id)} : ClusterSet{};
      EXPECT_EQ(got, want) << p;
      hits += got == ClusterSet{f.assignment.label(static_cast<SentenceId>(i))};
    }
  }
  ASSERT_EQ(total, 50);
  EXPECT_GE(hits, 45) << hits << " of 50";
}
