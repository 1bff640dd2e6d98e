// Copyright 2026 The metricgen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "metricgen/surrogate.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "metricgen/errors.h"
#include "metricgen/random.h"
#include "support/oracles.h"

namespace metricgen {
namespace {

using Tokens = std::vector<int>;

std::vector<std::string> Names(const Tokens& seq, const TokenVocabulary& vocab) {
  std::vector<std::string> out;
  for (int t : seq) out.push_back(vocab.Name(t));
  return out;
}

TEST(TokenVocabulary, IsABijection) {
  const TokenVocabulary vocab;
  // Markers, 13 operators, smul per constant and 3 leaves.
  EXPECT_EQ(vocab.size(), 2 + 13 + 3 + 3);
  std::set<std::string> names;
  for (int t = 0; t < vocab.size(); ++t) names.insert(vocab.Name(t));
  EXPECT_EQ(names.size(), static_cast<size_t>(vocab.size()));
  for (int t = 2; t < vocab.size(); ++t) {
    EXPECT_EQ(vocab.Encode(vocab.SymbolOf(t), vocab.ConstantOf(t)), t);
  }
  EXPECT_THROW(vocab.Encode(Symbol::kScale, 3.0), UnknownToken);
  EXPECT_THROW(vocab.SymbolOf(TokenVocabulary::kEnd), UnknownToken);
  EXPECT_THROW(vocab.SymbolOf(vocab.size()), UnknownToken);
}

TEST(GraphToSequence, Examples) {
  const TokenVocabulary vocab;
  EXPECT_EQ(Names(GraphToSequence(ParseExpr("dot(u,v)"), vocab), vocab),
            (std::vector<std::string>{"START", "dot", "u", "v", "END"}));
  EXPECT_EQ(Names(GraphToSequence(ParseExpr("dot(norm(u),v)"), vocab), vocab),
            (std::vector<std::string>{"START", "dot", "norm", "u", "v", "END"}));
  EXPECT_EQ(Names(GraphToSequence(ParseExpr("sum(smul(0.5,sub(u,v)))"), vocab), vocab),
            (std::vector<std::string>{"START", "sum", "smul:0.5", "sub", "u", "v", "END"}));
}

TEST(GraphToSequence, FuzzRoundTrip) {
  const TokenVocabulary vocab;
  Rng rng = MakeRng(11);
  GenerationConfig c;
  c.max_depth = 6;
  for (int i = 0; i < 5000; ++i) {
    const MetricGraph g = RandomGenerate(c, rng);
    const Tokens seq = GraphToSequence(g, vocab);
    ASSERT_EQ(seq.size(), static_cast<size_t>(g.size()) + 2);
    ASSERT_EQ(SequenceToGraph(seq, vocab), g) << PrintExpr(g);
  }
}

TEST(SequenceToGraph, RejectsMalformedSequences) {
  const TokenVocabulary vocab;
  Tokens seq = GraphToSequence(ParseExpr("dot(u,v)"), vocab);
  EXPECT_THROW(SequenceToGraph(Tokens(seq.begin(), seq.end() - 1), vocab), UnknownToken);
  Tokens truncated = {seq[0], seq[1], seq[2], seq[4]};
  EXPECT_THROW(SequenceToGraph(truncated, vocab), UnknownToken);
  Tokens trailing = seq;
  trailing.insert(trailing.end() - 1, seq[2]);
  EXPECT_THROW(SequenceToGraph(trailing, vocab), UnknownToken);
}

TEST(SurrogateModel, UntrainedPredictsZero) {
  const SurrogateModel model(TokenVocabulary(), 16, 32, 7);
  Rng rng = MakeRng(1);
  for (int i = 0; i < 50; ++i) {
    const MetricGraph g = RandomGenerate(GenerationConfig(), rng);
    EXPECT_EQ(model.Predict(g), 0.0);
  }
}

TEST(SurrogateModel, RejectsUnknownTokenIds) {
  const SurrogateModel model(TokenVocabulary(), 4, 4, 7);
  EXPECT_THROW(model.Predict(Tokens{0, 99, 1}), UnknownToken);
  EXPECT_THROW(model.Predict(Tokens{0, -1, 1}), UnknownToken);
}

SurrogateDataset RandomDataset(int n, std::uint64_t seed, const TokenVocabulary& vocab) {
  SurrogateDataset data;
  Rng rng = MakeRng(seed);
  GenerationConfig c;
  c.max_depth = 4;
  std::uniform_real_distribution<double> unit(0.0, 0.4);
  for (int i = 0; i < n; ++i) data.Add(RandomGenerate(c, rng), unit(rng), vocab);
  return data;
}

TEST(SurrogateDataset, SkipsNonFiniteFitness) {
  const TokenVocabulary vocab;
  SurrogateDataset data;
  data.Add(InnerProductMetric(), 0.3, vocab);
  data.Add(InnerProductMetric(), -std::numeric_limits<double>::infinity(), vocab);
  data.Add(InnerProductMetric(), std::nan(""), vocab);
  EXPECT_EQ(data.size(), 1u);
  EXPECT_EQ(data.expressions[0], "dot(u,v)");
}

TEST(TrainSurrogate, NeedsTwoPairs) {
  const TokenVocabulary vocab;
  SurrogateModel model(vocab, 4, 4, 1);
  SurrogateDataset data;
  data.Add(InnerProductMetric(), 0.3, vocab);
  EXPECT_THROW(TrainSurrogate(model, data, 5, 1e-3), ConfigError);
}

TEST(TrainSurrogate, DeterministicPerSeed) {
  const TokenVocabulary vocab;
  const SurrogateDataset data = RandomDataset(20, 3, vocab);
  SurrogateModel a(vocab, 8, 8, 5), b(vocab, 8, 8, 5);
  EXPECT_EQ(TrainSurrogate(a, data, 10, 1e-2), TrainSurrogate(b, data, 10, 1e-2));
  EXPECT_EQ(a.Predict(data.sequences[0]), b.Predict(data.sequences[0]));
  EXPECT_EQ(a.Predict(data.sequences[0]), a.Predict(data.sequences[0]));
}

TEST(TrainSurrogate, IdenticalSequencesConvergeToTheirFitness) {
  const TokenVocabulary vocab;
  SurrogateDataset data;
  for (int i = 0; i < 8; ++i) data.Add(ParseExpr("cos(u,v)"), 0.5, vocab);
  SurrogateModel model(vocab, 16, 32, 2);
  TrainSurrogate(model, data, 200, 1e-3, OptimizerKind::kSgd);
  EXPECT_NEAR(model.Predict(ParseExpr("cos(u,v)")), 0.5, 0.01);
}

TEST(TrainSurrogate, LossTraceIsTheMeanSquaredError) {
  const TokenVocabulary vocab;
  const SurrogateDataset data = RandomDataset(12, 4, vocab);
  const SurrogateModel before(vocab, 8, 8, 9);
  SurrogateModel trained = before;
  const std::vector<double> trace = TrainSurrogate(trained, data, 1, 1e-3, OptimizerKind::kSgd);
  SurrogateModel reference = before;
  reference.SetTargetStats(trained.target_mean(), trained.target_scale());
  double sum = 0.0;
  for (size_t z = 0; z < data.size(); ++z) {
    const double r = reference.Predict(data.sequences[z]) - data.targets[z];
    sum += r * r;
  }
  ASSERT_EQ(trace.size(), 1u);
  EXPECT_NEAR(trace[0], sum / static_cast<double>(data.size()), 1e-12);
  EXPECT_NEAR(reference.Mse(data), trace[0], 1e-12);
}

TEST(TrainSurrogate, SmallStepGradientDescentIsMonotone) {
  const TokenVocabulary vocab;
  const SurrogateDataset data = RandomDataset(40, 6, vocab);
  SurrogateModel model(vocab, 16, 32, 3);
  const std::vector<double> trace = TrainSurrogate(model, data, 100, 1e-3, OptimizerKind::kSgd);
  for (size_t t = 1; t < trace.size(); ++t) ASSERT_LE(trace[t], trace[t - 1]) << "epoch " << t;
  EXPECT_LT(trace.back(), trace.front());
}

TEST(SurrogateModel, GradientMatchesFiniteDifferences) {
  const TokenVocabulary vocab;
  Rng rng = MakeRng(8);
  GenerationConfig c;
  c.max_depth = 3;
  for (int trial = 0; trial < 5; ++trial) {
    SurrogateDataset data;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    while (data.size() < 3) {
      const MetricGraph g = RandomGenerate(c, rng);
      if (g.size() + 2 <= 8) data.Add(g, unit(rng), vocab);
    }
    SurrogateModel model(vocab, 3, 4, static_cast<std::uint64_t>(trial));
    // Nonzero head so every parameter receives gradient.
    for (double& p : model.parameters()) p += 0.3 * unit(rng);
    std::vector<double> grad(model.parameters().size());
    model.StandardizedLossAndGradient(data, grad);
    std::vector<double> scratch(grad.size());
    for (size_t k = 0; k < grad.size(); ++k) {
      const double saved = model.parameters()[k];
      const double h = 1e-6;
      model.parameters()[k] = saved + h;
      const double up = model.StandardizedLossAndGradient(data, scratch);
      model.parameters()[k] = saved - h;
      const double down = model.StandardizedLossAndGradient(data, scratch);
      model.parameters()[k] = saved;
      const double numeric = (up - down) / (2 * h);
      ASSERT_LE(std::abs(grad[k] - numeric), 1e-4 * std::max(std::abs(numeric), 1e-4))
          << "parameter " << k << " analytic " << grad[k] << " numeric " << numeric;
    }
  }
}

TEST(TrainSurrogate, HeldOutPredictionsTrackAStructuralTarget) {
  const TokenVocabulary vocab;
  Rng rng = MakeRng(21);
  GenerationConfig c;
  c.max_depth = 4;
  SurrogateDataset train, held_out;
  for (int i = 0; i < 200; ++i) {
    const MetricGraph g = RandomGenerate(c, rng);
    // Fitness grows with size and favors a dot root.
    const double y = 0.02 * g.size() + (g.node(0).symbol == Symbol::kDot ? 0.2 : 0.0);
    (i < 150 ? train : held_out).Add(g, y, vocab);
  }
  SurrogateModel model(vocab, 8, 16, 1);
  TrainSurrogate(model, train, 150, 1e-2);
  std::vector<double> predicted;
  for (const Tokens& seq : held_out.sequences) predicted.push_back(model.Predict(seq));
  EXPECT_GT(testing::Spearman(predicted, held_out.targets), 0.3);
}

TEST(SurrogateModel, SaveLoadRoundTrip) {
  testing::TempDir dir("sur");
  const TokenVocabulary vocab({-1.0, 0.5, 2.0, 3.0});
  const SurrogateDataset data = RandomDataset(10, 2, vocab);
  SurrogateModel model(vocab, 4, 6, 5);
  TrainSurrogate(model, data, 5, 1e-2);
  model.Save(dir.path() / "model.bin");
  const SurrogateModel loaded = SurrogateModel::Load(dir.path() / "model.bin");
  EXPECT_EQ(loaded.vocabulary(), vocab);
  EXPECT_EQ(loaded.embed_dim(), 4);
  EXPECT_EQ(loaded.hidden(), 6);
  EXPECT_EQ(loaded.target_mean(), model.target_mean());
  for (const Tokens& seq : data.sequences) EXPECT_EQ(loaded.Predict(seq), model.Predict(seq));
  std::ofstream(dir.path() / "junk.bin") << "not a model";
  EXPECT_THROW(SurrogateModel::Load(dir.path() / "junk.bin"), FormatError);
}

TEST(SurrogateModel, OperandOrderOfCommutativeOperatorsIsIgnored) {
  const TokenVocabulary vocab;
  const SurrogateDataset data = RandomDataset(10, 12, vocab);
  SurrogateModel model(vocab, 6, 6, 3);
  TrainSurrogate(model, data, 10, 1e-2);
  EXPECT_EQ(model.Predict(ParseExpr("cos(v,had(ones,u))")), model.Predict(ParseExpr("cos(had(u,ones),v)")));
  EXPECT_EQ(model.Predict(ParseExpr("cos(v,had(ones,u))")),
            model.Predict(GraphToSequence(ParseExpr("cos(had(ones,u),v)"), vocab)));

  SurrogateDataset swapped;
  swapped.Add(ParseExpr("dot(v,u)"), 0.2, vocab);
  EXPECT_EQ(swapped.sequences[0], GraphToSequence(InnerProductMetric(), vocab));
  EXPECT_EQ(swapped.expressions[0], "dot(v,u)");
}

TEST(SurrogateEnsemble, RejectsEmptyEnsemble) {
  EXPECT_THROW(SurrogateEnsemble(TokenVocabulary(), 4, 4, 0, 1), ConfigError);
  SurrogateConfig c;
  c.ensemble = 0;
  EXPECT_THROW(c.Check(), ConfigError);
}

TEST(SurrogateEnsemble, SingleMemberMatchesItsModel) {
  const TokenVocabulary vocab;
  const SurrogateDataset data = RandomDataset(15, 8, vocab);
  SurrogateEnsemble ensemble(vocab, 6, 6, 1, 21);
  SurrogateModel model(vocab, 6, 6, DeriveSeed(21, {0}));
  EXPECT_EQ(ensemble.Fit(data, 12, 1e-2), TrainSurrogate(model, data, 12, 1e-2));
  for (const Tokens& seq : data.sequences) EXPECT_EQ(ensemble.Predict(seq), model.Predict(seq));
}

TEST(SurrogateEnsemble, PredictsTheMemberMeanAndAveragesTraces) {
  const TokenVocabulary vocab;
  const SurrogateDataset data = RandomDataset(15, 9, vocab);
  SurrogateEnsemble ensemble(vocab, 6, 6, 3, 4);
  const std::vector<double> trace = ensemble.Fit(data, 8, 1e-2);
  ASSERT_EQ(ensemble.size(), 3);
  ASSERT_EQ(trace.size(), 8u);

  std::vector<double> expected(8, 0.0);
  for (int k = 0; k < 3; ++k) {
    SurrogateModel m(vocab, 6, 6, DeriveSeed(4, {static_cast<std::uint64_t>(k)}));
    const std::vector<double> t = TrainSurrogate(m, data, 8, 1e-2);
    for (size_t e = 0; e < t.size(); ++e) expected[e] += t[e] / 3.0;
  }
  for (size_t e = 0; e < trace.size(); ++e) EXPECT_NEAR(trace[e], expected[e], 1e-15 * (1.0 + expected[e]));

  for (const Tokens& seq : data.sequences) {
    double mean = 0.0;
    for (const SurrogateModel& m : ensemble.members()) mean += m.Predict(seq) / 3.0;
    EXPECT_NEAR(ensemble.Predict(seq), mean, 1e-12);
  }
  // Members are distinct fits.
  EXPECT_NE(ensemble.members()[0].Predict(data.sequences[0]),
            ensemble.members()[1].Predict(data.sequences[0]));
}

TEST(SurrogateEnsemble, SmallStepGradientDescentIsMonotone) {
  const TokenVocabulary vocab;
  const SurrogateDataset data = RandomDataset(30, 10, vocab);
  SurrogateEnsemble ensemble(vocab, 8, 8, 3, 2);
  const std::vector<double> trace = ensemble.Fit(data, 60, 1e-3, OptimizerKind::kSgd);
  for (size_t t = 1; t < trace.size(); ++t) EXPECT_LE(trace[t], trace[t - 1]) << "epoch " << t;
}

TEST(SurrogateEnsemble, SaveLoadRoundTrip) {
  testing::TempDir dir("surens");
  const TokenVocabulary vocab;
  const SurrogateDataset data = RandomDataset(10, 11, vocab);
  SurrogateEnsemble ensemble(vocab, 4, 5, 3, 6);
  ensemble.Fit(data, 5, 1e-2);
  ensemble.Save(dir.path() / "ens.bin");
  const SurrogateEnsemble loaded = SurrogateEnsemble::Load(dir.path() / "ens.bin");
  EXPECT_EQ(loaded.size(), 3);
  for (const Tokens& seq : data.sequences) EXPECT_EQ(loaded.Predict(seq), ensemble.Predict(seq));

  // A single-model checkpoint is not an ensemble checkpoint.
  ensemble.members()[0].Save(dir.path() / "one.bin");
  EXPECT_THROW(SurrogateEnsemble::Load(dir.path() / "one.bin"), FormatError);
  std::ofstream(dir.path() / "junk.bin") << "MGSURE01";
  EXPECT_THROW(SurrogateEnsemble::Load(dir.path() / "junk.bin"), FormatError);
}

TEST(SurrogateDataset, WritesLog) {
  testing::TempDir dir("surlog");
  const TokenVocabulary vocab;
  SurrogateDataset data;
  data.Add(InnerProductMetric(), 0.25, vocab);
  data.Add(ParseExpr("cos(u,v)"), 0.1, vocab);
  data.WriteLog(dir.path() / "log.tsv");
  std::ifstream in(dir.path() / "log.tsv");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text, "dot(u,v)\t0.25\ncos(u,v)\t0.1\n");
}

}  // namespace
}  // namespace metricgen
