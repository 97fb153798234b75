#include "cmdim/harness.hpp"

#include <gtest/gtest.h>

using namespace cmdim;

namespace {

const char* product_text = R"yaml(
name: small_product
seed: 1
system:
  base: {kind: periodic, dim: 1, alphabet: 2, patterns: [{period: [2], symbols: [0, 1]}]}
  site: {kind: interval, size: 4}
cover:
  - {symbols: [0], site: "[0,3/4)"}
  - {symbols: [0], site: "(1/4,1]"}
  - {symbols: [1], site: "[0,3/4)"}
  - {symbols: [1], site: "(1/4,1]"}
schedule:
  windows: [[0,1], [0,2]]
points:
  - {pattern: 0, offset: 0}
checks: [seed_cover, product_formula, fiber_bound]
)yaml";

const char* broken_text = R"yaml(
name: broken
seed: 7
system:
  base: {kind: point}
  site: {kind: interval, size: 4}
cover:
  - {site: "[0,1/2)"}
  - {site: "(1/2,1]"}
schedule:
  windows: [[0,1]]
checks: [seed_cover]
)yaml";

const CheckResult& named(const RunReport& rep, const std::string& name) {
  for (auto& r : rep.results)
    if (r.name == name) return r;
  throw std::runtime_error("no check " + name);
}

}  // namespace

TEST(Harness, EchoIsAFixedPoint) {
  auto ex = parse_experiment_text(product_text);
  auto once = echo(ex);
  EXPECT_EQ(echo(parse_experiment_text(once)), once);
}

TEST(Harness, ProductRunPassesAndAudits) {
  auto ex = parse_experiment_text(product_text);
  auto rep = run_checks(ex, RunOptions{});
  EXPECT_EQ(rep.exit_code(), 0);
  for (auto& r : rep.results) EXPECT_EQ(r.verdict, "pass") << r.name;
  auto a = audit_witnesses(witness_file(ex, rep));
  EXPECT_GT(a.total, 0u);
  EXPECT_TRUE(a.ok());
}

TEST(Harness, ThreadCountDoesNotChangeOutput) {
  auto ex = parse_experiment_text(product_text);
  RunOptions two;
  two.threads = 2;
  auto a = run_checks(ex, RunOptions{});
  auto b = run_checks(ex, two);
  EXPECT_EQ(verdict_json(ex, a).dump(), verdict_json(ex, b).dump());
  EXPECT_EQ(witness_file(ex, a).dump(), witness_file(ex, b).dump());
}

TEST(Harness, UncoveredPointFailsWithCellWitness) {
  auto ex = parse_experiment_text(broken_text);
  auto rep = run_checks(ex, RunOptions{});
  EXPECT_EQ(rep.exit_code(), 1);
  auto& sc = named(rep, "seed_cover");
  EXPECT_EQ(sc.verdict, "fail");
  ASSERT_FALSE(sc.witnesses.empty());
  EXPECT_EQ(sc.witnesses.front()["type"], "uncovered_cell");
  EXPECT_TRUE(audit_witnesses(witness_file(ex, rep)).ok());
}

TEST(Harness, AuditRejectsTamperedValue) {
  auto ex = parse_experiment_text(product_text);
  auto file = witness_file(ex, run_checks(ex, RunOptions{}));
  bool tampered = false;
  for (auto& w : file["witnesses"])
    if (w["type"] == "D_stage" && w["upper"].get<long>() > 0) {
      w["lower"] = 0;
      w["upper"] = 0;
      tampered = true;
      break;
    }
  ASSERT_TRUE(tampered);
  auto a = audit_witnesses(file);
  EXPECT_FALSE(a.ok());
  EXPECT_EQ(a.failures.size(), 1u);
}

TEST(Harness, AuditRejectsFabricatedUncoveredCell) {
  auto ex = parse_experiment_text(product_text);
  auto file = witness_file(ex, run_checks(ex, RunOptions{}));
  auto broken = witness_file(parse_experiment_text(broken_text), run_checks(parse_experiment_text(broken_text), RunOptions{}));
  // the same cell is covered in the product experiment
  for (auto& w : broken["witnesses"])
    if (w["type"] == "uncovered_cell") file["witnesses"].push_back(w);
  EXPECT_FALSE(audit_witnesses(file).ok());
}

TEST(Harness, StageLimitTruncatesSchedule) {
  auto ex = parse_experiment_text(product_text);
  RunOptions opt;
  opt.stage_limit = 1;
  Context cx(ex, opt);
  EXPECT_EQ(cx.windows().size(), 1u);
}

TEST(Harness, MalformedExperimentIsRejected) {
  EXPECT_THROW(parse_experiment_text("name: x\nsystem: {base: {kind: nowhere}}\n"), experiment_error);
  std::string bad_check = product_text;
  bad_check.replace(bad_check.find("fiber_bound"), 11, "no_such_check");
  EXPECT_THROW(run_checks(parse_experiment_text(bad_check), RunOptions{}), std::exception);
}
