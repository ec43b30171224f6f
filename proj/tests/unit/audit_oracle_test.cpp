#include <gtest/gtest.h>

#include <chrono>

#include "oracles/audit_oracle.hpp"

using namespace qta;

TEST(AuditOracle, RandomCorporaAgreeWithBruteForce) {
  const auto started = std::chrono::steady_clock::now();
  const auto run = oracle::run_oracle_comparison(120, 20240613);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  EXPECT_EQ(run.corpora, 120u);
  EXPECT_LE(run.max_corpus_bytes, 5000u);
  for (const auto& d : run.disagreements) ADD_FAILURE() << d;
  for (const auto& s : run.span_problems) ADD_FAILURE() << "bad evidence span: " << s;
  EXPECT_LT(secs, 60.0);
  // Every verdict class must actually be exercised.
  for (auto v : {audit::Verdict::verbatim, audit::Verdict::modified_ellipsis, audit::Verdict::modified_edit,
                 audit::Verdict::fabricated}) {
    EXPECT_GT(run.seen.at(v), 10u) << audit::to_string(v);
  }
}

TEST(AuditOracle, OracleAgreesOnHandCases) {
  const std::vector<std::u32string> docs = {U"alpha beta gamma delta"};
  audit::Thresholds t;
  EXPECT_EQ(oracle::oracle(U"Beta gamma", docs, t), audit::Verdict::verbatim);
  EXPECT_EQ(oracle::oracle(U"alpha ... delta", docs, t), audit::Verdict::modified_ellipsis);
  EXPECT_EQ(oracle::oracle(U"alpha betx gamma", docs, t), audit::Verdict::modified_edit);
  EXPECT_EQ(oracle::oracle(U"zzz yyy xxx", docs, t), audit::Verdict::fabricated);
}
