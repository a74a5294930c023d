#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "synlabel/parallel.hpp"
#include "synlabel/random.hpp"

using synlabel::Stream;

TEST(Stream, SameSeedSameSequence) {
  Stream a(7), b(7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.NextU64(), b.NextU64());
}

TEST(Stream, DeriveIgnoresParentCounter) {
  Stream a(11);
  const Stream fresh(11);
  for (int i = 0; i < 17; ++i) a.NextU64();
  Stream c1 = a.Derive(3), c2 = fresh.Derive(3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(c1.NextU64(), c2.NextU64());
}

TEST(Stream, ChildrenDiffer) {
  const Stream root(1);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t k = 0; k < 1000; ++k) firsts.insert(root.Derive(k).NextU64());
  EXPECT_EQ(firsts.size(), 1000u);
  EXPECT_EQ(root.Derive({2, 5}).key(), root.Derive(2).Derive(5).key());
}

TEST(Stream, UniformMoments) {
  Stream s(3);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  // Mean 1/2 with sd sqrt(1/12/n); variance 1/12.
  EXPECT_NEAR(sum / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 2e-3);
}

TEST(Stream, UniformIndexCoversRangeEvenly) {
  Stream s(5);
  const int n = 70000;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < n; ++i) {
    const auto k = s.UniformIndex(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  const double p = 1.0 / 7.0;
  for (int c : counts) EXPECT_NEAR(c / double(n), p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Stream, NormalMoments) {
  Stream s(9);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.Normal();
    ASSERT_TRUE(std::isfinite(z));
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 3.0 / std::sqrt(n));
  // Var of the sample second moment is 2/n.
  EXPECT_NEAR(sq / n, 1.0, 3.0 * std::sqrt(2.0 / n));
}

TEST(ParallelFor, ResultIndependentOfThreads) {
  auto run = [](std::size_t threads) {
    std::vector<std::uint64_t> out(500);
    const Stream root(42);
    synlabel::ParallelFor(out.size(), threads, [&](std::size_t i) {
      Stream s = root.Derive(i);
      out[i] = s.NextU64() ^ s.NextU64();
    });
    return out;
  };
  EXPECT_EQ(run(1), run(8));
}

TEST(ParallelFor, RethrowsWorkerException) {
  EXPECT_THROW(synlabel::ParallelFor(100, 4,
                                     [](std::size_t i) {
                                       if (i == 37) throw std::runtime_error("boom");
                                     }),
               std::runtime_error);
}
