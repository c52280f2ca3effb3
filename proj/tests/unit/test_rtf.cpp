#include <gtest/gtest.h>

#include "sib/error.h"
#include "sib/rtf.h"

namespace {

using namespace sib;
using namespace sib::sim;

TEST(Rtf, FromWindows) {
  const auto s = RtfSample::from_windows(10.0, 5.0);
  EXPECT_DOUBLE_EQ(s.rtf, 2.0);
  EXPECT_DOUBLE_EQ(s.window_sim, 10.0);
  EXPECT_DOUBLE_EQ(s.window_wall, 5.0);
  EXPECT_DOUBLE_EQ(RtfSample::from_windows(0.0, 1.0).rtf, 0.0);
  for (auto [sim, wall] : {std::pair{1.0, 0.0}, {1.0, -1.0}, {-1.0, 1.0}}) {
    try {
      RtfSample::from_windows(sim, wall);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidArgument);
    }
  }
}

TEST(Rtf, SummarizeMedian) {
  const std::vector<RtfSample> odd{RtfSample::from_windows(3, 1), RtfSample::from_windows(1, 1),
                                   RtfSample::from_windows(2, 1)};
  const auto r = summarize(7, odd);
  EXPECT_EQ(r.n_drones, 7);
  EXPECT_DOUBLE_EQ(r.rtf_median, 2.0);
  EXPECT_DOUBLE_EQ(r.rtf_min, 1.0);
  EXPECT_DOUBLE_EQ(r.rtf_max, 3.0);
  EXPECT_EQ(r.runs, 3);
  const std::vector<RtfSample> even{RtfSample::from_windows(4, 1), RtfSample::from_windows(1, 1)};
  EXPECT_DOUBLE_EQ(summarize(1, even).rtf_median, 2.5);
  EXPECT_THROW(summarize(1, {}), Error);
}

TEST(Rtf, CsvFormat) {
  BenchReport rep;
  rep.rows.push_back({1, 2.5, 2.0, 3.0, 5});
  rep.rows.push_back({10, 1.25, 1.0, 1.5, 5});
  EXPECT_EQ(to_csv(rep), "n,rtf_median,rtf_min,rtf_max,runs\n1,2.5000,2.0000,3.0000,5\n10,1.2500,1.0000,1.5000,5\n");
}

TEST(Rtf, BenchSortsAndDeduplicates) {
  const std::vector<int> counts{5, 1, 5, 2};
  const auto rep = run_bench(counts, 0.5, 2);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[0].n_drones, 1);
  EXPECT_EQ(rep.rows[1].n_drones, 2);
  EXPECT_EQ(rep.rows[2].n_drones, 5);
  for (const auto& r : rep.rows) {
    EXPECT_EQ(r.runs, 2);
    EXPECT_GT(r.rtf_median, 0.0);
    EXPECT_LE(r.rtf_min, r.rtf_median);
    EXPECT_LE(r.rtf_median, r.rtf_max);
  }
  EXPECT_THROW(run_bench(std::vector<int>{}, 1, 1), Error);
  EXPECT_THROW(run_bench(counts, 1, 0), Error);
}

TEST(Rtf, MeasureCoversRequestedWindow) {
  const auto s = measure_rtf(3, 1.0);
  EXPECT_NEAR(s.window_sim, 1.0, 1e-9);
  EXPECT_GT(s.window_wall, 0.0);
  EXPECT_THROW(measure_rtf(0, 1.0), Error);
  EXPECT_THROW(measure_rtf(1, 0.0), Error);
}

}  // namespace
