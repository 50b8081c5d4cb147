#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "ppf/checkpoint.hpp"
#include "ppf/datagen.hpp"
#include "ppf/error.hpp"
#include "ppf/io.hpp"
#include "ppf/neighborhood.hpp"
#include "test_util.hpp"

namespace ppf {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("ppf_io_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name, std::ios::binary) << text;
  }

  fs::path dir_;
};

using Io = TempDir;
using CheckpointIo = TempDir;

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(io::format_number(0.0), "0");
  EXPECT_EQ(io::format_number(-0.0), "0");
  EXPECT_EQ(io::format_number(12.0), "12");
  EXPECT_EQ(io::format_number(0.1), "0.1");
  test::Gen g(1);
  for (int t = 0; t < 1000; ++t) {
    const double v = g.normal() * std::pow(10.0, g.integer(-20, 20));
    EXPECT_EQ(std::stod(io::format_number(v)), v);
  }
}

TEST_F(Io, DatasetRoundTripIsExact) {
  SyntheticSpec spec;
  spec.n = 9;
  spec.days = 2;
  spec.view_dims = {3, 2};
  const SyntheticCity city = generate(spec);
  Dataset data{with_targets(city.catalog, {2, 7}), city.flows, city.views};
  data.flows[0].days[1](0, 1) = 1.0 / 3.0;

  const auto written = io::write_dataset(dir_, data);
  EXPECT_EQ(written.size(), 1u + 3 * 2 + 2);
  const Dataset back = io::read_dataset(dir_);
  EXPECT_EQ(back.catalog.ids, data.catalog.ids);
  EXPECT_EQ(back.catalog.known, data.catalog.known);
  for (std::size_t i = 0; i < data.catalog.size(); ++i) {
    EXPECT_EQ(back.catalog.coords[i].lat_deg, data.catalog.coords[i].lat_deg);
    EXPECT_EQ(back.catalog.coords[i].lon_deg, data.catalog.coords[i].lon_deg);
  }
  ASSERT_EQ(back.flows.size(), 3u);
  for (std::size_t p = 0; p < 3; ++p) {
    EXPECT_EQ(back.flows[p].period, data.flows[p].period);
    ASSERT_EQ(back.flows[p].days.size(), 2u);
    for (std::size_t d = 0; d < 2; ++d) EXPECT_EQ(back.flows[p].days[d], data.flows[p].days[d]);
  }
  ASSERT_EQ(back.views.size(), 2u);
  EXPECT_EQ(back.views.views[0].name, "economy");
  EXPECT_EQ(back.views.views[0].x, data.views.views[0].x);
  EXPECT_EQ(back.views.views[1].x, data.views.views[1].x);
}

TEST_F(Io, FlowMatrixInAnyOrder) {
  write("areas.csv", "id,lat,lon,known\nx,-33.8,151.2,1\ny,-33.9,151.1,0\n");
  write("flows_morning_1.csv", "id,y,x\ny,1,2\nx,3,4\n");
  const Dataset d = io::read_dataset(dir_);
  Matrix expected(2, 2);
  expected << 4, 3,
              2, 1;
  EXPECT_EQ(d.period(Period::MorningRush).last(), expected);
  EXPECT_EQ(d.catalog.known, (std::vector<bool>{true, false}));
}

TEST_F(Io, ErrorsNameFileAndLine) {
  write("areas.csv", "id,lat,lon,known\nx,-33.8,151.2,1\ny,-33.9,abc,1\n");
  try {
    io::read_catalog(dir_ / "areas.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("areas.csv:3"), std::string::npos) << e.what();
  }
}

TEST_F(Io, RejectsMalformedInput) {
  write("bad_header.csv", "id,lat,lon\n");
  EXPECT_THROW(io::read_catalog(dir_ / "bad_header.csv"), IoError);
  write("bad_known.csv", "id,lat,lon,known\na,0,0,2\n");
  EXPECT_THROW(io::read_catalog(dir_ / "bad_known.csv"), IoError);
  EXPECT_THROW(io::read_catalog(dir_ / "missing.csv"), IoError);

  write("areas.csv", "id,lat,lon,known\na,0,0,1\nb,0,1,1\n");
  const AreaCatalog cat = io::read_catalog(dir_ / "areas.csv");
  write("unknown_id.csv", "id,a,z\na,1,2\nb,3,4\n");
  EXPECT_THROW(io::read_flow_matrix(dir_ / "unknown_id.csv", cat), IoError);
  write("short_row.csv", "id,a,b\na,1\nb,3,4\n");
  EXPECT_THROW(io::read_flow_matrix(dir_ / "short_row.csv", cat), IoError);
  write("missing_row.csv", "id,a,b\na,1,2\n");
  EXPECT_THROW(io::read_flow_matrix(dir_ / "missing_row.csv", cat), IoError);
  write("repeat.csv", "id,a,a\na,1,2\nb,3,4\n");
  EXPECT_THROW(io::read_flow_matrix(dir_ / "repeat.csv", cat), IoError);
}

TEST_F(Io, DaysMustBeContiguous) {
  write("areas.csv", "id,lat,lon,known\na,0,0,1\nb,0,1,1\n");
  write("flows_morning_1.csv", "id,a,b\na,1,2\nb,3,4\n");
  write("flows_morning_3.csv", "id,a,b\na,1,2\nb,3,4\n");
  EXPECT_THROW(io::read_dataset(dir_), IoError);
}

TEST_F(Io, UnknownPeriodIsRejected) {
  write("areas.csv", "id,lat,lon,known\na,0,0,1\nb,0,1,1\n");
  write("flows_evening_1.csv", "id,a,b\na,1,2\nb,3,4\n");
  EXPECT_THROW(io::read_dataset(dir_), IoError);
}

TEST_F(Io, DuplicateCatalogIdsAreInvalid) {
  write("areas.csv", "id,lat,lon,known\na,0,0,1\na,0,1,1\n");
  write("flows_morning_1.csv", "id,a,a\na,1,2\na,3,4\n");
  EXPECT_THROW(io::read_dataset(dir_), InvalidInput);
}

struct Fitted {
  AreaCatalog catalog;
  FlowTensor flows;
  NeighborModel nbr;
  SolverConfig cfg;
  BidirectionalFit fit;
};

Fitted small_fit() {
  test::Gen g(4);
  Fitted f;
  f.catalog = g.catalog(7, 0.6, 3);
  f.flows = FlowTensor{Period::AfternoonRush, {g.count_matrix(7, 7, 30), g.count_matrix(7, 7, 30)}};
  const auto sim = build_similarity(f.catalog, ViewSet{});
  f.nbr = build_indicator(sim, f.catalog, 2);
  f.cfg.max_iter = 10;
  f.fit = fit_bidirectional(f.flows, sim, f.nbr, ViewSet{}, build_mask(f.catalog), f.cfg);
  return f;
}

TEST_F(CheckpointIo, RoundTripReproducesPrediction) {
  Fitted f = small_fit();
  f.cfg.rcond = 0.25;
  const Checkpoint ck = make_checkpoint(f.catalog, f.flows.period, f.cfg, f.nbr, f.fit);
  write_checkpoint(dir_ / "m.ckpt", ck);
  const Checkpoint back = read_checkpoint(dir_ / "m.ckpt");

  EXPECT_EQ(back.period, Period::AfternoonRush);
  EXPECT_EQ(back.ids, f.catalog.ids);
  EXPECT_EQ(back.known, f.catalog.known);
  EXPECT_EQ(back.config.rcond, 0.25);
  EXPECT_EQ(back.config.epsilon, 1e-4);
  EXPECT_EQ(back.h, f.nbr.h);
  EXPECT_EQ(back.departures.c, ck.departures.c);
  EXPECT_EQ(back.arrivals.w, ck.arrivals.w);
  EXPECT_EQ(back.arrivals.flows_last, ck.arrivals.flows_last);
  EXPECT_EQ(back.departures.report.losses, ck.departures.report.losses);
  EXPECT_EQ(back.departures.report.stop, ck.departures.report.stop);

  const Matrix completed = complete_from_checkpoint(back, f.catalog, f.flows.last());
  EXPECT_EQ(completed, f.fit.completed);
}

TEST_F(CheckpointIo, InfiniteEpsilonSurvives) {
  Fitted f = small_fit();
  f.cfg.epsilon = std::numeric_limits<double>::infinity();
  write_checkpoint(dir_ / "m.ckpt", make_checkpoint(f.catalog, f.flows.period, f.cfg, f.nbr, f.fit));
  EXPECT_TRUE(std::isinf(read_checkpoint(dir_ / "m.ckpt").config.epsilon));
}

TEST_F(CheckpointIo, DamagedFilesAreIoErrors) {
  const Fitted f = small_fit();
  const fs::path good = dir_ / "m.ckpt";
  write_checkpoint(good, make_checkpoint(f.catalog, f.flows.period, f.cfg, f.nbr, f.fit));
  std::ifstream in(good, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  write("magic.ckpt", "XX" + bytes.substr(2));
  EXPECT_THROW(read_checkpoint(dir_ / "magic.ckpt"), IoError);
  write("short.ckpt", bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(read_checkpoint(dir_ / "short.ckpt"), IoError);
  write("header.ckpt", bytes.substr(0, 40));
  EXPECT_THROW(read_checkpoint(dir_ / "header.ckpt"), IoError);
  std::string version = bytes;
  version[8] = 2;
  write("version.ckpt", version);
  EXPECT_THROW(read_checkpoint(dir_ / "version.ckpt"), IoError);
  EXPECT_THROW(read_checkpoint(dir_ / "absent.ckpt"), IoError);
}

TEST_F(CheckpointIo, CatalogMustMatch) {
  const Fitted f = small_fit();
  const Checkpoint ck = make_checkpoint(f.catalog, f.flows.period, f.cfg, f.nbr, f.fit);
  AreaCatalog other = f.catalog;
  other.known[0] = !other.known[0];
  EXPECT_THROW(complete_from_checkpoint(ck, other, f.flows.last()), InvalidInput);
  EXPECT_THROW(complete_from_checkpoint(ck, f.catalog, Matrix::Zero(3, 3)), InvalidInput);
}

}  // namespace
}  // namespace ppf
