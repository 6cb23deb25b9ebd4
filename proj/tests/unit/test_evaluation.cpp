#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "ltvstream/distributions.hpp"
#include "ltvstream/evaluation.hpp"
#include "../support/oracles.hpp"

using namespace ltvstream;
using doctest::Approx;

namespace {

RowViews views(const std::vector<std::vector<double>>& rows) {
  RowViews out;
  for (const auto& r : rows) out.emplace_back(r);
  return out;
}

}  // namespace

TEST_CASE("lppd") {
  const std::vector<std::vector<double>> one{{-1.5}};
  CHECK(lppd(views(one)).total == -1.5);
  const std::vector<std::vector<double>> two{{std::log(0.2), std::log(0.4)}};
  CHECK(lppd(views(two)).total == Approx(std::log(0.3)).epsilon(1e-12));
  CHECK(lppd(views(two)).total == Approx(-1.2039728).epsilon(1e-7));
  const std::vector<std::vector<double>> doubled{two[0], two[0]};
  CHECK(lppd(views(doubled)).total == 2.0 * lppd(views(two)).total);
}

TEST_CASE("lppd is stable for very negative log densities and flags empty mass") {
  const std::vector<std::vector<double>> far{{-1000.0, -1000.0 + std::log(3.0)}};
  CHECK(lppd(views(far)).total == Approx(-1000.0 + std::log(2.0)).epsilon(1e-12));
  const std::vector<std::vector<double>> dead{{-kInf, -kInf}, {-1.0}};
  const auto r = lppd(views(dead));
  CHECK(r.neg_inf_rows == std::vector<std::size_t>{0});
  CHECK(r.total == -kInf);
}

TEST_CASE("a better calibrated predictive never scores lower") {
  Rng rng(4);
  std::vector<double> y;
  for (int i = 0; i < 500; ++i) y.push_back(rng.normal());
  std::vector<std::vector<double>> right, wrong;
  for (double v : y) {
    right.push_back({logpdf_normal(v, 0.0, 1.0)});
    wrong.push_back({logpdf_normal(v, 1.5, 1.0)});
  }
  CHECK(lppd(views(right)).total > lppd(views(wrong)).total);
}

TEST_CASE("point errors") {
  auto e = point_errors(std::vector<double>{2}, std::vector<double>{2});
  CHECK(e.mae == 0.0);
  CHECK(e.rmse == 0.0);
  e = point_errors(std::vector<double>{1, 3}, std::vector<double>{2, 2});
  CHECK(e.mae == 1.0);
  CHECK(e.rmse == 1.0);
  e = point_errors(std::vector<double>{0, 4}, std::vector<double>{2, 2});
  CHECK(e.mae == 2.0);
  CHECK(e.rmse == 2.0);
  e = point_errors(std::vector<double>{0, 3}, std::vector<double>{0, 0});
  CHECK(e.mae == 1.5);
  CHECK(e.rmse == Approx(std::sqrt(4.5)));
  const std::vector<std::vector<double>> draws{{1, 3}, {2, 2}};
  CHECK(predictive_means(views(draws)) == std::vector<double>{2, 2});
  CHECK(point_errors(views(draws), std::vector<double>{2, 2}).mae == 0.0);
}

TEST_CASE("location fit") {
  const std::vector<std::vector<double>> fives{{5, 5, 5}, {5, 5, 5}};
  const auto a = location_fit(views(fives), std::vector<double>{4, 6});
  CHECK(a.predicted_location == 5.0);
  CHECK(a.actual_mean == 5.0);

  Rng rng(3);
  std::vector<std::vector<double>> cauchy(50);
  double draw_mean = 0.0;
  for (auto& row : cauchy) {
    for (int s = 0; s < 400; ++s) {
      row.push_back(sample_student_t({3.0, 1.0, 1.0}, rng));
      draw_mean += row.back();
    }
  }
  const auto b = location_fit(views(cauchy), std::vector<double>(50, 3.0));
  CHECK(std::abs(b.predicted_location - 3.0) < 0.2);

  const std::vector<std::vector<double>> ragged{{}, {7, 9}};
  const auto c = location_fit(views(ragged), std::vector<double>{0, 8});
  CHECK(c.excluded_rows == 1);
  CHECK(c.predicted_location == 8.0);
}

TEST_CASE("prequential tracker aggregates out-of-sample batches") {
  PrequentialTracker t;
  PrequentialRecord r1;
  r1.batch_index = 1;
  r1.rows = 10;
  r1.in_sample = true;
  r1.lppd = -5.0;
  r1.mae = 1.0;
  r1.rmse = 2.0;
  const auto a = t.add(r1);
  CHECK(a.cum_lppd == -5.0);
  CHECK(a.cum_mae == 1.0);

  PrequentialRecord r2 = r1;
  r2.batch_index = 2;
  r2.in_sample = false;
  r2.lppd = -7.0;
  r2.mae = 3.0;
  r2.rmse = 4.0;
  const auto b = t.add(r2);
  CHECK(b.cum_lppd == -7.0);
  CHECK(b.cum_mae == 3.0);
  CHECK(b.cum_rmse == 4.0);

  PrequentialRecord r3 = r2;
  r3.batch_index = 3;
  r3.rows = 30;
  r3.lppd = -1.0;
  r3.mae = 1.0;
  r3.rmse = 0.0;
  const auto c = t.add(r3);
  CHECK(c.cum_lppd == -8.0);
  CHECK(c.cum_mae == Approx((3.0 * 10 + 1.0 * 30) / 40));
  CHECK(c.cum_rmse == Approx(std::sqrt((16.0 * 10 + 0.0) / 40)));
}

TEST_CASE("metrics file round trip") {
  std::ostringstream os;
  {
    MetricsWriter w(os);
    PrequentialRecord r;
    r.batch_index = 1;
    r.rows = 3;
    r.in_sample = true;
    r.lppd = -1.25;
    r.mae = 0.1;
    r.rmse = 1.0 / 3.0;
    r.pred_location = 1e-300;
    r.actual_mean = 12345.678;
    r.divergences = 4;
    r.cum_lppd = -1.25;
    w.write(r);
  }
  const std::string text = os.str();
  CHECK(text.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
  std::istringstream is(text);
  const auto back = read_metrics(is);
  REQUIRE(back.size() == 1);
  CHECK(back[0].batch_index == 1);
  CHECK(back[0].in_sample);
  CHECK(back[0].rmse == 1.0 / 3.0);
  CHECK(back[0].pred_location == 1e-300);
  CHECK(back[0].divergences == 4);
}

TEST_CASE("format_double is the shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(-kInf) == "-inf");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
