// Library walk-through on the bundled sample files.
//   demo <samples/data directory>

#include <cstdio>
#include <string>

#include "robust/covariance.hpp"
#include "robust/csv.hpp"
#include "robust/pca.hpp"
#include "robust/regression.hpp"
#include "robust/univariate.hpp"

using namespace robust;

static MatrixXd load(const std::string& path) {
  const auto t = csv::read_file(path);
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < t.names.size(); ++j) cols.push_back(j);
  return csv::numeric(t, cols);
}

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "samples/data";
  try {
    const MatrixXd m = load(dir + "/measurements.csv");
    const std::vector<double> x(m.data(), m.data() + m.rows());
    std::printf("measurements: mean %.3f  median %.3f  sd %.3f  MAD %.4f  Qn %.4f\n", mean(x), median(x),
                stdev(x), mad(x), qn(x));
    const auto rs = robust_scores(x);
    for (std::size_t i = 0; i < x.size(); ++i)
      std::printf("  x%zu = %6.2f  robust score %9.2f%s\n", i + 1, x[i], rs.scores[i], rs.flagged[i] ? "  <-" : "");

    const MatrixXd b = load(dir + "/masking.csv");
    const auto dd = dd_plot_data(b, classical_moments(b), fast_mcd(b));
    std::printf("\nmasking: cutoff %.3f\n", dd.cutoff);
    for (Index i = 0; i < b.rows(); ++i)
      if (dd.rd_flags[static_cast<std::size_t>(i)])
        std::printf("  row %2ld  MD %.2f  RD %.2f\n", static_cast<long>(i + 1), dd.md(i), dd.rd(i));

    const MatrixXd s = load(dir + "/stars.csv");
    RegressionData data{s.leftCols(1), s.col(1), true};
    const auto ls = least_squares(data);
    const auto lts = reweighted_ls(data, fast_lts(data));
    std::printf("\nstars: LS slope %.3f, reweighted LTS slope %.3f, %ld cases kept\n", ls.beta(1), lts.beta(1),
                static_cast<long>(lts.h));

    const MatrixXd p = load(dir + "/plane.csv");
    const auto rob = robust_pca(p, 2);
    const auto cls = classical_pca(p, 2);
    MatrixXd plane = MatrixXd::Zero(3, 2);
    plane(0, 0) = plane(1, 1) = 1.0;
    std::printf("\nplane: angle to the true plane, robust %.2f deg, classical %.2f deg\n",
                principal_angle(rob.loadings, plane) * 57.29577951308232,
                principal_angle(cls.loadings, plane) * 57.29577951308232);
  } catch (const Error& e) {
    std::fprintf(stderr, "demo: %s\n", e.what());
    return 1;
  }
  return 0;
}
