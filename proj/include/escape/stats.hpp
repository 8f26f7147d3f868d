#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace escape {

struct Proportion {
  long count = 0;
  long n = 0;
  double freq() const { return n ? double(count) / double(n) : 0.0; }
  double stderr_() const;
  // Wald 95% interval, clipped to [0,1].
  double lo95() const;
  double hi95() const;
};

// (observed frequency - p) / sqrt(p(1-p)/n). Degenerate p (0 or 1) gives 0
// when the observation agrees exactly and +-inf otherwise.
double z_score(long count, long n, double p);

// z for a Monte Carlo mean against a target, given the sample.
double mean_z(const std::vector<double>& xs, double target);

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  int dof = 0;
};

// Kolmogorov limiting distribution with the Stephens small-sample correction.
double kolmogorov_q(double lambda);

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);
TestResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);

// Chi-square test of homogeneity on two categorical samples given as counts
// per label. Categories with a pooled expected count below min_expected in
// either sample are merged into one residual category.
TestResult chi2_homogeneity(const std::map<std::string, long>& a, const std::map<std::string, long>& b,
                            double min_expected = 5.0);

// Goodness of fit of observed counts to given probabilities, with the same pooling rule.
TestResult chi2_gof(const std::vector<long>& observed, const std::vector<double>& probs, double min_expected = 5.0);

}  // namespace escape
