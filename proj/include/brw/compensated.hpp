#pragma once

#include <complex>
#include <span>

namespace brw {

/// Error-free transformation a + b = s + e (Knuth TwoSum, branch free).
inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bp = s - a;
  e = (a - (s - bp)) + (b - bp);
}

/// Running sum with a separate error term.
class CompensatedSum {
 public:
  void add(double x) {
    double e;
    two_sum(sum_, x, sum_, e);
    err_ += e;
  }
  double value() const { return sum_ + err_; }

 private:
  double sum_ = 0.0;
  double err_ = 0.0;
};

class CompensatedComplexSum {
 public:
  void add(std::complex<double> z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  std::complex<double> value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_;
  CompensatedSum im_;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

}  // namespace brw
