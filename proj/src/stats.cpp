#include "taumlmc/stats.hpp"

#include <algorithm>
#include <cmath>

namespace taumlmc {

void Moments::add(double x) {
  Moments single;
  single.n_ = 1;
  single.mean_ = x;
  merge(single);
}

void Moments::merge(const Moments& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  const double delta_n = delta / n;
  const double delta_n2 = delta_n * delta_n;
  const double term = delta * delta_n * na * nb;  // delta^2 na nb / n

  const double m4 = m4_ + other.m4_ + term * delta_n2 * (na * na - na * nb + nb * nb) +
                    6.0 * delta_n2 * (na * na * other.m2_ + nb * nb * m2_) +
                    4.0 * delta_n * (na * other.m3_ - nb * m3_);
  const double m3 = m3_ + other.m3_ + term * delta_n * (na - nb) +
                    3.0 * delta_n * (na * other.m2_ - nb * m2_);
  const double m2 = m2_ + other.m2_ + term;

  mean_ += delta_n * nb;
  m2_ = m2;
  m3_ = m3;
  m4_ = m4;
  n_ += other.n_;
}

double Moments::variance() const noexcept {
  if (n_ < 2) return 0.0;
  return std::max(m2_, 0.0) / static_cast<double>(n_ - 1);
}

double Moments::fourth_central_moment() const noexcept {
  if (n_ == 0) return 0.0;
  return std::max(m4_, 0.0) / static_cast<double>(n_);
}

double Moments::variance_stderr() const noexcept {
  if (n_ < 4) return 0.0;
  const double n = static_cast<double>(n_);
  const double s2 = variance();
  const double v = (fourth_central_moment() - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
  return std::sqrt(std::max(v, 0.0));
}

double Moments::mean_stderr() const noexcept {
  if (n_ < 2) return 0.0;
  return std::sqrt(variance() / static_cast<double>(n_));
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

}  // namespace taumlmc
