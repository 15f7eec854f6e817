// fdcae/common.hpp

// Copyright 2026  f-DcAE lab authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdcae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow; identity element is kLogZero.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(const std::vector<double>& xs) {
  double acc = kLogZero;
  for (double x : xs) acc = log_add(acc, x);
  return acc;
}

inline double log_sum_exp(const Vector& xs) {
  double acc = kLogZero;
  for (int i = 0; i < xs.size(); ++i) acc = log_add(acc, xs(i));
  return acc;
}

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

// All randomness in the lab flows through explicitly seeded engines so that
// a run config plus a seed reproduces every artifact byte for byte.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Derive an independent stream from (seed, salt); used to decorrelate
/// per-utterance randomness from the ordering of generation.
inline Rng make_rng(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{seed, salt};
  return Rng(seq);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace fdcae
