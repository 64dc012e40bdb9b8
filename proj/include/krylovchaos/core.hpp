#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace krylovchaos {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

template <class Scalar>
using VectorOf = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatrixOf = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Error hierarchy. The CLI maps ArgumentError/ResourceError to exit code 1
// and NumericalError (and its subclasses) to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrumError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Warning sink used by long-running routines. Defaults to stderr; tests and
/// tools may replace it.
inline std::function<void(std::string_view)>& warning_sink() {
  static std::function<void(std::string_view)> sink = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return sink;
}

inline void warn(std::string_view msg) {
  if (auto& sink = warning_sink()) sink(msg);
}

/// splitmix64 finalizer; the building block of counter-based seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent seed from a master seed and a tuple of counters.
/// The result depends only on the values, never on evaluation order, so
/// parallel schedules reproduce serial output.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ArgumentError(msg);
}

}  // namespace krylovchaos
