#pragma once
// Small shared pieces: fixed-capacity runtime-dimension vectors (n = 2 or 3),
// error types, deterministic RNG, Gauss-Legendre rules, stable float printing,
// and an index-deterministic parallel loop.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>
#include <random>

namespace divsolve {

inline constexpr int kMaxDim = 3;

struct Vec {
  int n = 2;
  std::array<double, kMaxDim> c{0.0, 0.0, 0.0};

  Vec() = default;
  Vec(double x, double y) : n(2), c{x, y, 0.0} {}
  Vec(double x, double y, double z) : n(3), c{x, y, z} {}
  static Vec zero(int dim) {
    Vec v;
    v.n = dim;
    return v;
  }

  double& operator[](int i) { return c[static_cast<size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<size_t>(i)]; }
};

inline Vec operator+(const Vec& a, const Vec& b) {
  Vec r = a;
  for (int i = 0; i < a.n; ++i) r[i] += b[i];
  return r;
}
inline Vec operator-(const Vec& a, const Vec& b) {
  Vec r = a;
  for (int i = 0; i < a.n; ++i) r[i] -= b[i];
  return r;
}
inline Vec operator*(double s, const Vec& a) {
  Vec r = a;
  for (int i = 0; i < a.n; ++i) r[i] *= s;
  return r;
}
inline Vec& operator+=(Vec& a, const Vec& b) {
  for (int i = 0; i < a.n; ++i) a[i] += b[i];
  return a;
}
inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < a.n; ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline double dist(const Vec& a, const Vec& b) { return norm(a - b); }
inline bool operator==(const Vec& a, const Vec& b) {
  if (a.n != b.n) return false;
  for (int i = 0; i < a.n; ++i)
    if (a[i] != b[i]) return false;
  return true;
}
// Strict lexicographic order on coordinates; used for deterministic tie-breaks.
inline bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.n; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BasePointOutside : Error { using Error::Error; };
struct RootNotCovered : Error { using Error::Error; };
struct DisconnectedComplex : Error { using Error::Error; };
struct OutsideDecomposition : Error { using Error::Error; };
struct DegeneratePath : Error { using Error::Error; };
struct AtomCoincidence : Error { using Error::Error; };
struct ZeroSumViolated : Error { using Error::Error; };
struct DominationViolated : Error { using Error::Error; };
struct DiagonalEvaluation : Error { using Error::Error; };
struct SkinViolation : Error { using Error::Error; };
struct EmptyZeroSet : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(uint64_t seed) : eng(seed) {}
  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(eng);
  }
  uint64_t below(uint64_t m) {
    return std::uniform_int_distribution<uint64_t>(0, m - 1)(eng);
  }
  Vec point_in_box(const Vec& lo, const Vec& hi) {
    Vec p = Vec::zero(lo.n);
    for (int i = 0; i < lo.n; ++i) p[i] = uniform(lo[i], hi[i]);
    return p;
  }
};

// Gauss-Legendre rule on [-1,1], nodes by Newton iteration on P_m.
struct GaussRule {
  std::vector<double> x, w;
  explicit GaussRule(int m) {
    x.resize(static_cast<size_t>(m));
    w.resize(static_cast<size_t>(m));
    const int half = (m + 1) / 2;
    for (int i = 0; i < half; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (m + 0.5));
      double pp = 0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < m; ++j) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        pp = m * (z * p0 - p1) / (z * z - 1.0);
        double dz = p0 / pp;
        z -= dz;
        if (std::abs(dz) < 1e-15) break;
      }
      x[static_cast<size_t>(i)] = -z;
      x[static_cast<size_t>(m - 1 - i)] = z;
      w[static_cast<size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
      w[static_cast<size_t>(m - 1 - i)] = w[static_cast<size_t>(i)];
    }
  }
  // integrate f over [a,b]
  template <class F>
  auto integrate(double a, double b, const F& f) const {
    const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
    auto acc = f(mid + hw * x[0]);
    acc = w[0] * hw * acc;
    for (size_t i = 1; i < x.size(); ++i) {
      auto v = f(mid + hw * x[i]);
      acc = acc + (w[i] * hw) * v;
    }
    return acc;
  }
};

// Shortest stable decimal form that round-trips a double.
inline std::string fmt_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Parallel loop over [0,count). Each index writes only its own slots, so the
// result is independent of scheduling.
inline void parallel_for(size_t count, const std::function<void(size_t)>& body) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw < 2 || count < 32) {
    for (size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const unsigned nthreads = std::min<unsigned>(hw, 16);
  std::vector<std::thread> pool;
  std::atomic<size_t> next{0};
  const size_t chunk = std::max<size_t>(1, count / (nthreads * 8));
  for (unsigned t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        size_t start = next.fetch_add(chunk);
        if (start >= count) return;
        size_t stop = std::min(count, start + chunk);
        for (size_t i = start; i < stop; ++i) body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace divsolve
