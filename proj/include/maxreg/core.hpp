#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace maxreg {

inline constexpr int max_dim = 4;

using Ivec = std::array<int, max_dim>;    // per-axis indices / offsets
using Dvec = std::array<double, max_dim>; // per-axis reals

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

// 17 significant digits: lossless double round trip.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Neumaier-compensated sum; reference accumulator for independent recomputation.
struct Kahan {
  double s = 0.0, c = 0.0;
  void add(double v) {
    double t = s + v;
    if (std::abs(s) >= std::abs(v))
      c += (s - t) + v;
    else
      c += (v - t) + s;
    s = t;
  }
  double get() const { return s + c; }
};

inline double compensated_sum(std::span<const double> vs) {
  Kahan k;
  for (double v : vs) k.add(v);
  return k.get();
}

// Exact sum of doubles via nonoverlapping expansions (Shewchuk); the result is
// the correctly rounded real sum, independent of input order. Test-grade tool,
// not used on throughput paths.
struct ExactAcc {
  std::vector<double> parts;
  void add(double v) {
    std::size_t n = 0;
    for (double p : parts) {
      double hi = v + p;
      double bv = hi - v;
      double err = (v - (hi - bv)) + (p - bv);
      if (err != 0.0) parts[n++] = err;
      v = hi;
    }
    parts.resize(n);
    parts.push_back(v);
  }
  double get() const {
    double s = 0.0;
    for (double p : parts) s += p; // nonoverlapping, ascending
    return s;
  }
};

inline double exact_sum(std::span<const double> vs) {
  ExactAcc a;
  for (double v : vs) a.add(v);
  return a.get();
}

// Static-chunk data parallelism over [0, n). Deterministic: workers own
// disjoint ranges and never reduce across chunks.
inline void parallel_for(std::int64_t n, int threads,
                         const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (n <= 0) return;
  if (threads <= 0) threads = 1;
  if (threads == 1 || n < 4096) {
    body(0, n);
    return;
  }
  std::int64_t chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    std::int64_t lo = t * chunk, hi = std::min<std::int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

inline int default_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(std::min(hc, 16u));
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    require(pos == s.size(), "trailing junk in " + what + ": '" + s + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail("cannot parse " + what + ": '" + s + "'");
  }
}

inline long parse_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    require(pos == s.size(), "trailing junk in " + what + ": '" + s + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail("cannot parse " + what + ": '" + s + "'");
  }
}

} // namespace maxreg
