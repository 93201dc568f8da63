#pragma once

#include "maxreg/grid.hpp"

namespace maxreg {

// Summed-area tables for O(1) sums over index boxes, honouring the function's
// extension rule outside the grid. Zero extension clips the box; constant
// extension decomposes each axis into (below, core, above) segments, which
// turns a query into a weighted sum over boundary-face tables: one table per
// assignment of {free, low, high} to each axis. Accumulation in long double,
// per-axis cumulative passes.
class BoxSummer {
public:
  BoxSummer(const GridFunction& f) : grid_(f.grid), ext_(f.extension) {
    int npat = 1;
    for (int a = 0; a < grid_.dim; ++a) npat *= 3;
    pats_.resize(static_cast<std::size_t>(ext_ == Extension::Clamp ? npat : 1));
    for (int p = 0; p < static_cast<int>(pats_.size()); ++p) build_pattern(f, p);
  }

  // Inclusive index box [lo, hi] in grid coordinates; indices may run outside
  // the grid. Returns the sum of extended values over every lattice point.
  long double box_sum(const Ivec& lo, const Ivec& hi) const {
    int d = grid_.dim;
    Ivec clo{}, chi{}, nneg{}, npos{};
    bool interior = true, core_ok = true;
    for (int a = 0; a < d; ++a) {
      int n = grid_.counts[a];
      if (lo[a] > hi[a]) return 0.0;
      clo[a] = std::max(lo[a], 0);
      chi[a] = std::min(hi[a], n - 1);
      nneg[a] = std::max(0, std::min(hi[a], -1) - lo[a] + 1);
      npos[a] = std::max(0, hi[a] - std::max(lo[a], n) + 1);
      interior = interior && nneg[a] == 0 && npos[a] == 0;
      core_ok = core_ok && clo[a] <= chi[a];
    }
    if (interior || ext_ == Extension::Zero)
      return core_ok ? prefix_box(pats_[0], clo, chi) : 0.0;

    long double total = 0.0;
    int npat = static_cast<int>(pats_.size());
    for (int combo = 0; combo < npat; ++combo) {
      long double w = 1.0;
      int digits = combo;
      bool skip = false;
      for (int a = 0; a < d; ++a) {
        int st = digits % 3;
        digits /= 3;
        if (st == 0) {
          if (clo[a] > chi[a]) skip = true;
        } else {
          int cnt = st == 1 ? nneg[a] : npos[a];
          if (cnt == 0) skip = true;
          w *= cnt;
        }
        if (skip) break;
      }
      if (skip) continue;
      total += w * prefix_box(pats_[static_cast<std::size_t>(combo)], clo, chi);
    }
    return total;
  }

private:
  struct Pattern {
    std::vector<long double> data;
    std::array<int, max_dim> fsize{};          // sizes over free axes
    std::array<std::int64_t, max_dim> stride{};
    std::array<int, max_dim> faxes{};          // which grid axes are free
    int nfree = 0;
  };

  void build_pattern(const GridFunction& f, int id) {
    Pattern& pat = pats_[static_cast<std::size_t>(id)];
    int d = grid_.dim;
    Ivec pin{};
    std::array<bool, max_dim> free{};
    int digits = id;
    for (int a = 0; a < d; ++a) {
      int st = digits % 3;
      digits /= 3;
      free[a] = st == 0;
      pin[a] = st == 2 ? grid_.counts[a] - 1 : 0;
      if (free[a]) {
        pat.faxes[pat.nfree] = a;
        pat.fsize[pat.nfree] = grid_.counts[a];
        ++pat.nfree;
      }
    }
    std::int64_t total = 1;
    for (int i = pat.nfree - 1; i >= 0; --i) {
      pat.stride[i] = total;
      total *= pat.fsize[i];
    }
    pat.data.assign(static_cast<std::size_t>(total), 0.0L);

    // copy slice
    Ivec iv = pin;
    for (std::int64_t flat = 0; flat < total; ++flat) {
      std::int64_t rem = flat;
      for (int i = 0; i < pat.nfree; ++i) {
        iv[pat.faxes[i]] = static_cast<int>(rem / pat.stride[i]);
        rem %= pat.stride[i];
      }
      pat.data[static_cast<std::size_t>(flat)] = f.at(iv);
    }
    // cumulative along each free axis
    for (int i = 0; i < pat.nfree; ++i) {
      std::int64_t s = pat.stride[i];
      int n = pat.fsize[i];
      for (std::int64_t base = 0; base < total; ++base) {
        std::int64_t pos = (base / s) % n;
        if (pos == 0) continue;
        pat.data[static_cast<std::size_t>(base)] += pat.data[static_cast<std::size_t>(base - s)];
      }
    }
  }

  // Inclusion-exclusion over the pattern's free axes; collapsed axes ignored.
  long double prefix_box(const Pattern& pat, const Ivec& lo, const Ivec& hi) const {
    long double sum = 0.0;
    int terms = 1 << pat.nfree;
    for (int mask = 0; mask < terms; ++mask) {
      std::int64_t idx = 0;
      int sign = 1;
      bool zero = false;
      for (int i = 0; i < pat.nfree; ++i) {
        int a = pat.faxes[i];
        int pos = (mask >> i) & 1 ? lo[a] - 1 : hi[a];
        if (pos < 0) {
          zero = true;
          break;
        }
        if ((mask >> i) & 1) sign = -sign;
        idx += pos * pat.stride[i];
      }
      if (zero) continue;
      sum += sign * pat.data[static_cast<std::size_t>(idx)];
    }
    return sum;
  }

  Grid grid_;
  Extension ext_;
  std::vector<Pattern> pats_;
};

} // namespace maxreg
