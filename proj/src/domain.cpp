#include "esgain/domain.hpp"

#include <cmath>
#include <functional>

#include "esgain/error.hpp"

namespace esgain {

Domain::Domain(std::vector<Interval> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw InvalidArgument("domain needs at least one axis");
  for (const Interval& iv : axes_) {
    if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw InvalidArgument("domain interval must satisfy lo < hi");
  }
}

bool Domain::contains(const Domain& other) const {
  if (other.dim() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (other.axis(i).lo < axis(i).lo || other.axis(i).hi > axis(i).hi) return false;
  }
  return true;
}

namespace {

struct Best {
  double score;
  std::vector<double> at;
};

// Maximizes `score` over the box: full grid, then golden-section sweeps along
// each axis inside one grid cell of the winner.
Best grid_search(const std::function<double(std::span<const double>)>& score,
                 const Domain& dom, ScanOptions opts, std::vector<double>& spacing) {
  const int dim = dom.dim();
  const std::size_t n = opts.samples ? opts.samples : (dim == 1 ? 20001 : 1001);
  if (n < 2) throw InvalidArgument("scan needs at least two samples per axis");
  spacing.assign(static_cast<std::size_t>(dim), 0.0);
  for (int i = 0; i < dim; ++i)
    spacing[i] = (dom.axis(i).hi - dom.axis(i).lo) / static_cast<double>(n - 1);

  std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
  std::vector<double> p(static_cast<std::size_t>(dim));
  Best best{-INFINITY, {}};
  for (;;) {
    for (int i = 0; i < dim; ++i) {
      p[i] = idx[i] + 1 == n ? dom.axis(i).hi
                             : dom.axis(i).lo + spacing[i] * static_cast<double>(idx[i]);
    }
    const double s = score(p);
    if (!std::isfinite(s)) throw OverflowError("non-finite sample during domain scan");
    if (s > best.score) best = {s, p};
    int k = 0;
    while (k < dim && ++idx[k] == n) idx[k++] = 0;
    if (k == dim) break;
  }

  if (!opts.refine) return best;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (int axis = 0; axis < dim; ++axis) {
      double lo = std::max(dom.axis(axis).lo, best.at[axis] - spacing[axis]);
      double hi = std::min(dom.axis(axis).hi, best.at[axis] + spacing[axis]);
      std::vector<double> q = best.at;
      auto at = [&](double v) {
        q[axis] = v;
        return score(q);
      };
      double c = hi - invphi * (hi - lo), d = lo + invphi * (hi - lo);
      double fc = at(c), fd = at(d);
      for (int it = 0; it < 80 && hi - lo > 1e-15 * (1.0 + std::fabs(lo)); ++it) {
        if (fc > fd) {
          hi = d;
          d = c;
          fd = fc;
          c = hi - invphi * (hi - lo);
          fc = at(c);
        } else {
          lo = c;
          c = d;
          fc = fd;
          d = lo + invphi * (hi - lo);
          fd = at(d);
        }
      }
      const double v = fc > fd ? c : d;
      const double fv = std::max(fc, fd);
      if (std::isfinite(fv) && fv > best.score) {
        best.score = fv;
        best.at[axis] = v;
      }
    }
  }
  return best;
}

void check_dims(const Expr& e, const Domain& dom) {
  if (e.max_variable() >= dom.dim())
    throw InvalidArgument("expression uses more variables than the domain has axes");
}

}  // namespace

SupNorm scan_supnorm(const Expr& e, const Domain& dom, ScanOptions opts) {
  check_dims(e, dom);
  SupNorm out;
  Best b = grid_search([&](std::span<const double> p) { return std::fabs(eval_unchecked(e, p)); },
                       dom, opts, out.spacing);
  out.value = b.score;
  out.argmax = std::move(b.at);
  return out;
}

std::vector<double> scan_argmin(const Expr& e, const Domain& dom, ScanOptions opts) {
  check_dims(e, dom);
  std::vector<double> spacing;
  return grid_search([&](std::span<const double> p) { return -eval_unchecked(e, p); }, dom, opts,
                     spacing)
      .at;
}

}  // namespace esgain
