#include "flowlab/quadrature.hpp"

#include <cmath>

#include "flowlab/errors.hpp"

namespace flowlab {

namespace {

struct Simpson {
  const std::function<double(double)>& f;
  const QuadratureOptions& opt;
  QuadratureResult& out;

  double eval(double x) {
    ++out.evaluations;
    return f(x);
  }

  // Returns false once the running total passes the cap.
  bool refine(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = eval(lm);
    const double frm = eval(rm);
    if (!std::isfinite(flm) || !std::isfinite(frm)) return false;
    const double h = b - a;
    const double left = h / 12.0 * (fa + 4.0 * flm + fm);
    const double right = h / 12.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    const double accept = std::max(tol, opt.rel_tol * std::abs(left + right));
    if (depth >= opt.max_depth || std::abs(delta) <= 15.0 * accept) {
      out.value += left + right + delta / 15.0;
      out.error_estimate += std::abs(delta) / 15.0;
      return out.value <= opt.cap;
    }
    if (!refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)) return false;
    return refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace

QuadratureResult integrate_nonnegative(const std::function<double(double)>& f, double a, double b,
                                       const QuadratureOptions& options) {
  if (!(b >= a)) throw Error(ErrorCode::InvalidArgument, "integration bounds out of order");
  QuadratureResult out;
  if (b == a) return out;
  const double len = b - a;
  const long panels = std::max(1L, static_cast<long>(std::ceil(len / options.max_panel)));
  const double width = len / static_cast<double>(panels);
  Simpson s{f, options, out};
  double fa = s.eval(a);
  for (long i = 0; i < panels; ++i) {
    const double pa = a + width * static_cast<double>(i);
    const double pb = i + 1 == panels ? b : a + width * static_cast<double>(i + 1);
    const double fm = s.eval(0.5 * (pa + pb));
    const double fb = s.eval(pb);
    if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb)) {
      out.capped = true;
      return out;
    }
    const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol = options.abs_tol * (pb - pa) / len;
    if (!s.refine(pa, pb, fa, fm, fb, whole, tol, 0)) {
      out.capped = true;
      return out;
    }
    fa = fb;
  }
  return out;
}

}  // namespace flowlab
