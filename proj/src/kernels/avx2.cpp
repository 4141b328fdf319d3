// AVX2 + FMA kernels. Compiled with -mavx2 -mfma; only reached through the
// dispatch table after a CPUID check.

#include <immintrin.h>

#include <array>
#include <cmath>
#include <cstring>
#include <numbers>
#include <vector>

#include "brw/compensated.hpp"
#include "brw/kernels/kernels.hpp"

namespace brw::kernels {

namespace {

using V = __m256d;
constexpr std::size_t kLanes = 4;
constexpr std::size_t kBlock = 1024;

inline V set1(double x) { return _mm256_set1_pd(x); }

// Exact conversion of unsigned 64-bit integers below 2^54 to double.
inline V u64_to_double(__m256i v) {
  const __m256i mask52 = _mm256_set1_epi64x((std::int64_t{1} << 52) - 1);
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000);  // 2^52 as a double
  const V two52 = set1(0x1.0p52);
  const __m256i lo = _mm256_and_si256(v, mask52);
  const __m256i hi = _mm256_srli_epi64(v, 52);
  const V dlo = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(lo, magic)), two52);
  const V dhi = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(hi, magic)), two52);
  return _mm256_fmadd_pd(dhi, two52, dlo);
}

// exp(x) on [-708, 709.78]; 0 below, +inf above. Cody-Waite reduction by
// ln 2 followed by a degree-13 Taylor polynomial on |r| <= ln2/2.
inline V exp4(V x) {
  constexpr double log2e = 1.4426950408889634;
  constexpr double ln2_hi = 0.6931471803691238;
  constexpr double ln2_lo = 1.9082149292705877e-10;
  const V lo_mask = _mm256_cmp_pd(x, set1(-708.0), _CMP_LT_OQ);
  const V hi_mask = _mm256_cmp_pd(x, set1(709.78), _CMP_GT_OQ);
  const V xc = _mm256_min_pd(_mm256_max_pd(x, set1(-708.0)), set1(709.78));

  const V n = _mm256_round_pd(_mm256_mul_pd(xc, set1(log2e)), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  V r = _mm256_fnmadd_pd(n, set1(ln2_hi), xc);
  r = _mm256_fnmadd_pd(n, set1(ln2_lo), r);

  static constexpr std::array<double, 14> c = {
      1.0,
      1.0,
      1.0 / 2,
      1.0 / 6,
      1.0 / 24,
      1.0 / 120,
      1.0 / 720,
      1.0 / 5040,
      1.0 / 40320,
      1.0 / 362880,
      1.0 / 3628800,
      1.0 / 39916800,
      1.0 / 479001600,
      1.0 / 6227020800.0,
  };
  V p = set1(c[13]);
  for (int k = 12; k >= 0; --k) p = _mm256_fmadd_pd(p, r, set1(c[static_cast<std::size_t>(k)]));

  // 2^n via the exponent field; n is within [-1022, 1024] after clamping.
  // The scale is split in two so n = 1024 does not overflow the exponent field.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i half64 = _mm256_cvtepi32_epi64(_mm_srai_epi32(n32, 1));
  const __m256i rest = _mm256_sub_epi64(n64, half64);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const V s1 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(half64, bias), 52));
  const V s2 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(rest, bias), 52));
  V y = _mm256_mul_pd(_mm256_mul_pd(p, s1), s2);

  y = _mm256_blendv_pd(y, _mm256_setzero_pd(), lo_mask);
  y = _mm256_blendv_pd(y, set1(HUGE_VAL), hi_mask);
  // NaN in, NaN out.
  const V nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  return _mm256_blendv_pd(y, x, nan_mask);
}

// Natural log for positive normal inputs via
// log m = 2 atanh((m-1)/(m+1)), m in [sqrt(1/2), sqrt(2)).
inline V log4(V x) {
  constexpr double ln2_hi = 0.6931471803691238;
  constexpr double ln2_lo = 1.9082149292705877e-10;
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFF);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000);
  V m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  V e = _mm256_sub_pd(u64_to_double(_mm256_srli_epi64(bits, 52)), set1(1023.0));

  const V big = _mm256_cmp_pd(m, set1(std::numbers::sqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, set1(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, set1(1.0)));

  const V t = _mm256_div_pd(_mm256_sub_pd(m, set1(1.0)), _mm256_add_pd(m, set1(1.0)));
  const V t2 = _mm256_mul_pd(t, t);
  // sum_{k=0}^{10} t^(2k) / (2k+1)
  V p = set1(1.0 / 21);
  for (int k = 9; k >= 0; --k) p = _mm256_fmadd_pd(p, t2, set1(1.0 / (2 * k + 1)));
  const V logm = _mm256_mul_pd(_mm256_mul_pd(set1(2.0), t), p);

  V y = _mm256_fmadd_pd(e, set1(ln2_lo), logm);
  y = _mm256_fmadd_pd(e, set1(ln2_hi), y);
  return y;
}

// sin and cos with a three-part Cody-Waite reduction by pi/2. Lanes with
// |x| > 2^20 * pi/2 fall back to libm for the whole vector.
inline void sincos4(V x, V& s_out, V& c_out) {
  constexpr double two_over_pi = 0.6366197723675814;
  constexpr double pio2_1 = 1.5707963267341256;
  constexpr double pio2_2 = 6.077100506303966e-11;
  constexpr double pio2_3 = 2.0222662487959506e-21;

  const V ax = _mm256_andnot_pd(set1(-0.0), x);
  if (_mm256_movemask_pd(_mm256_cmp_pd(ax, set1(1.6e6), _CMP_NLE_UQ)) != 0) {
    alignas(32) double tmp[kLanes], ss[kLanes], cc[kLanes];
    _mm256_store_pd(tmp, x);
    for (std::size_t i = 0; i < kLanes; ++i) {
      ss[i] = std::sin(tmp[i]);
      cc[i] = std::cos(tmp[i]);
    }
    s_out = _mm256_load_pd(ss);
    c_out = _mm256_load_pd(cc);
    return;
  }

  const V q = _mm256_round_pd(_mm256_mul_pd(x, set1(two_over_pi)), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  V r = _mm256_fnmadd_pd(q, set1(pio2_1), x);
  r = _mm256_fnmadd_pd(q, set1(pio2_2), r);
  r = _mm256_fnmadd_pd(q, set1(pio2_3), r);
  const V r2 = _mm256_mul_pd(r, r);

  // sin r = r * sum_{k=0}^{8} (-1)^k r^(2k) / (2k+1)!
  static constexpr std::array<double, 9> sc = {
      1.0,
      -1.0 / 6,
      1.0 / 120,
      -1.0 / 5040,
      1.0 / 362880,
      -1.0 / 39916800,
      1.0 / 6227020800.0,
      -1.0 / 1307674368000.0,
      1.0 / 355687428096000.0,
  };
  // cos r = sum_{k=0}^{9} (-1)^k r^(2k) / (2k)!
  static constexpr std::array<double, 10> cc = {
      1.0,
      -1.0 / 2,
      1.0 / 24,
      -1.0 / 720,
      1.0 / 40320,
      -1.0 / 3628800,
      1.0 / 479001600,
      -1.0 / 87178291200.0,
      1.0 / 20922789888000.0,
      -1.0 / 6402373705728000.0,
  };
  V ps = set1(sc[8]);
  for (int k = 7; k >= 0; --k) ps = _mm256_fmadd_pd(ps, r2, set1(sc[static_cast<std::size_t>(k)]));
  ps = _mm256_mul_pd(ps, r);
  V pc = set1(cc[9]);
  for (int k = 8; k >= 0; --k) pc = _mm256_fmadd_pd(pc, r2, set1(cc[static_cast<std::size_t>(k)]));

  const __m256i qi = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(q));
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const V swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi, one), one));
  const V sin_neg = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi, two), two));
  const __m256i qi1 = _mm256_add_epi64(qi, one);
  const V cos_neg = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(qi1, two), two));

  V s = _mm256_blendv_pd(ps, pc, swap);
  V c = _mm256_blendv_pd(pc, ps, swap);
  const V sign = set1(-0.0);
  s = _mm256_xor_pd(s, _mm256_and_pd(sin_neg, sign));
  c = _mm256_xor_pd(c, _mm256_and_pd(cos_neg, sign));
  s_out = s;
  c_out = c;
}

struct VecAcc {
  V sum = _mm256_setzero_pd();
  V err = _mm256_setzero_pd();

  void add(V x) {
    const V s = _mm256_add_pd(sum, x);
    const V bp = _mm256_sub_pd(s, sum);
    const V e = _mm256_add_pd(_mm256_sub_pd(sum, _mm256_sub_pd(s, bp)), _mm256_sub_pd(x, bp));
    sum = s;
    err = _mm256_add_pd(err, e);
  }

  // Lanes are folded in a fixed order so results do not depend on anything
  // but the inputs.
  double reduce() const {
    alignas(32) double s[kLanes], e[kLanes];
    _mm256_store_pd(s, sum);
    _mm256_store_pd(e, err);
    CompensatedSum acc;
    for (std::size_t i = 0; i < kLanes; ++i) acc.add(s[i]);
    for (std::size_t i = 0; i < kLanes; ++i) acc.add(e[i]);
    return acc.value();
  }
};

// Loads up to four positions, padding with zeros; `valid` masks the real lanes.
inline V load_partial(const double* p, std::size_t count, V& valid) {
  alignas(32) double buf[kLanes] = {0.0, 0.0, 0.0, 0.0};
  alignas(32) double msk[kLanes] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < count; ++i) {
    buf[i] = p[i];
    std::memset(&msk[i], 0xFF, sizeof(double));
  }
  valid = _mm256_load_pd(msk);
  return _mm256_load_pd(buf);
}

void complex_exp_sums(std::span<const double> positions, std::span<const ComplexParameter> lambdas,
                      std::span<std::complex<double>> out) {
  const std::size_t nl = lambdas.size();
  std::vector<VecAcc> re(nl), im(nl);
  const std::size_t n = positions.size();
  for (std::size_t base = 0; base < n; base += kBlock) {
    const std::size_t end = std::min(n, base + kBlock);
    for (std::size_t j = 0; j < nl; ++j) {
      const V neg_theta = set1(-lambdas[j].theta);
      const V gamma = set1(lambdas[j].gamma);
      const bool has_mag = lambdas[j].theta != 0.0;
      std::size_t i = base;
      auto accumulate = [&](V s, V valid, bool partial) {
        V sn, cs;
        sincos4(_mm256_mul_pd(gamma, s), sn, cs);
        V tr = cs;
        V ti = _mm256_xor_pd(sn, set1(-0.0));
        if (has_mag) {
          const V mag = exp4(_mm256_mul_pd(neg_theta, s));
          tr = _mm256_mul_pd(mag, tr);
          ti = _mm256_mul_pd(mag, ti);
        }
        if (partial) {
          tr = _mm256_and_pd(tr, valid);
          ti = _mm256_and_pd(ti, valid);
        }
        re[j].add(tr);
        im[j].add(ti);
      };
      for (; i + kLanes <= end; i += kLanes) accumulate(_mm256_loadu_pd(positions.data() + i), V{}, false);
      if (i < end) {
        V valid;
        const V s = load_partial(positions.data() + i, end - i, valid);
        accumulate(s, valid, true);
      }
    }
  }
  for (std::size_t j = 0; j < nl; ++j) out[j] = {re[j].reduce(), im[j].reduce()};
}

void real_exp_sums(std::span<const double> positions, std::span<const double> thetas, std::span<double> out) {
  const std::size_t n = positions.size();
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    if (thetas[j] == 0.0) {
      out[j] = static_cast<double>(n);
      continue;
    }
    const V neg_theta = set1(-thetas[j]);
    VecAcc acc;
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) acc.add(exp4(_mm256_mul_pd(neg_theta, _mm256_loadu_pd(positions.data() + i))));
    if (i < n) {
      V valid;
      const V s = load_partial(positions.data() + i, n - i, valid);
      acc.add(_mm256_and_pd(exp4(_mm256_mul_pd(neg_theta, s)), valid));
    }
    out[j] = acc.reduce();
  }
}

void complex_exp_terms(std::span<const double> positions, ComplexParameter lambda, std::span<double> re,
                       std::span<double> im) {
  const std::size_t n = positions.size();
  const V neg_theta = set1(-lambda.theta);
  const V gamma = set1(lambda.gamma);
  const bool has_mag = lambda.theta != 0.0;
  auto eval = [&](V s, V& tr, V& ti) {
    V sn, cs;
    sincos4(_mm256_mul_pd(gamma, s), sn, cs);
    tr = cs;
    ti = _mm256_xor_pd(sn, set1(-0.0));
    if (has_mag) {
      const V mag = exp4(_mm256_mul_pd(neg_theta, s));
      tr = _mm256_mul_pd(mag, tr);
      ti = _mm256_mul_pd(mag, ti);
    }
  };
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    V tr, ti;
    eval(_mm256_loadu_pd(positions.data() + i), tr, ti);
    _mm256_storeu_pd(re.data() + i, tr);
    _mm256_storeu_pd(im.data() + i, ti);
  }
  if (i < n) {
    V valid, tr, ti;
    eval(load_partial(positions.data() + i, n - i, valid), tr, ti);
    alignas(32) double br[kLanes], bi[kLanes];
    _mm256_store_pd(br, tr);
    _mm256_store_pd(bi, ti);
    for (std::size_t k = 0; i + k < n; ++k) {
      re[i + k] = br[k];
      im[i + k] = bi[k];
    }
  }
}

double weighted_exp_sum(std::span<const double> weights, std::span<const double> nodes, double scale) {
  const std::size_t n = nodes.size();
  const V neg_scale = set1(-scale);
  VecAcc acc;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const V e = exp4(_mm256_mul_pd(neg_scale, _mm256_loadu_pd(nodes.data() + i)));
    acc.add(_mm256_mul_pd(_mm256_loadu_pd(weights.data() + i), e));
  }
  if (i < n) {
    V valid;
    const V x = load_partial(nodes.data() + i, n - i, valid);
    const V w = load_partial(weights.data() + i, n - i, valid);
    acc.add(_mm256_and_pd(_mm256_mul_pd(w, exp4(_mm256_mul_pd(neg_scale, x))), valid));
  }
  return acc.reduce();
}

void gaussian_from_bits(std::span<const std::uint64_t> bits, std::span<double> out) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const std::size_t n = out.size();
  const std::size_t pairs = (n + 1) / 2;
  const V inv53 = set1(0x1.0p-53);
  const __m256i one = _mm256_set1_epi64x(1);
  std::size_t k = 0;
  for (; k + kLanes <= pairs && 2 * (k + kLanes) <= n; k += kLanes) {
    const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bits.data() + 2 * k));
    const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bits.data() + 2 * k + 4));
    // Lane order (k, k+2, k+1, k+3) for both halves; undone on store.
    const __m256i w1 = _mm256_unpacklo_epi64(a, b);
    const __m256i w2 = _mm256_unpackhi_epi64(a, b);
    const V u1 = _mm256_mul_pd(u64_to_double(_mm256_add_epi64(_mm256_srli_epi64(w1, 11), one)), inv53);
    const V u2 = _mm256_mul_pd(u64_to_double(_mm256_srli_epi64(w2, 11)), inv53);
    const V r = _mm256_sqrt_pd(_mm256_mul_pd(set1(-2.0), log4(u1)));
    V sn, cs;
    sincos4(_mm256_mul_pd(set1(two_pi), u2), sn, cs);
    const V z0 = _mm256_mul_pd(r, cs);
    const V z1 = _mm256_mul_pd(r, sn);
    _mm256_storeu_pd(out.data() + 2 * k, _mm256_unpacklo_pd(z0, z1));
    _mm256_storeu_pd(out.data() + 2 * k + 4, _mm256_unpackhi_pd(z0, z1));
  }
  scalar_table().gaussian_from_bits(bits.subspan(2 * k), out.subspan(2 * k));
}

void pareto_from_bits(std::span<const std::uint64_t> bits, double scale, double exponent, std::span<double> y,
                      std::span<double> log_y) {
  const std::size_t n = y.size();
  const V inv53 = set1(0x1.0p-53);
  const __m256i one = _mm256_set1_epi64x(1);
  const V log_scale = set1(std::log(scale));
  const V expo = set1(exponent);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256i w = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bits.data() + i));
    const V u = _mm256_mul_pd(u64_to_double(_mm256_add_epi64(_mm256_srli_epi64(w, 11), one)), inv53);
    const V ly = _mm256_sub_pd(log_scale, _mm256_mul_pd(expo, log4(u)));
    _mm256_storeu_pd(log_y.data() + i, ly);
    _mm256_storeu_pd(y.data() + i, exp4(ly));
  }
  scalar_table().pareto_from_bits(bits.subspan(i), scale, exponent, y.subspan(i), log_y.subspan(i));
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{
      Isa::avx2,        complex_exp_sums,   real_exp_sums,    complex_exp_terms,
      weighted_exp_sum, gaussian_from_bits, pareto_from_bits,
  };
  return table;
}

}  // namespace brw::kernels
