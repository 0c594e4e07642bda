#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "loha/features.hpp"
#include "loha/prng.hpp"

namespace loha {

class ModelIOError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Regressor predicting y = log(h_k + 1) from a LocalInput: one 3x3 valid
// convolution (filters rectified) over the two (2K+1)^2 channels, the
// flattened maps concatenated with the 4 invariant reals, then two rectified
// size-100 layers and a scalar output. Weights are 32-bit floats; training
// and inference instantiate the same forward/backward templates at the
// precision they need.
struct Model {
  static constexpr int kHidden = 100;

  int radius = 0;   // K of the features this model consumes
  int filters = 0;  // F

  // Layout (row-major, fastest index last):
  //   conv_w [F][2][3][3]    conv_b [F]
  //   fc1_w  [100][F*(2K-1)^2 + 4]   fc1_b [100]
  //   fc2_w  [100][100]      fc2_b [100]
  //   out_w  [100]           out_b [1]
  std::vector<float> conv_w, conv_b, fc1_w, fc1_b, fc2_w, fc2_b, out_w, out_b;

  int conv_side() const { return 2 * radius - 1; }
  int conv_outputs() const { return filters * conv_side() * conv_side(); }
  int fc1_inputs() const { return conv_outputs() + 4; }

  std::size_t parameter_count() const {
    return conv_w.size() + conv_b.size() + fc1_w.size() + fc1_b.size() + fc2_w.size() +
           fc2_b.size() + out_w.size() + out_b.size();
  }

  // Visits the weight arrays in the fixed serialization order.
  template <class Fn>
  void visit_arrays(Fn&& fn) {
    fn(conv_w), fn(conv_b), fn(fc1_w), fn(fc1_b), fn(fc2_w), fn(fc2_b), fn(out_w), fn(out_b);
  }
  template <class Fn>
  void visit_arrays(Fn&& fn) const {
    fn(conv_w), fn(conv_b), fn(fc1_w), fn(fc1_b), fn(fc2_w), fn(fc2_b), fn(out_w), fn(out_b);
  }

  friend bool operator==(const Model&, const Model&) = default;
};

// Fresh model with uniform fan-in-scaled weights, w ~ U(-1/sqrt(fan_in),
// 1/sqrt(fan_in)) drawn in array layout order from SplitMix64(seed), and
// zero biases.
inline Model make_model(int radius, int filters, std::uint64_t seed) {
  if (radius < 1) throw std::invalid_argument("model radius must be >= 1");
  if (filters < 1) throw std::invalid_argument("model filter count must be >= 1");
  Model m;
  m.radius = radius;
  m.filters = filters;
  const int cs = m.conv_side();
  m.conv_w.resize(static_cast<std::size_t>(filters) * 2 * 9);
  m.conv_b.assign(filters, 0.0f);
  m.fc1_w.resize(static_cast<std::size_t>(Model::kHidden) * m.fc1_inputs());
  m.fc1_b.assign(Model::kHidden, 0.0f);
  m.fc2_w.resize(static_cast<std::size_t>(Model::kHidden) * Model::kHidden);
  m.fc2_b.assign(Model::kHidden, 0.0f);
  m.out_w.resize(Model::kHidden);
  m.out_b.assign(1, 0.0f);
  (void)cs;

  SplitMix64 rng(seed);
  auto fill = [&](std::vector<float>& w, double fan_in) {
    const double limit = 1.0 / std::sqrt(fan_in);
    for (float& x : w) x = static_cast<float>((rng.next_double() * 2.0 - 1.0) * limit);
  };
  fill(m.conv_w, 2.0 * 9.0);
  fill(m.fc1_w, m.fc1_inputs());
  fill(m.fc2_w, Model::kHidden);
  fill(m.out_w, Model::kHidden);
  return m;
}

// Activations of one forward pass, kept for backpropagation. `in` is the
// two-channel image (obstacle then dh), `conv`/`fc1`/`fc2` are post-rectifier.
template <typename T>
struct Trace {
  std::vector<T> in, conv, fc1, fc2;
  T inv[4];
  T y;
};

namespace detail {

// Reduction with four independent accumulators: deterministic, and not
// serialized on one floating-point dependency chain.
template <typename T>
T dot(const float* w, const T* x, int n) {
  T a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += static_cast<T>(w[i]) * x[i];
    a1 += static_cast<T>(w[i + 1]) * x[i + 1];
    a2 += static_cast<T>(w[i + 2]) * x[i + 2];
    a3 += static_cast<T>(w[i + 3]) * x[i + 3];
  }
  for (; i < n; ++i) a0 += static_cast<T>(w[i]) * x[i];
  return (a0 + a1) + (a2 + a3);
}

}  // namespace detail

template <typename T>
T forward(const Model& m, const LocalInput& input, Trace<T>& t) {
  if (input.radius != m.radius)
    throw std::invalid_argument("feature radius does not match the model");
  const int side = 2 * m.radius + 1;
  const int img = side * side;
  const int cs = m.conv_side();
  const int cimg = cs * cs;
  const int F = m.filters;

  t.in.resize(static_cast<std::size_t>(2) * img);
  for (int i = 0; i < img; ++i) {
    t.in[i] = static_cast<T>(input.obstacle[i]);
    t.in[img + i] = static_cast<T>(input.dh[i]);
  }
  for (int k = 0; k < 4; ++k) t.inv[k] = static_cast<T>(input.invariant[k]);

  t.conv.resize(static_cast<std::size_t>(F) * cimg);
  for (int f = 0; f < F; ++f) {
    const float* wf = &m.conv_w[static_cast<std::size_t>(f) * 18];
    for (int oy = 0; oy < cs; ++oy) {
      for (int ox = 0; ox < cs; ++ox) {
        T acc = static_cast<T>(m.conv_b[f]);
        for (int c = 0; c < 2; ++c) {
          const T* plane = &t.in[static_cast<std::size_t>(c) * img];
          const float* wc = wf + c * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const T* row = plane + (oy + ky) * side + ox;
            acc += static_cast<T>(wc[ky * 3 + 0]) * row[0];
            acc += static_cast<T>(wc[ky * 3 + 1]) * row[1];
            acc += static_cast<T>(wc[ky * 3 + 2]) * row[2];
          }
        }
        t.conv[static_cast<std::size_t>(f) * cimg + oy * cs + ox] = acc > T(0) ? acc : T(0);
      }
    }
  }

  const int n1 = m.fc1_inputs();
  t.fc1.resize(Model::kHidden);
  for (int j = 0; j < Model::kHidden; ++j) {
    const float* row = &m.fc1_w[static_cast<std::size_t>(j) * n1];
    T acc = static_cast<T>(m.fc1_b[j]) + detail::dot(row, t.conv.data(), n1 - 4);
    for (int k = 0; k < 4; ++k) acc += static_cast<T>(row[n1 - 4 + k]) * t.inv[k];
    t.fc1[j] = acc > T(0) ? acc : T(0);
  }

  t.fc2.resize(Model::kHidden);
  for (int j = 0; j < Model::kHidden; ++j) {
    T acc = static_cast<T>(m.fc2_b[j]) +
            detail::dot(&m.fc2_w[static_cast<std::size_t>(j) * Model::kHidden], t.fc1.data(),
                        Model::kHidden);
    t.fc2[j] = acc > T(0) ? acc : T(0);
  }

  t.y = static_cast<T>(m.out_b[0]) + detail::dot(m.out_w.data(), t.fc2.data(), Model::kHidden);
  return t.y;
}

// Parameter gradients, same shapes and visiting order as Model.
template <typename T>
struct Gradients {
  std::vector<T> conv_w, conv_b, fc1_w, fc1_b, fc2_w, fc2_b, out_w, out_b;

  template <class Fn>
  void visit_arrays(Fn&& fn) {
    fn(conv_w), fn(conv_b), fn(fc1_w), fn(fc1_b), fn(fc2_w), fn(fc2_b), fn(out_w), fn(out_b);
  }

  void resize_like(const Model& m) {
    conv_w.resize(m.conv_w.size());
    conv_b.resize(m.conv_b.size());
    fc1_w.resize(m.fc1_w.size());
    fc1_b.resize(m.fc1_b.size());
    fc2_w.resize(m.fc2_w.size());
    fc2_b.resize(m.fc2_b.size());
    out_w.resize(m.out_w.size());
    out_b.resize(m.out_b.size());
    zero();
  }

  void zero() {
    visit_arrays([](auto& v) { std::fill(v.begin(), v.end(), T(0)); });
  }
};

// Scratch vectors for backward, reusable across calls.
template <typename T>
struct BackScratch {
  std::vector<T> dfc2, dfc1, dflat;
};

// Accumulates dL/dparam into g for a single example, given the trace of its
// forward pass and dL/dy.
template <typename T>
void backward(const Model& m, const Trace<T>& t, T dldy, Gradients<T>& g, BackScratch<T>& s) {
  const int H = Model::kHidden;
  const int side = 2 * m.radius + 1;
  const int img = side * side;
  const int cs = m.conv_side();
  const int cimg = cs * cs;
  const int F = m.filters;
  const int n1 = m.fc1_inputs();
  const int flat = n1 - 4;

  g.out_b[0] += dldy;
  s.dfc2.resize(H);
  for (int j = 0; j < H; ++j) {
    g.out_w[j] += dldy * t.fc2[j];
    s.dfc2[j] = t.fc2[j] > T(0) ? dldy * static_cast<T>(m.out_w[j]) : T(0);
  }

  s.dfc1.assign(H, T(0));
  for (int j = 0; j < H; ++j) {
    const T dz = s.dfc2[j];
    if (dz == T(0)) continue;
    g.fc2_b[j] += dz;
    T* grow = &g.fc2_w[static_cast<std::size_t>(j) * H];
    const float* wrow = &m.fc2_w[static_cast<std::size_t>(j) * H];
    for (int i = 0; i < H; ++i) {
      grow[i] += dz * t.fc1[i];
      s.dfc1[i] += dz * static_cast<T>(wrow[i]);
    }
  }

  s.dflat.assign(flat, T(0));
  for (int j = 0; j < H; ++j) {
    const T dz = t.fc1[j] > T(0) ? s.dfc1[j] : T(0);
    if (dz == T(0)) continue;
    g.fc1_b[j] += dz;
    T* grow = &g.fc1_w[static_cast<std::size_t>(j) * n1];
    const float* wrow = &m.fc1_w[static_cast<std::size_t>(j) * n1];
    for (int i = 0; i < flat; ++i) {
      grow[i] += dz * t.conv[i];
      s.dflat[i] += dz * static_cast<T>(wrow[i]);
    }
    for (int k = 0; k < 4; ++k) grow[flat + k] += dz * t.inv[k];
  }

  for (int f = 0; f < F; ++f) {
    T* gw = &g.conv_w[static_cast<std::size_t>(f) * 18];
    const T* dmap = &s.dflat[static_cast<std::size_t>(f) * cimg];
    const T* amap = &t.conv[static_cast<std::size_t>(f) * cimg];
    T db = T(0);
    for (int oy = 0; oy < cs; ++oy) {
      for (int ox = 0; ox < cs; ++ox) {
        const T a = amap[oy * cs + ox];
        if (!(a > T(0))) continue;
        const T dz = dmap[oy * cs + ox];
        if (dz == T(0)) continue;
        db += dz;
        for (int c = 0; c < 2; ++c) {
          const T* plane = &t.in[static_cast<std::size_t>(c) * img];
          T* gc = gw + c * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const T* row = plane + (oy + ky) * side + ox;
            gc[ky * 3 + 0] += dz * row[0];
            gc[ky * 3 + 1] += dz * row[1];
            gc[ky * 3 + 2] += dz * row[2];
          }
        }
      }
    }
    g.conv_b[f] += db;
  }
}

// Reusable single-precision inference context. A Model is immutable during
// search, so one Predictor per search (or per thread) suffices.
class Predictor {
 public:
  explicit Predictor(const Model& m) : model_(&m) {}

  const Model& model() const { return *model_; }

  // clamp(exp(y) - 1, 0, 2K): inverts the log(h_k + 1) training target and
  // pins the result to the representable target range.
  double predict_hk(const LocalInput& input) {
    double y = static_cast<double>(forward<float>(*model_, input, trace_));
    double hk = std::expm1(y);
    double hi = 2.0 * model_->radius;
    if (!(hk > 0.0)) return 0.0;
    return hk < hi ? hk : hi;
  }

 private:
  const Model* model_;
  Trace<float> trace_;
};

inline double predict_hk(const Model& m, const LocalInput& input) {
  return Predictor(m).predict_hk(input);
}

namespace detail {

inline bool same_relu_pattern(const Trace<double>& a, const Trace<double>& b) {
  auto same = [](const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) return false;
    for (std::size_t i = 0; i < u.size(); ++i)
      if ((u[i] > 0.0) != (v[i] > 0.0)) return false;
    return true;
  };
  return same(a.conv, b.conv) && same(a.fc1, b.fc1) && same(a.fc2, b.fc2);
}

}  // namespace detail

// Compares the analytic gradient of L = (y - target)^2 against central
// finite differences for every parameter, in double precision, and returns
// the worst relative discrepancy |ga - gn| / max(|ga|, |gn|, 1).
//
// The difference step is measured as the actual float32 spacing
// double(w+eps) - double(w-eps) after rounding to storage precision, so
// weight quantization does not pollute the quotient. Parameters whose
// perturbation flips a rectifier on or off are excluded: a central
// difference straddling the kink does not estimate the derivative at w.
// The model is restored exactly afterwards.
inline double gradient_check(Model& m, const LocalInput& input, double target, double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3))
    throw std::invalid_argument("gradient check epsilon must be in [1e-6, 1e-3]");

  Trace<double> trace;
  double y = forward<double>(m, input, trace);
  Gradients<double> g;
  g.resize_like(m);
  BackScratch<double> scratch;
  backward<double>(m, trace, 2.0 * (y - target), g, scratch);

  std::vector<std::vector<float>*> warrays;
  m.visit_arrays([&](std::vector<float>& v) { warrays.push_back(&v); });
  std::vector<std::vector<double>*> garrays;
  g.visit_arrays([&](std::vector<double>& v) { garrays.push_back(&v); });

  Trace<double> tp, tm;
  double worst = 0.0;
  for (std::size_t a = 0; a < warrays.size(); ++a) {
    std::vector<float>& w = *warrays[a];
    const std::vector<double>& ga = *garrays[a];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const float orig = w[i];
      const float wp = static_cast<float>(static_cast<double>(orig) + epsilon);
      const float wm = static_cast<float>(static_cast<double>(orig) - epsilon);
      if (wp == wm) continue;
      w[i] = wp;
      double yp = forward<double>(m, input, tp);
      w[i] = wm;
      double ym = forward<double>(m, input, tm);
      w[i] = orig;
      if (!detail::same_relu_pattern(tp, tm)) continue;
      const double lp = (yp - target) * (yp - target);
      const double lm = (ym - target) * (ym - target);
      const double gn = (lp - lm) / (static_cast<double>(wp) - static_cast<double>(wm));
      const double denom = std::max({std::abs(ga[i]), std::abs(gn), 1.0});
      worst = std::max(worst, std::abs(ga[i] - gn) / denom);
    }
  }
  return worst;
}

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ModelIOError("model file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

// Binary model format: magic "LOHA", one version byte (1), K and F as
// unsigned 32-bit little-endian, then the eight weight arrays in visiting
// order, each a u32 element count followed by that many IEEE-754 binary32
// values, little-endian.
inline void save_model(const Model& m, std::ostream& out) {
  out.write("LOHA", 4);
  out.put(static_cast<char>(1));
  detail::put_u32(out, static_cast<std::uint32_t>(m.radius));
  detail::put_u32(out, static_cast<std::uint32_t>(m.filters));
  m.visit_arrays([&](const std::vector<float>& v) {
    detail::put_u32(out, static_cast<std::uint32_t>(v.size()));
    for (float x : v) detail::put_u32(out, std::bit_cast<std::uint32_t>(x));
  });
  if (!out) throw ModelIOError("model write failed");
}

inline void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelIOError("cannot open model file for writing: " + path);
  save_model(m, out);
}

inline Model load_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "LOHA")
    throw ModelIOError("not a model file: bad magic");
  int version = in.get();
  if (version == std::istream::traits_type::eof()) throw ModelIOError("model file truncated");
  if (version != 1)
    throw ModelIOError("unsupported model format version " + std::to_string(version));
  std::uint32_t radius = detail::get_u32(in);
  std::uint32_t filters = detail::get_u32(in);
  if (radius < 1 || radius > 64 || filters < 1 || filters > 1024)
    throw ModelIOError("model header out of range");

  Model m = make_model(static_cast<int>(radius), static_cast<int>(filters), 0);
  const char* names[] = {"conv_w", "conv_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b", "out_w", "out_b"};
  int idx = 0;
  m.visit_arrays([&](std::vector<float>& v) {
    std::uint32_t n = detail::get_u32(in);
    if (n != v.size())
      throw ModelIOError(std::string("model file corrupt: ") + names[idx] + " length mismatch");
    for (std::uint32_t i = 0; i < n; ++i) {
      float x = std::bit_cast<float>(detail::get_u32(in));
      if (!std::isfinite(x))
        throw ModelIOError(std::string("model file corrupt: non-finite weight in ") + names[idx]);
      v[i] = x;
    }
    ++idx;
  });
  return m;
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIOError("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace loha
