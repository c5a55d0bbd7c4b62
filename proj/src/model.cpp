#include "vblc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "vblc/errors.hpp"

namespace vblc {

namespace {

void check_dims(const ModelParams& p, const FeatureMap& f) {
  if (p.feature_dim != f.dims) {
    throw ValidationError("model: feature dim " + std::to_string(f.dims) +
                          " does not match params (" + std::to_string(p.feature_dim) + ")");
  }
}

void fill_uniform(std::vector<double>& v, double bound, Rng& rng) {
  for (double& x : v) x = rng.uniform(-bound, bound);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64s(std::ofstream& out, const std::vector<double>& v) {
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
}

void read_f64s(std::ifstream& in, std::vector<double>& v) {
  for (double& d : v) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    std::memcpy(&d, &bits, 8);
  }
}

constexpr char kCheckpointMagic[8] = {'V', 'B', 'L', 'C', 'N', 'E', 'T', '1'};

}  // namespace

ParamGrad zero_grad(const ModelParams& p) {
  ParamGrad g;
  g.w1.assign(p.w1.size(), 0.0);
  g.b1.assign(p.b1.size(), 0.0);
  g.w2.assign(p.w2.size(), 0.0);
  g.b2.assign(p.b2.size(), 0.0);
  return g;
}

void add_grad(ParamGrad& acc, const ParamGrad& g) {
  for (std::size_t i = 0; i < acc.w1.size(); ++i) acc.w1[i] += g.w1[i];
  for (std::size_t i = 0; i < acc.b1.size(); ++i) acc.b1[i] += g.b1[i];
  for (std::size_t i = 0; i < acc.w2.size(); ++i) acc.w2[i] += g.w2[i];
  for (std::size_t i = 0; i < acc.b2.size(); ++i) acc.b2[i] += g.b2[i];
}

void scale_grad(ParamGrad& g, double s) {
  for (double& v : g.w1) v *= s;
  for (double& v : g.b1) v *= s;
  for (double& v : g.w2) v *= s;
  for (double& v : g.b2) v *= s;
}

ModelParams init_params(int feature_dim, int hidden_dim, int classes, Rng& rng) {
  ModelParams p;
  p.feature_dim = feature_dim;
  p.hidden_dim = hidden_dim;
  p.classes = classes;
  p.w1.resize(static_cast<std::size_t>(feature_dim) * hidden_dim);
  p.b1.resize(static_cast<std::size_t>(hidden_dim));
  p.w2.resize(static_cast<std::size_t>(hidden_dim) * classes);
  p.b2.resize(static_cast<std::size_t>(classes));
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  fill_uniform(p.w1, bound1, rng);
  fill_uniform(p.b1, bound1, rng);
  fill_uniform(p.w2, bound2, rng);
  fill_uniform(p.b2, bound2, rng);
  return p;
}

FeatureMap featurize(const Image& img) {
  const int h = img.height;
  const int w = img.width;
  FeatureMap out(h, w, kFeatureDim);
  const ScalarMap sat = saturation_map(img);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double* f = out.data.data() + (static_cast<std::size_t>(y) * w + x) * kFeatureDim;
      f[0] = img.at(y, x, 0);
      f[1] = img.at(y, x, 1);
      f[2] = img.at(y, x, 2);
      f[3] = static_cast<double>(x) / w;
      f[4] = static_cast<double>(y) / h;
      // 3x3 window stats, clamp-to-edge
      for (int c = 0; c < 3; ++c) {
        double s = 0.0, s2 = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = std::clamp(x + dx, 0, w - 1);
            const double v = img.at(yy, xx, c);
            s += v;
            s2 += v * v;
          }
        }
        const double mean = s / 9.0;
        f[5 + c] = mean;
        f[8 + c] = std::sqrt(std::max(0.0, s2 / 9.0 - mean * mean));
      }
      f[11] = sat.at(y, x);
    }
  }
  return out;
}

LogitMap forward(const ModelParams& p, const FeatureMap& feats) {
  check_dims(p, feats);
  const int n = feats.pixel_count();
  const int fd = p.feature_dim;
  const int hd = p.hidden_dim;
  const int k = p.classes;
  LogitMap out(feats.height, feats.width, k);
  std::vector<double> hidden(static_cast<std::size_t>(hd));
  for (int i = 0; i < n; ++i) {
    const double* f = feats.data.data() + static_cast<std::size_t>(i) * fd;
    for (int d = 0; d < hd; ++d) hidden[d] = p.b1[d];
    for (int j = 0; j < fd; ++j) {
      const double fv = f[j];
      const double* w1row = p.w1.data() + static_cast<std::size_t>(j) * hd;
      for (int d = 0; d < hd; ++d) hidden[d] += fv * w1row[d];
    }
    double* z = out.data.data() + static_cast<std::size_t>(i) * k;
    for (int c = 0; c < k; ++c) z[c] = p.b2[c];
    for (int d = 0; d < hd; ++d) {
      const double hv = hidden[d] > 0.0 ? hidden[d] : 0.0;
      if (hv == 0.0) continue;
      const double* w2row = p.w2.data() + static_cast<std::size_t>(d) * k;
      for (int c = 0; c < k; ++c) z[c] += hv * w2row[c];
    }
  }
  return out;
}

ParamGrad backward(const ModelParams& p, const FeatureMap& feats,
                   const LogitMap& grad_logits) {
  check_dims(p, feats);
  if (grad_logits.height != feats.height || grad_logits.width != feats.width ||
      grad_logits.classes != p.classes) {
    throw ValidationError("model: grad_logits shape mismatch");
  }
  const int n = feats.pixel_count();
  const int fd = p.feature_dim;
  const int hd = p.hidden_dim;
  const int k = p.classes;
  ParamGrad g = zero_grad(p);
  std::vector<double> pre(static_cast<std::size_t>(hd));
  std::vector<double> dpre(static_cast<std::size_t>(hd));
  for (int i = 0; i < n; ++i) {
    const double* gz = grad_logits.data.data() + static_cast<std::size_t>(i) * k;
    bool any = false;
    for (int c = 0; c < k; ++c) any = any || gz[c] != 0.0;
    if (!any) continue;

    const double* f = feats.data.data() + static_cast<std::size_t>(i) * fd;
    for (int d = 0; d < hd; ++d) pre[d] = p.b1[d];
    for (int j = 0; j < fd; ++j) {
      const double fv = f[j];
      const double* w1row = p.w1.data() + static_cast<std::size_t>(j) * hd;
      for (int d = 0; d < hd; ++d) pre[d] += fv * w1row[d];
    }

    for (int c = 0; c < k; ++c) g.b2[c] += gz[c];
    for (int d = 0; d < hd; ++d) {
      const double* w2row = p.w2.data() + static_cast<std::size_t>(d) * k;
      double* gw2row = g.w2.data() + static_cast<std::size_t>(d) * k;
      const double hv = pre[d] > 0.0 ? pre[d] : 0.0;
      double dh = 0.0;
      for (int c = 0; c < k; ++c) {
        gw2row[c] += hv * gz[c];
        dh += w2row[c] * gz[c];
      }
      dpre[d] = pre[d] > 0.0 ? dh : 0.0;
    }
    for (int d = 0; d < hd; ++d) g.b1[d] += dpre[d];
    for (int j = 0; j < fd; ++j) {
      const double fv = f[j];
      if (fv == 0.0) continue;
      double* gw1row = g.w1.data() + static_cast<std::size_t>(j) * hd;
      for (int d = 0; d < hd; ++d) gw1row[d] += fv * dpre[d];
    }
  }
  return g;
}

void sgd_step(ModelParams& p, const ParamGrad& grad, double lr, double momentum,
              ParamGrad& velocity) {
  auto update = [lr, momentum](std::vector<double>& params, const std::vector<double>& g,
                               std::vector<double>& vel) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      vel[i] = momentum * vel[i] + g[i];
      params[i] -= lr * vel[i];
    }
  };
  update(p.w1, grad.w1, velocity.w1);
  update(p.b1, grad.b1, velocity.b1);
  update(p.w2, grad.w2, velocity.w2);
  update(p.b2, grad.b2, velocity.b2);
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& p) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kCheckpointMagic, 8);
  write_u32(out, static_cast<std::uint32_t>(p.feature_dim));
  write_u32(out, static_cast<std::uint32_t>(p.hidden_dim));
  write_u32(out, static_cast<std::uint32_t>(p.classes));
  write_f64s(out, p.w1);
  write_f64s(out, p.b1);
  write_f64s(out, p.w2);
  write_f64s(out, p.b2);
  if (!out) throw IoError("write failed on " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw ValidationError(path.string() + ": not a model checkpoint");
  }
  const std::uint32_t fd = read_u32(in);
  const std::uint32_t hd = read_u32(in);
  const std::uint32_t k = read_u32(in);
  if (!in || fd == 0 || hd == 0 || k == 0 || fd > 4096 || hd > 65536 || k > 255) {
    throw ValidationError(path.string() + ": implausible checkpoint dims");
  }
  ModelParams p;
  p.feature_dim = static_cast<int>(fd);
  p.hidden_dim = static_cast<int>(hd);
  p.classes = static_cast<int>(k);
  p.w1.resize(static_cast<std::size_t>(fd) * hd);
  p.b1.resize(hd);
  p.w2.resize(static_cast<std::size_t>(hd) * k);
  p.b2.resize(k);
  read_f64s(in, p.w1);
  read_f64s(in, p.b1);
  read_f64s(in, p.w2);
  read_f64s(in, p.b2);
  if (!in) throw ValidationError(path.string() + ": truncated checkpoint");
  return p;
}

}  // namespace vblc
