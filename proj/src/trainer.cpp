#include "vblc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "vblc/config.hpp"
#include "vblc/errors.hpp"
#include "vblc/pnm.hpp"

namespace vblc {

namespace {

constexpr int kHiddenDim = 32;

struct SourceEntry {
  Image image;
  LabelMap labels;
  FeatureMap feats;
};

struct TargetEntry {
  Image image;    // raw adverse image
  Image boosted;  // VBM output (or the raw image when VBM is off)
  FeatureMap boosted_feats;
};

// Shared step body; batches are views into prepared pools.
StepMetrics step_core(TrainState& state, const std::vector<SourceEntry>& src_pool,
                      const std::vector<TargetEntry>& tgt_pool,
                      std::span<const int> src_idx, std::span<const int> tgt_idx,
                      const TrainConfig& cfg) {
  const bool self_training = cfg.ablation != Ablation::kSourceOnly;
  const bool use_vbm =
      cfg.ablation == Ablation::kVbmCe || cfg.ablation == Ablation::kFullVblc;
  const LossKind kind = cfg.ablation == Ablation::kFullVblc
                            ? LossKind::kLogitConstraint
                            : LossKind::kCrossEntropy;
  const int batch = static_cast<int>(src_idx.size());

  state.iter += 1;
  ema_update(state.teacher, state.student, cfg.alpha);

  StepMetrics metrics;
  ParamGrad acc = zero_grad(state.student);
  for (int b = 0; b < batch; ++b) {
    const SourceEntry& src = src_pool[static_cast<std::size_t>(src_idx[b])];

    const LogitMap z_src = forward(state.student, src.feats);
    const ImageLossResult src_loss = image_loss(z_src, src.labels, 1.0, cfg.loss, kind);
    add_grad(acc, backward(state.student, src.feats, src_loss.grad));
    metrics.loss_src += src_loss.loss;

    if (!self_training) continue;
    const TargetEntry& tgt = tgt_pool[static_cast<std::size_t>(tgt_idx[b])];

    const LogitMap z_teacher = forward(state.teacher, tgt.boosted_feats);
    const PseudoLabelResult pl = pseudo_label_from_logits(z_teacher, cfg.delta);
    metrics.lambda += pl.lambda;

    // one class subset drives both mixes so they share label and mask
    const std::vector<std::uint8_t> classes = sample_class_subset(src.labels, state.rng);
    const ScalarMap mask = class_mask(src.labels, classes);
    const LabelMap mixed_label = composite_labels(mask, src.labels, pl.labels);

    if (pl.lambda > 0.0) {
      const Image mixed_raw = composite(mask, src.image, tgt.image);
      const FeatureMap feats_raw = featurize(mixed_raw);
      const LogitMap z_raw = forward(state.student, feats_raw);
      const ImageLossResult raw_loss =
          image_loss(z_raw, mixed_label, pl.lambda, cfg.loss, kind);
      add_grad(acc, backward(state.student, feats_raw, raw_loss.grad));
      metrics.loss_t_mix += raw_loss.loss;

      if (use_vbm) {
        const Image mixed_boosted = composite(mask, src.image, tgt.boosted);
        const FeatureMap feats_boosted = featurize(mixed_boosted);
        const LogitMap z_boosted = forward(state.student, feats_boosted);
        const ImageLossResult boosted_loss =
            image_loss(z_boosted, mixed_label, pl.lambda, cfg.loss, kind);
        add_grad(acc, backward(state.student, feats_boosted, boosted_loss.grad));
        metrics.loss_b_mix += boosted_loss.loss;
      }
    }
  }

  const double inv_batch = 1.0 / batch;
  scale_grad(acc, inv_batch);
  sgd_step(state.student, acc, cfg.lr, cfg.momentum, state.velocity);

  metrics.loss_src *= inv_batch;
  metrics.loss_t_mix *= inv_batch;
  metrics.loss_b_mix *= inv_batch;
  metrics.lambda *= inv_batch;
  return metrics;
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::string& extension) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

TrainState make_train_state(const TrainConfig& cfg, int classes) {
  TrainState state;
  state.rng = Rng(cfg.seed);
  state.student = init_params(kFeatureDim, kHiddenDim, classes, state.rng);
  state.teacher = state.student;
  state.velocity = zero_grad(state.student);
  return state;
}

void ema_update(ModelParams& teacher, const ModelParams& student, double alpha) {
  if (!teacher.same_shape(student)) throw ValidationError("ema_update: shape mismatch");
  auto blend = [alpha](std::vector<double>& t, const std::vector<double>& s) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = alpha * t[i] + (1.0 - alpha) * s[i];
  };
  blend(teacher.w1, student.w1);
  blend(teacher.b1, student.b1);
  blend(teacher.w2, student.w2);
  blend(teacher.b2, student.b2);
}

PseudoLabelResult pseudo_label_from_logits(const LogitMap& logits, double delta) {
  const int n = logits.pixel_count();
  const int k = logits.classes;
  PseudoLabelResult out;
  out.labels = LabelMap(logits.height, logits.width);
  std::vector<double> p(static_cast<std::size_t>(k));
  int confident = 0;
  for (int i = 0; i < n; ++i) {
    const auto z = logits.pixel(i);
    softmax(z, p);
    int best = 0;
    for (int c = 1; c < k; ++c) {
      if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) best = c;
    }
    out.labels.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(best);
    if (p[static_cast<std::size_t>(best)] > delta) ++confident;
  }
  out.lambda = static_cast<double>(confident) / n;
  return out;
}

PseudoLabelResult pseudo_label(const ModelParams& teacher, const Image& boosted,
                               double delta) {
  return pseudo_label_from_logits(forward(teacher, featurize(boosted)), delta);
}

std::vector<std::uint8_t> classes_present(const LabelMap& labels) {
  bool seen[256] = {};
  for (std::uint8_t id : labels.data) seen[id] = true;
  std::vector<std::uint8_t> out;
  for (int c = 0; c < 255; ++c) {
    if (seen[c]) out.push_back(static_cast<std::uint8_t>(c));
  }
  return out;
}

std::vector<std::uint8_t> sample_class_subset(const LabelMap& src, Rng& rng) {
  std::vector<std::uint8_t> pool = classes_present(src);
  const std::size_t n = pool.size();
  const std::size_t m = (n + 1) / 2;
  // partial Fisher-Yates, then sorted for a canonical subset
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

ScalarMap class_mask(const LabelMap& src, std::span<const std::uint8_t> classes) {
  bool selected[256] = {};
  for (std::uint8_t c : classes) selected[c] = true;
  ScalarMap mask(src.height, src.width);
  for (std::size_t i = 0; i < src.data.size(); ++i) {
    mask.data[i] = selected[src.data[i]] ? 1.0 : 0.0;
  }
  return mask;
}

Image composite(const ScalarMap& mask, const Image& src, const Image& tgt) {
  if (!src.same_shape(tgt) || mask.height != src.height || mask.width != src.width) {
    throw ValidationError("composite: dimension mismatch");
  }
  Image out(src.height, src.width);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    const bool from_src = mask.data[i] != 0.0;
    for (int c = 0; c < kChannels; ++c) {
      out.data[i * 3 + c] = from_src ? src.data[i * 3 + c] : tgt.data[i * 3 + c];
    }
  }
  return out;
}

LabelMap composite_labels(const ScalarMap& mask, const LabelMap& src, const LabelMap& tgt) {
  if (!src.same_shape(tgt) || mask.height != src.height || mask.width != src.width) {
    throw ValidationError("composite_labels: dimension mismatch");
  }
  LabelMap out(src.height, src.width);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    out.data[i] = mask.data[i] != 0.0 ? src.data[i] : tgt.data[i];
  }
  return out;
}

MixResult classmix_with_classes(const Image& src_img, const LabelMap& src_label,
                                const Image& tgt_img, const LabelMap& tgt_label,
                                std::span<const std::uint8_t> classes) {
  MixResult mix;
  mix.mask = class_mask(src_label, classes);
  mix.mixed_image = composite(mix.mask, src_img, tgt_img);
  mix.mixed_label = composite_labels(mix.mask, src_label, tgt_label);
  return mix;
}

MixResult classmix(const Image& src_img, const LabelMap& src_label, const Image& tgt_img,
                   const LabelMap& tgt_label, Rng& rng) {
  const std::vector<std::uint8_t> classes = sample_class_subset(src_label, rng);
  return classmix_with_classes(src_img, src_label, tgt_img, tgt_label, classes);
}

StepMetrics train_step(TrainState& state, std::span<const TrainSample> src_batch,
                       std::span<const Image> tgt_batch, const TrainConfig& cfg) {
  if (src_batch.empty()) throw ValidationError("train_step: empty source batch");
  const bool self_training = cfg.ablation != Ablation::kSourceOnly;
  if (self_training && tgt_batch.size() != src_batch.size()) {
    throw ValidationError("train_step: source/target batch size mismatch");
  }
  const bool use_vbm =
      cfg.ablation == Ablation::kVbmCe || cfg.ablation == Ablation::kFullVblc;

  std::vector<SourceEntry> src_pool;
  std::vector<TargetEntry> tgt_pool;
  std::vector<int> src_idx, tgt_idx;
  for (std::size_t i = 0; i < src_batch.size(); ++i) {
    SourceEntry e;
    e.image = src_batch[i].image;
    e.labels = src_batch[i].labels;
    e.feats = featurize(e.image);
    src_pool.push_back(std::move(e));
    src_idx.push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < tgt_batch.size(); ++i) {
    TargetEntry e;
    e.image = tgt_batch[i];
    e.boosted = use_vbm ? boost(e.image, cfg.vbm) : e.image;
    e.boosted_feats = featurize(e.boosted);
    tgt_pool.push_back(std::move(e));
    tgt_idx.push_back(static_cast<int>(i));
  }
  return step_core(state, src_pool, tgt_pool, src_idx, tgt_idx, cfg);
}

TrainOutputs train(const TrainConfig& cfg, const std::filesystem::path& source_dir,
                   const std::filesystem::path& target_dir,
                   const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const std::vector<fs::path> src_images = list_files(source_dir, ".ppm");
  const std::vector<fs::path> tgt_images = list_files(target_dir, ".ppm");
  if (src_images.empty()) throw ValidationError("no .ppm images in " + source_dir.string());
  if (tgt_images.empty()) throw ValidationError("no .ppm images in " + target_dir.string());
  // held-out target labels live elsewhere; a label file here means the
  // caller pointed at the eval folder
  if (!list_files(target_dir, ".pgm").empty()) {
    throw ValidationError("target dir " + target_dir.string() +
                          " contains .pgm label files; labels must stay held out");
  }

  // pass 1: labels with ids unconstrained, to learn the class count
  std::vector<LabelMap> src_labels;
  src_labels.reserve(src_images.size());
  int max_id = -1;
  for (const fs::path& img_path : src_images) {
    fs::path label_path = img_path;
    label_path.replace_extension(".pgm");
    if (!fs::exists(label_path)) {
      throw ValidationError("missing label file " + label_path.string());
    }
    LabelMap labels = read_pgm(label_path, 255);
    for (std::uint8_t id : labels.data) {
      if (id != LabelMap::kIgnoreId) max_id = std::max(max_id, static_cast<int>(id));
    }
    src_labels.push_back(std::move(labels));
  }
  const int classes = std::max(2, max_id + 1);

  TrainOutputs outputs;
  outputs.classes = classes;
  outputs.manifest = out_dir / "run_manifest.txt";
  write_run_manifest(outputs.manifest, "train", cfg,
                     {{"source", source_dir.string()},
                      {"target", target_dir.string()},
                      {"out", out_dir.string()}});

  const bool use_vbm =
      cfg.ablation == Ablation::kVbmCe || cfg.ablation == Ablation::kFullVblc;

  std::vector<SourceEntry> src_pool(src_images.size());
  for (std::size_t i = 0; i < src_images.size(); ++i) {
    src_pool[i].image = read_ppm(src_images[i]);
    if (src_pool[i].image.height != src_labels[i].height ||
        src_pool[i].image.width != src_labels[i].width) {
      throw ValidationError("image/label size mismatch for " + src_images[i].string());
    }
    src_pool[i].labels = std::move(src_labels[i]);
    src_pool[i].feats = featurize(src_pool[i].image);
  }
  std::vector<TargetEntry> tgt_pool(tgt_images.size());
  for (std::size_t i = 0; i < tgt_images.size(); ++i) {
    tgt_pool[i].image = read_ppm(tgt_images[i]);
    tgt_pool[i].boosted = use_vbm ? boost(tgt_pool[i].image, cfg.vbm) : tgt_pool[i].image;
    tgt_pool[i].boosted_feats = featurize(tgt_pool[i].boosted);
  }

  TrainState state = make_train_state(cfg, classes);

  outputs.metrics_csv = out_dir / "metrics.csv";
  std::ofstream metrics_out(outputs.metrics_csv, std::ios::trunc);
  if (!metrics_out) throw IoError("cannot open " + outputs.metrics_csv.string());
  metrics_out << "iter,loss_src,loss_t_mix,loss_b_mix,lambda\n";

  std::vector<int> src_idx(static_cast<std::size_t>(cfg.batch));
  std::vector<int> tgt_idx(static_cast<std::size_t>(cfg.batch));
  char line[256];
  for (int m = 1; m <= cfg.max_iters; ++m) {
    for (int b = 0; b < cfg.batch; ++b) {
      src_idx[static_cast<std::size_t>(b)] =
          static_cast<int>(state.rng.below(src_pool.size()));
      tgt_idx[static_cast<std::size_t>(b)] =
          static_cast<int>(state.rng.below(tgt_pool.size()));
    }
    const StepMetrics metrics = step_core(state, src_pool, tgt_pool, src_idx, tgt_idx, cfg);
    outputs.metrics.push_back(metrics);
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g\n", m, metrics.loss_src,
                  metrics.loss_t_mix, metrics.loss_b_mix, metrics.lambda);
    metrics_out << line;
  }
  if (!metrics_out) throw IoError("write failed on " + outputs.metrics_csv.string());
  metrics_out.close();

  outputs.checkpoint = out_dir / "checkpoint.bin";
  save_checkpoint(outputs.checkpoint, state.student);
  return outputs;
}

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kSourceOnly: return "source-only";
    case Ablation::kCeSelfTraining: return "ce-st";
    case Ablation::kVbmCe: return "vbm-ce";
    case Ablation::kFullVblc: return "vblc";
  }
  return "vblc";
}

Ablation parse_ablation(const std::string& name) {
  if (name == "source-only") return Ablation::kSourceOnly;
  if (name == "ce-st") return Ablation::kCeSelfTraining;
  if (name == "vbm-ce") return Ablation::kVbmCe;
  if (name == "vblc") return Ablation::kFullVblc;
  throw ValidationError("unknown ablation '" + name +
                        "' (expected source-only|ce-st|vbm-ce|vblc)");
}

}  // namespace vblc
