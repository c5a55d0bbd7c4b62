#include "vblc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "vblc/errors.hpp"
#include "vblc/pnm.hpp"

namespace vblc {

namespace {

std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& dir,
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

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (std::uint64_t v : counts) sum += v;
  return sum;
}

void accumulate(const LabelMap& pred, const LabelMap& gt, ConfusionMatrix& cm) {
  if (!pred.same_shape(gt)) throw ValidationError("accumulate: dimension mismatch");
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    const std::uint8_t g = gt.data[i];
    if (g == LabelMap::kIgnoreId) continue;
    const std::uint8_t p = pred.data[i];
    if (g >= cm.classes || p >= cm.classes) {
      throw ValidationError("accumulate: class id out of range (gt=" + std::to_string(g) +
                            ", pred=" + std::to_string(p) + ")");
    }
    ++cm.at(g, p);
  }
}

IouReport miou(const ConfusionMatrix& cm) {
  IouReport report;
  report.per_class.resize(static_cast<std::size_t>(cm.classes));
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < cm.classes; ++c) {
    const std::uint64_t tp = cm.at(c, c);
    std::uint64_t fp = 0, fn = 0;
    for (int o = 0; o < cm.classes; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const std::uint64_t uni = tp + fp + fn;
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    report.per_class[static_cast<std::size_t>(c)] = iou;
    sum += iou;
    ++present;
  }
  if (present == 0) throw ValidationError("miou: no class present in prediction or truth");
  report.mean = sum / present;
  return report;
}

ConfidenceHistogram confidence_report(std::span<const LogitMap> logit_maps,
                                      std::span<const LabelMap> gt_maps, int bins,
                                      bool use_norm, const LossConfig& cfg) {
  if (logit_maps.size() != gt_maps.size()) {
    throw ValidationError("confidence_report: map count mismatch");
  }
  if (bins < 1) throw ValidationError("confidence_report: bins must be >= 1");
  ConfidenceHistogram hist;
  hist.bins = bins;
  hist.counts_all.assign(static_cast<std::size_t>(bins), 0);
  hist.counts_erroneous.assign(static_cast<std::size_t>(bins), 0);

  for (std::size_t m = 0; m < logit_maps.size(); ++m) {
    const LogitMap& logits = logit_maps[m];
    const LabelMap& gt = gt_maps[m];
    if (logits.height != gt.height || logits.width != gt.width) {
      throw ValidationError("confidence_report: shape mismatch");
    }
    const int n = logits.pixel_count();
    std::vector<double> p(static_cast<std::size_t>(logits.classes));
    for (int i = 0; i < n; ++i) {
      const std::uint8_t g = gt.data[static_cast<std::size_t>(i)];
      if (g == LabelMap::kIgnoreId) continue;
      const auto z = logits.pixel(i);
      if (use_norm) {
        normalized_softmax(z, p, cfg);
      } else {
        softmax(z, p);
      }
      int best = 0;
      for (int c = 1; c < logits.classes; ++c) {
        if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) best = c;
      }
      const double conf = p[static_cast<std::size_t>(best)];
      int bin = static_cast<int>(conf * bins);
      bin = std::clamp(bin, 0, bins - 1);
      ++hist.counts_all[static_cast<std::size_t>(bin)];
      if (best != static_cast<int>(g)) ++hist.counts_erroneous[static_cast<std::size_t>(bin)];
    }
  }
  return hist;
}

LabelMap predict_labels(const LogitMap& logits) {
  LabelMap out(logits.height, logits.width);
  const int n = logits.pixel_count();
  for (int i = 0; i < n; ++i) {
    const auto z = logits.pixel(i);
    int best = 0;
    for (int c = 1; c < logits.classes; ++c) {
      if (z[static_cast<std::size_t>(c)] > z[static_cast<std::size_t>(best)]) best = c;
    }
    out.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(best);
  }
  return out;
}

EvalReport evaluate_model(const ModelParams& params, std::span<const Image> images,
                          std::span<const LabelMap> labels, int bins) {
  if (images.size() != labels.size()) {
    throw ValidationError("evaluate_model: image/label count mismatch");
  }
  if (images.empty()) throw ValidationError("evaluate_model: no images");

  ConfusionMatrix cm(params.classes);
  std::vector<LogitMap> logit_maps;
  logit_maps.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    logit_maps.push_back(forward(params, featurize(images[i])));
    const LabelMap pred = predict_labels(logit_maps.back());
    accumulate(pred, labels[i], cm);
  }

  EvalReport report;
  report.iou = miou(cm);
  report.histogram = confidence_report(logit_maps, labels, bins, /*use_norm=*/false);
  report.images = static_cast<int>(images.size());
  report.pixels = cm.total();
  return report;
}

EvalReport evaluate(const std::filesystem::path& checkpoint,
                    const std::filesystem::path& image_dir,
                    const std::filesystem::path& label_dir,
                    const std::filesystem::path& out_csv) {
  const ModelParams params = load_checkpoint(checkpoint);
  const auto image_files = sorted_files(image_dir, ".ppm");
  if (image_files.empty()) throw ValidationError("no .ppm images in " + image_dir.string());

  std::vector<Image> images;
  std::vector<LabelMap> labels;
  for (const auto& img_path : image_files) {
    std::filesystem::path label_path = label_dir / img_path.filename();
    label_path.replace_extension(".pgm");
    if (!std::filesystem::exists(label_path)) {
      throw ValidationError("missing label file " + label_path.string());
    }
    images.push_back(read_ppm(img_path));
    labels.push_back(read_pgm(label_path, params.classes));
  }

  const EvalReport report = evaluate_model(params, images, labels);

  std::ofstream out(out_csv, std::ios::trunc);
  if (!out) throw IoError("cannot open " + out_csv.string() + " for writing");
  out << "section,key,value\n";
  char line[128];
  for (std::size_t c = 0; c < report.iou.per_class.size(); ++c) {
    if (report.iou.per_class[c].has_value()) {
      std::snprintf(line, sizeof(line), "iou,class_%zu,%.17g\n", c, *report.iou.per_class[c]);
    } else {
      std::snprintf(line, sizeof(line), "iou,class_%zu,absent\n", c);
    }
    out << line;
  }
  std::snprintf(line, sizeof(line), "miou,,%.17g\n", report.iou.mean);
  out << line;
  for (int b = 0; b < report.histogram.bins; ++b) {
    std::snprintf(line, sizeof(line), "hist_all,bin_%d,%llu\n", b,
                  static_cast<unsigned long long>(
                      report.histogram.counts_all[static_cast<std::size_t>(b)]));
    out << line;
  }
  for (int b = 0; b < report.histogram.bins; ++b) {
    std::snprintf(line, sizeof(line), "hist_erroneous,bin_%d,%llu\n", b,
                  static_cast<unsigned long long>(
                      report.histogram.counts_erroneous[static_cast<std::size_t>(b)]));
    out << line;
  }
  std::snprintf(line, sizeof(line), "images,,%d\n", report.images);
  out << line;
  if (!out) throw IoError("write failed on " + out_csv.string());
  return report;
}

}  // namespace vblc
