#include "vblc/pnm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "vblc/errors.hpp"

namespace vblc {

namespace {

void append_header(std::vector<std::uint8_t>& out, const char* magic, int w, int h) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof(buf), "%s\n%d %d\n255\n", magic, w, h);
  out.insert(out.end(), buf, buf + n);
}

// Whitespace/comment-tolerant reader for PNM header tokens.
class TokenReader {
 public:
  TokenReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::string next_token() {
    skip_space_and_comments();
    std::string tok;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) tok.push_back(static_cast<char>(bytes_[pos_++]));
    if (tok.empty()) throw ValidationError("pnm: truncated header");
    return tok;
  }

  int next_int() {
    const std::string tok = next_token();
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      throw ValidationError("pnm: bad header token '" + tok + "'");
    }
    if (used != tok.size()) throw ValidationError("pnm: bad header token '" + tok + "'");
    return v;
  }

  // Payload starts after exactly one whitespace byte following maxval.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw ValidationError("pnm: missing delimiter before payload");
    }
    return pos_ + 1;
  }

 private:
  static bool is_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

struct PnmHeader {
  int width = 0;
  int height = 0;
  std::size_t payload = 0;
};

PnmHeader parse_header(const std::vector<std::uint8_t>& bytes, const char* magic) {
  TokenReader rd(bytes);
  const std::string m = rd.next_token();
  if (m != magic) throw ValidationError("pnm: expected magic '" + std::string(magic) + "', got '" + m + "'");
  PnmHeader hdr;
  hdr.width = rd.next_int();
  hdr.height = rd.next_int();
  if (hdr.width <= 0 || hdr.height <= 0) throw ValidationError("pnm: non-positive dimensions");
  const int maxval = rd.next_int();
  if (maxval != 255) throw ValidationError("pnm: only maxval 255 is supported");
  hdr.payload = rd.payload_offset();
  return hdr;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace

double intensity_from_byte(std::uint8_t k) {
  // round-half-up of k * 2^24 / 255 in integer arithmetic, then an exact
  // division by 2^24.
  const std::uint64_t n = static_cast<std::uint64_t>(k) * 16777216ULL;
  const std::uint64_t q = (2 * n + 255ULL) / 510ULL;
  return static_cast<double>(q) * 0x1.0p-24;
}

std::uint8_t byte_from_intensity(double v) {
  const double q = std::nearbyint(clamp01(v) * 255.0);
  return static_cast<std::uint8_t>(q);
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(img.pixel_count()) * 3 + 32);
  append_header(out, "P6", img.width, img.height);
  for (double v : img.data) out.push_back(byte_from_intensity(v));
  return out;
}

Image decode_ppm(const std::vector<std::uint8_t>& bytes) {
  const PnmHeader hdr = parse_header(bytes, "P6");
  const std::size_t need = static_cast<std::size_t>(hdr.width) * hdr.height * 3;
  if (bytes.size() - hdr.payload < need) throw ValidationError("ppm: truncated payload");
  Image img(hdr.height, hdr.width);
  for (std::size_t i = 0; i < need; ++i) img.data[i] = intensity_from_byte(bytes[hdr.payload + i]);
  return img;
}

std::vector<std::uint8_t> encode_pgm(const LabelMap& labels) {
  std::vector<std::uint8_t> out;
  out.reserve(labels.data.size() + 32);
  append_header(out, "P5", labels.width, labels.height);
  out.insert(out.end(), labels.data.begin(), labels.data.end());
  return out;
}

LabelMap decode_pgm(const std::vector<std::uint8_t>& bytes, int num_classes) {
  const PnmHeader hdr = parse_header(bytes, "P5");
  const std::size_t need = static_cast<std::size_t>(hdr.width) * hdr.height;
  if (bytes.size() - hdr.payload < need) throw ValidationError("pgm: truncated payload");
  LabelMap labels(hdr.height, hdr.width);
  for (std::size_t i = 0; i < need; ++i) {
    const std::uint8_t id = bytes[hdr.payload + i];
    if (id != LabelMap::kIgnoreId && id >= num_classes) {
      throw ValidationError("pgm: label id " + std::to_string(id) + " out of range for " +
                            std::to_string(num_classes) + " classes");
    }
    labels.data[i] = id;
  }
  return labels;
}

Image read_ppm(const std::filesystem::path& path) {
  try {
    return decode_ppm(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  write_file(path, encode_ppm(img));
}

LabelMap read_pgm(const std::filesystem::path& path, int num_classes) {
  try {
    return decode_pgm(read_file(path), num_classes);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_pgm(const std::filesystem::path& path, const LabelMap& labels) {
  write_file(path, encode_pgm(labels));
}

}  // namespace vblc
