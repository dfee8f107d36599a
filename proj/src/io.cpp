#include "g4d/io.hpp"

#include <png.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace g4d {

namespace {

// --------------------------------------------------------------------------
// Little-endian byte buffers
// --------------------------------------------------------------------------

class ByteWriter {
public:
  void magic(const char m[4]) { buf_.insert(buf_.end(), m, m + 4); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32_span(std::span<const float> values) {
    for (float v : values) f32(v);
  }
  void bytes(std::span<const char> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
  void byte(std::uint8_t b) { buf_.push_back(static_cast<char>(b)); }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::IoError, "cannot open for writing: " + path.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    require(out.good(), ErrorCode::IoError, "write failed: " + path.string());
  }

  const std::vector<char>& data() const { return buf_; }

private:
  std::vector<char> buf_;
};

class ByteReader {
public:
  explicit ByteReader(std::vector<char> data) : buf_(std::move(data)) {}

  void expect_magic(const char m[4], const char* what) {
    require(buf_.size() - pos_ >= 4, ErrorCode::CorruptHeader,
            std::string("file too short for a ") + what + " header");
    require(std::memcmp(buf_.data() + pos_, m, 4) == 0, ErrorCode::CorruptHeader,
            std::string("wrong magic; not a ") + what + " file");
    pos_ += 4;
  }
  void expect_version(std::uint32_t supported) {
    const std::uint32_t v = u32();
    require(v == supported, ErrorCode::VersionUnsupported,
            "format version " + std::to_string(v) + " not supported");
  }
  std::uint32_t u32() {
    require(buf_.size() - pos_ >= 4, ErrorCode::TruncatedPayload, "header ends prematurely");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= std::uint32_t(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::vector<float> f32_vector(std::size_t count) {
    std::vector<float> out(count);
    for (auto& v : out) v = f32();
    return out;
  }
  std::vector<char> raw(std::size_t count) {
    require(buf_.size() - pos_ >= count, ErrorCode::TruncatedPayload, "payload ends prematurely");
    std::vector<char> out(buf_.begin() + pos_, buf_.begin() + pos_ + count);
    pos_ += count;
    return out;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }
  // Exact payload-size gate before any large allocation.
  void expect_remaining(std::uint64_t expected, const char* what) {
    require(remaining() == expected, ErrorCode::TruncatedPayload,
            std::string(what) + ": payload size disagrees with the header");
  }

private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open: " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(!in.bad(), ErrorCode::IoError, "read failed: " + path.string());
  return data;
}

constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kRasterMotion = 1;
constexpr std::uint32_t kRasterFlow = 2;
constexpr std::uint32_t kRasterWeight = 3;

void check_dims(std::uint32_t h, std::uint32_t w) {
  require(h >= 1 && w >= 1 && h <= (1u << 16) && w <= (1u << 16), ErrorCode::CorruptHeader,
          "implausible raster dimensions");
}

}  // namespace

// ---------------------------------------------------------------------------
// Gaussian frames
// ---------------------------------------------------------------------------

void write_gaussian_frame(const std::filesystem::path& path, const GaussianFrame& frame) {
  ByteWriter out;
  out.magic("G4DA");
  out.u32(kVersion);
  out.i32(frame.timestamp);
  out.u32(static_cast<std::uint32_t>(frame.views.size()));
  out.u32(static_cast<std::uint32_t>(frame.height()));
  out.u32(static_cast<std::uint32_t>(frame.width()));
  for (const ViewMaps& view : frame.views) {
    out.f32_span(view.position);
    out.f32_span(view.opacity);
    out.f32_span(view.color);
    out.f32_span(view.rotation);
    out.f32_span(view.scale);
    const std::size_t n = view.pixel_count();
    for (std::size_t byte = 0; byte < (n + 7) / 8; ++byte) {
      std::uint8_t packed = 0;
      for (std::size_t bit = 0; bit < 8 && byte * 8 + bit < n; ++bit) {
        if (view.valid[byte * 8 + bit]) packed |= std::uint8_t(1u << bit);
      }
      out.byte(packed);
    }
  }
  out.save(path);
}

GaussianFrame read_gaussian_frame(const std::filesystem::path& path) {
  ByteReader in(slurp(path));
  in.expect_magic("G4DA", "gaussian frame");
  in.expect_version(kVersion);
  const std::int32_t timestamp = in.i32();
  const std::uint32_t n_views = in.u32();
  const std::uint32_t h = in.u32();
  const std::uint32_t w = in.u32();
  require(n_views >= 1 && n_views <= 4096, ErrorCode::CorruptHeader, "implausible view count");
  check_dims(h, w);
  const std::uint64_t n = std::uint64_t(h) * w;
  const std::uint64_t per_view = 14 * n * 4 + (n + 7) / 8;
  in.expect_remaining(per_view * n_views, "gaussian frame");

  std::vector<ViewMaps> views;
  views.reserve(n_views);
  for (std::uint32_t v = 0; v < n_views; ++v) {
    ViewMaps maps;
    maps.height = static_cast<int>(h);
    maps.width = static_cast<int>(w);
    maps.position = in.f32_vector(3 * n);
    maps.opacity = in.f32_vector(n);
    maps.color = in.f32_vector(3 * n);
    maps.rotation = in.f32_vector(4 * n);
    maps.scale = in.f32_vector(3 * n);
    const std::vector<char> packed = in.raw((n + 7) / 8);
    maps.valid.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      maps.valid[i] = (static_cast<unsigned char>(packed[i / 8]) >> (i % 8)) & 1u;
    }
    views.push_back(std::move(maps));
  }
  return make_gaussian_frame(std::move(views), timestamp);
}

// ---------------------------------------------------------------------------
// Rasters
// ---------------------------------------------------------------------------

void write_motion(const std::filesystem::path& path, const MotionField& motion) {
  ByteWriter out;
  out.magic("G4DR");
  out.u32(kVersion);
  out.u32(kRasterMotion);
  out.i32(motion.view);
  out.i32(motion.timestamp);
  out.u32(static_cast<std::uint32_t>(motion.height));
  out.u32(static_cast<std::uint32_t>(motion.width));
  out.f32_span(motion.backward);
  out.f32_span(motion.forward);
  out.save(path);
}

namespace {

ByteReader open_raster(const std::filesystem::path& path, std::uint32_t expected_kind) {
  ByteReader in(slurp(path));
  in.expect_magic("G4DR", "raster");
  in.expect_version(kVersion);
  const std::uint32_t kind = in.u32();
  require(kind == expected_kind, ErrorCode::CorruptHeader, "raster kind tag mismatch");
  return in;
}

}  // namespace

MotionField read_motion(const std::filesystem::path& path) {
  ByteReader in = open_raster(path, kRasterMotion);
  const std::int32_t view = in.i32();
  const std::int32_t timestamp = in.i32();
  const std::uint32_t h = in.u32();
  const std::uint32_t w = in.u32();
  check_dims(h, w);
  const std::uint64_t n = std::uint64_t(h) * w;
  in.expect_remaining(6 * n * 4, "motion raster");
  std::vector<float> backward = in.f32_vector(3 * n);
  std::vector<float> forward = in.f32_vector(3 * n);
  return make_motion_field(view, timestamp, int(h), int(w), std::move(backward),
                           std::move(forward));
}

void write_flow(const std::filesystem::path& path, const FlowField& flow) {
  ByteWriter out;
  out.magic("G4DR");
  out.u32(kVersion);
  out.u32(kRasterFlow);
  out.u32(static_cast<std::uint32_t>(flow.height));
  out.u32(static_cast<std::uint32_t>(flow.width));
  out.f32_span(flow.values);
  out.save(path);
}

FlowField read_flow(const std::filesystem::path& path) {
  ByteReader in = open_raster(path, kRasterFlow);
  const std::uint32_t h = in.u32();
  const std::uint32_t w = in.u32();
  check_dims(h, w);
  const std::uint64_t n = std::uint64_t(h) * w;
  in.expect_remaining(2 * n * 4, "flow raster");
  return make_flow_field(int(h), int(w), in.f32_vector(2 * n));
}

void write_weight_map(const std::filesystem::path& path, const WeightMap& weights) {
  ByteWriter out;
  out.magic("G4DR");
  out.u32(kVersion);
  out.u32(kRasterWeight);
  out.u32(static_cast<std::uint32_t>(weights.height));
  out.u32(static_cast<std::uint32_t>(weights.width));
  out.f32_span(weights.values);
  out.save(path);
}

WeightMap read_weight_map(const std::filesystem::path& path) {
  ByteReader in = open_raster(path, kRasterWeight);
  const std::uint32_t h = in.u32();
  const std::uint32_t w = in.u32();
  check_dims(h, w);
  const std::uint64_t n = std::uint64_t(h) * w;
  in.expect_remaining(n * 4, "weight raster");
  return make_weight_map(int(h), int(w), in.f32_vector(n));
}

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

void write_image_raster(const std::filesystem::path& path, const Image& image) {
  ByteWriter out;
  out.magic("G4DI");
  out.u32(kVersion);
  out.u32(static_cast<std::uint32_t>(image.height));
  out.u32(static_cast<std::uint32_t>(image.width));
  out.f32_span(image.values);
  out.save(path);
}

Image read_image_raster(const std::filesystem::path& path) {
  ByteReader in(slurp(path));
  in.expect_magic("G4DI", "image raster");
  in.expect_version(kVersion);
  const std::uint32_t h = in.u32();
  const std::uint32_t w = in.u32();
  check_dims(h, w);
  const std::uint64_t n = std::uint64_t(h) * w;
  in.expect_remaining(3 * n * 4, "image raster");
  return make_image(int(h), int(w), in.f32_vector(3 * n));
}

void write_image_png(const std::filesystem::path& path, const Image& image) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  require(fp != nullptr, ErrorCode::IoError, "cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorCode::IoError, "libpng initialization failed");
  }
  std::vector<png_byte> rows(std::size_t(image.height) * image.width * 3);
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const float v = image.values[c * n + i];
      rows[3 * i + c] = static_cast<png_byte>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    }
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorCode::IoError, "libpng write failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, rows.data() + std::size_t(y) * image.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

Image read_image_png(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  require(fp != nullptr, ErrorCode::IoError, "cannot open: " + path.string());
  png_byte header[8] = {};
  if (std::fread(header, 1, 8, fp) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    std::fclose(fp);
    fail(ErrorCode::CorruptHeader, "not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorCode::IoError, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorCode::CorruptHeader, "libpng read failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorCode::UnsupportedBitDepth, "only 8-bit PNGs are supported");
  }
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<png_byte> row(std::size_t(w) * 3);
  const std::size_t n = std::size_t(h) * w;
  std::vector<float> values(3 * n);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        values[std::size_t(c) * n + std::size_t(y) * w + x] = float(row[3 * x + c]) / 255.0f;
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return make_image(int(h), int(w), std::move(values));
}

// ---------------------------------------------------------------------------
// Meshes
// ---------------------------------------------------------------------------

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh,
                std::span<const float> motion_backward, std::span<const float> motion_forward) {
  require(motion_backward.empty() || motion_backward.size() == mesh.vertices.size(),
          ErrorCode::ShapeMismatch, "backward motion must be 3 floats per vertex");
  require(motion_forward.empty() || motion_forward.size() == mesh.vertices.size(),
          ErrorCode::ShapeMismatch, "forward motion must be 3 floats per vertex");
  ByteWriter out;
  out.magic("G4DM");
  out.u32(kVersion);
  out.u32(static_cast<std::uint32_t>(mesh.vertex_count()));
  out.u32(static_cast<std::uint32_t>(mesh.face_count()));
  std::uint32_t flags = 0;
  if (!motion_backward.empty()) flags |= 1u;
  if (!motion_forward.empty()) flags |= 2u;
  out.u32(flags);
  out.f32_span(mesh.vertices);
  for (std::uint32_t idx : mesh.faces) out.u32(idx);
  out.f32_span(motion_backward);
  out.f32_span(motion_forward);
  out.save(path);
}

MeshWithMotion read_mesh(const std::filesystem::path& path) {
  ByteReader in(slurp(path));
  in.expect_magic("G4DM", "mesh");
  in.expect_version(kVersion);
  const std::uint32_t V = in.u32();
  const std::uint32_t F = in.u32();
  const std::uint32_t flags = in.u32();
  require(V <= (1u << 26) && F <= (1u << 26) && flags <= 3, ErrorCode::CorruptHeader,
          "implausible mesh header");
  std::uint64_t expected = std::uint64_t(V) * 12 + std::uint64_t(F) * 12;
  if (flags & 1u) expected += std::uint64_t(V) * 12;
  if (flags & 2u) expected += std::uint64_t(V) * 12;
  in.expect_remaining(expected, "mesh");

  MeshWithMotion out;
  std::vector<float> vertices = in.f32_vector(3 * std::uint64_t(V));
  std::vector<std::uint32_t> faces(3 * std::uint64_t(F));
  for (auto& idx : faces) idx = in.u32();
  out.mesh = make_triangle_mesh(std::move(vertices), std::move(faces));
  if (flags & 1u) {
    out.motion_backward = in.f32_vector(3 * std::uint64_t(V));
    require(all_finite(out.motion_backward), ErrorCode::NonFiniteValue,
            "mesh motion must be finite");
  }
  if (flags & 2u) {
    out.motion_forward = in.f32_vector(3 * std::uint64_t(V));
    require(all_finite(out.motion_forward), ErrorCode::NonFiniteValue,
            "mesh motion must be finite");
  }
  return out;
}

// ---------------------------------------------------------------------------
// PLY export
// ---------------------------------------------------------------------------

void export_ply(const std::filesystem::path& path, const GaussianCloud& cloud) {
  ByteWriter out;
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n"
         << "comment gaussian cloud: position, opacity, rgb, rotation quaternion, scale\n"
         << "element vertex " << cloud.size() << "\n"
         << "property float x\nproperty float y\nproperty float z\n"
         << "property float opacity\n"
         << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         << "property float rot_w\nproperty float rot_x\nproperty float rot_y\n"
         << "property float rot_z\n"
         << "property float scale_x\nproperty float scale_y\nproperty float scale_z\n"
         << "end_header\n";
  const std::string h = header.str();
  out.bytes(std::span<const char>(h.data(), h.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < 3; ++c) out.f32(cloud.position[3 * i + c]);
    out.f32(cloud.opacity[i]);
    for (int c = 0; c < 3; ++c) {
      out.byte(static_cast<std::uint8_t>(
          std::lround(std::clamp(cloud.color[3 * i + c], 0.0f, 1.0f) * 255.0f)));
    }
    for (int c = 0; c < 4; ++c) out.f32(cloud.rotation[4 * i + c]);
    for (int c = 0; c < 3; ++c) out.f32(cloud.scale[3 * i + c]);
  }
  out.save(path);
}

// ---------------------------------------------------------------------------
// Camera text files
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct LineParser {
  std::string_view text;
  std::size_t pos = 0;
  int line = 0;

  bool next_line(std::string_view& out) {
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view candidate = text.substr(pos, end - pos);
      pos = end + 1;
      ++line;
      if (!candidate.empty() && candidate.back() == '\r') candidate.remove_suffix(1);
      // skip blank lines
      if (candidate.find_first_not_of(" \t") != std::string_view::npos) {
        out = candidate;
        return true;
      }
    }
    return false;
  }

  [[noreturn]] void error(const std::string& message) const {
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + message);
  }
};

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

double parse_double(const LineParser& parser, std::string_view token) {
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    parser.error("expected a number, got '" + std::string(token) + "'");
  }
  return value;
}

long parse_int(const LineParser& parser, std::string_view token) {
  long value = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    parser.error("expected an integer, got '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

void write_cameras(const std::filesystem::path& path, std::span<const CameraSet> sets) {
  require(!sets.empty(), ErrorCode::EmptyInput, "no camera sets to write");
  std::ostringstream out;
  out << "g4d-cameras 1\n";
  out << "timestamps " << sets.size() << "\n";
  out << "views " << sets.front().size() << "\n";
  for (std::size_t t = 0; t < sets.size(); ++t) {
    require(sets[t].size() == sets.front().size(), ErrorCode::LengthMismatch,
            "camera count varies across timestamps");
    for (std::size_t v = 0; v < sets[t].size(); ++v) {
      const Camera& cam = sets[t][v];
      out << "t " << t << " view " << v << "\n";
      out << "q " << format_double(cam.rotation.w()) << " " << format_double(cam.rotation.x())
          << " " << format_double(cam.rotation.y()) << " " << format_double(cam.rotation.z())
          << "\n";
      out << "T " << format_double(cam.translation.x()) << " "
          << format_double(cam.translation.y()) << " " << format_double(cam.translation.z())
          << "\n";
      out << "K " << format_double(cam.fx) << " " << format_double(cam.fy) << " "
          << format_double(cam.cx) << " " << format_double(cam.cy) << "\n";
    }
  }
  std::ofstream file(path, std::ios::trunc);
  require(file.good(), ErrorCode::IoError, "cannot open for writing: " + path.string());
  file << out.str();
  require(file.good(), ErrorCode::IoError, "write failed: " + path.string());
}

std::vector<CameraSet> read_cameras(const std::filesystem::path& path) {
  const std::vector<char> data = slurp(path);
  LineParser parser{std::string_view(data.data(), data.size())};
  std::string_view line;

  if (!parser.next_line(line)) parser.error("empty camera file");
  auto tokens = split_tokens(line);
  if (tokens.size() != 2 || tokens[0] != "g4d-cameras") parser.error("missing g4d-cameras header");
  if (tokens[1] != "1") fail(ErrorCode::VersionUnsupported, "camera file version not supported");

  if (!parser.next_line(line)) parser.error("missing timestamps line");
  tokens = split_tokens(line);
  if (tokens.size() != 2 || tokens[0] != "timestamps") parser.error("expected 'timestamps <k>'");
  const long k = parse_int(parser, tokens[1]);
  if (!parser.next_line(line)) parser.error("missing views line");
  tokens = split_tokens(line);
  if (tokens.size() != 2 || tokens[0] != "views") parser.error("expected 'views <n>'");
  const long n = parse_int(parser, tokens[1]);
  if (k < 1 || n < 1 || k > 100000 || n > 100000) parser.error("implausible camera counts");

  std::vector<CameraSet> sets(std::size_t(k));
  for (long t = 0; t < k; ++t) {
    sets[std::size_t(t)].reserve(std::size_t(n));
    for (long v = 0; v < n; ++v) {
      if (!parser.next_line(line)) parser.error("missing camera block header");
      tokens = split_tokens(line);
      if (tokens.size() != 4 || tokens[0] != "t" || tokens[2] != "view") {
        parser.error("expected 't <ti> view <vi>'");
      }
      if (parse_int(parser, tokens[1]) != t || parse_int(parser, tokens[3]) != v) {
        parser.error("camera block out of order");
      }

      if (!parser.next_line(line)) parser.error("missing quaternion line");
      tokens = split_tokens(line);
      if (tokens.size() != 5 || tokens[0] != "q") parser.error("expected 'q <w> <x> <y> <z>'");
      const double qw = parse_double(parser, tokens[1]);
      const double qx = parse_double(parser, tokens[2]);
      const double qy = parse_double(parser, tokens[3]);
      const double qz = parse_double(parser, tokens[4]);

      if (!parser.next_line(line)) parser.error("missing translation line");
      tokens = split_tokens(line);
      if (tokens.size() != 4 || tokens[0] != "T") parser.error("expected 'T <x> <y> <z>'");
      const Eigen::Vector3d tvec(parse_double(parser, tokens[1]), parse_double(parser, tokens[2]),
                                 parse_double(parser, tokens[3]));

      if (!parser.next_line(line)) parser.error("missing intrinsics line");
      tokens = split_tokens(line);
      if (tokens.size() != 5 || tokens[0] != "K") parser.error("expected 'K <fx> <fy> <cx> <cy>'");
      const double fx = parse_double(parser, tokens[1]);
      const double fy = parse_double(parser, tokens[2]);
      const double cx = parse_double(parser, tokens[3]);
      const double cy = parse_double(parser, tokens[4]);

      try {
        sets[std::size_t(t)].emplace_back(Eigen::Quaterniond(qw, qx, qy, qz), tvec, fx, fy, cx,
                                          cy);
      } catch (const Error& e) {
        parser.error(std::string("invalid camera: ") + e.what());
      }
    }
  }
  return sets;
}

// ---------------------------------------------------------------------------
// Fusion weights
// ---------------------------------------------------------------------------

void write_fusion_weights(const std::filesystem::path& path, const MlpWeights& weights) {
  ByteWriter out;
  out.magic("F4DW");
  out.u32(kVersion);
  out.u32(weights.input);
  out.u32(weights.hidden);
  out.u32(weights.output);
  out.u32(static_cast<std::uint32_t>(weights.note.size()));
  out.bytes(std::span<const char>(weights.note.data(), weights.note.size()));
  out.f32_span(weights.w1);
  out.f32_span(weights.b1);
  out.f32_span(weights.w2);
  out.f32_span(weights.b2);
  out.save(path);
}

MlpWeights read_fusion_weights(const std::filesystem::path& path) {
  ByteReader in(slurp(path));
  in.expect_magic("F4DW", "fusion weights");
  in.expect_version(kVersion);
  MlpWeights w;
  w.input = in.u32();
  w.hidden = in.u32();
  w.output = in.u32();
  const std::uint32_t note_len = in.u32();
  require(w.input >= 1 && w.input <= 4096 && w.hidden >= 1 && w.hidden <= 65536 &&
              w.output >= 1 && w.output <= 4096 && note_len <= 65536,
          ErrorCode::CorruptHeader, "implausible weight header");
  const std::vector<char> note = in.raw(note_len);
  w.note.assign(note.begin(), note.end());
  const std::uint64_t expected = (std::uint64_t(w.hidden) * w.input + w.hidden +
                                  std::uint64_t(w.output) * w.hidden + w.output) *
                                 4;
  in.expect_remaining(expected, "fusion weights");
  w.w1 = in.f32_vector(std::uint64_t(w.hidden) * w.input);
  w.b1 = in.f32_vector(w.hidden);
  w.w2 = in.f32_vector(std::uint64_t(w.output) * w.hidden);
  w.b2 = in.f32_vector(w.output);
  return w;
}

}  // namespace g4d
