#include "peh/mat5.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "peh/errors.hpp"

namespace peh {
namespace {

// MAT v5 data-element type codes.
enum : std::uint32_t {
  miINT8 = 1,
  miUINT8 = 2,
  miINT16 = 3,
  miUINT16 = 4,
  miINT32 = 5,
  miUINT32 = 6,
  miSINGLE = 7,
  miDOUBLE = 9,
  miINT64 = 12,
  miUINT64 = 13,
  miMATRIX = 14,
  miCOMPRESSED = 15,
};

// Real numeric array classes span mxDOUBLE_CLASS (6) .. mxUINT64_CLASS (15).
constexpr std::uint8_t mxDOUBLE_CLASS = 6;
constexpr std::uint8_t mxUINT64_CLASS = 15;
constexpr std::uint32_t kComplexFlag = 0x0800;

struct Cursor {
  const std::uint8_t* p;
  std::size_t len;
  std::size_t pos = 0;

  std::size_t remaining() const { return len - pos; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw MatError(std::string("truncated MAT data in ") + what);
  }

  template <typename T>
  T read() {
    need(sizeof(T), "scalar read");
    T v;
    std::memcpy(&v, p + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = std::span<const std::uint8_t>(p + pos, n);
    pos += n;
    return s;
  }

  void align8() {
    const std::size_t rem = pos % 8;
    if (rem) pos += std::min(8 - rem, remaining());
  }
};

struct Element {
  std::uint32_t type = 0;
  std::span<const std::uint8_t> data;
};

Element read_element(Cursor& c) {
  c.need(8, "element tag");
  std::uint32_t word0;
  std::memcpy(&word0, c.p + c.pos, 4);
  Element e;
  if (word0 & 0xFFFF0000u) {
    // Small data element: byte count lives in the upper half of the tag word.
    e.type = word0 & 0xFFFFu;
    const std::uint32_t nbytes = word0 >> 16;
    if (nbytes > 4) throw MatError("small element longer than 4 bytes");
    e.data = std::span<const std::uint8_t>(c.p + c.pos + 4, nbytes);
    c.pos += 8;
  } else {
    e.type = c.read<std::uint32_t>();
    const auto nbytes = c.read<std::uint32_t>();
    e.data = c.take(nbytes, "element payload");
    // Writers pad every element to an 8-byte boundary except compressed
    // ones, which are stored back to back.
    if (e.type != miCOMPRESSED) c.align8();
  }
  return e;
}

template <typename T>
void widen(std::span<const std::uint8_t> bytes, std::vector<double>& out) {
  const std::size_t n = bytes.size() / sizeof(T);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
    out[i] = static_cast<double>(v);
  }
}

std::vector<double> numeric_payload(const Element& e) {
  std::vector<double> out;
  switch (e.type) {
    case miDOUBLE:
      widen<double>(e.data, out);
      break;
    case miSINGLE:
      widen<float>(e.data, out);
      break;
    case miINT8:
      widen<std::int8_t>(e.data, out);
      break;
    case miUINT8:
      widen<std::uint8_t>(e.data, out);
      break;
    case miINT16:
      widen<std::int16_t>(e.data, out);
      break;
    case miUINT16:
      widen<std::uint16_t>(e.data, out);
      break;
    case miINT32:
      widen<std::int32_t>(e.data, out);
      break;
    case miUINT32:
      widen<std::uint32_t>(e.data, out);
      break;
    case miINT64:
      widen<std::int64_t>(e.data, out);
      break;
    case miUINT64:
      widen<std::uint64_t>(e.data, out);
      break;
    default:
      throw MatError("unsupported numeric storage type " + std::to_string(e.type));
  }
  return out;
}

MatVariable parse_matrix(std::span<const std::uint8_t> body) {
  Cursor c{body.data(), body.size()};

  const Element flags_el = read_element(c);
  if (flags_el.type != miUINT32 || flags_el.data.size() < 8)
    throw MatError("malformed array flags element");
  std::uint32_t flags;
  std::memcpy(&flags, flags_el.data.data(), 4);
  const std::uint8_t klass = static_cast<std::uint8_t>(flags & 0xFF);

  const Element dims_el = read_element(c);
  if (dims_el.type != miINT32) throw MatError("malformed dimensions element");
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i + 4 <= dims_el.data.size(); i += 4) {
    std::int32_t d;
    std::memcpy(&d, dims_el.data.data() + i, 4);
    if (d < 0) throw MatError("negative dimension");
    dims.push_back(static_cast<std::size_t>(d));
  }

  const Element name_el = read_element(c);
  if (name_el.type != miINT8) throw MatError("malformed array name element");
  MatVariable var;
  var.name.assign(reinterpret_cast<const char*>(name_el.data.data()), name_el.data.size());
  var.dims = dims;

  if (klass < mxDOUBLE_CLASS || klass > mxUINT64_CLASS || (flags & kComplexFlag)) {
    // Known variable of an unsupported class; surface the name only.
    return var;
  }

  const Element real_el = read_element(c);
  var.values = numeric_payload(real_el);

  std::size_t expected = 1;
  for (std::size_t d : dims) expected *= d;
  if (var.values.size() != expected)
    throw MatError("variable '" + var.name + "': payload size disagrees with dimensions");
  return var;
}

std::vector<std::uint8_t> inflate_all(std::span<const std::uint8_t> in) {
  std::vector<std::uint8_t> out(std::max<std::size_t>(in.size() * 4, 1 << 16));
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw MatError("zlib init failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::size_t written = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (written == out.size()) out.resize(out.size() * 2);
    zs.next_out = out.data() + written;
    zs.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&zs, Z_NO_FLUSH);
    written = out.size() - zs.avail_out;
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw MatError("corrupt compressed MAT element");
    }
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out > 0) {
      inflateEnd(&zs);
      throw MatError("truncated compressed MAT element");
    }
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

}  // namespace

std::vector<MatVariable> parse_mat5(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 128) throw MatError("malformed MAT header: file shorter than 128 bytes");
  std::uint16_t version, endian;
  std::memcpy(&version, bytes.data() + 124, 2);
  std::memcpy(&endian, bytes.data() + 126, 2);
  if (endian == 0x494D)  // bytes 'M','I': written on a big-endian machine
    throw MatError("big-endian MAT files are not supported");
  if (endian != 0x4D49) throw MatError("malformed MAT header: bad endian indicator");
  if (version != 0x0100) throw MatError("unsupported MAT version");

  std::vector<MatVariable> vars;
  Cursor c{bytes.data(), bytes.size(), 128};
  while (c.remaining() >= 8) {
    const Element e = read_element(c);
    if (e.type == miMATRIX) {
      vars.push_back(parse_matrix(e.data));
    } else if (e.type == miCOMPRESSED) {
      const std::vector<std::uint8_t> raw = inflate_all(e.data);
      Cursor inner{raw.data(), raw.size()};
      const Element decompressed = read_element(inner);
      if (decompressed.type != miMATRIX)
        throw MatError("compressed element does not hold a matrix");
      vars.push_back(parse_matrix(decompressed.data));
    } else {
      throw MatError("unsupported top-level element type " + std::to_string(e.type));
    }
  }
  if (c.remaining() != 0) throw MatError("trailing bytes do not form a MAT element");
  return vars;
}

std::vector<MatVariable> read_mat_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MatError("cannot open MAT file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_mat5(bytes);
}

std::vector<std::string> mat5_variable_names(const std::filesystem::path& path) {
  std::vector<std::string> names;
  for (const MatVariable& v : read_mat_file(path)) names.push_back(v.name);
  return names;
}

MatVariable read_mat_variable(const std::filesystem::path& path, const std::string& name_pattern) {
  for (MatVariable& v : read_mat_file(path)) {
    if (v.name.find(name_pattern) == std::string::npos) continue;
    if (v.values.empty())
      throw MatError("variable '" + v.name + "' matches but is not a real double array");
    return v;
  }
  throw MatError("no variable matching '" + name_pattern + "' in " + path.string());
}

AccelerationTrace read_mat_trace(const std::filesystem::path& path, const std::string& name_pattern,
                                 double sample_rate_hz, std::optional<int> label) {
  MatVariable var = read_mat_variable(path, name_pattern);
  std::size_t non_unit = 0;
  for (std::size_t d : var.dims)
    if (d > 1) ++non_unit;
  if (non_unit > 1)
    throw MatError("variable '" + var.name + "' is not a vector");
  if (var.values.size() < 2)
    throw MatError("variable '" + var.name + "' holds a scalar, not a signal");

  AccelerationTrace trace;
  trace.samples = std::move(var.values);
  trace.sample_rate = sample_rate_hz;
  trace.label = label;
  trace.source_id = path.filename().string() + ":" + var.name;
  trace.validate();
  return trace;
}

}  // namespace peh
