#include "convsim/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

#include "convsim/error.hpp"

namespace convsim {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

struct WavHeader {
  std::uint16_t format = 0;
  int channels = 0;
  int sample_rate = 0;
  int bits = 0;
  long data_offset = 0;       // byte offset of the data payload
  std::uint32_t data_bytes = 0;
};

WavHeader parse_header(std::FILE* f, const std::filesystem::path& path) {
  unsigned char buf[12];
  if (std::fread(buf, 1, 12, f) != 12 || std::memcmp(buf, "RIFF", 4) != 0 ||
      std::memcmp(buf + 8, "WAVE", 4) != 0) {
    throw ParseError("not a RIFF/WAVE file: " + path.string());
  }
  WavHeader h;
  bool have_fmt = false;
  for (;;) {
    unsigned char chunk[8];
    if (std::fread(chunk, 1, 8, f) != 8) break;
    std::uint32_t size = read_u32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      unsigned char fmt[16];
      if (size < 16 || std::fread(fmt, 1, 16, f) != 16) {
        throw ParseError("truncated fmt chunk: " + path.string());
      }
      h.format = read_u16(fmt);
      h.channels = read_u16(fmt + 2);
      h.sample_rate = static_cast<int>(read_u32(fmt + 4));
      h.bits = read_u16(fmt + 14);
      if (size > 16 && std::fseek(f, static_cast<long>(size - 16), SEEK_CUR) != 0) {
        throw ParseError("truncated fmt chunk: " + path.string());
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      h.data_offset = std::ftell(f);
      h.data_bytes = size;
      break;
    } else {
      // skip unknown chunk, chunks are word aligned
      long skip = static_cast<long>(size + (size & 1));
      if (std::fseek(f, skip, SEEK_CUR) != 0) {
        throw ParseError("truncated chunk: " + path.string());
      }
    }
  }
  if (!have_fmt || h.data_offset == 0) {
    throw ParseError("missing fmt or data chunk: " + path.string());
  }
  if (h.channels <= 0 || h.sample_rate <= 0) {
    throw ParseError("bad wav format fields: " + path.string());
  }
  bool supported = (h.format == kFormatPcm && h.bits == 16) ||
                   (h.format == kFormatFloat && h.bits == 32);
  if (!supported) {
    throw ParseError("unsupported wav encoding (format " + std::to_string(h.format) +
                     ", " + std::to_string(h.bits) + " bit): " + path.string());
  }
  return h;
}

double decode_pcm16(std::int16_t q) {
  return q < 0 ? static_cast<double>(q) / 32768.0 : static_cast<double>(q) / 32767.0;
}

std::int16_t encode_pcm16(double x) {
  if (x < -1.0) x = -1.0;
  if (x > 1.0) x = 1.0;
  long q = std::lround(x < 0 ? x * 32768.0 : x * 32767.0);
  if (q < -32768) q = -32768;
  if (q > 32767) q = 32767;
  return static_cast<std::int16_t>(q);
}

std::vector<double> read_frames(std::FILE* f, const WavHeader& h, std::int64_t start_frame,
                                std::int64_t num_frames, int channel,
                                const std::filesystem::path& path) {
  if (channel < 0 || channel >= h.channels) {
    throw ValidationError("channel " + std::to_string(channel) + " out of range for " +
                          std::to_string(h.channels) + "-channel file: " + path.string());
  }
  int bytes_per_sample = h.bits / 8;
  int frame_bytes = bytes_per_sample * h.channels;
  std::int64_t total_frames = h.data_bytes / frame_bytes;
  if (start_frame < 0 || start_frame + num_frames > total_frames) {
    throw ValidationError("requested range [" + std::to_string(start_frame) + ", " +
                          std::to_string(start_frame + num_frames) + ") outside " +
                          std::to_string(total_frames) + " frames: " + path.string());
  }
  if (std::fseek(f, h.data_offset + static_cast<long>(start_frame * frame_bytes), SEEK_SET) != 0) {
    throw IoError("seek failed: " + path.string());
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(num_frames * frame_bytes));
  if (!raw.empty() && std::fread(raw.data(), 1, raw.size(), f) != raw.size()) {
    throw IoError("short read: " + path.string());
  }
  std::vector<double> out(static_cast<std::size_t>(num_frames));
  std::size_t off = static_cast<std::size_t>(channel) * bytes_per_sample;
  std::size_t stride = static_cast<std::size_t>(frame_bytes);
  if (h.format == kFormatPcm) {
    for (std::int64_t i = 0; i < num_frames; ++i) {
      std::uint16_t u = read_u16(raw.data() + off + static_cast<std::size_t>(i) * stride);
      out[static_cast<std::size_t>(i)] = decode_pcm16(static_cast<std::int16_t>(u));
    }
  } else {
    for (std::int64_t i = 0; i < num_frames; ++i) {
      std::uint32_t u = read_u32(raw.data() + off + static_cast<std::size_t>(i) * stride);
      float v;
      std::memcpy(&v, &u, 4);
      out[static_cast<std::size_t>(i)] = static_cast<double>(v);
    }
  }
  return out;
}

FilePtr open_read(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open for reading: " + path.string());
  return f;
}

}  // namespace

WavData read_wav(const std::filesystem::path& path, int channel) {
  FilePtr f = open_read(path);
  WavHeader h = parse_header(f.get(), path);
  int frame_bytes = (h.bits / 8) * h.channels;
  std::int64_t total_frames = h.data_bytes / frame_bytes;
  WavData d;
  d.sample_rate = h.sample_rate;
  d.num_channels = h.channels;
  d.samples = read_frames(f.get(), h, 0, total_frames, channel, path);
  return d;
}

std::vector<double> read_wav_segment(const std::filesystem::path& path, double offset,
                                     double duration, int expected_rate, int channel) {
  FilePtr f = open_read(path);
  WavHeader h = parse_header(f.get(), path);
  if (expected_rate > 0 && h.sample_rate != expected_rate) {
    throw ValidationError("sample rate mismatch (file " + std::to_string(h.sample_rate) +
                          " Hz, expected " + std::to_string(expected_rate) +
                          " Hz): " + path.string());
  }
  std::int64_t start = std::llround(offset * h.sample_rate);
  std::int64_t n = std::llround(duration * h.sample_rate);
  return read_frames(f.get(), h, start, n, channel, path);
}

std::pair<int, std::int64_t> probe_wav(const std::filesystem::path& path) {
  FilePtr f = open_read(path);
  WavHeader h = parse_header(f.get(), path);
  int frame_bytes = (h.bits / 8) * h.channels;
  return {h.sample_rate, h.data_bytes / frame_bytes};
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate, WavEncoding encoding) {
  for (double s : samples) {
    if (!std::isfinite(s)) throw ValidationError("non-finite sample in " + path.string());
  }
  std::string payload;
  std::uint16_t format, bits;
  if (encoding == WavEncoding::pcm16) {
    format = kFormatPcm;
    bits = 16;
    payload.reserve(samples.size() * 2);
    for (double s : samples) {
      put_u16(payload, static_cast<std::uint16_t>(encode_pcm16(s)));
    }
  } else {
    format = kFormatFloat;
    bits = 32;
    payload.reserve(samples.size() * 4);
    for (double s : samples) {
      double c = s < -1.0 ? -1.0 : (s > 1.0 ? 1.0 : s);
      float v = static_cast<float>(c);
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      put_u32(payload, u);
    }
  }

  std::string out;
  std::uint16_t block_align = static_cast<std::uint16_t>(bits / 8);
  bool is_float = encoding == WavEncoding::float32;
  std::uint32_t fmt_size = is_float ? 18 : 16;
  std::uint32_t riff_size = 4 + (8 + fmt_size) + (is_float ? 8 + 4 : 0) + 8 +
                            static_cast<std::uint32_t>(payload.size());
  out += "RIFF";
  put_u32(out, riff_size);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, fmt_size);
  put_u16(out, format);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * block_align);
  put_u16(out, block_align);
  put_u16(out, bits);
  if (is_float) {
    put_u16(out, 0);  // cbSize
    out += "fact";
    put_u32(out, 4);
    put_u32(out, static_cast<std::uint32_t>(samples.size()));
  }
  out += "data";
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out += payload;

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open for writing: " + path.string());
  if (!out.empty() && std::fwrite(out.data(), 1, out.size(), f.get()) != out.size()) {
    throw IoError("short write: " + path.string());
  }
  if (std::fflush(f.get()) != 0) throw IoError("flush failed: " + path.string());
}

}  // namespace convsim
