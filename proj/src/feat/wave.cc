// feat/wave.cc

// Copyright 2026  cmkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "feat/wave.h"

#include <cmath>
#include <cstring>
#include <fstream>

namespace cmkit {

real Waveform::Rms() const { return std::sqrt(MeanSquare()); }

real Waveform::MeanSquare() const {
  if (samples.empty()) return 0.0;
  real acc = 0.0;
  for (real s : samples) acc += s * s;
  return acc / static_cast<real>(samples.size());
}

real Waveform::PeakAbs() const {
  real peak = 0.0;
  for (real s : samples) peak = std::max(peak, std::abs(s));
  return peak;
}

void Waveform::Validate() const {
  if (sample_rate <= 0)
    CMKIT_ERR(InvalidInputError) << "waveform sample_rate must be positive, "
                                 << "got " << sample_rate;
  if (samples.empty())
    CMKIT_ERR(InvalidInputError) << "waveform must contain at least 1 sample";
  for (real s : samples)
    if (!std::isfinite(s))
      CMKIT_ERR(InvalidInputError) << "waveform contains a non-finite sample";
}

namespace {

uint32 ReadU32(const unsigned char *p) {
  return static_cast<uint32>(p[0]) | (static_cast<uint32>(p[1]) << 8) |
         (static_cast<uint32>(p[2]) << 16) | (static_cast<uint32>(p[3]) << 24);
}
uint32 ReadU16(const unsigned char *p) {
  return static_cast<uint32>(p[0]) | (static_cast<uint32>(p[1]) << 8);
}
void PutU32(uint32 v, std::string *out) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
  out->push_back(static_cast<char>((v >> 16) & 0xff));
  out->push_back(static_cast<char>((v >> 24) & 0xff));
}
void PutU16(uint32 v, std::string *out) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

Waveform ReadWav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) CMKIT_ERR(IoError) << "cannot open wav file: " << path;
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const unsigned char *p =
      reinterpret_cast<const unsigned char *>(bytes.data());
  size_t n = bytes.size();
  if (n < 12)
    CMKIT_ERR(FormatError) << "RIFF header: file too short (" << n
                           << " bytes): " << path;
  if (std::memcmp(p, "RIFF", 4) != 0)
    CMKIT_ERR(FormatError) << "RIFF magic: missing 'RIFF' in " << path;
  if (std::memcmp(p + 8, "WAVE", 4) != 0)
    CMKIT_ERR(FormatError) << "WAVE magic: missing 'WAVE' in " << path;

  bool have_fmt = false;
  uint32 audio_format = 0, channels = 0, sample_rate = 0, bits = 0;
  size_t data_pos = 0, data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= n) {
    const unsigned char *chunk = p + pos;
    uint32 chunk_len = ReadU32(chunk + 4);
    size_t body = pos + 8;
    if (body + chunk_len > n)
      CMKIT_ERR(FormatError) << "chunk size: chunk at offset " << pos
                             << " overruns file: " << path;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_len < 16)
        CMKIT_ERR(FormatError) << "fmt chunk: expected >= 16 bytes, got "
                               << chunk_len;
      audio_format = ReadU16(p + body);
      channels = ReadU16(p + body + 2);
      sample_rate = ReadU32(p + body + 4);
      bits = ReadU16(p + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data_pos = body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }
  if (!have_fmt) CMKIT_ERR(FormatError) << "fmt chunk: missing in " << path;
  if (audio_format != 1)
    CMKIT_ERR(FormatError) << "audio_format: expected PCM (1), got "
                           << audio_format;
  if (channels != 1)
    CMKIT_ERR(FormatError) << "channels: expected mono (1), got " << channels;
  if (bits != 16)
    CMKIT_ERR(FormatError) << "bits_per_sample: expected 16, got " << bits;
  if (data_pos == 0)
    CMKIT_ERR(FormatError) << "data chunk: missing in " << path;
  if (data_len % 2 != 0)
    CMKIT_ERR(FormatError) << "data chunk: odd byte count " << data_len;

  Waveform w;
  w.sample_rate = static_cast<int32>(sample_rate);
  size_t count = data_len / 2;
  w.samples.resize(count);
  for (size_t i = 0; i < count; ++i) {
    int16_t v = static_cast<int16_t>(
        static_cast<uint16_t>(ReadU16(p + data_pos + 2 * i)));
    w.samples[i] = static_cast<real>(v) / 32768.0;
  }
  return w;
}

void WriteWav(const std::string &path, const Waveform &w) {
  w.Validate();
  std::string out;
  size_t count = w.samples.size();
  uint32 data_len = static_cast<uint32>(count * 2);
  out.reserve(44 + data_len);
  out += "RIFF";
  PutU32(36 + data_len, &out);
  out += "WAVE";
  out += "fmt ";
  PutU32(16, &out);
  PutU16(1, &out);                                    // PCM
  PutU16(1, &out);                                    // mono
  PutU32(static_cast<uint32>(w.sample_rate), &out);   // sample rate
  PutU32(static_cast<uint32>(w.sample_rate) * 2, &out);  // byte rate
  PutU16(2, &out);                                    // block align
  PutU16(16, &out);                                   // bits
  out += "data";
  PutU32(data_len, &out);
  for (size_t i = 0; i < count; ++i) {
    real x = w.samples[i];
    long v = std::lround(x * 32768.0);
    if (v > 32767) v = 32767;
    if (v < -32768) v = -32768;
    PutU16(static_cast<uint32>(static_cast<uint16_t>(static_cast<int16_t>(v))),
           &out);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) CMKIT_ERR(IoError) << "cannot open for writing: " << path;
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) CMKIT_ERR(IoError) << "short write: " << path;
}

}  // namespace cmkit
