#include "gem/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gem/error.hpp"

namespace gem {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void ByteWriter::u32(std::uint32_t v) { put_le(buffer_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(buffer_, v); }
void ByteWriter::f64(double v) { put_le(buffer_, std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::bytes(std::span<const std::uint8_t> data) {
  buffer_.insert(buffer_.end(), data.begin(), data.end());
}

void ByteWriter::raw(std::string_view text) { buffer_.insert(buffer_.end(), text.begin(), text.end()); }

void ByteWriter::str(std::string_view text) {
  u64(text.size());
  raw(text);
}

void ByteWriter::f64s(std::span<const double> values) {
  buffer_.reserve(buffer_.size() + 8 * values.size());
  for (double v : values) f64(v);
}

void ByteReader::need(std::size_t n) const {
  if (n > data_.size() - pos_) throw FormatError("truncated binary container");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  const auto v = get_le<std::uint32_t>(data_.data() + pos_);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  const auto v = get_le<std::uint64_t>(data_.data() + pos_);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
  need(n);
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::string ByteReader::raw(std::size_t n) {
  auto b = bytes(n);
  return std::string(b.begin(), b.end());
}

std::string ByteReader::str() { return raw(length(1)); }

void ByteReader::f64s(std::span<double> out) {
  need(8 * out.size());
  for (double& v : out) v = f64();
}

std::size_t ByteReader::length(std::size_t elem_size) {
  const std::uint64_t n = u64();
  if (elem_size > 0 && n > remaining() / elem_size) throw FormatError("corrupt length field in binary container");
  return static_cast<std::size_t>(n);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace gem
