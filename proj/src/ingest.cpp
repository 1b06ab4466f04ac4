#include "effeval/ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include <json.hpp>

#include "text_util.hpp"

namespace effeval::ingest {
namespace {

using nlohmann::json;

constexpr char kContainerMagic[4] = {'E', 'F', 'E', 'V'};
constexpr char kRemapMagic[4] = {'E', 'F', 'R', 'M'};

std::uint16_t load_u16(const std::uint8_t* p) noexcept {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t load_u32(const std::uint8_t* p) noexcept {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u16(std::uint8_t* p, std::uint16_t v) noexcept {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}

void store_u32(std::uint8_t* p, std::uint32_t v) noexcept {
  for (int k = 0; k < 4; ++k) p[k] = static_cast<std::uint8_t>(v >> (8 * k));
}

// In-place conversion between host floats and little-endian f32 bytes.
void floats_to_le(std::span<float> values) noexcept {
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : values) {
      auto bits = std::bit_cast<std::uint32_t>(f);
      bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
      f = std::bit_cast<float>(bits);
    }
  }
}

void floats_from_le(std::span<float> values) noexcept { floats_to_le(values); }

std::string describe(const std::filesystem::path& path) { return "'" + path.string() + "'"; }

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIo, "cannot open " + describe(path));
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::kIo, "cannot create " + describe(path));
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  auto out = open_output(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) raise(ErrorCode::kIo, "write failed for " + describe(path));
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

void require_plain_field(std::string_view field, const char* what) {
  if (field.find_first_of("\t\n\r") != std::string_view::npos) {
    raise(ErrorCode::kInvalidArgument, std::string(what) + " contains a tab or newline");
  }
}

}  // namespace

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes, std::uint32_t seed) {
  uLong crc = seed;
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

// ---------------------------------------------------------------------------
// EFEV

ContainerReader::ContainerReader(const std::filesystem::path& path) : path_(path) {
  in_ = open_input(path);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) raise(ErrorCode::kIo, "cannot stat " + describe(path));

  std::uint8_t header[kContainerHeaderBytes];
  const auto got = in_.read(reinterpret_cast<char*>(header), sizeof(header)).gcount();
  if (got >= 4 && std::memcmp(header, kContainerMagic, 4) != 0) {
    raise(ErrorCode::kBadMagic, describe(path) + " is not an EFEV container");
  }
  if (size < kContainerHeaderBytes + 4 || got != static_cast<std::streamsize>(sizeof(header))) {
    raise(ErrorCode::kTruncatedPayload, describe(path) + " is shorter than header and CRC");
  }
  info_.version = load_u16(header + 4);
  info_.flags = load_u16(header + 6);
  info_.dim = load_u32(header + 8);
  info_.segment_count = load_u32(header + 12);
  if (info_.version != kContainerVersion) {
    raise(ErrorCode::kVersionUnsupported,
          describe(path) + " has format version " + std::to_string(info_.version));
  }
  if (info_.flags != 0) {
    raise(ErrorCode::kVersionUnsupported,
          describe(path) + " sets unknown flags " + std::to_string(info_.flags));
  }
  if (info_.dim == 0) raise(ErrorCode::kLayoutMismatch, describe(path) + " declares dim 0");

  payload_end_ = size - 4;
  info_.payload_bytes = payload_end_ - kContainerHeaderBytes;

  // CRC over the payload first: any truncation or bit flip surfaces here.
  std::vector<std::uint8_t> chunk(1 << 16);
  std::uint32_t crc = 0;
  std::uint64_t remaining = info_.payload_bytes;
  while (remaining > 0) {
    const auto want = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, chunk.size()));
    in_.read(reinterpret_cast<char*>(chunk.data()), static_cast<std::streamsize>(want));
    if (in_.gcount() != static_cast<std::streamsize>(want)) {
      raise(ErrorCode::kIo, "short read on " + describe(path));
    }
    crc = crc32_ieee({chunk.data(), want}, crc);
    remaining -= want;
  }
  std::uint8_t trailer[4];
  in_.read(reinterpret_cast<char*>(trailer), 4);
  info_.crc = load_u32(trailer);
  if (info_.crc != crc) {
    std::ostringstream msg;
    msg << describe(path) << " stored CRC " << std::hex << info_.crc << " != computed " << crc;
    raise(ErrorCode::kCrcMismatch, msg.str());
  }
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(kContainerHeaderBytes));
  cursor_ = kContainerHeaderBytes;
}

void ContainerReader::read_exact(void* dst, std::size_t bytes) {
  if (cursor_ + bytes > payload_end_) {
    raise(ErrorCode::kTruncatedPayload, describe(path_) + ": segment " +
                                            std::to_string(next_index_) +
                                            " runs past the end of the payload");
  }
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
  if (in_.gcount() != static_cast<std::streamsize>(bytes)) {
    raise(ErrorCode::kIo, "short read on " + describe(path_));
  }
  cursor_ += bytes;
}

std::uint32_t ContainerReader::read_u32() {
  std::uint8_t b[4];
  read_exact(b, 4);
  return load_u32(b);
}

std::optional<ContainerSegment> ContainerReader::next() {
  if (next_index_ >= info_.segment_count) {
    if (cursor_ != payload_end_) {
      raise(ErrorCode::kLayoutMismatch,
            describe(path_) + " has " + std::to_string(payload_end_ - cursor_) +
                " trailing payload bytes after the declared segments");
    }
    return std::nullopt;
  }
  const std::uint32_t token_count = read_u32();
  const std::uint64_t min_bytes =
      static_cast<std::uint64_t>(token_count) * (4 + 4 * static_cast<std::uint64_t>(info_.dim));
  if (cursor_ + min_bytes > payload_end_) {
    raise(ErrorCode::kTruncatedPayload, describe(path_) + ": segment " +
                                            std::to_string(next_index_) + " declares " +
                                            std::to_string(token_count) + " tokens past the payload");
  }

  ContainerSegment seg;
  seg.tokens.reserve(token_count);
  for (std::uint32_t t = 0; t < token_count; ++t) {
    const std::uint32_t len = read_u32();
    std::string token(len, '\0');
    read_exact(token.data(), len);
    if (!detail::is_valid_utf8(token)) {
      raise(ErrorCode::kParse, describe(path_) + ": segment " + std::to_string(next_index_) +
                                   " has a token that is not valid UTF-8");
    }
    seg.tokens.push_back(std::move(token));
  }

  const std::size_t n_values = static_cast<std::size_t>(token_count) * info_.dim;
  scratch_.resize(n_values);
  read_exact(scratch_.data(), n_values * sizeof(float));
  floats_from_le(scratch_);
  std::vector<double> values(scratch_.begin(), scratch_.end());
  try {
    seg.embedding = EmbeddingMatrix(token_count, info_.dim, std::move(values));
  } catch (const Error& e) {
    raise(e.code(), describe(path_) + ": segment " + std::to_string(next_index_) + ": " + e.what());
  }
  ++next_index_;
  return seg;
}

std::vector<ContainerSegment> read_container(const std::filesystem::path& path) {
  ContainerReader reader(path);
  std::vector<ContainerSegment> out;
  out.reserve(reader.segment_count());
  while (auto seg = reader.next()) out.push_back(std::move(*seg));
  return out;
}

ContainerInfo check_container(const std::filesystem::path& path) {
  ContainerReader reader(path);
  ContainerInfo info = reader.info();
  while (auto seg = reader.next()) info.total_tokens += seg->tokens.size();
  return info;
}

ContainerWriter::ContainerWriter(const std::filesystem::path& path, std::size_t dim)
    : path_(path), dim_(dim) {
  if (dim == 0) raise(ErrorCode::kInvalidArgument, "container dim must be >= 1");
  if (dim > UINT32_MAX) raise(ErrorCode::kInvalidArgument, "container dim exceeds u32");
  out_ = open_output(path);
  std::uint8_t header[kContainerHeaderBytes];
  std::memcpy(header, kContainerMagic, 4);
  store_u16(header + 4, kContainerVersion);
  store_u16(header + 6, 0);
  store_u32(header + 8, static_cast<std::uint32_t>(dim));
  store_u32(header + 12, 0);
  out_.write(reinterpret_cast<const char*>(header), sizeof(header));
}

ContainerWriter::~ContainerWriter() {
  if (!finished_) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void ContainerWriter::write_payload(const void* data, std::size_t bytes) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  crc_ = crc32_ieee({static_cast<const std::uint8_t*>(data), bytes}, crc_);
}

void ContainerWriter::add(std::span<const std::string> tokens, std::span<const float> values) {
  if (finished_) raise(ErrorCode::kPrecondition, "container writer already finished");
  if (values.size() != tokens.size() * dim_) {
    raise(ErrorCode::kDimensionMismatch, "segment values do not match tokens x dim");
  }
  if (count_ == UINT32_MAX) raise(ErrorCode::kInvalidArgument, "too many segments");
  for (float v : values) {
    if (!std::isfinite(v)) raise(ErrorCode::kNonFiniteValue, "segment value is NaN or Inf");
  }
  std::uint8_t word[4];
  store_u32(word, static_cast<std::uint32_t>(tokens.size()));
  write_payload(word, 4);
  for (const auto& token : tokens) {
    if (!detail::is_valid_utf8(token)) raise(ErrorCode::kInvalidArgument, "token is not valid UTF-8");
    store_u32(word, static_cast<std::uint32_t>(token.size()));
    write_payload(word, 4);
    write_payload(token.data(), token.size());
  }
  std::vector<float> le(values.begin(), values.end());
  floats_to_le(le);
  write_payload(le.data(), le.size() * sizeof(float));
  ++count_;
}

void ContainerWriter::add(const ContainerSegment& segment) {
  if (segment.embedding.rows() != segment.tokens.size()) {
    raise(ErrorCode::kDimensionMismatch, "segment tokens and embedding rows differ");
  }
  if (segment.embedding.rows() > 0 && segment.embedding.dim() != dim_) {
    raise(ErrorCode::kDimensionMismatch, "segment dim " + std::to_string(segment.embedding.dim()) +
                                             " != container dim " + std::to_string(dim_));
  }
  const auto v = segment.embedding.values();
  std::vector<float> f(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) f[k] = static_cast<float>(v[k]);
  add(segment.tokens, f);
}

void ContainerWriter::finish() {
  if (finished_) return;
  finished_ = true;
  std::uint8_t word[4];
  store_u32(word, crc_);
  out_.write(reinterpret_cast<const char*>(word), 4);
  store_u32(word, count_);
  out_.seekp(12);
  out_.write(reinterpret_cast<const char*>(word), 4);
  out_.close();
  if (!out_) raise(ErrorCode::kIo, "write failed for " + describe(path_));
}

void write_container(std::span<const ContainerSegment> segments, std::size_t dim,
                     const std::filesystem::path& path) {
  ContainerWriter writer(path, dim);
  for (const auto& seg : segments) writer.add(seg);
  writer.finish();
}

// ---------------------------------------------------------------------------
// Segments file

SegmentRecord parse_segment_line(std::string_view line, std::size_t line_number) {
  const auto where = "line " + std::to_string(line_number);
  const auto fields = split_tabs(line);
  if (fields.size() != 6) {
    raise(ErrorCode::kColumnCount,
          where + " has " + std::to_string(fields.size()) + " columns, expected 6");
  }
  if (!detail::is_valid_utf8(line)) raise(ErrorCode::kParse, where + " is not valid UTF-8");
  SegmentRecord rec;
  rec.lang_pair = std::string(fields[0]);
  if (!is_valid_lang_pair(rec.lang_pair)) {
    raise(ErrorCode::kParse, where + ": bad language pair '" + rec.lang_pair + "'");
  }
  rec.system_id = std::string(fields[1]);
  rec.source = std::string(fields[2]);
  rec.hypothesis = std::string(fields[3]);
  if (!fields[4].empty()) rec.reference = std::string(fields[4]);
  if (!fields[5].empty()) {
    const auto score = detail::parse_real(fields[5]);
    if (!score) {
      raise(ErrorCode::kBadScore, where + ": human score '" + std::string(fields[5]) +
                                      "' is not a finite decimal");
    }
    rec.human_score = *score;
  }
  return rec;
}

std::vector<SegmentRecord> read_segments(const std::filesystem::path& path) {
  const auto text = read_text(path);
  std::vector<SegmentRecord> records;
  std::size_t line_number = 0;
  for (auto line : split_lines(text)) {
    ++line_number;
    if (!line.empty() && line.front() == '#') continue;
    try {
      records.push_back(parse_segment_line(line, line_number));
    } catch (const Error& e) {
      raise(e.code(), describe(path) + ": " + e.what());
    }
  }
  return records;
}

void write_segments(std::span<const SegmentRecord> records, const std::filesystem::path& path) {
  std::string text;
  for (const auto& r : records) {
    if (!is_valid_lang_pair(r.lang_pair)) {
      raise(ErrorCode::kInvalidArgument, "bad language pair '" + r.lang_pair + "'");
    }
    require_plain_field(r.system_id, "system_id");
    require_plain_field(r.source, "source");
    require_plain_field(r.hypothesis, "hypothesis");
    if (r.reference) require_plain_field(*r.reference, "reference");
    text += r.lang_pair + '\t' + r.system_id + '\t' + r.source + '\t' + r.hypothesis + '\t';
    if (r.reference) text += *r.reference;
    text += '\t';
    if (r.human_score) {
      if (!std::isfinite(*r.human_score)) raise(ErrorCode::kBadScore, "human score is NaN or Inf");
      text += detail::format_real(*r.human_score);
    }
    text += '\n';
  }
  write_text(path, text);
}

std::string segment_key(std::size_t ordinal) { return std::to_string(ordinal); }

// ---------------------------------------------------------------------------
// IDF

metrics::IdfTable read_idf(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    const auto doc = json::parse(text);
    if (!doc.is_object() || !doc.contains("N") || !doc.contains("df")) {
      raise(ErrorCode::kParse, describe(path) + ": expected an object with keys N and df");
    }
    const auto& n = doc.at("N");
    if (!n.is_number_unsigned() || n.get<std::uint64_t>() == 0) {
      raise(ErrorCode::kParse, describe(path) + ": N must be a positive integer");
    }
    const auto& df = doc.at("df");
    if (!df.is_object()) raise(ErrorCode::kParse, describe(path) + ": df must be an object");
    std::map<std::string, std::uint64_t> counts;
    for (const auto& [token, count] : df.items()) {
      if (!count.is_number_unsigned()) {
        raise(ErrorCode::kParse, describe(path) + ": df of '" + token + "' is not a count");
      }
      counts.emplace(token, count.get<std::uint64_t>());
    }
    return metrics::IdfTable(n.get<std::uint64_t>(), std::move(counts));
  } catch (const json::exception& e) {
    raise(ErrorCode::kParse, describe(path) + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw;
    raise(ErrorCode::kParse, describe(path) + ": " + e.what());
  }
}

void write_idf(const metrics::IdfTable& table, const std::filesystem::path& path) {
  json df = json::object();
  for (const auto& [token, count] : table.frequencies()) df[token] = count;
  json doc = json::object();
  doc["N"] = table.doc_count();
  doc["df"] = std::move(df);
  write_text(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// EFRM

metrics::RemapMatrix read_remap(const std::filesystem::path& path) {
  const auto text = read_text(path);
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  if (text.size() >= 4 && std::memcmp(bytes, kRemapMagic, 4) != 0) {
    raise(ErrorCode::kBadMagic, describe(path) + " is not an EFRM remap matrix");
  }
  if (text.size() < 16) raise(ErrorCode::kTruncatedPayload, describe(path) + " is too short");
  const auto version = load_u16(bytes + 4);
  const auto flags = load_u16(bytes + 6);
  const auto dim = load_u32(bytes + 8);
  if (version != kRemapVersion) {
    raise(ErrorCode::kVersionUnsupported,
          describe(path) + " has format version " + std::to_string(version));
  }
  if ((flags & ~1u) != 0) raise(ErrorCode::kVersionUnsupported, describe(path) + " sets unknown flags");
  if (dim == 0) raise(ErrorCode::kLayoutMismatch, describe(path) + " declares dim 0");

  const std::size_t payload = text.size() - 12 - 4;
  const std::uint32_t stored = load_u32(bytes + text.size() - 4);
  if (crc32_ieee({bytes + 12, payload}) != stored) {
    raise(ErrorCode::kCrcMismatch, describe(path) + " payload CRC mismatch");
  }
  const bool has_bias = (flags & 1u) != 0;
  const std::uint64_t floats = static_cast<std::uint64_t>(dim) * dim + (has_bias ? dim : 0);
  if (floats * 4 > payload) raise(ErrorCode::kTruncatedPayload, describe(path) + " is truncated");
  if (floats * 4 < payload) raise(ErrorCode::kLayoutMismatch, describe(path) + " has trailing bytes");

  std::vector<float> raw(static_cast<std::size_t>(floats));
  std::memcpy(raw.data(), bytes + 12, raw.size() * sizeof(float));
  floats_from_le(raw);
  const std::size_t square = static_cast<std::size_t>(dim) * dim;
  std::vector<double> projection(raw.begin(), raw.begin() + static_cast<long>(square));
  std::optional<std::vector<double>> bias;
  if (has_bias) bias.emplace(raw.begin() + static_cast<long>(square), raw.end());
  return metrics::RemapMatrix(dim, std::move(projection), std::move(bias));
}

void write_remap(const metrics::RemapMatrix& remap, const std::filesystem::path& path) {
  const std::size_t dim = remap.dim();
  std::vector<float> raw;
  raw.reserve(dim * dim + dim);
  for (double v : remap.projection()) raw.push_back(static_cast<float>(v));
  if (remap.bias()) {
    for (double v : *remap.bias()) raw.push_back(static_cast<float>(v));
  }
  floats_to_le(raw);

  std::vector<std::uint8_t> bytes(12 + raw.size() * 4 + 4);
  std::memcpy(bytes.data(), kRemapMagic, 4);
  store_u16(bytes.data() + 4, kRemapVersion);
  store_u16(bytes.data() + 6, remap.bias() ? 1 : 0);
  store_u32(bytes.data() + 8, static_cast<std::uint32_t>(dim));
  std::memcpy(bytes.data() + 12, raw.data(), raw.size() * 4);
  store_u32(bytes.data() + bytes.size() - 4, crc32_ieee({bytes.data() + 12, raw.size() * 4}));
  write_text(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

// ---------------------------------------------------------------------------
// LM penalties

LmPenaltyTable::LmPenaltyTable(std::map<std::string, double> scores) : scores_(std::move(scores)) {
  for (const auto& [key, value] : scores_) {
    if (!std::isfinite(value)) raise(ErrorCode::kNonFiniteValue, "LM penalty of '" + key + "' is not finite");
  }
}

metrics::LmPenalty LmPenaltyTable::at(const std::string& key) const {
  const auto it = scores_.find(key);
  if (it == scores_.end()) raise(ErrorCode::kMissingPenalty, "no LM penalty for segment '" + key + "'");
  return {it->second};
}

LmPenaltyTable read_lm_penalties(const std::filesystem::path& path) {
  const auto text = read_text(path);
  std::map<std::string, double> scores;
  std::size_t line_number = 0;
  for (auto line : split_lines(text)) {
    ++line_number;
    if (line.empty() || line.front() == '#') continue;
    const auto where = describe(path) + " line " + std::to_string(line_number);
    const auto fields = split_tabs(line);
    if (fields.size() != 2) raise(ErrorCode::kColumnCount, where + " needs 2 columns");
    const auto value = detail::parse_real(fields[1]);
    if (!value) raise(ErrorCode::kBadScore, where + ": '" + std::string(fields[1]) + "' is not a finite decimal");
    if (!scores.emplace(std::string(fields[0]), *value).second) {
      raise(ErrorCode::kParse, where + ": duplicate key '" + std::string(fields[0]) + "'");
    }
  }
  return LmPenaltyTable(std::move(scores));
}

void write_lm_penalties(const LmPenaltyTable& table, const std::filesystem::path& path) {
  std::string text;
  for (const auto& [key, value] : table.scores()) {
    require_plain_field(key, "segment key");
    text += key + '\t' + detail::format_real(value) + '\n';
  }
  write_text(path, text);
}

// ---------------------------------------------------------------------------
// Manifest

SidecarManifest read_manifest(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    const auto doc = json::parse(text);
    SidecarManifest m;
    m.encoder = doc.at("encoder").get<std::string>();
    m.layer_aggregation = doc.at("layer_aggregation").get<std::string>();
    m.tokenizer = doc.at("tokenizer").get<std::string>();
    m.created = doc.at("created").get<std::string>();
    m.alignment = doc.at("alignment").get<std::vector<std::uint64_t>>();
    if (doc.contains("segment_count") &&
        doc.at("segment_count").get<std::uint64_t>() != m.alignment.size()) {
      raise(ErrorCode::kAlignmentMismatch,
            describe(path) + ": segment_count disagrees with the alignment length");
    }
    return m;
  } catch (const json::exception& e) {
    raise(ErrorCode::kParse, describe(path) + ": " + e.what());
  }
}

void write_manifest(const SidecarManifest& manifest, const std::filesystem::path& path) {
  json doc = json::object();
  doc["encoder"] = manifest.encoder;
  doc["layer_aggregation"] = manifest.layer_aggregation;
  doc["tokenizer"] = manifest.tokenizer;
  doc["created"] = manifest.created;
  doc["segment_count"] = manifest.alignment.size();
  doc["alignment"] = manifest.alignment;
  write_text(path, doc.dump(2) + "\n");
}

void check_alignment(std::size_t container_segments, std::optional<std::size_t> segment_records,
                     const SidecarManifest* manifest) {
  if (segment_records && *segment_records != container_segments) {
    raise(ErrorCode::kAlignmentMismatch,
          "container has " + std::to_string(container_segments) + " segments but the segments file has " +
              std::to_string(*segment_records) + " records");
  }
  if (manifest) {
    if (manifest->alignment.size() != container_segments) {
      raise(ErrorCode::kAlignmentMismatch,
            "manifest aligns " + std::to_string(manifest->alignment.size()) +
                " segments but the container has " + std::to_string(container_segments));
    }
    if (segment_records) {
      std::set<std::uint64_t> seen;
      for (auto line : manifest->alignment) {
        if (line >= *segment_records || !seen.insert(line).second) {
          raise(ErrorCode::kAlignmentMismatch,
                "manifest alignment entry " + std::to_string(line) + " is out of range or repeated");
        }
      }
    }
  }
}

}  // namespace effeval::ingest
