#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "effeval/core.hpp"
#include "effeval/metrics.hpp"

namespace effeval::ingest {

// EFEV embedding container, all integers and floats little-endian:
//
//   header  (16 bytes, not covered by the CRC)
//     char[4] magic "EFEV" | u16 version (1) | u16 flags (0) | u32 dim | u32 segment_count
//   payload, per segment
//     u32 token_count
//     token_count x { u32 byte_length | UTF-8 bytes }
//     token_count x dim f32, row-major
//   trailer
//     u32 CRC-32 (IEEE) of the payload bytes
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 16;

struct ContainerSegment {
  std::vector<std::string> tokens;
  EmbeddingMatrix embedding;

  friend bool operator==(const ContainerSegment&, const ContainerSegment&) = default;
};

struct ContainerInfo {
  std::uint16_t version = 0;
  std::uint16_t flags = 0;
  std::uint32_t dim = 0;
  std::uint32_t segment_count = 0;
  std::uint32_t crc = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t total_tokens = 0;  // filled by check_container only
};

/// Segment-at-a-time reader. Construction validates the header and the
/// payload CRC; next() then decodes segments in order and, after the last
/// one, verifies that the declared counts consumed the payload exactly.
class ContainerReader {
 public:
  explicit ContainerReader(const std::filesystem::path& path);

  const ContainerInfo& info() const noexcept { return info_; }
  std::size_t dim() const noexcept { return info_.dim; }
  std::size_t segment_count() const noexcept { return info_.segment_count; }

  /// Next segment, or nullopt once all declared segments were read.
  std::optional<ContainerSegment> next();

 private:
  void read_exact(void* dst, std::size_t bytes);
  std::uint32_t read_u32();

  std::filesystem::path path_;
  std::ifstream in_;
  ContainerInfo info_;
  std::uint64_t payload_end_ = 0;
  std::uint64_t cursor_ = 0;
  std::size_t next_index_ = 0;
  std::vector<float> scratch_;
};

std::vector<ContainerSegment> read_container(const std::filesystem::path& path);

/// Full validation pass (header, CRC, layout, finiteness) without keeping the
/// matrices; backs `fmt-check`.
ContainerInfo check_container(const std::filesystem::path& path);

/// Streams segments to disk; the header's segment count is patched by finish().
class ContainerWriter {
 public:
  ContainerWriter(const std::filesystem::path& path, std::size_t dim);
  ContainerWriter(const ContainerWriter&) = delete;
  ContainerWriter& operator=(const ContainerWriter&) = delete;
  ~ContainerWriter();

  void add(const ContainerSegment& segment);
  void add(std::span<const std::string> tokens, std::span<const float> values);
  std::size_t dim() const noexcept { return dim_; }
  void finish();

 private:
  void write_payload(const void* data, std::size_t bytes);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t dim_;
  std::uint32_t count_ = 0;
  std::uint32_t crc_ = 0;
  bool finished_ = false;
};

void write_container(std::span<const ContainerSegment> segments, std::size_t dim,
                     const std::filesystem::path& path);

// WMT-style segments file: UTF-8, one record per line, six tab-separated
// columns lang_pair, system_id, source, hypothesis, reference, human_score.
// Empty reference / human_score mean absent; lines starting with '#' are
// comments. The 0-based record ordinal is the segment key.
SegmentRecord parse_segment_line(std::string_view line, std::size_t line_number);
std::vector<SegmentRecord> read_segments(const std::filesystem::path& path);
void write_segments(std::span<const SegmentRecord> records, const std::filesystem::path& path);

std::string segment_key(std::size_t ordinal);

// IDF statistics: JSON object {"N": <count>, "df": {"<token>": <count>, ...}}.
metrics::IdfTable read_idf(const std::filesystem::path& path);
void write_idf(const metrics::IdfTable& table, const std::filesystem::path& path);

// EFRM remap matrix, little-endian:
//   char[4] "EFRM" | u16 version (1) | u16 flags (bit 0: bias present) | u32 dim
//   dim*dim f32 row-major projection | [dim f32 bias] | u32 CRC-32 of those floats
inline constexpr std::uint16_t kRemapVersion = 1;
metrics::RemapMatrix read_remap(const std::filesystem::path& path);
void write_remap(const metrics::RemapMatrix& remap, const std::filesystem::path& path);

/// Per-segment LM scores keyed by segment key ("<key>\t<score>" lines).
class LmPenaltyTable {
 public:
  LmPenaltyTable() = default;
  explicit LmPenaltyTable(std::map<std::string, double> scores);

  /// Throws kMissingPenalty for an unknown key.
  metrics::LmPenalty at(const std::string& key) const;
  const std::map<std::string, double>& scores() const noexcept { return scores_; }

 private:
  std::map<std::string, double> scores_;
};

LmPenaltyTable read_lm_penalties(const std::filesystem::path& path);
void write_lm_penalties(const LmPenaltyTable& table, const std::filesystem::path& path);

/// JSON sidecar written next to an exported container.
struct SidecarManifest {
  std::string encoder;
  std::string layer_aggregation;
  std::string tokenizer;
  std::string created;
  std::vector<std::uint64_t> alignment;  // container segment index -> segments-file record

  friend bool operator==(const SidecarManifest&, const SidecarManifest&) = default;
};

SidecarManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const SidecarManifest& manifest, const std::filesystem::path& path);

/// Throws kAlignmentMismatch unless every count that is present agrees.
void check_alignment(std::size_t container_segments, std::optional<std::size_t> segment_records,
                     const SidecarManifest* manifest);

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes, std::uint32_t seed = 0);

}  // namespace effeval::ingest
