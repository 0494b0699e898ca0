#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slicefs/common.hpp"
#include "slicefs/slice_algebra.hpp"
#include "slicefs/status.hpp"

// Canonical binary encodings for every value stored in the metadata store
// and every schema-bearing file. Integers are big-endian, variable fields
// are length-prefixed, and each top-level value starts with a format
// version byte.

namespace slicefs {

constexpr uint8_t kFormatV1 = 1;

// Mode bits: low nine are permissions, 0x4000 marks a directory.
constexpr uint32_t kModeDir = 0x4000;

struct Inode {
  uint64_t inode_id = 0;  // key, not serialized
  uint32_t link_count = 1;
  uint64_t mtime = 0;  // millis since epoch
  uint32_t mode = 0644;
  uint32_t owner = 0;
  uint32_t group = 0;
  uint64_t highest_region = 0;
  uint64_t region_size = 0;

  bool is_dir() const { return (mode & kModeDir) != 0; }
  bool operator==(const Inode&) const = default;
};

struct PathRecord {
  uint64_t inode_id = 0;
};

struct DirRecord {
  std::string name;
  uint64_t inode_id = 0;  // 0 is a removal marker: the name was unlinked
};

struct FsConfig {
  uint64_t region_size = 64ULL << 20;
  uint32_t replication = 2;
  uint32_t backing_files = 8;
  uint32_t gc_high_pct = 40;
  uint32_t gc_low_pct = 20;
  uint64_t segment_size = 4ULL << 20;
};

// One referenced byte range in a storage server's backing file.
struct InUseExtent {
  std::string backing_file;
  uint64_t offset = 0;
  uint64_t length = 0;

  auto operator<=>(const InUseExtent&) const = default;
};

// Per-server inventory of referenced extents produced by a global scan.
struct InUseList {
  uint64_t server_id = 0;  // not serialized; lists are per-server files
  uint64_t scan_id = 0;
  std::vector<InUseExtent> extents;  // sorted, merged per backing file
};

// A region's stored value is a list whose elements are either slice entries
// or (after a spill) one indirection record pointing at a slice that holds
// the serialized compacted list.
struct Indirection {
  uint64_t entry_count = 0;
  std::vector<SlicePointer> replicas;
};

struct RegionElement {
  std::optional<SliceEntry> entry;       // set for ordinary elements
  std::optional<Indirection> spill;      // set for indirection records
};

// --- pointers ---------------------------------------------------------------

inline void encode_pointer(Bytes& out, const SlicePointer& p) {
  put_u64(out, p.server_id);
  put_bytes16(out, p.backing_file);
  put_u64(out, p.file_offset);
  put_u64(out, p.length);
}

inline bool decode_pointer(ByteReader& r, SlicePointer& p) {
  BytesView name;
  if (!r.get_u64(p.server_id) || !r.get_bytes16(name) || !r.get_u64(p.file_offset) ||
      !r.get_u64(p.length)) {
    return false;
  }
  p.backing_file.assign(name);
  return true;
}

// --- region list elements ----------------------------------------------------

namespace detail {
constexpr uint8_t kElemEntry = 0;
constexpr uint8_t kElemIndirection = 1;
}  // namespace detail

inline Bytes encode_entry(const SliceEntry& e) {
  Bytes out;
  put_u8(out, kFormatV1);
  put_u8(out, detail::kElemEntry);
  put_u8(out, static_cast<uint8_t>(e.kind));
  put_u8(out, static_cast<uint8_t>(e.placement));
  put_u64(out, e.offset);
  put_u64(out, e.length);
  put_u16(out, static_cast<uint16_t>(e.replicas.size()));
  for (const auto& p : e.replicas) encode_pointer(out, p);
  return out;
}

inline Bytes encode_indirection(const Indirection& ind) {
  Bytes out;
  put_u8(out, kFormatV1);
  put_u8(out, detail::kElemIndirection);
  put_u64(out, ind.entry_count);
  put_u16(out, static_cast<uint16_t>(ind.replicas.size()));
  for (const auto& p : ind.replicas) encode_pointer(out, p);
  return out;
}

inline Result<RegionElement> decode_region_element(BytesView raw) {
  ByteReader r(raw);
  uint8_t fmt, kind;
  if (!r.get_u8(fmt) || fmt != kFormatV1 || !r.get_u8(kind)) {
    return {Err::ProtocolError, "bad region element header"};
  }
  RegionElement elem;
  if (kind == detail::kElemEntry) {
    SliceEntry e;
    uint8_t ek, pk;
    uint16_t nrep;
    if (!r.get_u8(ek) || !r.get_u8(pk) || !r.get_u64(e.offset) || !r.get_u64(e.length) ||
        !r.get_u16(nrep)) {
      return {Err::ProtocolError, "bad entry"};
    }
    e.kind = static_cast<EntryKind>(ek);
    e.placement = static_cast<Placement>(pk);
    e.replicas.resize(nrep);
    for (auto& p : e.replicas) {
      if (!decode_pointer(r, p)) return {Err::ProtocolError, "bad replica pointer"};
    }
    elem.entry = std::move(e);
  } else if (kind == detail::kElemIndirection) {
    Indirection ind;
    uint16_t nrep;
    if (!r.get_u64(ind.entry_count) || !r.get_u16(nrep)) {
      return {Err::ProtocolError, "bad indirection"};
    }
    ind.replicas.resize(nrep);
    for (auto& p : ind.replicas) {
      if (!decode_pointer(r, p)) return {Err::ProtocolError, "bad spill pointer"};
    }
    elem.spill = std::move(ind);
  } else {
    return {Err::ProtocolError, "unknown region element kind"};
  }
  if (!r.done()) return {Err::ProtocolError, "trailing bytes in region element"};
  return elem;
}

// Serialized form of a whole compacted list, the payload of a spill slice.
inline Bytes encode_entry_list(const std::vector<SliceEntry>& entries) {
  Bytes out;
  put_u8(out, kFormatV1);
  put_u64(out, entries.size());
  for (const auto& e : entries) {
    Bytes one = encode_entry(e);
    put_bytes32(out, one);
  }
  return out;
}

inline Result<std::vector<SliceEntry>> decode_entry_list(BytesView raw) {
  ByteReader r(raw);
  uint8_t fmt;
  uint64_t count;
  if (!r.get_u8(fmt) || fmt != kFormatV1 || !r.get_u64(count)) {
    return {Err::ProtocolError, "bad entry list header"};
  }
  std::vector<SliceEntry> out;
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    BytesView one;
    if (!r.get_bytes32(one)) return {Err::ProtocolError, "bad entry list item"};
    auto elem = decode_region_element(one);
    if (!elem.ok()) return elem.status();
    if (!elem->entry) return {Err::ProtocolError, "indirection inside entry list"};
    out.push_back(std::move(*elem->entry));
  }
  return out;
}

// --- inode / path / directory -------------------------------------------------

inline Bytes encode_inode(const Inode& ino) {
  Bytes out;
  put_u8(out, kFormatV1);
  put_u32(out, ino.link_count);
  put_u64(out, ino.mtime);
  put_u32(out, ino.mode);
  put_u32(out, ino.owner);
  put_u32(out, ino.group);
  put_u64(out, ino.highest_region);
  put_u64(out, ino.region_size);
  return out;
}

inline Result<Inode> decode_inode(BytesView raw) {
  ByteReader r(raw);
  uint8_t fmt;
  Inode ino;
  if (!r.get_u8(fmt) || fmt != kFormatV1 || !r.get_u32(ino.link_count) ||
      !r.get_u64(ino.mtime) || !r.get_u32(ino.mode) || !r.get_u32(ino.owner) ||
      !r.get_u32(ino.group) || !r.get_u64(ino.highest_region) || !r.get_u64(ino.region_size) ||
      !r.done()) {
    return {Err::ProtocolError, "bad inode"};
  }
  return ino;
}

inline Bytes encode_path_record(const PathRecord& rec) {
  Bytes out;
  put_u8(out, kFormatV1);
  put_u64(out, rec.inode_id);
  return out;
}

inline Result<PathRecord> decode_path_record(BytesView raw) {
  ByteReader r(raw);
  uint8_t fmt;
  PathRecord rec;
  if (!r.get_u8(fmt) || fmt != kFormatV1 || !r.get_u64(rec.inode_id) || !r.done()) {
    return {Err::ProtocolError, "bad path record"};
  }
  return rec;
}

// Directory file content is a raw sequence of (name_len u16, name,
// inode_id u64) records; a record with inode_id 0 removes the name.
inline void encode_dir_record(Bytes& out, const DirRecord& rec) {
  put_bytes16(out, rec.name);
  put_u64(out, rec.inode_id);
}

inline Result<std::vector<DirRecord>> decode_dir_records(BytesView raw) {
  ByteReader r(raw);
  std::vector<DirRecord> out;
  while (!r.done()) {
    DirRecord rec;
    BytesView name;
    if (!r.get_bytes16(name) || !r.get_u64(rec.inode_id)) {
      return {Err::ProtocolError, "bad directory record"};
    }
    rec.name.assign(name);
    out.push_back(std::move(rec));
  }
  return out;
}

// --- filesystem config ----------------------------------------------------------

inline Bytes encode_fs_config(const FsConfig& c) {
  Bytes out;
  put_u8(out, kFormatV1);
  put_u64(out, c.region_size);
  put_u32(out, c.replication);
  put_u32(out, c.backing_files);
  put_u32(out, c.gc_high_pct);
  put_u32(out, c.gc_low_pct);
  put_u64(out, c.segment_size);
  return out;
}

inline Result<FsConfig> decode_fs_config(BytesView raw) {
  ByteReader r(raw);
  uint8_t fmt;
  FsConfig c;
  if (!r.get_u8(fmt) || fmt != kFormatV1 || !r.get_u64(c.region_size) ||
      !r.get_u32(c.replication) || !r.get_u32(c.backing_files) || !r.get_u32(c.gc_high_pct) ||
      !r.get_u32(c.gc_low_pct) || !r.get_u64(c.segment_size) || !r.done()) {
    return {Err::ProtocolError, "bad fs config"};
  }
  return c;
}

// --- in-use lists -----------------------------------------------------------------

inline void encode_in_use_extents(Bytes& out, const std::vector<InUseExtent>& extents) {
  put_u64(out, extents.size());
  for (const auto& e : extents) {
    put_bytes16(out, e.backing_file);
    put_u64(out, e.offset);
    put_u64(out, e.length);
  }
}

inline bool decode_in_use_extents(ByteReader& r, std::vector<InUseExtent>& out) {
  uint64_t count;
  if (!r.get_u64(count)) return false;
  out.clear();
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    InUseExtent e;
    BytesView name;
    if (!r.get_bytes16(name) || !r.get_u64(e.offset) || !r.get_u64(e.length)) return false;
    e.backing_file.assign(name);
    out.push_back(std::move(e));
  }
  return true;
}

inline Bytes encode_in_use_list(const InUseList& l) {
  Bytes out;
  put_u8(out, kFormatV1);
  put_u64(out, l.scan_id);
  encode_in_use_extents(out, l.extents);
  return out;
}

inline Result<InUseList> decode_in_use_list(BytesView raw) {
  ByteReader r(raw);
  uint8_t fmt;
  InUseList l;
  if (!r.get_u8(fmt) || fmt != kFormatV1 || !r.get_u64(l.scan_id) ||
      !decode_in_use_extents(r, l.extents) || !r.done()) {
    return {Err::ProtocolError, "bad in-use list"};
  }
  return l;
}

// --- key derivation -----------------------------------------------------------------

// Metadata-store spaces used by the filesystem.
inline constexpr const char* kSpacePaths = "paths";
inline constexpr const char* kSpaceInodes = "inodes";
inline constexpr const char* kSpaceRegions = "regions";
inline constexpr const char* kSpaceConfig = "config";

inline Bytes inode_key(uint64_t inode_id) {
  Bytes k;
  put_u64(k, inode_id);
  return k;
}

// Regions live under a deterministically derived key: inode id then index.
inline Bytes region_key(uint64_t inode_id, uint64_t region_index) {
  Bytes k;
  put_u64(k, inode_id);
  put_u64(k, region_index);
  return k;
}

}  // namespace slicefs
