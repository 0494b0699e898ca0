#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slicefs/status.hpp"

namespace slicefs {

// Globally-resolvable location of an immutable byte sequence on a storage
// server. Self-contained: nothing else is needed to retrieve the bytes.
struct SlicePointer {
  uint64_t server_id = 0;
  std::string backing_file;  // short name, unique per server
  uint64_t file_offset = 0;
  uint64_t length = 0;  // > 0

  bool operator==(const SlicePointer&) const = default;
};

enum class EntryKind : uint8_t { Data = 0, Hole = 1 };
enum class Placement : uint8_t { Absolute = 0, RelativeToEnd = 1 };

// One overlay write in a region's metadata list. Data entries carry one
// pointer per replica; all replicas have the same length. Hole entries carry
// no pointers and always have Absolute placement.
struct SliceEntry {
  EntryKind kind = EntryKind::Data;
  Placement placement = Placement::Absolute;
  uint64_t offset = 0;  // within region; meaningful only for Absolute
  uint64_t length = 0;  // > 0
  std::vector<SlicePointer> replicas;

  bool operator==(const SliceEntry&) const = default;

  static SliceEntry data(std::vector<SlicePointer> reps, uint64_t off) {
    SliceEntry e;
    e.kind = EntryKind::Data;
    e.placement = Placement::Absolute;
    e.offset = off;
    e.length = reps.empty() ? 0 : reps.front().length;
    e.replicas = std::move(reps);
    return e;
  }
  static SliceEntry appended(std::vector<SlicePointer> reps) {
    SliceEntry e = data(std::move(reps), 0);
    e.placement = Placement::RelativeToEnd;
    return e;
  }
  static SliceEntry hole(uint64_t off, uint64_t len) {
    SliceEntry e;
    e.kind = EntryKind::Hole;
    e.placement = Placement::Absolute;
    e.offset = off;
    e.length = len;
    return e;
  }
};

// A maximal run of bytes with a single source after overlay resolution.
// Data extents carry replica pointers already subranged to the extent;
// zeros extents come from Hole entries.
struct ResolvedExtent {
  uint64_t region_offset = 0;
  uint64_t length = 0;
  bool zeros = false;
  std::vector<SlicePointer> replicas;  // empty iff zeros
};

struct Resolved {
  std::vector<ResolvedExtent> extents;  // sorted, non-overlapping
  uint64_t end_offset = 0;              // bytes-written high-water mark
};

// Ordered per-region entry list plus its end-offset high-water mark.
// Invariant: replaying `entries` yields exactly `end_offset`.
struct RegionMetadata {
  std::vector<SliceEntry> entries;
  uint64_t end_offset = 0;
};

inline Result<SlicePointer> subrange_pointer(const SlicePointer& p, uint64_t start, uint64_t len) {
  if (len == 0 || len > p.length || start > p.length - len) {
    return {Err::OutOfRange, "subrange outside pointer"};
  }
  SlicePointer out = p;
  out.file_offset = p.file_offset + start;
  out.length = len;
  return out;
}

inline Status validate_entry(const SliceEntry& e) {
  if (e.length == 0) return {Err::InvalidArgument, "zero-length entry"};
  if (e.kind == EntryKind::Hole) {
    if (!e.replicas.empty()) return {Err::InvalidArgument, "hole with replicas"};
    if (e.placement != Placement::Absolute) return {Err::InvalidArgument, "relative hole"};
    return Status::OK();
  }
  if (e.replicas.empty()) return {Err::InvalidArgument, "data entry without replicas"};
  for (const auto& r : e.replicas) {
    if (r.length != e.length) return {Err::InvalidArgument, "replica length mismatch"};
  }
  return Status::OK();
}

// Partitions [file_offset, file_offset + length) by region boundaries.
struct RegionSpan {
  uint64_t region_index = 0;
  uint64_t offset_in_region = 0;
  uint64_t length = 0;

  bool operator==(const RegionSpan&) const = default;
};

inline std::vector<RegionSpan> region_split(uint64_t file_offset, uint64_t length,
                                            uint64_t region_size) {
  std::vector<RegionSpan> out;
  uint64_t pos = file_offset;
  uint64_t remaining = length;
  while (remaining > 0) {
    uint64_t region = pos / region_size;
    uint64_t in_region = pos % region_size;
    uint64_t take = std::min(remaining, region_size - in_region);
    out.push_back({region, in_region, take});
    pos += take;
    remaining -= take;
  }
  return out;
}

namespace detail {

// Interval-map segment used during replay. References the source entry by
// index so extraction can subrange its replicas.
struct Segment {
  uint64_t length = 0;
  bool zeros = false;
  size_t entry_index = 0;
  uint64_t inner = 0;  // offset of this segment within the source entry
};

}  // namespace detail

// Replays `entries` in list order. Later entries supersede earlier bytes
// where their ranges overlap; RelativeToEnd entries land at the running end;
// Hole entries supersede with zeros. Returns the minimal non-overlapping
// extent list and the final end offset. Byte ranges no entry ever touched
// are absent from the list (they read as zeros when a caller materializes
// a range that covers them).
inline Result<Resolved> resolve_entries(const std::vector<SliceEntry>& entries,
                                        uint64_t region_size) {
  std::map<uint64_t, detail::Segment> segs;
  uint64_t end = 0;

  for (size_t i = 0; i < entries.size(); ++i) {
    const SliceEntry& e = entries[i];
    if (Status s = validate_entry(e); !s.ok()) return s;
    const uint64_t off = e.placement == Placement::RelativeToEnd ? end : e.offset;
    if (e.length > region_size || off > region_size - e.length) {
      return {Err::EntryOutOfBounds, "entry range exceeds region"};
    }
    const uint64_t stop = off + e.length;

    // Trim or split whatever the new range overlaps.
    auto it = segs.lower_bound(off);
    if (it != segs.begin()) {
      auto prev = std::prev(it);
      const uint64_t prev_end = prev->first + prev->second.length;
      if (prev_end > off) {
        detail::Segment head = prev->second;
        head.length = off - prev->first;
        detail::Segment tail = prev->second;
        tail.inner += stop - prev->first;
        tail.length = prev_end > stop ? prev_end - stop : 0;
        prev->second = head;
        if (tail.length > 0) segs.emplace(stop, tail);
        it = segs.lower_bound(off);
      }
    }
    while (it != segs.end() && it->first < stop) {
      const uint64_t seg_end = it->first + it->second.length;
      if (seg_end <= stop) {
        it = segs.erase(it);
      } else {
        detail::Segment tail = it->second;
        tail.inner += stop - it->first;
        tail.length = seg_end - stop;
        it = segs.erase(it);
        segs.emplace(stop, tail);
        break;
      }
    }
    segs.emplace(off, detail::Segment{e.length, e.kind == EntryKind::Hole, i, 0});
    end = std::max(end, stop);
  }

  Resolved out;
  out.end_offset = end;
  for (const auto& [off, seg] : segs) {
    // Adjacent zeros runs collapse into one extent.
    if (seg.zeros && !out.extents.empty() && out.extents.back().zeros &&
        out.extents.back().region_offset + out.extents.back().length == off) {
      out.extents.back().length += seg.length;
      continue;
    }
    ResolvedExtent ext;
    ext.region_offset = off;
    ext.length = seg.length;
    ext.zeros = seg.zeros;
    if (!seg.zeros) {
      const SliceEntry& src = entries[seg.entry_index];
      ext.replicas.reserve(src.replicas.size());
      for (const auto& r : src.replicas) {
        auto sub = subrange_pointer(r, seg.inner, seg.length);
        if (!sub.ok()) return sub.status();
        ext.replicas.push_back(std::move(sub.value()));
      }
    }
    out.extents.push_back(std::move(ext));
  }
  return out;
}

namespace detail {

// Two data entries merge when they are adjacent in the region and every
// replica pair (matched by position) is contiguous in the same backing file
// on the same server. Partial-replica contiguity does not merge.
inline bool mergeable(const SliceEntry& a, const SliceEntry& b) {
  if (a.kind != EntryKind::Data || b.kind != EntryKind::Data) return false;
  if (a.offset + a.length != b.offset) return false;
  if (a.replicas.size() != b.replicas.size()) return false;
  for (size_t i = 0; i < a.replicas.size(); ++i) {
    const SlicePointer& pa = a.replicas[i];
    const SlicePointer& pb = b.replicas[i];
    if (pa.server_id != pb.server_id || pa.backing_file != pb.backing_file ||
        pa.file_offset + pa.length != pb.file_offset) {
      return false;
    }
  }
  return true;
}

}  // namespace detail

// Rewrites an entry list into the minimal equivalent set of Absolute
// entries: superseded bytes are dropped, on-disk-contiguous neighbors are
// merged, and zeros survive as a Hole entry only when dropping them would
// change the replayed end offset (a trailing hole). Interior zeros become
// implicit gaps, which read back identically.
inline Result<std::vector<SliceEntry>> compact(const std::vector<SliceEntry>& entries,
                                               uint64_t region_size) {
  auto resolved = resolve_entries(entries, region_size);
  if (!resolved.ok()) return resolved.status();

  std::vector<SliceEntry> out;
  for (const ResolvedExtent& ext : resolved->extents) {
    if (ext.zeros) {
      if (ext.region_offset + ext.length == resolved->end_offset) {
        out.push_back(SliceEntry::hole(ext.region_offset, ext.length));
      }
      continue;
    }
    SliceEntry e;
    e.kind = EntryKind::Data;
    e.placement = Placement::Absolute;
    e.offset = ext.region_offset;
    e.length = ext.length;
    e.replicas = ext.replicas;
    if (!out.empty() && detail::mergeable(out.back(), e)) {
      out.back().length += e.length;
      for (auto& r : out.back().replicas) r.length = out.back().length;
    } else {
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace slicefs
