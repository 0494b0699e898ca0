#include "slicefs/slice_algebra.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "slicefs/common.hpp"

namespace slicefs {
namespace {

constexpr uint64_t kMiB = 1024 * 1024;

SlicePointer ptr(uint64_t server, std::string file, uint64_t off, uint64_t len) {
  return SlicePointer{server, std::move(file), off, len};
}

// Deterministic content byte for a backing-file position. Lets the oracle
// paint exact bytes and lets extents be materialized from their pointers
// alone, so resolution and painting can be compared byte-for-byte.
uint8_t fill_byte(const SlicePointer& p, uint64_t inner) {
  return static_cast<uint8_t>(mix64(fnv1a64(p.backing_file) ^ (p.server_id * 0x9e3779b97f4a7c15ULL) ^
                                    (p.file_offset + inner)));
}

// Byte-array painting oracle: applies entries in list order to a plain
// array, tracking the running end exactly as the replay rule states.
struct PaintOracle {
  std::vector<uint8_t> bytes;
  uint64_t end = 0;

  explicit PaintOracle(uint64_t region_size) : bytes(region_size, 0) {}

  void apply(const SliceEntry& e) {
    uint64_t off = e.placement == Placement::RelativeToEnd ? end : e.offset;
    for (uint64_t i = 0; i < e.length; ++i) {
      bytes[off + i] = e.kind == EntryKind::Hole ? 0 : fill_byte(e.replicas.front(), i);
    }
    end = std::max(end, off + e.length);
  }
};

std::vector<uint8_t> materialize(const Resolved& r) {
  std::vector<uint8_t> out(r.end_offset, 0);
  for (const auto& ext : r.extents) {
    for (uint64_t i = 0; i < ext.length; ++i) {
      out[ext.region_offset + i] = ext.zeros ? 0 : fill_byte(ext.replicas.front(), i);
    }
  }
  return out;
}

std::vector<SliceEntry> fig2_entries() {
  // Five writes into a 4MiB region: A@[0,2), B@[2,4), C@[1,3), D@[2,3),
  // E@[2,3), each on its own server/backing file.
  return {
      SliceEntry::data({ptr(0, "f1", 0, 2 * kMiB)}, 0),
      SliceEntry::data({ptr(1, "f2", 0, 2 * kMiB)}, 2 * kMiB),
      SliceEntry::data({ptr(2, "f3", 0, 2 * kMiB)}, 1 * kMiB),
      SliceEntry::data({ptr(0, "f4", 0, 1 * kMiB)}, 2 * kMiB),
      SliceEntry::data({ptr(1, "f5", 0, 1 * kMiB)}, 2 * kMiB),
  };
}

TEST(ResolveEntries, OverlayPrecedenceFourMiBFile) {
  auto r = resolve_entries(fig2_entries(), 4 * kMiB);
  ASSERT_TRUE(r.ok()) << r.status().to_string();
  ASSERT_EQ(r->extents.size(), 4u);
  EXPECT_EQ(r->end_offset, 4 * kMiB);

  const auto& ex = r->extents;
  // A[0,1MiB)
  EXPECT_EQ(ex[0].region_offset, 0u);
  EXPECT_EQ(ex[0].length, 1 * kMiB);
  EXPECT_EQ(ex[0].replicas[0], ptr(0, "f1", 0, 1 * kMiB));
  // C[1,2MiB), inner offset 0
  EXPECT_EQ(ex[1].region_offset, 1 * kMiB);
  EXPECT_EQ(ex[1].replicas[0], ptr(2, "f3", 0, 1 * kMiB));
  // E[2,3MiB), fully visible
  EXPECT_EQ(ex[2].region_offset, 2 * kMiB);
  EXPECT_EQ(ex[2].replicas[0], ptr(1, "f5", 0, 1 * kMiB));
  // B[3,4MiB), inner offset 1MiB
  EXPECT_EQ(ex[3].region_offset, 3 * kMiB);
  EXPECT_EQ(ex[3].replicas[0], ptr(1, "f2", 1 * kMiB, 1 * kMiB));
}

TEST(ResolveEntries, EmptyListIsEmpty) {
  auto r = resolve_entries({}, 4 * kMiB);
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r->extents.empty());
  EXPECT_EQ(r->end_offset, 0u);
}

TEST(ResolveEntries, RelativeEntriesLandAtRunningEnd) {
  std::vector<SliceEntry> entries;
  entries.push_back(SliceEntry::appended({ptr(1, "b", 0, 10)}));
  entries.push_back(SliceEntry::data({ptr(1, "b", 10, 10)}, 5));
  entries.push_back(SliceEntry::appended({ptr(1, "b", 20, 10)}));
  auto r = resolve_entries(entries, 1024);
  ASSERT_TRUE(r.ok());
  // First lands at 0, absolute overlays [5,15), second relative lands at 15.
  EXPECT_EQ(r->end_offset, 25u);
  ASSERT_EQ(r->extents.size(), 3u);
  EXPECT_EQ(r->extents[0].length, 5u);
  EXPECT_EQ(r->extents[1].region_offset, 5u);
  EXPECT_EQ(r->extents[2].region_offset, 15u);
}

TEST(ResolveEntries, RelativeSupersedesEarlierAbsoluteBytes) {
  // An absolute entry beyond the running end, then a relative entry landing
  // where the absolute bytes start: list order wins.
  std::vector<SliceEntry> entries;
  entries.push_back(SliceEntry::data({ptr(1, "b", 0, 8)}, 0));
  entries.push_back(SliceEntry::data({ptr(1, "b", 100, 8)}, 4));  // end now 12
  entries.push_back(SliceEntry::appended({ptr(1, "b", 200, 8)}));  // lands [12,20)
  entries.push_back(SliceEntry::data({ptr(1, "b", 300, 4)}, 10));  // overlays [10,14)
  auto r = resolve_entries(entries, 1024);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->end_offset, 20u);
  // [10,14) belongs to the last absolute write even though a relative entry
  // claimed part of that range earlier.
  PaintOracle oracle(1024);
  for (const auto& e : entries) oracle.apply(e);
  auto mat = materialize(*r);
  ASSERT_EQ(mat.size(), oracle.end);
  for (size_t i = 0; i < mat.size(); ++i) ASSERT_EQ(mat[i], oracle.bytes[i]) << "byte " << i;
}

TEST(ResolveEntries, HoleReadsAsZeros) {
  std::vector<SliceEntry> entries;
  entries.push_back(SliceEntry::data({ptr(1, "b", 0, 16)}, 0));
  entries.push_back(SliceEntry::hole(4, 8));
  auto r = resolve_entries(entries, 64);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r->extents.size(), 3u);
  EXPECT_FALSE(r->extents[0].zeros);
  EXPECT_TRUE(r->extents[1].zeros);
  EXPECT_EQ(r->extents[1].region_offset, 4u);
  EXPECT_EQ(r->extents[1].length, 8u);
  EXPECT_FALSE(r->extents[2].zeros);
  EXPECT_EQ(r->end_offset, 16u);
}

TEST(ResolveEntries, RejectsOutOfBounds) {
  auto r = resolve_entries({SliceEntry::data({ptr(1, "b", 0, 10)}, 60)}, 64);
  EXPECT_EQ(r.error(), Err::EntryOutOfBounds);

  // A relative entry that would overflow the region is rejected too.
  std::vector<SliceEntry> entries;
  entries.push_back(SliceEntry::data({ptr(1, "b", 0, 60)}, 0));
  entries.push_back(SliceEntry::appended({ptr(1, "b", 60, 10)}));
  auto r2 = resolve_entries(entries, 64);
  EXPECT_EQ(r2.error(), Err::EntryOutOfBounds);
}

TEST(ResolveEntries, RejectsMalformedEntries) {
  SliceEntry bad_hole = SliceEntry::hole(0, 8);
  bad_hole.replicas.push_back(ptr(1, "b", 0, 8));
  EXPECT_EQ(resolve_entries({bad_hole}, 64).error(), Err::InvalidArgument);

  SliceEntry mismatched = SliceEntry::data({ptr(1, "b", 0, 8), ptr(2, "c", 0, 9)}, 0);
  mismatched.length = 8;
  EXPECT_EQ(resolve_entries({mismatched}, 64).error(), Err::InvalidArgument);

  EXPECT_EQ(resolve_entries({SliceEntry::data({}, 0)}, 64).error(), Err::InvalidArgument);
}

// --- randomized oracle equivalence ---------------------------------------

std::vector<SliceEntry> random_entries(std::mt19937_64& rng, uint64_t region_size, int count) {
  std::vector<SliceEntry> entries;
  std::uniform_int_distribution<uint64_t> len_d(1, region_size / 4);
  std::uniform_int_distribution<int> kind_d(0, 9);
  uint64_t next_file = 0;
  uint64_t running_end = 0;
  for (int i = 0; i < count; ++i) {
    uint64_t len = len_d(rng);
    int k = kind_d(rng);
    if (k < 2) {  // hole
      std::uniform_int_distribution<uint64_t> off_d(0, region_size - len);
      SliceEntry h = SliceEntry::hole(off_d(rng), len);
      entries.push_back(h);
      running_end = std::max(running_end, h.offset + h.length);
    } else if (k < 4 && running_end + len <= region_size) {  // relative append
      entries.push_back(SliceEntry::appended(
          {ptr(1 + (next_file % 3), "f" + std::to_string(next_file), next_file * 7, len)}));
      ++next_file;
      running_end += len;
    } else {
      std::uniform_int_distribution<uint64_t> off_d(0, region_size - len);
      uint64_t off = off_d(rng);
      entries.push_back(SliceEntry::data(
          {ptr(1 + (next_file % 3), "f" + std::to_string(next_file), next_file * 7, len)}, off));
      ++next_file;
      running_end = std::max(running_end, off + len);
    }
  }
  return entries;
}

TEST(ResolveEntries, RandomizedPaintingOracle) {
  std::mt19937_64 rng(0x51c3f5);
  std::uniform_int_distribution<int> count_d(0, 40);
  for (int trial = 0; trial < 10000; ++trial) {
    const uint64_t region_size = 256 + (trial % 7) * 64;
    auto entries = random_entries(rng, region_size, count_d(rng));
    PaintOracle oracle(region_size);
    for (const auto& e : entries) oracle.apply(e);

    auto r = resolve_entries(entries, region_size);
    ASSERT_TRUE(r.ok()) << r.status().to_string();
    ASSERT_EQ(r->end_offset, oracle.end) << "trial " << trial;
    auto mat = materialize(*r);
    for (size_t i = 0; i < mat.size(); ++i) {
      ASSERT_EQ(mat[i], oracle.bytes[i]) << "trial " << trial << " byte " << i;
    }
    // Structural invariants: sorted and non-overlapping.
    for (size_t i = 1; i < r->extents.size(); ++i) {
      ASSERT_GE(r->extents[i].region_offset,
                r->extents[i - 1].region_offset + r->extents[i - 1].length);
    }
  }
}

TEST(ResolveEntries, ThousandEntrySequenceMatchesOracle) {
  std::mt19937_64 rng(42);
  const uint64_t region_size = 4096;
  auto entries = random_entries(rng, region_size, 1000);
  PaintOracle oracle(region_size);
  for (const auto& e : entries) oracle.apply(e);
  auto r = resolve_entries(entries, region_size);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->end_offset, oracle.end);
  auto mat = materialize(*r);
  for (size_t i = 0; i < mat.size(); ++i) ASSERT_EQ(mat[i], oracle.bytes[i]) << "byte " << i;
}

// --- compaction -----------------------------------------------------------

TEST(Compact, FourMiBFileCompactsToFourEntries) {
  auto c = compact(fig2_entries(), 4 * kMiB);
  ASSERT_TRUE(c.ok());
  ASSERT_EQ(c->size(), 4u);
  // A@[0,1], C@[1,2], E@[2,3], B@[3,4]
  EXPECT_EQ((*c)[0], SliceEntry::data({ptr(0, "f1", 0, 1 * kMiB)}, 0));
  EXPECT_EQ((*c)[1], SliceEntry::data({ptr(2, "f3", 0, 1 * kMiB)}, 1 * kMiB));
  EXPECT_EQ((*c)[2], SliceEntry::data({ptr(1, "f5", 0, 1 * kMiB)}, 2 * kMiB));
  EXPECT_EQ((*c)[3], SliceEntry::data({ptr(1, "f2", 1 * kMiB, 1 * kMiB)}, 3 * kMiB));
}

TEST(Compact, IdempotentOnCompactedList) {
  auto once = compact(fig2_entries(), 4 * kMiB);
  ASSERT_TRUE(once.ok());
  auto twice = compact(*once, 4 * kMiB);
  ASSERT_TRUE(twice.ok());
  EXPECT_EQ(*once, *twice);
}

TEST(Compact, MergesDiskContiguousNeighbors) {
  std::vector<SliceEntry> entries = {
      SliceEntry::data({ptr(7, "b0", 100, 60)}, 0),
      SliceEntry::data({ptr(7, "b0", 160, 40)}, 60),
  };
  auto c = compact(entries, 1024);
  ASSERT_TRUE(c.ok());
  ASSERT_EQ(c->size(), 1u);
  EXPECT_EQ((*c)[0].length, 100u);
  EXPECT_EQ((*c)[0].offset, 0u);
  EXPECT_EQ((*c)[0].replicas[0], ptr(7, "b0", 100, 100));

  auto before = resolve_entries(entries, 1024);
  auto after = resolve_entries(*c, 1024);
  ASSERT_TRUE(before.ok() && after.ok());
  EXPECT_EQ(materialize(*before), materialize(*after));
  EXPECT_EQ(before->end_offset, after->end_offset);
}

TEST(Compact, DoesNotMergeWhenAnyReplicaPairIsDiscontiguous) {
  std::vector<SliceEntry> entries = {
      SliceEntry::data({ptr(7, "b0", 100, 60), ptr(8, "b1", 500, 60)}, 0),
      SliceEntry::data({ptr(7, "b0", 160, 40), ptr(8, "b1", 900, 40)}, 60),
  };
  auto c = compact(entries, 1024);
  ASSERT_TRUE(c.ok());
  EXPECT_EQ(c->size(), 2u);
}

TEST(Compact, KeepsTrailingHoleDropsInteriorOnes) {
  std::vector<SliceEntry> entries = {
      SliceEntry::data({ptr(1, "b", 0, 32)}, 0),
      SliceEntry::hole(8, 8),    // interior: dropped, reads as zeros either way
      SliceEntry::hole(32, 16),  // trailing: kept, preserves the end offset
  };
  auto c = compact(entries, 256);
  ASSERT_TRUE(c.ok());
  auto after = resolve_entries(*c, 256);
  ASSERT_TRUE(after.ok());
  EXPECT_EQ(after->end_offset, 48u);

  size_t holes = 0;
  for (const auto& e : *c) {
    if (e.kind == EntryKind::Hole) {
      ++holes;
      EXPECT_EQ(e.offset + e.length, 48u);
    }
  }
  EXPECT_EQ(holes, 1u);

  auto before = resolve_entries(entries, 256);
  ASSERT_TRUE(before.ok());
  EXPECT_EQ(materialize(*before), materialize(*after));
}

TEST(Compact, RandomizedSoundnessAndMinimality) {
  std::mt19937_64 rng(0xc0ffee);
  std::uniform_int_distribution<int> count_d(0, 32);
  for (int trial = 0; trial < 10000; ++trial) {
    const uint64_t region_size = 256;
    auto entries = random_entries(rng, region_size, count_d(rng));
    auto before = resolve_entries(entries, region_size);
    ASSERT_TRUE(before.ok());
    auto c = compact(entries, region_size);
    ASSERT_TRUE(c.ok());
    auto after = resolve_entries(*c, region_size);
    ASSERT_TRUE(after.ok());

    // Soundness: identical bytes and end offset.
    ASSERT_EQ(after->end_offset, before->end_offset) << "trial " << trial;
    ASSERT_EQ(materialize(*after), materialize(*before)) << "trial " << trial;

    // Minimality: all absolute, nothing adjacent-mergeable, every entry
    // fully visible (resolution maps entries to extents one-to-one).
    for (const auto& e : *c) ASSERT_EQ(e.placement, Placement::Absolute);
    for (size_t i = 1; i < c->size(); ++i) {
      ASSERT_FALSE(detail::mergeable((*c)[i - 1], (*c)[i])) << "trial " << trial;
    }
    ASSERT_EQ(after->extents.size(), c->size()) << "trial " << trial;
    for (size_t i = 0; i < c->size(); ++i) {
      ASSERT_EQ(after->extents[i].region_offset, (*c)[i].offset);
      ASSERT_EQ(after->extents[i].length, (*c)[i].length);
    }
  }
}

// --- region_split ----------------------------------------------------------

TEST(RegionSplit, CrossRegionWriteSplitsAtBoundary) {
  auto spans = region_split(1 * kMiB, 2 * kMiB, 2 * kMiB);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0], (RegionSpan{0, 1 * kMiB, 1 * kMiB}));
  EXPECT_EQ(spans[1], (RegionSpan{1, 0, 1 * kMiB}));
}

TEST(RegionSplit, SingleByte) {
  auto spans = region_split(0, 1, 4096);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0], (RegionSpan{0, 0, 1}));
}

TEST(RegionSplit, RandomizedAgainstPerByteBruteForce) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    std::uniform_int_distribution<uint64_t> off_d(0, 10000), len_d(1, 5000), rs_d(1, 700);
    uint64_t off = off_d(rng), len = len_d(rng), rs = rs_d(rng);
    auto spans = region_split(off, len, rs);

    uint64_t covered = 0;
    uint64_t pos = off;
    for (const auto& s : spans) {
      ASSERT_LT(s.offset_in_region, rs);
      ASSERT_EQ(s.region_index, pos / rs);
      ASSERT_EQ(s.offset_in_region, pos % rs);
      covered += s.length;
      pos += s.length;
    }
    ASSERT_EQ(covered, len);

    // Brute force: each byte individually.
    size_t span_i = 0;
    uint64_t within = 0;
    for (uint64_t b = off; b < off + len; ++b) {
      if (within == spans[span_i].length) {
        ++span_i;
        within = 0;
      }
      ASSERT_EQ(b / rs, spans[span_i].region_index);
      ASSERT_EQ(b % rs, spans[span_i].offset_in_region + within);
      ++within;
    }
  }
}

// --- subrange_pointer -------------------------------------------------------

TEST(SubrangePointer, PaperExampleAndIdentity) {
  SlicePointer a = ptr(0, "f1", 0, 2 * kMiB);
  auto sub = subrange_pointer(a, 0, 1 * kMiB);
  ASSERT_TRUE(sub.ok());
  EXPECT_EQ(*sub, ptr(0, "f1", 0, 1 * kMiB));

  auto same = subrange_pointer(a, 0, a.length);
  ASSERT_TRUE(same.ok());
  EXPECT_EQ(*same, a);
}

TEST(SubrangePointer, CompositionIsAssociative) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    std::uniform_int_distribution<uint64_t> len_d(4, 1 << 20), off_d(0, 1 << 30);
    SlicePointer p = ptr(rng(), "bf", off_d(rng), len_d(rng));
    std::uniform_int_distribution<uint64_t> a_d(0, p.length - 2);
    uint64_t a = a_d(rng);
    std::uniform_int_distribution<uint64_t> l1_d(2, p.length - a);
    uint64_t l1 = l1_d(rng);
    std::uniform_int_distribution<uint64_t> b_d(0, l1 - 1);
    uint64_t b = b_d(rng);
    std::uniform_int_distribution<uint64_t> l2_d(1, l1 - b);
    uint64_t l2 = l2_d(rng);

    auto two_step = subrange_pointer(subrange_pointer(p, a, l1).value(), b, l2);
    auto one_step = subrange_pointer(p, a + b, l2);
    ASSERT_TRUE(two_step.ok() && one_step.ok());
    ASSERT_EQ(*two_step, *one_step);
  }
}

TEST(SubrangePointer, RejectsOutOfRange) {
  SlicePointer p = ptr(1, "b", 100, 10);
  EXPECT_EQ(subrange_pointer(p, 5, 6).error(), Err::OutOfRange);
  EXPECT_EQ(subrange_pointer(p, 0, 0).error(), Err::OutOfRange);
  EXPECT_EQ(subrange_pointer(p, 10, 1).error(), Err::OutOfRange);
}

}  // namespace
}  // namespace slicefs
