// Static hash array: a read-only string → entity-id index. Keys are hashed
// into buckets by one seeded hash and identified inside a bucket by the
// 64-bit value of a second, independently seeded hash; key bytes are not
// stored. Built through a chained dynamic table that is then flattened so
// each chain occupies a contiguous run of the item array.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kbqa/kb_store.hpp"
#include "kbqa/text.hpp"

namespace kbqa {

// Seeded 64-bit non-cryptographic hash (MurmurHash64A mixing).
std::uint64_t Hash64(std::string_view key, std::uint64_t seed);

inline constexpr std::uint64_t kDefaultBucketSeed = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kDefaultFingerprintSeed = 0xc2b2ae3d27d4eb4fULL;

struct HashItem {
  std::uint64_t fingerprint;
  std::uint64_t payload;

  auto operator<=>(const HashItem &) const = default;
};

struct HashSeeds {
  std::uint64_t bucket = kDefaultBucketSeed;
  std::uint64_t fingerprint = kDefaultFingerprintSeed;
};

// The construction-time chained table.
class DynamicHashTable {
 public:
  DynamicHashTable(std::size_t bucket_count, HashSeeds seeds);

  // Appends to the key's chain unless the identical item is present.
  void Insert(std::string_view key, std::uint64_t payload);

  std::size_t bucket_count() const { return chains_.size(); }
  const std::vector<std::vector<HashItem>> &chains() const { return chains_; }
  HashSeeds seeds() const { return seeds_; }
  // Bytes held by the chains and their headers.
  std::size_t FootprintBytes() const;

 private:
  HashSeeds seeds_;
  std::vector<std::vector<HashItem>> chains_;
};

class StaticHashArray {
 public:
  StaticHashArray();

  // bucket_count is the smallest power of two >= number of entries.
  static StaticHashArray Build(
      std::span<const std::pair<std::string, std::uint64_t>> entries,
      HashSeeds seeds = {});
  static StaticHashArray Flatten(const DynamicHashTable &table);

  // Payloads whose fingerprint matches, in bucket order. Never misses an
  // inserted key; may contain fingerprint false positives.
  std::vector<std::uint64_t> Lookup(std::string_view key) const;

  std::size_t bucket_count() const { return offsets_.size() - 1; }
  std::size_t item_count() const { return items_.size(); }
  HashSeeds seeds() const { return seeds_; }
  std::span<const std::uint64_t> offsets() const { return offsets_; }
  std::span<const HashItem> items() const { return items_; }
  std::size_t BucketOf(std::string_view key) const;

  // Peak bytes used while building (0 for loaded indexes).
  std::size_t construction_bytes() const { return construction_bytes_; }
  std::size_t SerializedSize() const;

  void Save(std::ostream &out) const;
  // Throws FormatError naming the failed section.
  static StaticHashArray Load(std::istream &in);
  void SaveFile(const std::filesystem::path &path) const;
  static StaticHashArray LoadFile(const std::filesystem::path &path);

 private:
  void Validate() const;

  HashSeeds seeds_;
  std::vector<std::uint64_t> offsets_;
  std::vector<HashItem> items_;
  std::size_t construction_bytes_ = 0;
};

struct Mention {
  TokenSpan span;
  std::vector<std::uint64_t> candidates;

  bool operator==(const Mention &) const = default;
};

// Greedy left-to-right longest match over spans of at most max_span
// tokens; reported spans never overlap. Placeholder tokens never match.
std::vector<Mention> FindMentions(const StaticHashArray &index,
                                  std::span<const std::string> tokens,
                                  std::size_t max_span);

// Canonical surface strings for KB nodes (TSV `id<TAB>surface`). Nodes
// without an entry use their id string as surface.
class EntityDictionary {
 public:
  EntityDictionary() = default;
  static EntityDictionary Load(std::istream &in);
  static EntityDictionary LoadFile(const std::filesystem::path &path);

  void Add(std::string id, std::string surface);
  const std::string &Surface(const std::string &id) const;
  const std::map<std::string, std::string> &entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Normalized-surface lookup of KB nodes, used to match answer text to
// values and to render values back to text.
class NodeLexicon {
 public:
  NodeLexicon(const KnowledgeBase &kb, const EntityDictionary &dict);

  // Nodes whose normalized surface equals `normalized_phrase`, ascending.
  std::span<const NodeId> Find(const std::string &normalized_phrase) const;
  const std::string &Surface(NodeId node) const { return surfaces_[node]; }
  std::size_t max_tokens() const { return max_tokens_; }

 private:
  std::vector<std::string> surfaces_;
  std::map<std::string, std::vector<NodeId>> by_phrase_;
  std::size_t max_tokens_ = 0;
};

// Index entries for every KB entity: its normalized dictionary surface,
// plus normalized objects of `name_predicate` triples as aliases.
std::vector<std::pair<std::string, std::uint64_t>> IndexEntries(
    const KnowledgeBase &kb, const EntityDictionary &dict,
    const std::string &name_predicate);

}  // namespace kbqa
