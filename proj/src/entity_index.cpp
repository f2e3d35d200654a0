#include "kbqa/entity_index.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "kbqa/errors.hpp"

namespace kbqa {

namespace {

constexpr std::array<char, 7> kMagic = {'S', 'H', 'A', '1', 'D', 'X', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes =
    kMagic.size() + sizeof(std::uint32_t) + 4 * sizeof(std::uint64_t);

void PutU32(std::ostream &out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char *>(b), 4);
}

void PutU64(std::ostream &out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char *>(b), 8);
}

bool GetU32(std::istream &in, std::uint32_t *v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char *>(b), 4)) return false;
  *v = 0;
  for (int i = 0; i < 4; ++i) *v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

bool GetU64(std::istream &in, std::uint64_t *v) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char *>(b), 8)) return false;
  *v = 0;
  for (int i = 0; i < 8; ++i) *v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

// Reads `count` u64 values in bounded chunks so a corrupt count fails as
// truncation instead of a giant allocation.
bool GetU64Array(std::istream &in, std::uint64_t count,
                 std::vector<std::uint64_t> *out) {
  constexpr std::uint64_t kChunk = 1 << 16;
  out->clear();
  std::vector<unsigned char> buf;
  while (out->size() < count) {
    std::uint64_t n = std::min<std::uint64_t>(kChunk, count - out->size());
    buf.resize(n * 8);
    if (!in.read(reinterpret_cast<char *>(buf.data()),
                 static_cast<std::streamsize>(buf.size()))) {
      return false;
    }
    for (std::uint64_t i = 0; i < n; ++i) {
      std::uint64_t v = 0;
      for (int j = 0; j < 8; ++j) {
        v |= static_cast<std::uint64_t>(buf[i * 8 + j]) << (8 * j);
      }
      out->push_back(v);
    }
  }
  return true;
}

std::size_t BucketCountFor(std::size_t entries) {
  return std::bit_ceil(std::max<std::size_t>(entries, 1));
}

}  // namespace

std::uint64_t Hash64(std::string_view key, std::uint64_t seed) {
  constexpr std::uint64_t m = 0xc6a4a7935bd1e995ULL;
  constexpr int r = 47;
  const std::size_t len = key.size();
  std::uint64_t h = seed ^ (len * m);
  const char *data = key.data();
  const std::size_t blocks = len / 8;
  for (std::size_t i = 0; i < blocks; ++i) {
    std::uint64_t k;
    std::memcpy(&k, data + i * 8, 8);
    k *= m;
    k ^= k >> r;
    k *= m;
    h ^= k;
    h *= m;
  }
  const auto *tail = reinterpret_cast<const unsigned char *>(data + blocks * 8);
  switch (len & 7) {
    case 7: h ^= static_cast<std::uint64_t>(tail[6]) << 48; [[fallthrough]];
    case 6: h ^= static_cast<std::uint64_t>(tail[5]) << 40; [[fallthrough]];
    case 5: h ^= static_cast<std::uint64_t>(tail[4]) << 32; [[fallthrough]];
    case 4: h ^= static_cast<std::uint64_t>(tail[3]) << 24; [[fallthrough]];
    case 3: h ^= static_cast<std::uint64_t>(tail[2]) << 16; [[fallthrough]];
    case 2: h ^= static_cast<std::uint64_t>(tail[1]) << 8; [[fallthrough]];
    case 1:
      h ^= static_cast<std::uint64_t>(tail[0]);
      h *= m;
  }
  h ^= h >> r;
  h *= m;
  h ^= h >> r;
  return h;
}

DynamicHashTable::DynamicHashTable(std::size_t bucket_count, HashSeeds seeds)
    : seeds_(seeds), chains_(std::bit_ceil(std::max<std::size_t>(bucket_count, 1))) {}

void DynamicHashTable::Insert(std::string_view key, std::uint64_t payload) {
  const std::uint64_t b = Hash64(key, seeds_.bucket) & (chains_.size() - 1);
  HashItem item{Hash64(key, seeds_.fingerprint), payload};
  auto &chain = chains_[b];
  if (std::find(chain.begin(), chain.end(), item) == chain.end()) {
    chain.push_back(item);
  }
}

std::size_t DynamicHashTable::FootprintBytes() const {
  std::size_t bytes = sizeof(*this) + chains_.capacity() * sizeof(chains_[0]);
  for (const auto &c : chains_) bytes += c.capacity() * sizeof(HashItem);
  return bytes;
}

StaticHashArray::StaticHashArray() : offsets_(2, 0) {}

StaticHashArray StaticHashArray::Build(
    std::span<const std::pair<std::string, std::uint64_t>> entries,
    HashSeeds seeds) {
  DynamicHashTable table(BucketCountFor(entries.size()), seeds);
  for (const auto &[key, payload] : entries) table.Insert(key, payload);
  StaticHashArray out = Flatten(table);
  out.construction_bytes_ = table.FootprintBytes() + out.SerializedSize();
  return out;
}

StaticHashArray StaticHashArray::Flatten(const DynamicHashTable &table) {
  StaticHashArray out;
  out.seeds_ = table.seeds();
  const auto &chains = table.chains();
  out.offsets_.assign(chains.size() + 1, 0);
  std::size_t total = 0;
  for (std::size_t b = 0; b < chains.size(); ++b) {
    out.offsets_[b] = total;
    total += chains[b].size();
  }
  out.offsets_[chains.size()] = total;
  out.items_.reserve(total);
  for (const auto &c : chains) out.items_.insert(out.items_.end(), c.begin(), c.end());
  out.Validate();
  return out;
}

std::size_t StaticHashArray::BucketOf(std::string_view key) const {
  return Hash64(key, seeds_.bucket) & (bucket_count() - 1);
}

std::vector<std::uint64_t> StaticHashArray::Lookup(std::string_view key) const {
  std::vector<std::uint64_t> out;
  const std::size_t b = BucketOf(key);
  const std::uint64_t fp = Hash64(key, seeds_.fingerprint);
  for (std::size_t i = offsets_[b]; i < offsets_[b + 1]; ++i) {
    if (items_[i].fingerprint == fp) out.push_back(items_[i].payload);
  }
  return out;
}

std::size_t StaticHashArray::SerializedSize() const {
  return kHeaderBytes + offsets_.size() * 8 + items_.size() * 16;
}

void StaticHashArray::Validate() const {
  const std::size_t buckets = offsets_.size() - 1;
  if (buckets == 0 || !std::has_single_bit(buckets)) {
    throw FormatError("invalid bucket count");
  }
  if (offsets_.front() != 0 || offsets_.back() != items_.size()) {
    throw FormatError("corrupt offsets section");
  }
  for (std::size_t i = 1; i < offsets_.size(); ++i) {
    if (offsets_[i] < offsets_[i - 1]) throw FormatError("corrupt offsets section");
  }
}

void StaticHashArray::Save(std::ostream &out) const {
  out.write(kMagic.data(), kMagic.size());
  PutU32(out, kVersion);
  PutU64(out, seeds_.bucket);
  PutU64(out, seeds_.fingerprint);
  PutU64(out, bucket_count());
  PutU64(out, items_.size());
  for (std::uint64_t o : offsets_) PutU64(out, o);
  for (const auto &item : items_) {
    PutU64(out, item.fingerprint);
    PutU64(out, item.payload);
  }
}

StaticHashArray StaticHashArray::Load(std::istream &in) {
  std::array<char, kMagic.size()> magic{};
  if (!in.read(magic.data(), magic.size())) throw FormatError("truncated header");
  if (magic != kMagic) throw FormatError("bad magic");
  std::uint32_t version = 0;
  if (!GetU32(in, &version)) throw FormatError("truncated header");
  if (version != kVersion) {
    throw FormatError("unsupported version " + std::to_string(version));
  }
  StaticHashArray out;
  std::uint64_t buckets = 0, items = 0;
  if (!GetU64(in, &out.seeds_.bucket) || !GetU64(in, &out.seeds_.fingerprint) ||
      !GetU64(in, &buckets) || !GetU64(in, &items)) {
    throw FormatError("truncated header");
  }
  if (buckets == 0 || !std::has_single_bit(buckets)) {
    throw FormatError("invalid bucket count");
  }
  if (!GetU64Array(in, buckets + 1, &out.offsets_)) {
    throw FormatError("truncated offsets section");
  }
  std::vector<std::uint64_t> raw;
  if (!GetU64Array(in, items * 2, &raw)) {
    throw FormatError("truncated items section");
  }
  out.items_.resize(items);
  for (std::uint64_t i = 0; i < items; ++i) {
    out.items_[i] = HashItem{raw[2 * i], raw[2 * i + 1]};
  }
  out.Validate();
  return out;
}

void StaticHashArray::SaveFile(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write index " + path.string());
  Save(out);
  if (!out) throw Error("failed writing index " + path.string());
}

StaticHashArray StaticHashArray::LoadFile(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index " + path.string());
  return Load(in);
}

std::vector<Mention> FindMentions(const StaticHashArray &index,
                                  std::span<const std::string> tokens,
                                  std::size_t max_span) {
  std::vector<Mention> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    const std::size_t longest = std::min(max_span, tokens.size() - i);
    for (std::size_t len = longest; len >= 1; --len) {
      auto span = tokens.subspan(i, len);
      if (std::any_of(span.begin(), span.end(),
                      [](const std::string &t) { return IsPlaceholder(t); })) {
        continue;
      }
      auto hits = index.Lookup(JoinTokens(span));
      if (hits.empty()) continue;
      std::sort(hits.begin(), hits.end());
      hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
      out.push_back(Mention{TokenSpan{i, i + len}, std::move(hits)});
      i += len;
      matched = true;
      break;
    }
    if (!matched) ++i;
  }
  return out;
}

EntityDictionary EntityDictionary::Load(std::istream &in) {
  EntityDictionary dict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty() || line.front() == '#') continue;
    auto f = SplitTabs(line);
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      throw ParseError("expected id<TAB>surface", line_no);
    }
    dict.Add(std::move(f[0]), std::move(f[1]));
  }
  return dict;
}

EntityDictionary EntityDictionary::LoadFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open entity dictionary " + path.string());
  return Load(in);
}

void EntityDictionary::Add(std::string id, std::string surface) {
  entries_[std::move(id)] = std::move(surface);
}

const std::string &EntityDictionary::Surface(const std::string &id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? id : it->second;
}

NodeLexicon::NodeLexicon(const KnowledgeBase &kb, const EntityDictionary &dict) {
  surfaces_.reserve(kb.node_count());
  for (NodeId n = 0; n < kb.node_count(); ++n) {
    const std::string &surface = dict.Surface(kb.NodeName(n));
    surfaces_.push_back(surface);
    Tokens tokens = Tokenize(surface);
    if (tokens.empty()) continue;
    max_tokens_ = std::max(max_tokens_, tokens.size());
    by_phrase_[JoinTokens(tokens)].push_back(n);
  }
}

std::span<const NodeId> NodeLexicon::Find(const std::string &normalized_phrase) const {
  auto it = by_phrase_.find(normalized_phrase);
  if (it == by_phrase_.end()) return {};
  return it->second;
}

std::vector<std::pair<std::string, std::uint64_t>> IndexEntries(
    const KnowledgeBase &kb, const EntityDictionary &dict,
    const std::string &name_predicate) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  const auto name = kb.FindPredicate(name_predicate);
  for (NodeId n = 0; n < kb.node_count(); ++n) {
    if (!kb.IsEntity(n)) continue;
    std::string key = NormalizePhrase(dict.Surface(kb.NodeName(n)));
    if (!key.empty()) entries.emplace_back(std::move(key), n);
    if (!name) continue;
    for (const auto &t : kb.Outgoing(n, *name)) {
      std::string alias = NormalizePhrase(dict.Surface(kb.NodeName(t.object)));
      if (!alias.empty()) entries.emplace_back(std::move(alias), n);
    }
  }
  return entries;
}

}  // namespace kbqa
